from survival_ranker.domain.exceptions.survival_ranker_exception import SurvivalRankerException


class DatasetFingerprintException(SurvivalRankerException):
    """Raised when an ingested dataset does not match its published characteristics."""
