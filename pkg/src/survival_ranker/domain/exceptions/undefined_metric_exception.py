from survival_ranker.domain.exceptions.survival_ranker_exception import SurvivalRankerException


class UndefinedMetricException(SurvivalRankerException):
    """Raised when a pairwise metric has no admissible or acceptable pair to count."""
