from survival_ranker.domain.exceptions.survival_ranker_exception import SurvivalRankerException


class ConfigurationException(SurvivalRankerException):
    """Raised when a configuration file cannot be read or fails validation."""
