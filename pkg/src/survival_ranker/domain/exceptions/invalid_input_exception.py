from survival_ranker.domain.exceptions.survival_ranker_exception import SurvivalRankerException


class InvalidInputException(SurvivalRankerException):
    pass
