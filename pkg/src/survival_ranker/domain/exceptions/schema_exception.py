from survival_ranker.domain.exceptions.survival_ranker_exception import SurvivalRankerException


class SchemaException(SurvivalRankerException):
    pass
