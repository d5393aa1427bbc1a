from survival_ranker.domain.exceptions.survival_ranker_exception import SurvivalRankerException


class NumericFailureException(SurvivalRankerException):
    def __init__(self, message: str, layer: int | None = None) -> None:
        self.layer = layer
        if layer is not None:
            message = f"{message} (layer {layer})"
        super().__init__(message)
