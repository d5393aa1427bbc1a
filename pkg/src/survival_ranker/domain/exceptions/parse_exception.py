from survival_ranker.domain.exceptions.survival_ranker_exception import SurvivalRankerException


class ParseException(SurvivalRankerException):
    def __init__(self, message: str, row: int | None = None, column: str | None = None) -> None:
        self.row = row
        self.column = column
        if row is not None or column is not None:
            message = f"{message} (row {row}, column {column!r})"
        super().__init__(message)
