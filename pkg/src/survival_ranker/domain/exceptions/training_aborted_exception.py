from typing import Any

from survival_ranker.domain.exceptions.numeric_failure_exception import NumericFailureException


class TrainingAbortedException(NumericFailureException):
    """
    Raised when training hits a non-finite loss. The history recorded up to the
    failing epoch travels with the exception so callers can report it.
    """

    def __init__(self, message: str, history: Any = None) -> None:
        self.history = history
        super().__init__(message)
