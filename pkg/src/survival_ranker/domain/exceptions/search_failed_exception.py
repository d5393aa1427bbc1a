from survival_ranker.domain.exceptions.numeric_failure_exception import NumericFailureException


class SearchFailedException(NumericFailureException):
    def __init__(self, message: str, diagnostics: list[str] | None = None) -> None:
        self.diagnostics = diagnostics or []
        if self.diagnostics:
            message = message + "\n" + "\n".join(self.diagnostics)
        super().__init__(message)
