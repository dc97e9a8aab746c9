"""Exception hierarchy shared by the library and the CLI."""


class FollowGraphError(Exception):
    """Base class for all library errors."""


class InputError(FollowGraphError, ValueError):
    """Malformed or inconsistent input data (CLI exit code 2)."""


class ParseError(InputError):
    def __init__(self, message, *, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
        if line is not None:
            where = f"{where}:{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class EmptyRosterError(ParseError):
    pass


class DuplicateCandidateError(ParseError):
    pass


class UnknownPartyError(ParseError):
    pass


class UnknownCandidateError(InputError):
    def __init__(self, candidate_id, line=None):
        self.candidate_id = candidate_id
        self.line = line
        msg = f"unknown candidate_id {candidate_id!r}"
        if line is not None:
            msg = f"line {line}: {msg}"
        super().__init__(msg)


class EmptyMatrixError(InputError):
    def __init__(self, message="no followers"):
        super().__init__(message)


class ModelError(FollowGraphError):
    """Numerical or model-specification failure (CLI exit code 3)."""


class RankDeficientError(ModelError):
    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(
            "design matrix is rank deficient; collinear columns: " + ", ".join(self.columns)
        )


class EmptyClassError(ModelError):
    def __init__(self, missing):
        self.missing = list(missing)
        super().__init__("outcome classes absent from data: " + ", ".join(self.missing))


class NonFiniteError(ModelError):
    def __init__(self, row, what="log-likelihood"):
        self.row = row
        super().__init__(f"non-finite {what} at row {row}")
