"""Exception types shared across xrank."""


class XRankError(Exception):
    """Base class for every error raised by xrank."""


class ParseError(XRankError, ValueError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class IntegrityError(XRankError, ValueError):
    """Data violates an invariant (duplicate ids, non-consecutive ranks, ...)."""


class StateError(XRankError, RuntimeError):
    pass


class DegenerateScoreError(XRankError, ArithmeticError):
    """The unmasked document scores 0, so relative score changes are undefined."""


class UndefinedCorrelationError(XRankError, ValueError):
    pass


class IndexFormatError(XRankError, ValueError):
    """Index file is corrupted or written by an incompatible format version."""


class ScorerError(XRankError, RuntimeError):
    def __init__(self, message, request_id=None):
        self.request_id = request_id
        if request_id is not None:
            message = f"request {request_id}: {message}"
        super().__init__(message)


class ScorerTimeout(ScorerError, TimeoutError):
    pass


class ProtocolError(ScorerError):
    """The external scorer sent something that is not a valid response line."""
