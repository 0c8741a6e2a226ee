"""Exception types shared across the workbench.

Every error carries an optional machine-readable payload so the CLI can emit
structured error objects next to the human-readable message.
"""

from __future__ import annotations


class WorkbenchError(Exception):
    def __init__(self, message: str, **payload):
        super().__init__(message)
        self.payload = dict(payload)

    def to_json(self) -> dict:
        out = {"error": type(self).__name__, "message": str(self)}
        if self.payload:
            out["detail"] = {k: _plain(v) for k, v in self.payload.items()}
        return out


def _plain(value):
    if isinstance(value, (int, float, str, bool)) or value is None:
        return value
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    return repr(value)


class UnknownOperation(WorkbenchError):
    pass


class ArityMismatch(WorkbenchError):
    pass


class ElementOutOfRange(WorkbenchError):
    pass


class SizeOverflow(WorkbenchError):
    pass


class CapExceeded(WorkbenchError):
    pass


class NotMaltsev(WorkbenchError):
    pass


class LatticeOverflow(WorkbenchError):
    pass


class SignatureMismatch(WorkbenchError):
    pass


class NotCentral(WorkbenchError):
    pass


class NotCentralSeries(WorkbenchError):
    pass


class SectionFailure(WorkbenchError):
    """An internal wreath construction invariant failed; signals a bug, not bad input."""


class DivisionNotFound(WorkbenchError):
    pass


class NotSupernilpotent(WorkbenchError):
    pass


class ConstantInput(WorkbenchError):
    pass


class NormalizationFailed(WorkbenchError):
    """Unary normalization produced a table violating its contract; signals a bug."""


class TableOverflow(WorkbenchError):
    pass


class ValueOutsideCyclicSubgroup(WorkbenchError):
    pass


class SearchSpaceOverflow(WorkbenchError):
    pass


class UnsupportedPrime(WorkbenchError):
    pass


class PresentationMismatch(WorkbenchError):
    pass


class ConstructionFailed(WorkbenchError):
    pass


class UnknownSuite(WorkbenchError):
    pass


class ParseError(WorkbenchError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None, **payload):
        super().__init__(message, line=line, column=column, **payload)
        self.line = line
        self.column = column
