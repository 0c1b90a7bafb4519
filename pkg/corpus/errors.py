"""Exception hierarchy shared by every package of the toolkit.

Data errors map to CLI exit code 2, usage errors to exit code 1.
"""
from __future__ import annotations

from typing import Sequence


class EigenmoodError(Exception):
    """Root of all toolkit errors."""


class DataValidationError(EigenmoodError, ValueError):
    """Input data violates a documented contract."""


class RecordError(DataValidationError):
    """A corpus line that failed to load; `path` is filled in once the file is known."""

    def __init__(self, message: str, line_no: int | None = None, path: str | None = None):
        self.message = message
        self.line_no = line_no
        self.path = path
        super().__init__(message)

    def __str__(self) -> str:
        where = f"{self.path}:" if self.path is not None else ""
        if self.line_no is not None:
            where += f"line {self.line_no}: "
        return f"{where}{self.message}"


class RecordParseError(RecordError):
    """A corpus line is not a well-formed JSON annotation record."""


class RecordValidationError(RecordError):
    """A corpus record parsed but breaks a record invariant."""

    def __init__(
        self,
        message: str,
        line_no: int | None = None,
        label: str | None = None,
        path: str | None = None,
    ):
        self.label = label
        super().__init__(message, line_no, path)


SCHEMA_ERROR_KINDS = (
    "invalid-structure",
    "unknown-label",
    "inconsistent-abstain",
    "invalid-confidence",
    "key-mismatch",
)


class SchemaError(DataValidationError):
    """Raw annotator output rejected by the strict schema check."""

    def __init__(self, kind: str, message: str):
        if kind not in SCHEMA_ERROR_KINDS:
            raise ValueError(f"SchemaError: unknown kind '{kind}'")
        self.kind = kind
        super().__init__(f"{kind}: {message}")


class ConceptSetMismatchError(DataValidationError):
    """Two objects are indexed by different concept lists."""


class NoEvidenceError(DataValidationError):
    """The whole corpus carries zero label mass."""


class AllFilteredError(DataValidationError):
    """Rare-concept filtering removed every concept."""


class DegenerateInputError(DataValidationError):
    """Too few points, zero variance or a non-symmetric matrix."""


class MisalignedReferencesError(DataValidationError):
    """Validation verse references that cannot be found in the corpus."""

    def __init__(self, offenders: Sequence[str]):
        self.offenders = list(offenders)
        shown = ", ".join(self.offenders[:10])
        more = f" (+{len(self.offenders) - 10} more)" if len(self.offenders) > 10 else ""
        super().__init__(f"unknown verse references: {shown}{more}")


class UsageError(EigenmoodError):
    """Bad flags, out-of-range parameters or missing inputs."""


class InvalidParameterError(UsageError, ValueError):
    """A numeric or categorical parameter is out of its documented range."""


class MissingStageError(UsageError):
    """A pipeline stage needs an artifact that an earlier stage never produced."""

    def __init__(self, stage: str, missing: str):
        self.stage = stage
        self.missing = missing
        super().__init__(f"missing output of stage '{stage}': {missing} (run '{stage}' first)")
