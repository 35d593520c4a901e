"""Error taxonomy shared across the engine, casebook, service, and CLI.

Every exception carries a stable ``code`` string so the HTTP layer and the
CLI can map failures to wire codes and exit codes without isinstance chains.
"""

from __future__ import annotations


class QabdError(Exception):
    """Base class for all package errors."""

    code = "error"

    def __init__(self, message: str = ""):
        super().__init__(message or self.__class__.__name__)
        self.message = message or self.__class__.__name__


# --- case construction / validation ---------------------------------------

class DuplicateIdError(QabdError):
    code = "duplicate_id"


class TooFewHypothesesError(QabdError):
    code = "too_few_hypotheses"


class ValidationFailedError(QabdError):
    """Raised when a case fails validation; carries the violation list."""

    code = "validation_failed"

    def __init__(self, violations):
        self.violations = list(violations)
        detail = "; ".join(str(v) for v in self.violations)
        super().__init__(f"case validation failed: {detail}")


# --- embedding -------------------------------------------------------------

class EmptyTextError(QabdError):
    code = "empty_text"


class DimensionMismatchError(QabdError):
    code = "dimension_mismatch"


class UnknownKeyError(QabdError):
    code = "unknown_key"


class BadDimensionError(QabdError):
    code = "bad_dimension"


class ZeroVectorError(QabdError):
    code = "zero_vector"


class TransportError(QabdError):
    code = "transport"


class BadResponseError(QabdError):
    code = "bad_response"


# --- dynamics --------------------------------------------------------------

class DegenerateStateError(QabdError):
    code = "degenerate_state"


class DegenerateMixError(QabdError):
    code = "degenerate_mix"


# --- classical baseline ----------------------------------------------------

class NonQualitativeMatrixError(QabdError):
    code = "non_qualitative_matrix"


# --- casebook --------------------------------------------------------------

class ParseError(QabdError):
    code = "parse"


class SchemaViolationError(QabdError):
    code = "schema_violation"


# --- service ---------------------------------------------------------------

class UnknownCaseError(QabdError):
    code = "unknown_case"


class BadValueError(QabdError):
    code = "bad_value"


class DiagonalOverrideError(QabdError):
    code = "diagonal_override"


class ReplayMismatchError(QabdError):
    """Replay of an event log diverged from the recorded states."""

    code = "replay_mismatch"

    def __init__(self, case_id: str, revision: int, message: str = ""):
        self.case_id = case_id
        self.revision = revision
        super().__init__(
            message or f"replay diverged for case {case_id!r} at revision {revision}"
        )
