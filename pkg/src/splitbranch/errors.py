"""Exception taxonomy shared across the solver."""


class SplitBranchError(Exception):
    """Base class for all package errors."""


# --- model / standard form ---------------------------------------------------

class InconsistentBounds(SplitBranchError):
    """A variable has lower bound strictly above its upper bound."""


class FreeVariableUnsupported(SplitBranchError):
    """A variable with both bounds infinite cannot be put into x >= 0 form."""


# --- instance i/o ------------------------------------------------------------

class UnsupportedSection(SplitBranchError):
    """MPS input uses a feature outside the supported subset."""


class MalformedRecord(SplitBranchError):
    """MPS input is syntactically broken."""


class DuplicateEntry(SplitBranchError):
    """MPS input defines the same coefficient or name twice."""


class InvalidParams(SplitBranchError):
    """Instance generator called with out-of-range parameters."""


# --- LP core -----------------------------------------------------------------

class NumericalFailure(SplitBranchError):
    """Basis factorization kept failing after refactorization retries."""


class NotBasic(SplitBranchError):
    """Tableau row requested for a variable that is not basic."""


# --- cut generation ----------------------------------------------------------

class CutRejected(SplitBranchError):
    """Row gated out of cut generation; callers skip the row, not an error."""


class RhsTooIntegral(CutRejected):
    """Row right-hand side too close to an integer to derive a safe cut."""


class UnsafeCoefficients(CutRejected):
    """Cut dropped because its coefficient dynamism is numerically unsafe."""


class ZeroNorm(SplitBranchError):
    """Cut with an all-zero coefficient vector."""


class NotFractional(SplitBranchError):
    """Split or branch requested on a variable with an integral value."""


class TooLargeToEnumerate(SplitBranchError):
    """Validity oracle asked to enumerate more than its cap allows."""


# --- benchmarking ------------------------------------------------------------

class EmptyInput(SplitBranchError):
    """Aggregation called on an empty value list."""


class AllZeroDiffs(SplitBranchError):
    """Signed-rank test called with every paired difference zero."""


class IncompleteGrid(SplitBranchError):
    """Run filtering requires a complete rule x instance x seed grid."""
