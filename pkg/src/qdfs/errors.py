"""Exception hierarchy shared across the package."""


class QdfsError(Exception):
    """Base class for all library errors."""


# ---------------------------------------------------------------------------
# matrix kernel
# ---------------------------------------------------------------------------

class NonSquareError(QdfsError):
    """A square matrix was required."""


class ConvergenceFailure(QdfsError):
    """An iterative eigenvalue or placement routine failed to converge."""


class NotHermitianError(QdfsError):
    """Matrix deviates from Hermitian beyond the requested tolerance."""


class SingularSylvesterError(QdfsError):
    """Sylvester/Lyapunov operator is singular (eigenvalue sums vanish)."""


class NotPSDError(QdfsError):
    """Matrix has a negative eigenvalue beyond the clamp band."""


class DimensionMismatchError(QdfsError):
    """Operand dimensions are inconsistent."""


# ---------------------------------------------------------------------------
# passive systems / analysis
# ---------------------------------------------------------------------------

class NotRealizableError(QdfsError):
    """State-space data violates the realizability identity A + A^H + sum_i B_i B_i^H = 0."""


class ToleranceAmbiguousError(QdfsError):
    """A singular value sits too close to the rank threshold to classify."""


class InconsistentError(QdfsError):
    """Spectral and geometric decoherence-free mode counts disagree."""

    def __init__(self, spectral: int, geometric: int, message: str = ""):
        self.spectral = spectral
        self.geometric = geometric
        super().__init__(
            message
            or f"spectral DF count {spectral} != geometric DF count {geometric}"
        )


class NoDfsFoundError(QdfsError):
    """System has no decoherence-free subsystem to verify."""


# ---------------------------------------------------------------------------
# synthesis
# ---------------------------------------------------------------------------

class UncontrollableError(QdfsError):
    """Pole placement requested on an uncontrollable (or unobservable) pair."""


class TargetCountMismatchError(QdfsError):
    """Number of target eigenvalues differs from the state dimension."""


class StructurallyImpossibleError(QdfsError):
    """Necessary controllability conditions for gain selection fail."""


class SearchExhaustedError(QdfsError):
    """Gain search hit its iteration budget; carries the best result found."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


# ---------------------------------------------------------------------------
# network file format
# ---------------------------------------------------------------------------

class QnetError(QdfsError):
    """Base class for network-description errors; carries a field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class QnetSyntaxError(QnetError):
    """Input is not well-formed; reports line/column/offset."""

    def __init__(self, message: str, line: int, col: int, pos: int):
        self.line = line
        self.col = col
        self.pos = pos
        super().__init__("", f"{message} (line {line}, column {col}, offset {pos})")


class QnetSchemaError(QnetError):
    """Unknown, missing, or wrongly-typed field."""


class QnetValidationError(QnetError):
    """Structurally valid field whose value violates a model constraint."""
