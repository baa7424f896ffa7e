"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid experiment configuration (bad key, value, or combination)."""


class DimensionError(ValueError):
    """A matrix or vector has an unusable shape (e.g. non-square element count)."""


class SingularMatrixError(ArithmeticError):
    """A matrix required to be invertible is numerically singular."""


class ProjectionError(ValueError):
    """A constraint projection is ambiguous (rank-deficient input)."""


class GenerationError(RuntimeError):
    """Channel generation could not satisfy its invariants after retries."""


class SolverError(RuntimeError):
    """An optimization loop aborted after repeated failures."""
