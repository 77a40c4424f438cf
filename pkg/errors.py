"""
Exception hierarchy for the witness toolkit
Every error derives from ValueError so callers can keep catching ValueError
"""

from typing import Optional


class WitnessLabError(ValueError):
    """Base class for all toolkit errors"""


class DimensionMismatch(WitnessLabError):
    """Operand shapes do not fit the requested operation"""


class NotHermitian(WitnessLabError):
    """A matrix that must be Hermitian is not"""


class InvalidMatrixJson(WitnessLabError):
    """A JSON matrix document is malformed or carries NaN/Inf"""


class BasisError(WitnessLabError):
    """Operator basis or grouping violates its contract"""


class ParameterRangeError(WitnessLabError):
    """A numeric parameter lies outside its admissible range"""


class PositivityViolation(WitnessLabError):
    """A POVM element has a negative eigenvalue beyond tolerance"""

    def __init__(self, alpha: int, k: int, min_eigenvalue: float):
        self.alpha = alpha
        self.k = k
        self.min_eigenvalue = min_eigenvalue
        super().__init__(
            f"POVM element E[{alpha},{k}] is not positive: "
            f"min eigenvalue {min_eigenvalue:.3e}"
        )


class DegenerateScale(WitnessLabError):
    """The map normalization b vanishes (x at the lower end of its range)"""


class InvalidRotation(WitnessLabError):
    """A rotation matrix fails its orthogonality / uniform-vector contract"""


class SingularValueViolation(WitnessLabError):
    """A CCNR matrix Q has spectral norm above one"""

    def __init__(self, norm: float, limit: float = 1.0):
        self.norm = norm
        self.limit = limit
        super().__init__(f"Largest singular value of Q is {norm:.12g} (limit {limit:.12g})")


class InvalidState(WitnessLabError):
    """A matrix is not a valid density operator"""

    def __init__(self, message: str, value: Optional[float] = None):
        self.value = value
        super().__init__(message)


class NotHermitianState(InvalidState, NotHermitian):
    """Density candidate is not Hermitian"""


class NotPSD(InvalidState):
    """Density candidate has a negative eigenvalue"""


class ZeroTrace(InvalidState):
    """Density candidate has (numerically) zero trace"""


class UnknownExample(WitnessLabError):
    """Requested example id is not in the registry"""


class ConfigError(WitnessLabError):
    """Run configuration is inconsistent"""
