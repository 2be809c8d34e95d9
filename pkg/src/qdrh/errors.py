"""Exception types shared across the package.

Everything derives from WorkbenchError so callers can catch broadly;
the CLI maps these to a usage-style exit code.
"""


class WorkbenchError(Exception):
    """Base class for all package-specific errors."""


class UnsupportedRing(WorkbenchError):
    """Operation not defined over the given coefficient ring."""


class NotInvertible(WorkbenchError):
    """Element has no inverse in the ring (constant term not a unit)."""


class DivisionNotExact(WorkbenchError):
    """Exact division requested but a nonzero remainder appeared."""


class PrecisionTooLow(WorkbenchError):
    """Requested computation needs more (q-1)-adic precision than provided."""


class NotAComplex(WorkbenchError):
    """Differentials do not compose to zero, or shapes are inconsistent."""


class InvalidF(WorkbenchError):
    """Decalage filter element is zero or a zero divisor."""


class NonCommuting(WorkbenchError):
    """Koszul operators fail to commute; carries the offending pair."""


class NotChainMap(WorkbenchError):
    """Degreewise maps fail to commute with the differentials."""


class WindowTooSmall(WorkbenchError):
    """Monomial window cannot contain the image of the requested operator."""


class WindowNotDivisibleByP(WorkbenchError):
    """Frobenius-type checks need the window to be a multiple of p."""


class IncompatibleFramings(WorkbenchError):
    """Two framings disagree in dimension or variable kinds."""


class NonUnitA(WorkbenchError):
    """The integer a is not invertible in the coefficient ring."""


class NotFlat(WorkbenchError):
    """q-connection operators fail to commute; carries a witness."""


class MismatchedAlgebra(WorkbenchError):
    """Modules over different framed algebras cannot be combined."""


class NonDiagonalRequired(WorkbenchError):
    """No monomial-diagonal semilinear action exists in the window."""
