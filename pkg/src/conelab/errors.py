"""Typed exceptions shared across the laboratory modules."""


class ConelabError(Exception):
    """Base class for all laboratory errors."""


class ParseError(ConelabError):
    """Malformed field expression."""


class SingularEvaluation(ConelabError):
    """Gradient requested at a point of the singular set; caller must treat
    the point as lying on the cone edge."""


class NotOnSingularSet(ConelabError):
    """Point passed as singular is not on the zero set of the constraint map."""


class RankDeficient(ConelabError):
    """Constraint Jacobian loses full rank at the requested point."""


class StepSizeUnderflow(ConelabError):
    """Adaptive refinement near the singular set shrank the step below the
    working-precision floor without resolving the event."""


class LeftManifold(ConelabError):
    """Constraint drift of the on-manifold flow exceeded tolerance."""


class SeedInsideSingularTol(ConelabError):
    """Branch seed time too small: the seed point is indistinguishable from
    the singular set at working precision."""


class WindowContainsEvent(ConelabError):
    """Sampling window for the approach-direction diagnostic contains the
    event time itself."""


class ProfileClipped(ConelabError):
    """Profile support does not fit inside the grid after rescaling."""


class BoundaryMassExceeded(ConelabError):
    """Probability mass near the periodic boundary exceeded the guard-band
    threshold; the box is too small for this run."""


class ScaleOrderViolation(ConelabError):
    """Inner zone scale does not sit below the outer one."""


class DimensionMismatch(ConelabError):
    """Operation restricted to a specific codimension was called outside it."""


class ZeroShapeOperator(ConelabError):
    """Cone shape operator vanishes (F = 0 at the point); the mean-direction
    system is degenerate."""


class SchemeInfeasible(ConelabError):
    """No admissible integer exponent satisfies the crossing-scheme
    constraints."""


class HessianUndefined(ConelabError):
    """Second derivative of the potential requested on the singular set."""


class MissingInput(ConelabError):
    """A required input file is absent or malformed."""
