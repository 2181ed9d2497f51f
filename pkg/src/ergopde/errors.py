"""Exception hierarchy shared by all ergopde modules."""


class ErgopdeError(Exception):
    """Base class for all package errors."""


class OutOfRange(ErgopdeError):
    """A scalar argument violates its admissible range."""


class DimensionMismatch(ErgopdeError):
    """Matrix or grid dimensions do not agree."""


class DegenerateOperator(ErgopdeError):
    """An operator spec evaluates non-positively on a rank-one projector."""


class BoundaryNode(ErgopdeError):
    """A stencil operation was requested at a non-interior node."""


class EmptyRegion(ErgopdeError):
    """A subregion contains too few nodes."""


class InsufficientSpan(ErgopdeError):
    """Fit samples do not span a wide enough distance range."""


class InvalidBoundary(ErgopdeError):
    """Boundary datum is non-finite on some boundary node."""


class NonConvergence(ErgopdeError):
    """An iteration stage failed to meet its tolerance."""

    def __init__(self, message, stage=None, iterations=None):
        super().__init__(message)
        self.stage = stage
        self.iterations = iterations


class PreconditionViolated(ErgopdeError):
    """A diagnostic probe was called with inputs violating its contract."""

    def __init__(self, message, nodes=None):
        super().__init__(message)
        self.nodes = list(nodes) if nodes is not None else []


class InvalidRegime(ErgopdeError):
    """ODE shooting launched in a regime where the slope cannot leave zero."""


class BracketFailure(ErgopdeError):
    """Bisection could not establish a sign-changing bracket."""


class LadderNonConvergence(ErgopdeError):
    """A boundary-amplitude ladder rung failed to converge."""


class UnresolvedLayer(ErgopdeError):
    """Too few usable boundary-layer shells for an asymptotic fit."""


class UnsupportedCase(ErgopdeError):
    """A requested asymptotic regime is outside the supported theory."""


class HypothesisViolated(ErgopdeError):
    """A verification was requested on an instance outside its hypotheses."""


class ConfigError(ErgopdeError):
    """A run configuration failed to parse or validate."""
