"""Exception taxonomy shared by all eigenlab modules."""


class EigenlabError(Exception):
    """Base class for all eigenlab errors."""


class ChartViolation(EigenlabError):
    """Point or trajectory left the valid chart region."""


class NoConvergence(EigenlabError):
    """Step control failed to reach the requested tolerance."""


class UnsupportedModel(EigenlabError):
    """Operation not defined for this manifold model."""


class ShellViolation(EigenlabError):
    """Phase point is off the required energy shell."""


class Underresolved(EigenlabError):
    """Grid or quadrature too coarse for the requested evaluation."""


class DegreeOverflow(EigenlabError):
    """High-degree power over/underflowed outside the log-domain path."""


class QuadratureTooCoarse(EigenlabError):
    """Quadrature refinement changed the result beyond tolerance."""


class ResolutionMismatch(EigenlabError):
    """Phase grid cells too large for the coherent-state footprint."""


class EmptySupport(EigenlabError):
    """Support threshold retained no cells."""


class BadWindow(EigenlabError):
    """Invalid interval or window parameters."""


class ScaleOutOfRange(EigenlabError):
    """Box-counting scale outside the calibrated range."""


class InsufficientSamples(EigenlabError):
    """Not enough samples or spread for a meaningful fit."""


class ForbiddenRegion(EigenlabError):
    """Base point lies in the classically forbidden region."""


class LadderMismatch(EigenlabError):
    """Quantum numbers inconsistent with the fixed-energy ladder."""


class ConfigError(EigenlabError):
    """Experiment configuration failed validation."""


class SchemaMismatch(EigenlabError):
    """Input file does not match the expected schema."""
