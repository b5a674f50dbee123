"""Exception types for unrecoverable decoder-state violations."""


class DecoderError(Exception):
    """Base class for hard failures anywhere in the decoding pipeline."""


class GraphConstructionError(DecoderError):
    """Probability bookkeeping or edge-basis violation while building the graph."""


class DecompositionError(GraphConstructionError):
    """A multi-event error does not decompose into the edge basis."""


class TransitionError(DecoderError):
    """An inconsistent pre-matching state combination (an E table cell)."""


class MatchingError(DecoderError):
    """Infeasible or inconsistent matching instance."""


class CoverageError(MatchingError):
    """A match outcome does not cover the shot's detection events exactly."""
