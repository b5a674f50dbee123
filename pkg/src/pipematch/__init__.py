"""Pipelined correlated minimum-weight perfect-matching decoder for surface codes.

The decoding pipeline has three one-directional stages per shot:

    1. a virtual greedy pre-matching of the detection events, used only to
       pick the edges whose correlated partners get probability boosts
       (p_f = p_e + p_c, w = -ln p_f);
    2. an optional second pre-matching on the reweighted graph whose pairs
       are frozen as high-confidence matches;
    3. exact minimum-weight perfect matching of the remaining events.

``circuits`` builds the scheduled measurement circuits for the toric,
unrotated, and rotated surface codes; ``sim`` propagates Pauli errors and
samples shots; ``graph`` runs the correlated pre-analysis that yields the
weighted detection graph; ``prematch``/``reweight``/``matching`` implement
the stages; ``pipeline`` wraps everything into reproducible Monte-Carlo runs.
"""

from .circuits import (
    FAMILIES,
    Circuit,
    Gate,
    NoiseChannel,
    attach_noise,
    build_circuit,
    serialize_circuit,
)
from .errors import (
    CoverageError,
    DecoderError,
    DecompositionError,
    GraphConstructionError,
    MatchingError,
    TransitionError,
)
from .graph import (
    BOUNDARY,
    CorrelatedEdgeLink,
    DetectionGraph,
    Edge,
    assign_probabilities,
    build_graph,
    compute_correlation_links,
    compute_edge_probability,
    decompose,
    enumerate_and_classify,
    prob_exactly_one,
    synthetic_graph,
    weight_of,
)
from .matching import (
    MatchOutcome,
    ShotMetric,
    StaticPaths,
    brute_force_mwpm,
    judge_failure,
    mwpm,
    pairwise_distance,
)
from .pipeline import (
    DecodeContext,
    PairedStats,
    RunConfig,
    RunStats,
    accumulate_rounds,
    per_round_rate,
    pick_rounds,
    plotdata_files,
    run,
    run_paired,
    write_csv,
)
from .prematch import (
    FP,
    HP,
    ZP,
    OpCounter,
    PrematchResult,
    PrematchState,
    pmc_choose,
    prematch,
    transition,
)
from .reweight import WeightOverlay, reweight, run_stage2_prematch
from .sim import (
    ShotResult,
    ShotSampler,
    enumerate_errors,
    forward_reference_events,
    propagate_error,
    sample_shot,
)

__version__ = "0.1.0"

__all__ = [
    "BOUNDARY",
    "FAMILIES",
    "FP",
    "HP",
    "ZP",
    "Circuit",
    "CorrelatedEdgeLink",
    "CoverageError",
    "DecodeContext",
    "DecoderError",
    "DecompositionError",
    "DetectionGraph",
    "Edge",
    "Gate",
    "GraphConstructionError",
    "MatchOutcome",
    "MatchingError",
    "NoiseChannel",
    "OpCounter",
    "PairedStats",
    "PrematchResult",
    "PrematchState",
    "RunConfig",
    "RunStats",
    "ShotMetric",
    "ShotResult",
    "ShotSampler",
    "StaticPaths",
    "TransitionError",
    "WeightOverlay",
    "accumulate_rounds",
    "assign_probabilities",
    "attach_noise",
    "brute_force_mwpm",
    "build_circuit",
    "build_graph",
    "compute_correlation_links",
    "compute_edge_probability",
    "decompose",
    "enumerate_and_classify",
    "enumerate_errors",
    "forward_reference_events",
    "judge_failure",
    "mwpm",
    "pairwise_distance",
    "per_round_rate",
    "pick_rounds",
    "plotdata_files",
    "pmc_choose",
    "prematch",
    "prob_exactly_one",
    "propagate_error",
    "reweight",
    "run",
    "run_paired",
    "run_stage2_prematch",
    "sample_shot",
    "serialize_circuit",
    "synthetic_graph",
    "transition",
    "weight_of",
    "write_csv",
]
