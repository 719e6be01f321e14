"""Distance-based influence computation and maximization on multi-instance
weighted directed graphs."""

from .decay import DecayFunction, make_exponential, make_harmonic, make_threshold, parse_decay, truncate
from .exact import (
    GreedyTrace,
    ResidualState,
    add_seed,
    evaluate_prefixes,
    greedy_dense,
    influence_exact,
    lazy_greedy,
    marg_gain,
)
from .graph import (
    DijkstraCursor,
    EdgeLengthModel,
    GraphFormatError,
    Instance,
    MultiInstanceGraph,
    all_pairs_distances,
    forward_dijkstra,
    load_edge_list,
    load_npz,
    sample_instances,
    save_npz,
)
from .pps_im import PPSState, pps_include, run_pps_im
from .sketch import (
    CADS,
    RankAssignment,
    ThresholdSketch,
    assign_ranks,
    build_ads_instance,
    build_cads,
    build_threshold_sketches,
    estimate_influence,
    estimate_union_size,
    hip_threshold,
    load_sketches,
    merge_cads,
    save_sketches,
    structured_ranks,
    threshold_influence_estimate,
    uniform_ranks,
)
from .threshold_im import ThresholdState, run_threshold_im

__version__ = "0.1.0"

__all__ = [
    "CADS",
    "DecayFunction",
    "DijkstraCursor",
    "EdgeLengthModel",
    "GraphFormatError",
    "GreedyTrace",
    "Instance",
    "MultiInstanceGraph",
    "PPSState",
    "RankAssignment",
    "ResidualState",
    "ThresholdSketch",
    "ThresholdState",
    "add_seed",
    "all_pairs_distances",
    "assign_ranks",
    "build_ads_instance",
    "build_cads",
    "build_threshold_sketches",
    "estimate_influence",
    "estimate_union_size",
    "evaluate_prefixes",
    "forward_dijkstra",
    "greedy_dense",
    "hip_threshold",
    "influence_exact",
    "lazy_greedy",
    "load_edge_list",
    "load_npz",
    "load_sketches",
    "make_exponential",
    "make_harmonic",
    "make_threshold",
    "marg_gain",
    "merge_cads",
    "parse_decay",
    "pps_include",
    "run_pps_im",
    "run_threshold_im",
    "sample_instances",
    "save_npz",
    "save_sketches",
    "structured_ranks",
    "uniform_ranks",
    "threshold_influence_estimate",
    "truncate",
]
