"""Network choice model inference from marginal traffic counts.

Given a directed graph and per-node arrival/departure counts, estimate a
latent strength per node such that transitions out of every node are
proportional to the targets' strengths, and hence recover all edge
transition probabilities. Includes well-posedness diagnostics, a
trajectory simulator for ground-truth experiments, heuristic baselines,
and evaluation metrics.
"""

from .backends import available_backends, backend_name, use_backend
from .baselines import baseline_pagerank, baseline_traffic, baseline_uniform, pagerank
from .diagnostics import (
    ComparisonCheck,
    Diagnosis,
    FeasibleFlow,
    FlowCheck,
    comparison_graph_scc,
    diagnose,
    feasible_flow,
    hypergraph_components,
)
from .engine import (
    EdgeTransitionTable,
    FitReport,
    PriorConfig,
    StreamState,
    TrafficMarginals,
    conserve_flow,
    fit,
    iterate,
    log_likelihood,
    log_posterior,
    mm_step,
    transition_probabilities,
)
from .errors import (
    ChoiceRankError,
    ModelInconsistencyError,
    ParseError,
    SinkEncountered,
)
from .graph import (
    DegreeCensus,
    DirectedGraph,
    degree_census,
    load_binary_cache,
    load_edge_list,
    save_binary_cache,
    src_sorted_reorder,
)
from .hilbert import hilbert_index, hilbert_reorder
from .metrics import (
    EvalReport,
    SupportMismatch,
    evaluate,
    kl_divergence,
    rank_displacement,
    weighted_quantile,
)
from .simulate import (
    EdgeCounts,
    TrajectorySpec,
    aggregate_marginals,
    empirical_transitions,
    sample_trajectories,
)

__version__ = "0.1.0"
