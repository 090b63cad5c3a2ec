"""dynppr: forward-push personalized PageRank on evolving directed graphs.

The static side is a Gauss-Southwell push solver with an l1 error
certificate; the dynamic side carries a converged (pi, r) pair across a
web change -- link flips via an exact residual amendment, simultaneous
node arrivals/departures via a virtual-web warm start -- instead of
recomputing from scratch or replaying edges one at a time.
"""

from .errors import (BudgetExceededError, CalibrationError, DynpprError,
                     OracleSizeError, ParseError, PreconditionError,
                     ValidationError)
from .graph import (Graph, IdMap, IngestStats, InsertedNode,
                    PerturbationBatch, apply_batch, changed_rows,
                    load_edge_list, load_graph_cache, out_neighbors_effective,
                    save_graph_cache, write_edge_list)
from .solver import (DANGLING_SOURCE, DANGLING_UNIFORM, MAX_RESIDUAL, QUEUE,
                     SolverConfig, SolverStats, gauss_southwell,
                     l1_error_bound, load_vector, oracle_dense,
                     power_iteration, ppr_from_scratch, residual_of,
                     save_vector)
from .dynamic import (UpdateProblem, per_edge_baseline, tracking_init,
                      vw_init, vwppr_update)
from .perturb import (EvolutionResult, PerturbPlan, bfs_sample,
                      make_evolution)
from .harness import (CalibrationResult, ExperimentReport, ExperimentSpec,
                      ReportRow, calibrate_epsilon, prepare_priors,
                      run_experiment, summarize_rows, verify_suite)
from .checks import CheckResult

__version__ = "0.1.0"

__all__ = [
    "BudgetExceededError", "CalibrationError", "DynpprError",
    "OracleSizeError", "ParseError", "PreconditionError", "ValidationError",
    "Graph", "IdMap", "IngestStats", "InsertedNode", "PerturbationBatch",
    "apply_batch", "changed_rows", "load_edge_list", "load_graph_cache",
    "out_neighbors_effective", "save_graph_cache", "write_edge_list",
    "DANGLING_SOURCE", "DANGLING_UNIFORM", "MAX_RESIDUAL", "QUEUE",
    "SolverConfig", "SolverStats", "gauss_southwell", "l1_error_bound",
    "load_vector", "oracle_dense", "power_iteration", "ppr_from_scratch",
    "residual_of", "save_vector",
    "UpdateProblem", "per_edge_baseline", "tracking_init", "vw_init",
    "vwppr_update",
    "EvolutionResult", "PerturbPlan", "bfs_sample", "make_evolution",
    "CalibrationResult", "ExperimentReport", "ExperimentSpec", "ReportRow",
    "calibrate_epsilon", "prepare_priors", "run_experiment",
    "summarize_rows", "verify_suite", "CheckResult",
    "__version__",
]
