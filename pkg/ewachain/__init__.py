"""
ewachain package

Exponentially weighted aggregation over sparse regression models, sampled by a
soft-boundary Metropolis-Hastings chain, with an exact small-p oracle for its spectral gap,
canonical paths and mixing times.

Modules:
- `subsets`: Bit-mask subsets and state-space enumeration.
- `problem`: The regression instance and the chain constants.
- `projection`: Incremental projections and restricted eigenvalue measurements.
- `posterior`: Log-weights, log-ratios and the exact pi table.
- `proposal`: The proposal kernel, the Metropolis-Hastings step and the sampler loop.
- `initializer`: The thresholded lasso initializer.
- `canonical_paths`: The G-tree, canonical paths, loadings and state-wise inequality checks.
- `oracle`: Exact transition matrices, spectral gap, TV decay, events and assumptions.
- `experiment` / `run_ewachain`: Experiment configuration, pipeline and command line.

Example:
    from ewachain import ExperimentConfig, generate, run_chain
"""
__version__ = "0.1.0"

from ewachain.subsets import Subset, enumerate_states, hamming, neighbors
from ewachain.problem import ChainConfig, ProblemInstance, normalize_columns
from ewachain.projection import ProjectionState, restricted_nu
from ewachain.posterior import Posterior, exact_distribution, log_ratio, log_weight
from ewachain.proposal import mh_step, propose, proposal_log_prob, run_chain
from ewachain.initializer import LassoConfig, check_event_A, estimate_kappa, fit_lasso, threshold_support
from ewachain.canonical_paths import build_tree, canonical_path, edge_loadings, g_map, lambda_set, sinclair_bound
from ewachain.oracle import (build_exact_chain, check_assumptions, check_events, mixing_time, spectral_gap,
                             tv_decay)
from ewachain.experiment import ExperimentConfig, ExperimentRunner, generate, generate_instance, run_pipeline
