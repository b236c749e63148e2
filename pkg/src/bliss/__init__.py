"""Blind identification of linear systems driven by sparse inputs.

Submodules
----------
lti          ground-truth systems, sparse inputs, trajectories
numkit       SVD, projectors, prox of -log|det|, l1-ball projection
solver       the ADMM solver and problem reduction
certificate  persistent-scattering checks
evaluation   recovery scoring and (s, T) sweeps
io           trajectory and result files
"""

from .lti import (
    SparseInputSpec,
    SystemRealization,
    TrajectoryData,
    generate_sparse_inputs,
    generate_system,
    make_instance,
    persistency_rank,
    simulate,
)
from .numkit import project_l1_columns, projector_complement, prox_neg_logdet, thin_svd_rank_m, volume
from .solver import SolverConfig, SolveReport, default_rho0, oracle_rho0, reduce, solve
from .certificate import check_persistent_scattering, normalize_pair, omega
from .evaluation import PRESETS, SweepConfig, run_sweep, score_recovery

__version__ = "0.1.0"
