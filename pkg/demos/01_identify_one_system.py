"""Identify one system from its state trajectory alone.

Run with ``python3 demos/01_identify_one_system.py``.
"""

# %%
# A 20-state system driven by 5 inputs, of which exactly one is active at
# each of the 500 time steps.
import numpy as np

from bliss import make_instance, persistency_rank, score_recovery, solve
from bliss.solver import SolverConfig, oracle_rho0, reduce

system, data = make_instance(n=20, m=5, T=500, s=1, distribution="gaussian", seed=4)
print("X:", data.X.shape, "Xplus:", data.Xplus.shape, "U:", data.U_true.shape)
print("spectral radius of A:", round(system.spectral_radius, 12))
print("persistently exciting:", persistency_rank(data.X, data.U_true).persistently_exciting)

# %%
# The solver sees X and Xplus only. The initial penalty here is the
# oracle-scaled value, computed from the true B for reference runs.
red = reduce(data, m=5)
cfg = SolverConfig(rho0=oracle_rho0(red, system.B, data.U_true))
rep = solve(data, 5, cfg, red=red)
print(f"converged={rep.converged} after {rep.iterations} iterations "
      f"(primal {rep.primal_res:.1e}, dual {rep.dual_res:.1e})")

# %%
# The answer is unique only up to scaling and permuting the inputs, so the
# score first matches columns and fixes the gauge.
sc = score_recovery(rep.A_star, rep.B_star, rep.U_star, system.A, system.B, data.U_true, rep.radius)
print("matched columns:", sc.permutation, "signs:", sc.signs)
print(f"relative errors: A {sc.rel_err_A:.1e}  B {sc.rel_err_B:.1e}  U {sc.rel_err_U:.1e}")
print("success:", sc.success)

# %%
# The same call without any knowledge of B uses the data-only default.
rep2 = solve(data, 5)
sc2 = score_recovery(rep2.A_star, rep2.B_star, rep2.U_star, system.A, system.B, data.U_true,
                     rep2.radius)
print(f"default rho0 {rep2.rho0:.3g}: {rep2.iterations} iterations, success {sc2.success}")

# %%
# Inputs are recovered exactly, including where they are zero.
U_hat = rep.U_star[:, sc.permutation] * sc.signs
U_hat *= np.abs(data.U_true).sum(0) / np.abs(U_hat).sum(0)
print("support agreement:", np.mean((np.abs(U_hat) > 1e-6) == (data.U_true != 0)))
