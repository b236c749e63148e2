"""Check the persistent-scattering condition on recoverable and on broken data.

Run with ``python3 demos/02_certify_identifiability.py``. Takes about 15 s.
"""

# %%
import numpy as np

from bliss import check_persistent_scattering, make_instance, normalize_pair, omega

_, data = make_instance(n=20, m=5, T=500, s=1, seed=4)
pair = normalize_pair(data.X, data.U_true)

# %%
# Omega(v) is an l1 regression. On identifiable data it equals ||v||_2 on
# the axes and exceeds it elsewhere.
for v in (np.eye(5)[0], np.ones(5) / np.sqrt(5), np.array([1.0, -1.0, 0, 0, 0]) / np.sqrt(2)):
    print(np.round(v, 3), "->", round(omega(pair, v).value, 6))

# %%
rep = check_persistent_scattering(pair, num_samples=500, seed=0)
print(rep.overall, "| C1 margin", round(rep.c1_min_margin, 4), "| C2 gap", round(rep.c2_sparse_gap, 4))
for entry in rep.c3_results:
    print(f"  e_{entry['index']}: Omega={entry['omega_value']:.9f}  unique margin={entry['unique_margin']:.3g}")

# %%
# Copy input 0 into input 1 (scaled). No algorithm can tell the two
# inputs apart, and the checker refutes the condition.
U = data.U_true.copy()
U[:, 1] = 3.0 * U[:, 0]
bad = normalize_pair(data.X, U)
print("Omega((e0 - e1)/sqrt2) =", round(omega(bad, np.array([1, -1, 0, 0, 0]) / np.sqrt(2)).value, 9))
print(check_persistent_scattering(bad, num_samples=200, seed=0).overall)

# %%
# Dense inputs over a short horizon are not certified either.
_, dense = make_instance(n=20, m=5, T=100, s=5, seed=4)
print("dense, T=100:", check_persistent_scattering(normalize_pair(dense.X, dense.U_true),
                                                   num_samples=200).overall)
