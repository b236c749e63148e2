"""Success probability over sparsity s and horizon T, blind versus known A.

Run with ``python3 demos/03_phase_transition.py [out_dir]``. The default
grid is small (about 20 s); pass ``--full`` for the 20-trial desk grid.
"""

# %%
import dataclasses
import sys

from bliss import PRESETS, run_sweep
from bliss.evaluation import emit_results

full = "--full" in sys.argv
args = [a for a in sys.argv[1:] if a != "--full"]
out = args[0] if args else "phase_transition_out"
cfg = PRESETS["desk"] if full else dataclasses.replace(PRESETS["desk"], trials=5)

# %%
results = {mode: run_sweep(cfg, mode=mode) for mode in ("blind", "oracle")}


def table(result):
    lines = ["T \\ s " + "".join(f"{s:>6}" for s in result.s_values)]
    for T in reversed(result.T_values):
        lines.append(f"{T:>6}" + "".join(f"{result.cell(s, T).p_success:>6.2f}" for s in result.s_values))
    return "\n".join(lines)


for mode, res in results.items():
    print(f"\nP(success), {mode} mode, {cfg.trials} trials per cell")
    print(table(res))

# %%
# Sparser inputs and longer horizons help; knowing A moves the boundary out.
for mode, res in results.items():
    emit_results(res, f"{out}/{mode}")
print(f"\nwrote sweep.csv, heatmap.json, heatmap.svg, manifest.json under {out}/")
