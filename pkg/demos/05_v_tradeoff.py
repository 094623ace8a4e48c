"""Effect of the control parameter V on the offloading factor and the queues.

Run: python demos/05_v_tradeoff.py [slots] [reps]
"""
# %%
import sys

from freebs import drift_constant, reference_config
from freebs.engine import SweepSpec, mean_over_reps, run_sweep

slots = int(sys.argv[1]) if len(sys.argv) > 1 else 20_000
reps = int(sys.argv[2]) if len(sys.argv) > 2 else 3
vs = [1.0, 10.0, 100.0, 1000.0]

cfg = reference_config(4, n_slots=slots)
res = run_sweep(cfg, SweepSpec("control_v", vs, reps, ("free_bs",)))
off = mean_over_reps(res)
drift = mean_over_reps(res, "queue_drift_z")

# %%
c = drift_constant(cfg)
print("     V   offloading   C/V bound   Z(K)/K")
for v in vs:
    print(f"{v:6g}   {off[('free_bs', v)][0]:10.5f}   {c / v:9.4f}   {drift[('free_bs', v)][0]:.4f}")
# Larger V pushes the offloading factor up with shrinking returns, at the cost
# of a Z queue that settles near V (so it needs more slots to look stable).
