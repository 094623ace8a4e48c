"""Offloading factor and throughput against the number of users.

Run: python demos/04_user_sweep.py [slots] [reps] [power_db]
"""
# %%
import sys

from freebs import reference_config
from freebs.engine import SweepSpec, apply_param, mean_over_reps, run_sweep

slots = int(sys.argv[1]) if len(sys.argv) > 1 else 5_000
reps = int(sys.argv[2]) if len(sys.argv) > 2 else 3
power = float(sys.argv[3]) if len(sys.argv) > 3 else 20.0
ns = [2, 4, 8, 12, 16, 20]

cfg = apply_param(reference_config(4, n_slots=slots), "power_db", power)
res = run_sweep(cfg, SweepSpec("n_users", ns, reps))
off = mean_over_reps(res)
tput = mean_over_reps(res, "throughput")

# %%
print("  N   free_bs  baseline   thr/user free_bs  thr/user baseline")
for n in ns:
    print(
        f"{n:3d}  {off[('free_bs', n)][0]:8.4f}  {off[('baseline', n)][0]:8.4f}"
        f"   {tput[('free_bs', n)][0] / n:15.4f}  {tput[('baseline', n)][0] / n:17.4f}"
    )
# Without the relay the BS must slow down to reach the weakest of more and more
# users. With it, a larger population mostly means a better choice of relay.
