"""Offloading factor against transmit power, with and without the D2D relay.

Run: python demos/03_power_sweep.py [slots] [reps]
"""
# %%
import sys

from freebs import reference_config
from freebs.engine import SweepSpec, mean_over_reps, run_sweep

slots = int(sys.argv[1]) if len(sys.argv) > 1 else 5_000
reps = int(sys.argv[2]) if len(sys.argv) > 2 else 3
powers = [5.0, 10.0, 15.0, 20.0]

# power_db sets the BS and every user to the same power
res = run_sweep(reference_config(4, n_slots=slots), SweepSpec("power_db", powers, reps))
stats = mean_over_reps(res)

# %%
print(" dB   free_bs   baseline   ratio")
for p in powers:
    fb, bl = stats[("free_bs", p)][0], stats[("baseline", p)][0]
    print(f"{p:4.0f}  {fb:8.4f}  {bl:9.4f}  {fb / bl:6.2f}")
# The relay gains most at moderate power: at 20 dB the BS rate is already high,
# so the baseline idles for most of the slot anyway.
