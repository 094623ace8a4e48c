"""Reference configuration, four users: QoS targets and virtual-queue stability.

Run: python demos/02_queue_traces.py [slots]
"""
# %%
import sys

import numpy as np

from freebs import drift_constant, reference_config
from freebs.engine import check_stability, run

slots = int(sys.argv[1]) if len(sys.argv) > 1 else 20_000
cfg = reference_config(4, n_slots=slots, seed=0)
records, summary = run(cfg, "free_bs")

# %% Time-average results
print(f"offloading factor      {summary.offloading_factor:.4f}")
print(f"delivery ratio per user {np.round(summary.delivery_ratio, 4)} (target {cfg.qos[0]})")
print(f"relay used in           {np.mean([r.relay >= 0 for r in records]):.1%} of slots")
print(f"C / V gap bound         {drift_constant(cfg) / cfg.control_v:.4f}")

# %% Queue trajectories: Y stays bounded, Z climbs to about V and then hovers there
for k in np.linspace(0, slots - 1, 8).astype(int):
    r = records[k]
    print(f"slot {r.slot:>6}  Y={np.round(r.y, 2)}  Z={r.z:8.2f}")

print("mean-rate stable (Y..., Z):", check_stability(records, 1e-2).tolist())
# Z(K)/K is about V/K, so the Z test needs K well above V / 1e-2.
