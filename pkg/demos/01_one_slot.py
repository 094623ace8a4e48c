"""Walk through a single Free-BS decision on a two-user slot.

Run: python demos/01_one_slot.py
"""
# %%
import numpy as np

from freebs import (
    GainMatrix,
    VirtualQueueState,
    baseline_decide,
    evaluate_candidate,
    free_bs_decide,
    reference_config,
)

cfg = reference_config(2)  # 20 dB everywhere, L = 1 bit, T = 1

# User 0 has a strong BS link, user 1 a weak one; the 0 -> 1 D2D link is poor too.
gains = GainMatrix(
    bs_to_user=np.array([0.5, 0.1]),
    user_to_user=np.array([[1.0, 0.02], [1.0, 1.0]]),
)
# User 1 is behind on its QoS target, so its queue is the larger one.
queues = VirtualQueueState(y=np.array([0.5, 2.0]), z=0.3)

# %% Every candidate Free-BS looks at: threshold rank i, relay rank j (None = no relay)
for i in range(2):
    for j in [None] + list(range(i + 1)):
        c = evaluate_candidate(i, j, gains, queues, cfg)
        print(
            f"i={i} relay={j!s:>4}  threshold={c.phase1_threshold:.3f}  "
            f"mu2={c.mu2:.5f}  decoded={c.decoded.astype(int)}  weight={c.objective:.5f}"
        )

# %% The chosen decisions
fb = free_bs_decide(gains, queues, True, cfg)
bl = baseline_decide(gains, queues, True, cfg)
print(f"\nFree-BS : threshold {fb.phase1_threshold}, relay {fb.relay}, BS free for {fb.mu2:.3f} of the slot")
print(f"baseline: threshold {bl.phase1_threshold}, relay {bl.relay}, BS free for {bl.mu2:.3f} of the slot")
# Free-BS keeps the fast BS rate and lets user 0 forward the packet to user 1,
# instead of slowing the BS down until user 1 can decode directly.
