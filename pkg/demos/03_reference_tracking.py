"""
Adaptive score references
=========================

During a preparation period the scores are only collected; the reference
starts at their mean less one standard deviation. Afterwards it follows
block averages through an exponentially weighted update.
"""

import numpy as np

from anfis_auth.reference import EsbState, esb_update

rng = np.random.default_rng(0)
state = EsbState(prep_len_days=2.0, block_size=5, ewma_alpha=0.2, prep_start=0)

t = 0
history = []
for hour in range(24 * 8):
    t = hour * 3600
    # the owner's typical score drifts upward after day four
    level = 1.0 if hour < 96 else 2.0
    state, ref = esb_update(state, float(rng.normal(level, 0.3)), t)
    history.append(ref)

ready = next(i for i, r in enumerate(history) if r is not None)
print(f"reference available after {ready} hours, starting at {history[ready]:.3f}")
for day in range(2, 8):
    print(f"end of day {day}: ref = {history[day * 24 + 23]:.3f}")
