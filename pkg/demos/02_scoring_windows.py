"""
Anomaly scores and authentication windows
=========================================

Events are checked against the owner's ranking lists, contact list and
typical durations. Foreground scores accumulate over a screen session and
are reported when the screen goes off or the re-authentication timer fires;
background scores fade while their feature is idle.
"""

from anfis_auth.events import SyntheticProfile, generate_trace
from anfis_auth.scoring import FeatureScorerConfig, score_trace

trace = generate_trace(SyntheticProfile(seed=3, day_count=5, foreground_rate=12))
print(f"{len(trace.events)} events for {trace.owner}, {len(trace.contact_list)} contacts")

config = FeatureScorerConfig(mu_damp=0.5)
scored, windows = score_trace(trace, config, timer_period=300)

# the first day is all novelty, later days settle down
day = 86_400
start = trace.events[0].timestamp
for d in range(5):
    ws = [w for w in windows if start + d * day <= w.window_end < start + (d + 1) * day]
    if ws:
        mean = sum(w.as_fore for w in ws) / len(ws)
        print(f"day {d}: {len(ws):3d} windows, mean AS_fore {mean:.2f}")

# what one busy event looked like
worst = max(scored, key=lambda s: s.contribution)
print("largest single contribution:", worst.event.kind.name, worst.event.item, round(worst.contribution, 3))

# windows from timer expiry versus screen off
kinds = {}
for w in windows:
    kinds[w.trigger.value] = kinds.get(w.trigger.value, 0) + 1
print(kinds)
