"""
Decaying ranking lists
======================

Every feature keeps a short list of its most relevant items. Items gain
value each time they occur and lose it steadily while idle; the position of
an item in the list turns into an anomaly score between 0 and mu_rank.
"""

from anfis_auth.events import FeatureKind
from anfis_auth.ranklist import RankingList, RankParams, adjusted_max, ranking_score, record_occurrence

params = RankParams(alpha=1.0, beta=0.5, lam=0.1)
apps = RankingList(FeatureKind.ApplicationHistory, params)

# a morning of app launches, timestamps in seconds
launches = [(0, "mail"), (300, "chat"), (900, "mail"), (1800, "maps"),
            (3600, "mail"), (4000, "chat"), (7200, "news")]
for t, app in launches:
    apps = record_occurrence(apps, app, t)

for rank, entry in enumerate(apps.entries, start=1):
    print(f"{rank}. {entry.item:5s} val={entry.val:.3f} occ={entry.occ}")

# familiar items score low, unseen ones get the full penalty
for app in ("mail", "chat", "news", "casino"):
    print(f"score({app}) = {ranking_score(apps, app):.3f}")

# short lists cap the in-list penalty through a logistic in the list length
for n in (3, 5, 7, 15):
    print(f"len={n:2d}  ceiling={adjusted_max(n, params):.3f}")

# a day of silence empties the list again
print("after 24h idle:", ranking_score(apps, "mail", now=7200 + 24 * 3600))
