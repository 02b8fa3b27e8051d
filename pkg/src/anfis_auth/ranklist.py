"""Per-feature decaying ranked lists of items and the ranking anomaly score."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

from .events import FeatureKind, dumps_record

SECONDS_PER_HOUR = 3600.0


class TimeTravelError(ValueError):
    """An update was stamped earlier than state it would modify."""


@dataclass(frozen=True)
class RankParams:
    alpha: float = 1.0      # base value of a new item
    beta: float = 0.5       # increment per occurrence
    lam: float = 0.02       # decay per hour
    mu_rank: float = 1.0    # maximum ranking anomaly score
    c_sig: float = 1.0      # steepness of the length sigmoid
    b_sig: float = 5.0      # list length at the sigmoid midpoint
    top_n: int = 30

    def __post_init__(self):
        if self.alpha < 0 or self.beta <= 0 or self.lam < 0:
            raise ValueError("need alpha >= 0, beta > 0, lam >= 0")
        if self.mu_rank <= 0:
            raise ValueError("mu_rank must be positive")
        if self.top_n < 1:
            raise ValueError("top_n must be >= 1")


@dataclass(frozen=True)
class RankEntry:
    item: str
    val: float
    last_update: int
    occ: int = 1


def _order_key(e: RankEntry):
    return (-e.val, -e.last_update, e.item)


@dataclass(frozen=True)
class RankingList:
    feature: FeatureKind
    params: RankParams = field(default_factory=RankParams)
    entries: tuple[RankEntry, ...] = ()

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def vmax(self) -> float:
        return self.entries[0].val

    @property
    def vmin(self) -> float:
        return self.entries[-1].val

    @property
    def last_update(self) -> int | None:
        if not self.entries:
            return None
        return max(e.last_update for e in self.entries)

    def index_of(self, item: str) -> int:
        """1-based rank of ``item``; 0 when absent."""
        for i, e in enumerate(self.entries, start=1):
            if e.item == item:
                return i
        return 0

    def get(self, item: str) -> RankEntry | None:
        for e in self.entries:
            if e.item == item:
                return e
        return None

    def top(self, k: int) -> list[str]:
        return [e.item for e in self.entries[:k]]


def _hours(seconds: int) -> float:
    return seconds / SECONDS_PER_HOUR


def decay_to(rlist: RankingList, now: int) -> RankingList:
    """Bring every entry's value forward to ``now``.

    Values fall linearly at ``lam`` per hour; entries that reach zero are
    dropped.
    """
    lam = rlist.params.lam
    out = []
    for e in rlist.entries:
        if now < e.last_update:
            raise TimeTravelError(
                f"{rlist.feature.name}: now={now} precedes entry {e.item!r} "
                f"updated at {e.last_update}")
        val = e.val - lam * _hours(now - e.last_update)
        if val > 0:
            out.append(replace(e, val=val, last_update=now))
    out.sort(key=_order_key)
    return replace(rlist, entries=tuple(out))


def record_occurrence(rlist: RankingList, item: str, now: int) -> RankingList:
    """Apply one occurrence of ``item`` at ``now``.

    Expired items (value decayed to <= 0) count as absent, so they come back
    with fresh-item value ``alpha + beta``.
    """
    p = rlist.params
    decayed = decay_to(rlist, now)
    entries = list(decayed.entries)
    for i, e in enumerate(entries):
        if e.item == item:
            entries[i] = replace(e, val=e.val + p.beta, occ=e.occ + 1)
            break
    else:
        entries.append(RankEntry(item, p.alpha + p.beta * 1, now, 1))
    entries = [e for e in entries if e.val > 0]
    entries.sort(key=_order_key)
    return replace(rlist, entries=tuple(entries[:p.top_n]))


def adjusted_max(length: int, params: RankParams) -> float:
    """Length-dependent ceiling of the in-list ranking score."""
    z = -params.c_sig * (length - params.b_sig)
    # logistic written to avoid overflow for very negative lengths
    if z > 0:
        ez = math.exp(-z)
        return params.mu_rank * ez / (1.0 + ez)
    return params.mu_rank / (1.0 + math.exp(z))


def ranking_score(rlist: RankingList, item: str, now: int | None = None) -> float:
    """Anomaly score of ``item`` against the list; 0 is most familiar.

    Passing ``now`` decays the list to that time before scoring.
    """
    if now is not None:
        rlist = decay_to(rlist, now)
    p = rlist.params
    n = len(rlist)
    if n == 0:
        return 0.0
    index = rlist.index_of(item)
    if n <= 2:
        # a present item in a list this short carries no evidence either way
        return p.mu_rank / 2 if index == 0 else 0.0
    if index == 0:
        return p.mu_rank
    val = rlist.entries[index - 1].val
    span = rlist.vmax - rlist.vmin
    val_term = 0.0 if span == 0 else ((rlist.vmax - val) / span) ** 2
    return adjusted_max(n, p) / 2 * (((index - 1) / n) ** 2 + val_term)


# ---------------------------------------------------------------------------
# snapshots, same line-per-record layout as trace files

def snapshot_lines(rlist: RankingList) -> list[str]:
    p = rlist.params
    head = {"feature": rlist.feature.value, "alpha": p.alpha, "beta": p.beta,
            "lam": p.lam, "mu_rank": p.mu_rank, "c_sig": p.c_sig,
            "b_sig": p.b_sig, "top_n": p.top_n}
    lines = ["# ranklist " + dumps_record(head)]
    lines += [dumps_record({"feature": rlist.feature.value, "item": e.item,
                            "val": e.val, "last_update": e.last_update,
                            "occ": e.occ})
              for e in rlist.entries]
    return lines


def dump_snapshot(lists) -> str:
    out = []
    for rlist in lists:
        out += snapshot_lines(rlist)
    return "\n".join(out) + "\n"


def load_snapshot(text: str) -> list[RankingList]:
    heads: dict[str, RankingList] = {}
    entries: dict[str, list[RankEntry]] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("# ranklist "):
            h = json.loads(line[len("# ranklist "):])
            feature = FeatureKind(h.pop("feature"))
            heads[feature.value] = RankingList(feature, RankParams(**h))
            entries[feature.value] = []
        else:
            rec = json.loads(line)
            entries[rec["feature"]].append(
                RankEntry(rec["item"], rec["val"], rec["last_update"], rec["occ"]))
    return [replace(rl, entries=tuple(entries[key])) for key, rl in heads.items()]
