"""Behavioral event model, trace files and a seeded synthetic trace generator."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

SECONDS_PER_DAY = 86_400
# Midnight UTC, 2020-09-14 (a Monday); synthetic traces start here.
DEFAULT_EPOCH = 1_600_041_600


class TraceParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class FeatureKind(enum.Enum):
    IncomingSms = "IncomingSms"
    OutgoingSms = "OutgoingSms"
    IncomingCall = "IncomingCall"
    OutgoingCall = "OutgoingCall"
    BrowserHistory = "BrowserHistory"
    WifiHistory = "WifiHistory"
    ScreenStatus = "ScreenStatus"
    ApplicationHistory = "ApplicationHistory"

    @property
    def is_foreground(self) -> bool:
        return self in FOREGROUND_KINDS

    @property
    def is_background(self) -> bool:
        return self in BACKGROUND_KINDS


FOREGROUND_KINDS = frozenset({
    FeatureKind.ScreenStatus,
    FeatureKind.ApplicationHistory,
    FeatureKind.OutgoingSms,
    FeatureKind.OutgoingCall,
    FeatureKind.BrowserHistory,
})
BACKGROUND_KINDS = frozenset({
    FeatureKind.WifiHistory,
    FeatureKind.IncomingSms,
    FeatureKind.IncomingCall,
})


class ScreenTransition(enum.Enum):
    On = "on"
    Off = "off"


SCREEN_ITEM = "SCREEN"


@dataclass(frozen=True)
class Event:
    timestamp: int
    kind: FeatureKind
    item: str
    duration: int = 0
    screen_transition: ScreenTransition | None = None

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError(f"negative duration {self.duration}")
        if not self.item:
            raise ValueError("empty item identifier")
        if (self.kind is FeatureKind.ScreenStatus) != (self.screen_transition is not None):
            raise ValueError(
                "screen_transition must be set exactly for ScreenStatus events")

    @property
    def is_screen_on(self) -> bool:
        return self.screen_transition is ScreenTransition.On

    @property
    def is_screen_off(self) -> bool:
        return self.screen_transition is ScreenTransition.Off


def screen_on(ts: int) -> Event:
    return Event(ts, FeatureKind.ScreenStatus, SCREEN_ITEM, 0, ScreenTransition.On)


def screen_off(ts: int, session_length: int) -> Event:
    return Event(ts, FeatureKind.ScreenStatus, SCREEN_ITEM, session_length,
                 ScreenTransition.Off)


@dataclass(frozen=True)
class EventTrace:
    owner: str
    events: tuple[Event, ...] = ()
    contact_list: frozenset[str] = frozenset()

    def __post_init__(self):
        # sorted() is stable, so equal timestamps keep their input order
        events = tuple(sorted(self.events, key=lambda e: e.timestamp))
        object.__setattr__(self, "events", events)
        object.__setattr__(self, "contact_list", frozenset(self.contact_list))

    def __len__(self) -> int:
        return len(self.events)

    @property
    def span(self) -> tuple[int, int]:
        if not self.events:
            raise ValueError("empty trace has no span")
        return self.events[0].timestamp, self.events[-1].timestamp

    def between(self, start: int, end: int) -> "EventTrace":
        """Events with start <= timestamp < end, same owner and contacts."""
        return EventTrace(self.owner,
                          tuple(e for e in self.events if start <= e.timestamp < end),
                          self.contact_list)

    def items(self, kind: FeatureKind | None = None) -> set[str]:
        return {e.item for e in self.events if kind is None or e.kind is kind}


# ---------------------------------------------------------------------------
# trace file format

def event_to_record(event: Event) -> dict:
    rec = {"ts": event.timestamp, "kind": event.kind.value,
           "item": event.item, "dur": event.duration}
    if event.screen_transition is not None:
        rec["screen"] = event.screen_transition.value
    return rec


def event_from_record(rec: Mapping) -> Event:
    screen = rec.get("screen")
    return Event(
        timestamp=_as_int(rec["ts"], "ts"),
        kind=FeatureKind(rec["kind"]),
        item=str(rec["item"]),
        duration=_as_int(rec.get("dur", 0), "dur"),
        screen_transition=None if screen is None else ScreenTransition(screen),
    )


def _as_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"field {name!r} must be an integer, got {value!r}")
    return value


def dumps_record(rec: Mapping) -> str:
    return json.dumps(rec, ensure_ascii=False, separators=(",", ":"))


def serialize_trace(trace: EventTrace) -> str:
    lines = [f"# owner: {trace.owner}",
             "# contacts: " + ",".join(sorted(trace.contact_list))]
    lines += [dumps_record(event_to_record(e)) for e in trace.events]
    return "\n".join(lines) + "\n"


def parse_trace(text: str) -> EventTrace:
    owner = ""
    contacts: frozenset[str] = frozenset()
    events = []
    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition(":")
            key = key.strip()
            value = value.strip()
            if key == "owner":
                owner = value
            elif key == "contacts":
                contacts = frozenset(c for c in value.split(",") if c)
            continue
        try:
            rec = json.loads(line)
            if not isinstance(rec, dict):
                raise ValueError("record is not a key-value object")
            events.append(event_from_record(rec))
        except (ValueError, KeyError, TypeError) as exc:
            raise TraceParseError(lineno, str(exc)) from exc
    return EventTrace(owner, tuple(events), contacts)


def read_trace(path) -> EventTrace:
    with open(path, encoding="utf-8") as fh:
        return parse_trace(fh.read())


def write_trace(trace: EventTrace, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_trace(trace))


# ---------------------------------------------------------------------------
# synthetic traces

@dataclass(frozen=True)
class Pool:
    size: int
    zipf: float = 1.0

    def weights(self) -> np.ndarray:
        ranks = np.arange(1, self.size + 1, dtype=float)
        w = ranks ** -self.zipf
        return w / w.sum()


DEFAULT_BACKGROUND_RATES = {
    FeatureKind.IncomingSms: 0.4,
    FeatureKind.IncomingCall: 0.15,
    FeatureKind.WifiHistory: 0.5,
}


@dataclass(frozen=True)
class SyntheticProfile:
    """Knobs of a synthetic phone owner.

    ``background_rates`` are Poisson rates in events per hour for the
    background kinds. Each durational item gets a characteristic mean
    duration; observed durations scatter around it log-normally.
    """

    seed: int = 0
    contact_pool: Pool = Pool(25, 1.1)
    app_pool: Pool = Pool(40, 1.2)
    wifi_pool: Pool = Pool(4, 1.5)
    browser_pool: Pool = Pool(30, 1.1)
    sessions_per_day: float = 18.0
    session_length_mean: float = 420.0
    session_length_std: float = 180.0
    background_rates: Mapping[FeatureKind, float] = field(
        default_factory=lambda: dict(DEFAULT_BACKGROUND_RATES))
    day_count: int = 28
    start: int = DEFAULT_EPOCH
    foreground_rate: float = 30.0  # foreground events per hour of screen time
    unknown_caller_share: float = 0.05
    duration_spread: float = 0.25

    def __post_init__(self):
        for name in ("contact_pool", "app_pool", "wifi_pool", "browser_pool"):
            if getattr(self, name).size < 1:
                raise ValueError(f"{name} must hold at least one item")
        if self.day_count < 1:
            raise ValueError("day_count must be >= 1")
        if self.sessions_per_day < 0 or self.foreground_rate < 0:
            raise ValueError("rates must be non-negative")
        if any(r < 0 for r in self.background_rates.values()):
            raise ValueError("background rates must be non-negative")
        if any(not k.is_background for k in self.background_rates):
            raise ValueError("background_rates keys must be background kinds")
        if self.session_length_mean <= 0 or self.session_length_std < 0:
            raise ValueError("invalid session length distribution")


# (share of foreground events, pool attribute, id prefix)
_FOREGROUND_MIX = (
    (FeatureKind.ApplicationHistory, 0.62),
    (FeatureKind.BrowserHistory, 0.2),
    (FeatureKind.OutgoingSms, 0.1),
    (FeatureKind.OutgoingCall, 0.08),
)

# typical mean duration ranges (seconds) for the owner's items
_DURATION_RANGE = {
    FeatureKind.ApplicationHistory: (20.0, 240.0),
    FeatureKind.BrowserHistory: (15.0, 150.0),
    FeatureKind.OutgoingCall: (40.0, 400.0),
    FeatureKind.IncomingCall: (40.0, 400.0),
    FeatureKind.WifiHistory: (900.0, 7200.0),
}


def contact_ids(n: int) -> list[str]:
    return [f"+4477009{k:05d}" for k in range(n)]


def app_ids(n: int) -> list[str]:
    return [f"com.owner.app{k:03d}" for k in range(n)]


def wifi_ids(n: int) -> list[str]:
    return [f"HomeNet-{k:02d}" for k in range(n)]


def browser_ids(n: int) -> list[str]:
    return [f"site{k:03d}.example.org" for k in range(n)]


class _Owner:
    """Item pools plus per-item mean durations for one synthetic profile."""

    def __init__(self, profile: SyntheticProfile, rng: np.random.Generator):
        p = profile
        self.pools = {
            FeatureKind.ApplicationHistory: (app_ids(p.app_pool.size), p.app_pool.weights()),
            FeatureKind.BrowserHistory: (browser_ids(p.browser_pool.size), p.browser_pool.weights()),
            FeatureKind.WifiHistory: (wifi_ids(p.wifi_pool.size), p.wifi_pool.weights()),
        }
        contacts = contact_ids(p.contact_pool.size)
        cw = p.contact_pool.weights()
        for kind in (FeatureKind.OutgoingSms, FeatureKind.OutgoingCall,
                     FeatureKind.IncomingSms, FeatureKind.IncomingCall):
            self.pools[kind] = (contacts, cw)
        self.contacts = frozenset(contacts)
        self.mean_duration = {}
        for kind, (lo, hi) in _DURATION_RANGE.items():
            items = self.pools[kind][0]
            self.mean_duration[kind] = dict(zip(
                items, np.exp(rng.uniform(np.log(lo), np.log(hi), size=len(items)))))

    def pick(self, rng, kind):
        items, weights = self.pools[kind]
        return items[rng.choice(len(items), p=weights)]


def _duration(rng, owner: _Owner, kind, item, spread) -> int:
    means = owner.mean_duration.get(kind)
    if means is None:
        return 0
    return max(1, int(round(means[item] * rng.lognormal(0.0, spread))))


def generate_trace(profile: SyntheticProfile) -> EventTrace:
    """Deterministic synthetic trace for ``profile``.

    Each day has a Poisson number of screen sessions between 07:00 and 23:30,
    foreground events only inside sessions, and background events as Poisson
    arrivals around the clock.
    """
    rng = np.random.default_rng(profile.seed)
    owner = _Owner(profile, rng)
    kinds = [k for k, _ in _FOREGROUND_MIX]
    mix = np.array([s for _, s in _FOREGROUND_MIX])
    mix = mix / mix.sum()
    events: list[Event] = []

    for day in range(profile.day_count):
        day0 = profile.start + day * SECONDS_PER_DAY
        n_sessions = rng.poisson(profile.sessions_per_day)
        starts = np.sort(rng.uniform(7 * 3600, 23.5 * 3600, size=n_sessions))
        busy_until = day0
        for s in starts:
            length = int(max(30.0, rng.normal(profile.session_length_mean,
                                              profile.session_length_std)))
            on = max(day0 + int(s), busy_until + 30)
            off = on + length
            if off >= day0 + SECONDS_PER_DAY:
                break
            busy_until = off
            events.append(screen_on(on))
            n_fg = rng.poisson(profile.foreground_rate * length / 3600.0)
            for t in np.sort(rng.integers(on + 1, off, size=n_fg)):
                kind = kinds[rng.choice(len(kinds), p=mix)]
                item = owner.pick(rng, kind)
                dur = _duration(rng, owner, kind, item, profile.duration_spread)
                events.append(Event(int(t), kind, item, dur))
            events.append(screen_off(off, length))

        for kind in sorted(profile.background_rates, key=lambda k: k.value):
            rate = profile.background_rates[kind]
            n = rng.poisson(rate * 24)
            for t in np.sort(rng.integers(day0, day0 + SECONDS_PER_DAY, size=n)):
                if kind is not FeatureKind.WifiHistory and rng.random() < profile.unknown_caller_share:
                    item = f"+1555{rng.integers(0, 10**7):07d}"
                    dur = 0 if kind is FeatureKind.IncomingSms else int(rng.integers(5, 120))
                else:
                    item = owner.pick(rng, kind)
                    dur = _duration(rng, owner, kind, item, profile.duration_spread)
                events.append(Event(int(t), kind, item, dur))

    return EventTrace(f"user-{profile.seed}", tuple(events), owner.contacts)


def item_frequencies(events: Iterable[Event], kind: FeatureKind) -> dict[str, int]:
    counts: dict[str, int] = {}
    for e in events:
        if e.kind is kind:
            counts[e.item] = counts.get(e.item, 0) + 1
    return counts
