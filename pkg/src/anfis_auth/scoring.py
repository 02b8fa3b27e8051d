"""Per-event anomaly contributions and the screen-session window state machine.

Each event is checked against up to three conditions (ranking position,
contact-list membership, typical duration); an unmet condition adds its
weight times a normalized sub-score in [0, 1]. Foreground contributions
accumulate into the open window, background ones into per-kind components
that decay while the feature is idle.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Mapping

from .events import BACKGROUND_KINDS, Event, FeatureKind, dumps_record
from .ranklist import RankingList, RankParams, ranking_score, record_occurrence

log = logging.getLogger(__name__)

SECONDS_PER_HOUR = 3600.0


class ScoringConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Checks:
    ranking: bool = False
    contacts: bool = False
    duration: bool = False

    def any(self) -> bool:
        return self.ranking or self.contacts or self.duration


_CALL = Checks(ranking=True, contacts=True, duration=True)
_SMS = Checks(ranking=True, contacts=True)
_RANK_DUR = Checks(ranking=True, duration=True)

# conditions checked per activity kind
TABLE_I_CHECKS: Mapping[FeatureKind, Checks] = {
    FeatureKind.IncomingCall: _CALL,
    FeatureKind.OutgoingCall: _CALL,
    FeatureKind.IncomingSms: _SMS,
    FeatureKind.OutgoingSms: _SMS,
    FeatureKind.WifiHistory: _RANK_DUR,
    FeatureKind.ApplicationHistory: _RANK_DUR,
    FeatureKind.BrowserHistory: _RANK_DUR,
    FeatureKind.ScreenStatus: Checks(duration=True),
}


@dataclass(frozen=True)
class FeatureScorerConfig:
    checks: Mapping[FeatureKind, Checks] = field(
        default_factory=lambda: dict(TABLE_I_CHECKS))
    weight_ranking: float = 1.0
    weight_contacts: float = 1.0
    weight_duration: float = 1.0
    duration_z_cap: float = 3.0
    mu_damp: float = 0.05            # background decay per hour of inactivity
    duration_ewma_alpha: float = 0.2
    duration_min_samples: int = 3

    def __post_init__(self):
        if min(self.weight_ranking, self.weight_contacts, self.weight_duration) < 0:
            raise ScoringConfigError("weights must be non-negative")
        if self.duration_z_cap <= 0:
            raise ScoringConfigError("duration_z_cap must be positive")
        if self.mu_damp < 0:
            raise ScoringConfigError("mu_damp must be non-negative")
        if not 0 < self.duration_ewma_alpha <= 1:
            raise ScoringConfigError("duration_ewma_alpha must lie in (0, 1]")

    def checks_for(self, kind: FeatureKind) -> Checks:
        checks = self.checks.get(kind, Checks())
        if not checks.any():
            raise ScoringConfigError(f"no condition enabled for {kind.name}")
        return checks


# ---------------------------------------------------------------------------
# duration statistics

@dataclass(frozen=True)
class DurationStat:
    mean: float
    var: float
    count: int

    def update(self, x: float, alpha: float) -> "DurationStat":
        d = x - self.mean
        return DurationStat(self.mean + alpha * d,
                            (1 - alpha) * (self.var + alpha * d * d),
                            self.count + 1)


DurationStats = Mapping[tuple[FeatureKind, str], DurationStat]


def duration_subscore(stat: DurationStat | None, duration: int,
                      config: FeatureScorerConfig) -> float:
    """Capped z-score of ``duration`` mapped to [0, 1]."""
    if stat is None or stat.count < config.duration_min_samples:
        return 0.0
    dev = abs(duration - stat.mean)
    if stat.var <= 0:
        z = 0.0 if dev == 0 else math.inf
    else:
        z = dev / math.sqrt(stat.var)
    return min(z, config.duration_z_cap) / config.duration_z_cap


def update_duration(stats: DurationStats, kind: FeatureKind, item: str,
                    duration: int, alpha: float) -> dict:
    out = dict(stats)
    old = out.get((kind, item))
    if old is None:
        out[(kind, item)] = DurationStat(float(duration), 0.0, 1)
    else:
        out[(kind, item)] = old.update(float(duration), alpha)
    return out


def default_ranking_lists(params: RankParams | Mapping[FeatureKind, RankParams] | None = None
                          ) -> dict[FeatureKind, RankingList]:
    """One empty list per ranked feature (every kind but ScreenStatus)."""
    lists = {}
    for kind in FeatureKind:
        if not TABLE_I_CHECKS[kind].ranking:
            continue
        if params is None:
            p = RankParams()
        elif isinstance(params, RankParams):
            p = params
        else:
            p = params.get(kind, RankParams())
        lists[kind] = RankingList(kind, p)
    return lists


def score_event(config: FeatureScorerConfig,
                ranking_lists: Mapping[FeatureKind, RankingList],
                duration_stats: DurationStats,
                contacts,
                event: Event):
    """Anomaly contribution of ``event`` against the profile as it stood.

    Returns ``(contribution, ranking_lists, duration_stats)``; the returned
    profile already includes ``event``.
    """
    if event.is_screen_on:
        return 0.0, ranking_lists, duration_stats
    checks = config.checks_for(event.kind)
    score = 0.0
    if checks.ranking:
        rlist = ranking_lists[event.kind]
        rscore = ranking_score(rlist, event.item, now=event.timestamp)
        score += config.weight_ranking * rscore / rlist.params.mu_rank
        ranking_lists = {**ranking_lists,
                         event.kind: record_occurrence(rlist, event.item, event.timestamp)}
    if checks.contacts and event.item not in contacts:
        score += config.weight_contacts
    if checks.duration:
        key = (event.kind, event.item)
        score += config.weight_duration * duration_subscore(
            duration_stats.get(key), event.duration, config)
        duration_stats = update_duration(duration_stats, event.kind, event.item,
                                         event.duration, config.duration_ewma_alpha)
    return score, ranking_lists, duration_stats


# ---------------------------------------------------------------------------
# windows

class Trigger(enum.Enum):
    ScreenOff = "ScreenOff"
    TimerExpiry = "TimerExpiry"


@dataclass(frozen=True)
class WindowRecord:
    window_end: int
    as_fore: float
    as_back: float
    trigger: Trigger
    window_start: int | None = None

    def to_record(self) -> dict:
        return {"t_end": self.window_end, "as_fore": self.as_fore,
                "as_back": self.as_back, "trigger": self.trigger.value}


def window_lines(windows) -> str:
    return "".join(dumps_record(w.to_record()) + "\n" for w in windows)


@dataclass(frozen=True)
class BackgroundComponent:
    score: float = 0.0
    last_event_time: int = 0


@dataclass(frozen=True)
class SessionState:
    timer_period: float = 300.0
    mu_damp: float = 0.05
    screen_on: bool = False
    window_start: int | None = None
    as_fore_accum: float = 0.0
    last_auth_time: int | None = None
    background: Mapping[FeatureKind, BackgroundComponent] = field(default_factory=dict)

    def damped(self, kind: FeatureKind, now: int) -> float:
        comp = self.background.get(kind)
        if comp is None:
            return 0.0
        idle_hours = (now - comp.last_event_time) / SECONDS_PER_HOUR
        return max(0.0, comp.score - self.mu_damp * idle_hours)

    def as_back(self, now: int) -> float:
        return sum(self.damped(kind, now) for kind in sorted(self.background, key=lambda k: k.value))


def process_event(session: SessionState, contribution: float, event: Event):
    """Advance the window state machine by one scored event.

    Returns ``(session, window)`` where ``window`` is ``None`` unless the
    event closed the screen session or the authentication timer expired.
    """
    t = event.timestamp
    if event.kind in BACKGROUND_KINDS:
        # damp the stored component up to now before adding the new score
        comp = BackgroundComponent(session.damped(event.kind, t) + contribution, t)
        return replace(session, background={**session.background, event.kind: comp}), None

    if event.is_screen_on:
        if session.screen_on:
            log.warning("screen on at %d while already on; ignored", t)
            return session, None
        return replace(session, screen_on=True, window_start=t, last_auth_time=t), None

    if event.is_screen_off:
        if not session.screen_on:
            log.warning("screen off at %d without matching on; ignored", t)
            return session, None
        as_fore = session.as_fore_accum + contribution
        window = WindowRecord(t, as_fore, session.as_back(t), Trigger.ScreenOff,
                              session.window_start)
        return replace(session, screen_on=False, as_fore_accum=0.0,
                       window_start=None, last_auth_time=t), window

    # foreground activity; counted even outside a screen session
    session = replace(session, as_fore_accum=session.as_fore_accum + contribution)
    if session.screen_on and t - session.last_auth_time >= session.timer_period:
        window = WindowRecord(t, session.as_fore_accum, session.as_back(t),
                              Trigger.TimerExpiry, session.window_start)
        return replace(session, last_auth_time=t), window
    return session, None


@dataclass(frozen=True)
class ScoredEvent:
    event: Event
    contribution: float


class Scorer:
    """Mutable convenience wrapper threading the profile and session state."""

    def __init__(self, config: FeatureScorerConfig | None = None,
                 rank_params=None, contacts=frozenset(), timer_period: float = 300.0):
        self.config = config or FeatureScorerConfig()
        self.ranking_lists = default_ranking_lists(rank_params)
        self.duration_stats: dict = {}
        self.contacts = frozenset(contacts)
        self.session = SessionState(timer_period=timer_period, mu_damp=self.config.mu_damp)

    def feed(self, event: Event) -> tuple[float, WindowRecord | None]:
        contribution, self.ranking_lists, self.duration_stats = score_event(
            self.config, self.ranking_lists, self.duration_stats, self.contacts, event)
        self.session, window = process_event(self.session, contribution, event)
        return contribution, window


def score_trace(trace, config: FeatureScorerConfig | None = None, rank_params=None,
                timer_period: float = 300.0):
    """Replay a whole trace; returns ``(scored_events, windows)``."""
    scorer = Scorer(config, rank_params, trace.contact_list, timer_period)
    scored, windows = [], []
    for event in trace.events:
        c, w = scorer.feed(event)
        scored.append(ScoredEvent(event, c))
        if w is not None:
            windows.append(w)
    return scored, windows
