"""Attack simulation, evaluation metrics and end-to-end experiments."""

from __future__ import annotations

import enum
import json
import logging
import math
import os
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .anfis import AnfisModel, TrainReport, init_model, samples_to_arrays, save_model, train_hybrid
from .events import (
    Event,
    EventTrace,
    FeatureKind,
    screen_off,
    screen_on,
    write_trace,
)
from .pipeline import (
    Decision,
    Mode,
    PipelineConfig,
    Verdict,
    build_dataset,
    format_decision_log,
    run_trace,
)
from .ranklist import RankingList, RankParams, decay_to, record_occurrence

log = logging.getLogger(__name__)

SECONDS_PER_HOUR = 3600


class AttackError(ValueError):
    pass


class EvaluationError(RuntimeError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage


class AttackMode(enum.Enum):
    Informed = "Informed"
    Uninformed = "Uninformed"


@dataclass(frozen=True)
class AttackSpec:
    mode: AttackMode
    start: int
    duration: float = 3.0        # hours
    intensity: float = 20.0      # attacker events per hour of possession
    knowledge_k: int = 5
    seed: int = 0
    session_length: tuple[float, float] = (600.0, 1800.0)
    session_gap: tuple[float, float] = (30.0, 180.0)

    def __post_init__(self):
        if self.duration <= 0:
            raise AttackError("attack duration must be positive")
        if self.intensity < 0:
            raise AttackError("intensity must be non-negative")
        if self.mode is AttackMode.Informed and self.knowledge_k < 1:
            raise AttackError("informed attacks need knowledge_k >= 1")

    @property
    def end(self) -> int:
        return self.start + int(round(self.duration * SECONDS_PER_HOUR))


# share of attacker foreground events per kind
_ATTACK_MIX = (
    (FeatureKind.ApplicationHistory, 0.5),
    (FeatureKind.BrowserHistory, 0.2),
    (FeatureKind.OutgoingCall, 0.15),
    (FeatureKind.OutgoingSms, 0.15),
)

# log-normal (median seconds, sigma) of attacker activity durations
_ATTACK_DURATION = {
    FeatureKind.ApplicationHistory: (600.0, 0.5),
    FeatureKind.BrowserHistory: (420.0, 0.5),
    FeatureKind.OutgoingCall: (15.0, 0.4),
    FeatureKind.WifiHistory: (5400.0, 0.3),
}

_FOREIGN_POOL = {
    FeatureKind.ApplicationHistory: lambda k: f"com.intruder.app{k:02d}",
    FeatureKind.BrowserHistory: lambda k: f"intruder{k:02d}.example.net",
    FeatureKind.OutgoingCall: lambda k: f"+1999000{k:04d}",
    FeatureKind.OutgoingSms: lambda k: f"+1999000{k:04d}",
    FeatureKind.WifiHistory: lambda k: f"FreeWiFi-{k:02d}",
}
_FOREIGN_POOL_SIZE = 15


def victim_ranking(victim: EventTrace, at: int, params: RankParams | None = None
                   ) -> dict[FeatureKind, RankingList]:
    """The victim's ranking lists as they stand at time ``at``."""
    params = params or RankParams()
    lists: dict[FeatureKind, RankingList] = {}
    for e in victim.events:
        if e.timestamp >= at:
            break
        if e.kind is FeatureKind.ScreenStatus:
            continue
        rl = lists.get(e.kind) or RankingList(e.kind, params)
        lists[e.kind] = record_occurrence(rl, e.item, e.timestamp)
    return {k: decay_to(rl, at) for k, rl in lists.items()}


def _screen_on_at(events: Sequence[Event], t: int) -> bool:
    on = False
    for e in events:
        if e.timestamp >= t:
            break
        if e.is_screen_on:
            on = True
        elif e.is_screen_off:
            on = False
    return on


def _item_sources(victim: EventTrace, spec: AttackSpec, params: RankParams | None):
    if spec.mode is AttackMode.Uninformed:
        seen = victim.between(victim.events[0].timestamp, spec.start).items()
        sources = {}
        for kind, name in _FOREIGN_POOL.items():
            pool = [name(k) for k in range(_FOREIGN_POOL_SIZE)]
            sources[kind] = [x for x in pool if x not in seen]
        return sources
    lists = victim_ranking(victim, spec.start, params)
    return {kind: lists[kind].top(spec.knowledge_k)
            for kind in _FOREIGN_POOL if kind in lists and len(lists[kind])}


def _attacker_duration(rng, kind) -> int:
    if kind not in _ATTACK_DURATION:
        return 0
    median, sigma = _ATTACK_DURATION[kind]
    return max(1, int(round(median * rng.lognormal(0.0, sigma))))


def graft_attack(victim: EventTrace, spec: AttackSpec,
                 rank_params: RankParams | None = None) -> EventTrace:
    """Replace the victim's activity in ``[start, end)`` with an intruder's.

    Victim events outside the window are kept untouched. A victim screen
    session cut by the window is closed with an Off at ``start`` and reopened
    with an On at ``end``. Attacker items come from pools disjoint from the
    victim (Uninformed) or uniformly from the victim's top ``knowledge_k``
    ranked items per feature at ``start`` (Informed).
    """
    if not victim.events:
        raise AttackError("cannot graft onto an empty trace")
    first, last = victim.span
    if not first <= spec.start <= last:
        raise AttackError(f"attack start {spec.start} outside trace span [{first}, {last}]")
    start, end = spec.start, spec.end
    rng = np.random.default_rng(spec.seed)
    sources = _item_sources(victim, spec, rank_params)
    fg = [(k, s) for k, s in _ATTACK_MIX if sources.get(k)]
    if not fg:
        raise AttackError("attacker has no items to use")
    kinds = [k for k, _ in fg]
    mix = np.array([s for _, s in fg])
    mix = mix / mix.sum()

    before = [e for e in victim.events if e.timestamp < start]
    after = [e for e in victim.events if e.timestamp >= end]
    grafted = list(before)
    if _screen_on_at(victim.events, start):
        last_on = max(e.timestamp for e in before if e.is_screen_on)
        grafted.append(screen_off(start, start - last_on))

    # first thing the intruder does is join a network
    if sources.get(FeatureKind.WifiHistory):
        wifi = sources[FeatureKind.WifiHistory]
        grafted.append(Event(start, FeatureKind.WifiHistory, wifi[rng.integers(len(wifi))],
                             _attacker_duration(rng, FeatureKind.WifiHistory)))

    t = start
    while t < end - 60:
        length = rng.uniform(*spec.session_length)
        off = int(min(t + length, end - 1))
        grafted.append(screen_on(t))
        n = rng.poisson(spec.intensity * (off - t) / SECONDS_PER_HOUR)
        for ts in np.sort(rng.integers(t + 1, off, size=n)):
            kind = kinds[rng.choice(len(kinds), p=mix)]
            pool = sources[kind]
            item = pool[rng.integers(len(pool))]
            grafted.append(Event(int(ts), kind, item, _attacker_duration(rng, kind)))
        grafted.append(screen_off(off, off - t))
        t = off + int(rng.uniform(*spec.session_gap))

    if _screen_on_at(victim.events, end) and after:
        grafted.append(screen_on(end))
    grafted += after
    return EventTrace(victim.owner, tuple(grafted), victim.contact_list)


# ---------------------------------------------------------------------------
# evaluation

@dataclass
class AttackResult:
    spec: AttackSpec
    elapsed_minutes: float | None
    decisions: list[Decision] = field(default_factory=list)

    @property
    def detected(self) -> bool:
        return self.elapsed_minutes is not None


@dataclass
class EvalReport:
    recognition_rate: float
    decided_windows: int
    attacks: list[AttackResult]
    timeline: list[Decision]

    def summary(self) -> dict:
        return {
            "recognition_rate": self.recognition_rate,
            "decided_windows": self.decided_windows,
            "attacks": [{"mode": a.spec.mode.value, "start": a.spec.start,
                         "duration_hours": a.spec.duration,
                         "elapsed_minutes": a.elapsed_minutes,
                         "attack_windows": len(a.decisions),
                         "adversary_windows": sum(d.verdict is Verdict.Adversary
                                                  for d in a.decisions)}
                        for a in self.attacks],
        }


def recognition_rate(decisions: Sequence[Decision]) -> float:
    if not decisions:
        raise EvaluationError("no decided windows")
    return sum(d.verdict is Verdict.Legitimate for d in decisions) / len(decisions)


def elapsed_to_detection(decisions: Sequence[Decision], start: int,
                         end: int | None = None) -> float | None:
    """Minutes from ``start`` to the first Adversary verdict in ``[start, end]``."""
    for d in decisions:
        if d.window_end < start or (end is not None and d.window_end > end):
            continue
        if d.verdict is Verdict.Adversary:
            return (d.window_end - start) / 60.0
    return None


def evaluate(config: PipelineConfig, model: AnfisModel, legit_test: EventTrace,
             attacks: Sequence[AttackSpec] = (), test_start: int | None = None) -> EvalReport:
    """Recognition rate on the owner's trace and time-to-detection per attack.

    ``legit_test`` may include earlier history (it keeps the profile warm);
    only windows ending at or after ``test_start`` are scored.
    """
    config = replace(config, mode=Mode.Deployment)
    _, decisions = run_trace(config, legit_test, model)
    if test_start is not None:
        decisions = [d for d in decisions if d.window_end >= test_start]
    rate = recognition_rate(decisions)
    results = []
    for spec in attacks:
        grafted = graft_attack(legit_test, spec, _single_params(config))
        _, att = run_trace(config, grafted, model)
        in_attack = [d for d in att if spec.start <= d.window_end <= spec.end]
        results.append(AttackResult(spec, elapsed_to_detection(att, spec.start, spec.end),
                                    in_attack))
    return EvalReport(rate, len(decisions), results, decisions)


def _single_params(config: PipelineConfig) -> RankParams | None:
    return config.rank_params if isinstance(config.rank_params, RankParams) else None


# ---------------------------------------------------------------------------
# experiments

def train_model(config: PipelineConfig, legit, suspicious=(), adversary=()):
    samples = build_dataset(config, legit, suspicious, adversary)
    X, y = samples_to_arrays(samples)
    a = config.anfis
    model = init_model(X, a.mfs_per_input)
    model, report = train_hybrid(model, X, y, epochs=a.epochs, learning_rate=a.learning_rate,
                                 tol=a.tol, ridge=a.ridge, refine=a.refine)
    return model, report, samples


def attack_span(spec: AttackSpec) -> tuple[int, int]:
    return spec.start, spec.end


def training_sets(config: PipelineConfig, trace: EventTrace, attacks: Sequence[AttackSpec]):
    """Informed grafts become the suspicious class, uninformed the adversary class."""
    params = _single_params(config)
    suspicious, adversary = [], []
    for spec in attacks:
        grafted = graft_attack(trace, spec, params)
        target = suspicious if spec.mode is AttackMode.Informed else adversary
        target.append((grafted, spec.start, spec.end))
    return suspicious, adversary


@dataclass
class ExperimentResult:
    report: EvalReport
    model: AnfisModel
    train_report: TrainReport
    class_counts: dict[int, int]


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except Exception as exc:
        raise StageError(name, exc) from exc


def run_experiment(experiment, out_dir: str | os.PathLike | None = None) -> ExperimentResult:
    """Generate or load a trace, train on the early split, evaluate on the late one.

    ``experiment`` is an :class:`~anfis_auth.config.Experiment` or a path to
    an INI file. When ``out_dir`` (or the config's ``out``) is set, the trace,
    model, decision logs and ``report.json`` are written there.
    """
    from .config import Experiment, load_experiment
    from .events import generate_trace, read_trace

    if not isinstance(experiment, Experiment):
        experiment = _stage("config", load_experiment, experiment)
    exp = experiment
    config = exp.pipeline
    if exp.trace_path:
        trace = _stage("ingest", read_trace, exp.trace_path)
    else:
        trace = _stage("generate", generate_trace, exp.profile)
    origin = exp.origin(trace)
    train_start = origin + int(exp.train_start_day * 86_400)
    test_start = origin + int(exp.test_start_day * 86_400)
    train_attacks = exp.attacks_for("train", origin)
    test_attacks = exp.attacks_for("test", origin)

    suspicious, adversary = _stage("graft", training_sets, config, trace, train_attacks)
    legit = (trace, train_start - 1, test_start - 1)
    model, train_report, samples = _stage("train", train_model, config, legit,
                                          suspicious, adversary)
    report = _stage("evaluate", evaluate, config, model, trace, test_attacks, test_start)

    counts = {label: sum(s.target == label for s in samples) for label in (1, 0, -1)}
    out_dir = out_dir or exp.out_dir
    if out_dir:
        _stage("write", write_artifacts, out_dir, trace, model, train_report, report,
               counts, config)
    return ExperimentResult(report, model, train_report, counts)


def report_json(report: EvalReport, train_report: TrainReport | None = None,
                class_counts: dict | None = None) -> str:
    doc = report.summary()
    if train_report is not None:
        doc["train"] = {"final_rmse": train_report.final_rmse,
                        "epochs_run": train_report.epochs_run,
                        "converged": train_report.converged}
    if class_counts is not None:
        doc["class_counts"] = {str(k): v for k, v in sorted(class_counts.items())}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_artifacts(out_dir, trace, model, train_report, report, counts, config) -> None:
    os.makedirs(out_dir, exist_ok=True)
    write_trace(trace, os.path.join(out_dir, "trace.txt"))
    save_model(model, os.path.join(out_dir, "model.txt"))
    deploy = replace(config, mode=Mode.Deployment)
    windows, decisions = run_trace(deploy, trace, model)
    with open(os.path.join(out_dir, "decisions.log"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_decision_log(windows, decisions))
    for i, a in enumerate(report.attacks):
        grafted = graft_attack(trace, a.spec, _single_params(config))
        w, d = run_trace(deploy, grafted, model)
        path = os.path.join(out_dir, f"attack{i}_{a.spec.mode.value.lower()}.log")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(format_decision_log(w, d))
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(report_json(report, train_report, counts))


def summarize_log(rows: Sequence[dict]) -> dict:
    """Verdict counts and recognition rate recomputed from a decision log."""
    counts = {v.value: 0 for v in Verdict}
    for r in rows:
        counts[r["verdict"]] += 1
    total = len(rows)
    return {"windows": total, "verdicts": counts,
            "recognition_rate": counts["Legitimate"] / total if total else math.nan}
