"""Scoring, reference tracking and ANFIS decisions wired into one replay."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .anfis import AnfisModel, TrainingSample, predict
from .events import EventTrace, FeatureKind, dumps_record
from .ranklist import RankParams
from .reference import EsbState, esb_update
from .scoring import FeatureScorerConfig, Scorer, WindowRecord


class PipelineConfigError(ValueError):
    pass


class DatasetError(ValueError):
    pass


class Mode(enum.Enum):
    Training = "Training"
    Deployment = "Deployment"


class Verdict(enum.Enum):
    Legitimate = "Legitimate"
    Suspicious = "Suspicious"
    Adversary = "Adversary"


LABELS = {Verdict.Legitimate: 1, Verdict.Suspicious: 0, Verdict.Adversary: -1}


@dataclass(frozen=True)
class AnfisParams:
    mfs_per_input: int = 2
    epochs: int = 200
    learning_rate: float = 0.01
    tol: float = 1e-6
    ridge: float = 1e-8
    refine: int = 2


@dataclass(frozen=True)
class PipelineConfig:
    scorer: FeatureScorerConfig = field(default_factory=FeatureScorerConfig)
    rank_params: RankParams | Mapping[FeatureKind, RankParams] = field(default_factory=RankParams)
    prep_len_days: float = 7.0
    block_size: int = 7
    ewma_alpha: float = 0.2
    anfis: AnfisParams = field(default_factory=AnfisParams)
    timer_period: float = 300.0
    mode: Mode = Mode.Training

    def esb(self) -> EsbState:
        return EsbState(self.prep_len_days, self.block_size, self.ewma_alpha)


@dataclass(frozen=True)
class AuthInputs:
    as_fore: float
    ard_fore: float
    as_back: float
    ard_back: float

    @classmethod
    def from_refs(cls, as_fore, ref_fore, as_back, ref_back) -> "AuthInputs":
        return cls(as_fore, as_fore - ref_fore, as_back, as_back - ref_back)

    def vector(self) -> tuple[float, float, float, float]:
        return (self.as_fore, self.ard_fore, self.as_back, self.ard_back)


@dataclass(frozen=True)
class Decision:
    window_end: int
    threat_level: float
    verdict: Verdict


def verdict_for(threat_level: float) -> Verdict:
    """Nearest of +1/0/-1; a value exactly on +-0.5 goes to the worse class."""
    if threat_level > 0.5:
        return Verdict.Legitimate
    if threat_level > -0.5:
        return Verdict.Suspicious
    return Verdict.Adversary


def decide(model: AnfisModel, inputs: AuthInputs, window_end: int = 0) -> Decision:
    threat = predict(model, np.array(inputs.vector()))
    return Decision(window_end, threat, verdict_for(threat))


@dataclass(frozen=True)
class Window:
    """One emitted window with its references; ``inputs`` is None while the
    reference streams are still in preparation."""

    record: WindowRecord
    ref_fore: float | None
    ref_back: float | None
    inputs: AuthInputs | None

    @property
    def preparation(self) -> bool:
        return self.inputs is None


def replay_windows(config: PipelineConfig, trace: EventTrace) -> list[Window]:
    scorer = Scorer(config.scorer, config.rank_params, trace.contact_list,
                    config.timer_period)
    start = trace.events[0].timestamp if trace.events else None
    fore = EsbState(config.prep_len_days, config.block_size, config.ewma_alpha, prep_start=start)
    back = EsbState(config.prep_len_days, config.block_size, config.ewma_alpha, prep_start=start)
    out = []
    for event in trace.events:
        _, record = scorer.feed(event)
        if record is None:
            continue
        fore, ref_f = esb_update(fore, record.as_fore, record.window_end)
        back, ref_b = esb_update(back, record.as_back, record.window_end)
        inputs = None
        if ref_f is not None and ref_b is not None:
            inputs = AuthInputs.from_refs(record.as_fore, ref_f, record.as_back, ref_b)
        out.append(Window(record, ref_f, ref_b, inputs))
    return out


def run_trace(config: PipelineConfig, trace: EventTrace, model: AnfisModel | None = None):
    """Replay ``trace``; returns ``(windows, decisions)``.

    Decisions are produced only in Deployment mode, one per post-preparation
    window.
    """
    if config.mode is Mode.Deployment and model is None:
        raise PipelineConfigError("Deployment mode needs a trained model")
    windows = replay_windows(config, trace)
    decisions = []
    if config.mode is Mode.Deployment:
        decided = [w for w in windows if not w.preparation]
        if decided:
            X = np.array([w.inputs.vector() for w in decided])
            threats = predict(model, X)
            decisions = [Decision(w.record.window_end, float(t), verdict_for(float(t)))
                         for w, t in zip(decided, threats)]
    return windows, decisions


# A labelled trace is either a whole trace or (trace, start, end): only
# windows ending in (start, end] are used from the latter.
LabelledTrace = EventTrace | tuple[EventTrace, int, int]


def _windows_in(config, item: LabelledTrace) -> list[Window]:
    if isinstance(item, tuple):
        trace, start, end = item
    else:
        trace, start, end = item, None, None
    ws = [w for w in replay_windows(config, trace) if not w.preparation]
    if start is not None:
        ws = [w for w in ws if start < w.record.window_end <= end]
    return ws


def build_dataset(config: PipelineConfig, legit_trace: LabelledTrace,
                  suspicious_traces: Sequence[LabelledTrace] = (),
                  adversary_traces: Sequence[LabelledTrace] = ()) -> list[TrainingSample]:
    samples = []
    for label, group in ((1, [legit_trace]), (0, suspicious_traces), (-1, adversary_traces)):
        for item in group:
            ws = _windows_in(config, item)
            if not ws:
                raise DatasetError(f"no post-preparation windows for label {label:+d}")
            samples += [TrainingSample(w.inputs.vector(), label) for w in ws]
    return samples


# ---------------------------------------------------------------------------
# decision log

def decision_rows(windows: Sequence[Window], decisions: Sequence[Decision]) -> list[dict]:
    by_end = {}
    for w in windows:
        if not w.preparation:
            by_end.setdefault(w.record.window_end, []).append(w)
    rows = []
    used: dict[int, int] = {}
    for d in decisions:
        k = used.get(d.window_end, 0)
        w = by_end[d.window_end][k]
        used[d.window_end] = k + 1
        rows.append({"t": d.window_end, "as_fore": w.inputs.as_fore,
                     "as_back": w.inputs.as_back, "ard_fore": w.inputs.ard_fore,
                     "ard_back": w.inputs.ard_back, "threat": d.threat_level,
                     "verdict": d.verdict.value})
    return rows


def format_decision_log(windows, decisions) -> str:
    return "".join(dumps_record(r) + "\n" for r in decision_rows(windows, decisions))


def parse_decision_log(text: str) -> list[dict]:
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def reference_rows(windows: Sequence[Window]) -> list[dict]:
    return [{"t": w.record.window_end, "ref_fore": w.ref_fore, "ref_back": w.ref_back}
            for w in windows if not w.preparation]
