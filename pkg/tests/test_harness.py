import json
from dataclasses import replace

import numpy as np
import pytest

from anfis_auth.anfis import AnfisModel
from anfis_auth.config import parse_experiment
from anfis_auth.events import FeatureKind, SyntheticProfile, generate_trace, serialize_trace
from anfis_auth.harness import (
    AttackError,
    AttackMode,
    AttackSpec,
    EvaluationError,
    StageError,
    evaluate,
    graft_attack,
    recognition_rate,
    run_experiment,
    summarize_log,
    victim_ranking,
)
from anfis_auth.pipeline import Mode, PipelineConfig, parse_decision_log, run_trace

DAY = 86_400


def constant_model(value):
    cons = np.zeros((16, 5))
    cons[:, -1] = value
    return AnfisModel(np.tile([-1.0, 1.0], (4, 1)), np.zeros((4, 2)), cons)


@pytest.fixture(scope="module")
def victim():
    return generate_trace(SyntheticProfile(seed=21, day_count=12, foreground_rate=12))


def _start(victim, day=9, hour=13):
    return victim.events[0].timestamp - victim.events[0].timestamp % DAY + day * DAY + hour * 3600


def _attacker_events(grafted, spec):
    return [e for e in grafted.events
            if spec.start <= e.timestamp < spec.end and e.kind is not FeatureKind.ScreenStatus]


def test_uninformed_items_are_foreign(victim):
    spec = AttackSpec(AttackMode.Uninformed, _start(victim), seed=3)
    grafted = graft_attack(victim, spec)
    seen = victim.between(victim.events[0].timestamp, spec.start).items()
    items = {e.item for e in _attacker_events(grafted, spec)}
    assert items and not items & seen
    assert not items & victim.contact_list


def test_informed_items_come_from_top_k(victim):
    spec = AttackSpec(AttackMode.Informed, _start(victim), knowledge_k=5, seed=4)
    grafted = graft_attack(victim, spec)
    ranking = victim_ranking(victim, spec.start)
    events = _attacker_events(grafted, spec)
    assert events
    for e in events:
        assert e.item in ranking[e.kind].top(5)


def test_graft_deterministic_and_seed_sensitive(victim):
    spec = AttackSpec(AttackMode.Informed, _start(victim), seed=5)
    a, b = graft_attack(victim, spec), graft_attack(victim, spec)
    assert serialize_trace(a) == serialize_trace(b)
    assert serialize_trace(a) != serialize_trace(graft_attack(victim, replace(spec, seed=6)))


def test_graft_leaves_outside_untouched(victim):
    spec = AttackSpec(AttackMode.Uninformed, _start(victim), duration=2.5, seed=7)
    grafted = graft_attack(victim, spec)
    before = [e for e in victim.events if e.timestamp < spec.start]
    after = [e for e in victim.events if e.timestamp >= spec.end]
    g_before = [e for e in grafted.events if e.timestamp < spec.start]
    g_after = [e for e in grafted.events if e.timestamp >= spec.end and not
               (e.timestamp == spec.end and e.is_screen_on)]
    assert g_before == before and g_after == after
    assert grafted.contact_list == victim.contact_list


def test_graft_wraps_activity_in_sessions(victim):
    spec = AttackSpec(AttackMode.Uninformed, _start(victim, hour=20), seed=8)
    grafted = graft_attack(victim, spec)
    on = False
    for e in grafted.events:
        if e.is_screen_on:
            assert not on
            on = True
        elif e.is_screen_off:
            assert on
            on = False
        elif e.kind.is_foreground:
            assert on


def test_graft_rejects_start_outside_trace(victim):
    with pytest.raises(AttackError):
        graft_attack(victim, AttackSpec(AttackMode.Uninformed, victim.events[-1].timestamp + 10))
    with pytest.raises(AttackError):
        AttackSpec(AttackMode.Informed, 0, knowledge_k=0)
    with pytest.raises(AttackError):
        AttackSpec(AttackMode.Uninformed, 0, duration=0)


def test_always_legitimate_model(victim):
    spec = AttackSpec(AttackMode.Uninformed, _start(victim), seed=9)
    report = evaluate(PipelineConfig(), constant_model(1.0), victim, [spec])
    assert report.recognition_rate == 1.0
    assert report.attacks[0].elapsed_minutes is None and not report.attacks[0].detected


def test_always_adversary_model(victim):
    spec = AttackSpec(AttackMode.Informed, _start(victim), seed=10)
    report = evaluate(PipelineConfig(), constant_model(-1.0), victim, [spec])
    assert report.recognition_rate == 0.0
    cfg = PipelineConfig(mode=Mode.Deployment)
    windows, _ = run_trace(cfg, graft_attack(victim, spec), constant_model(-1.0))
    first = min(w.record.window_end for w in windows
                if not w.preparation and w.record.window_end >= spec.start)
    assert report.attacks[0].elapsed_minutes == pytest.approx((first - spec.start) / 60)


def test_evaluate_without_decided_windows():
    short = generate_trace(SyntheticProfile(seed=1, day_count=2))
    with pytest.raises(EvaluationError):
        evaluate(PipelineConfig(), constant_model(1.0), short)
    with pytest.raises(EvaluationError):
        recognition_rate([])


MINIMAL = """
[experiment]
train_start_day = 7
test_start_day = 9

[profile]
seed = 3
day_count = 11
foreground_rate = 12

[anfis]
epochs = 20
"""


def test_minimal_experiment_without_attacks(tmp_path):
    result = run_experiment(parse_experiment(MINIMAL), tmp_path)
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["attacks"] == [] and 0 <= report["recognition_rate"] <= 1
    assert result.class_counts[0] == result.class_counts[-1] == 0


def test_experiment_rerun_byte_identical(tmp_path):
    exp = parse_experiment(MINIMAL)
    run_experiment(exp, tmp_path / "a")
    run_experiment(exp, tmp_path / "b")
    for name in ("report.json", "model.txt", "decisions.log", "trace.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_recognition_rate_recomputable_from_log(tmp_path):
    exp = parse_experiment(MINIMAL)
    result = run_experiment(exp, tmp_path)
    rows = parse_decision_log((tmp_path / "decisions.log").read_text())
    test_start = exp.profile.start + 9 * DAY
    rows = [r for r in rows if r["t"] >= test_start]
    assert summarize_log(rows)["recognition_rate"] == result.report.recognition_rate


def test_stage_tagged_failures(tmp_path):
    bad = parse_experiment(MINIMAL.replace(
        "[experiment]", f"[experiment]\ntrace_path = {tmp_path / 'missing.txt'}"))
    with pytest.raises(StageError, match=r"^\[ingest\]"):
        run_experiment(bad)
    with pytest.raises(StageError, match=r"^\[config\]"):
        run_experiment(tmp_path / "nope.ini")


def test_reference_experiment_regression(reference_result):
    r = reference_result.report
    assert r.recognition_rate == pytest.approx(147 / 161, abs=1e-12)
    assert r.decided_windows == 161
    elapsed = [a.elapsed_minutes for a in r.attacks]
    assert [a.spec.mode for a in r.attacks] == [AttackMode.Uninformed, AttackMode.Informed]
    assert elapsed == pytest.approx([302 / 60, 547 / 60], abs=1e-9)
    assert reference_result.class_counts == {1: 315, 0: 82, -1: 73}
