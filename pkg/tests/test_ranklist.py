import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anfis_auth.events import FeatureKind
from anfis_auth.ranklist import (
    RankEntry,
    RankingList,
    RankParams,
    TimeTravelError,
    adjusted_max,
    decay_to,
    dump_snapshot,
    load_snapshot,
    ranking_score,
    record_occurrence,
)

from oracles import rank_score, replay_ranking

APP = FeatureKind.ApplicationHistory


def _list(params=None, *hits):
    rl = RankingList(APP, params or RankParams())
    for t, item in hits:
        rl = record_occurrence(rl, item, t)
    return rl


def _fixed(vals, params=None):
    entries = tuple(RankEntry(f"i{k}", v, 0) for k, v in enumerate(vals))
    return RankingList(APP, params or RankParams(), entries)


def test_first_occurrence():
    rl = _list(RankParams(alpha=1.0, beta=0.5), (0, "A"))
    assert rl.entries == (RankEntry("A", 1.5, 0, 1),)


def test_repeat_occurrence_two_hours_later():
    rl = _list(RankParams(alpha=1.0, beta=0.5, lam=0.1), (0, "A"), (7200, "A"))
    assert rl.entries[0].val == pytest.approx(1.8, abs=1e-12)
    assert rl.entries[0].occ == 2


def test_other_entries_decay_and_advance():
    p = RankParams(alpha=1.0, beta=0.5, lam=0.1)
    rl = _list(p, (0, "A"), (3600, "B"))
    a = rl.get("A")
    assert a.val == pytest.approx(1.4) and a.last_update == 3600


def test_expired_item_returns_fresh():
    p = RankParams(alpha=1.0, beta=0.5, lam=1.0)
    rl = _list(p, (0, "A"), (2 * 3600, "A"))
    assert rl.entries == (RankEntry("A", 1.5, 7200, 1),)


def test_truncation_keeps_top_n():
    p = RankParams(lam=0.0, top_n=3)
    rl = _list(p, (0, "A"), (0, "A"), (0, "A"), (1, "B"), (1, "B"), (2, "C"), (3, "D"))
    assert len(rl) == 3
    assert rl.top(2) == ["A", "B"]


def test_time_travel_rejected():
    rl = _list(None, (100, "A"))
    with pytest.raises(TimeTravelError):
        record_occurrence(rl, "B", 50)


def test_param_validation():
    with pytest.raises(ValueError):
        RankParams(beta=0)
    with pytest.raises(ValueError):
        RankParams(top_n=0)


def test_brute_force_replay_equivalence(sequences=30, seed=1234):
    rng = random.Random(seed)
    for _ in range(sequences):
        n_items = rng.randint(1, 50)
        n_events = rng.randint(1, 1000)
        p = RankParams(alpha=rng.uniform(0, 2), beta=rng.uniform(0.05, 1.0),
                       lam=rng.choice([0.0, rng.uniform(0, 0.5)]),
                       top_n=rng.choice([3, 10, 30, 60]))
        t = 0
        events = []
        for _ in range(n_events):
            t += int(rng.expovariate(1 / 1800)) if rng.random() < 0.9 else 0
            events.append((t, f"x{rng.randint(0, n_items - 1)}"))
        expected = replay_ranking(events, p.alpha, p.beta, p.lam, p.top_n)
        rl = RankingList(APP, p)
        for (t, item), want in zip(events, expected):
            rl = record_occurrence(rl, item, t)
            _assert_same_list(rl, want)


def _assert_same_list(rl, want):
    oracle = {item: (val, occ) for item, val, occ in want}
    assert {e.item for e in rl.entries} == set(oracle)
    for e in rl.entries:
        assert e.occ == oracle[e.item][1]
        assert abs(e.val - oracle[e.item][0]) <= 1e-9
    # order must agree except among values equal to within rounding noise
    vals = [oracle[e.item][0] for e in rl.entries]
    assert all(a >= b - 1e-9 for a, b in zip(vals, vals[1:]))


# score table -----------------------------------------------------------------

def test_score_empty_list():
    assert ranking_score(_fixed([]), "x") == 0.0


@pytest.mark.parametrize("vals", [[2.0], [2.0, 1.0]])
def test_score_short_list_absent(vals):
    assert ranking_score(_fixed(vals, RankParams(mu_rank=2.0)), "zz") == 1.0


@pytest.mark.parametrize("vals, item", [([2.0], "i0"), ([2.0, 1.0], "i0"), ([2.0, 1.0], "i1")])
def test_score_short_list_present(vals, item):
    assert ranking_score(_fixed(vals), item) == 0.0


def test_score_long_list_absent():
    assert ranking_score(_fixed([3, 2, 1], RankParams(mu_rank=1.7)), "zz") == 1.7


def test_score_top_item_zero():
    assert ranking_score(_fixed([3, 2, 1]), "i0") == 0.0


def test_score_in_list_value():
    p = RankParams(mu_rank=1.0, c_sig=1.0, b_sig=5.0)
    # len 4, item at index 3 with val 2 between vmax 4 and vmin 1
    rl = _fixed([4.0, 3.0, 2.0, 1.0], p)
    mu_adj = 1 / (1 + math.exp(1.0))
    want = mu_adj / 2 * ((2 / 4) ** 2 + ((4 - 2) / 3) ** 2)
    assert ranking_score(rl, "i2") == pytest.approx(want, abs=1e-12)


def test_score_equal_values_drop_value_term():
    rl = _fixed([1.0, 1.0, 1.0, 1.0])
    mu_adj = adjusted_max(4, rl.params)
    assert ranking_score(rl, "i3") == pytest.approx(mu_adj / 2 * (3 / 4) ** 2, abs=1e-15)


def test_score_bottom_item_of_long_list():
    rl = _fixed([5.0, 4.0, 3.0, 2.0, 1.0])
    # len == b_sig gives mu/2, bottom item maxes the value term
    assert ranking_score(rl, "i4") == pytest.approx(0.25 * ((4 / 5) ** 2 + 1))


def test_score_decays_before_scoring():
    p = RankParams(lam=1.0)
    rl = _list(p, (0, "A"), (0, "B"))
    assert ranking_score(rl, "A", now=2 * 3600) == 0.0  # both expired -> empty


def test_adjusted_max_examples():
    p = RankParams(mu_rank=1.0, c_sig=1.0, b_sig=5.0)
    assert adjusted_max(5, p) == pytest.approx(0.5, abs=1e-15)
    assert adjusted_max(7, p) == pytest.approx(0.8807970779778823, abs=1e-12)
    assert adjusted_max(int(5 + 10 / 1.0), p) > 0.99
    assert math.isfinite(adjusted_max(-10**6, p)) and adjusted_max(10**6, p) == 1.0


events_strategy = st.lists(
    st.tuples(st.integers(0, 20_000), st.integers(0, 12)), min_size=0, max_size=80)


@settings(max_examples=200, deadline=None)
@given(events_strategy, st.integers(0, 14), st.floats(0.1, 5.0),
       st.floats(0.0, 0.5), st.floats(0.1, 3.0), st.floats(0, 10))
def test_score_bounds_and_oracle(steps, probe, mu, lam, c, b):
    p = RankParams(lam=lam, mu_rank=mu, c_sig=c, b_sig=b)
    rl = RankingList(APP, p)
    t = 0
    rows = []
    for dt, k in steps:
        t += dt
        rl = record_occurrence(rl, f"x{k}", t)
    rows = [(e.item, e.val) for e in rl.entries]
    s = ranking_score(rl, f"x{probe}")
    assert 0.0 <= s <= mu
    assert s == pytest.approx(rank_score(rows, f"x{probe}", mu, c, b), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 200), st.floats(0.01, 5.0), st.floats(-20, 20))
def test_adjusted_max_monotone_in_length(n, c, b):
    p = RankParams(c_sig=c, b_sig=b)
    assert 0 <= adjusted_max(n, p) <= adjusted_max(n + 1, p) <= p.mu_rank


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.01, 100.0), min_size=3, max_size=20), st.floats(0.1, 5.0))
def test_score_weakly_increasing_in_index(vals, mu):
    rl = _fixed(sorted(vals, reverse=True), RankParams(mu_rank=mu))
    scores = [ranking_score(rl, e.item) for e in rl.entries]
    assert all(a <= b for a, b in zip(scores, scores[1:]))


def test_decay_to_is_lazy_and_exact():
    p = RankParams(lam=0.5)
    rl = _list(p, (0, "A"))
    assert decay_to(rl, 3600).entries[0].val == pytest.approx(1.0)
    assert decay_to(rl, 3 * 3600).entries == ()


def test_snapshot_round_trip():
    p = RankParams(alpha=0.3, beta=0.7, lam=0.01, top_n=5)
    rl = _list(p, (0, "A"), (10, "B"), (20, "A"), (30, "C"))
    empty = RankingList(FeatureKind.WifiHistory, RankParams())
    assert load_snapshot(dump_snapshot([rl, empty])) == [rl, empty]
