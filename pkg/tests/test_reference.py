import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anfis_auth.reference import EsbState, Phase, esb_update, ewma_step, mean_minus_std

from oracles import population_mean_minus_std

DAY = 86_400


def _prepare(scores, prep_days=1.0, **kw):
    """Feed ``scores`` inside the preparation period, then one trigger score."""
    state = EsbState(prep_len_days=prep_days, prep_start=0, **kw)
    for k, s in enumerate(scores):
        state, ref = esb_update(state, s, k)
        assert ref is None
    return esb_update(state, 999.0, int(prep_days * DAY))


def test_preparation_mean_minus_population_std():
    state, ref = _prepare([1, 2, 3, 4])
    assert ref == pytest.approx(2.5 - 1.118033988749895, abs=1e-9)
    assert round(ref, 4) == 1.3820
    assert ref == pytest.approx(population_mean_minus_std([1, 2, 3, 4]), abs=1e-12)
    assert state.phase is Phase.Ready


def test_trigger_score_not_in_preparation_set():
    state, _ = _prepare([5.0, 5.0])
    assert state.prep_scores == (5.0, 5.0) and state.ref == 5.0


def test_fewer_than_two_scores_use_mean():
    assert _prepare([3.0])[1] == 3.0
    assert mean_minus_std([]) == 0.0


def test_block_update():
    state = EsbState(block_size=3, phase=Phase.Ready, ref=10.0)
    for s in (10.0, 20.0, 30.0):
        state, ref = esb_update(state, s, 0)
        assert ref == 10.0
    state, ref = esb_update(state, 7.0, 0)
    assert ref == pytest.approx(12.0, abs=1e-9)
    # the triggering score opens the next block
    assert (state.block_sum, state.block_count) == (7.0, 1)


def test_ewma_step():
    assert ewma_step(10.0, 20.0, 0.2) == pytest.approx(12.0, abs=1e-12)


def test_state_validation():
    with pytest.raises(ValueError):
        EsbState(ewma_alpha=0.0)
    with pytest.raises(ValueError):
        EsbState(block_size=0)
    with pytest.raises(ValueError):
        EsbState(phase=Phase.Ready)


@settings(max_examples=100, deadline=None)
@given(st.floats(-50, 50), st.integers(1, 20), st.integers(1, 9), st.floats(0.01, 1.0))
def test_constant_stream_fixed_point(c, n_prep, b, alpha):
    state = EsbState(prep_len_days=1.0, block_size=b, ewma_alpha=alpha, prep_start=0)
    for k in range(n_prep):
        state, _ = esb_update(state, c, k)
    t = DAY
    for _ in range(5 * b + 3):
        state, ref = esb_update(state, c, t)
        t += 60
        assert ref == pytest.approx(c, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=1, max_size=50))
def test_bootstrap_matches_statistics_module(scores):
    assert mean_minus_std(scores) == pytest.approx(population_mean_minus_std(scores), abs=1e-9)
