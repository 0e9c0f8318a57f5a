import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arcpt.distance import config_distance
from arcpt.harness import builtin_scenario, simulate_replicate
from arcpt.segmentation import (
    SegmentationParams,
    binary_segment,
    default_wbs_intervals,
    sample_intervals,
    wbs,
)
from arcpt.series import ArModel, ChangepointConfig, StepMeanFunction, simulate_ar


def shifted(n, tau, delta, phi=(), seed=0):
    mean = StepMeanFunction(ChangepointConfig((tau,)), (0.0, delta))
    return simulate_ar(ArModel(phi), mean, n, seed).values


def noise(n, phi, seed):
    return simulate_ar(ArModel(phi), None, n, seed).values


# ---------------------------------------------------------------- params and intervals

def test_min_length_rules():
    assert SegmentationParams().min_length(1) == 10
    assert SegmentationParams().min_length(12) == 14
    assert SegmentationParams(min_segment_length=5).min_length(3) == 5
    with pytest.raises(ValueError):
        SegmentationParams(min_segment_length=3).min_length(2)


def test_default_interval_count():
    assert default_wbs_intervals(500, 10) == 5000
    full = default_wbs_intervals(100, 10, cap=None)
    assert full == int(np.ceil(9 * 100**2 * np.log(100**2 / 10) / 100))


def test_sample_intervals_empty_and_errors():
    assert sample_intervals(100, 0, 10, 0).shape == (0, 2)
    with pytest.raises(ValueError):
        sample_intervals(10, 5, 11, 0)


@given(st.integers(20, 400), st.integers(1, 300), st.integers(4, 20), st.integers(0, 2**32 - 1))
@settings(max_examples=50)
def test_sample_intervals_constraints(n, M, min_len, seed):
    iv = sample_intervals(n, M, min_len, seed)
    assert iv.shape == (M, 2)
    assert np.all(iv[:, 1] - iv[:, 0] >= min_len)
    assert np.all(iv[:, 0] >= 0) and np.all(iv[:, 1] <= n)
    np.testing.assert_array_equal(iv, sample_intervals(n, M, min_len, seed))


def test_sample_intervals_cover_admissible_pairs():
    iv = sample_intervals(12, 20_000, 8, 1)
    pairs = {(s, e) for s in range(13) for e in range(13) if e - s >= 8}
    seen = set(map(tuple, iv.tolist()))
    assert seen == pairs
    counts = np.array([np.sum((iv[:, 0] == s) & (iv[:, 1] == e)) for s, e in pairs])
    assert counts.min() > 0.7 * counts.mean()


def test_too_short():
    for method in (binary_segment, wbs):
        with pytest.raises(ValueError):
            method(np.arange(20.0), 1)


# ---------------------------------------------------------------- structure

@pytest.mark.parametrize("method", [binary_segment, wbs])
@pytest.mark.parametrize("seed", range(5))
def test_spacing_and_order(method, seed):
    x, _, _ = simulate_replicate(builtin_scenario("alternating-9", delta=1.5), seed)
    params = SegmentationParams(min_segment_length=15, seed=seed)
    taus = np.array(method(x, 1, params).config.taus)
    if len(taus):
        assert np.all(np.diff(taus) >= 15)
        assert taus[0] >= 15 and 500 - taus[-1] >= 15


def test_deterministic():
    x = shifted(300, 150, 1.5, (0.5,), 2)
    assert binary_segment(x, 1) == binary_segment(x, 1)
    p = SegmentationParams(seed=7)
    assert wbs(x, 1, p) == wbs(x, 1, p)


def test_wbs_threshold_monotone():
    for seed in range(10):
        x, _, _ = simulate_replicate(builtin_scenario("alternating-9", delta=1.0), seed)
        counts = [wbs(x, 1, SegmentationParams(wbs_constant=c, wbs_intervals=500, seed=seed)).config.m
                  for c in (0.6, 0.9, 1.3, 2.0, 3.0)]
        assert all(a >= b for a, b in zip(counts, counts[1:]))


# ---------------------------------------------------------------- Monte Carlo behaviour

def one_shift_counts(method, delta, alpha, p):
    exact, near = 0, 0
    for seed in range(200):
        x = shifted(500, 250, delta, (), seed)
        taus = method(x, p, SegmentationParams(alpha=alpha, seed=seed)).config.taus
        exact += len(taus) == 1
        near += any(abs(t - 250) <= 10 for t in taus)
    return exact, near


@pytest.mark.parametrize("delta", [3.0, 5.0])
def test_bs_single_shift(delta):
    # the shift is always found; each of the two child segments is then
    # retested at level alpha, so exactly one split has probability ~(1 - alpha)^2
    exact, near = one_shift_counts(binary_segment, delta, 0.05, 1)
    assert near == 200
    assert 0.84 <= exact / 200 <= 0.96
    exact, near = one_shift_counts(binary_segment, delta, 0.01, 1)
    assert near == 200 and exact >= 190


def test_wbs_large_shift_gives_one_changepoint():
    exact, near = one_shift_counts(wbs, 5.0, 0.05, 0)
    assert exact >= 198 and near == 200


def test_bs_size_iid():
    fp = np.mean([binary_segment(noise(500, (), s), 0).config.m > 0 for s in range(300)])
    assert fp <= 0.09


def test_wbs_false_positives_exceed_bs():
    seeds = range(200)
    bs = sum(binary_segment(noise(500, (0.5,), s), 1).config.m > 0 for s in seeds)
    w = sum(wbs(noise(500, (0.5,), s), 1, SegmentationParams(seed=s)).config.m > 0 for s in seeds)
    assert w > bs


def test_wbs_beats_bs_on_nine_shifts():
    spec = builtin_scenario("alternating-9", delta=2.0)
    d_bs, d_w = [], []
    for r in range(200):
        x, truth, _ = simulate_replicate(spec, r)
        d_bs.append(config_distance(binary_segment(x, 1).config, truth, 500))
        d_w.append(config_distance(wbs(x, 1, SegmentationParams(seed=r)).config, truth, 500))
    assert np.mean(d_w) < np.mean(d_bs)
