import csv
import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arcpt.harness import builtin_scenario, simulate_replicate
from arcpt.penalized import (
    Criterion,
    GaParams,
    batch_objective,
    bits_to_config,
    config_sigma2,
    config_to_bits,
    cost_scale,
    exhaustive_search,
    ga_search,
    local_search,
    objective,
    penalty,
    polish,
    repair,
)
from arcpt.series import ArModel, ChangepointConfig, ar_filter, fit_ar_differenced, simulate_ar

CRITERIA = list(Criterion)


def configs(n, max_m=4):
    return st.lists(st.integers(1, n - 1), max_size=max_m, unique=True).map(
        lambda v: ChangepointConfig(tuple(sorted(v))))


# ---------------------------------------------------------------- penalties

def test_penalty_examples():
    assert penalty("bic", ChangepointConfig(), 500) == pytest.approx(2 * math.log(500))
    assert penalty("mbic", ChangepointConfig(), 500) == 0.0
    assert penalty("mdl", ChangepointConfig(), 500) == 0.0
    assert penalty("aic", ChangepointConfig(), 500) == 6.0
    mdl = penalty("mdl", ChangepointConfig((100, 200)), 300)
    assert mdl == pytest.approx(math.log(2) + 1.5 * math.log(100) + math.log(200))
    assert mdl == pytest.approx(12.90, abs=5e-3)


def test_penalty_mbic_by_hand():
    c = ChangepointConfig((50, 400))
    expected = 1.5 * 2 * math.log(500) + 0.5 * (math.log(0.1) + math.log(0.7) + math.log(0.2))
    assert penalty("mbic", c, 500) == pytest.approx(expected)
    assert penalty("mbic", ChangepointConfig((1,)), 500) < penalty("mbic", ChangepointConfig((250,)), 500)


def test_mdl_single_changepoint_drops_log_m():
    assert penalty("mdl", ChangepointConfig((40,)), 100) == pytest.approx(0.5 * math.log(40 * 60))


def test_penalty_zero_length_regime():
    with pytest.raises(ValueError):
        penalty("bic", ChangepointConfig((100,)), 100)


@pytest.mark.parametrize("crit", ["aic", "bic"])
def test_penalty_increasing_in_m(crit):
    values = [penalty(crit, ChangepointConfig(tuple(range(10, 10 * m + 1, 10))), 200) for m in range(8)]
    assert np.all(np.diff(values) > 0)


def test_cost_scale():
    assert cost_scale(Criterion.BIC, 500) == 500
    assert cost_scale(Criterion.MDL, 500) == 250


# ---------------------------------------------------------------- objective

def test_objective_closed_form_m0():
    x = simulate_ar(ArModel(()), None, 200, 1).values
    expected = 200 * math.log(np.var(x)) + 2 * math.log(200)
    assert objective(x, ChangepointConfig(), "bic", ArModel(())) == pytest.approx(expected)


def test_objective_decomposes():
    x = simulate_ar(ArModel((0.5,)), None, 300, 2).values
    model = ArModel((0.5,))
    c = ChangepointConfig((60, 150))
    y = x.copy()
    for s, e in ((0, 60), (60, 150), (150, 300)):
        y[s:e] -= x[s:e].mean()
    z = ar_filter(y, np.array([0.5]))
    s2 = np.mean(z * z)
    assert config_sigma2(x, c, model) == pytest.approx(s2, rel=1e-12)
    for crit in CRITERIA:
        total = objective(x, c, crit, model)
        assert total == pytest.approx(cost_scale(crit, 300) * math.log(s2) + penalty(crit, c, 300), abs=1e-10)


@given(st.data())
@settings(max_examples=60, deadline=None)
def test_batch_matches_scalar(data):
    n = data.draw(st.integers(8, 60))
    phi = data.draw(st.sampled_from([(), (0.4,), (0.5, -0.2)]))
    seed = data.draw(st.integers(0, 10_000))
    x = simulate_ar(ArModel(phi), None, n, seed).values
    cs = data.draw(st.lists(configs(n), min_size=1, max_size=6))
    crit = data.draw(st.sampled_from(CRITERIA))
    bits = np.array([config_to_bits(c, n) for c in cs])
    fast = batch_objective(x, bits, crit, phi)
    slow = [objective(x, c, crit, ArModel(phi)) for c in cs]
    np.testing.assert_allclose(fast, slow, rtol=1e-9, atol=1e-9)


def test_bits_roundtrip():
    c = ChangepointConfig((3, 7, 19))
    bits = config_to_bits(c, 20)
    assert bits.shape == (19,) and bits.sum() == 3 and bits[2]
    assert bits_to_config(bits) == c


def test_zero_variance_rows_rank_last():
    x = np.r_[np.zeros(5), np.ones(5)]
    bits = np.array([config_to_bits(ChangepointConfig((5,)), 10), np.zeros(9, bool)])
    vals = batch_objective(x, bits, "bic", ())
    assert vals[0] == np.inf and np.isfinite(vals[1])
    with pytest.raises(ValueError):
        objective(x, ChangepointConfig((5,)), "bic", ArModel(()))


def test_true_config_beats_empty():
    spec = builtin_scenario("alternating-3", delta=3.0)
    wins = 0
    for r in range(100):
        x, truth, _ = simulate_replicate(spec, r)
        model = fit_ar_differenced(x, 1)
        wins += objective(x, truth, "bic", model) < objective(x, ChangepointConfig(), "bic", model)
    assert wins >= 95


# ---------------------------------------------------------------- exhaustive search

def brute_force(x, crit, model, spacing):
    n = len(x)
    best, best_c = np.inf, None
    for m in range(n):
        for taus in itertools.combinations(range(1, n), m):
            pts = (0,) + taus + (n,)
            if min(np.diff(pts)) < spacing:
                continue
            c = ChangepointConfig(taus)
            try:
                v = objective(x, c, crit, model)
            except ValueError:
                continue
            if best_c is None or v < best - 1e-9 * abs(best):
                best, best_c = v, c
    return best_c, best


@pytest.mark.parametrize("seed", range(6))
def test_exhaustive_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = 12
    crit = CRITERIA[seed % 4]
    x = simulate_ar(ArModel((0.3,)), None, n, seed).values + np.where(np.arange(n) >= rng.integers(3, 9), 2.0, 0.0)
    model = ArModel((0.3,))
    c, v = brute_force(x, crit, model, 2)
    got = exhaustive_search(x, crit, model, min_spacing=2)
    assert objective(x, got, crit, model) == pytest.approx(v, rel=1e-9)
    assert got == c


def test_exhaustive_examples():
    # constant data: every configuration is degenerate, the tie rule keeps the empty one
    assert exhaustive_search(np.full(10, 2.0), "bic", ArModel(())) == ChangepointConfig()
    x = simulate_ar(ArModel(()), None, 20, 3).values + np.where(np.arange(20) >= 10, 10.0, 0.0)
    assert exhaustive_search(x, "bic", ArModel(()), min_spacing=2).taus == (10,)


def test_exhaustive_limits():
    with pytest.raises(ValueError):
        exhaustive_search(np.zeros(23), "bic", ArModel(()))


# ---------------------------------------------------------------- genetic algorithm

SMALL = GaParams(population=60, max_generations=80, stagnation_limit=20)


def test_ga_params_validation(tmp_path):
    with pytest.raises(ValueError):
        GaParams(population=5, elite_count=5)
    with pytest.raises(ValueError):
        GaParams(mutation_rate=1.0)
    with pytest.raises(ValueError):
        GaParams(crossover_rate=1.5)
    assert GaParams().spacing(1) == 5 and GaParams().spacing(6) == 8
    path = tmp_path / "ga.json"
    path.write_text(json.dumps({"population": 40, "seed": 3}))
    assert GaParams.from_json(path) == GaParams(population=40, seed=3)


@given(st.lists(st.booleans(), min_size=5, max_size=60), st.integers(2, 8))
def test_repair_enforces_spacing(bits, spacing):
    row = np.array([bits], dtype=bool)
    before = set(np.flatnonzero(row[0]) + 1)
    repair(row, spacing)
    taus = np.flatnonzero(row[0]) + 1
    n = len(bits) + 1
    pts = np.r_[0, taus, n]
    assert np.all(np.diff(pts) >= spacing) or len(taus) == 0
    assert set(taus) <= before


@pytest.mark.parametrize("seed", range(4))
def test_ga_respects_spacing_and_history(seed):
    spec = builtin_scenario("staircase-9", delta=1.0)
    x, _, _ = simulate_replicate(spec, seed)
    res = ga_search(x, "aic", GaParams(seed=seed, population=60, max_generations=60), p=1)
    pts = np.r_[0, res.config.taus, 500]
    assert np.all(np.diff(pts) >= 5)
    hist = np.array(res.history)
    assert np.all(np.diff(hist) <= 1e-12)
    assert res.value == pytest.approx(hist[-1])
    assert res.value == pytest.approx(objective(x, res.config, "aic", res.model))
    config, value, generations = res
    assert generations <= 60


def test_ga_deterministic_in_seed():
    x, _, _ = simulate_replicate(builtin_scenario("alternating-3", delta=1.0), 0)
    a = ga_search(x, "bic", GaParams(seed=5, population=60, max_generations=40), p=1)
    b = ga_search(x, "bic", GaParams(seed=5, population=60, max_generations=40), p=1)
    assert a.config == b.config and a.history == b.history


def test_ga_infeasible_spacing():
    with pytest.raises(ValueError):
        ga_search(np.random.default_rng(0).normal(size=20), "bic", GaParams(min_spacing=10), p=1)


def test_ga_never_beats_exhaustive():
    rng = np.random.default_rng(11)
    for i in range(10):
        x = rng.normal(size=20) + np.repeat(rng.normal(0, 2, 4), 5)
        crit = CRITERIA[i % 4]
        res = ga_search(x, crit, GaParams(seed=i, min_spacing=3), p=1)
        best = exhaustive_search(x, crit, res.model, min_spacing=3)
        assert objective(x, best, crit, res.model) <= res.value + 1e-9


def test_polish_improves_two_step_optimum():
    # a bump needs both of its edges at once; single moves from the empty config stall
    x = simulate_ar(ArModel(()), None, 300, 4).values + np.where((np.arange(300) >= 140) & (np.arange(300) < 170), 2.0, 0.0)
    phi = ()
    ls, v_ls = local_search(x, ChangepointConfig(), "mbic", phi, min_spacing=5)
    pl, v_pl = polish(x, ChangepointConfig(), "mbic", phi, min_spacing=5)
    assert v_pl <= v_ls
    assert pl.m == 2 and abs(pl.taus[0] - 140) <= 5 and abs(pl.taus[1] - 170) <= 5


def test_write_log(tmp_path):
    x, _, _ = simulate_replicate(builtin_scenario("single-middle", delta=2.0), 0)
    res = ga_search(x, "mbic", SMALL, p=1)
    path = tmp_path / "log.csv"
    res.write_log(path)
    rows = list(csv.DictReader(path.open()))
    assert rows[0]["generation"] == "0"
    stages = [r["stage"] for r in rows]
    assert stages[0] == "ga" and set(stages) <= {"ga", "polish"}
    assert float(rows[-1]["best_objective"]) == pytest.approx(res.value)


def test_ga_finds_single_shift():
    x, truth, _ = simulate_replicate(builtin_scenario("single-middle", delta=2.0), 1)
    res = ga_search(x, "mbic", GaParams(seed=1), p=1)
    assert res.config.m == 1 and abs(res.config.taus[0] - truth.taus[0]) <= 5


def test_aic_overfits_noise():
    ms = [ga_search(simulate_ar(ArModel((0.5,)), None, 500, s).values, "aic", GaParams(seed=s), p=1).config.m
          for s in range(5)]
    assert min(ms) >= 1 and np.mean(ms) >= 8
