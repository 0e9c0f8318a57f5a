"""Penalized-likelihood multiple changepoint estimation.

The objective is ``cost + penalty`` where the cost is a multiple of
``ln sigma2``, ``sigma2`` being the mean squared one-step residual after
removing segment means, with AR coefficients from one global fit. A genetic
algorithm searches configurations encoded as ``N - 1`` bits (bit ``t - 1`` on
means a changepoint at time ``t``); :func:`exhaustive_search` is the
brute-force reference for short series.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numba import njit

from .series import ArModel, ChangepointConfig, as_array, fit_ar_differenced, segment_means, ar_filter

EXHAUSTIVE_MAX_N = 22


class Criterion(str, enum.Enum):
    AIC = "aic"
    BIC = "bic"
    MBIC = "mbic"
    MDL = "mdl"


def _criterion(c) -> Criterion:
    return c if isinstance(c, Criterion) else Criterion(str(c).lower())


def cost_scale(criterion: Criterion, n: int) -> float:
    """Multiplier of ``ln sigma2``: ``N`` for AIC/BIC, ``N/2`` for mBIC/MDL."""
    return float(n) if _criterion(criterion) in (Criterion.AIC, Criterion.BIC) else n / 2.0


def penalty(criterion, config: ChangepointConfig, n: int) -> float:
    crit = _criterion(criterion)
    lengths = config.segment_lengths(n)
    if np.any(lengths < 1):
        raise ValueError("zero-length regime")
    m = config.m
    if crit is Criterion.AIC:
        return 2.0 * (2 * m + 3)
    if crit is Criterion.BIC:
        return (2 * m + 2) * math.log(n)
    if m == 0:
        return 0.0
    if crit is Criterion.MBIC:
        return 1.5 * m * math.log(n) + 0.5 * float(np.sum(np.log(lengths / n)))
    return (math.log(m) + 0.5 * float(np.sum(np.log(lengths)))
            + float(np.sum(np.log(config.taus[1:]))))


def config_sigma2(x, config: ChangepointConfig, model: ArModel) -> float:
    x = as_array(x)
    if np.any(config.segment_lengths(len(x)) < 1):
        raise ValueError("every regime must contain at least one observation")
    z = ar_filter(x - segment_means(x, config), model.phi)
    return float(np.mean(z * z))


def objective(x, config: ChangepointConfig, criterion, model: ArModel) -> float:
    x = as_array(x)
    n = len(x)
    s2 = config_sigma2(x, config, model)
    if not s2 > 0 or not np.isfinite(s2):
        raise ValueError(f"non-finite or zero residual variance ({s2})")
    return cost_scale(criterion, n) * math.log(s2) + penalty(criterion, config, n)


# ---------------------------------------------------------------- batch evaluation

@njit(cache=True)
def _fitness_terms(x, bits, phi):
    """Per row: residual variance, changepoint count, sum of log segment lengths
    and sum of log changepoint times excluding the first."""
    P, n = bits.shape[0], x.shape[0]
    p = phi.shape[0]
    s2 = np.empty(P)
    count = np.empty(P)
    log_len = np.empty(P)
    log_tau = np.empty(P)
    e = np.empty(n)
    for r in range(P):
        start = 0
        m = 0
        ll = 0.0
        lt = 0.0
        for t in range(1, n + 1):
            if t == n or bits[r, t - 1]:
                acc = 0.0
                for i in range(start, t):
                    acc += x[i]
                mu = acc / (t - start)
                for i in range(start, t):
                    e[i] = x[i] - mu
                ll += np.log(t - start)
                if t < n:
                    if m > 0:
                        lt += np.log(t)
                    m += 1
                start = t
        ss = 0.0
        for i in range(n):
            z = e[i]
            for j in range(min(p, i)):
                z -= phi[j] * e[i - j - 1]
            ss += z * z
        s2[r] = ss / n
        count[r] = m
        log_len[r] = ll
        log_tau[r] = lt
    return s2, count, log_len, log_tau


def batch_objective(x: np.ndarray, bits: np.ndarray, criterion, phi) -> np.ndarray:
    """Objective for each row of a boolean ``(P, N-1)`` population matrix.

    Rows with zero residual variance get ``inf``; :func:`objective` raises for them.
    """
    crit = _criterion(criterion)
    x = np.ascontiguousarray(x, dtype=float)
    n = len(x)
    s2, m, log_len, log_tau = _fitness_terms(x, np.ascontiguousarray(bits, dtype=np.bool_),
                                             np.asarray(phi, dtype=float))
    # a zero residual variance is a degenerate fit, ranked last like an error
    with np.errstate(divide="ignore"):
        cost = np.where(s2 > 0, cost_scale(crit, n) * np.log(s2), np.inf)
    if crit is Criterion.AIC:
        return cost + 2.0 * (2 * m + 3)
    if crit is Criterion.BIC:
        return cost + (2 * m + 2) * math.log(n)
    if crit is Criterion.MBIC:
        pen = 1.5 * m * math.log(n) + 0.5 * (log_len - (m + 1) * math.log(n))
    else:
        pen = np.log(np.maximum(m, 1)) + 0.5 * log_len + log_tau
    return cost + np.where(m > 0, pen, 0.0)


def bits_to_config(row: np.ndarray) -> ChangepointConfig:
    return ChangepointConfig(tuple(int(t) + 1 for t in np.flatnonzero(row)))


def config_to_bits(config: ChangepointConfig, n: int) -> np.ndarray:
    row = np.zeros(n - 1, dtype=bool)
    row[np.asarray(config.validate(n).taus, dtype=int) - 1] = True
    return row


def _admissible(n: int, min_spacing: int):
    """All changepoint tuples with every regime at least ``min_spacing`` long."""
    def extend(prefix, last):
        yield prefix
        for t in range(last + min_spacing, n - min_spacing + 1):
            yield from extend(prefix + (t,), t)
    yield from extend((), 0)


def exhaustive_search(x, criterion, model: ArModel, min_spacing: int = 1) -> ChangepointConfig:
    """Global minimizer over all admissible configurations (``N <= 22``).

    Ties go to fewer changepoints, then to the lexicographically smallest times.
    """
    x = as_array(x)
    n = len(x)
    if n > EXHAUSTIVE_MAX_N:
        raise ValueError(f"exhaustive search limited to N <= {EXHAUSTIVE_MAX_N}, got {n}")
    configs = list(_admissible(n, max(min_spacing, 1)))
    bits = np.zeros((len(configs), n - 1), dtype=bool)
    for i, taus in enumerate(configs):
        bits[i, np.asarray(taus, dtype=int) - 1] = True
    values = np.empty(len(configs))
    for start in range(0, len(configs), 4096):
        values[start : start + 4096] = batch_objective(x, bits[start : start + 4096], criterion, model.phi)
    best = values.min()
    ties = [c for c, v in zip(configs, values) if v <= best + 1e-9 * max(1.0, abs(best))]
    return ChangepointConfig(min(ties, key=lambda t: (len(t), t)))


# ---------------------------------------------------------------- genetic algorithm

@dataclass(frozen=True)
class GaParams:
    """Genetic algorithm settings.

    ``mutation_rate=None`` means ``1/N`` per bit and ``min_spacing=None`` means
    ``max(5, p + 2)``. Besides bit flips, each changepoint of a child moves by
    up to ``max_shift`` places with probability ``shift_rate``; a move needs
    two simultaneous flips otherwise and is practically unreachable. With
    ``polish`` the final best configuration goes through :func:`polish`.
    """

    population: int = 200
    max_generations: int = 500
    stagnation_limit: int = 50
    mutation_rate: float | None = None
    crossover_rate: float = 0.9
    elite_count: int = 5
    min_spacing: int | None = None
    seed: int = 0
    initial_density: float = 3.0
    shift_rate: float = 0.1
    max_shift: int = 3
    polish: bool = True

    def __post_init__(self):
        if not 0 <= self.elite_count < self.population:
            raise ValueError("elite_count must be in [0, population)")
        if self.mutation_rate is not None and not 0.0 < self.mutation_rate < 1.0:
            raise ValueError("mutation_rate must lie in (0, 1)")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValueError("crossover_rate must lie in [0, 1]")

    def spacing(self, p: int) -> int:
        return max(5, p + 2) if self.min_spacing is None else self.min_spacing

    @classmethod
    def from_json(cls, path) -> "GaParams":
        data = json.loads(Path(path).read_text())
        return cls(**data)


@dataclass
class GaResult:
    config: ChangepointConfig
    value: float
    generations: int
    model: ArModel
    history: list[float] = field(default_factory=list, repr=False)

    def __iter__(self):
        return iter((self.config, self.value, self.generations))

    def write_log(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["generation", "best_objective", "stage"])
            for g, v in enumerate(self.history[: self.generations + 1]):
                w.writerow([g, repr(v), "ga"])
            for v in self.history[self.generations + 1 :]:
                w.writerow([self.generations, repr(v), "polish"])


@njit(cache=True)
def _repair(bits, min_spacing):
    P, L = bits.shape
    n = L + 1
    for r in range(P):
        last = 0
        for t in range(1, n):
            if bits[r, t - 1]:
                if t - last < min_spacing or n - t < min_spacing:
                    bits[r, t - 1] = False
                else:
                    last = t


def repair(bits: np.ndarray, min_spacing: int) -> np.ndarray:
    """Drop the later of any two changepoints closer than ``min_spacing``, and
    changepoints closer than ``min_spacing`` to either end. Works in place."""
    if min_spacing > 1:
        _repair(bits, min_spacing)
    return bits


def _tournament(rng: np.random.Generator, fitness: np.ndarray, k: int) -> np.ndarray:
    a = rng.integers(0, len(fitness), size=k)
    b = rng.integers(0, len(fitness), size=k)
    return np.where(fitness[a] <= fitness[b], a, b)


def _mutate(rng: np.random.Generator, children: np.ndarray, rate: float,
            shift_rate: float, max_shift: int):
    """Shift existing changepoints, then flip bits independently with probability ``rate``."""
    k, L = children.shape
    if shift_rate > 0:
        rows, cols = np.nonzero(children)
        move = rng.random(len(rows)) < shift_rate
        rows, cols = rows[move], cols[move]
        step = rng.integers(1, max_shift + 1, size=len(rows)) * rng.choice([-1, 1], size=len(rows))
        children[rows, cols] = False
        children[rows, np.clip(cols + step, 0, L - 1)] = True
    # flips per child ~ Binomial(L, rate) at uniform positions; a repeated
    # position flips once, which differs from per-bit Bernoulli draws at O(rate^2)
    flips = rng.binomial(L, rate, size=k)
    rows = np.repeat(np.arange(k), flips)
    children[rows, rng.integers(0, L, size=len(rows))] ^= True


def _neighbours(row: np.ndarray, spacing: int) -> np.ndarray:
    """Every admissible configuration one move away: relocate a changepoint
    between its neighbours, delete one, or insert one."""
    L = len(row)
    n = L + 1
    taus = np.flatnonzero(row) + 1
    bounds = np.r_[0, taus, n]
    out = []
    for i, t in enumerate(taus):
        base = row.copy()
        base[t - 1] = False
        out.append(base[None, :])
        lo, hi = bounds[i] + spacing, bounds[i + 2] - spacing
        cand = np.arange(lo, hi + 1)
        cand = cand[cand != t]
        if len(cand):
            moved = np.repeat(base[None, :], len(cand), axis=0)
            moved[np.arange(len(cand)), cand - 1] = True
            out.append(moved)
    for a, b in zip(bounds[:-1], bounds[1:]):
        cand = np.arange(a + spacing, b - spacing + 1)
        if len(cand):
            added = np.repeat(row[None, :], len(cand), axis=0)
            added[np.arange(len(cand)), cand - 1] = True
            out.append(added)
    return np.vstack(out) if out else np.empty((0, L), dtype=bool)


def local_search(x, config: ChangepointConfig, criterion, phi, min_spacing: int = 1,
                 max_rounds: int = 1000) -> tuple[ChangepointConfig, float]:
    """Best-improvement descent over single relocate/delete/insert moves."""
    x = as_array(x)
    n = len(x)
    row = config_to_bits(config, n)
    value = float(batch_objective(x, row[None, :], criterion, phi)[0])
    for _ in range(max_rounds):
        cand = _neighbours(row, max(min_spacing, 1))
        if not len(cand):
            break
        vals = batch_objective(x, cand, criterion, phi)
        j = int(np.argmin(vals))
        if not vals[j] < value - 1e-10 * max(1.0, abs(value)):
            break
        row, value = cand[j], float(vals[j])
    return bits_to_config(row), value


def _pair_insertions(row: np.ndarray, spacing: int, step: int) -> np.ndarray:
    """Configurations adding two changepoints on a grid of stride ``step``."""
    L = len(row)
    n = L + 1
    taus = np.flatnonzero(row) + 1
    grid = np.arange(spacing, n - spacing + 1, step)
    if len(taus):
        gap = np.abs(grid[:, None] - taus[None, :]).min(axis=1)
        grid = grid[gap >= spacing]
    a, b = np.triu_indices(len(grid), k=1)
    a, b = grid[a], grid[b]
    keep = b - a >= spacing
    a, b = a[keep], b[keep]
    out = np.repeat(row[None, :], len(a), axis=0)
    idx = np.arange(len(a))
    out[idx, a - 1] = True
    out[idx, b - 1] = True
    return out


def polish(x, config: ChangepointConfig, criterion, phi, min_spacing: int = 1,
           pair_candidates: int = 5, max_kicks: int = 50) -> tuple[ChangepointConfig, float]:
    """Iterated local search around ``config``.

    After :func:`local_search` converges, two kinds of kick are tried: deleting
    one changepoint, and the ``pair_candidates`` best insertions of two
    changepoints on a coarse grid. Each kick is refined by :func:`local_search`
    and the best refinement is kept if it improves the objective. This escapes
    optima where a regime is only worth adding together with its neighbour,
    which no single move can reach.
    """
    x = as_array(x)
    n = len(x)
    crit = _criterion(criterion)
    spacing = max(min_spacing, 1)
    step = max(1, math.ceil(n / 150))
    config, value = local_search(x, config, crit, phi, spacing)
    for _ in range(max_kicks):
        row = config_to_bits(config, n)
        starts = []
        for t in config.taus:
            starts.append(ChangepointConfig(tuple(u for u in config.taus if u != t)))
        pairs = _pair_insertions(row, spacing, step)
        if len(pairs):
            vals = batch_objective(x, pairs, crit, phi)
            for j in np.argsort(vals, kind="stable")[:pair_candidates]:
                starts.append(bits_to_config(pairs[j]))
        best = (config, value)
        for start in starts:
            cand = local_search(x, start, crit, phi, spacing)
            if cand[1] < best[1] - 1e-10 * max(1.0, abs(best[1])):
                best = cand
        if best[0] == config:
            break
        config, value = best
    return config, value


def ga_search(x, criterion, ga: GaParams = GaParams(), p: int = 1,
              model: ArModel | None = None) -> GaResult:
    """Minimize the penalized objective by a genetic algorithm.

    Binary tournament selection, uniform crossover, independent bit-flip
    mutation and ``elite_count`` survivors per generation. Stops after
    ``max_generations`` or ``stagnation_limit`` generations without strict
    improvement of the best objective. Deterministic in ``ga.seed``.
    """
    x = as_array(x)
    n = len(x)
    crit = _criterion(criterion)
    spacing = ga.spacing(p)
    if n <= 2 * spacing:
        raise ValueError(f"series of length {n} too short for min_spacing {spacing}")
    if model is None:
        model = fit_ar_differenced(x, p)
    phi = np.asarray(model.phi)
    rng = np.random.default_rng(ga.seed)
    mut = ga.mutation_rate if ga.mutation_rate is not None else 1.0 / n
    P = ga.population
    L = n - 1

    pop = np.zeros((P, L), dtype=bool)
    half = P // 2
    pop[half:] = rng.random((P - half, L)) < min(1.0, ga.initial_density / n)
    repair(pop, spacing)
    fit = batch_objective(x, pop, crit, phi)
    best = float(fit.min())
    history = [best]
    stale = 0
    gen = 0
    n_children = P - ga.elite_count
    while gen < ga.max_generations and stale < ga.stagnation_limit:
        gen += 1
        elite = np.argsort(fit, kind="stable")[: ga.elite_count]
        pa = pop[_tournament(rng, fit, n_children)]
        pb = pop[_tournament(rng, fit, n_children)]
        cross = rng.random(n_children) < ga.crossover_rate
        mask = rng.integers(0, 2, size=(n_children, L), dtype=np.bool_)
        children = np.where(cross[:, None] & mask, pb, pa)
        _mutate(rng, children, mut, ga.shift_rate, ga.max_shift)
        repair(children, spacing)
        child_fit = batch_objective(x, children, crit, phi)
        pop = np.vstack([pop[elite], children])
        fit = np.r_[fit[elite], child_fit]
        current = float(fit.min())
        if current < best - 1e-10 * max(1.0, abs(best)):
            best, stale = current, 0
        else:
            stale += 1
        history.append(current)
    i = int(np.argmin(fit))
    config, value = bits_to_config(pop[i]), float(fit[i])
    if ga.polish:
        config, value = polish(x, config, crit, phi, spacing)
        history.append(value)
    return GaResult(config, value, gen, model, history)
