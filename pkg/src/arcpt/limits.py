"""Null limit laws of the single-changepoint statistics and their critical values.

Four laws are covered: ``sup |B(t)|`` (Kolmogorov), ``int_0^1 B(t)^2 dt``,
``sup_{l <= t <= h} B(t)^2 / (t (1 - t))`` and the double-Gumbel law
``exp(-2 exp(-x))``. The first and last are analytic; the other two are
tabulated by Monte Carlo over discretized Brownian bridges and cached on disk.
"""

from __future__ import annotations

import enum
import json
import math
import os
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import optimize

CACHE_ENV = "ARCPT_CACHE_DIR"
CACHE_VERSION = 1
CACHE_FILENAME = f"critical_values_v{CACHE_VERSION}.json"
DEFAULT_PATHS = 200_000
DEFAULT_GRID = 10_000
DEFAULT_SEED = 20240101
TABLE_LEVELS = (0.80, 0.85, 0.90, 0.925, 0.95, 0.975, 0.99)
_CHUNK = 1000


class LawKind(str, enum.Enum):
    SUP_ABS_BRIDGE = "sup-abs-bridge"
    INT_SQ_BRIDGE = "int-sq-bridge"
    CROPPED_SUP_RATIO = "cropped-sup-ratio"
    GUMBEL_DOUBLE = "gumbel"


@dataclass(frozen=True)
class LimitLaw:
    kind: LawKind
    ell: float | None = None
    h: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", LawKind(self.kind))
        if self.kind is LawKind.CROPPED_SUP_RATIO:
            if self.ell is None or self.h is None or not 0.0 < self.ell < self.h < 1.0:
                raise ValueError(f"cropped law needs 0 < ell < h < 1, got ({self.ell}, {self.h})")

    @property
    def key(self) -> str:
        if self.kind is LawKind.CROPPED_SUP_RATIO:
            return f"{self.kind.value}[{self.ell:g},{self.h:g}]"
        return self.kind.value

    @classmethod
    def parse(cls, text: str) -> "LimitLaw":
        """Parse names like ``sup-abs-bridge``, ``int-sq-bridge``, ``gumbel`` or
        ``cropped-sup-ratio[0.05,0.95]`` (short aliases ``sup``, ``intsq``, ``cropped``)."""
        aliases = {"sup": LawKind.SUP_ABS_BRIDGE, "intsq": LawKind.INT_SQ_BRIDGE,
                   "cropped": LawKind.CROPPED_SUP_RATIO}
        name, _, rest = text.partition("[")
        kind = aliases.get(name) or LawKind(name)
        if kind is LawKind.CROPPED_SUP_RATIO:
            bounds = rest.rstrip("]").split(",") if rest else ["0.05", "0.95"]
            return cls(kind, float(bounds[0]), float(bounds[1]))
        return cls(kind)


SUP_ABS = LimitLaw(LawKind.SUP_ABS_BRIDGE)
INT_SQ = LimitLaw(LawKind.INT_SQ_BRIDGE)
GUMBEL = LimitLaw(LawKind.GUMBEL_DOUBLE)


def cropped(ell: float, h: float) -> LimitLaw:
    return LimitLaw(LawKind.CROPPED_SUP_RATIO, ell, h)


# ---------------------------------------------------------------- analytic laws

def sup_bridge_cdf(x: float) -> float:
    """Kolmogorov distribution function ``P(sup |B(t)| <= x)``."""
    if x <= 0:
        return 0.0
    if x < 1.0:
        # theta-function form converges fast near the origin
        c = math.sqrt(2.0 * math.pi) / x
        total, k = 0.0, 1
        while True:
            term = math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8.0 * x * x))
            total += term
            if term < 1e-16:
                break
            k += 1
        return min(1.0, c * total)
    total, k = 0.0, 1
    while True:
        term = math.exp(-2.0 * k * k * x * x)
        total += term if k % 2 else -term
        if term < 1e-12:
            break
        k += 1
    return 1.0 - 2.0 * total


def sup_bridge_quantile(alpha: float) -> float:
    _check_level(alpha)
    return optimize.brentq(lambda x: sup_bridge_cdf(x) - alpha, 1e-3, 10.0, xtol=1e-12)


def gumbel_cdf(x: float) -> float:
    return math.exp(-2.0 * math.exp(-x))


def gumbel_quantile(alpha: float) -> float:
    _check_level(alpha)
    return -math.log(-math.log(alpha) / 2.0)


def _check_level(alpha: float):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"probability level must lie in (0, 1), got {alpha}")


# ---------------------------------------------------------------- Monte Carlo

def _bridge_chunk(rng: np.random.Generator, paths: int, grid: int) -> np.ndarray:
    """Brownian bridges at ``t_i = i / grid``, ``i = 0..grid``; float32, shape (paths, grid+1)."""
    out = np.zeros((paths, grid + 1), dtype=np.float32)
    inc = rng.standard_normal((paths, grid), dtype=np.float32)
    inc *= np.float32(1.0 / math.sqrt(grid))
    np.cumsum(inc, axis=1, out=out[:, 1:])
    t = np.linspace(0.0, 1.0, grid + 1, dtype=np.float32)
    out -= t * out[:, -1:]
    return out


def _functional(law: LimitLaw, b: np.ndarray, grid: int, rng: np.random.Generator,
                refine: bool) -> np.ndarray:
    if law.kind is LawKind.INT_SQ_BRIDGE:
        sq = b.astype(np.float64) ** 2
        return (sq[:, 1:-1].sum(axis=1) + 0.5 * (sq[:, 0] + sq[:, -1])) / grid
    if law.kind is LawKind.SUP_ABS_BRIDGE:
        if not refine:
            return np.abs(b).max(axis=1).astype(np.float64)
        # exact conditional extremes of the bridge within each grid cell
        a, c = b[:, :-1], b[:, 1:]
        two_dt = np.float32(2.0 / grid)
        mid, gap2 = a + c, (c - a) ** 2
        hi = mid + np.sqrt(gap2 - two_dt * np.log1p(-rng.random(a.shape, dtype=np.float32)))
        lo = mid - np.sqrt(gap2 - two_dt * np.log1p(-rng.random(a.shape, dtype=np.float32)))
        return 0.5 * np.maximum(hi.max(axis=1), -lo.min(axis=1)).astype(np.float64)
    if law.kind is LawKind.CROPPED_SUP_RATIO:
        i0 = math.ceil(law.ell * grid - 1e-9)
        i1 = math.floor(law.h * grid + 1e-9)
        t = np.arange(i0, i1 + 1) / grid
        seg = b[:, i0 : i1 + 1].astype(np.float64)
        return (seg * seg / (t * (1.0 - t))).max(axis=1)
    raise ValueError(f"no Monte Carlo functional for {law.kind}")


def mc_samples(law: LimitLaw, paths: int = DEFAULT_PATHS, grid: int = DEFAULT_GRID,
               seed: int = DEFAULT_SEED, refine: bool = True) -> np.ndarray:
    """Draws of the law's functional over simulated bridges.

    Paths are generated in fixed chunks of 1000, chunk ``c`` seeded from
    ``(seed, c)``, so the draws depend only on ``(law, paths, grid, seed)``.
    ``refine`` replaces the grid maximum of ``|B|`` with the exact maximum of
    the bridge between grid points (sup law only); it removes the downward
    discretization bias of the plain grid maximum.
    """
    if law.kind is LawKind.GUMBEL_DOUBLE:
        raise ValueError("the Gumbel law is analytic")
    out = np.empty(paths)
    for c, start in enumerate(range(0, paths, _CHUNK)):
        size = min(_CHUNK, paths - start)
        rng = np.random.default_rng([seed, c])
        b = _bridge_chunk(rng, size, grid)
        out[start : start + size] = _functional(law, b, grid, rng, refine)
    return out


def mc_quantile(law: LimitLaw, alpha: float, paths: int = DEFAULT_PATHS,
                grid: int = DEFAULT_GRID, seed: int = DEFAULT_SEED, refine: bool = True) -> float:
    _check_level(alpha)
    if paths < 10_000 or grid < 1_000:
        raise ValueError("Monte Carlo quantiles need paths >= 1e4 and grid >= 1e3")
    return float(np.quantile(mc_samples(law, paths, grid, seed, refine), alpha))


# ---------------------------------------------------------------- cache

_cache_lock = threading.Lock()


def cache_dir() -> Path:
    return Path(os.environ.get(CACHE_ENV) or Path.home() / ".cache" / "arcpt")


def _cache_path() -> Path:
    return cache_dir() / CACHE_FILENAME


def _read_cache(path: Path) -> dict:
    try:
        data = json.loads(path.read_text())
    except (OSError, ValueError):
        return {"version": CACHE_VERSION, "entries": {}}
    if data.get("version") != CACHE_VERSION:
        return {"version": CACHE_VERSION, "entries": {}}
    return data


def _entry_key(law: LimitLaw, paths: int, grid: int, seed: int) -> str:
    return f"{law.key}|paths={paths}|grid={grid}|seed={seed}"


def quantile_table(law: LimitLaw, paths: int = DEFAULT_PATHS, grid: int = DEFAULT_GRID,
                   seed: int = DEFAULT_SEED) -> dict[float, float]:
    """Critical values at :data:`TABLE_LEVELS`, tabulated on first use and cached."""
    if law.kind is LawKind.SUP_ABS_BRIDGE and paths == DEFAULT_PATHS and grid == DEFAULT_GRID:
        return {a: sup_bridge_quantile(a) for a in TABLE_LEVELS}
    if law.kind is LawKind.GUMBEL_DOUBLE:
        return {a: gumbel_quantile(a) for a in TABLE_LEVELS}
    key = _entry_key(law, paths, grid, seed)
    path = _cache_path()
    with _cache_lock:
        data = _read_cache(path)
        entry = data["entries"].get(key)
        if entry is None:
            samples = mc_samples(law, paths, grid, seed)
            levels = {f"{a:g}": float(np.quantile(samples, a)) for a in TABLE_LEVELS}
            entry = {"law": law.key, "levels": levels, "paths": paths, "grid": grid, "seed": seed}
            data["entries"][key] = entry
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
            with os.fdopen(fd, "w") as fh:
                json.dump(data, fh, indent=1, sort_keys=True)
            os.replace(tmp, path)
    return {float(a): v for a, v in entry["levels"].items()}


def critical_value(law: LimitLaw, alpha: float) -> float:
    """Upper critical value for a level-``alpha`` test (the ``1 - alpha`` quantile)."""
    _check_level(alpha)
    level = 1.0 - alpha
    if law.kind is LawKind.SUP_ABS_BRIDGE:
        return sup_bridge_quantile(level)
    if law.kind is LawKind.GUMBEL_DOUBLE:
        return gumbel_quantile(level)
    table = quantile_table(law)
    levels = np.array(sorted(table))
    if not levels[0] - 1e-12 <= level <= levels[-1] + 1e-12:
        raise ValueError(f"level {level} outside tabulated range [{levels[0]}, {levels[-1]}]")
    return float(np.interp(level, levels, [table[a] for a in levels]))


def p_value(law: LimitLaw, statistic: float) -> float | None:
    """Upper-tail probability; analytic laws exactly, tabulated laws by linear
    interpolation in the level (``None`` beyond the tabulated range)."""
    if law.kind is LawKind.SUP_ABS_BRIDGE:
        return 1.0 - sup_bridge_cdf(statistic)
    if law.kind is LawKind.GUMBEL_DOUBLE:
        return 1.0 - gumbel_cdf(statistic)
    table = quantile_table(law)
    levels = np.array(sorted(table))
    values = np.array([table[a] for a in levels])
    if statistic < values[0]:
        return None if statistic > 0 else 1.0
    if statistic > values[-1]:
        return None
    return float(1.0 - np.interp(statistic, values, levels))
