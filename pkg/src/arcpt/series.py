"""Series data model, Gaussian AR simulation and AR parameter estimation.

Time indices follow the 1-based convention used throughout the package: a
changepoint at time ``tau`` means observations ``1..tau`` belong to the earlier
regime and ``tau + 1`` starts the next one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg, optimize, signal

BURN_IN_BASE = 500
BURN_IN_PER_LAG = 10


class DegenerateSeriesError(ValueError):
    """Raised when a series carries no information for estimation (e.g. constant)."""


class NonCausalModelError(ValueError):
    """Raised when AR coefficients violate causality."""


@dataclass(frozen=True)
class TimeSeries:
    values: np.ndarray
    timestamps: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1:
            raise ValueError("series must be one-dimensional")
        if not np.all(np.isfinite(values)):
            raise ValueError("series contains non-finite values")
        object.__setattr__(self, "values", values)
        if self.timestamps is not None:
            ts = np.asarray(self.timestamps)
            if ts.shape != values.shape:
                raise ValueError("timestamps must match values in length")
            object.__setattr__(self, "timestamps", ts)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def n(self) -> int:
        return len(self.values)


def as_array(x) -> np.ndarray:
    """Return the observations of ``x`` (TimeSeries or array-like) as a finite float array."""
    if isinstance(x, TimeSeries):
        return x.values
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError("series contains non-finite values")
    return arr


def is_causal(phi: Sequence[float]) -> bool:
    phi = np.asarray(phi, dtype=float)
    if phi.size == 0 or not np.any(phi):
        return True
    # roots of 1 - phi_1 z - ... - phi_p z^p; np.roots wants highest degree first
    roots = np.roots(np.r_[-phi[::-1], 1.0])
    return bool(np.all(np.abs(roots) > 1.0 + 1e-10))


@dataclass(frozen=True)
class ArModel:
    """Causal AR(p) noise model.

    ``theta`` holds optional moving-average coefficients in the sign convention
    ``Z_t + theta_1 Z_{t-1} + ...`` of the residual recursion. Estimators in this
    package only ever produce pure AR models.
    """

    phi: tuple[float, ...] = ()
    sigma2: float = 1.0
    theta: tuple[float, ...] = ()
    method: str = "given"

    def __post_init__(self):
        phi = tuple(float(v) for v in np.atleast_1d(np.asarray(self.phi, dtype=float)))
        theta = tuple(float(v) for v in np.atleast_1d(np.asarray(self.theta, dtype=float)))
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "theta", theta)
        if not np.isfinite(self.sigma2) or self.sigma2 < 0:
            raise ValueError(f"sigma2 must be a nonnegative finite real, got {self.sigma2}")
        if not all(np.isfinite(phi)):
            raise NonCausalModelError("AR coefficients must be finite")
        if not is_causal(phi):
            raise NonCausalModelError(f"AR coefficients {phi} are not causal")

    @property
    def p(self) -> int:
        return len(self.phi)

    @property
    def eta2(self) -> float:
        return long_run_variance(self)

    def to_dict(self) -> dict:
        return {"order": self.p, "phi": list(self.phi), "sigma2": self.sigma2,
                "eta2": self.eta2, "method": self.method}


@dataclass(frozen=True)
class ChangepointConfig:
    """Changepoint count and strictly increasing times in ``{1, ..., N-1}``."""

    taus: tuple[int, ...] = ()

    def __post_init__(self):
        taus = tuple(int(t) for t in self.taus)
        if any(b <= a for a, b in zip(taus, taus[1:])):
            raise ValueError(f"changepoint times must be strictly increasing: {taus}")
        if taus and taus[0] < 1:
            raise ValueError(f"changepoint times must be >= 1: {taus}")
        object.__setattr__(self, "taus", taus)

    @property
    def m(self) -> int:
        return len(self.taus)

    def validate(self, n: int) -> "ChangepointConfig":
        if self.taus and self.taus[-1] > n - 1:
            raise ValueError(f"changepoint {self.taus[-1]} not admissible for N={n}")
        return self

    def boundaries(self, n: int) -> np.ndarray:
        """Regime boundaries ``(0, tau_1, ..., tau_m, N)``."""
        self.validate(n)
        return np.array((0, *self.taus, n), dtype=int)

    def segment_lengths(self, n: int) -> np.ndarray:
        return np.diff(self.boundaries(n))

    def regime_index(self, n: int) -> np.ndarray:
        """Regime number of each observation (0-based array over times 1..N)."""
        marks = np.zeros(n, dtype=int)
        for t in self.validate(n).taus:
            marks[t] = 1
        return np.cumsum(marks)

    @classmethod
    def parse(cls, text: str) -> "ChangepointConfig":
        text = text.strip()
        if not text:
            return cls(())
        return cls(tuple(int(v) for v in text.split(",")))


@dataclass(frozen=True)
class StepMeanFunction:
    config: ChangepointConfig = field(default_factory=ChangepointConfig)
    mus: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        mus = tuple(float(v) for v in self.mus)
        if len(mus) != self.config.m + 1:
            raise ValueError(f"need {self.config.m + 1} regime means, got {len(mus)}")
        object.__setattr__(self, "mus", mus)

    def values(self, n: int) -> np.ndarray:
        return np.asarray(self.mus)[self.config.regime_index(n)]

    def __call__(self, t: int, n: int) -> float:
        return float(self.values(n)[t - 1])


def simulate_ar(model: ArModel, mean: StepMeanFunction | None, n: int, seed: int) -> TimeSeries:
    """Gaussian AR(p) noise plus a step mean, with a burn-in of ``500 + 10 p`` draws."""
    if n < model.p + 1:
        raise ValueError(f"n={n} too small for an AR({model.p}) model")
    rng = np.random.default_rng(seed)
    burn = BURN_IN_BASE + BURN_IN_PER_LAG * max(model.p, len(model.theta))
    z = rng.standard_normal(n + burn) * np.sqrt(model.sigma2)
    b = np.r_[1.0, model.theta] if model.theta else [1.0]
    eps = signal.lfilter(b, np.r_[1.0, -np.asarray(model.phi)], z)[burn:]
    if mean is not None:
        eps = eps + mean.values(n)
    return TimeSeries(eps)


def ar_filter(y: np.ndarray, phi: Sequence[float], theta: Sequence[float] = ()) -> np.ndarray:
    """Apply the residual recursion to an already-centered series, zero initial state."""
    a = np.r_[1.0, np.asarray(theta, dtype=float)]
    return signal.lfilter(np.r_[1.0, -np.asarray(phi, dtype=float)], a, y)


def one_step_residuals(x, model: ArModel) -> np.ndarray:
    """One-step-ahead prediction residuals about the sample mean.

    Pre-sample values of the centered series and the residuals are taken as
    zero, so the result has exactly ``N`` entries.
    """
    x = as_array(x)
    if len(x) < model.p + 1:
        raise ValueError(f"series of length {len(x)} too short for AR({model.p})")
    return ar_filter(x - x.mean(), model.phi, model.theta)


def residual_variance(z) -> float:
    z = np.asarray(z, dtype=float)
    if z.size == 0:
        raise ValueError("empty residual sequence")
    return float(np.mean(z * z))


def sample_acvf(y: np.ndarray, nlags: int) -> np.ndarray:
    """Biased (divide by N) sample autocovariances of an already-centered series."""
    n = len(y)
    return np.array([y[: n - h] @ y[h:] / n for h in range(nlags + 1)])


def _check_fit_input(x, p: int, min_len: int) -> np.ndarray:
    x = as_array(x)
    if p < 0:
        raise ValueError("AR order must be nonnegative")
    if len(x) < max(min_len, 2):
        raise ValueError(f"series of length {len(x)} too short to fit AR({p})")
    if np.ptp(x) == 0.0:
        raise DegenerateSeriesError("constant series has zero variance")
    return x


def fit_ar_yule_walker(x, p: int) -> ArModel:
    x = _check_fit_input(x, p, 10 * p + 1)
    y = x - x.mean()
    acvf = sample_acvf(y, p)
    if p == 0:
        return ArModel((), float(acvf[0]), method="yule-walker")
    phi = linalg.solve_toeplitz(acvf[:p], acvf[1 : p + 1])
    sigma2 = float(acvf[0] - phi @ acvf[1 : p + 1])
    return ArModel(tuple(phi), sigma2, method="yule-walker")


def differenced_acf(x, nlags: int) -> np.ndarray:
    """Autocorrelations of the first differences, normalized by the lag-0 sum."""
    d = np.diff(as_array(x))
    denom = d @ d
    return np.array([d[: len(d) - h] @ d[h:] / denom for h in range(nlags + 1)])


def differenced_moment_matrix(rho_d: np.ndarray, p: int) -> tuple[np.ndarray, np.ndarray]:
    """Linear system ``M phi = r`` linking differenced autocorrelations to AR coefficients.

    The first row encodes the lag-one moment of the differenced process (whose
    MA part has a unit root); rows ``2..p`` are the Yule-Walker equations of the
    differences at lags ``2..p``. ``rho_d`` needs entries for lags ``0..p``.
    """
    M = np.zeros((p, p))
    M[0, 0] = 0.5
    if p > 1:
        M[0, 1] = -0.5
    for j in range(2, p):
        M[0, j] = -(0.5 + rho_d[1:j].sum())
    for i in range(1, p):
        M[i] = rho_d[np.abs(i - np.arange(p))]
    rhs = np.r_[0.5 + rho_d[1], rho_d[2 : p + 1]]
    return M, rhs


def ar_acvf(phi: Sequence[float], sigma2: float, nlags: int) -> np.ndarray:
    """Theoretical autocovariances ``gamma(0..nlags)`` of a causal AR(p)."""
    phi = np.asarray(phi, dtype=float)
    p = len(phi)
    if p == 0:
        out = np.zeros(nlags + 1)
        out[0] = sigma2
        return out
    # gamma(h) - sum_j phi_j gamma(|h - j|) = sigma2 * [h == 0], h = 0..p
    A = np.eye(p + 1)
    for h in range(p + 1):
        for j in range(1, p + 1):
            A[h, abs(h - j)] -= phi[j - 1]
    rhs = np.zeros(p + 1)
    rhs[0] = sigma2
    g = np.linalg.solve(A, rhs)
    out = np.empty(max(nlags + 1, p + 1))
    out[: p + 1] = g
    for h in range(p + 1, len(out)):
        out[h] = phi @ out[h - 1 :: -1][:p]
    return out[: nlags + 1]


def fit_ar_differenced(x, p: int) -> ArModel:
    """AR(p) fit from moments of the first differences, robust to sparse mean shifts.

    Falls back to :func:`fit_ar_yule_walker` (``method="differenced-fallback"``)
    when the moment system is singular or yields a non-causal model.
    """
    x = _check_fit_input(x, p, 10 * p + 2)
    d = np.diff(x)
    gamma_d0 = d @ d / len(x)
    if gamma_d0 == 0.0:
        raise DegenerateSeriesError("series has zero first differences")
    if p == 0:
        # gamma_d(0) = 2 gamma(0) for white noise
        return ArModel((), float(gamma_d0 / 2.0), method="differenced")
    rho_d = differenced_acf(x, p)
    M, rhs = differenced_moment_matrix(rho_d, p)
    try:
        phi = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError:
        phi = None
    if phi is None or not np.all(np.isfinite(phi)) or not is_causal(phi):
        fallback = fit_ar_yule_walker(x, p)
        return ArModel(fallback.phi, fallback.sigma2, method="differenced-fallback")
    unit = ar_acvf(phi, 1.0, 1)
    sigma2 = gamma_d0 / (2.0 * (unit[0] - unit[1]))
    return ArModel(tuple(phi), float(sigma2), method="differenced")


def long_run_variance(model: ArModel) -> float:
    ma = 1.0 + sum(model.theta)
    return model.sigma2 * ma * ma / (1.0 - sum(model.phi)) ** 2


def select_order(x, max_order: int = 5) -> int:
    """AR order minimizing ``N ln sigma2 + 2 (p + 1)`` over Yule-Walker fits."""
    x = as_array(x)
    n = len(x)
    best_p, best_aic = 0, np.inf
    for p in range(max_order + 1):
        if n <= 10 * p:
            break
        sigma2 = fit_ar_yule_walker(x, p).sigma2
        if sigma2 <= 0:
            break
        aic = n * np.log(sigma2) + 2 * (p + 1)
        if aic < best_aic - 1e-12:
            best_p, best_aic = p, aic
    return best_p


def innovations(y: np.ndarray, phi: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    """Exact one-step prediction errors and their variances for a unit-innovation AR.

    Returns ``(e, r)`` with ``Var(e_t) = sigma2 * r_t``. The first ``p`` steps
    come from Durbin-Levinson on the stationary autocovariances, later steps
    from the AR recursion itself (``r_t = 1``).
    """
    phi = np.asarray(phi, dtype=float)
    p = len(phi)
    n = len(y)
    r = np.ones(n)
    e = ar_filter(y, phi)
    if p == 0:
        return e, r
    g = ar_acvf(phi, 1.0, p)
    coef = np.zeros(0)
    v = g[0]
    for t in range(min(p, n)):
        # predictor of y_t from y_{t-1}, ..., y_0
        e[t] = y[t] - (coef @ y[t - 1 :: -1][: len(coef)] if t > 0 else 0.0)
        r[t] = v
        if t + 1 >= min(p, n):
            break
        k = (g[t + 1] - coef @ g[t:0:-1]) / v
        coef = np.r_[coef - k * coef[::-1], k]
        v *= 1.0 - k * k
    return e, r


def gaussian_loglik(x, config: ChangepointConfig, model: ArModel) -> float:
    """Exact Gaussian log-likelihood with regime means profiled by segment averages."""
    x = as_array(x)
    n = len(x)
    config.validate(n)
    lengths = config.segment_lengths(n)
    if np.any(lengths < 1):
        raise ValueError("every regime must contain at least one observation")
    if model.theta:
        raise NotImplementedError("likelihood is implemented for pure AR noise only")
    y = x - segment_means(x, config)
    e, r = innovations(y, model.phi)
    v = model.sigma2 * r
    return float(-0.5 * np.sum(np.log(2.0 * np.pi * v) + e * e / v))


def segment_means(x, config: ChangepointConfig) -> np.ndarray:
    """Piecewise-constant fit: each observation replaced by its regime's sample mean."""
    x = as_array(x)
    idx = config.regime_index(len(x))
    sums = np.bincount(idx, weights=x)
    counts = np.bincount(idx)
    return (sums / counts)[idx]


def _pacf_to_ar(pacf: np.ndarray) -> np.ndarray:
    phi = np.zeros(0)
    for k in pacf:
        phi = np.r_[phi - k * phi[::-1], k]
    return phi


def fit_ar_mle(y, p: int) -> ArModel:
    """Exact Gaussian MLE of a zero-mean AR(p), innovation variance profiled out.

    Optimizes over partial autocorrelations mapped through ``tanh`` so every
    iterate is causal. Intended for small series and validation work.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    if p == 0:
        return ArModel((), float(y @ y / n), method="mle")

    def profile(u):
        phi = _pacf_to_ar(np.tanh(u))
        e, r = innovations(y, phi)
        s = np.sum(e * e / r) / n
        return np.log(s) + np.sum(np.log(r)) / n

    start = fit_ar_yule_walker(y, p) if n > 10 * p and np.ptp(y) > 0 else None
    u0 = np.zeros(p)
    if start is not None:
        # invert the Durbin-Levinson map to get starting partial autocorrelations
        pacf = _ar_to_pacf(np.asarray(start.phi))
        u0 = np.arctanh(np.clip(pacf, -0.99, 0.99))
    res = optimize.minimize(profile, u0, method="Nelder-Mead",
                            options={"xatol": 1e-9, "fatol": 1e-13, "maxiter": 4000 * p})
    phi = _pacf_to_ar(np.tanh(res.x))
    e, r = innovations(y, phi)
    return ArModel(tuple(phi), float(np.sum(e * e / r) / n), method="mle")


def _ar_to_pacf(phi: np.ndarray) -> np.ndarray:
    phi = phi.copy()
    out = np.zeros(len(phi))
    for k in range(len(phi) - 1, -1, -1):
        a = phi[k]
        out[k] = a
        if k == 0:
            break
        phi = (phi[:k] + a * phi[:k][::-1]) / (1.0 - a * a)
    return out
