"""At-most-one-changepoint (AMOC) tests for a mean shift in an AR series.

The ``*_x`` tests work on the raw data scaled by an estimated long-run
standard deviation; the ``*_z`` tests work on one-step-ahead prediction
residuals computed under the no-change hypothesis. Locations are 1-based
times ``k`` with the shift starting at ``k + 1``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import limits
from .series import (
    ArModel,
    as_array,
    fit_ar_mle,
    fit_ar_yule_walker,
    long_run_variance,
    one_step_residuals,
    residual_variance,
    select_order,
)


class Method(str, enum.Enum):
    CUSUM_X = "cusumx"
    CUSUM_Z = "cusumz"
    SCUSUM_X = "scusumx"
    SCUSUM_Z = "scusumz"
    LRT = "lrt"
    LRT_CROPPED = "lrt-cropped"


@dataclass(frozen=True)
class AmocResult:
    statistic: float
    scaled_statistic: float
    location: int
    critical_value: float
    p_value: float | None
    reject: bool
    method: Method
    order: int = 0
    alpha: float = 0.05
    curve: np.ndarray | None = field(default=None, repr=False, compare=False)

    def to_dict(self, include_curve: bool = False) -> dict:
        d = asdict(self)
        d["method"] = self.method.value
        d.pop("curve")
        if include_curve and self.curve is not None:
            d["curve"] = [float(v) for v in self.curve]
        return d


def cusum_curve(y) -> np.ndarray:
    """``CUSUM(k) = N^{-1/2} (S_k - (k/N) S_N)`` for ``k = 1..N``."""
    y = np.asarray(y, dtype=float)
    n = len(y)
    if n < 2:
        raise ValueError("CUSUM needs at least two observations")
    # centering first keeps round-off from breaking location invariance
    s = np.cumsum(y - y.mean())
    s[-1] = 0.0
    return s / math.sqrt(n)


def argmax_location(curve: np.ndarray) -> int:
    """1-based time maximizing ``curve`` over ``k = 1..N-1``; ties go to the smallest."""
    return int(np.argmax(curve[:-1])) + 1


def _check_alpha(alpha: float):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def _resolve_order(x: np.ndarray, p: int | None) -> int:
    if p is None:
        return select_order(x)
    if p < 0:
        raise ValueError("AR order must be nonnegative")
    if len(x) <= 10 * p:
        raise ValueError(f"series of length {len(x)} too short for AR({p})")
    return p


def _constant_result(method: Method, law: limits.LimitLaw, n: int, p: int, alpha: float) -> AmocResult:
    return AmocResult(0.0, 0.0, 1, limits.critical_value(law, alpha), 1.0, False, method, p, alpha,
                      np.zeros(n))


def _cusum_family(x, p, alpha, residuals: bool, squared: bool) -> AmocResult:
    x = as_array(x)
    _check_alpha(alpha)
    law = limits.INT_SQ if squared else limits.SUP_ABS
    method = {(False, False): Method.CUSUM_X, (True, False): Method.CUSUM_Z,
              (False, True): Method.SCUSUM_X, (True, True): Method.SCUSUM_Z}[residuals, squared]
    if len(x) >= 2 and np.ptp(x) == 0.0:
        return _constant_result(method, law, len(x), 0 if p is None else p, alpha)
    p = _resolve_order(x, p)
    model = fit_ar_yule_walker(x, p)
    if residuals:
        y = one_step_residuals(x, model)
        scale2 = residual_variance(y)
    else:
        y = x
        scale2 = long_run_variance(model)
    curve = cusum_curve(y)
    location = argmax_location(np.abs(curve))
    if squared:
        statistic = float(np.mean(curve * curve))
        scaled = statistic / scale2
    else:
        statistic = float(np.abs(curve[location - 1]))
        scaled = statistic / math.sqrt(scale2)
    crit = limits.critical_value(law, alpha)
    return AmocResult(statistic, scaled, location, crit, limits.p_value(law, scaled),
                      scaled > crit, method, p, alpha, curve)


def cusum_test_x(x, p: int | None = None, alpha: float = 0.05) -> AmocResult:
    """Max |CUSUM| of the data over the long-run standard deviation; Kolmogorov limit."""
    return _cusum_family(x, p, alpha, residuals=False, squared=False)


def cusum_test_z(x, p: int | None = None, alpha: float = 0.05) -> AmocResult:
    """Max |CUSUM| of prediction residuals over the residual standard deviation."""
    return _cusum_family(x, p, alpha, residuals=True, squared=False)


def scusum_x(x, p: int | None = None, alpha: float = 0.05) -> AmocResult:
    return _cusum_family(x, p, alpha, residuals=False, squared=True)


def scusum_z(x, p: int | None = None, alpha: float = 0.05) -> AmocResult:
    """Mean squared CUSUM of prediction residuals; limit ``int_0^1 B^2``.

    The changepoint location is the argmax of the absolute residual CUSUM.
    """
    return _cusum_family(x, p, alpha, residuals=True, squared=True)


# ---------------------------------------------------------------- likelihood ratio

def _windowed_sums(w: np.ndarray, phi: np.ndarray, ks: np.ndarray) -> np.ndarray:
    """``w . (A 1_{<=k})`` for every ``k`` in ``ks``, ``A`` the AR residual filter."""
    n = len(w)
    W = np.r_[0.0, np.cumsum(w)]
    out = W[ks].copy()
    for j, f in enumerate(phi, start=1):
        out -= f * (W[np.minimum(ks + j, n)] - W[min(j, n)])
    return out


def split_residual_variances(x, phi) -> np.ndarray:
    """Residual variance ``sigma2_k`` for every split ``k = 1..N-1``.

    Segment sample means are removed on each side of ``k`` and the fixed AR
    filter ``phi`` is applied with zero pre-sample values. Runs in ``O(N p)``
    using ``Z_k = Z_0 - b_k g - (a_k - b_k) u_k`` where ``Z_0`` are the
    residuals about the overall mean, ``g = A 1`` and ``u_k = A 1_{t <= k}``.
    """
    x = as_array(x)
    phi = np.asarray(phi, dtype=float)
    n, p = len(x), len(phi)
    ks = np.arange(1, n)
    xbar = x.mean()
    z0 = one_step_residuals(x, ArModel(tuple(phi)))
    g = 1.0 - np.r_[0.0, np.cumsum(phi)][np.minimum(np.arange(n), p)]
    S = np.cumsum(x)
    a = S[ks - 1] / ks - xbar
    b = (S[-1] - S[ks - 1]) / (n - ks) - xbar
    zu = _windowed_sums(z0, phi, ks)
    gu = _windowed_sums(g, phi, ks)
    # ||u_k||^2 = sum_{t<=k} g_t^2 + tail terms at t = k+1..k+p
    uu = np.cumsum(g * g)[ks - 1]
    for i in range(1, p + 1):
        t = ks + i
        valid = t <= n
        # (u_k)_t = -sum_{j=i}^{min(p, t-1)} phi_j, j >= t - k = i
        upper = np.minimum(p, t - 1)
        cphi = np.r_[0.0, np.cumsum(phi)]
        tail = -(cphi[upper] - cphi[i - 1])
        uu += np.where(valid, tail * tail, 0.0)
    d = a - b
    ss = (z0 @ z0 - 2.0 * (b * (z0 @ g) + d * zu)
          + b * b * (g @ g) + 2.0 * b * d * gu + d * d * uu)
    return np.maximum(ss, 0.0) / n


def _split_variances_mle(x, p: int) -> tuple[np.ndarray, float]:
    x = as_array(x)
    n = len(x)
    null = fit_ar_mle(x - x.mean(), p).sigma2
    out = np.empty(n - 1)
    for k in range(1, n):
        y = x.copy()
        y[:k] -= y[:k].mean()
        y[k:] -= y[k:].mean()
        out[k - 1] = fit_ar_mle(y, p).sigma2
    return out, null


def lrt_curve(x, p: int, exact: bool = False) -> np.ndarray:
    """``-2 ln Lambda_k = N ln(sigma2_H0 / sigma2_k)`` for ``k = 1..N-1``.

    By default the AR coefficients stay at their no-change Yule-Walker values
    and only the segment means move with ``k``. ``exact=True`` refits a full
    Gaussian AR MLE for every ``k`` (quadratic cost, for small ``N``).
    """
    x = as_array(x)
    n = len(x)
    if exact:
        var_k, null = _split_variances_mle(x, p)
    else:
        model = fit_ar_yule_walker(x, p)
        null = residual_variance(one_step_residuals(x, model))
        var_k = split_residual_variances(x, model.phi)
    with np.errstate(divide="ignore"):
        return n * (np.log(null) - np.log(var_k))


def gumbel_scale(u: float, n: int) -> float:
    lln = math.log(math.log(n))
    return math.sqrt(2.0 * max(u, 0.0) * lln) - (2.0 * lln + 0.5 * math.log(lln) - 0.5 * math.log(math.pi))


def lrt_gumbel(x, p: int | None = None, alpha: float = 0.05, exact: bool = False) -> AmocResult:
    x = as_array(x)
    _check_alpha(alpha)
    n = len(x)
    if n < 20:
        raise ValueError("the Gumbel-scaled LRT needs N >= 20")
    if np.ptp(x) == 0.0:
        return _constant_result(Method.LRT, limits.GUMBEL, n, 0 if p is None else p, alpha)
    p = _resolve_order(x, p)
    curve = lrt_curve(x, p, exact)
    location = argmax_location(np.r_[curve, -np.inf])
    u = float(curve[location - 1])
    w = gumbel_scale(u, n)
    crit = limits.gumbel_quantile(1.0 - alpha)
    return AmocResult(u, w, location, crit, limits.p_value(limits.GUMBEL, w), w > crit,
                      Method.LRT, p, alpha, curve)


def lrt_cropped(x, p: int | None = None, ell: float = 0.05, h: float = 0.95,
                alpha: float = 0.05, exact: bool = False) -> AmocResult:
    """LRT maximized over ``ell <= k/N <= h``, compared with the cropped bridge-ratio law."""
    x = as_array(x)
    _check_alpha(alpha)
    law = limits.cropped(ell, h)
    n = len(x)
    lo = max(1, math.ceil(ell * n - 1e-9))
    hi = min(n - 1, math.floor(h * n + 1e-9))
    if hi < lo:
        raise ValueError(f"no admissible changepoint times in [{ell}, {h}] for N={n}")
    if np.ptp(x) == 0.0:
        return _constant_result(Method.LRT_CROPPED, law, n, 0 if p is None else p, alpha)
    p = _resolve_order(x, p)
    if lo < p + 2:
        raise ValueError(f"cropping window starts at {lo}, needs at least p + 2 = {p + 2}")
    curve = lrt_curve(x, p, exact)
    window = np.full(n, -np.inf)
    window[lo - 1 : hi] = curve[lo - 1 : hi]
    location = argmax_location(window)
    u = float(curve[location - 1])
    crit = limits.critical_value(law, alpha)
    return AmocResult(u, u, location, crit, limits.p_value(law, u), u > crit,
                      Method.LRT_CROPPED, p, alpha, curve)


TESTS = {
    Method.CUSUM_X: cusum_test_x,
    Method.CUSUM_Z: cusum_test_z,
    Method.SCUSUM_X: scusum_x,
    Method.SCUSUM_Z: scusum_z,
    Method.LRT: lrt_gumbel,
    Method.LRT_CROPPED: lrt_cropped,
}


def run_test(method: str | Method, x, p: int | None = None, alpha: float = 0.05, **kwargs) -> AmocResult:
    return TESTS[Method(method)](x, p=p, alpha=alpha, **kwargs)
