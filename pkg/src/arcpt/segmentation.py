"""Recursive multiple-changepoint searches: binary and wild binary segmentation.

Both searches decorrelate with a single global AR fit from the differenced
series and then work on one-step-ahead prediction residuals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import limits
from .amoc import cusum_curve
from .series import ArModel, ChangepointConfig, ar_filter, as_array, fit_ar_differenced, one_step_residuals

WBS_MAX_INTERVALS = 5000


@dataclass(frozen=True)
class SegmentationParams:
    """Tuning for :func:`binary_segment` and :func:`wbs`.

    ``min_segment_length=None`` means ``max(10, p + 2)``; ``wbs_intervals=None``
    means the sampling-theory count capped at 5000 (see :func:`default_wbs_intervals`).
    """

    min_segment_length: int | None = None
    alpha: float = 0.05
    wbs_constant: float = 1.3
    wbs_intervals: int | None = None
    seed: int = 0

    def min_length(self, p: int) -> int:
        if self.min_segment_length is None:
            return max(10, p + 2)
        if self.min_segment_length < max(2, p + 2):
            raise ValueError(f"min_segment_length must be >= max(2, p + 2) = {max(2, p + 2)}")
        return self.min_segment_length


def default_wbs_intervals(n: int, delta: int, cap: int | None = WBS_MAX_INTERVALS) -> int:
    """``9 N^2 ln(N^2 / delta) / delta^2`` intervals, capped at ``cap`` unless ``cap`` is None."""
    full = math.ceil(9.0 * n * n * math.log(n * n / delta) / (delta * delta))
    return full if cap is None else min(full, cap)


@dataclass(frozen=True)
class SegmentationResult:
    config: ChangepointConfig
    model: ArModel
    min_segment_length: int


def _check_length(n: int, min_len: int):
    if n <= 2 * min_len:
        raise ValueError(f"series of length {n} too short for min_segment_length {min_len}")


def _scusum_segment(y: np.ndarray, phi, min_len: int) -> tuple[float, int]:
    """Scaled SCUSUM_Z on one segment with AR coefficients held fixed.

    Residuals restart at the segment start about the segment mean. Returns the
    statistic and the admissible argmax of ``|CUSUM_Z|`` (relative, 1-based).
    """
    z = ar_filter(y - y.mean(), phi)
    s2 = float(np.mean(z * z))
    if s2 == 0.0:
        return 0.0, min_len
    curve = cusum_curve(z)
    stat = float(np.mean(curve * curve)) / s2
    n = len(y)
    window = np.abs(curve[min_len - 1 : n - min_len])
    return stat, int(np.argmax(window)) + min_len


def binary_segment(x, p: int = 1, params: SegmentationParams = SegmentationParams(),
                   model: ArModel | None = None) -> SegmentationResult:
    """Binary segmentation driven by the residual SCUSUM test.

    A segment is split at its admissible ``|CUSUM_Z|`` maximizer whenever the
    test rejects at ``params.alpha``; segments shorter than twice the minimum
    length are not tested.
    """
    x = as_array(x)
    n = len(x)
    min_len = params.min_length(p)
    _check_length(n, min_len)
    if model is None:
        model = fit_ar_differenced(x, p)
    crit = limits.critical_value(limits.INT_SQ, params.alpha)
    taus: list[int] = []
    stack = [(0, n)]
    while stack:
        s, e = stack.pop()
        if e - s < 2 * min_len:
            continue
        stat, k = _scusum_segment(x[s:e], model.phi, min_len)
        if stat > crit:
            taus.append(s + k)
            stack.append((s + k, e))
            stack.append((s, s + k))
    return SegmentationResult(ChangepointConfig(tuple(sorted(taus))), model, min_len)


def sample_intervals(n: int, M: int, min_len: int, seed: int) -> np.ndarray:
    """``M`` half-open intervals ``[s, e)`` within ``[0, n)`` with ``e - s >= min_len``.

    Start and end are drawn uniformly and pairs violating the length
    constraint are redrawn, so the result is uniform over admissible pairs.
    """
    if min_len < 2 or min_len > n:
        raise ValueError(f"infeasible minimum interval length {min_len} for n={n}")
    if M <= 0:
        return np.empty((0, 2), dtype=int)
    rng = np.random.default_rng(seed)
    out = np.empty((0, 2), dtype=int)
    while len(out) < M:
        s = rng.integers(0, n + 1, size=2 * M)
        e = rng.integers(0, n + 1, size=2 * M)
        keep = e - s >= min_len
        out = np.vstack([out, np.column_stack([s[keep], e[keep]])])
    return out[:M]


def _interval_maxima(z: np.ndarray, intervals: np.ndarray, min_len: int) -> tuple[np.ndarray, np.ndarray]:
    """Max normalized CUSUM contrast and its split for each interval.

    For ``[s, e)`` split after ``b`` observations, the contrast is
    ``sqrt(n1 n2 / n) |mean_left - mean_right|``; only splits leaving
    ``min_len`` points on both sides are considered.
    """
    S = np.r_[0.0, np.cumsum(z)]
    best = np.full(len(intervals), -np.inf)
    where = np.zeros(len(intervals), dtype=int)
    for i, (s, e) in enumerate(intervals):
        length = e - s
        if length < 2 * min_len:
            continue
        b = np.arange(s + min_len, e - min_len + 1)
        n1 = b - s
        n2 = e - b
        left = S[b] - S[s]
        right = S[e] - S[b]
        stat = np.abs(np.sqrt(n2 / (length * n1)) * left - np.sqrt(n1 / (length * n2)) * right)
        j = int(np.argmax(stat))
        best[i], where[i] = stat[j], b[j]
    return best, where


def wbs(x, p: int = 1, params: SegmentationParams = SegmentationParams(),
        model: ArModel | None = None) -> SegmentationResult:
    """Wild binary segmentation on globally decorrelated residuals.

    Threshold ``C * sigma * sqrt(2 ln N)`` with ``sigma`` the innovation
    standard deviation of the global fit. The random intervals are drawn once
    and an interval takes part in a recursion step when it lies inside the
    current segment; the segment itself is always a candidate.
    """
    x = as_array(x)
    n = len(x)
    min_len = params.min_length(p)
    _check_length(n, min_len)
    if model is None:
        model = fit_ar_differenced(x, p)
    z = one_step_residuals(x, model)
    M = params.wbs_intervals if params.wbs_intervals is not None else default_wbs_intervals(n, min_len)
    drawn = sample_intervals(n, M, 2 * min_len, params.seed)
    threshold = params.wbs_constant * math.sqrt(model.sigma2) * math.sqrt(2.0 * math.log(n))
    drawn_best, drawn_where = _interval_maxima(z, drawn, min_len)
    taus: list[int] = []
    stack = [(0, n)]
    while stack:
        s, e = stack.pop()
        if e - s < 2 * min_len:
            continue
        inside = (drawn[:, 0] >= s) & (drawn[:, 1] <= e)
        own_best, own_where = _interval_maxima(z, np.array([[s, e]]), min_len)
        cand_best = np.r_[own_best, drawn_best[inside]]
        cand_where = np.r_[own_where, drawn_where[inside]]
        j = int(np.argmax(cand_best))
        if cand_best[j] > threshold:
            b = int(cand_where[j])
            taus.append(b)
            stack.append((b, e))
            stack.append((s, b))
    return SegmentationResult(ChangepointConfig(tuple(sorted(taus))), model, min_len)
