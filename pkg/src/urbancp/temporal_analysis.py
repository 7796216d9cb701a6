"""Regularity analysis of traffic time series and the temporal matrix.

A fiber ``y[i, j, :]`` with missing entries is represented as a float array
with NaN at the missing positions.  Sample entropy follows the conditional
probability convention: template pairs of length m and m+1 are both counted
over the indices 0..L-m-1, so a constant series scores exactly 0.  With
missing data, only windows of length m+1 free of NaN are eligible and both
counts run over that same index set, which reduces to the complete-data
value when nothing is missing.

The tolerance parameter is taken relative to the standard deviation of the
observed values (the series is effectively standardized to unit variance
before template matching).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Bound on the pairwise distance block so long series stay within memory.
_PAIR_BLOCK = 512

# Bonferroni-style false-alarm level for the dominant-frequency test under
# the exponential null of a pure-noise periodogram.
_FALSE_ALARM = 0.01

_CONCAVE_EPS = 1e-12


@dataclass(frozen=True)
class SampEnParams:
    m: int = 3
    tolerance: float = 0.3

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.tolerance <= 0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")


def _pair_counts(templates: np.ndarray, m: int, tol: float) -> tuple[int, int]:
    """Counts of off-diagonal template pairs matching at lengths m and m+1."""
    n = templates.shape[0]
    b = a = 0
    for lo in range(0, n, _PAIR_BLOCK):
        hi = min(lo + _PAIR_BLOCK, n)
        diff = np.abs(templates[lo:hi, None, :] - templates[None, :, :])
        dm = diff[:, :, :m].max(axis=2)
        dm1 = np.maximum(dm, diff[:, :, m])
        off = np.ones((hi - lo, n), dtype=bool)
        off[np.arange(hi - lo), np.arange(lo, hi)] = False
        b += int(np.count_nonzero((dm <= tol) & off))
        a += int(np.count_nonzero((dm1 <= tol) & off))
    return b, a


def _entropy_from_starts(values: np.ndarray, starts: np.ndarray, p: SampEnParams) -> float:
    if starts.size < 2:
        return math.inf
    observed = values[np.isfinite(values)]
    tol = p.tolerance * float(np.std(observed))
    templates = values[starts[:, None] + np.arange(p.m + 1)[None, :]]
    b, a = _pair_counts(templates, p.m, tol)
    if a == 0 or b == 0:
        return math.inf
    return math.log(b / a)


def sample_entropy(values, p: SampEnParams = SampEnParams()) -> float:
    """Sample entropy of a complete series; lower means more regular.

    Returns +inf when no template pair matches at either length (the
    undefined-entropy outcome, ranked as maximally irregular).
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size < p.m + 2:
        raise ValueError(f"need a 1-d series longer than m+1, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("series contains missing values; use keep_samp_en")
    starts = np.arange(values.size - p.m)
    return _entropy_from_starts(values, starts, p)


def keep_samp_en(values, p: SampEnParams = SampEnParams()) -> float:
    """Sample entropy over only the NaN-free windows of length m+1.

    Equals :func:`sample_entropy` exactly when nothing is missing; returns
    +inf when fewer than two complete windows exist.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size < p.m + 2:
        raise ValueError(f"need a 1-d series longer than m+1, got shape {values.shape}")
    finite = np.isfinite(values)
    window_ok = np.all(
        finite[np.arange(values.size - p.m)[:, None] + np.arange(p.m + 1)[None, :]],
        axis=1,
    )
    starts = np.flatnonzero(window_ok)
    return _entropy_from_starts(values, starts, p)


def fiber_with_missing(y: np.ndarray, w: np.ndarray, i: int, j: int) -> np.ndarray:
    """Mode-3 fiber of y with masked entries replaced by NaN."""
    fiber = np.array(y[i, j, :], dtype=float)
    fiber[w[i, j, :] == 0.0] = np.nan
    return fiber


def most_regular_series(
    y: np.ndarray, w: np.ndarray, p: SampEnParams = SampEnParams()
) -> tuple[int, int, np.ndarray]:
    """Fiber (i, j) with minimal keep_samp_en; lexicographic tie-break."""
    best = (math.inf, None)
    for i in range(y.shape[0]):
        for j in range(y.shape[1]):
            fiber = fiber_with_missing(y, w, i, j)
            value = keep_samp_en(fiber, p)
            if value < best[0]:
                best = (value, (i, j, fiber))
    if best[1] is None:
        raise ValueError("no fiber has enough complete templates for sample entropy")
    return best[1]


@dataclass(frozen=True)
class Periodogram:
    frequencies: np.ndarray
    powers: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        pw = np.asarray(self.powers, dtype=float)
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "powers", pw)
        if f.shape != pw.shape or f.ndim != 1:
            raise ValueError("frequencies and powers must be 1-d and equally long")
        if np.any(np.diff(f) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        if np.any(pw < 0):
            raise ValueError("powers must be non-negative")


def lomb_scargle_power(times, values, frequencies) -> np.ndarray:
    """Least-squares spectral power of (time, value) samples.

    The per-frequency phase offset makes the result invariant under a
    common shift of all sample times.  Values are centered on their mean.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ValueError("times and values must be 1-d and equally long")
    if t.size < 2:
        raise ValueError("need at least two observed samples")
    y = y - y.mean()
    omega = 2.0 * np.pi * np.asarray(frequencies, dtype=float)[:, None]
    tau = np.arctan2(np.sin(2.0 * omega * t).sum(axis=1), np.cos(2.0 * omega * t).sum(axis=1))
    phase = omega * t - 0.5 * tau[:, None]
    c, s = np.cos(phase), np.sin(phase)
    cc = (c * c).sum(axis=1)
    ss = (s * s).sum(axis=1)
    yc = (y * c).sum(axis=1)
    ys = (y * s).sum(axis=1)
    tiny = 1e-12
    return 0.5 * (
        np.where(cc > tiny, yc**2 / np.where(cc > tiny, cc, 1.0), 0.0)
        + np.where(ss > tiny, ys**2 / np.where(ss > tiny, ss, 1.0), 0.0)
    )


def lomb_scargle(values) -> Periodogram:
    """Periodogram of a gapped series at frequencies k/L, k = 1..L//2."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise ValueError("values must be 1-d")
    length = values.size
    observed = np.flatnonzero(np.isfinite(values))
    if observed.size < 2:
        raise ValueError("need at least two observed samples")
    freqs = np.arange(1, length // 2 + 1) / length
    powers = lomb_scargle_power(observed.astype(float), values[observed], freqs)
    return Periodogram(freqs, powers)


def dominant_period_range(pg: Periodogram, length: int) -> tuple[int, int] | None:
    """Integer period range [t1, t2) mapped from the dominant frequency.

    The dominant peak must exceed mean_power * ln(K / false_alarm), the
    Bonferroni-corrected cutoff under an exponential pure-noise null; a
    flat or noise-like periodogram therefore yields None (no period).
    """
    powers = pg.powers
    if powers.size == 0:
        raise ValueError("empty periodogram")
    k = int(np.argmax(powers)) + 1  # frequencies start at k = 1
    cutoff = float(powers.mean()) * math.log(powers.size / _FALSE_ALARM)
    if float(powers[k - 1]) < cutoff:
        return None
    t1 = length // k
    t2 = math.ceil(length / (k - 1)) if k > 1 else length + 1
    t1 = max(t1, 2)
    t2 = min(t2, length)
    if t1 >= t2:
        return None
    return t1, t2


def circular_autocorr(values, lag: int) -> float:
    """Mean of products at circular offset ``lag`` over co-observed pairs."""
    values = np.asarray(values, dtype=float)
    length = values.size
    if not 0 <= lag < length:
        raise ValueError(f"lag must be in [0, {length}), got {lag}")
    shifted = np.roll(values, -lag)
    both = np.isfinite(values) & np.isfinite(shifted)
    count = int(both.sum())
    if count == 0:
        return 0.0
    return float(np.sum(values[both] * shifted[both])) / count


def detect_period(values) -> int | None:
    """Spectral peak mapped to a period range, confirmed by autocorrelation.

    A least-squares parabola over the candidate lags must open downward for
    the peak to count; ranges too short to fit a parabola accept the argmax
    directly.  Returns None when no periodicity is found.
    """
    values = np.asarray(values, dtype=float)
    pg = lomb_scargle(values)
    period_range = dominant_period_range(pg, values.size)
    if period_range is None:
        return None
    lags = np.arange(period_range[0], period_range[1])
    corr = np.array([circular_autocorr(values, int(t)) for t in lags])
    if lags.size >= 3:
        leading = np.polyfit(lags, corr, 2)[0]
        if leading >= -_CONCAVE_EPS:
            return None
    return int(lags[np.argmax(corr)])


def toeplitz_temporal(length: int, period: int) -> np.ndarray:
    """T x T differencing matrix: unit diagonal, -1 offset by ``period``."""
    if not 1 <= period < length:
        raise ValueError(f"period must be in [1, {length}), got {period}")
    out = np.eye(length)
    idx = np.arange(length - period)
    out[idx, idx + period] = -1.0
    return out


def build_temporal_matrix(
    y: np.ndarray, w: np.ndarray, p: SampEnParams = SampEnParams()
) -> tuple[np.ndarray, dict]:
    """Temporal matrix from the most regular fiber of observed data.

    Falls back to the adjacent-slot matrix (period 1) when no fiber is
    eligible for the entropy scan or no period is detected; the metadata
    records the chosen fiber, its entropy, the period and whether the
    fallback fired.
    """
    horizon = y.shape[2]
    meta = {"i": None, "j": None, "sampen": None, "period": 1, "fallback": True}
    try:
        i, j, fiber = most_regular_series(y, w, p)
    except ValueError:
        return toeplitz_temporal(horizon, 1), meta
    meta["i"], meta["j"] = int(i), int(j)
    meta["sampen"] = float(keep_samp_en(fiber, p))
    period = detect_period(fiber)
    if period is None or not 1 <= period < horizon:
        return toeplitz_temporal(horizon, 1), meta
    meta["period"] = int(period)
    meta["fallback"] = False
    return toeplitz_temporal(horizon, period), meta
