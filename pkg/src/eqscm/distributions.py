"""Binomial and Poisson mass/quantile numerics used by the noise transforms.

Probability masses are computed term by term in log space and summed, which
stays exact to ~1e-15 for the pool sizes this package targets (T up to 1e4)
even for success probabilities deep in a tail.  The quantile convention is
the usual inverse CDF: ``ppf(u)`` is the smallest k with ``F(k) >= u``, which
makes the transforms nondecreasing in both ``u`` and the success probability.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _lgamma_table(n: int) -> np.ndarray:
    """lgamma(k+1) for k = 0..n."""
    return np.array([math.lgamma(k + 1) for k in range(n + 1)])


def binom_log_pmf(n: int, p: float) -> np.ndarray:
    """log P(X = k) for k = 0..n; exact -inf entries at degenerate p."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"success probability {p} outside [0, 1]")
    k = np.arange(n + 1)
    out = np.full(n + 1, -np.inf)
    if p == 0.0:
        out[0] = 0.0
        return out
    if p == 1.0:
        out[n] = 0.0
        return out
    lg = _lgamma_table(n)
    return lg[n] - lg - lg[::-1] + k * math.log(p) + (n - k) * math.log1p(-p)


def binom_cdf_table(n: int, p: float) -> np.ndarray:
    """F(k) for k = 0..n (last entry may round slightly below 1)."""
    return np.cumsum(np.exp(binom_log_pmf(n, p)))


def binom_cdf(k: int, n: int, p: float) -> float:
    if k < 0:
        return 0.0
    if k >= n:
        return 1.0
    return float(binom_cdf_table(n, p)[k])


def binom_ppf(u: float, n: int, p: float) -> int:
    """Smallest k with F(k) >= u, clipped to [0, n]."""
    return int(binom_ppf_vec(np.asarray([u]), n, p)[0])


def binom_ppf_vec(
    u: np.ndarray, n: int, p: float | np.ndarray, chunk: int = 200_000
) -> np.ndarray:
    """Vectorized inverse binomial CDF; ``p`` may vary per element of ``u``."""
    u = np.asarray(u, dtype=float)
    if np.isscalar(p) or np.ndim(p) == 0:
        cdf = binom_cdf_table(n, float(p))
        return np.searchsorted(cdf, u, side="left").clip(0, n).astype(np.int64)
    p = np.asarray(p, dtype=float)
    if p.shape != u.shape:
        raise ValueError("u and p must have matching shapes")
    if np.any((p < 0) | (p > 1)):
        raise ValueError("success probability outside [0, 1]")
    out = np.empty(u.shape, dtype=np.int64)
    # row block sizing keeps the (rows, n+1) pmf matrix bounded in memory
    rows = max(1, chunk // (n + 1))
    k = np.arange(n + 1)
    lg = _lgamma_table(n)
    logc = lg[n] - lg - lg[::-1]
    for start in range(0, u.size, rows):
        sl = slice(start, min(start + rows, u.size))
        pc = p[sl, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            logpmf = logc[None, :] + k * np.log(pc) + (n - k) * np.log1p(-pc)
        # k*log(p) is 0*-inf = nan at the boundary columns; fix degenerate rows
        deg0 = pc[:, 0] == 0.0
        deg1 = pc[:, 0] == 1.0
        if deg0.any() or deg1.any():
            logpmf[deg0] = -np.inf
            logpmf[deg0, 0] = 0.0
            logpmf[deg1] = -np.inf
            logpmf[deg1, n] = 0.0
        cdf = np.cumsum(np.exp(logpmf), axis=1)
        out[sl] = (cdf < u[sl, None]).sum(axis=1)
    return out.clip(0, n)


def poisson_log_pmf(kmax: int, mu: float) -> np.ndarray:
    """log P(X = k) for k = 0..kmax."""
    if mu < 0:
        raise ValueError(f"Poisson mean {mu} must be >= 0")
    k = np.arange(kmax + 1)
    if mu == 0.0:
        out = np.full(kmax + 1, -np.inf)
        out[0] = 0.0
        return out
    return k * math.log(mu) - mu - _lgamma_table(kmax)


def _poisson_support(mu: float) -> int:
    # generous upper tail: P(X > mu + 12*sqrt(mu) + 40) is far below 2**-53
    return int(math.ceil(mu + 12.0 * math.sqrt(mu) + 40.0))


def poisson_cdf(k: int, mu: float) -> float:
    if k < 0:
        return 0.0
    return float(np.cumsum(np.exp(poisson_log_pmf(k, mu)))[k])


def poisson_ppf(u: float, mu: float) -> int:
    return int(poisson_ppf_vec(np.asarray([u]), mu)[0])


def poisson_ppf_vec(u: np.ndarray, mu: float | np.ndarray) -> np.ndarray:
    """Vectorized inverse Poisson CDF; ``mu`` may vary per element."""
    u = np.asarray(u, dtype=float)
    mus = np.broadcast_to(np.asarray(mu, dtype=float), u.shape)
    kmax = _poisson_support(float(mus.max(initial=0.0)))
    k = np.arange(kmax + 1)
    lgk = _lgamma_table(kmax)
    with np.errstate(divide="ignore", invalid="ignore"):
        logpmf = k * np.log(mus[..., None]) - mus[..., None] - lgk
    zero = mus == 0.0
    if zero.any():
        logpmf[zero] = -np.inf
        logpmf[zero, 0] = 0.0
    cdf = np.cumsum(np.exp(logpmf), axis=-1)
    return (cdf < u[..., None]).sum(axis=-1)
