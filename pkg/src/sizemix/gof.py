"""One- and two-sample KS, Cramer-von Mises, and Anderson-Darling statistics.

The one-sample statistics are used as distances between the empirical CDF
and a fitted model (smaller is better); no p-values are attached to them.
Two-sample versions carry Monte-Carlo permutation p-values.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "GofReport",
    "ks_stat",
    "cm_stat",
    "ad_stat",
    "compute_gof",
    "two_sample_tests",
    "TwoSampleReport",
]

_CDF_EPS = 1e-15


@dataclass(frozen=True)
class GofReport:
    """KS/CM/AD distances of a sample against one model CDF."""

    ks: float
    cm: float
    ad: float
    n: int
    boundary_clamped: bool = False


def _cdf_values(data, model_cdf):
    x = np.asarray(data, dtype=float)
    if x.size == 0:
        raise DomainError("data must be nonempty")
    x = np.sort(x)
    return np.asarray(model_cdf(x), dtype=float)


def ks_stat(data, model_cdf):
    """sup_x |cdf_n(x) - cdf_B(x)| over the 2n jump candidates."""
    f = _cdf_values(data, model_cdf)
    n = f.size
    i = np.arange(1, n + 1)
    return float(np.max(np.maximum(i / n - f, f - (i - 1) / n)))


def cm_stat(data, model_cdf):
    """1/(12n) + sum_i ((2i-1)/(2n) - cdf(x_(i)))^2."""
    f = _cdf_values(data, model_cdf)
    n = f.size
    i = np.arange(1, n + 1)
    return float(1.0 / (12.0 * n) + np.sum(((2.0 * i - 1.0) / (2.0 * n) - f) ** 2))


def ad_stat(data, model_cdf, return_flag=False):
    """-n - sum_i (2i-1)/n [ln cdf(x_(i)) + ln(1 - cdf(x_(n+1-i)))].

    CDF values at the data are clamped to [1e-15, 1-1e-15]; a clamp is
    reported via the boundary flag when requested.
    """
    f = _cdf_values(data, model_cdf)
    clamped = bool(np.any((f <= 0.0) | (f >= 1.0)))
    f = np.clip(f, _CDF_EPS, 1.0 - _CDF_EPS)
    n = f.size
    i = np.arange(1, n + 1)
    ad = float(-n - np.sum((2.0 * i - 1.0) / n * (np.log(f) + np.log(1.0 - f[::-1]))))
    return (ad, clamped) if return_flag else ad


def compute_gof(data, model_cdf):
    """All three one-sample statistics in one GofReport."""
    ad, clamped = ad_stat(data, model_cdf, return_flag=True)
    return GofReport(
        ks=ks_stat(data, model_cdf),
        cm=cm_stat(data, model_cdf),
        ad=ad,
        n=len(data),
        boundary_clamped=clamped,
    )


@dataclass(frozen=True)
class TwoSampleReport:
    ks: float
    cm: float
    ad: float
    p_ks: float
    p_cm: float
    p_ad: float
    n_perm: int


def _two_sample_stats(mask, n, m):
    """KS/CM/AD from the sample-1 membership mask over the sorted pool."""
    big_n = n + m
    mk = np.cumsum(mask)
    k = np.arange(1, big_n + 1)
    f1 = mk / n
    f2 = (k - mk) / m
    ks = float(np.max(np.abs(f1 - f2)))
    cm = float(n * m / big_n**2 * np.sum((f1 - f2) ** 2))
    inner = (mk[:-1] * big_n - n * k[:-1]) ** 2 / (k[:-1] * (big_n - k[:-1]))
    ad = float(np.sum(inner) / (n * m))
    return ks, cm, ad


def two_sample_tests(a, b, n_perm=999, seed=0):
    """Two-sample KS/CM/AD with Monte-Carlo permutation p-values.

    Tie corrections are not applied (the sales data are continuous); the
    permutation null makes the p-values exact regardless.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise DomainError("both samples must be nonempty")
    pool = np.concatenate([a, b])
    mask = np.zeros(pool.size, dtype=bool)
    mask[: a.size] = True
    order = np.argsort(pool, kind="mergesort")
    obs = _two_sample_stats(mask[order], a.size, b.size)

    gen = np.random.default_rng(seed)
    exceed = np.zeros(3)
    shuffled = mask.copy()
    for _ in range(n_perm):
        gen.shuffle(shuffled)
        stats = _two_sample_stats(shuffled, a.size, b.size)
        exceed += [s >= o for s, o in zip(stats, obs)]
    pvals = (1.0 + exceed) / (n_perm + 1.0)
    return TwoSampleReport(
        ks=obs[0], cm=obs[1], ad=obs[2],
        p_ks=float(pvals[0]), p_cm=float(pvals[1]), p_ad=float(pvals[2]),
        n_perm=n_perm,
    )
