"""Scalar special functions used by the distribution CDFs.

All functions are thin, domain-checked wrappers over scipy.special so that
every CDF in the package shares one accuracy-audited surface.  The wrappers
accept scalars or numpy arrays and are pure.

Accuracy budget: 1e-12 relative for the CDF building blocks, so that
log-likelihood differences of order 1e-6 between models remain trustworthy.
"""

import numpy as np
from scipy import special as _sp

from .errors import DomainError

__all__ = [
    "erf",
    "log_gamma",
    "beta_fn",
    "reg_inc_beta",
    "gauss_2f1_student",
    "std_normal_cdf",
    "log_std_normal_cdf",
]


def erf(x):
    """Error function, odd, range (-1, 1)."""
    return _sp.erf(x)


def log_gamma(x):
    """log Gamma(x) for x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("log_gamma requires x > 0")
    return _sp.gammaln(x)[()] if x.ndim == 0 else _sp.gammaln(x)


def beta_fn(p, q):
    """Beta function B(p, q) = Gamma(p)Gamma(q)/Gamma(p+q) for p, q > 0."""
    if np.any(np.asarray(p) <= 0) or np.any(np.asarray(q) <= 0):
        raise DomainError("beta_fn requires p, q > 0")
    return np.exp(_sp.gammaln(p) + _sp.gammaln(q) - _sp.gammaln(p + q))


def reg_inc_beta(z, p, q):
    """Regularized incomplete beta function I_z(p, q) on z in [0, 1]."""
    z = np.asarray(z, dtype=float)
    if np.any((z < 0) | (z > 1)):
        raise DomainError("reg_inc_beta requires 0 <= z <= 1")
    if np.any(np.asarray(p) <= 0) or np.any(np.asarray(q) <= 0):
        raise DomainError("reg_inc_beta requires p, q > 0")
    out = _sp.betainc(p, q, z)
    return out[()] if np.ndim(out) == 0 else out


def gauss_2f1_student(u, nu):
    """2F1(1/2, (1+nu)/2; 3/2; u) on the Student-CDF domain u <= 0.

    Only the restricted domain needed by the location-scale Student CDF is
    supported; nu > 0 is the degrees-of-freedom parameter.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u > 0):
        raise DomainError("gauss_2f1_student requires u <= 0")
    if np.any(np.asarray(nu) <= 0):
        raise DomainError("gauss_2f1_student requires nu > 0")
    out = _sp.hyp2f1(0.5, (1.0 + nu) / 2.0, 1.5, u)
    return out[()] if np.ndim(out) == 0 else out


def std_normal_cdf(z):
    """Standard normal CDF Phi(z) = 1/2 + erf(z/sqrt(2))/2."""
    return _sp.ndtr(z)


def log_std_normal_cdf(z):
    """log Phi(z), stable deep in the lower tail."""
    return _sp.log_ndtr(z)
