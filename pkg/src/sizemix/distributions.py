"""The six base size-distribution families on x > 0.

Every family exposes densities both in x-space and in the working variable
y = ln(x): ``log_pdf_y``/``pdf_y``/``cdf_y`` act on y, while
``pdf``/``log_pdf``/``cdf`` act on x (differing by the 1/x Jacobian).
Fitting uses the y-space forms for conditioning.

All evaluation methods are numpy-vectorized and pure.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import special as _sp

from .errors import DomainError
from .special import log_std_normal_cdf, reg_inc_beta, std_normal_cdf

__all__ = [
    "LNParams",
    "DPLNParams",
    "GB2Params",
    "LNSNPParams",
    "LLParams",
    "LStParams",
    "hermite_h",
    "student_cdf",
    "student_log_pdf",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def hermite_h(k, z):
    """Probabilists' Hermite polynomial h_k(z) for k in 1..4.

    h1 = z, h2 = z^2 - 1, h3 = z^3 - 3z, h4 = z^4 - 6z^2 + 3.
    """
    z = np.asarray(z, dtype=float)
    if k == 1:
        out = z
    elif k == 2:
        out = z * z - 1.0
    elif k == 3:
        out = z**3 - 3.0 * z
    elif k == 4:
        out = z**4 - 6.0 * z * z + 3.0
    else:
        raise DomainError(f"hermite_h defined for k in 1..4, got {k}")
    return out[()] if out.ndim == 0 else out


def student_log_pdf(y, mu, sigma, nu):
    """Log density of the location-scale Student t in y; nu=inf gives the normal."""
    y = np.asarray(y, dtype=float)
    z = (y - mu) / sigma
    if np.isinf(nu):
        return -0.5 * z * z - math.log(sigma) - _LOG_SQRT_2PI
    c = (
        _sp.gammaln((nu + 1.0) / 2.0)
        - _sp.gammaln(nu / 2.0)
        - 0.5 * math.log(math.pi * nu)
        - math.log(sigma)
    )
    return c - 0.5 * (nu + 1.0) * np.log1p(z * z / nu)


def student_cdf(y, mu, sigma, nu):
    """CDF of the location-scale Student t in y; nu=inf gives the normal."""
    z = (np.asarray(y, dtype=float) - mu) / sigma
    if np.isinf(nu):
        return _sp.ndtr(z)
    return _sp.stdtr(nu, z)


def _as_log_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("support is x > 0")
    return np.log(x)


class _BaseDist:
    """x-space evaluation derived from the y = ln(x) forms."""

    def pdf_y(self, y):
        return np.exp(self.log_pdf_y(y))

    def pdf(self, x):
        return np.exp(self.log_pdf(x))

    def log_pdf(self, x):
        y = _as_log_x(x)
        return self.log_pdf_y(y) - y

    def cdf(self, x):
        return self.cdf_y(_as_log_x(x))

    def sf_y(self, y):
        """Survival function 1 - cdf_y; subclasses override it with a form
        that keeps relative precision in the upper tail."""
        return 1.0 - self.cdf_y(y)


@dataclass(frozen=True)
class LNParams(_BaseDist):
    """Lognormal: mu is the log-scale location, sigma > 0 the log-scale width."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("LN requires sigma > 0")

    def log_pdf_y(self, y):
        return student_log_pdf(y, self.mu, self.sigma, math.inf)

    def cdf_y(self, y):
        return std_normal_cdf((np.asarray(y, dtype=float) - self.mu) / self.sigma)

    def sf_y(self, y):
        return std_normal_cdf((self.mu - np.asarray(y, dtype=float)) / self.sigma)


@dataclass(frozen=True)
class DPLNParams(_BaseDist):
    """Double Pareto lognormal with tail exponents alpha (upper), beta (lower)."""

    alpha: float
    beta: float
    mu: float
    sigma: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0 and self.sigma > 0):
            raise DomainError("DPLN requires alpha, beta, sigma > 0")

    def _pieces(self, y):
        # log of exp(.)*Phi(.) Mills-type products, computed via log_ndtr to
        # avoid overflow when alpha*sigma^2 or beta*sigma^2 is large
        a, b, mu, s = self.alpha, self.beta, self.mu, self.sigma
        d = np.asarray(y, dtype=float) - mu
        log_t1 = -a * d + 0.5 * a * a * s * s + log_std_normal_cdf((d - a * s * s) / s)
        log_t2 = b * d + 0.5 * b * b * s * s + log_std_normal_cdf((-d - b * s * s) / s)
        return log_t1, log_t2

    def log_pdf_y(self, y):
        a, b = self.alpha, self.beta
        log_t1, log_t2 = self._pieces(y)
        return math.log(a * b / (a + b)) + np.logaddexp(log_t1, log_t2)

    def cdf_y(self, y):
        a, b, mu, s = self.alpha, self.beta, self.mu, self.sigma
        z = (np.asarray(y, dtype=float) - mu) / s
        log_t1, log_t2 = self._pieces(y)
        out = std_normal_cdf(z) - (b * np.exp(log_t1) - a * np.exp(log_t2)) / (a + b)
        return np.clip(out, 0.0, 1.0)

    def sf_y(self, y):
        a, b, mu, s = self.alpha, self.beta, self.mu, self.sigma
        z = (np.asarray(y, dtype=float) - mu) / s
        log_t1, log_t2 = self._pieces(y)
        out = std_normal_cdf(-z) + (b * np.exp(log_t1) - a * np.exp(log_t2)) / (a + b)
        return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True)
class GB2Params(_BaseDist):
    """Generalized Beta of the second kind with shape a, scale b and p, q."""

    a: float
    b: float
    p: float
    q: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.p > 0 and self.q > 0):
            raise DomainError("GB2 requires a, b, p, q > 0")

    def log_pdf_y(self, y):
        a, p, q = self.a, self.p, self.q
        u = np.asarray(y, dtype=float) - math.log(self.b)
        log_beta = _sp.gammaln(p) + _sp.gammaln(q) - _sp.gammaln(p + q)
        # (p+q) * log(1 + e^{a u}) via logaddexp for stability
        return math.log(a) + a * p * u - log_beta - (p + q) * np.logaddexp(0.0, a * u)

    def cdf_y(self, y):
        u = np.asarray(y, dtype=float) - math.log(self.b)
        t = _sp.expit(self.a * u)  # (x/b)^a / (1 + (x/b)^a)
        return reg_inc_beta(t, self.p, self.q)

    def sf_y(self, y):
        u = np.asarray(y, dtype=float) - math.log(self.b)
        return reg_inc_beta(_sp.expit(-self.a * u), self.q, self.p)


@dataclass(frozen=True)
class LNSNPParams(_BaseDist):
    """Lognormal times a degree-4 Hermite expansion (semi-nonparametric).

    The expansion can make the signed density dip negative for some
    coefficient vectors; feasibility is enforced at estimation time, not
    here.  ``cdf_y`` is the closed-form antiderivative and integrates the
    signed density exactly.
    """

    mu: float
    sigma: float
    d1: float
    d2: float
    d3: float
    d4: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("LNSNP requires sigma > 0")

    @property
    def coeffs(self):
        return (self.d1, self.d2, self.d3, self.d4)

    def poly_factor(self, z):
        """1 + sum_k d_k h_k(z); negative values mean an infeasible density."""
        z = np.asarray(z, dtype=float)
        out = np.ones_like(z)
        for k, d in enumerate(self.coeffs, start=1):
            out = out + d * hermite_h(k, z)
        return out

    def pdf_y(self, y):
        z = (np.asarray(y, dtype=float) - self.mu) / self.sigma
        base = np.exp(-0.5 * z * z) / (self.sigma * math.sqrt(2.0 * math.pi))
        return base * self.poly_factor(z)

    def log_pdf_y(self, y):
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.log(self.pdf_y(y))
        return np.where(np.isnan(out), -np.inf, out)

    def cdf_y(self, y):
        d1, d2, d3, d4 = self.coeffs
        z = (np.asarray(y, dtype=float) - self.mu) / self.sigma
        phi = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        # antiderivative of phi(z) h_k(z) is -phi(z) h_{k-1}(z)
        tail = d1 + d2 * z + d3 * (z * z - 1.0) + d4 * (z**3 - 3.0 * z)
        return std_normal_cdf(z) - phi * tail

    def sf_y(self, y):
        d1, d2, d3, d4 = self.coeffs
        z = (np.asarray(y, dtype=float) - self.mu) / self.sigma
        phi = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
        tail = d1 + d2 * z + d3 * (z * z - 1.0) + d4 * (z**3 - 3.0 * z)
        return std_normal_cdf(-z) + phi * tail


@dataclass(frozen=True)
class LLParams(_BaseDist):
    """Loglogistic: logistic in y = ln(x) with location mu and scale sigma > 0."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("LL requires sigma > 0")

    def log_pdf_y(self, y):
        u = (np.asarray(y, dtype=float) - self.mu) / self.sigma
        return -u - math.log(self.sigma) - 2.0 * np.logaddexp(0.0, -u)

    def cdf_y(self, y):
        u = (np.asarray(y, dtype=float) - self.mu) / self.sigma
        return _sp.expit(u)

    def sf_y(self, y):
        u = (np.asarray(y, dtype=float) - self.mu) / self.sigma
        return _sp.expit(-u)


@dataclass(frozen=True)
class LStParams(_BaseDist):
    """Log Student's t: location-scale Student t in y with nu degrees of freedom."""

    mu: float
    sigma: float
    nu: float

    def __post_init__(self):
        if not (self.sigma > 0 and self.nu > 0):
            raise DomainError("LSt requires sigma > 0 and nu > 0")

    def log_pdf_y(self, y):
        return student_log_pdf(y, self.mu, self.sigma, self.nu)

    def cdf_y(self, y):
        return student_cdf(y, self.mu, self.sigma, self.nu)

    def sf_y(self, y):
        z = (np.asarray(y, dtype=float) - self.mu) / self.sigma
        if np.isinf(self.nu):
            return _sp.ndtr(-z)
        return _sp.stdtr(self.nu, -z)
