"""Maximum-likelihood fitting: Nelder-Mead core, transforms, and standard errors.

Fitting runs in an unconstrained transform space (log for positive
parameters, stick-breaking logits for mixture weights) so the simplex never
hits a constraint.  The objective is the negative *mean* y-space
log-likelihood, making tolerances sample-size independent.  Reported
log-likelihoods are x-space totals.
"""

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit, logit

from .distributions import (
    DPLNParams,
    GB2Params,
    LLParams,
    LNParams,
    LNSNPParams,
    LStParams,
)
from .errors import (
    DomainError,
    MassTooSmall,
    NonFiniteObjective,
    NotEstimable,
    SingularInformation,
)
from .mixtures import MixtureParams, canonicalize
from .truncation import truncate_mixture

__all__ = [
    "FitConfig",
    "FittedModel",
    "NMResult",
    "nelder_mead",
    "fit_mle",
    "standard_errors",
    "ln_closed_form_mle",
]

_WEIGHT_FLOOR = 1e-6
_LNSNP_GRID = np.linspace(-10.0, 10.0, 2001)


@dataclass(frozen=True)
class FitConfig:
    """Optimizer protocol knobs; the verification width of 8 SE is standard."""

    max_evals: int = 200_000
    simplex_tol: float = 1e-9
    n_starts: int = 10
    seed: int = 0
    se_step: float = 1e-4
    verify_width_se: float = 8.0

    def __post_init__(self):
        for name in ("max_evals", "simplex_tol", "n_starts", "se_step", "verify_width_se"):
            if not getattr(self, name) > 0:
                raise DomainError(f"FitConfig.{name} must be positive")


@dataclass(frozen=True)
class NMResult:
    x: np.ndarray
    fun: float
    n_evals: int
    n_iters: int
    converged: bool


def nelder_mead(objective, x0, simplex_tol=1e-9, max_evals=200_000, initial_step=0.25):
    """Nelder-Mead simplex minimization, coefficients (1, 2, 0.5, 0.5).

    Terminates when the relative simplex diameter drops below
    ``simplex_tol`` or after ``max_evals`` objective evaluations.
    """
    x0 = np.asarray(x0, dtype=float)
    dim = x0.size
    n_evals = 0

    def f(x):
        nonlocal n_evals
        n_evals += 1
        v = objective(x)
        return v if np.isfinite(v) else np.inf

    f0 = f(x0)
    if not np.isfinite(f0):
        raise NonFiniteObjective("objective not finite at the starting point")

    simplex = [x0]
    for i in range(dim):
        step = initial_step * max(1.0, abs(x0[i]))
        x = x0.copy()
        x[i] += step
        simplex.append(x)
    simplex = np.asarray(simplex)
    values = np.array([f0] + [f(x) for x in simplex[1:]])

    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5
    n_iters = 0
    converged = False
    while n_evals < max_evals:
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        best = simplex[0]
        diameter = max(np.linalg.norm(x - best) for x in simplex[1:])
        if diameter <= simplex_tol * max(1.0, np.linalg.norm(best)):
            converged = True
            break
        n_iters += 1
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + alpha * (centroid - worst)
        fr = f(xr)
        if values[0] <= fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        elif fr < values[0]:
            xe = centroid + gamma * (centroid - worst)
            fe = f(xe)
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
        else:
            if fr < values[-1]:
                xc = centroid + rho * (xr - centroid)
            else:
                xc = centroid + rho * (worst - centroid)
            fc = f(xc)
            if fc < min(fr, values[-1]):
                simplex[-1], values[-1] = xc, fc
            else:
                for i in range(1, dim + 1):
                    simplex[i] = simplex[0] + sigma * (simplex[i] - simplex[0])
                    values[i] = f(simplex[i])

    order = np.argsort(values, kind="stable")
    simplex, values = simplex[order], values[order]
    return NMResult(
        x=simplex[0], fun=float(values[0]),
        n_evals=n_evals, n_iters=n_iters, converged=converged,
    )


# ---------------------------------------------------------------------------
# transform space
# ---------------------------------------------------------------------------

def _weights_from_logits(logits):
    remaining = 1.0
    out = []
    for l in logits:
        p = float(np.clip(expit(l), _WEIGHT_FLOOR, 1.0 - _WEIGHT_FLOOR)) * remaining
        out.append(p)
        remaining -= p
    return tuple(out)


def _logits_from_weights(weights):
    remaining = 1.0
    out = []
    for p in weights:
        frac = np.clip(p / remaining, _WEIGHT_FLOOR, 1.0 - _WEIGHT_FLOOR)
        out.append(float(logit(frac)))
        remaining -= p
    return out


def n_free_params(spec):
    return spec.k


def pack(spec, params):
    """Natural parameter object -> unconstrained vector."""
    f = spec.family
    if f == "LN":
        return np.array([params.mu, math.log(params.sigma)])
    if f == "DPLN":
        return np.array([
            math.log(params.alpha), math.log(params.beta),
            params.mu, math.log(params.sigma),
        ])
    if f == "GB2":
        return np.array([
            math.log(params.a), math.log(params.b),
            math.log(params.p), math.log(params.q),
        ])
    if f == "LNSNP":
        return np.array([params.mu, math.log(params.sigma), *params.coeffs])
    theta = []
    for c in params.components:
        theta += [c.mu, math.log(c.sigma)]
    theta += _logits_from_weights(params.weights)
    return np.asarray(theta)


def unpack(spec, theta):
    """Unconstrained vector -> natural parameter object (untruncated)."""
    f = spec.family
    theta = np.asarray(theta, dtype=float)
    if f == "LN":
        return LNParams(theta[0], math.exp(theta[1]))
    if f == "DPLN":
        return DPLNParams(
            alpha=math.exp(theta[0]), beta=math.exp(theta[1]),
            mu=theta[2], sigma=math.exp(theta[3]),
        )
    if f == "GB2":
        return GB2Params(*(math.exp(t) for t in theta))
    if f == "LNSNP":
        return LNSNPParams(theta[0], math.exp(theta[1]), *theta[2:6])
    ell = spec.ell
    mus = theta[0 : 2 * ell : 2]
    sigmas = np.exp(theta[1 : 2 * ell : 2])
    if spec.base_family == "LSt":
        comps = tuple(
            LStParams(m, s, nu) for m, s, nu in zip(mus, sigmas, spec.fixed_nus)
        )
    elif spec.base_family == "LL":
        comps = tuple(LLParams(m, s) for m, s in zip(mus, sigmas))
    else:
        comps = tuple(LNParams(m, s) for m, s in zip(mus, sigmas))
    weights = _weights_from_logits(theta[2 * ell :])
    return MixtureParams(components=comps, weights=weights)


def natural_names(spec):
    f = spec.family
    if f == "LN":
        return ["mu", "sigma"]
    if f == "DPLN":
        return ["alpha", "beta", "mu", "sigma"]
    if f == "GB2":
        return ["a", "b", "p", "q"]
    if f == "LNSNP":
        return ["mu", "sigma", "d1", "d2", "d3", "d4"]
    ell = spec.ell
    names = []
    for i in range(1, ell + 1):
        names += [f"mu_{i}", f"sigma_{i}"]
    names += [f"p_{j}" for j in range(1, ell)]
    return names


def natural_values(spec, params):
    f = spec.family
    if f == "LN":
        return np.array([params.mu, params.sigma])
    if f == "DPLN":
        return np.array([params.alpha, params.beta, params.mu, params.sigma])
    if f == "GB2":
        return np.array([params.a, params.b, params.p, params.q])
    if f == "LNSNP":
        return np.array([params.mu, params.sigma, *params.coeffs])
    vals = []
    for c in params.components:
        vals += [c.mu, c.sigma]
    vals += list(params.weights)
    return np.asarray(vals)


def _lnsnp_feasible(params):
    return float(np.min(params.poly_factor(_LNSNP_GRID))) >= 0.0


# ---------------------------------------------------------------------------
# objective
# ---------------------------------------------------------------------------

def _make_objective(spec, log_x, window):
    """Negative mean y-space log-likelihood over the transformed vector."""

    def objective(theta):
        try:
            params = unpack(spec, theta)
        except (DomainError, OverflowError):
            return np.inf
        if spec.family == "LNSNP" and not _lnsnp_feasible(params):
            return np.inf
        model = params
        if window is not None:
            try:
                model = truncate_mixture(params, window)
            except MassTooSmall:
                return np.inf
        with np.errstate(over="ignore", invalid="ignore"):
            ll = model.log_pdf_y(log_x)
        total = np.sum(ll)
        if not np.isfinite(total):
            return np.inf
        return -total / log_x.size

    return objective


# ---------------------------------------------------------------------------
# starting points
# ---------------------------------------------------------------------------

def _tail_slope(y_sorted, upper):
    """Crude exponential tail-slope of the log data (Hill-type), clipped."""
    n = y_sorted.size
    m = max(5, n // 20)
    if upper:
        tail = y_sorted[-m:]
        excess = np.mean(tail - y_sorted[-m])
    else:
        tail = y_sorted[:m]
        excess = np.mean(y_sorted[m - 1] - tail)
    slope = 1.0 / max(excess, 1e-3)
    return float(np.clip(slope, 0.2, 30.0))


def _base_start(spec, y_sorted):
    mean, sd = float(np.mean(y_sorted)), float(np.std(y_sorted))
    sd = max(sd, 1e-3)
    f = spec.family
    if f == "LN":
        return LNParams(mean, sd)
    if f == "DPLN":
        return DPLNParams(
            alpha=_tail_slope(y_sorted, upper=True),
            beta=_tail_slope(y_sorted, upper=False),
            mu=mean, sigma=0.7 * sd,
        )
    if f == "GB2":
        return GB2Params(
            a=1.0, b=math.exp(float(np.median(y_sorted))),
            p=_tail_slope(y_sorted, upper=False),
            q=_tail_slope(y_sorted, upper=True),
        )
    if f == "LNSNP":
        return LNSNPParams(mean, sd, 0.0, 0.0, 0.0, 0.0)
    # mixtures: contiguous quantile blocks seed the components
    ell = spec.ell
    blocks = np.array_split(y_sorted, ell)
    mus = [float(np.mean(b)) for b in blocks]
    sigmas = [max(float(np.std(b)), 0.05 * sd, 1e-3) for b in blocks]
    sizes = np.array([b.size for b in blocks], dtype=float)
    weights = tuple((sizes / sizes.sum())[:-1])
    if spec.base_family == "LSt":
        comps = tuple(
            LStParams(m, s, nu) for m, s, nu in zip(mus, sigmas, spec.fixed_nus)
        )
    elif spec.base_family == "LL":
        comps = tuple(LLParams(m, s) for m, s in zip(mus, sigmas))
    else:
        comps = tuple(LNParams(m, s) for m, s in zip(mus, sigmas))
    return MixtureParams(components=comps, weights=weights)


def _starts(spec, y_sorted, cfg, extra_starts):
    theta0 = pack(spec, _base_start(spec, y_sorted))
    gen = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=(7,)))
    starts = [theta0]
    for t in extra_starts:
        starts.append(np.asarray(t, dtype=float))
    while len(starts) < cfg.n_starts + len(extra_starts):
        jitter = gen.normal(0.0, 0.15, size=theta0.size)
        starts.append(theta0 + jitter * np.maximum(1.0, np.abs(theta0)))
    return starts


# ---------------------------------------------------------------------------
# fitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FittedModel:
    """MLE result: spec, canonical parameters, loglik, SEs, diagnostics."""

    spec: object
    params: object
    window: object
    loglik: float
    std_errors: np.ndarray
    param_names: list
    param_values: np.ndarray
    n: int
    converged: bool
    starts_agreeing: int
    n_evals: int
    theta: np.ndarray
    se_singular: bool = False

    @property
    def model(self):
        """The density actually fitted (truncated wrapper when windowed)."""
        if self.window is None:
            return self.params
        return truncate_mixture(self.params, self.window)

    def cdf(self, x):
        return self.model.cdf(x)


def _total_loglik_y(objective, theta, n):
    return -objective(theta) * n


def fit_mle(spec, data, window=None, cfg=None, extra_starts=()):
    """Fit one ModelSpec to a positive sample by maximum likelihood.

    Runs ``cfg.n_starts`` seeded Nelder-Mead starts (quantile/moment seeds
    plus jitter, plus any ``extra_starts`` in transform space), keeps the
    best, verifies the maximum on a 9-point grid of width
    ``verify_width_se`` standard errors per transformed coordinate, and
    returns canonicalized parameters with delta-method standard errors.

    Raises NotEstimable when no start reaches a finite maximum.
    """
    cfg = cfg or FitConfig()
    x = np.asarray(data, dtype=float)
    if np.any(x <= 0):
        raise DomainError("data must be strictly positive")
    if spec.truncated and window is None:
        raise DomainError("truncated spec requires a TruncationWindow")
    if x.size < 10 * spec.k:
        raise DomainError(f"need n >= {10 * spec.k} observations for {spec.name}")
    y = np.sort(np.log(x))
    objective = _make_objective(spec, y, window)

    best = None
    n_evals = 0
    finals = []
    for theta0 in _starts(spec, y, cfg, extra_starts):
        try:
            res = nelder_mead(
                objective, theta0,
                simplex_tol=cfg.simplex_tol, max_evals=cfg.max_evals,
            )
        except NonFiniteObjective:
            continue
        n_evals += res.n_evals
        if not np.isfinite(res.fun):
            continue
        finals.append(res.fun)
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise NotEstimable(f"no start converged for {spec.name}")
    starts_agreeing = sum(1 for v in finals if v - best.fun <= 1e-6)

    # canonical order before SEs so the reported coordinates are stable
    theta = pack(spec, canonicalize(unpack(spec, best.x)))

    converged = best.converged
    se_theta, cov_theta, singular = _observed_information(objective, theta, y.size, cfg)

    # verify the maximum on a 9-point grid of +-8 SE per transformed coord
    for _ in range(5):
        better = _verification_sweep(objective, theta, se_theta, y.size, cfg)
        if better is None:
            break
        res = nelder_mead(
            objective, better, simplex_tol=cfg.simplex_tol, max_evals=cfg.max_evals
        )
        n_evals += res.n_evals
        theta = pack(spec, canonicalize(unpack(spec, res.x)))
        se_theta, cov_theta, singular = _observed_information(objective, theta, y.size, cfg)
    else:
        converged = False

    params = canonicalize(unpack(spec, theta))
    loglik_y = _total_loglik_y(objective, theta, y.size)
    loglik_x = loglik_y - float(np.sum(y))
    se_nat = _delta_method_se(spec, theta, cov_theta, cfg)
    return FittedModel(
        spec=spec, params=params, window=window,
        loglik=loglik_x,
        std_errors=se_nat,
        param_names=natural_names(spec),
        param_values=natural_values(spec, params),
        n=y.size, converged=converged,
        starts_agreeing=starts_agreeing, n_evals=n_evals,
        theta=theta, se_singular=singular,
    )


def _verification_sweep(objective, theta, se_theta, n, cfg):
    """Return a strictly better point on the +-width*SE grid, or None."""
    base = objective(theta) * n  # total negative loglik
    tol = 1e-8 * max(1.0, abs(base))
    for i, se in enumerate(se_theta):
        width = cfg.verify_width_se * (se if np.isfinite(se) and se > 0 else 0.1)
        for frac in np.linspace(-1.0, 1.0, 9):
            if frac == 0.0:
                continue
            probe = theta.copy()
            probe[i] += frac * width
            if objective(probe) * n < base - tol:
                return probe
    return None


# ---------------------------------------------------------------------------
# standard errors
# ---------------------------------------------------------------------------

def _observed_information(objective, theta, n, cfg):
    """Covariance of theta from the observed information (negative Hessian)."""
    dim = theta.size
    h = cfg.se_step * np.maximum(1.0, np.abs(theta))

    def nll(t):
        return objective(t) * n

    hess = np.empty((dim, dim))
    f0 = nll(theta)
    for i in range(dim):
        ei = np.zeros(dim)
        ei[i] = h[i]
        hess[i, i] = (nll(theta + ei) - 2.0 * f0 + nll(theta - ei)) / h[i] ** 2
        for j in range(i + 1, dim):
            ej = np.zeros(dim)
            ej[j] = h[j]
            hess[i, j] = hess[j, i] = (
                nll(theta + ei + ej) - nll(theta + ei - ej)
                - nll(theta - ei + ej) + nll(theta - ei - ej)
            ) / (4.0 * h[i] * h[j])
    try:
        cov = np.linalg.inv(hess)
        se = np.sqrt(np.diag(cov))
        if not np.all(np.isfinite(se)):
            raise np.linalg.LinAlgError
        return se, cov, False
    except (np.linalg.LinAlgError, FloatingPointError):
        warnings.warn("observed information singular; SEs flagged NaN", RuntimeWarning)
        nan = np.full(dim, np.nan)
        return nan, np.full((dim, dim), np.nan), True


def _delta_method_se(spec, theta, cov_theta, cfg):
    """Map transform-space covariance to natural-scale standard errors."""
    if not np.all(np.isfinite(cov_theta)):
        return np.full(theta.size, np.nan)
    dim = theta.size
    h = cfg.se_step * np.maximum(1.0, np.abs(theta))
    jac = np.empty((dim, dim))
    for j in range(dim):
        ej = np.zeros(dim)
        ej[j] = h[j]
        gp = natural_values(spec, unpack(spec, theta + ej))
        gm = natural_values(spec, unpack(spec, theta - ej))
        jac[:, j] = (gp - gm) / (2.0 * h[j])
    var = np.diag(jac @ cov_theta @ jac.T)
    return np.sqrt(np.maximum(var, 0.0))


def standard_errors(fitted, data=None, window=None, cfg=None):
    """Recompute natural-scale SEs for a FittedModel (spec operation surface).

    ``data`` defaults to being unavailable, in which case the stored fit is
    required to carry its own transformed-coordinate state.
    """
    cfg = cfg or FitConfig()
    if data is None:
        raise DomainError("standard_errors needs the fitting sample")
    x = np.asarray(data, dtype=float)
    y = np.sort(np.log(x))
    objective = _make_objective(fitted.spec, y, window if window is not None else fitted.window)
    se_theta, cov, singular = _observed_information(objective, fitted.theta, y.size, cfg)
    if singular:
        raise SingularInformation("observed information matrix is singular")
    return _delta_method_se(fitted.spec, fitted.theta, cov, cfg)


def ln_closed_form_mle(data):
    """Analytic lognormal MLE: mean and population SD of ln(x)."""
    y = np.log(np.asarray(data, dtype=float))
    return LNParams(float(np.mean(y)), float(np.std(y)))
