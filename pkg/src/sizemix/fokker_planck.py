"""Drift-term construction for time-dependent mixture densities.

For a density f(y, t) moving along a smooth parameter path and a constant
diffusion a(y, t) = s^2, the drift

    b(y, t) = s^2/(2 f) df/dy - (1/f) d(cdf)/dt

makes f a solution of the forward Kolmogorov (Fokker-Planck) equation

    df/dt = -d/dy (b f) + 1/2 d^2/dy^2 (a f).

The module provides the generic construction for any mixture-of-Student
path (normal components as nu = inf), the closed forms for the
four-component Student mixture and the doubly truncated five-component
Student mixture, a PDE-residual checker, and an Euler-Maruyama ensemble
simulator.  The optional additive h(t)/f term of the drift is fixed to
zero throughout.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit

from .distributions import LNParams, LStParams, student_cdf, student_log_pdf
from .errors import DomainError, OutOfWindow, ZeroDensity
from .mixtures import MixtureParams
from .truncation import TruncationWindow

__all__ = [
    "ParamPath",
    "DriftField",
    "generic_drift",
    "k_term",
    "drift_4lst",
    "drift_5lsttt",
    "fp_residual",
    "simulate_sde",
]

_F_FLOOR = 1e-300
NU_4LST = (4.0, 12.0, 39.0, 100.0)
NU_5LST = (4.0, 12.0, 39.0, 100.0, 200.0)


# ---------------------------------------------------------------------------
# parameter paths
# ---------------------------------------------------------------------------

def _stick_forward(logits):
    """logits -> simplex weights and the Jacobian-ready intermediates."""
    remaining = 1.0
    weights = []
    for l in logits:
        p = expit(l) * remaining
        weights.append(p)
        remaining -= p
    weights.append(remaining)
    return np.asarray(weights)


def _stick_forward_dot(logits, logit_dots):
    """Weights and their time derivatives under linearly moving logits."""
    remaining, remaining_dot = 1.0, 0.0
    w, w_dot = [], []
    for l, ld in zip(logits, logit_dots):
        s = expit(l)
        p = s * remaining
        p_dot = s * (1.0 - s) * ld * remaining + s * remaining_dot
        w.append(p)
        w_dot.append(p_dot)
        remaining -= p
        remaining_dot -= p_dot
    w.append(remaining)
    w_dot.append(remaining_dot)
    return np.asarray(w), np.asarray(w_dot)


def _stick_backward(weights):
    remaining = 1.0
    logits = []
    for p in weights[:-1]:
        logits.append(float(logit(np.clip(p / remaining, 1e-12, 1 - 1e-12))))
        remaining -= p
    return np.asarray(logits)


@dataclass(frozen=True)
class PathState:
    """Natural parameters and their time derivatives at one instant."""

    mus: np.ndarray
    sigmas: np.ndarray
    nus: tuple
    weights: np.ndarray       # full length-ell simplex vector
    mu_dots: np.ndarray
    sigma_dots: np.ndarray
    weight_dots: np.ndarray   # sums to zero
    y_min: float = None
    y_max: float = None
    y_min_dot: float = 0.0
    y_max_dot: float = 0.0

    @property
    def ell(self):
        return self.mus.size

    @property
    def truncated(self):
        return self.y_min is not None


def _mixture_coords(params):
    mus = np.array([c.mu for c in params.components])
    sigmas = np.array([c.sigma for c in params.components])
    nus = tuple(
        c.nu if isinstance(c, LStParams) else math.inf for c in params.components
    )
    return mus, sigmas, nus


@dataclass(frozen=True)
class ParamPath:
    """Linear interpolation between two fitted mixtures in unconstrained
    coordinates (mu and window edges linear; sigma log-linear; weights via
    stick-breaking logits), giving constant slopes there and smooth natural
    derivatives by the chain rule."""

    t0: float
    t1: float
    params_at_t0: MixtureParams
    params_at_t1: MixtureParams
    window_at_t0: TruncationWindow = None
    window_at_t1: TruncationWindow = None

    def __post_init__(self):
        if not self.t1 > self.t0:
            raise DomainError("need t1 > t0")
        if self.params_at_t0.ell != self.params_at_t1.ell:
            raise DomainError("endpoint mixtures must share the component count")
        if (self.window_at_t0 is None) != (self.window_at_t1 is None):
            raise DomainError("window must be given at both endpoints or neither")

    @property
    def ell(self):
        return self.params_at_t0.ell

    def state(self, t):
        dt = self.t1 - self.t0
        lam = (t - self.t0) / dt
        mu0, sig0, nus = _mixture_coords(self.params_at_t0)
        mu1, sig1, nus1 = _mixture_coords(self.params_at_t1)
        if nus != nus1:
            raise DomainError("endpoint mixtures must share the nu ladder")
        mu_slope = (mu1 - mu0) / dt
        logsig_slope = (np.log(sig1) - np.log(sig0)) / dt
        sigmas = np.exp(np.log(sig0) + logsig_slope * (t - self.t0))
        l0 = _stick_backward(self.params_at_t0.full_weights)
        l1 = _stick_backward(self.params_at_t1.full_weights)
        l_slope = (l1 - l0) / dt if l0.size else l0
        weights, weight_dots = _stick_forward_dot(l0 + l_slope * (t - self.t0), l_slope)
        kw = {}
        if self.window_at_t0 is not None:
            a0, b0 = self.window_at_t0.y_min, self.window_at_t0.y_max
            a1, b1 = self.window_at_t1.y_min, self.window_at_t1.y_max
            kw = dict(
                y_min=a0 + (a1 - a0) * lam, y_max=b0 + (b1 - b0) * lam,
                y_min_dot=(a1 - a0) / dt, y_max_dot=(b1 - b0) / dt,
            )
        return PathState(
            mus=mu0 + mu_slope * (t - self.t0),
            sigmas=sigmas,
            nus=nus,
            weights=weights,
            mu_dots=mu_slope,
            sigma_dots=sigmas * logsig_slope,
            weight_dots=weight_dots,
            **kw,
        )

    def to_json(self):
        def _side(params, window):
            mus, sigmas, _ = _mixture_coords(params)
            d = {
                "mus": [float(v) for v in mus],
                "sigmas": [float(v) for v in sigmas],
                "weights": [float(v) for v in params.weights],
            }
            if window is not None:
                d["a"] = float(window.a)
                d["b"] = float(window.b)
            return d

        _, _, nus = _mixture_coords(self.params_at_t0)
        return json.dumps({
            "t0": float(self.t0), "t1": float(self.t1),
            "nus": [None if math.isinf(v) else float(v) for v in nus],
            "at_t0": _side(self.params_at_t0, self.window_at_t0),
            "at_t1": _side(self.params_at_t1, self.window_at_t1),
        }, indent=2)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        nus = [math.inf if v is None else float(v) for v in doc["nus"]]

        def _side(d):
            comps = tuple(
                LNParams(m, s) if math.isinf(nu) else LStParams(m, s, nu)
                for m, s, nu in zip(d["mus"], d["sigmas"], nus)
            )
            params = MixtureParams(components=comps, weights=tuple(d["weights"]))
            window = TruncationWindow(d["a"], d["b"]) if "a" in d else None
            return params, window

        p0, w0 = _side(doc["at_t0"])
        p1, w1 = _side(doc["at_t1"])
        return cls(
            t0=float(doc["t0"]), t1=float(doc["t1"]),
            params_at_t0=p0, params_at_t1=p1,
            window_at_t0=w0, window_at_t1=w1,
        )


# ---------------------------------------------------------------------------
# per-component building blocks (vectorized over y)
# ---------------------------------------------------------------------------

def _comp_pdf(y, mu, sigma, nu):
    return np.exp(student_log_pdf(y, mu, sigma, nu))


def _score_dy(y, mu, sigma, nu):
    """d/dy log f for the (possibly normal-limit) Student component."""
    d = y - mu
    if np.isinf(nu):
        return -d / sigma**2
    return -(1.0 + nu) * d / (d * d + nu * sigma**2)


def _dcdf_dmu(y, mu, sigma, nu):
    return -_comp_pdf(y, mu, sigma, nu)


def _dcdf_dsigma(y, mu, sigma, nu):
    return -_comp_pdf(y, mu, sigma, nu) * (y - mu) / sigma


class _ComponentView:
    """Truncation-aware pdf/cdf and partials of one mixture component."""

    def __init__(self, state, i):
        self.mu = state.mus[i]
        self.sigma = state.sigmas[i]
        self.nu = state.nus[i]
        self.mu_dot = state.mu_dots[i]
        self.sigma_dot = state.sigma_dots[i]
        self.state = state
        if state.truncated:
            self.c_lo = student_cdf(state.y_min, self.mu, self.sigma, self.nu)
            self.c_hi = student_cdf(state.y_max, self.mu, self.sigma, self.nu)
            self.mass = self.c_hi - self.c_lo

    def pdf(self, y):
        f = _comp_pdf(y, self.mu, self.sigma, self.nu)
        if self.state.truncated:
            f = f / self.mass
        return f

    def cdf(self, y):
        c = student_cdf(y, self.mu, self.sigma, self.nu)
        if self.state.truncated:
            c = (c - self.c_lo) / self.mass
        return c

    def dpdf_dy(self, y):
        return self.pdf(y) * _score_dy(y, self.mu, self.sigma, self.nu)

    def dcdf_dt(self, y):
        """Time derivative of this component's (possibly truncated) CDF."""
        mu, sigma, nu = self.mu, self.sigma, self.nu
        raw = self.mu_dot * _dcdf_dmu(y, mu, sigma, nu)
        raw = raw + self.sigma_dot * _dcdf_dsigma(y, mu, sigma, nu)
        if not self.state.truncated:
            return raw
        st = self.state
        d_lo = (
            self.mu_dot * _dcdf_dmu(st.y_min, mu, sigma, nu)
            + self.sigma_dot * _dcdf_dsigma(st.y_min, mu, sigma, nu)
            + st.y_min_dot * _comp_pdf(st.y_min, mu, sigma, nu)
        )
        d_hi = (
            self.mu_dot * _dcdf_dmu(st.y_max, mu, sigma, nu)
            + self.sigma_dot * _dcdf_dsigma(st.y_max, mu, sigma, nu)
            + st.y_max_dot * _comp_pdf(st.y_max, mu, sigma, nu)
        )
        c = student_cdf(y, mu, sigma, nu)
        mass_dot = d_hi - d_lo
        return (raw - d_lo) / self.mass - (c - self.c_lo) * mass_dot / self.mass**2

    def k(self, y, s):
        """Per-component drift contribution: diffusion score minus the
        density-normalized time derivative of the component CDF."""
        return 0.5 * s * s * _score_dy(y, self.mu, self.sigma, self.nu) - (
            self.dcdf_dt(y) / self.pdf(y)
        )


# ---------------------------------------------------------------------------
# the drift field
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DriftField:
    """Diffusion constant s plus a parameter path; tag selects the closed form."""

    s: float
    path: ParamPath
    tag: str = "generic"

    def __post_init__(self):
        if not self.s > 0:
            raise DomainError("diffusion constant s must be positive")
        if self.tag not in ("generic", "4LSt", "5LSttt"):
            raise DomainError(f"unknown tag {self.tag!r}")
        st = self.path.state(self.path.t0)
        if self.tag == "4LSt" and (st.nus != NU_4LST or st.truncated):
            raise DomainError("4LSt tag needs nus (4,12,39,100), untruncated")
        if self.tag == "5LSttt" and (st.nus != NU_5LST or not st.truncated):
            raise DomainError("5LSttt tag needs nus (4,12,39,100,200), truncated")

    def _views(self, t):
        st = self.path.state(t)
        return st, [_ComponentView(st, i) for i in range(st.ell)]

    def f(self, y, t):
        st, views = self._views(t)
        out = sum(w * v.pdf(y) for w, v in zip(st.weights, views))
        if st.truncated:
            y = np.asarray(y, dtype=float)
            out = np.where((y >= st.y_min) & (y <= st.y_max), out, 0.0)
            out = out[()] if out.ndim == 0 else out
        return out

    def cdf(self, y, t):
        st, views = self._views(t)
        y = np.asarray(y, dtype=float)
        yc = np.clip(y, st.y_min, st.y_max) if st.truncated else y
        out = sum(w * v.cdf(yc) for w, v in zip(st.weights, views))
        return out[()] if np.ndim(out) == 0 else out

    def df_dy(self, y, t):
        st, views = self._views(t)
        return sum(w * v.dpdf_dy(y) for w, v in zip(st.weights, views))

    def dcdf_dt(self, y, t):
        st, views = self._views(t)
        out = sum(w * v.dcdf_dt(y) for w, v in zip(st.weights, views))
        out = out + sum(wd * v.cdf(y) for wd, v in zip(st.weight_dots, views))
        return out

    def drift(self, y, t):
        """Closed form for the tagged families, Eq.-level generic otherwise."""
        if self.tag == "4LSt":
            return drift_4lst(y, t, self)
        if self.tag == "5LSttt":
            return drift_5lsttt(y, t, self)
        return generic_drift(self, self.s, y, t)

    def mixture_at(self, t):
        """x-space (MixtureParams, window-or-None) snapshot, for sampling."""
        st = self.path.state(t)
        comps = tuple(
            LNParams(m, s) if math.isinf(nu) else LStParams(m, s, nu)
            for m, s, nu in zip(st.mus, st.sigmas, st.nus)
        )
        params = MixtureParams(components=comps, weights=tuple(st.weights[:-1]))
        window = None
        if st.truncated:
            window = TruncationWindow(math.exp(st.y_min), math.exp(st.y_max))
        return params, window


def generic_drift(field, s, y, t):
    """b = s^2/(2 f) df/dy - (1/f) d(cdf)/dt from the field's analytic
    derivatives (chain rule over the parameter slopes)."""
    f = field.f(y, t)
    if np.any(np.asarray(f) < _F_FLOOR):
        raise ZeroDensity("density below 1e-300 at a drift evaluation point")
    return 0.5 * s * s * field.df_dy(y, t) / f - field.dcdf_dt(y, t) / f


def k_term(y, mu, sigma, nu, s, mu_dot=0.0, sigma_dot=0.0):
    """mu_dot + (y-mu) sigma_dot/sigma - s^2 (1+nu)(y-mu) / (2((y-mu)^2 + nu sigma^2)).

    nu = inf gives the normal limit mu_dot + (y-mu) sigma_dot/sigma
    - s^2 (y-mu)/(2 sigma^2).
    """
    if not sigma > 0 or not nu > 0:
        raise DomainError("k_term requires sigma > 0 and nu > 0")
    d = np.asarray(y, dtype=float) - mu
    out = mu_dot + d * sigma_dot / sigma + 0.5 * s * s * _score_dy(
        np.asarray(y, dtype=float), mu, sigma, nu
    )
    return out[()] if np.ndim(out) == 0 else out


def _closed_form_drift(field, y, t):
    """sum_i k_i tau_i - sum_{j<ell} p_dot_j pi_j with the last component as
    the pi reference."""
    st, views = field._views(t)
    y = np.asarray(y, dtype=float)
    pdfs = [v.pdf(y) for v in views]
    mix = sum(w * p for w, p in zip(st.weights, pdfs))
    if np.any(mix < _F_FLOOR):
        raise ZeroDensity("mixture density below 1e-300")
    b = np.zeros_like(y, dtype=float)
    for w, v, p in zip(st.weights, views, pdfs):
        tau = w * p / mix
        b = b + v.k(y, field.s) * tau
    last_cdf = views[-1].cdf(y)
    for j in range(st.ell - 1):
        pi = (views[j].cdf(y) - last_cdf) / mix
        b = b - st.weight_dots[j] * pi
    return b[()] if b.ndim == 0 else b


def drift_4lst(y, t, field):
    """Closed-form drift of the four-component Student mixture path."""
    if field.tag != "4LSt":
        raise DomainError("field is not tagged 4LSt")
    return _closed_form_drift(field, y, t)


def drift_5lsttt(y, t, field):
    """Closed-form drift of the doubly truncated five-component Student path."""
    if field.tag != "5LSttt":
        raise DomainError("field is not tagged 5LSttt")
    st = field.path.state(t)
    y = np.asarray(y, dtype=float)
    if np.any((y < st.y_min) | (y > st.y_max)):
        raise OutOfWindow("drift requested outside the truncation window")
    return _closed_form_drift(field, y, t)


def posterior_probs(field, y, t):
    """Component responsibilities tau_i(y, t); they sum to one."""
    st, views = field._views(t)
    y = np.asarray(y, dtype=float)
    pdfs = np.stack([v.pdf(y) for v in views])
    mix = np.tensordot(st.weights, pdfs, axes=1)
    return st.weights[:, None] * pdfs / mix if y.ndim else st.weights * pdfs[:, 0] / mix


# ---------------------------------------------------------------------------
# verification and simulation
# ---------------------------------------------------------------------------

def fp_residual(field, y_grid, t_grid):
    """Max |df/dt + d/dy(b f) - (s^2/2) d2f/dy2| on the interior grid nodes.

    Derivatives use second-order central differences, so the result decays
    as O(h^2) under simultaneous grid refinement.
    """
    y = np.asarray(y_grid, dtype=float)
    t = np.asarray(t_grid, dtype=float)
    hy = y[1] - y[0]
    ht = t[1] - t[0]
    f = np.stack([field.f(y, tk) for tk in t])          # (nt, ny)
    bf = np.stack([field.drift(y, tk) for tk in t]) * f
    df_dt = (f[2:, 1:-1] - f[:-2, 1:-1]) / (2.0 * ht)
    dbf_dy = (bf[1:-1, 2:] - bf[1:-1, :-2]) / (2.0 * hy)
    d2f_dy2 = (f[1:-1, 2:] - 2.0 * f[1:-1, 1:-1] + f[1:-1, :-2]) / hy**2
    resid = df_dt + dbf_dy - 0.5 * field.s**2 * d2f_dy2
    return float(np.max(np.abs(resid)))


def simulate_sde(field, y0_sample, t0, t1, n_steps, rng):
    """Euler-Maruyama transport of an ensemble under dy = b dt + s dB.

    For truncated fields trajectories are reflected at the moving window
    edges, which preserves the truncated-support mass.
    """
    from .sampling import _as_generator

    gen = _as_generator(rng)
    y = np.asarray(y0_sample, dtype=float).copy()
    dt = (t1 - t0) / n_steps
    sq = field.s * math.sqrt(dt)
    truncated = field.path.state(t0).truncated
    for k in range(n_steps):
        t = t0 + k * dt
        if truncated:
            st = field.path.state(t)
            y = np.clip(y, st.y_min, st.y_max)
            b = drift_5lsttt(y, t, field) if field.tag == "5LSttt" else field.drift(y, t)
        else:
            b = field.drift(y, t)
        y = y + b * dt + sq * gen.standard_normal(y.size)
        if truncated:
            st = field.path.state(t0 + (k + 1) * dt)
            y = _reflect(y, st.y_min, st.y_max)
    return y


def _reflect(y, lo, hi):
    span = hi - lo
    z = np.mod(y - lo, 2.0 * span)
    return lo + np.where(z > span, 2.0 * span - z, z)
