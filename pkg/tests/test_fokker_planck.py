import math

import numpy as np
import pytest

from sizemix.distributions import LNParams, LStParams
from sizemix.errors import DomainError, OutOfWindow, ZeroDensity
from sizemix.fokker_planck import (
    NU_4LST,
    NU_5LST,
    DriftField,
    ParamPath,
    drift_4lst,
    drift_5lsttt,
    fp_residual,
    generic_drift,
    k_term,
    posterior_probs,
    simulate_sde,
)
from sizemix.gof import ks_stat
from sizemix.mixtures import MixtureParams
from sizemix.sampling import RngStream, sample_truncated
from sizemix.truncation import TruncationWindow


def _mix(mus, sigmas, nus, weights):
    comps = tuple(
        LNParams(m, s) if math.isinf(nu) else LStParams(m, s, nu)
        for m, s, nu in zip(mus, sigmas, nus)
    )
    return MixtureParams(components=comps, weights=tuple(weights))


def make_4lst_path():
    p0 = _mix([3.0, 5.0, 7.0, 9.0], [0.5, 0.6, 0.7, 0.8], NU_4LST, [0.2, 0.3, 0.3])
    p1 = _mix([3.4, 5.3, 7.5, 9.2], [0.6, 0.5, 0.8, 0.7], NU_4LST, [0.25, 0.25, 0.3])
    return ParamPath(0.0, 1.0, p0, p1)


def make_5lsttt_path():
    p0 = _mix([3.0, 4.5, 6.0, 7.5, 9.0], [0.5, 0.6, 0.7, 0.6, 0.8], NU_5LST,
              [0.15, 0.2, 0.25, 0.2])
    p1 = _mix([3.3, 4.8, 6.4, 7.8, 9.3], [0.55, 0.5, 0.75, 0.65, 0.7], NU_5LST,
              [0.2, 0.2, 0.2, 0.2])
    w0 = TruncationWindow(math.exp(2.0), math.exp(10.0))
    w1 = TruncationWindow(math.exp(2.3), math.exp(10.4))
    return ParamPath(0.0, 1.0, p0, p1, window_at_t0=w0, window_at_t1=w1)


def make_normal_path(mu0=0.0, mu1=0.0, sigma0=1.0, sigma1=1.0):
    return ParamPath(
        0.0, 1.0,
        _mix([mu0], [sigma0], [math.inf], []),
        _mix([mu1], [sigma1], [math.inf], []),
    )


def test_posterior_probs_sum_to_one():
    field = DriftField(s=0.5, path=make_4lst_path(), tag="4LSt")
    y = np.linspace(2.0, 11.0, 30)
    for t in [0.1, 0.5, 0.9]:
        tau = posterior_probs(field, y, t)
        assert np.all((tau >= 0) & (tau <= 1))
        assert tau.sum(axis=0) == pytest.approx(np.ones(y.size), abs=1e-12)


def test_closed_form_4lst_equals_generic():
    field = DriftField(s=0.5, path=make_4lst_path(), tag="4LSt")
    y = np.linspace(1.5, 11.5, 41)
    for t in [0.05, 0.3, 0.55, 0.95]:
        closed = drift_4lst(y, t, field)
        generic = generic_drift(field, field.s, y, t)
        assert np.max(np.abs(closed - generic)) < 1e-8


def test_closed_form_5lsttt_equals_generic():
    field = DriftField(s=0.4, path=make_5lsttt_path(), tag="5LSttt")
    for t in [0.1, 0.5, 0.9]:
        st = field.path.state(t)
        y = np.linspace(st.y_min + 0.05, st.y_max - 0.05, 37)
        closed = drift_5lsttt(y, t, field)
        generic = generic_drift(field, field.s, y, t)
        assert np.max(np.abs(closed - generic)) < 1e-8


def test_drift_sign_is_indefinite():
    # the drift of a nontrivial mixture path changes sign over (y, t)
    field = DriftField(s=0.5, path=make_4lst_path(), tag="4LSt")
    y = np.linspace(2.0, 11.0, 101)
    b = np.concatenate([np.atleast_1d(field.drift(y, t)) for t in [0.2, 0.5, 0.8]])
    assert np.any(b > 0) and np.any(b < 0)


def test_tag_validation():
    with pytest.raises(DomainError):
        DriftField(s=0.5, path=make_normal_path(), tag="4LSt")
    with pytest.raises(DomainError):
        DriftField(s=0.5, path=make_4lst_path(), tag="5LSttt")
    with pytest.raises(DomainError):
        DriftField(s=-1.0, path=make_4lst_path())
    field = DriftField(s=0.5, path=make_4lst_path(), tag="generic")
    with pytest.raises(DomainError):
        drift_4lst(5.0, 0.5, field)


def test_out_of_window_drift_rejected():
    field = DriftField(s=0.4, path=make_5lsttt_path(), tag="5LSttt")
    st = field.path.state(0.5)
    with pytest.raises(OutOfWindow):
        drift_5lsttt(st.y_max + 1.0, 0.5, field)


def test_zero_density_guard():
    field = DriftField(s=0.5, path=make_normal_path(), tag="generic")
    with pytest.raises(ZeroDensity):
        generic_drift(field, field.s, 60.0, 0.5)


def test_static_standard_normal_drift():
    field = DriftField(s=0.7, path=make_normal_path(), tag="generic")
    y = np.linspace(-3, 3, 13)
    b = field.drift(y, 0.4)
    assert b == pytest.approx(-0.7**2 * y / 2.0, abs=1e-12)


def test_static_drift_zero_at_mode():
    field = DriftField(s=0.7, path=make_normal_path(mu0=1.3, mu1=1.3), tag="generic")
    assert field.drift(1.3, 0.2) == pytest.approx(0.0, abs=1e-12)


def test_moving_normal_drift_closed_form():
    # mu moving at constant rate c: b = -s^2 (y - mu)/(2 sigma^2) + c
    c = 0.8
    field = DriftField(s=0.5, path=make_normal_path(mu0=0.0, mu1=c), tag="generic")
    t = 0.6
    mu_t = c * t
    y = np.linspace(-2, 3, 11)
    expect = -0.25 * (y - mu_t) / 2.0 + c
    assert field.drift(y, t) == pytest.approx(expect, abs=1e-10)


def test_generic_drift_matches_finite_differences():
    # independent oracle: build b from numerical derivatives of f and cdf
    field = DriftField(s=0.5, path=make_4lst_path())
    h = 1e-6
    y = np.linspace(2.5, 10.5, 17)
    t = 0.37
    f = field.f(y, t)
    df_dy = (field.f(y + h, t) - field.f(y - h, t)) / (2 * h)
    dcdf_dt = (field.cdf(y, t + h) - field.cdf(y, t - h)) / (2 * h)
    oracle = 0.5 * field.s**2 * df_dy / f - dcdf_dt / f
    assert field.drift(y, t) == pytest.approx(oracle, abs=1e-7)


def test_k_term_identities():
    assert k_term(2.0, 2.0, 0.5, 4.0, 0.3, mu_dot=0.33) == pytest.approx(0.33)
    # nu -> inf limit equals the explicit normal expression
    y, mu, sigma, s = 1.7, 0.4, 0.9, 0.6
    lim = k_term(y, mu, sigma, math.inf, s, mu_dot=0.1, sigma_dot=0.2)
    expect = 0.1 + (y - mu) * 0.2 / sigma - s**2 * (y - mu) / (2 * sigma**2)
    assert lim == pytest.approx(expect, rel=1e-12)
    big = k_term(y, mu, sigma, 1e9, s, mu_dot=0.1, sigma_dot=0.2)
    assert big == pytest.approx(expect, abs=1e-8)


def test_k_term_matches_generic_single_component():
    path = ParamPath(
        0.0, 1.0,
        _mix([3.0], [0.5], [12.0], []),
        _mix([3.5], [0.65], [12.0], []),
    )
    field = DriftField(s=0.45, path=path)
    t = 0.4
    st = path.state(t)
    y = np.linspace(1.5, 5.0, 9)
    ks = k_term(y, st.mus[0], st.sigmas[0], 12.0, 0.45,
                mu_dot=st.mu_dots[0], sigma_dot=st.sigma_dots[0])
    assert ks == pytest.approx(np.atleast_1d(field.drift(y, t)), abs=1e-10)


def test_fp_residual_second_order_decay():
    field = DriftField(s=0.5, path=make_4lst_path(), tag="4LSt")
    r_coarse = fp_residual(field, np.linspace(3.0, 10.0, 141),
                           np.linspace(0.2, 0.8, 61))
    r_fine = fp_residual(field, np.linspace(3.0, 10.0, 281),
                         np.linspace(0.2, 0.8, 121))
    order = math.log2(r_coarse / r_fine)
    assert order > 1.8


def test_param_path_json_round_trip():
    for path in [make_4lst_path(), make_5lsttt_path()]:
        back = ParamPath.from_json(path.to_json())
        assert back == path
        y = np.linspace(3.0, 9.0, 7)
        f1 = DriftField(s=0.5, path=path)
        f2 = DriftField(s=0.5, path=back)
        assert f1.f(y, 0.5) == pytest.approx(f2.f(y, 0.5), rel=1e-14)


def test_path_validation():
    p0 = _mix([1.0], [1.0], [math.inf], [])
    p1 = _mix([1.0, 2.0], [1.0, 1.0], [math.inf, math.inf], [0.5])
    with pytest.raises(DomainError):
        ParamPath(0.0, 1.0, p0, p1)
    with pytest.raises(DomainError):
        ParamPath(1.0, 0.0, p0, p0)


def test_brownian_motion_variance():
    # zero drift: a static uniform-in-the-limit field is not available, so
    # use a very wide static normal; drift is ~0 near the center and the
    # endpoint spread is dominated by the injected noise
    path = make_normal_path(sigma0=1e4, sigma1=1e4)
    field = DriftField(s=1.0, path=path)
    y0 = np.zeros(20_000)
    y1 = simulate_sde(field, y0, 0.0, 1.0, 200, RngStream(2))
    assert y1.var() == pytest.approx(1.0, abs=0.03)
    assert y1.mean() == pytest.approx(0.0, abs=0.03)


def test_sde_transport_matches_target_density():
    field = DriftField(s=0.5, path=make_4lst_path(), tag="4LSt")
    rng = RngStream(31)
    from sizemix.sampling import sample

    params0, _ = field.mixture_at(0.0)
    x0 = sample(params0, 20_000, rng)
    y1 = simulate_sde(field, np.log(x0), 0.0, 1.0, 500, RngStream(32))
    params1, _ = field.mixture_at(1.0)
    ks = ks_stat(np.exp(y1), params1.cdf)
    assert ks < 1.6276 / math.sqrt(20_000)


def test_sde_truncated_stays_in_window():
    field = DriftField(s=0.4, path=make_5lsttt_path(), tag="5LSttt")
    params0, window0 = field.mixture_at(0.0)
    x0 = sample_truncated(params0, window0, 5000, RngStream(40))
    y1 = simulate_sde(field, np.log(x0), 0.0, 1.0, 300, RngStream(41))
    st1 = field.path.state(1.0)
    assert y1.min() >= st1.y_min - 1e-12
    assert y1.max() <= st1.y_max + 1e-12
