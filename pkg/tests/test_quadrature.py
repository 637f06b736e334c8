import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as sp_integrate

from qbm.errors import DomainError, ResolutionError
from qbm.quadrature import (
    fourier_integral,
    fourier_integral_threshold,
    integrate,
    power_law_fit,
    principal_value,
    principal_value_excision,
    smooth_step,
)

# -1 + exp(-1) Ei(1), 30-digit mpmath evaluation.
PV_OMEGA_EXP = -0.30282511676493393123


def test_integrate_constant():
    res = integrate(lambda x: np.ones_like(x), 0.0, 1.0)
    assert res.converged
    assert res.value == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("power,expected", [(1, 1.0), (3, 6.0)])
def test_integrate_infinite_gamma(power, expected):
    res = integrate(lambda x: x**power * np.exp(-x), 0.0, math.inf)
    assert res.value == pytest.approx(expected, rel=1e-12)
    assert res.error_estimate <= 1e-10 * expected


def test_integrate_budget_exhaustion_reports_unconverged():
    res = integrate(lambda x: np.sin(1.0 / np.maximum(x, 1e-300)), 0.0, 1.0, 1e-14, budget=20)
    assert not res.converged
    assert res.panels_used <= 20


def test_integrate_matches_scipy_on_breakpoint_integrand():
    f = lambda x: np.abs(np.asarray(x) - 0.3) ** 0.5 * np.exp(-x)
    ref, _ = sp_integrate.quad(f, 0, 2, points=[0.3], epsabs=0, epsrel=1e-13, limit=200)
    assert integrate(f, 0, 2, 1e-12, points=(0.3,)).value == pytest.approx(ref, rel=1e-11)


def test_pv_constant_symmetric_is_zero():
    res = principal_value(lambda x: np.full_like(x, 2.5), 1.0, 0.5, 1.5)
    assert abs(res.value) < 1e-14


@pytest.mark.parametrize("a,b", [(0.5, 0.7), (0.2, 1.3), (1.0, 0.25)])
def test_pv_window_log(a, b):
    lam = 0.3
    res = principal_value(lambda x: np.full_like(x, lam), 1.0, 1.0 - a, 1.0 + b)
    assert res.value == pytest.approx(lam * math.log(a / b), rel=1e-12)


def test_pv_dual_paths_agree():
    f = lambda x: x * np.exp(-x)
    sub = principal_value(f, 1.0, 0.0, math.inf).value
    exc = principal_value_excision(f, 1.0, 0.0, math.inf)
    assert sub == pytest.approx(PV_OMEGA_EXP, rel=1e-12)
    assert abs(sub - exc) <= 1e-8 * abs(sub)


def test_pv_scipy_cauchy_oracle():
    f = lambda x: np.exp(-x) * (1 + x**2)
    # scipy's weight='cauchy' computes int f/(x - c); ours is f/(c - x).
    ref, _ = sp_integrate.quad(f, 0.0, 3.0, weight="cauchy", wvar=1.2, epsabs=1e-15, epsrel=1e-12)
    assert principal_value(f, 1.2, 0.0, 3.0).value == pytest.approx(-ref, rel=1e-10)


def test_pv_pole_at_endpoint_rejected():
    with pytest.raises(DomainError):
        principal_value(np.exp, 0.0, 0.0, 1.0)


def test_fourier_zero_time_is_plain_integral():
    f = lambda w: w * np.exp(-w)
    res = fourier_integral(f, 0.0, (0.0, 60.0))
    assert isinstance(res.value, float)
    assert res.value == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("t", [1.0, 10.0, 100.0])
def test_fourier_gamma_density(t):
    res = fourier_integral(lambda w: w * np.exp(-w), t, (0.0, 60.0))
    assert abs(res.value - 1.0 / (1.0 + 1j * t) ** 2) <= 1e-10 * max(1.0, abs(1.0 / (1 + 1j * t) ** 2))


@pytest.mark.slow
def test_fourier_lorentzian_transform():
    # Full-line Lorentzian, truncated where its weight is below 1e-9 of the total.
    center, width = 3.0, 0.2
    rho = lambda w: (width / (2 * math.pi)) / ((w - center) ** 2 + width**2 / 4)
    for t in (0.5, 5.0, 30.0):
        res = fourier_integral(rho, t, (center - 2e5, center + 2e5), points=(center,), budget=10**8)
        exact = np.exp(-1j * center * t - 0.5 * width * t)
        # Truncation to |w - center| < L removes ~ width/(pi L) of weight, oscillating at t L.
        assert abs(res.value - exact) <= 1e-6


def test_fourier_conjugate_symmetry():
    f = lambda w: w**2 * np.exp(-w)
    for t in (0.7, 13.0):
        a = fourier_integral(f, t, (0.0, 60.0)).value
        b = fourier_integral(f, -t, (0.0, 60.0)).value
        assert abs(a - np.conj(b)) <= 1e-13


def test_fourier_laplace_kernel():
    res = fourier_integral(lambda w: w * np.exp(-w), -2j, (0.0, 60.0))
    assert res.value == pytest.approx(1.0 / 9.0, rel=1e-12)


def test_fourier_resolution_error_reports_tmax():
    with pytest.raises(ResolutionError) as err:
        fourier_integral(np.exp, 1e6, (0.0, 100.0), budget=1000)
    assert err.value.t_max == pytest.approx(1000 * math.pi / 400.0)


def test_fourier_is_deterministic():
    f = lambda w: w * np.exp(-w) / (1 + (w - 1) ** 2)
    a = fourier_integral(f, 37.0, (0.0, 60.0), chunk=64).value
    b = fourier_integral(f, 37.0, (0.0, 60.0), chunk=64).value
    assert a == b


def test_threshold_part_captures_power_tail():
    # w e^{-w}: exact transform 1/(1+it)^2 ~ -1/t^2 at large t.
    t = 2000.0
    full = fourier_integral(lambda w: w * np.exp(-w), t, (0.0, 60.0)).value
    low = fourier_integral_threshold(lambda w: w * np.exp(-w), t, 5.0).value
    assert abs(full - low) <= 1e-6 * abs(full)


def test_smooth_step_limits():
    x = np.array([0.0, 1.0, 1.5, 2.0, 3.0])
    s = smooth_step(x, 1.0, 2.0)
    assert s[0] == 1.0 and s[1] == 1.0 and s[-2] == 0.0 and s[-1] == 0.0
    assert s[2] == pytest.approx(0.5)


def test_power_law_exact():
    x = np.linspace(1, 10, 12)
    fit = power_law_fit(x, x**2)
    assert fit.slope == pytest.approx(2.0, abs=1e-12)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)
    fit = power_law_fit(x, 3 * x**-2.0)
    assert fit.slope == pytest.approx(-2.0, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(3.0), abs=1e-12)


def test_power_law_noisy(rng):
    x = np.geomspace(1, 100, 50)
    y = x**2 * (1 + 1e-3 * rng.standard_normal(x.size))
    assert abs(power_law_fit(x, y).slope - 2.0) < 1e-2


@pytest.mark.parametrize("x,y", [([1, 2, 3], [1, 2, 3]), ([1, 2, 3, -4], [1, 1, 1, 1]), ([1, 2, 3, 4], [0, 1, 1, 1])])
def test_power_law_rejects_bad_data(x, y):
    with pytest.raises(DomainError):
        power_law_fit(x, y)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.1, 3.0), st.floats(0.1, 3.0))
def test_pv_antisymmetric_under_reflection(shift, left, right):
    # Reflecting f about the pole flips the sign of the PV integral.
    pole = 2.0
    f = lambda x: np.exp(-((np.asarray(x) - pole - 0.3 * shift) ** 2))
    g = lambda x: f(2 * pole - np.asarray(x))
    a = principal_value(f, pole, pole - left, pole + right).value
    b = principal_value(g, pole, pole - right, pole + left).value
    assert abs(a + b) <= 1e-10 * max(1.0, abs(a))
