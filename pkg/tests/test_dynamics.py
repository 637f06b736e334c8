import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from qbm import dynamics, spectrum
from qbm.errors import DomainError, SingularPointWarning
from qbm.model import BathSpec, ModelConfig
from qbm.validation import random_bath

TIMES = np.linspace(0.0, 40.0, 81)


def _propagator_column(cfg, times):
    h = spectrum.arrowhead_matrix(cfg)
    return np.array([expm(-1j * h * t)[:, 0] for t in times])


def test_amplitudes_match_matrix_exponential(rng):
    cfg = ModelConfig(1.0, random_bath(rng, 15))
    spec = spectrum.decompose(cfg)
    ref = _propagator_column(cfg, TIMES)
    np.testing.assert_allclose(dynamics.survival_amplitude(spec, TIMES).values, ref[:, 0], atol=1e-11)
    np.testing.assert_allclose(dynamics.transition_amplitudes(spec, TIMES), ref[:, 1:], atol=1e-11)
    np.testing.assert_allclose(dynamics.transition_amplitude(spec, 3, TIMES).values, ref[:, 4], atol=1e-11)


def test_resonant_pair_rabi(resonant_pair):
    spec = spectrum.decompose(resonant_pair)
    amp = dynamics.survival_amplitude(spec, TIMES)
    np.testing.assert_allclose(amp.values, np.exp(-1j * TIMES) * np.cos(0.1 * TIMES), atol=1e-14)
    bath = dynamics.transition_amplitude(spec, 0, TIMES)
    np.testing.assert_allclose(bath.probability, np.sin(0.1 * TIMES) ** 2, atol=1e-14)


def test_decoupled_bath_keeps_free_phase():
    cfg = ModelConfig(1.3, BathSpec([0.5, 2.0], [0.0, 0.0]))
    amp = dynamics.survival_amplitude(spectrum.decompose(cfg), TIMES)
    np.testing.assert_allclose(amp.values, np.exp(-1.3j * TIMES), atol=1e-15)


def test_bath_populations_weighted_sum(rng):
    cfg = ModelConfig(1.0, random_bath(rng, 10))
    spec = spectrum.decompose(cfg)
    occ = rng.uniform(0, 3, 10)
    ref = np.abs(_propagator_column(cfg, TIMES)[:, 1:]) ** 2 @ occ
    np.testing.assert_allclose(dynamics.bath_populations(spec, TIMES, occ), ref, atol=1e-11)


def test_time_grid_validation(resonant_pair):
    spec = spectrum.decompose(resonant_pair)
    with pytest.raises(DomainError):
        dynamics.survival_amplitude(spec, [0.0, 2.0, 1.0])
    with pytest.raises(IndexError):
        dynamics.transition_amplitude(spec, 1, TIMES)
    assert dynamics.survival_amplitude(spec, []).values.size == 0


def test_chunking_is_invisible(rng):
    cfg = ModelConfig(1.0, random_bath(rng, 20))
    spec = spectrum.decompose(cfg)
    t = np.linspace(0, 50, 3 * dynamics.TIME_CHUNK + 7)
    whole = dynamics.survival_amplitude(spec, t).values
    parts = np.concatenate([dynamics.survival_amplitude(spec, t[i:i + 100]).values for i in range(0, t.size, 100)])
    np.testing.assert_array_equal(whole, parts)


def test_derivatives_by_finite_difference(rng):
    cfg = ModelConfig(1.0, random_bath(rng, 12))
    spec = spectrum.decompose(cfg)
    t = np.array([3.0, 7.5])
    h = 1e-5
    for order in (1, 2):
        lo = np.array(dynamics.cos_sin_sums(spec, t - h, order - 1))
        hi = np.array(dynamics.cos_sin_sums(spec, t + h, order - 1))
        np.testing.assert_allclose(np.array(dynamics.cos_sin_sums(spec, t, order)), (hi - lo) / (2 * h), atol=1e-8)


def test_free_oscillator_langevin():
    cfg = ModelConfig(1.7, BathSpec([1.0], [0.0]))
    spec = spectrum.decompose(cfg)
    t = np.linspace(0.1, 10, 50)
    lc = dynamics.langevin_coefficients(spec, t)
    np.testing.assert_allclose(lc.omega2, 1.7**2, rtol=1e-12)
    np.testing.assert_allclose(lc.gamma, 0.0, atol=1e-12)
    np.testing.assert_allclose(lc.wronskian, 1.7, rtol=1e-13)
    x = dynamics.mean_trajectory(spec, 0.5, 2.0, cfg, t)
    np.testing.assert_allclose(x, 0.5 * np.cos(1.7 * t) + 2.0 / 1.7 * np.sin(1.7 * t), atol=1e-13)


def test_singular_wronskian_flagged(resonant_pair):
    # |A| = |cos(0.1 t)| vanishes at t = 5 pi, so the Wronskian does too.
    spec = spectrum.decompose(resonant_pair)
    t = np.array([1.0, 5 * math.pi, 20.0])
    with pytest.warns(SingularPointWarning):
        lc = dynamics.langevin_coefficients(spec, t)
    assert list(lc.singular) == [False, True, False]
    assert math.isnan(lc.omega2[1]) and math.isnan(lc.gamma[1])
    assert np.isfinite(lc.omega2[[0, 2]]).all()


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 40), st.integers(0, 2**32 - 1))
def test_unitarity_and_langevin_identity(n, seed):
    cfg = ModelConfig(1.0, random_bath(np.random.default_rng(seed), n))
    spec = spectrum.decompose(cfg)
    t = np.linspace(0, 30, 61)
    total = dynamics.survival_amplitude(spec, t).probability + np.sum(
        np.abs(dynamics.transition_amplitudes(spec, t)) ** 2, axis=1
    )
    np.testing.assert_allclose(total, 1.0, atol=1e-10)
    # a and b both solve X'' + Omega^2(t) X + Gamma(t) X' = 0.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SingularPointWarning)
        lc = dynamics.langevin_coefficients(spec, t)
    ok = ~lc.singular & (np.abs(lc.wronskian) > 1e-3)
    a, b = dynamics.cos_sin_sums(spec, t, 0)
    da, db = dynamics.cos_sin_sums(spec, t, 1)
    dda, ddb = dynamics.cos_sin_sums(spec, t, 2)
    for x, dx, ddx in ((a, da, dda), (b, db, ddb)):
        res = ddx + lc.omega2 * x + lc.gamma * dx
        scale = np.abs(ddx) + np.abs(lc.omega2 * x) + np.abs(lc.gamma * dx) + 1.0
        assert np.all(np.abs(res[ok]) / scale[ok] < 1e-8)
