"""Fast invariant checks behind ``qbm validate``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dynamics, noise, perturbation, population, spectrum
from .model import BathSpec, CouplingFunction, ModelConfig, ThermalState, discretize, thermal_state
from .quadrature import principal_value, principal_value_excision
from .resolvent import ResolventModel


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tolerance)


def random_bath(rng: np.random.Generator, n: int, omega: float = 1.0) -> BathSpec:
    w = np.sort(rng.uniform(0.05, 3.0 * omega, n))
    w = w[np.concatenate([[True], np.diff(w) > 1e-9])]
    g = rng.normal(0.0, 0.3 / math.sqrt(w.size), w.size)
    return BathSpec(w, g)


def _spectral(rng, baths=10):
    eig = wt = norm = 0.0
    for _ in range(baths):
        cfg = ModelConfig(1.0, random_bath(rng, int(rng.integers(1, 60))))
        a, b = spectrum.decompose(cfg), spectrum.dense_oracle(cfg)
        eig = max(eig, float(np.max(np.abs(a.alphas - b.alphas) / np.maximum(np.abs(b.alphas), 1e-300))))
        wt = max(wt, float(np.max(np.abs(a.weights - b.weights))))
        norm = max(norm, abs(float(np.sum(a.weights)) - 1.0))
    return [CheckResult("eigenvalues_vs_dense", eig, 1e-9), CheckResult("weights_vs_dense", wt, 1e-8),
            CheckResult("weight_sum", norm, 1e-10)]


def _unitarity(rng):
    cfg = ModelConfig(1.0, random_bath(rng, 100))
    spec = spectrum.decompose(cfg)
    t = np.linspace(0.0, 200.0, 201)
    p0 = dynamics.survival_amplitude(spec, t).probability
    pk = dynamics.bath_populations(spec, t, np.ones(len(cfg.bath)))
    return [CheckResult("unitarity", float(np.max(np.abs(p0 + pk - 1.0))), 1e-8)]


def _pv():
    c = CouplingFunction.from_damping(0.01, 1.0, 1)
    sub = principal_value(c, 1.0, 0.0, math.inf, 1e-13, scale=1.0).value
    exc = principal_value_excision(c, 1.0, 0.0, math.inf, scale=1.0)
    closed = ResolventModel(c, 1.0).level_shift(1.0)
    return [CheckResult("pv_subtraction_vs_excision", abs(sub - exc) / abs(sub), 1e-8),
            CheckResult("pv_closed_form_vs_numeric", abs(sub - closed) / abs(sub), 1e-8)]


def _noise():
    c = CouplingFunction.from_damping(0.01, 1.0, 1)
    cfg = ModelConfig(1.0, discretize(c, 200, 10.0), beta=1.0)
    t = np.linspace(0.0, 20.0, 81)
    th = thermal_state(cfg)
    a = noise.autocorrelation_discrete(cfg, th, t).values
    b = noise.operator_oracle(cfg, th, t).values
    single = ModelConfig(1.0, BathSpec([1.0], [0.1]))
    k = noise.autocorrelation_discrete(single, ThermalState(np.zeros(1)), t).values
    return [CheckResult("noise_operator_identity", float(np.max(np.abs(a - b)) / np.max(np.abs(a))), 1e-10),
            CheckResult("noise_single_mode", float(np.max(np.abs(k - 0.02 * np.cos(t)))), 1e-15),
            CheckResult("white_noise_mass", abs(noise.smeared_mass(0.1, 1.0, 1.0, 1e-3, 1.0) / 0.1 - 1.0), 1e-2)]


def _rates(rng):
    cfg = ModelConfig(1.0, random_bath(rng, 50))
    tr = perturbation.transition_rates(cfg, 10.0)
    return [CheckResult("rate_row_sums", float(np.max(np.abs(tr.probabilities.sum(axis=1) - 1.0))), 1e-12)]


def _van_kampen():
    gamma, beta, omega, n0 = 0.01, 1.0, 1.0, 2.0
    t = np.linspace(0.0, 300.0, 301)
    n = perturbation.van_kampen_trajectory(gamma, beta, omega, n0, t)
    # Exact derivative of the closed form, compared to the rate equation.
    nbar = 1.0 / math.expm1(beta * omega)
    dn = -gamma * (n0 - nbar) * np.exp(-gamma * t)
    return [CheckResult("van_kampen_ode_residual", float(np.max(np.abs(dn + gamma * n - gamma * nbar))), 1e-12)]


def _duality():
    m = ResolventModel(CouplingFunction.from_damping(0.1, 1.0, 1), 1.0)
    errs = []
    for beta in (5.0, 50.0):
        a = population.low_temp_population(m, beta)
        b = population.laplace_survival(m, beta)
        errs.append(abs(a - b) / abs(a))
    return [CheckResult("laplace_fourier_duality", max(errs), 1e-6)]


def _normalization():
    m = ResolventModel(CouplingFunction.from_damping(0.01, 1.0, 1), 1.0)
    return [CheckResult("spectral_density_norm", abs(m.normalization() - 1.0), 1e-4)]


def run_checks(seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    out = []
    out += _spectral(rng)
    out += _unitarity(rng)
    out += _pv()
    out += _noise()
    out += _rates(rng)
    out += _van_kampen()
    out += _duality()
    out += _normalization()
    return out
