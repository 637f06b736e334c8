"""Autocorrelation K(t) = <F(0)F(t) + F(t)F(0)>/2 of the stochastic acceleration."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError
from .model import CouplingFunction, ModelConfig, ThermalState
from .perturbation import first_order_second_derivative, first_order_transition_amplitude
from .quadrature import fourier_integral, integrate

SOURCES = ("discrete", "operator-oracle", "continuum", "classical-limit")
_COTH_SERIES = 1e-3


@dataclass(frozen=True)
class NoiseKernel:
    """K sampled at ``times`` (t >= 0 only; K is even in t)."""

    times: np.ndarray
    values: np.ndarray
    beta: float
    mass: float
    omega: float
    source: str


def _times(times):
    t = np.asarray(times, dtype=float).reshape(-1)
    if np.any(t < 0):
        raise DomainError("kernel times must be >= 0 (K is even)")
    return t


def coth_half(x):
    """coth(x/2) for x = beta*omega > 0, using 2/x + x/6 near zero."""
    x = np.asarray(x, dtype=float)
    small = x < _COTH_SERIES
    safe = np.where(small, 1.0, x)
    with np.errstate(over="ignore"):
        full = 1.0 / np.tanh(0.5 * safe)
    series = 2.0 / np.where(small, x, 1.0) + x / 6.0
    return np.where(small, series, full)


def _check_thermal(config, thermal):
    occ = np.asarray(thermal.occupations, dtype=float)
    if occ.shape != (len(config.bath),):
        raise DomainError("thermal occupations do not match the bath size")
    return occ


def autocorrelation_discrete(config: ModelConfig, thermal: ThermalState, times) -> NoiseKernel:
    """(1/2M Omega) sum_m (2 N_m + 1) g_m^2 (w_m + Omega)^2 cos(w_m t)."""
    t = _times(times)
    occ = _check_thermal(config, thermal)
    w, g = config.bath.frequencies, config.bath.couplings
    amp = (2.0 * occ + 1.0) * g**2 * (w + config.omega) ** 2 / (2.0 * config.mass * config.omega)
    values = np.cos(np.outer(t, w)) @ amp
    return NoiseKernel(t, values, config.beta, config.mass, config.omega, "discrete")


def operator_oracle(config: ModelConfig, thermal: ThermalState, times) -> NoiseKernel:
    """Same kernel rebuilt from first-order bath amplitudes.

    f(t) = (2 M Omega)^-1/2 sum_m [A_m(t) b_m^+ + h.c.]; with A_m(0) = 0 only
    K1 = <f''(0) f''(t)>_sym/2 and K2 = Omega^2 <f''(0) f(t)>_sym/2 survive.
    Thermal moments: <b^+ b> = N_m, <b b^+> = N_m + 1.
    """
    t = _times(times)
    occ = _check_thermal(config, thermal)
    omega = config.omega
    norm = 1.0 / (2.0 * config.mass * omega)
    zero = np.zeros(1)
    values = np.zeros(t.size)
    for w, g, n in zip(config.bath.frequencies, config.bath.couplings, occ):
        if g == 0:
            continue
        acc0 = first_order_second_derivative(g, w, omega, zero)[0]
        acc = first_order_second_derivative(g, w, omega, t)
        amp = first_order_transition_amplitude(g, w, omega, t).values
        # Each bracket lists the four operator orderings explicitly.
        k1 = 0.5 * (
            acc0 * np.conj(acc) * n
            + np.conj(acc0) * acc * (n + 1.0)
            + acc * np.conj(acc0) * n
            + np.conj(acc) * acc0 * (n + 1.0)
        )
        k2 = 0.5 * omega**2 * (
            acc0 * np.conj(amp) * n
            + np.conj(acc0) * amp * (n + 1.0)
            + amp * np.conj(acc0) * n
            + np.conj(amp) * acc0 * (n + 1.0)
        )
        values += norm * (k1 + k2).real
    return NoiseKernel(t, values, config.beta, config.mass, omega, "operator-oracle")


def autocorrelation_continuum(
    coupling: CouplingFunction, beta: float, mass: float, omega: float, times, tol: float = 1e-9
) -> NoiseKernel:
    """(1/2M) int g^2(w) (w + Omega)^2/Omega coth(beta w/2) cos(w t) dw.

    ``beta = inf`` gives the zero-temperature kernel.
    """
    if not beta > 0 or not mass > 0 or not omega > 0:
        raise DomainError("beta, mass and omega must be > 0")
    t = _times(times)

    def density(w):
        w = np.asarray(w, dtype=float)
        thermal = np.ones_like(w) if math.isinf(beta) else coth_half(beta * np.maximum(w, 1e-300))
        return coupling(w) * (w + omega) ** 2 / omega * thermal / (2.0 * mass)

    support = (0.0, coupling.support_end())
    values = np.empty(t.size)
    for i, ti in enumerate(t):
        res = fourier_integral(density, float(ti), support, tol, points=coupling.breakpoints)
        if not res.converged:
            raise ConvergenceError(f"continuum kernel did not converge at t={ti:g}")
        values[i] = res.value.real if isinstance(res.value, complex) else res.value
    return NoiseKernel(t, values, beta, mass, omega, "continuum")


def classical_limit_kernel(gamma: float, temperature: float, mass: float, hbar: float, times) -> NoiseKernel:
    """(gamma T/M) d/dt coth(pi T t/hbar) for t > 0.

    Negative for every t > 0; its positive weight sits in a distribution at
    t = 0 that turns into 2 gamma T/M delta(t) as hbar -> 0. t = 0 is not a
    sample point and raises.
    """
    if not temperature > 0 or not mass > 0 or not hbar > 0 or gamma < 0:
        raise DomainError("need gamma >= 0 and T, M, hbar > 0")
    t = _times(times)
    if np.any(t == 0):
        raise DomainError("classical-limit kernel is singular at t = 0")
    rate = math.pi * temperature / hbar
    x = rate * t
    # csch^2 written through exp(-2x) so the tail does not overflow.
    e = np.exp(-2.0 * x)
    csch2 = 4.0 * e / (-np.expm1(-2.0 * x)) ** 2
    values = -(gamma * temperature / mass) * rate * csch2
    return NoiseKernel(t, values, 1.0 / temperature, mass, math.nan, "classical-limit")


def white_noise_mass(gamma: float, temperature: float, mass: float, hbar: float, t_max: float = math.inf) -> float:
    """Half-line weight of the classical-limit kernel on [0, t_max].

    The kernel is the derivative of the odd function (gamma T/M) coth(pi T t/hbar);
    taking the symmetric (principal-value) weight at the origin gives
    (gamma T/M) coth(pi T t_max/hbar), which tends to gamma T/M.
    """
    if not t_max > 0:
        raise DomainError("t_max must be > 0")
    scale = gamma * temperature / mass
    if math.isinf(t_max):
        return scale
    return scale / math.tanh(math.pi * temperature * t_max / hbar)


def smeared_mass(gamma: float, temperature: float, mass: float, hbar: float, width: float) -> float:
    """Half of <K, phi>/phi(0) for a Gaussian test function of the given width.

    Integrating by parts moves the derivative onto phi, leaving the bounded
    integrand coth(pi T t/hbar) phi'(t); this is a quadrature, independent of
    the closed form in :func:`white_noise_mass`.
    """
    if not width > 0:
        raise DomainError("width must be > 0")
    rate = math.pi * temperature / hbar

    def integrand(t):
        t = np.asarray(t, dtype=float)
        x = rate * t
        # coth(x) * t stays finite at t = 0.
        coth_t = np.where(x < 1e-8, 1.0 / rate + x * t / 3.0, t / np.tanh(np.where(x < 1e-8, 1.0, x)))
        dphi_over_t = -np.exp(-0.5 * (t / width) ** 2) / width**2
        return coth_t * dphi_over_t

    res = integrate(integrand, 0.0, math.inf, 1e-12, scale=width)
    pairing = -2.0 * (gamma * temperature / mass) * res.value
    return 0.5 * pairing
