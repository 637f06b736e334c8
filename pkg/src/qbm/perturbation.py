"""Second-order time-dependent perturbation theory for the rotating-wave bath."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .dynamics import AmplitudeSeries
from .errors import DomainError, PoleError, RegimeWarning
from .model import CouplingFunction, ModelConfig, bose_occupation
from .quadrature import principal_value

PV_TOL = 1e-12


@dataclass(frozen=True)
class PerturbativeConstants:
    delta_omega: float
    gamma: float
    eta: float

    @property
    def window(self) -> tuple[float, float]:
        """Times where constant-rate perturbation theory holds, 4pi/eta << t << 1/gamma."""
        upper = math.inf if self.gamma == 0 else 1.0 / self.gamma
        return 4.0 * math.pi / self.eta, upper

    @property
    def has_window(self) -> bool:
        return self.gamma < self.eta / (4.0 * math.pi)


@dataclass(frozen=True)
class TransitionRates:
    t: float
    rates: np.ndarray
    probabilities: np.ndarray


def frequency_shift(coupling: CouplingFunction, omega: float) -> float:
    """PV integral of g^2(w)/(omega - w) over (0, inf)."""
    if omega in coupling.breakpoints:
        raise PoleError(f"g^2 is not continuous at omega={omega}")
    if coupling.strength == 0:
        return 0.0
    end = coupling.support_end()
    if omega >= end:
        # Ordinary integral, no pole inside the support.
        from .quadrature import integrate

        return integrate(lambda w: coupling(w) / (omega - w), 0.0, end, PV_TOL,
                         points=coupling.breakpoints).value
    scale = coupling.cutoff if coupling.family == "power-exponential" else 1.0
    b = math.inf if coupling.family == "power-exponential" else end
    return principal_value(coupling, omega, 0.0, b, PV_TOL, scale=scale, budget=50_000,
                           points=coupling.breakpoints).value


def damping_rate(coupling: CouplingFunction, omega: float) -> float:
    """2*pi*g^2(omega). At a jump of g^2 the value inside the support is used
    and a :class:`RegimeWarning` is issued."""
    if omega in coupling.breakpoints:
        h = 1e-9 * max(1.0, abs(omega))
        left, right = float(coupling(omega - h)), float(coupling(omega + h))
        if not math.isclose(left, right, rel_tol=1e-6, abs_tol=1e-7 * float(coupling(coupling.peak))):
            warnings.warn(
                f"g^2 jumps at omega={omega} ({left:g} vs {right:g}); using the one-sided value inside the support",
                RegimeWarning,
                stacklevel=2,
            )
            return 2.0 * math.pi * max(left, right)
    return 2.0 * math.pi * float(coupling(omega))


def spectral_width(coupling: CouplingFunction) -> float:
    """Full width at half maximum of g^2."""
    if coupling.family == "window":
        return coupling.upper - coupling.lower
    if coupling.family == "custom-table":
        w = np.array([p[0] for p in coupling.table])
        g2 = np.array([p[1] for p in coupling.table])
        above = w[g2 >= 0.5 * g2.max()]
        return float(above[-1] - above[0]) if above.size > 1 else float(np.diff(w).min())
    peak = coupling.peak
    shape = CouplingFunction("power-exponential", 1.0, coupling.exponent, coupling.cutoff)
    half = 0.5 * float(shape(peak))

    def f(w):
        return float(shape(w)) - half

    left = brentq(f, peak * 1e-12, peak, xtol=1e-14)
    right_end = peak + coupling.cutoff
    while f(right_end) > 0:
        right_end += coupling.cutoff
    right = brentq(f, peak, right_end, xtol=1e-14)
    return right - left


def perturbative_constants(coupling: CouplingFunction, omega: float) -> PerturbativeConstants:
    return PerturbativeConstants(
        frequency_shift(coupling, omega), damping_rate(coupling, omega), spectral_width(coupling)
    )


def discrete_frequency_shift(config: ModelConfig) -> float:
    """Principal-part sum over a discrete bath, skipping resonant modes."""
    w = config.bath.frequencies
    g2 = config.bath.couplings**2
    d = config.omega - w
    keep = np.abs(d) >= 1e-12
    return float(np.sum(g2[keep] / d[keep]))


def delta_t(alpha, t: float):
    """sin^2(alpha t)/(pi alpha^2 t): unit area, tends to a delta as t grows."""
    if not t > 0:
        raise DomainError("delta_t needs t > 0")
    a = np.asarray(alpha, dtype=float)
    x = a * t
    # sin^2(x)/x^2 with the x -> 0 limit 1.
    sinc2 = np.sinc(x / np.pi) ** 2
    out = sinc2 * t / np.pi
    return out if out.ndim else float(out)


def transition_rates(config: ModelConfig, t: float, constants: PerturbativeConstants | None = None) -> TransitionRates:
    """Second-order rates and probabilities P = 1 + Gamma*t among the states
    (system, mode 1, ..., mode N); index 0 is the system oscillator.

    Only system-bath matrix elements are nonzero: v_0k = v_k0 = g_k.
    Both matrices are dense, (N+1)**2 floats each.
    """
    if not t > 0:
        raise DomainError("transition_rates needs t > 0")
    if constants is not None:
        lo, hi = constants.window
        if not lo < t < hi:
            warnings.warn(
                f"t={t:g} lies outside the validity window ({lo:g}, {hi:g})",
                RegimeWarning,
                stacklevel=2,
            )
    w = np.concatenate([[config.omega], config.bath.frequencies])
    n = w.size
    g = config.bath.couplings
    rates = np.zeros((n, n))
    r = 2.0 * math.pi * g**2 * np.asarray(delta_t(config.omega - config.bath.frequencies, t))
    rates[0, 1:] = r
    rates[1:, 0] = r
    np.fill_diagonal(rates, 0.0)
    np.fill_diagonal(rates, -rates.sum(axis=1))
    probs = np.eye(n) + rates * t
    return TransitionRates(float(t), rates, probs)


def van_kampen_trajectory(gamma: float, beta: float, omega: float, n0: float, times) -> np.ndarray:
    """Closed-form relaxation e^{-gamma t} n0 + (1 - e^{-gamma t}) nbar(omega)."""
    if gamma < 0:
        raise DomainError("gamma must be >= 0")
    nbar = bose_occupation(beta, omega)
    t = np.asarray(times, dtype=float)
    decay = np.exp(-gamma * t)
    return decay * n0 - np.expm1(-gamma * t) * nbar


def breit_wigner_amplitude(omega: float, delta_omega: float, gamma: float, times) -> AmplitudeSeries:
    if gamma < 0:
        raise DomainError("gamma must be >= 0")
    t = np.asarray(times, dtype=float)
    decay = np.exp(-0.5 * gamma * t)
    return AmplitudeSeries(t, decay * np.exp(-1j * (omega + delta_omega) * t), decay)


def _difference_quotient(w, omega, t):
    """(e^{-iwt} - e^{-i omega t})/(w - omega) without cancellation."""
    sigma = 0.5 * (w + omega)
    half = 0.5 * (w - omega)
    return -1j * t * np.exp(-1j * sigma * t) * np.sinc(half * t / np.pi)


def first_order_transition_amplitude(g: float, w: float, omega: float, times) -> AmplitudeSeries:
    """g/(w - omega) (e^{-iwt} - e^{-i omega t}); resonance handled as a limit."""
    t = np.asarray(times, dtype=float)
    return AmplitudeSeries(t, g * _difference_quotient(w, omega, t))


def first_order_second_derivative(g: float, w: float, omega: float, times) -> np.ndarray:
    """Second time derivative of the first-order amplitude,
    g (-w^2 e^{-iwt} + omega^2 e^{-i omega t})/(w - omega)."""
    t = np.asarray(times, dtype=float)
    return -g * (w**2 * _difference_quotient(w, omega, t) + (w + omega) * np.exp(-1j * omega * t))
