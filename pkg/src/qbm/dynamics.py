"""Exact one-quantum time evolution from a spectral decomposition.

Convention: A(t) = sum_nu |Phi_nu|^2 exp(-i alpha_nu t), a = Re A, b = -Im A,
so a(t) = sum |Phi|^2 cos(alpha t) and b(t) = sum |Phi|^2 sin(alpha t).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SingularPointWarning
from .model import ModelConfig
from .spectrum import SpectralDecomposition

# Fixed batch size: results must not depend on how a caller splits a grid.
TIME_CHUNK = 256
WRONSKIAN_MIN = 1e-8


@dataclass(frozen=True)
class AmplitudeSeries:
    """Complex amplitude on a time grid.

    ``envelope``, when given, is the amplitude with a pure phase e^{-i c t}
    divided out; the modulus is taken from it, which avoids the rounding of
    the fast carrier.
    """

    times: np.ndarray
    values: np.ndarray
    envelope: np.ndarray | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        v = np.asarray(self.values, dtype=complex).reshape(-1)
        if t.shape != v.shape:
            raise DomainError("times and values differ in length")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if self.envelope is not None:
            e = np.asarray(self.envelope, dtype=complex).reshape(-1)
            if e.shape != v.shape:
                raise DomainError("envelope and values differ in length")
            object.__setattr__(self, "envelope", e)

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.values if self.envelope is None else self.envelope)

    @property
    def probability(self) -> np.ndarray:
        return self.modulus**2


@dataclass(frozen=True)
class LangevinCoefficients:
    times: np.ndarray
    omega2: np.ndarray
    gamma: np.ndarray
    wronskian: np.ndarray
    singular: np.ndarray


def _times(times):
    t = np.asarray(times, dtype=float).reshape(-1)
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise DomainError("time grid must be strictly increasing")
    return t


def _phases(alphas, t):
    return np.exp(-1j * np.outer(t, alphas))


def _spectral_sum(alphas, coeffs, times):
    """sum_nu coeffs[nu, ...] exp(-i alpha_nu t), batched over time."""
    out = []
    for start in range(0, times.size, TIME_CHUNK):
        out.append(_phases(alphas, times[start:start + TIME_CHUNK]) @ coeffs)
    if not out:
        return np.zeros((0,) + coeffs.shape[1:], dtype=complex)
    return np.concatenate(out, axis=0)


def survival_amplitude(spec: SpectralDecomposition, times) -> AmplitudeSeries:
    """A(t) = sum_nu |Phi_nu|^2 exp(-i alpha_nu t).

    Summed in the frame rotating at the mean frequency sum_nu |Phi_nu|^2 alpha_nu
    (equal to Omega), so a decoupled system gives |A| = 1 exactly.
    """
    t = _times(times)
    center = float(np.dot(spec.weights, spec.alphas))
    env = _spectral_sum(spec.alphas - center, spec.weights.astype(complex), t)
    return AmplitudeSeries(t, env * np.exp(-1j * center * t), env)


def transition_amplitudes(spec: SpectralDecomposition, times) -> np.ndarray:
    """All bath amplitudes <w_k|exp(-iht)|Omega>, shape (len(times), N)."""
    t = _times(times)
    coeffs = (spec.amplitudes[:, None] * spec.overlaps).astype(complex)
    return _spectral_sum(spec.alphas, coeffs, t)


def transition_amplitude(spec: SpectralDecomposition, k: int, times) -> AmplitudeSeries:
    """Amplitude to find the quantum in bath mode ``k`` (0-based)."""
    n = spec.overlaps.shape[1]
    if not 0 <= k < n:
        raise IndexError(f"mode index {k} out of range for {n} modes")
    t = _times(times)
    coeffs = (spec.amplitudes * spec.overlaps[:, k]).astype(complex)
    return AmplitudeSeries(t, _spectral_sum(spec.alphas, coeffs, t))


def bath_populations(spec: SpectralDecomposition, times, occupations) -> np.ndarray:
    """sum_k |A_k(t)|^2 * occupations[k] without storing every amplitude."""
    t = _times(times)
    occ = np.asarray(occupations, dtype=float)
    coeffs = (spec.amplitudes[:, None] * spec.overlaps).astype(complex)
    out = np.empty(t.size)
    for start in range(0, t.size, TIME_CHUNK):
        amp = _phases(spec.alphas, t[start:start + TIME_CHUNK]) @ coeffs
        out[start:start + TIME_CHUNK] = (np.abs(amp) ** 2) @ occ
    return out


def cos_sin_sums(spec: SpectralDecomposition, times, order: int = 0):
    """(a, b) or their ``order``-th time derivatives, analytically."""
    t = _times(times)
    coeff = spec.weights * (spec.alphas**order)
    amp = _spectral_sum(spec.alphas, coeff.astype(complex), t)
    # d^k/dt^k exp(-i a t) = (-i a)^k exp(-i a t); fold (-i)^k back in.
    amp = amp * (-1j) ** order
    return amp.real, -amp.imag


def mean_trajectory(spec: SpectralDecomposition, x0: float, p0: float, config: ModelConfig, times) -> np.ndarray:
    """<X(t)> = a(t) X0 + b(t) P0/(M Omega); the bath term has zero mean."""
    a, b = cos_sin_sums(spec, times)
    return a * x0 + b * p0 / (config.mass * config.omega)


def langevin_coefficients(spec: SpectralDecomposition, times, w_min: float = WRONSKIAN_MIN) -> LangevinCoefficients:
    """Time-dependent frequency and friction of the local-in-time equation
    X'' + Omega^2(t) X + Gamma(t) X' = F(t), reconstructed from a and b.

    Samples where |a b' - b a'| < ``w_min`` are flagged and set to NaN.
    """
    t = _times(times)
    a, b = cos_sin_sums(spec, t, 0)
    da, db = cos_sin_sums(spec, t, 1)
    dda, ddb = cos_sin_sums(spec, t, 2)
    w = a * db - b * da
    singular = np.abs(w) < w_min
    safe = np.where(singular, 1.0, w)
    omega2 = np.where(singular, np.nan, (da * ddb - db * dda) / safe)
    gamma = np.where(singular, np.nan, (b * dda - a * ddb) / safe)
    if singular.any():
        warnings.warn(
            f"{int(singular.sum())} sample(s) with vanishing Wronskian flagged singular",
            SingularPointWarning,
            stacklevel=2,
        )
    return LangevinCoefficients(t, omega2, gamma, w, singular)
