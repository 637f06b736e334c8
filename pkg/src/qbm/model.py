"""Physical configuration: system oscillator, continuum couplings, discrete
baths and the thermal initial state. Units are hbar = k_B = 1."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError
from .quadrature import integrate

FAMILIES = ("power-exponential", "window", "custom-table")


@dataclass(frozen=True)
class CouplingFunction:
    """Continuum coupling density g^2(omega).

    ``power-exponential``: lam * w**n * exp(-w/omega_c).
    ``window``: lam on [lower, upper], zero elsewhere.
    ``custom-table``: linear interpolation of (w, g^2) samples, zero outside.
    """

    family: str = "power-exponential"
    strength: float = 0.0
    exponent: float = 1.0
    cutoff: float = 1.0
    lower: float = 0.0
    upper: float = 1.0
    table: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown coupling family {self.family!r}")
        if not math.isfinite(self.strength) or self.strength < 0:
            raise ConfigurationError("coupling strength must be finite and >= 0")
        if self.family == "power-exponential":
            if not self.exponent > 0 or not self.cutoff > 0:
                raise ConfigurationError("power-exponential needs exponent > 0 and cutoff > 0")
        elif self.family == "window":
            if not 0 <= self.lower < self.upper:
                raise ConfigurationError("window needs 0 <= lower < upper")
        else:
            if not self.table or len(self.table) < 2:
                raise ConfigurationError("custom-table needs at least two samples")
            w = np.array([p[0] for p in self.table], dtype=float)
            g2 = np.array([p[1] for p in self.table], dtype=float)
            if np.any(np.diff(w) <= 0) or w[0] < 0:
                raise ConfigurationError("table frequencies must be >= 0 and strictly increasing")
            if np.any(g2 < 0) or not np.all(np.isfinite(g2)):
                raise ConfigurationError("table values must be finite and >= 0")
            object.__setattr__(self, "table", tuple((float(a), float(b)) for a, b in self.table))

    @classmethod
    def from_damping(cls, gamma, omega, exponent=1.0, cutoff=None):
        """Power-exponential family scaled so that 2*pi*g^2(omega) == gamma.

        The default cutoff puts the maximum of g^2 at ``omega``.
        """
        if cutoff is None:
            cutoff = omega / exponent
        shape = omega**exponent * math.exp(-omega / cutoff)
        return cls("power-exponential", gamma / (2 * math.pi * shape), exponent, cutoff)

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        if self.family == "power-exponential":
            pos = w > 0
            safe = np.where(pos, w, 1.0)
            val = self.strength * safe**self.exponent * np.exp(-safe / self.cutoff)
            return np.where(pos, val, 0.0)
        if self.family == "window":
            inside = (w >= self.lower) & (w <= self.upper) & (w > 0)
            return np.where(inside, self.strength, 0.0)
        tw = np.array([p[0] for p in self.table])
        tg = np.array([p[1] for p in self.table])
        val = np.interp(w, tw, tg, left=0.0, right=0.0)
        return np.where(w > 0, self.strength * val, 0.0)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Frequencies where g^2 is not smooth."""
        if self.family == "window":
            return (self.lower, self.upper)
        if self.family == "custom-table":
            return tuple(p[0] for p in self.table)
        return ()

    @property
    def peak(self) -> float:
        if self.family == "power-exponential":
            return self.exponent * self.cutoff
        if self.family == "window":
            return 0.5 * (self.lower + self.upper)
        return max(self.table, key=lambda p: p[1])[0]

    def support_end(self, decades: float = 60.0) -> float:
        """Frequency beyond which g^2 is negligible (below e**-decades of its peak scale)."""
        if self.family == "power-exponential":
            return self.peak + decades * self.cutoff
        if self.family == "window":
            return self.upper
        return self.table[-1][0]

    def total_weight(self, omega_max=math.inf) -> float:
        pts = [p for p in self.breakpoints if 0 < p < omega_max]
        scale = self.cutoff if self.family == "power-exponential" else 1.0
        return integrate(self, 0.0, omega_max, 1e-12, points=pts, scale=scale).value


@dataclass(frozen=True)
class BathSpec:
    """Discrete bath modes ``frequencies[k]`` with couplings ``couplings[k]``."""

    frequencies: np.ndarray
    couplings: np.ndarray

    def __post_init__(self):
        w = np.array(self.frequencies, dtype=float).reshape(-1)
        g = np.array(self.couplings, dtype=float).reshape(-1)
        if w.size < 1:
            raise ConfigurationError("a bath needs at least one mode")
        if w.shape != g.shape:
            raise ConfigurationError("frequencies and couplings differ in length")
        if not np.all(np.isfinite(w)) or not np.all(np.isfinite(g)):
            raise ConfigurationError("bath frequencies and couplings must be finite")
        if np.any(w <= 0):
            raise ConfigurationError("bath frequencies must be > 0")
        if np.any(np.diff(w) <= 0):
            raise ConfigurationError("bath frequencies must be strictly increasing (no degenerate modes)")
        w.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "frequencies", w)
        object.__setattr__(self, "couplings", g)

    @classmethod
    def from_modes(cls, modes: Sequence[tuple[float, float]]):
        modes = list(modes)
        return cls([m[0] for m in modes], [m[1] for m in modes])

    def __len__(self):
        return self.frequencies.size


@dataclass(frozen=True)
class ModelConfig:
    omega: float
    bath: BathSpec
    mass: float = 1.0
    beta: float = 1.0
    n0: float = 0.0

    def __post_init__(self):
        for name in ("omega", "mass", "beta", "n0"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")
        if self.omega <= 0:
            raise ConfigurationError("omega must be > 0")
        if self.mass <= 0:
            raise ConfigurationError("mass must be > 0")
        if self.beta <= 0:
            raise ConfigurationError("beta must be > 0")
        if self.n0 < 0:
            raise ConfigurationError("initial occupation n0 must be >= 0")


@dataclass(frozen=True)
class ThermalState:
    occupations: np.ndarray = field(repr=False)


def discretize(coupling: CouplingFunction, n: int, omega_max: float, scheme: str = "midpoint") -> BathSpec:
    """Discrete bath whose squared couplings carry the weight of g^2.

    ``midpoint``: N uniform bins on [0, omega_max]; mode at the bin centre
    with g_k^2 equal to the integral of g^2 over the bin.
    ``gauss-bin``: Gauss-Legendre nodes on [0, omega_max] with g_k^2 equal to
    the quadrature weight times g^2 at the node.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ConfigurationError("number of modes must be a positive integer")
    if not omega_max > 0 or not math.isfinite(omega_max):
        raise ConfigurationError("omega_max must be finite and > 0")
    if scheme == "midpoint":
        edges = np.linspace(0.0, omega_max, n + 1)
        centres = 0.5 * (edges[:-1] + edges[1:])
        kinks = coupling.breakpoints
        weights = np.empty(n)
        for k in range(n):
            lo, hi = edges[k], edges[k + 1]
            pts = [p for p in kinks if lo < p < hi]
            weights[k] = integrate(coupling, lo, hi, 1e-13, abs_tol=1e-300, points=pts).value
    elif scheme == "gauss-bin":
        x, w = np.polynomial.legendre.leggauss(n)
        centres = 0.5 * omega_max * (x + 1.0)
        weights = 0.5 * omega_max * w * coupling(centres)
    else:
        raise ConfigurationError(f"unknown discretization scheme {scheme!r}")
    return BathSpec(centres, np.sqrt(np.maximum(weights, 0.0)))


def default_omega_max(coupling: CouplingFunction, omega: float) -> float:
    return 10.0 * max(omega, coupling.peak)


def bose_occupation(beta, omega):
    """1/(exp(beta*omega) - 1), elementwise."""
    x = np.asarray(beta, dtype=float) * np.asarray(omega, dtype=float)
    if np.any(x <= 0) or np.any(np.isnan(x)):
        raise DomainError("bose_occupation needs beta*omega > 0")
    with np.errstate(over="ignore"):
        out = 1.0 / np.expm1(x)
    return out if out.ndim else float(out)


def thermal_state(config: ModelConfig) -> ThermalState:
    occ = np.asarray(bose_occupation(config.beta, config.bath.frequencies), dtype=float).reshape(-1)
    occ.setflags(write=False)
    return ThermalState(occ)
