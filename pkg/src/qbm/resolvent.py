"""Continuum limit: level shift, width, spectral density and the survival
amplitude as a Fourier integral of that density."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.special import expi

from .dynamics import AmplitudeSeries
from .errors import DomainError, FitRejectedError, PoleError
from .model import CouplingFunction
from .quadrature import (
    fourier_integral,
    fourier_integral_threshold,
    integrate,
    power_law_fit,
    principal_value,
)

PV_TOL = 1e-12
MIN_R2 = 0.99
# Beyond this |alpha/cutoff| the asymptotic series replaces exp(-x) Ei(x).
_ASYMPTOTIC_X = 40.0
_SPLINE_POINTS = 2000
# rho falls like exp(-w/cutoff); past peak + 45 cutoffs it is below 1e-19 of its scale.
_RHO_DECADES = 45.0


def _scaled_ei_tail(x, n):
    """exp(-x) Ei(x) - sum_{j=1..n} (j-1)!/x**j for |x| large, by the
    asymptotic series sum_{j>n} (j-1)!/x**j truncated before its smallest term."""
    x = np.asarray(x, dtype=float)
    term = math.gamma(n + 1) / x ** (n + 1)
    total = np.zeros_like(x)
    ax = np.abs(x)
    for j in range(n + 1, n + 1 + int(_ASYMPTOTIC_X)):
        total = total + np.where(j < ax, term, 0.0)
        term = term * (j / x)
    return total if total.ndim else float(total)


def _power_exp_shift(alpha, strength, n, c):
    """PV int_0^inf lam w^n exp(-w/c)/(alpha - w) dw for integer n >= 1."""
    if alpha == 0.0:
        return -strength * math.gamma(n) * c**n
    x = alpha / c
    if abs(x) > _ASYMPTOTIC_X:
        return strength * alpha**n * _scaled_ei_tail(x, n)
    poly = math.fsum(alpha**k * math.gamma(n - k) * c ** (n - k) for k in range(n))
    return strength * (alpha**n * math.exp(-x) * expi(x) - poly)


def _table_shift(alpha, strength, table):
    """Closed form for piecewise-linear g^2 (zero outside the table)."""
    w = np.array([p[0] for p in table])
    g2 = np.array([p[1] for p in table])
    slopes = np.diff(g2) / np.diff(w)
    # Coefficient of ln|alpha - w_j|: jump of the local linear extension at alpha.
    ext = np.concatenate([[0.0], g2[:-1] + slopes * (alpha - w[:-1]), [0.0]])
    coeff = ext[1:] - ext[:-1]
    d = np.abs(alpha - w)
    hit = d == 0
    if np.any(hit & (np.abs(coeff) > 0)):
        raise PoleError(f"g^2 is discontinuous at {alpha}")
    logs = np.where(hit, 0.0, np.log(np.where(hit, 1.0, d)))
    return strength * (math.fsum(coeff * logs) - math.fsum(slopes * np.diff(w)))


@dataclass(frozen=True)
class BoundState:
    frequency: float
    weight: float


@dataclass
class ResolventModel:
    """Level shift Delta, width 2 pi g^2 and spectral density rho for the
    continuum coupling ``coupling`` and bare frequency ``omega``."""

    coupling: CouplingFunction
    omega: float

    def __post_init__(self):
        if not self.omega > 0:
            raise DomainError("omega must be > 0")

    @property
    def closed_form(self) -> bool:
        c = self.coupling
        return c.family != "power-exponential" or float(c.exponent).is_integer()

    def level_shift(self, alpha):
        """PV int g^2(w)/(alpha - w) dw, elementwise."""
        a = np.asarray(alpha, dtype=float)
        out = np.array([self._shift_scalar(float(x)) for x in a.reshape(-1)]).reshape(a.shape)
        return out if out.ndim else float(out)

    def _shift_scalar(self, alpha):
        c = self.coupling
        if c.strength == 0:
            return 0.0
        if c.family == "power-exponential":
            if float(c.exponent).is_integer():
                return _power_exp_shift(alpha, c.strength, int(c.exponent), c.cutoff)
            return self.level_shift_numeric(alpha)
        if c.family == "window":
            if alpha in (c.lower, c.upper):
                raise PoleError(f"g^2 is discontinuous at {alpha}")
            return c.strength * math.log(abs((alpha - c.lower) / (alpha - c.upper)))
        return _table_shift(alpha, c.strength, c.table)

    def level_shift_numeric(self, alpha: float) -> float:
        """Same integral by adaptive quadrature (subtraction PV for alpha > 0)."""
        c = self.coupling
        scale = c.cutoff if c.family == "power-exponential" else 1.0
        end = math.inf if c.family == "power-exponential" else c.support_end()
        lo = 0.0 if c.family == "power-exponential" else (c.lower if c.family == "window" else c.table[0][0])
        if alpha in c.breakpoints:
            h = 1e-9 * max(1.0, abs(alpha))
            if not math.isclose(float(c(alpha - h)), float(c(alpha + h)), rel_tol=1e-6, abs_tol=1e-7 * float(c(c.peak))):
                raise PoleError(f"g^2 is discontinuous at {alpha}")
        if not lo < alpha < end:
            return integrate(lambda w: c(w) / (alpha - w), lo, end, PV_TOL, abs_tol=1e-300,
                             points=c.breakpoints, scale=scale, budget=50_000).value
        return principal_value(c, alpha, lo, end, PV_TOL, scale=scale, budget=50_000,
                              points=c.breakpoints).value

    def _fast_shift(self, w):
        """Vectorized shift for density evaluation; a cubic spline of numeric
        values when no closed form exists."""
        c = self.coupling
        if c.family == "power-exponential" and float(c.exponent).is_integer():
            return self._vector_power_exp(w)
        if self.closed_form:
            return np.vectorize(self._shift_scalar, otypes=[float])(w)
        return self._spline(w)

    def _vector_power_exp(self, w):
        c = self.coupling
        n, cut, lam = int(c.exponent), c.cutoff, c.strength
        w = np.asarray(w, dtype=float)
        x = w / cut
        far = np.abs(x) > _ASYMPTOTIC_X
        mid = ~far & (w != 0)
        out = np.full_like(w, -lam * math.gamma(n) * cut**n)
        xm, wm = x[mid], w[mid]
        poly = sum(wm**k * math.gamma(n - k) * cut ** (n - k) for k in range(n))
        out[mid] = lam * (wm**n * np.exp(-xm) * expi(xm) - poly)
        out[far] = lam * w[far] ** n * _scaled_ei_tail(x[far], n)
        return out

    @cached_property
    def _spline(self):
        end = self.coupling.support_end()
        grid = np.unique(np.concatenate([
            -np.geomspace(end, 1e-8 * end, 200),
            np.geomspace(1e-8 * end, end, _SPLINE_POINTS),
        ]))
        vals = np.array([self.level_shift_numeric(float(x)) for x in grid])
        return CubicSpline(grid, vals)

    def damping(self, w):
        """2 pi g^2(w)."""
        return 2.0 * math.pi * self.coupling(w)

    def _detuning(self, w):
        return np.asarray(w, dtype=float) - self.omega - self._fast_shift(w)

    def spectral_density(self, w):
        """g^2/[(w - Omega - Delta)^2 + pi^2 g^4]; zero for w <= 0."""
        w = np.asarray(w, dtype=float)
        g2 = self.coupling(w)
        pos = g2 > 0
        out = np.zeros_like(w)
        if np.any(pos):
            wp, gp = w[pos], g2[pos]
            out[pos] = gp / (self._detuning(wp) ** 2 + (math.pi * gp) ** 2)
        return out if out.ndim else float(out)

    def spectral_density_from_width(self, w):
        """(1/2 pi) gamma(w)/[(w - Omega - Delta)^2 + gamma(w)^2/4]."""
        w = np.asarray(w, dtype=float)
        gam = self.damping(w)
        pos = gam > 0
        out = np.zeros_like(w)
        if np.any(pos):
            gp = gam[pos]
            out[pos] = gp / (2.0 * math.pi) / (self._detuning(w[pos]) ** 2 + 0.25 * gp**2)
        return out if out.ndim else float(out)

    @cached_property
    def bound_state(self) -> BoundState | None:
        """Discrete pole below the continuum, if the coupling is strong enough."""
        c = self.coupling
        lo = 0.0 if c.family == "power-exponential" else min(c.breakpoints)
        edge = lo - 1e-12 * max(1.0, self.omega)
        if c.strength == 0 or edge - self.omega - self.level_shift(edge) <= 0:
            return None

        def f(x):
            return x - self.omega - self.level_shift(x)

        left = edge - 1.0
        while f(left) > 0:
            left = edge - 2.0 * (edge - left)
        root = brentq(f, left, edge, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        end = math.inf if c.family == "power-exponential" else c.support_end()
        scale = c.cutoff if c.family == "power-exponential" else 1.0
        slope = integrate(lambda w: c(w) / (root - w) ** 2, 0.0, end, 1e-13, abs_tol=1e-300,
                          points=c.breakpoints, scale=scale).value
        return BoundState(root, 1.0 / (1.0 + slope))

    @property
    def shifted_frequency(self) -> float:
        return self.omega + self.level_shift(self.omega)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Points where rho changes fast: kinks of g^2 and the resonance flanks."""
        peak = self.shifted_frequency
        width = max(float(self.damping(self.omega)), 1e-12 * self.omega)
        pts = set(self.coupling.breakpoints)
        for k in (0, 1, 2, 4, 8, 16, 32):
            for s in (-1, 1):
                x = peak + s * k * 0.5 * width
                if x > 0:
                    pts.add(x)
        end = self.support_end
        return tuple(sorted(p for p in pts if 0 < p < end))

    @property
    def support_end(self) -> float:
        c = self.coupling
        return c.support_end(_RHO_DECADES) if c.family == "power-exponential" else c.support_end()

    def normalization(self, tol: float = 1e-12) -> float:
        """int rho dw plus any bound-state weight; 1 for a consistent model."""
        total = integrate(self.spectral_density, 0.0, self.support_end, tol, abs_tol=1e-15,
                          points=self.breakpoints, budget=100_000).value
        bs = self.bound_state
        return total + (bs.weight if bs else 0.0)


def survival_amplitude_continuum(model: ResolventModel, times, tol: float = 1e-10, *, budget: int = 4_000_000) -> AmplitudeSeries:
    """A(t) = int rho(w) exp(-i w t) dw, plus the bound-state pole if present."""
    t = np.asarray(times, dtype=float).reshape(-1)
    if np.any(t < 0):
        raise DomainError("times must be >= 0")
    if model.coupling.strength == 0:
        return AmplitudeSeries(t, np.exp(-1j * model.omega * t), np.ones(t.size))
    support = (0.0, model.support_end)
    pts = model.breakpoints
    values = np.empty(t.size, dtype=complex)
    for i, ti in enumerate(t):
        values[i] = fourier_integral(model.spectral_density, float(ti), support, tol,
                                     points=pts, budget=budget).value
    bs = model.bound_state
    if bs is not None:
        values += bs.weight * np.exp(-1j * bs.frequency * t)
    return AmplitudeSeries(t, values)


def threshold_amplitude(model: ResolventModel, t: float, cutoff: float | None = None) -> complex:
    """Contribution of the w -> 0 edge of rho at large t (no resonance)."""
    if cutoff is None:
        cutoff = 0.5 * model.shifted_frequency
    return fourier_integral_threshold(model.spectral_density, t, cutoff).value


@dataclass(frozen=True)
class TailFit:
    exponent: float
    prefactor: float
    r2: float
    window: tuple[float, float]


def khalfin_tail_fit(series: AmplitudeSeries, window: tuple[float, float]) -> TailFit:
    """Fit |A| ~ prefactor * t**-exponent on ``window``; reject if R^2 < 0.99."""
    t1, t2 = window
    if not 0 < t1 < t2:
        raise DomainError("window must satisfy 0 < t1 < t2")
    sel = (series.times >= t1) & (series.times <= t2)
    t, mod = series.times[sel], series.modulus[sel]
    fit = power_law_fit(t, mod)
    result = TailFit(-fit.slope, math.exp(fit.intercept), fit.r2, (float(t1), float(t2)))
    if fit.r2 < MIN_R2:
        raise FitRejectedError(
            f"tail fit R^2 = {fit.r2:.4f} < {MIN_R2}; the window is not in a power-law regime", result
        )
    return result
