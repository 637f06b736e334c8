"""Mean occupation of the system oscillator: relaxation, equilibrium value,
low-temperature power law and the q-deformed Bose occupation."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import bath_populations, survival_amplitude
from .errors import DomainError, RegimeWarning
from .model import ThermalState, bose_occupation
from .perturbation import van_kampen_trajectory
from .quadrature import fourier_integral, integrate, power_law_fit
from .resolvent import ResolventModel
from .spectrum import SpectralDecomposition

MIN_SCAN_R2 = 0.995
# Bose and Boltzmann weights differ by less than 1% above this beta*Omega.
LOW_T_BETA_OMEGA = 5.0
# Integrands carry exp(-beta w); beyond this many thermal energies they are negligible.
_THERMAL_CUTOFF = 60.0


@dataclass(frozen=True)
class PopulationTrajectory:
    times: np.ndarray
    values: np.ndarray
    asymptote: float
    beta: float
    source: str


@dataclass(frozen=True)
class ScalingFit:
    temperatures: np.ndarray
    populations: np.ndarray
    exponent: float
    intercept: float
    r2: float

    @property
    def q(self) -> float:
        """(n+2)/(n+1) with n + 1 the fitted exponent."""
        return (self.exponent + 1.0) / self.exponent

    @property
    def energy_exponent(self) -> float:
        return self.exponent

    @property
    def heat_capacity_exponent(self) -> float:
        return self.exponent - 1.0


def exact_trajectory(
    spec: SpectralDecomposition, thermal: ThermalState, n0: float, times, beta: float = math.nan
) -> PopulationTrajectory:
    """<N(t)> = P_00(t) n0 + sum_k P_0k(t) <N_k(0)>.

    The asymptote is the long-time average, which for a nondegenerate
    spectrum is n0 sum |Phi|^4 + sum_k <N_k> sum_nu |Phi_nu|^2 c_nu,k^2.
    """
    if n0 < 0:
        raise DomainError("n0 must be >= 0")
    occ = np.asarray(thermal.occupations, dtype=float)
    if occ.shape != (spec.overlaps.shape[1],):
        raise DomainError("thermal occupations do not match the bath size")
    surv = survival_amplitude(spec, times)
    values = surv.probability * n0 + bath_populations(spec, surv.times, occ)
    w = spec.weights
    asymptote = n0 * float(np.sum(w**2)) + float((w @ spec.overlaps**2) @ occ)
    return PopulationTrajectory(surv.times, values, asymptote, beta, "exact")


def van_kampen_population(gamma: float, beta: float, omega: float, n0: float, times) -> PopulationTrajectory:
    t = np.asarray(times, dtype=float).reshape(-1)
    values = van_kampen_trajectory(gamma, beta, omega, n0, t)
    return PopulationTrajectory(t, values, bose_occupation(beta, omega), beta, "van-kampen")


def _no_bound_state(model):
    if model.bound_state is not None:
        raise DomainError(
            "a bound state below the continuum traps population; the thermal asymptote does not apply"
        )


def _thermal_points(model, beta, end):
    pts = [p for p in model.breakpoints if p < end]
    # Resolve the w ~ 1/beta region where the threshold part lives.
    pts += [x for x in np.geomspace(1e-6, 10.0, 8) / beta if x < end]
    return sorted(set(pts))


def asymptotic_population(model: ResolventModel, beta: float, tol: float = 1e-11) -> float:
    """int_0^inf rho(w)/(exp(beta w) - 1) dw."""
    if not beta > 0:
        raise DomainError("beta must be > 0")
    _no_bound_state(model)
    c = model.coupling
    if c.family == "power-exponential" and c.exponent < 1:
        warnings.warn("rho ~ w^n with n < 1 meets the Bose pole at w = 0", RegimeWarning, stacklevel=2)
    end = min(model.support_end, _THERMAL_CUTOFF / beta + model.shifted_frequency)

    def f(w):
        w = np.asarray(w, dtype=float)
        x = beta * np.maximum(w, 1e-300)
        with np.errstate(over="ignore"):
            return model.spectral_density(w) / np.expm1(x)

    return integrate(f, 0.0, end, tol, abs_tol=1e-300, points=_thermal_points(model, beta, end),
                     budget=100_000).value


def low_temp_population(model: ResolventModel, beta: float, tol: float = 1e-11) -> float:
    """int_0^inf rho(w) exp(-beta w) dw, the Boltzmann form of the asymptote."""
    if not beta > 0:
        raise DomainError("beta must be > 0")
    _no_bound_state(model)
    end = min(model.support_end, _THERMAL_CUTOFF / beta + model.shifted_frequency)

    def f(w):
        return model.spectral_density(w) * np.exp(-beta * np.asarray(w, dtype=float))

    return integrate(f, 0.0, end, tol, abs_tol=1e-300, points=_thermal_points(model, beta, end),
                     budget=100_000).value


def laplace_survival(model: ResolventModel, beta: float, tol: float = 1e-12) -> float:
    """The survival-amplitude Fourier integral evaluated at t = -i beta."""
    if not beta > 0:
        raise DomainError("beta must be > 0")
    _no_bound_state(model)
    res = fourier_integral(model.spectral_density, complex(0.0, -beta), (0.0, model.support_end), tol,
                           points=model.breakpoints)
    return float(np.real(res.value))


def temperature_scan(model: ResolventModel, betas, *, threads: int = 1) -> ScalingFit:
    """Fit <N(inf)> ~ T**p over the given inverse temperatures."""
    b = np.asarray(betas, dtype=float).reshape(-1)
    if b.size < 4:
        raise DomainError("temperature_scan needs at least 4 temperatures")
    if np.any(b * model.omega < LOW_T_BETA_OMEGA):
        warnings.warn(
            f"scan includes beta*Omega < {LOW_T_BETA_OMEGA}; outside the low-temperature regime",
            RegimeWarning,
            stacklevel=2,
        )
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            pops = np.array(list(pool.map(lambda x: asymptotic_population(model, float(x)), b)))
    else:
        pops = np.array([asymptotic_population(model, float(x)) for x in b])
    temps = 1.0 / b
    order = np.argsort(temps)
    temps, pops = temps[order], pops[order]
    fit = power_law_fit(temps, pops)
    if fit.r2 < MIN_SCAN_R2:
        warnings.warn(
            f"temperature scan R^2 = {fit.r2:.4f} < {MIN_SCAN_R2}; not in the low-temperature power law",
            RegimeWarning,
            stacklevel=2,
        )
    return ScalingFit(temps, pops, fit.slope, fit.intercept, fit.r2)


def tsallis_occupation(q: float, beta: float, omega):
    """1/([1 + (q-1) beta w]**(1/(q-1)) - 1) for 1 < q < 2."""
    if not 1.0 < q < 2.0:
        raise DomainError("q must satisfy 1 < q < 2")
    x = beta * np.asarray(omega, dtype=float)
    if np.any(x <= 0):
        raise DomainError("tsallis_occupation needs beta*omega > 0")
    with np.errstate(over="ignore"):
        out = 1.0 / np.expm1(np.log1p((q - 1.0) * x) / (q - 1.0))
    return out if out.ndim else float(out)
