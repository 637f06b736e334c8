"""Numerical kernels: adaptive Gauss-Kronrod quadrature, principal values,
oscillatory Fourier integrals and log-log power-law fits.

All integrands are expected to be vectorized: they receive a numpy array of
abscissae and must return an array of the same shape.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, ResolutionError

# Gauss-Kronrod 7/15 pair (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes.
GAUSS_WEIGHTS[[1, 3, 5]] = _WG[:3]
GAUSS_WEIGHTS[[9, 11, 13]] = _WG[2::-1]
GAUSS_WEIGHTS[7] = _WG[3]

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureResult:
    value: float | complex
    error_estimate: float
    panels_used: int
    converged: bool


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    intercept: float
    r2: float


def _gk15(f, lo, hi):
    """Apply the 15-point rule to panels ``[lo[i], hi[i]]`` at once.

    Returns (kronrod, error, abs_integral) arrays, one entry per panel.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    half = 0.5 * (hi - lo)
    center = 0.5 * (hi + lo)
    x = center[:, None] + half[:, None] * NODES[None, :]
    fx = np.broadcast_to(np.asarray(f(x)), x.shape)
    kron = (fx @ KRONROD_WEIGHTS) * half
    gauss = (fx @ GAUSS_WEIGHTS) * half
    absf = np.abs(fx)
    resabs = (absf @ KRONROD_WEIGHTS) * np.abs(half)
    mean = kron / np.where(half == 0, 1.0, half) / 2.0
    resasc = (np.abs(fx - mean[:, None]) @ KRONROD_WEIGHTS) * np.abs(half)
    err = np.abs(kron - gauss)
    with np.errstate(divide="ignore", invalid="ignore"):
        scaled = resasc * np.minimum(1.0, (200.0 * err / resasc) ** 1.5)
    err = np.where(resasc > 0, scaled, err)
    floor = 50.0 * _EPS * resabs
    err = np.where(resabs > np.finfo(float).tiny / (50 * _EPS), np.maximum(err, floor), err)
    return kron, err, resabs


def _map_infinite(f, a, scale):
    """Map [a, inf) onto [0, 1) with x = a + scale*u/(1-u)."""

    def g(u):
        one_minus = 1.0 - u
        x = a + scale * u / one_minus
        return f(x) * (scale / one_minus**2)

    return g


def _fsum(values):
    values = np.asarray(values)
    if np.iscomplexobj(values):
        return complex(math.fsum(values.real), math.fsum(values.imag))
    return math.fsum(values)


def integrate(
    f: Callable,
    a: float,
    b: float,
    tol: float = 1e-10,
    *,
    abs_tol: float = 0.0,
    points: Sequence[float] = (),
    scale: float = 1.0,
    budget: int = 10_000,
) -> QuadratureResult:
    """Adaptive Gauss-Kronrod integral of ``f`` over ``[a, b]``.

    ``b`` may be ``inf``; the tail beyond the last breakpoint is mapped onto a
    finite interval with ``x = x0 + scale*u/(1-u)``. ``points`` are interior
    breakpoints (kinks, peaks) where the initial partition is split.
    Stops when the summed error estimate is below ``max(tol*|I|, abs_tol)``
    or when ``budget`` panels have been used.
    """
    if not a < b:
        if a == b:
            return QuadratureResult(0.0, 0.0, 0, True)
        raise DomainError(f"integration limits must satisfy a < b (got {a}, {b})")
    if math.isinf(a):
        raise DomainError("lower limit must be finite")

    edges = sorted({float(a), *[float(p) for p in points if a < p < b]})
    pieces = []
    for lo, hi in zip(edges, edges[1:]):
        pieces.append((f, lo, hi))
    if math.isinf(b):
        pieces.append((_map_infinite(f, edges[-1], scale), 0.0, 1.0))
    else:
        pieces.append((f, edges[-1], float(b)))

    heap = []
    counter = 0
    values = {}
    for idx, (g, lo, hi) in enumerate(pieces):
        k, e, _ = _gk15(g, [lo], [hi])
        values[counter] = k[0]
        heapq.heappush(heap, (-e[0], counter, idx, lo, hi))
        counter += 1
    panels = len(pieces)

    def total():
        return _fsum(list(values.values())), math.fsum(-item[0] for item in heap)

    value, err = total()
    steps = 0
    while panels < budget:
        if err <= max(tol * abs(value), abs_tol):
            # Running sums drift; confirm with exact sums before stopping.
            value, err = total()
            if err <= max(tol * abs(value), abs_tol):
                break
        neg_e, key, idx, lo, hi = heapq.heappop(heap)
        old = values.pop(key)
        g = pieces[idx][0]
        mid = 0.5 * (lo + hi)
        k, e, _ = _gk15(g, [lo, mid], [mid, hi])
        for j, (l2, h2) in enumerate(((lo, mid), (mid, hi))):
            values[counter] = k[j]
            heapq.heappush(heap, (-e[j], counter, idx, l2, h2))
            counter += 1
        panels += 1
        steps += 1
        value = value - old + k[0] + k[1]
        err = err + neg_e + e[0] + e[1]
        if steps % 64 == 0:
            value, err = total()

    value, err = total()
    converged = err <= max(tol * abs(value), abs_tol)
    return QuadratureResult(value, err, panels, bool(converged))


def principal_value(
    f: Callable,
    pole: float,
    a: float,
    b: float,
    tol: float = 1e-12,
    *,
    scale: float = 1.0,
    budget: int = 10_000,
    points: Sequence[float] = (),
) -> QuadratureResult:
    """PV of the integral of ``f(x)/(pole - x)`` over ``[a, b]``.

    Uses singularity subtraction on the interval symmetric about the pole,
    ``[f(x) - f(pole)]/(pole - x)`` plus the analytic log term, and an ordinary
    integral over whatever lies outside the symmetric window. ``b`` may be inf.
    ``points`` marks kinks or jumps of ``f``; the pole must not be one of them.
    """
    if not a < pole < b:
        raise DomainError(f"pole {pole} must lie strictly inside ({a}, {b})")
    fp = float(np.broadcast_to(f(np.array([pole], dtype=float)), (1,))[0])
    half = min(pole - a, b - pole)
    lo, hi = pole - half, pole + half

    def subtracted(x):
        d = pole - x
        return (f(x) - fp) / d

    # Symmetric window: log term vanishes.
    core = integrate(
        subtracted, lo, hi, tol, abs_tol=tol * max(abs(fp), 1e-300), points=(pole, *points), budget=budget
    )
    parts = [core]
    if lo > a:
        parts.append(integrate(lambda x: f(x) / (pole - x), a, lo, tol, points=points, budget=budget))
    if hi < b:
        parts.append(
            integrate(lambda x: f(x) / (pole - x), hi, b, tol, scale=scale, points=points, budget=budget)
        )
    value = math.fsum(p.value for p in parts)
    err = math.fsum(p.error_estimate for p in parts)
    return QuadratureResult(
        value, err, sum(p.panels_used for p in parts), all(p.converged for p in parts)
    )


def principal_value_excision(
    f: Callable,
    pole: float,
    a: float,
    b: float,
    *,
    eps0: float | None = None,
    levels: int = 4,
    tol: float = 1e-13,
    scale: float = 1.0,
) -> float:
    """PV by symmetric excision ``|x - pole| > eps`` and Richardson
    extrapolation ``eps -> 0``.

    The excision error is an odd series in eps, so successive halvings remove
    the eps, eps**3, eps**5, ... terms. Kept independent of
    :func:`principal_value` so the two can cross-check each other.
    """
    if not a < pole < b:
        raise DomainError(f"pole {pole} must lie strictly inside ({a}, {b})")
    if eps0 is None:
        eps0 = 0.1 * min(pole - a, b - pole if math.isfinite(b) else pole - a)

    def g(x):
        return f(x) / (pole - x)

    def excised(eps):
        left = integrate(g, a, pole - eps, tol, budget=50_000).value
        right = integrate(g, pole + eps, b, tol, scale=scale, budget=50_000).value
        return left + right

    row = [excised(eps0 / 2**k) for k in range(levels)]
    power = 1
    while len(row) > 1:
        factor = 2.0**power
        row = [(factor * row[i + 1] - row[i]) / (factor - 1.0) for i in range(len(row) - 1)]
        power += 2
    return float(row[0])


def _panel_edges(a, b, width, points, grade_levels):
    edges = sorted({float(a), float(b), *[float(p) for p in points if a < p < b]})
    out = [np.array([edges[0]])]
    for lo, hi in zip(edges, edges[1:]):
        n = max(1, math.ceil((hi - lo) / width))
        out.append(np.linspace(lo, hi, n + 1)[1:])
    grid = np.concatenate(out)
    if grade_levels and len(grid) > 1:
        # Geometric grading towards the lower endpoint resolves x**n
        # thresholds with non-integer n.
        first = grid[1] - grid[0]
        graded = grid[0] + first * 2.0 ** -np.arange(grade_levels, 0, -1)
        grid = np.concatenate([grid[:1], graded, grid[1:]])
    return grid


def fourier_integral(
    f: Callable,
    t: float | complex,
    support: tuple[float, float],
    tol: float = 1e-10,
    *,
    points: Sequence[float] = (),
    budget: int = 2_000_000,
    grade_levels: int = 30,
    chunk: int = 32_768,
) -> QuadratureResult:
    """Integral of ``f(w) * exp(-1j*w*t)`` over ``support``.

    Panels are at most ``pi/(4*max(|Re t|, 1))`` wide, so every panel holds at
    most an eighth of an oscillation; panels whose error estimate exceeds
    ``tol`` times the integral of ``|f|`` (pro rata by width) are bisected.
    A complex ``t = -1j*beta`` turns the kernel into ``exp(-beta*w)``.

    Raises :class:`ResolutionError` if the panel count would exceed
    ``budget``; the error carries the largest resolvable ``t``.
    """
    a, b = map(float, support)
    if not (math.isfinite(a) and math.isfinite(b) and a < b):
        raise DomainError("fourier_integral needs a finite support a < b")
    t = complex(t)
    t_osc = max(abs(t.real), 1.0)
    width = math.pi / (4.0 * t_osc)
    needed = (b - a) / width
    if needed > budget:
        t_max = budget * math.pi / (4.0 * (b - a))
        raise ResolutionError(
            f"t={t.real:g} needs ~{needed:.3g} panels (budget {budget}); "
            f"largest resolvable t is {t_max:.6g}",
            t_max,
        )
    real_kernel = t.real == 0.0

    def integrand(w):
        if real_kernel:
            return f(w) * np.exp(t.imag * w)
        return f(w) * np.exp(-1j * t * w)

    grid = _panel_edges(a, b, width, points, grade_levels)
    lo, hi = grid[:-1], grid[1:]
    length = b - a
    sums = []
    errs = []
    abs_total = None
    panels = 0
    while lo.size:
        panels += lo.size
        if panels > budget:
            t_max = budget * math.pi / (4.0 * length)
            raise ResolutionError(
                f"adaptive refinement exhausted the panel budget ({budget})", t_max
            )
        kron = np.empty(lo.size, dtype=complex)
        err = np.empty(lo.size)
        resabs = np.empty(lo.size)
        for start in range(0, lo.size, chunk):
            sl = slice(start, start + chunk)
            kron[sl], err[sl], resabs[sl] = _gk15(integrand, lo[sl], hi[sl])
        if abs_total is None:
            abs_total = max(math.fsum(resabs), np.finfo(float).tiny)
        allowed = tol * abs_total * (hi - lo) / length
        # Panels already at the rounding floor cannot improve by bisection.
        bad = (err > allowed) & (err > 64.0 * _EPS * resabs)
        good = ~bad
        sums.append(_chunked_sum(kron[good], chunk))
        errs.append(math.fsum(err[good]))
        mid = 0.5 * (lo[bad] + hi[bad])
        if bad.any() and np.any(mid <= lo[bad]):
            # Cannot bisect further in floating point; accept as is.
            sums.append(_chunked_sum(kron[bad], chunk))
            errs.append(math.fsum(err[bad]))
            break
        lo, hi = np.concatenate([lo[bad], mid]), np.concatenate([mid, hi[bad]])
        order = np.argsort(lo, kind="stable")
        lo, hi = lo[order], hi[order]

    value = complex(math.fsum(s.real for s in sums), math.fsum(s.imag for s in sums))
    if real_kernel:
        value = value.real
    err = math.fsum(errs)
    return QuadratureResult(value, err, panels, True)


def _chunked_sum(values, chunk):
    """Fixed-shape pairwise sum so results do not depend on batching."""
    parts = [np.sum(values[i:i + chunk]) for i in range(0, values.size, chunk)]
    return complex(math.fsum(p.real for p in parts), math.fsum(p.imag for p in parts))


def smooth_step(x, lo, hi):
    """C-infinity step: 1 for x <= lo, 0 for x >= hi."""
    x = np.asarray(x, dtype=float)
    s = np.clip((x - lo) / (hi - lo), 0.0, 1.0)

    def psi(u):
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(u > 0, np.exp(-1.0 / np.where(u > 0, u, 1.0)), 0.0)

    up, down = psi(s), psi(1.0 - s)
    return down / (up + down)


def fourier_integral_threshold(
    f: Callable,
    t: float,
    cutoff: float,
    tol: float = 1e-12,
    *,
    budget: int = 2_000_000,
) -> QuadratureResult:
    """Low-frequency part of the Fourier integral at large ``t``.

    Integrates ``f(w) * chi(w) * exp(-1j*w*t)`` over ``[0, cutoff]`` in the
    scaled variable ``u = w*t``, where ``chi`` is a smooth step falling from 1
    at ``cutoff/2`` to 0 at ``cutoff``. For a spectrum that is smooth away from
    ``w = 0`` the discarded part decays faster than any power of ``t``, so
    this isolates the threshold (power-law) contribution.
    """
    if t <= 0:
        raise DomainError("threshold integral needs t > 0")

    def g(u):
        w = u / t
        return f(w) * smooth_step(w, 0.5 * cutoff, cutoff) / t

    res = fourier_integral(g, 1.0, (0.0, cutoff * t), tol, budget=budget)
    return res


def power_law_fit(x, y) -> PowerLawFit:
    """Least-squares line through ``(ln x, ln y)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("x and y must be 1-d arrays of equal length")
    if x.size < 4:
        raise DomainError("power_law_fit needs at least 4 points")
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(x * y)):
        raise DomainError("power_law_fit needs positive finite data")
    lx, ly = np.log(x), np.log(y)
    design = np.column_stack([lx, np.ones_like(lx)])
    (slope, intercept), *_ = np.linalg.lstsq(design, ly, rcond=None)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return PowerLawFit(float(slope), float(intercept), r2)
