"""Exact diagonalization of the one-quantum (arrowhead) Hamiltonian.

The matrix has ``omega`` and the bath frequencies on the diagonal and the
couplings in the first row and column. Its eigenvalues are the roots of the
secular function ``S(a) = a - omega - sum_k g_k**2/(a - w_k)``, one in each
gap between consecutive bath frequencies plus one below and one above.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, ConvergenceError, PoleError
from .model import ModelConfig

# Couplings below this fraction of the frequency scale are deflated: the mode
# is treated as an exact, decoupled eigenvector.
_DEFLATE = 1e-14
_BISECT_WIDTH = 1e-2
_BLOCK_ELEMENTS = 1 << 16
_MAX_ITER = 200


@dataclass(frozen=True)
class SpectralDecomposition:
    alphas: np.ndarray
    weights: np.ndarray
    overlaps: np.ndarray

    @property
    def amplitudes(self) -> np.ndarray:
        """System components of the eigenvectors, chosen >= 0."""
        return np.sqrt(self.weights)

    @property
    def eigenvectors(self) -> np.ndarray:
        """Rows are eigenvectors in the basis (system, mode 1, ..., mode N)."""
        return np.column_stack([self.amplitudes, self.overlaps])

    def __len__(self):
        return self.alphas.size


def secular_function(alpha, config: ModelConfig):
    a = np.asarray(alpha, dtype=float)
    w = config.bath.frequencies
    g2 = config.bath.couplings**2
    diff = a[..., None] - w
    if np.any((diff == 0) & (g2 != 0)):
        raise PoleError("secular function evaluated at a bath frequency")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(g2 != 0, g2 / np.where(diff == 0, 1.0, diff), 0.0)
    out = a - config.omega - terms.sum(axis=-1)
    return out if out.ndim else float(out)


def _split(config: ModelConfig):
    w = config.bath.frequencies
    g = config.bath.couplings
    scale = max(config.omega, float(w[-1]))
    active = np.abs(g) > _DEFLATE * scale
    return w, g, active, scale


def _shifted_secular(origin, delta, poles, z2, omega, derivative=True):
    """S at origin + delta, with the pole differences formed before adding delta.

    Rows are processed in blocks so the (roots x poles) temporaries stay small.
    """
    m = origin.size
    s = np.empty(m)
    ds = np.empty(m) if derivative else None
    step = max(1, _BLOCK_ELEMENTS // max(1, poles.size))
    for i in range(0, m, step):
        sl = slice(i, i + step)
        inv = 1.0 / ((origin[sl, None] - poles[None, :]) + delta[sl, None])
        t = z2 * inv
        s[sl] = (origin[sl] - omega) + delta[sl] - t.sum(axis=1)
        if derivative:
            ds[sl] = 1.0 + (t * inv).sum(axis=1)
    return s, ds


def _active_roots(poles, z, omega):
    """Roots of the secular function for strictly increasing ``poles``.

    Returns (origin, delta) with root = origin + delta and origin the nearest
    pole, so that differences to that pole are exact.
    """
    m = poles.size
    z2 = z**2
    norm = float(np.sqrt(z2.sum()))
    lo_bound = min(omega, poles[0]) - 2.0 * norm - 1e-3 * max(1.0, abs(omega))
    hi_bound = max(omega, poles[-1]) + 2.0 * norm + 1e-3 * max(1.0, abs(omega))

    origin = np.empty(m + 1)
    dlo = np.empty(m + 1)
    dhi = np.empty(m + 1)
    # Outer intervals.
    origin[0], dlo[0], dhi[0] = poles[0], lo_bound - poles[0], 0.0
    origin[m], dlo[m], dhi[m] = poles[-1], 0.0, hi_bound - poles[-1]
    if m > 1:
        left, right = poles[:-1], poles[1:]
        half = 0.5 * (right - left)
        s_mid, _ = _shifted_secular(left, half, poles, z2, omega, derivative=False)
        use_left = s_mid > 0
        origin[1:m] = np.where(use_left, left, right)
        dlo[1:m] = np.where(use_left, 0.0, -half)
        dhi[1:m] = np.where(use_left, half, 0.0)

    width0 = dhi - dlo
    # Bisection down to a relative width, then safeguarded Newton.
    for _ in range(_MAX_ITER):
        if np.all(dhi - dlo <= _BISECT_WIDTH * width0):
            break
        mid = 0.5 * (dlo + dhi)
        s, _ = _shifted_secular(origin, mid, poles, z2, omega, derivative=False)
        neg = s < 0
        dlo = np.where(neg, mid, dlo)
        dhi = np.where(neg, dhi, mid)

    delta = 0.5 * (dlo + dhi)
    todo = np.arange(m + 1)
    for _ in range(_MAX_ITER):
        o, d0, lo, hi = origin[todo], delta[todo], dlo[todo], dhi[todo]
        s, ds = _shifted_secular(o, d0, poles, z2, omega)
        lo = np.where(s < 0, d0, lo)
        hi = np.where(s > 0, d0, hi)
        # Newton on delta*S(delta): the nearest-pole term becomes a constant,
        # so the iteration is quadratic even for roots hugging that pole.
        trial = d0 - d0 * s / (s + d0 * ds)
        outside = (trial <= lo) | (trial >= hi)
        trial = np.where(outside, 0.5 * (lo + hi), trial)
        conv = (s == 0) | (np.abs(trial - d0) <= 4 * np.finfo(float).eps * np.abs(d0)) | (
            np.nextafter(lo, hi) >= hi
        )
        delta[todo] = np.where(conv, d0, trial)
        dlo[todo], dhi[todo] = lo, hi
        todo = todo[~conv]
        if todo.size == 0:
            break
    else:
        raise ConvergenceError("secular root refinement did not converge")
    return origin, delta


def _decompose(config: ModelConfig):
    w, g, active, _ = _split(config)
    n = w.size
    poles, z = w[active], g[active]
    idx = np.flatnonzero(active)

    if poles.size == 0:
        alphas = np.array([config.omega])
        weights = np.array([1.0])
        rows = np.zeros((1, n))
    else:
        origin, delta = _active_roots(poles, z, config.omega)
        alphas = origin + delta
        d = (origin[:, None] - poles[None, :]) + delta[:, None]
        ratio = z[None, :] / d
        weights = 1.0 / (1.0 + np.sum(ratio**2, axis=1))
        phi = np.sqrt(weights)
        rows = np.zeros((alphas.size, n))
        rows[:, idx] = ratio * phi[:, None]

    dead = np.flatnonzero(~active)
    if dead.size:
        extra = np.zeros((dead.size, n))
        extra[np.arange(dead.size), dead] = 1.0
        alphas = np.concatenate([alphas, w[dead]])
        weights = np.concatenate([weights, np.zeros(dead.size)])
        rows = np.vstack([rows, extra])

    order = np.argsort(alphas, kind="stable")
    return alphas[order], weights[order], rows[order]


def eigenvalues(config: ModelConfig) -> np.ndarray:
    return _decompose(config)[0]


def weights(config: ModelConfig, alphas=None) -> np.ndarray:
    """System weights |Phi_nu|^2 = 1/(1 + sum_k (g_k/(alpha_nu - w_k))**2).

    With ``alphas`` omitted the roots are computed first, using differences
    taken relative to the nearest pole (more accurate near a pole).
    """
    if alphas is None:
        return _decompose(config)[1]
    a = np.asarray(alphas, dtype=float)
    w, g, active, _ = _split(config)
    d = a[:, None] - w[active][None, :]
    if np.any(d == 0):
        raise PoleError("eigenvalue coincides with a coupled bath frequency")
    wt = 1.0 / (1.0 + np.sum((g[active][None, :] / d) ** 2, axis=1))
    # Decoupled modes carry no system weight.
    hit = np.isclose(a[:, None], w[~active][None, :], rtol=0, atol=0).any(axis=1)
    return np.where(hit, 0.0, wt)


def overlaps(config: ModelConfig, alphas=None, wts=None) -> np.ndarray:
    """Bath components c[nu, k] = g_k/(alpha_nu - w_k) * Phi_nu."""
    if alphas is None:
        return _decompose(config)[2]
    a = np.asarray(alphas, dtype=float)
    if wts is None:
        wts = weights(config, a)
    w, g = config.bath.frequencies, config.bath.couplings
    with np.errstate(divide="ignore", invalid="ignore"):
        c = g[None, :] / (a[:, None] - w[None, :]) * np.sqrt(wts)[:, None]
    return np.where(np.isfinite(c), c, 0.0)


def decompose(config: ModelConfig) -> SpectralDecomposition:
    """Eigenvalues, system weights and bath overlaps via the secular equation."""
    alphas, wts, rows = _decompose(config)
    for arr in (alphas, wts, rows):
        arr.setflags(write=False)
    return SpectralDecomposition(alphas, wts, rows)


def arrowhead_matrix(config: ModelConfig) -> np.ndarray:
    n = len(config.bath)
    h = np.zeros((n + 1, n + 1))
    h[0, 0] = config.omega
    h[np.arange(1, n + 1), np.arange(1, n + 1)] = config.bath.frequencies
    h[0, 1:] = config.bath.couplings
    h[1:, 0] = config.bath.couplings
    return h


def jacobi_eigh(a, tol=1e-12, max_sweeps=60):
    """Cyclic Jacobi diagonalization of a symmetric matrix.

    Rotations on disjoint index pairs commute, so each round of a
    round-robin tournament applies n/2 of them at once. Iterates until the
    off-diagonal Frobenius norm is at most ``tol`` times the full norm.
    Returns (eigenvalues, eigenvectors as columns), unsorted.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return a.diagonal().copy(), v
    m = n + (n % 2)
    players = list(range(m))
    total = np.linalg.norm(a)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(a.diagonal()))
        if off <= tol * total:
            return a.diagonal().copy(), v
        for _ in range(m - 1):
            top = np.array(players[: m // 2])
            bot = np.array(players[m // 2:][::-1])
            keep = (top < n) & (bot < n)
            p = np.minimum(top, bot)[keep]
            q = np.maximum(top, bot)[keep]
            apq = a[p, q]
            rot = apq != 0
            p, q, apq = p[rot], q[rot], apq[rot]
            if p.size:
                with np.errstate(over="ignore", divide="ignore"):
                    theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                    sgn = np.where(theta >= 0, 1.0, -1.0)
                    t = sgn / (np.abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.sqrt(t**2 + 1.0)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = ap * c - aq * s
                a[:, q] = ap * s + aq * c
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c[:, None] * ap - s[:, None] * aq
                a[q, :] = s[:, None] * ap + c[:, None] * aq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = vp * c - vq * s
                v[:, q] = vp * s + vq * c
            players = [players[0], players[-1], *players[1:-1]]
    raise ConvergenceError("Jacobi iteration did not converge")


def dense_oracle(config: ModelConfig, max_modes: int = 2000, tol: float = 1e-14) -> SpectralDecomposition:
    """Same decomposition by Jacobi rotations on the full matrix.

    Independent of the secular-equation route; meant for cross-checks.
    Eigenvector components are accurate to about ``tol`` in absolute terms,
    so very small weights carry a large relative error.
    """
    if len(config.bath) > max_modes:
        raise CapabilityError(f"dense oracle is limited to {max_modes} modes")
    vals, vecs = jacobi_eigh(arrowhead_matrix(config), tol=tol)
    order = np.argsort(vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    sign = np.where(vecs[0] < 0, -1.0, 1.0)
    vecs = vecs * sign
    return SpectralDecomposition(vals, vecs[0] ** 2, vecs[1:].T.copy())
