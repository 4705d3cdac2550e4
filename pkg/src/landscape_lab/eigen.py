"""Low-lying eigenpairs: monitor-function scans and inverse iteration.

The monitor ``phi_{f,g}(lam) = 1 / (h^d sum f (H - lam)^{-1} g)`` has zeros
at the eigenvalues of ``H``; local minima of ``|phi|`` along a lambda scan
seed shift-invert iteration.  For "the lowest k pairs" a block inverse
subspace iteration with Rayleigh-Ritz is used instead, shifted at a
guaranteed lower bound of the spectrum.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import rng
from .errors import NearEigenvalueError
from .grid import ComplexField, field_from_interior
from .hamiltonian import shifted_solve

WARMUP_STEPS = 3


@dataclass(frozen=True)
class MonitorProbe:
    f: ComplexField
    g: ComplexField
    seed: int = 0

    def __post_init__(self):
        for name in ("f", "g"):
            fld = getattr(self, name)
            if not np.any(fld.values != 0):
                raise ValueError(f"probe {name} is identically zero")
        if self.f.grid != self.g.grid:
            raise ValueError("probe fields live on different grids")


@dataclass(frozen=True)
class ScanPoint:
    lam: float
    abs_monitor: float
    is_minimum: bool = False
    near_eigenvalue: bool = False


@dataclass
class EigenPair:
    lam: float
    phi: ComplexField
    residual: float
    iterations: int
    converged: bool
    imag: float = 0.0
    method: str = "inverse_power"

    def to_dict(self):
        return {"lambda": self.lam, "residual": self.residual, "iterations": self.iterations,
                "converged": self.converged, "imag": self.imag, "method": self.method}


def _bump_superposition(grid, seed, stream, n_bumps=8):
    u = rng.uniform(seed, stream, np.arange(4 * n_bumps)).reshape(n_bumps, 4)
    w = rng.normal(seed, stream + 1, np.arange(2 * n_bumps)).reshape(n_bumps, 2)
    mesh = grid.mesh()
    out = np.zeros(grid.shape, dtype=np.complex128)
    for i in range(n_bumps):
        r2 = np.zeros(grid.shape)
        for a in range(grid.dim):
            L = grid.upper[a] - grid.lower[a]
            c = grid.lower[a] + L * (0.15 + 0.7 * u[i, a])
            s = L * (0.1 + 0.15 * u[i, 2 + a % 2])  # low frequency
            r2 = r2 + ((mesh[a] - c) / s) ** 2
        out += (w[i, 0] + 1j * w[i, 1]) * np.exp(-0.5 * r2)
    return ComplexField(grid, out)


def default_probes(grid, seed=0):
    """Two fixed-seed random superpositions of 8 smooth bumps."""
    f = _bump_superposition(grid, seed, rng.STREAM_PROBE)
    g = _bump_superposition(grid, seed, rng.STREAM_PROBE + 2)
    return MonitorProbe(f, g, seed)


def monitor(H, probe, lam):
    """phi_{f,g}(lam); raises NearEigenvalueError if lam is (numerically) an eigenvalue."""
    w = shifted_solve(H, lam, probe.g)
    total = H.grid.cell_volume * np.sum(probe.f.values * w.values)
    if total == 0 or not np.isfinite(total):
        raise NearEigenvalueError(lam, 0.0)
    return complex(1.0 / total)


def scan_monitor(H, probe, lambda_grid):
    lams = np.asarray(lambda_grid, dtype=float)
    if lams.ndim != 1 or lams.size < 3:
        raise ValueError("lambda_grid needs at least 3 points")
    if np.any(np.diff(lams) <= 0):
        raise ValueError("lambda_grid must be strictly increasing")
    vals = np.empty(lams.size)
    near = np.zeros(lams.size, dtype=bool)
    for i, lam in enumerate(lams):
        try:
            vals[i] = abs(monitor(H, probe, lam))
        except NearEigenvalueError:
            vals[i] = 0.0
            near[i] = True
        # one shift per point; keep the factorization cache for the iteration
        H._factors.pop((float(lam), False), None)
    is_min = np.zeros(lams.size, dtype=bool)
    is_min[1:-1] = (vals[1:-1] < vals[:-2]) & (vals[1:-1] < vals[2:])
    return [ScanPoint(float(l), float(v), bool(m), bool(n)) for l, v, m, n in zip(lams, vals, is_min, near)]


def scan_minima(points):
    return [p.lam for p in points if p.is_minimum]


def _start_vector(n, seed, salt=0):
    z = rng.normal(seed, rng.STREAM_START_VECTOR + salt, np.arange(2 * n))
    return z[:n] + 1j * z[n:]


def _project_out(v, basis):
    for q in basis:
        v = v - q * np.vdot(q, v)
    return v


def _residual(m, v, lam):
    return float(np.linalg.norm(m @ v - lam * v) / np.linalg.norm(v))


def _finish(H, v, lam, res, it, conv, imag, method):
    full = field_from_interior(H.grid, v)
    k = np.argmax(np.abs(full))
    full = full * (np.conj(full.flat[k]) / abs(full.flat[k]) ** 2)
    return EigenPair(float(lam), ComplexField(H.grid, full), res, it, conv, float(imag), method)


def inverse_power(H, lambda0, tol=1e-9, max_iter=50, deflate=(), seed=0):
    """Shift-invert iteration from ``lambda0``: 3 fixed-shift steps, then Rayleigh-quotient updates.

    ``deflate`` holds previously accepted EigenPairs (or interior vectors);
    the iterate is kept orthogonal to them.  On non-convergence the best
    iterate is returned with ``converged=False``.
    """
    m = H.to_sparse()
    n = m.shape[0]
    basis = []
    for p in deflate:
        q = p.phi.interior().ravel() if isinstance(p, EigenPair) else np.ravel(p)
        q = _project_out(q.astype(np.complex128), basis)
        basis.append(q / np.linalg.norm(q))
    v = _project_out(_start_vector(n, seed), basis)
    v /= np.linalg.norm(v)
    shift = float(lambda0)
    best = (np.inf, v, shift, 0.0)
    for it in range(1, max_iter + 1):
        try:
            lu = H.factorization(shift)
            w = lu.solve(v)
        except NearEigenvalueError:
            w = None
        if w is None or not np.all(np.isfinite(w)):
            # shift landed on an eigenvalue: the current iterate is the answer
            w = v
        w = _project_out(w, basis)
        v = w / np.linalg.norm(w)
        rq = np.vdot(v, m @ v)
        res = _residual(m, v, rq.real)
        if res < best[0]:
            best = (res, v, rq.real, rq.imag)
        if res <= tol:
            return _finish(H, v, rq.real, res, it, True, rq.imag, "inverse_power")
        if it >= WARMUP_STEPS:
            shift = float(rq.real)
    res, v, lam, imag = best
    return _finish(H, v, lam, res, max_iter, False, imag, "inverse_power")


def spectral_lower_bound(H, V_min=None):
    """min V + scale * (lowest Dirichlet eigenvalue of the discrete Laplacian).

    Valid for any magnetic field by the diamagnetic inequality.
    """
    g = H.grid
    lap = sum(2.0 / h ** 2 * (1.0 - np.cos(np.pi * h / (hi - lo)))
              for h, lo, hi in zip(g.spacing, g.lower, g.upper))
    vmin = float(np.min(H.potential)) if V_min is None else float(V_min)
    return vmin + H.laplacian_scale * lap


def lowest_eigenpairs(H, k, tol=1e-9, max_iter=500, guard=4, seed=0):
    """Lowest ``k`` eigenpairs by block inverse subspace iteration with Rayleigh-Ritz."""
    m = H.to_sparse()
    n = m.shape[0]
    p = min(n, k + guard)
    k = min(k, n)
    real = H.is_real
    m_use = H.to_sparse(real=real)
    lb = spectral_lower_bound(H)
    gap = max(abs(lb), 1.0) * 1e-3
    shift = lb - gap
    Z = _start_vector(n * p, seed).reshape(p, n).T
    Q = np.linalg.qr(Z.real if real else Z)[0]
    theta = None
    res = np.full(k, np.inf)
    moved = False
    for it in range(1, max_iter + 1):
        lu = H.factorization(shift, real=real)
        W = lu.solve(Q)
        Q = np.linalg.qr(W)[0]
        HQ = m_use @ Q
        T = Q.conj().T @ HQ
        theta, S = sla.eigh(0.5 * (T + T.conj().T))
        Q = Q @ S
        HQ = HQ @ S
        R = HQ[:, :k] - Q[:, :k] * theta[:k]
        res = np.linalg.norm(R, axis=0)
        if np.all(res <= tol):
            break
        if not moved and res[0] <= 1e-3 * max(abs(theta[0]), 1.0):
            # lambda_1 located: move the shift just below it for a faster rate
            new = theta[0] - max(res[0], 1e-3 * (theta[min(k, p - 1)] - theta[0]))
            if new > shift:
                shift = new
            moved = True
    pairs = []
    for j in range(k):
        v = Q[:, j].astype(np.complex128)
        rq = np.vdot(v, m @ v)
        r = _residual(m, v, rq.real)
        pairs.append(_finish(H, v, rq.real, r, it, bool(r <= tol), rq.imag, "block"))
    return pairs


def eigenpairs_from_scan(H, lambda_grid, tol=1e-9, max_iter=50, probe=None, max_pairs=None):
    """Scan |phi|, then run deflated inverse iteration from each flagged minimum."""
    probe = probe or default_probes(H.grid)
    points = scan_monitor(H, probe, lambda_grid)
    pairs = []
    for lam0 in scan_minima(points):
        if max_pairs is not None and len(pairs) >= max_pairs:
            break
        pair = inverse_power(H, lam0, tol=tol, max_iter=max_iter, deflate=pairs)
        if any(abs(pair.lam - q.lam) <= 1e-8 * max(1.0, abs(q.lam)) for q in pairs):
            continue
        pairs.append(pair)
    pairs.sort(key=lambda q: q.lam)
    return pairs, points
