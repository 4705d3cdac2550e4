"""Landscape function, the pointwise eigenfunction bound, and the local landscape."""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, NumericalBreakdown
from .grid import ScalarField, field_from_interior
from .hamiltonian import assemble

SERIES_CUTOFF = 1e-6


@dataclass(frozen=True)
class LocalLandscapeParams:
    t: float
    padding: Optional[int] = None  # nodes per side; None = one domain width
    laplacian_scale: float = 1.0  # diffusion generator scale * Laplacian

    def __post_init__(self):
        if not self.t > 0:
            raise ConfigError("t must be positive")
        if self.padding is not None and self.padding < 0:
            raise ConfigError("padding must be >= 0")
        if not self.laplacian_scale > 0:
            raise ConfigError("laplacian_scale must be positive")


@dataclass(frozen=True)
class FMBound:
    bound: ScalarField
    active: np.ndarray  # nodes where lambda * u >= 1


def solve_landscape(grid, V=None, laplacian_scale=0.5, tol=1e-10):
    """Solve (-scale * Lap_h + V) u = 1 with u = 0 on the boundary."""
    H = assemble(grid, None, V, laplacian_scale)
    m = H.to_sparse(real=True)
    b = np.ones(m.shape[0])
    lu = H.factorization(0.0, real=True)
    u = lu.solve(b)
    for _ in range(3):
        r = b - m @ u
        res = np.linalg.norm(r) / np.linalg.norm(b)
        if res <= tol:
            break
        u = u + lu.solve(r)
    if not res <= tol:
        raise NumericalBreakdown(f"landscape solve reached relative residual {res:.3e} > {tol:.0e}",
                                 residual=res)
    return ScalarField(grid, field_from_interior(grid, u, dtype=np.float64))


def fm_bound(u, lam):
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    bound = ScalarField(u.grid, lam * u.values)
    return FMBound(bound, bound.values >= 1.0)


def averaged_heat_multiplier(z):
    """(1 - exp(-z)) / z for z >= 0, with the removable singularity at 0."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z < SERIES_CUTOFF
    zs = z[small]
    out[small] = 1.0 - zs / 2.0 + zs * zs / 6.0
    zl = z[~small]
    out[~small] = -np.expm1(-zl) / zl
    return out


def local_landscape(V, params):
    """V_t = V * k_t via zero-padded FFT with the time-averaged heat multiplier.

    With scale c the multiplier is (1 - exp(-c t |xi|^2)) / (c t |xi|^2); c = 1
    matches the heat semigroup of the plain Laplacian.
    """
    g = V.grid
    pad = params.padding
    pads = [(n - 1 if pad is None else pad) for n in g.n_nodes]
    shape = [n + 2 * p for n, p in zip(g.n_nodes, pads)]
    work = np.zeros(shape)
    work[tuple(slice(p, p + n) for p, n in zip(pads, g.n_nodes))] = V.values
    spec = np.fft.rfftn(work)
    xi2 = 0.0
    for a, (n, h) in enumerate(zip(shape, g.spacing)):
        k = (np.fft.rfftfreq(n, d=h) if a == g.dim - 1 else np.fft.fftfreq(n, d=h)) * 2 * np.pi
        bshape = [1] * g.dim
        bshape[a] = len(k)
        xi2 = xi2 + (k ** 2).reshape(bshape)
    mult = averaged_heat_multiplier(params.laplacian_scale * params.t * xi2)
    out = np.fft.irfftn(spec * mult, s=shape, axes=tuple(range(g.dim)))
    out = out[tuple(slice(p, p + n) for p, n in zip(pads, g.n_nodes))]
    return ScalarField(g, out)


def collar_mask(grid, t, width=3.0):
    """Nodes at distance >= width * sqrt(t) from the boundary."""
    r = width * np.sqrt(t)
    mask = np.ones(grid.shape, dtype=bool)
    for a, m in enumerate(grid.mesh()):
        mask &= (m - grid.lower[a] >= r) & (grid.upper[a] - m >= r)
    return mask
