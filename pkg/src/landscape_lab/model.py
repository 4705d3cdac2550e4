"""Random Gaussian-superposition potentials and magnetic vector potentials.

Bump centres sit on a ``bumps_per_axis``-point lattice spanning the closed
box (denominator ``bumps_per_axis - 1``); a single bump sits at the box
midpoint.  Weights come from counter-based streams keyed by (seed, bump
index), so a field is a pure function of (grid, spec).
"""

from dataclasses import dataclass, asdict
import math
import warnings

import numpy as np

from . import rng
from .errors import ConfigError
from .grid import ScalarField, VectorField


@dataclass(frozen=True)
class PotentialSpec:
    bumps_per_axis: int = 64
    weight_low: float = 0.0
    weight_high: float = 20480.0
    sigma: float = 1.0 / math.sqrt(64)
    offset: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.bumps_per_axis < 1:
            raise ConfigError("bumps_per_axis must be >= 1")
        if not self.sigma > 0:
            raise ConfigError("sigma must be positive")
        if self.weight_low > self.weight_high:
            raise ConfigError("weight_low must not exceed weight_high")
        if not self.offset >= 0:
            raise ConfigError("offset must be >= 0")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class MagneticSpec:
    bumps_per_axis: int = 32
    b: float = 0.0
    sigma_x: float = 1.0 / math.sqrt(32)
    sigma_y: float = 1.0 / math.sqrt(32)
    seed: int = 0

    def __post_init__(self):
        if self.bumps_per_axis < 1:
            raise ConfigError("bumps_per_axis must be >= 1")
        if not (self.sigma_x > 0 and self.sigma_y > 0):
            raise ConfigError("sigma_x and sigma_y must be positive")
        if not math.isfinite(self.b):
            raise ConfigError("b must be finite")

    def to_dict(self):
        return asdict(self)


def desk_potential_spec(seed=0, offset=0.0):
    """Scaled-down version of the 64-bump model: 16 bumps per axis."""
    return PotentialSpec(bumps_per_axis=16, weight_low=0.0, weight_high=1280.0,
                         sigma=1.0 / math.sqrt(16), offset=offset, seed=seed)


def desk_magnetic_spec(b, seed=1):
    return MagneticSpec(bumps_per_axis=8, b=b, sigma_x=1.0 / math.sqrt(8),
                        sigma_y=1.0 / math.sqrt(8), seed=seed)


def bump_centers(n, lo, hi):
    if n == 1:
        return np.array([0.5 * (lo + hi)])
    return lo + np.arange(n, dtype=np.float64) * ((hi - lo) / (n - 1))


def potential_weights(spec, dim):
    n = spec.bumps_per_axis
    u = rng.uniform(spec.seed, rng.STREAM_POTENTIAL, np.arange(n ** dim))
    w = spec.weight_low + (spec.weight_high - spec.weight_low) * u
    return w.reshape((n,) * dim)


def magnetic_weights(spec, dim, component):
    n = spec.bumps_per_axis
    stream = rng.STREAM_MAGNETIC_X if component == 0 else rng.STREAM_MAGNETIC_Y
    return rng.normal(spec.seed, stream, np.arange(n ** dim)).reshape((n,) * dim)


def _factors(x, centers, sigma):
    d = x[:, None] - centers[None, :]
    g = np.exp(-(d * d) / (sigma * sigma))
    return g, (-2.0 / (sigma * sigma)) * d * g


def _separable_sum(weights, lower, upper, sigma, axes_coords, deriv_axis=None, pointwise=False):
    """sum_i w_i G(x - c_i) on a tensor grid (or at points if ``pointwise``)."""
    n = weights.shape[0]
    facs = []
    for a, x in enumerate(axes_coords):
        g, dg = _factors(np.asarray(x, dtype=float).ravel(), bump_centers(n, lower[a], upper[a]), sigma)
        facs.append(dg if a == deriv_axis else g)
    if len(facs) == 1:
        return facs[0] @ weights
    gx, gy = facs
    if pointwise:
        return np.einsum("pi,pi->p", gx @ weights, gy)
    return gx @ weights @ gy.T


def evaluate_potential(spec, lower, upper, *coords):
    """Closed-form potential at arbitrary points (arrays of equal shape)."""
    dim = len(coords)
    shape = np.shape(coords[0])
    w = potential_weights(spec, dim)
    vals = _separable_sum(w, lower, upper, spec.sigma, coords, pointwise=True)
    return spec.offset + np.asarray(vals).reshape(shape)


def build_potential(grid, spec):
    w = potential_weights(spec, grid.dim)
    axes = [grid.coords(a) for a in range(grid.dim)]
    vals = spec.offset + _separable_sum(w, grid.lower, grid.upper, spec.sigma, axes)
    return ScalarField(grid, vals)


def _component_base(spec, grid_lower, grid_upper, component, coords, pointwise, deriv_axis=None):
    sigma = spec.sigma_x if component == 0 else spec.sigma_y
    w = magnetic_weights(spec, 2, component)
    return _separable_sum(w, grid_lower, grid_upper, sigma, coords, deriv_axis=deriv_axis,
                          pointwise=pointwise)


def build_magnetic(grid, spec):
    if grid.dim != 2:
        warnings.warn("magnetic potential is only defined for dim = 2; returning A = 0",
                      stacklevel=2)
        return VectorField.zeros(grid)
    if spec.b == 0:
        return VectorField.zeros(grid)
    axes = [grid.coords(0), grid.coords(1)]
    bx = _component_base(spec, grid.lower, grid.upper, 0, axes, False)
    by = _component_base(spec, grid.lower, grid.upper, 1, axes, False)
    return VectorField(grid, (spec.b * bx, -spec.b * by))


def evaluate_magnetic(spec, lower, upper, x, y):
    """Closed-form (A_x, A_y) at points."""
    shape = np.shape(x)
    bx = _component_base(spec, lower, upper, 0, (x, y), True).reshape(shape)
    by = _component_base(spec, lower, upper, 1, (x, y), True).reshape(shape)
    return spec.b * bx, -spec.b * by


def divergence_analytic(spec, grid, points):
    """Exact dA_x/dx + dA_y/dy at ``points`` (shape (n, 2) or (2,)).

    ``grid`` supplies the box that fixes the bump centres.
    """
    pts = np.asarray(points, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if grid.dim != 2 or spec.b == 0:
        out = np.zeros(len(pts))
    else:
        coords = (pts[:, 0], pts[:, 1])
        dx = _component_base(spec, grid.lower, grid.upper, 0, coords, True, deriv_axis=0)
        dy = _component_base(spec, grid.lower, grid.upper, 1, coords, True, deriv_axis=1)
        out = spec.b * dx - spec.b * dy
    return float(out[0]) if single else out


def divergence_field(grid, spec):
    if grid.dim != 2 or spec.b == 0:
        return ScalarField(grid, np.zeros(grid.shape))
    axes = [grid.coords(0), grid.coords(1)]
    dx = _component_base(spec, grid.lower, grid.upper, 0, axes, False, deriv_axis=0)
    dy = _component_base(spec, grid.lower, grid.upper, 1, axes, False, deriv_axis=1)
    return ScalarField(grid, spec.b * dx - spec.b * dy)
