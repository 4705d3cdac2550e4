"""Tensor-product box grids and node-valued field containers.

Nodes include the boundary layer; Dirichlet problems use only the interior
nodes as unknowns.  Field values are stored as arrays of shape
``grid.shape`` in C order, so the flat layout is row-major with axis 0
slowest.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class Grid:
    lower: tuple
    upper: tuple
    n_nodes: tuple

    def __post_init__(self):
        if not (len(self.lower) == len(self.upper) == len(self.n_nodes)):
            raise ConfigError("lower, upper and n_nodes must have one entry per axis")
        if self.dim not in (1, 2):
            raise ConfigError(f"only dim 1 or 2 is supported, got {self.dim}")
        for ax, (lo, hi, n) in enumerate(zip(self.lower, self.upper, self.n_nodes)):
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ConfigError(f"axis {ax}: non-finite bounds ({lo}, {hi})")
            if not hi > lo:
                raise ConfigError(f"axis {ax}: upper bound {hi} must exceed lower bound {lo}")
            if n < 3:
                raise ConfigError(f"axis {ax}: n_nodes={n} leaves no interior nodes (need >= 3)")

    @property
    def dim(self):
        return len(self.n_nodes)

    @property
    def shape(self):
        return tuple(self.n_nodes)

    @property
    def spacing(self):
        return tuple((hi - lo) / (n - 1) for lo, hi, n in zip(self.lower, self.upper, self.n_nodes))

    @property
    def interior_shape(self):
        return tuple(n - 2 for n in self.n_nodes)

    @property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @property
    def size(self):
        return int(np.prod(self.n_nodes))

    def coords(self, axis):
        # lower + i*h for every node, never a running sum
        h = self.spacing[axis]
        return self.lower[axis] + np.arange(self.n_nodes[axis], dtype=np.float64) * h

    def mesh(self):
        return np.meshgrid(*(self.coords(a) for a in range(self.dim)), indexing="ij")

    def node(self, index):
        """Coordinates of the node with multi-index ``index``."""
        index = np.atleast_1d(index)
        return np.array([self.lower[a] + int(index[a]) * self.spacing[a] for a in range(self.dim)])

    def interior_mask(self):
        mask = np.zeros(self.shape, dtype=bool)
        mask[(slice(1, -1),) * self.dim] = True
        return mask

    def boundary_mask(self):
        return ~self.interior_mask()

    def interior_nodes(self):
        """Coordinates of interior nodes, shape (n_interior, dim), row-major order."""
        pts = [m[self.interior_mask()] for m in self.mesh()]
        return np.stack(pts, axis=-1)

    def distance_to_boundary(self, point):
        point = np.asarray(point, dtype=float)
        return float(min(min(point[a] - self.lower[a], self.upper[a] - point[a]) for a in range(self.dim)))

    def contains(self, point, strict=True):
        point = np.atleast_1d(np.asarray(point, dtype=float))
        if point.shape != (self.dim,):
            return False
        lo, hi = np.asarray(self.lower), np.asarray(self.upper)
        if strict:
            return bool(np.all(point > lo) and np.all(point < hi))
        return bool(np.all(point >= lo) and np.all(point <= hi))

    def nearest_node(self, point):
        point = np.asarray(point, dtype=float)
        return tuple(
            int(np.clip(round((point[a] - self.lower[a]) / self.spacing[a]), 0, self.n_nodes[a] - 1))
            for a in range(self.dim)
        )

    def to_dict(self):
        return {"dim": self.dim, "lower": list(self.lower), "upper": list(self.upper),
                "n_nodes": list(self.n_nodes)}


def make_grid(dim, lower, upper, n_nodes):
    """Build a ``dim``-dimensional box grid.

    Scalars for ``lower``, ``upper`` or ``n_nodes`` are broadcast to every axis.
    """
    def per_axis(v, cast):
        if np.ndim(v) == 0:
            return (cast(v),) * dim
        v = tuple(cast(x) for x in v)
        if len(v) != dim:
            raise ConfigError(f"expected {dim} values, got {len(v)}")
        return v

    if dim not in (1, 2):
        raise ConfigError(f"only dim 1 or 2 is supported, got {dim}")
    return Grid(per_axis(lower, float), per_axis(upper, float), per_axis(n_nodes, int))


def _check_shape(grid, values):
    if values.shape != grid.shape:
        raise ValueError(f"field shape {values.shape} does not match grid shape {grid.shape}")


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim == 1 and self.grid.dim > 1 and vals.size == self.grid.size:
            vals = vals.reshape(self.grid.shape)
        _check_shape(self.grid, vals)
        if not np.all(np.isfinite(vals)):
            raise ValueError("ScalarField values must be finite")
        object.__setattr__(self, "values", vals)

    def flat(self):
        return self.values.ravel()

    def interior(self):
        return self.values[(slice(1, -1),) * self.grid.dim]


@dataclass(frozen=True, eq=False)
class ComplexField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.ndim == 1 and self.grid.dim > 1 and vals.size == self.grid.size:
            vals = vals.reshape(self.grid.shape)
        _check_shape(self.grid, vals)
        if not np.all(np.isfinite(vals)):
            raise ValueError("ComplexField values must be finite")
        object.__setattr__(self, "values", vals)

    def flat(self):
        return self.values.ravel()

    def interior(self):
        return self.values[(slice(1, -1),) * self.grid.dim]

    def abs(self):
        return ScalarField(self.grid, np.abs(self.values))


@dataclass(frozen=True, eq=False)
class VectorField:
    grid: Grid
    components: tuple = field(default=())

    def __post_init__(self):
        comps = tuple(c if isinstance(c, ScalarField) else ScalarField(self.grid, c)
                      for c in self.components)
        if len(comps) != self.grid.dim:
            raise ValueError(f"need {self.grid.dim} components, got {len(comps)}")
        for c in comps:
            if c.grid != self.grid:
                raise ValueError("all VectorField components must share the grid")
        object.__setattr__(self, "components", comps)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, tuple(np.zeros(grid.shape) for _ in range(grid.dim)))

    def is_zero(self):
        return all(not np.any(c.values) for c in self.components)


def field_from_interior(grid, interior, dtype=np.complex128):
    """Embed interior-node values into a full-grid array with zero boundary."""
    full = np.zeros(grid.shape, dtype=dtype)
    full[(slice(1, -1),) * grid.dim] = np.asarray(interior).reshape(grid.interior_shape)
    return full


def eval_on_grid(grid, func):
    """Evaluate ``func(x)`` / ``func(x, y)`` on all nodes.

    ``func`` receives coordinate arrays of shape ``grid.shape``; a scalar
    return is broadcast.  Raises ``ValueError`` naming the first node where the
    result is not finite.
    """
    vals = np.asarray(func(*grid.mesh()), dtype=np.float64)
    vals = np.broadcast_to(vals, grid.shape).copy()
    bad = ~np.isfinite(vals)
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise ValueError(f"non-finite value {vals[idx]} at node {idx} "
                         f"(x = {grid.node(idx).tolist()})")
    return ScalarField(grid, vals)


def bilinear(grid, values, points):
    """Multilinear interpolation of node ``values`` at ``points`` (n, dim).

    Points outside the box are clamped onto it.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if grid.dim == 1 and points.shape[0] == 1 and points.shape[1] != 1:
        points = points.T
    idx, frac = [], []
    for a in range(grid.dim):
        s = (points[:, a] - grid.lower[a]) / grid.spacing[a]
        s = np.clip(s, 0.0, grid.n_nodes[a] - 1)
        i = np.minimum(np.floor(s).astype(np.intp), grid.n_nodes[a] - 2)
        idx.append(i)
        frac.append(s - i)
    if grid.dim == 1:
        (i,), (f,) = idx, frac
        return (1 - f) * values[i] + f * values[i + 1]
    (i, j), (fx, fy) = idx, frac
    return ((1 - fx) * (1 - fy) * values[i, j] + fx * (1 - fy) * values[i + 1, j]
            + (1 - fx) * fy * values[i, j + 1] + fx * fy * values[i + 1, j + 1])


def sine_interpolant(grid, values, points):
    """Evaluate the discrete sine series through node ``values`` at ``points``.

    ``values`` must vanish on the boundary; the result is the unique
    combination of Dirichlet modes sin(k pi (x - lo) / L) matching every
    interior node, so it is smooth between nodes (unlike :func:`bilinear`).
    """
    import scipy.fft

    points = np.atleast_2d(np.asarray(points, dtype=float))
    inner = np.asarray(values)[(slice(1, -1),) * grid.dim]
    coef = scipy.fft.dstn(inner, type=1) / np.prod([n - 1.0 for n in grid.n_nodes])
    basis = []
    for a in range(grid.dim):
        L = grid.upper[a] - grid.lower[a]
        k = np.arange(1, grid.n_nodes[a] - 1)
        basis.append(np.sin(np.pi * np.outer(points[:, a] - grid.lower[a], k) / L))
    if grid.dim == 1:
        return basis[0] @ coef
    return np.einsum("pk,pk->p", basis[0] @ coef, basis[1])
