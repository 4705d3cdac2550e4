"""Discrete magnetic Schrodinger operator with Dirichlet conditions.

The kinetic part ``scale * (-i grad - A)^2`` is discretized with Peierls
link phases: for an edge j -> k,

    (H psi)_j = scale / h^2 * sum_k (psi_j - exp(i theta_jk) psi_k) + V_j psi_j,
    theta_jk  = -A(midpoint of jk) . (x_k - x_j),

which is Hermitian and gauge covariant exactly on the lattice.  Only
interior nodes are unknowns; boundary values are pinned to zero.
"""

from collections import OrderedDict
from dataclasses import dataclass, field
import threading

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NearEigenvalueError
from .grid import ComplexField, ScalarField, VectorField, field_from_interior

_CACHE_SIZE = 4


def _edge_slice(dim, axis, start, stop):
    """Interior slices on every axis except ``axis``, which gets start:stop."""
    return tuple(slice(start, stop) if a == axis else slice(1, -1) for a in range(dim))


@dataclass(eq=False)
class MagneticHamiltonian:
    grid: object
    potential: np.ndarray
    links: tuple
    laplacian_scale: float
    _lock: threading.RLock = field(default_factory=threading.RLock, repr=False)
    _factors: OrderedDict = field(default_factory=OrderedDict, repr=False)
    _matrix: dict = field(default_factory=dict, repr=False)

    @property
    def diag(self):
        kin = sum(2.0 / h ** 2 for h in self.grid.spacing)
        return self.laplacian_scale * kin + self.potential

    @property
    def n_unknowns(self):
        return int(np.prod(self.grid.interior_shape))

    @property
    def is_real(self):
        return all(np.all(L.imag == 0) for L in self.links)

    def phase_defect(self):
        """max |phase(j->k) * phase(k->j) - 1| over all edges."""
        return max(float(np.max(np.abs(L * np.conj(L) - 1.0))) if L.size else 0.0 for L in self.links)

    def to_sparse(self, real=False):
        """CSR matrix on interior unknowns (row-major ordering)."""
        key = "real" if real else "complex"
        with self._lock:
            if key in self._matrix:
                return self._matrix[key]
        g = self.grid
        ishape = g.interior_shape
        n = self.n_unknowns
        index = np.arange(n).reshape(ishape)
        rows = [np.arange(n)]
        cols = [np.arange(n)]
        vals = [self.diag.ravel().astype(np.complex128)]
        for a, h in enumerate(g.spacing):
            if ishape[a] < 2:
                continue
            # edges between interior nodes j and j + e_a: link index j (full-grid), j in 1..n_a-3
            lk = self.links[a][_edge_slice(g.dim, a, 1, g.n_nodes[a] - 2)]
            src = index[tuple(slice(0, -1) if b == a else slice(None) for b in range(g.dim))]
            dst = index[tuple(slice(1, None) if b == a else slice(None) for b in range(g.dim))]
            off = -self.laplacian_scale / h ** 2 * lk
            rows += [src.ravel(), dst.ravel()]
            cols += [dst.ravel(), src.ravel()]
            vals += [off.ravel(), np.conj(off).ravel()]
        m = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n)).tocsr()
        if real:
            # .real is a strided view; sparse routines want contiguous data
            m = sp.csr_matrix((np.ascontiguousarray(m.data.real), m.indices, m.indptr), shape=m.shape)
        with self._lock:
            self._matrix[key] = m
        return m

    def factorization(self, shift, real=False):
        """Sparse LU of ``H - shift``, cached per shift (small LRU)."""
        key = (float(shift), bool(real))
        with self._lock:
            lu = self._factors.get(key)
            if lu is not None:
                self._factors.move_to_end(key)
                return lu
            m = self.to_sparse(real=real)
            ident = sp.identity(m.shape[0], dtype=m.dtype, format="csr")
            try:
                lu = spla.splu((m - shift * ident).tocsc())
            except RuntimeError as exc:
                raise NearEigenvalueError(shift, 0.0) from exc
            self._factors[key] = lu
            while len(self._factors) > _CACHE_SIZE:
                self._factors.popitem(last=False)
            return lu


def assemble(grid, A=None, V=None, laplacian_scale=0.5, magnetic_spec=None):
    """Build H(A, V) on ``grid``.

    ``A`` is a nodal VectorField (midpoint values by averaging the two end
    nodes); alternatively ``magnetic_spec`` evaluates the closed-form A at the
    exact edge midpoints.
    """
    if laplacian_scale <= 0:
        raise ValueError("laplacian_scale must be positive")
    if V is None:
        V = ScalarField(grid, np.zeros(grid.shape))
    if V.grid != grid:
        raise ValueError("V is defined on a different grid")
    if np.any(V.values < 0):
        idx = tuple(int(i) for i in np.argwhere(V.values < 0)[0])
        raise ValueError(f"V must be >= 0; V{idx} = {V.values[idx]}")
    if A is not None and A.grid != grid:
        raise ValueError("A is defined on a different grid")

    links = []
    for a, h in enumerate(grid.spacing):
        shape = list(grid.shape)
        shape[a] -= 1
        if magnetic_spec is not None and grid.dim == 2 and magnetic_spec.b != 0:
            from .model import evaluate_magnetic

            mesh = np.meshgrid(*(grid.coords(b) for b in range(grid.dim)), indexing="ij")
            lo = tuple(slice(0, -1) if b == a else slice(None) for b in range(grid.dim))
            mid = [m[lo] for m in mesh]
            mid[a] = mid[a] + 0.5 * h
            amid = evaluate_magnetic(magnetic_spec, grid.lower, grid.upper, *mid)[a]
        elif A is not None:
            comp = A.components[a].values
            lo = tuple(slice(0, -1) if b == a else slice(None) for b in range(grid.dim))
            hi = tuple(slice(1, None) if b == a else slice(None) for b in range(grid.dim))
            amid = 0.5 * (comp[lo] + comp[hi])
        else:
            amid = np.zeros(shape)
        theta = -amid * h
        links.append(np.exp(1j * theta))
    return MagneticHamiltonian(grid, V.interior().copy(), tuple(links), float(laplacian_scale))


def _interior_vector(H, psi):
    if isinstance(psi, ComplexField):
        if psi.grid != H.grid:
            raise ValueError("psi is defined on a different grid")
        return psi.interior().ravel()
    psi = np.asarray(psi)
    if psi.shape == H.grid.shape:
        return psi[(slice(1, -1),) * H.grid.dim].ravel()
    return psi.ravel()


def apply(H, psi):
    """Matrix-free stencil application; boundary values of ``psi`` are ignored."""
    g = H.grid
    full = field_from_interior(g, _interior_vector(H, psi))
    inner = (slice(1, -1),) * g.dim
    out = H.diag * full[inner]
    for a, h in enumerate(g.spacing):
        n = g.n_nodes[a]
        fwd = H.links[a][_edge_slice(g.dim, a, 1, n - 1)] * full[_edge_slice(g.dim, a, 2, n)]
        bwd = np.conj(H.links[a][_edge_slice(g.dim, a, 0, n - 2)]) * full[_edge_slice(g.dim, a, 0, n - 2)]
        out = out - (H.laplacian_scale / h ** 2) * (fwd + bwd)
    return ComplexField(g, field_from_interior(g, out))


def inner(grid, a, b):
    """h^d-weighted <a, b> = h^d sum conj(a) b (arrays or fields)."""
    a = a.values if hasattr(a, "values") else a
    b = b.values if hasattr(b, "values") else b
    return grid.cell_volume * np.vdot(np.ravel(a), np.ravel(b))


def gauge_transform(H, chi):
    """Link-level gauge transform matching A -> A + grad(chi), psi -> exp(i chi) psi.

    theta'_jk = theta_jk + chi_j - chi_k, so that ``conjugate_field(psi, chi)``
    is an eigenvector of the result whenever ``psi`` is one of ``H``.
    """
    g = H.grid
    c = chi.values if isinstance(chi, ScalarField) else np.asarray(chi, dtype=float)
    links = []
    for a in range(g.dim):
        lo = tuple(slice(0, -1) if b == a else slice(None) for b in range(g.dim))
        hi = tuple(slice(1, None) if b == a else slice(None) for b in range(g.dim))
        links.append(H.links[a] * np.exp(1j * (c[lo] - c[hi])))
    return MagneticHamiltonian(g, H.potential.copy(), tuple(links), H.laplacian_scale)


def conjugate_field(psi, chi):
    c = chi.values if isinstance(chi, ScalarField) else np.asarray(chi, dtype=float)
    return ComplexField(psi.grid, np.exp(1j * c) * psi.values)


def shifted_solve(H, shift, rhs, max_refine=3, tol=1e-10):
    """Solve (H - shift) w = rhs on interior nodes; w = 0 on the boundary.

    Raises NearEigenvalueError when the factorization is singular or the
    residual cannot be brought below ``tol``.
    """
    b = _interior_vector(H, rhs).astype(np.complex128)
    g = H.grid
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return ComplexField(g, np.zeros(g.shape, dtype=np.complex128))
    lu = H.factorization(shift)
    m = H.to_sparse()
    w = lu.solve(b)
    res = np.inf
    for _ in range(max_refine + 1):
        if not np.all(np.isfinite(w)):
            raise NearEigenvalueError(shift, 0.0)
        r = b - (m @ w - shift * w)
        res = np.linalg.norm(r) / bnorm
        if res <= tol:
            break
        w = w + lu.solve(r)
    if res > tol:
        raise NearEigenvalueError(shift, bnorm / max(np.linalg.norm(w), 1e-300), residual=res)
    return ComplexField(g, field_from_interior(g, w))


def zero_potential(grid):
    return ScalarField(grid, np.zeros(grid.shape))


def zero_magnetic(grid):
    return VectorField.zeros(grid)
