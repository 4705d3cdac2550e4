import numpy as np
import pytest
import scipy.sparse.linalg as spla

from landscape_lab import model
from landscape_lab.errors import NearEigenvalueError
from landscape_lab.grid import ComplexField, ScalarField, VectorField, make_grid
from landscape_lab.hamiltonian import (apply, assemble, conjugate_field, gauge_transform, inner,
                                       shifted_solve)


def _random_model(rs, n=9):
    g = make_grid(2, -0.5, 0.5, n)
    V = ScalarField(g, rs.uniform(0, 50, g.shape))
    A = VectorField(g, (rs.normal(size=g.shape) * 5, rs.normal(size=g.shape) * 5))
    return g, V, A


def test_hermitian_and_stencil_agree(rs):
    g, V, A = _random_model(rs)
    H = assemble(g, A, V, 0.5)
    m = H.to_sparse()
    assert abs(m - m.conj().T).max() < 1e-12
    psi = rs.normal(size=g.shape) + 1j * rs.normal(size=g.shape)
    via_apply = apply(H, psi).interior().ravel()
    assert np.allclose(via_apply, m @ psi[1:-1, 1:-1].ravel(), atol=1e-10)
    assert H.phase_defect() < 1e-14


def test_diagonal_is_kinetic_plus_potential(rs):
    g, V, A = _random_model(rs)
    H = assemble(g, A, V, 0.7)
    h = g.spacing[0]
    assert np.allclose(H.to_sparse().diagonal().real, 0.7 * 4 / h ** 2 + V.interior().ravel())


@pytest.mark.parametrize("scale", [0.5, 1.0])
def test_free_1d_lowest_eigenvalue(scale):
    g = make_grid(1, 0, np.pi, 65)
    h = g.spacing[0]
    m = assemble(g, laplacian_scale=scale).to_sparse(real=True)
    lam = spla.eigsh(m, k=1, sigma=0)[0][0]
    assert lam == pytest.approx(scale * 2 / h ** 2 * (1 - np.cos(h)), rel=1e-12)


def test_gauge_covariance(rs):
    g, V, A = _random_model(rs, 11)
    H = assemble(g, A, V, 0.5)
    chi = rs.uniform(-3, 3, g.shape)
    Hc = gauge_transform(H, chi)
    psi = ComplexField(g, rs.normal(size=g.shape) + 1j * rs.normal(size=g.shape))
    lhs = apply(Hc, conjugate_field(psi, chi)).values
    rhs = conjugate_field(apply(H, psi), chi).values
    assert np.max(np.abs(lhs - rhs)) < 1e-10 * np.max(np.abs(rhs))
    e0 = np.linalg.eigvalsh(H.to_sparse().toarray())
    e1 = np.linalg.eigvalsh(Hc.to_sparse().toarray())
    assert np.allclose(e0, e1, rtol=1e-12)


def test_gradient_field_is_pure_gauge(rs):
    # A = grad chi with chi linear: spectra agree with A = 0
    g = make_grid(2, -0.5, 0.5, 9)
    X, Y = g.mesh()
    A = VectorField(g, (3.0 * np.ones(g.shape), -2.0 * np.ones(g.shape)))
    e0 = np.linalg.eigvalsh(assemble(g).to_sparse().toarray())
    e1 = np.linalg.eigvalsh(assemble(g, A).to_sparse().toarray())
    assert np.allclose(e0, e1, rtol=1e-12)


def test_field_raises_ground_energy():
    # diamagnetic inequality on the lattice
    g = make_grid(2, -0.5, 0.5, 17)
    e0 = spla.eigsh(assemble(g).to_sparse(), k=1, sigma=0)[0][0]
    H = assemble(g, magnetic_spec=model.desk_magnetic_spec(70.0))
    e1 = np.linalg.eigvalsh(H.to_sparse().toarray())[0]
    assert e1 > e0


def test_spec_and_nodal_links_close():
    g = make_grid(2, -0.5, 0.5, 65)
    spec = model.desk_magnetic_spec(20.0)
    A = model.build_magnetic(g, spec)
    L1 = assemble(g, magnetic_spec=spec).links
    L2 = assemble(g, A).links
    h = g.spacing[0]
    for a, b in zip(L1, L2):
        assert np.max(np.abs(np.angle(a * np.conj(b)))) < 20 * h ** 3 * 50


def test_negative_potential_rejected():
    g = make_grid(1, 0, 1, 9)
    with pytest.raises(ValueError, match="V must be >= 0"):
        assemble(g, V=ScalarField(g, -np.ones(9)))


def test_shifted_solve_and_singular_shift():
    g = make_grid(1, 0, np.pi, 33)
    H = assemble(g, laplacian_scale=1.0)
    rhs = np.ones(g.shape)
    w = shifted_solve(H, 0.5, rhs)
    m = H.to_sparse()
    assert np.allclose(m @ w.interior() - 0.5 * w.interior(), 1.0)
    h = g.spacing[0]
    lam1 = 2 / h ** 2 * (1 - np.cos(h))
    with pytest.raises(NearEigenvalueError):
        shifted_solve(H, lam1, rhs)


def test_inner_product_weighting():
    g = make_grid(2, 0, 1, 5)
    a = np.ones(g.shape)
    assert inner(g, a, a) == pytest.approx(25 * g.cell_volume)
