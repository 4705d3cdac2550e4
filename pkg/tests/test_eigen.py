import numpy as np
import pytest
import scipy.linalg as sla

from landscape_lab import eigen, model
from landscape_lab.grid import ComplexField, ScalarField, make_grid
from landscape_lab.hamiltonian import assemble


def _desk_H(desk33, b):
    g, V = desk33
    return assemble(g, V=V, laplacian_scale=0.5, magnetic_spec=model.desk_magnetic_spec(b))


def test_monitor_small_dense_oracle(rs):
    g = make_grid(1, 0, 1, 4)  # two unknowns
    V = ScalarField(g, [0, 3.0, 7.0, 0])
    H = assemble(g, V=V, laplacian_scale=1.0)
    f = ComplexField(g, [0, 1.0 + 0.5j, -2.0, 0])
    gg = ComplexField(g, [0, 0.3, 1.0 - 1j, 0])
    probe = eigen.MonitorProbe(f, gg)
    M = H.to_sparse().toarray()
    for lam in (-5.0, 12.3, 40.0):
        w = np.linalg.solve(M - lam * np.eye(2), gg.interior())
        ref = 1 / (g.cell_volume * np.sum(f.interior() * w))
        assert eigen.monitor(H, probe, lam) == pytest.approx(ref, rel=1e-13)


def test_probe_validation():
    g = make_grid(1, 0, 1, 5)
    z = ComplexField(g, np.zeros(5))
    one = ComplexField(g, [0, 1, 1, 1, 0])
    with pytest.raises(ValueError):
        eigen.MonitorProbe(z, one)
    with pytest.raises(ValueError):
        eigen.MonitorProbe(one, ComplexField(make_grid(1, 0, 2, 5), one.values))


def test_scan_minima_bracket_interval_eigenvalues():
    g = make_grid(1, 0, np.pi, 129)
    H = assemble(g, laplacian_scale=1.0)
    h = g.spacing[0]
    exact = 2 / h ** 2 * (1 - np.cos(h * np.arange(1, 4)))
    lams = np.arange(0.25, 10.0, 0.1)
    pts = eigen.scan_monitor(H, eigen.default_probes(g, seed=3), lams)
    mins = eigen.scan_minima(pts)
    assert len(mins) == 3
    assert np.all(np.abs(np.array(mins) - exact) <= 0.1)


def test_scan_rejects_bad_grid():
    g = make_grid(1, 0, np.pi, 17)
    H = assemble(g, laplacian_scale=1.0)
    probe = eigen.default_probes(g)
    with pytest.raises(ValueError):
        eigen.scan_monitor(H, probe, [1.0, 2.0])
    with pytest.raises(ValueError):
        eigen.scan_monitor(H, probe, [1.0, 3.0, 2.0])


@pytest.mark.parametrize("seed", [0, 1, 7])
def test_scan_pairs_independent_of_probe(seed):
    g = make_grid(1, 0, np.pi, 65)
    H = assemble(g, laplacian_scale=1.0)
    pairs, _ = eigen.eigenpairs_from_scan(H, np.arange(0.25, 10, 0.1),
                                          probe=eigen.default_probes(g, seed=seed))
    h = g.spacing[0]
    exact = 2 / h ** 2 * (1 - np.cos(h * np.arange(1, 64)))
    got = np.array([p.lam for p in pairs])
    # a probe may flag an extra minimum; every pair found must still be genuine
    assert np.allclose(got[:3], exact[:3], rtol=1e-10)
    assert all(np.min(np.abs(exact - lam)) < 1e-10 * lam for lam in got)
    assert all(p.converged for p in pairs)


@pytest.mark.parametrize("b", [0.0, 70.0])
def test_block_matches_dense(desk33, b):
    H = _desk_H(desk33, b)
    dense = sla.eigh(H.to_sparse().toarray(), eigvals_only=True, subset_by_index=[0, 4])
    pairs = eigen.lowest_eigenpairs(H, 5)
    got = np.array([p.lam for p in pairs])
    assert np.allclose(got, dense, rtol=1e-8, atol=0)
    assert all(p.converged and p.residual <= 1e-9 for p in pairs)
    assert all(abs(p.imag) < 1e-8 * p.lam for p in pairs)


def test_frozen_desk_eigenvalues(desk33):
    pairs = eigen.lowest_eigenpairs(_desk_H(desk33, 70.0), 3)
    assert [p.lam for p in pairs] == pytest.approx(
        [11918.377344741952, 11985.484783105656, 12210.03437110324], rel=1e-10)


def test_inverse_power_with_deflation(desk33):
    H = _desk_H(desk33, 70.0)
    # seeds as a monitor scan would provide them: closer to one eigenvalue than to the next
    p1 = eigen.inverse_power(H, 11910.0)
    assert p1.lam == pytest.approx(11918.377344741952, rel=1e-10)
    p2 = eigen.inverse_power(H, 11910.0, deflate=[p1])
    assert p2.lam == pytest.approx(11985.484783105656, rel=1e-10)
    ov = abs(np.vdot(p1.phi.interior().ravel(), p2.phi.interior().ravel()))
    assert ov < 1e-6 * np.linalg.norm(p1.phi.values) * np.linalg.norm(p2.phi.values)


def test_phase_normalization(desk33):
    p = eigen.lowest_eigenpairs(_desk_H(desk33, 70.0), 1)[0]
    k = np.argmax(np.abs(p.phi.values))
    assert p.phi.values.flat[k] == pytest.approx(1.0, abs=1e-14)


def test_inverse_power_reports_nonconvergence(desk33):
    H = _desk_H(desk33, 70.0)
    p = eigen.inverse_power(H, 11000.0, tol=1e-30, max_iter=4)
    assert not p.converged and p.iterations == 4
    assert np.isfinite(p.lam)


def test_lower_bound_is_below_spectrum(desk33):
    for b in (0.0, 140.0):
        H = _desk_H(desk33, b)
        lam1 = eigen.lowest_eigenpairs(H, 1)[0].lam
        assert eigen.spectral_lower_bound(H) <= lam1


def _interval(n=129):
    g = make_grid(1, 0, np.pi, n)
    return g, assemble(g, laplacian_scale=1.0)


def test_scan_minima_spec_grid():
    g, H = _interval()
    lams = np.arange(0.5, 10.5 + 1e-9, 0.05)
    mins = np.array(eigen.scan_minima(eigen.scan_monitor(H, eigen.default_probes(g), lams)))
    assert len(mins) == 3
    assert np.all(np.abs(mins - [1.0, 4.0, 9.0]) <= 0.05 + 0.01)


def test_scan_monotone_and_straddle():
    g, H = _interval()
    probe = eigen.default_probes(g)
    assert eigen.scan_minima(eigen.scan_monitor(H, probe, np.linspace(1.5, 3.0, 16))) == []
    pts = eigen.scan_monitor(H, probe, np.linspace(0.5, 1.5, 21))
    assert len(eigen.scan_minima(pts)) == 1
    assert not pts[0].is_minimum and not pts[-1].is_minimum


def test_minima_locations_probe_independent():
    g, H = _interval()
    lams = np.arange(0.5, 10.5 + 1e-9, 0.05)
    a = eigen.scan_minima(eigen.scan_monitor(H, eigen.default_probes(g, seed=1), lams))
    b = eigen.scan_minima(eigen.scan_monitor(H, eigen.default_probes(g, seed=2), lams))
    assert len(a) == len(b) and np.all(np.abs(np.array(a) - b) <= 0.05 + 1e-12)


def test_inverse_power_interval_ground_state():
    g, H = _interval(257)
    h = g.spacing[0]
    p = eigen.inverse_power(H, 0.9, tol=1e-10)
    assert p.converged and abs(p.lam - 1.0) <= h * h
    assert abs(p.imag) < 1e-10
    assert np.max(np.abs(np.abs(p.phi.values) - np.sin(g.coords(0)))) <= h * h
    assert p.phi.values[0] == 0 and p.phi.values[-1] == 0
    # restarting at the converged value is a fixed point
    q = eigen.inverse_power(H, p.lam, tol=1e-10)
    assert q.converged and q.lam == pytest.approx(p.lam, rel=1e-12)
