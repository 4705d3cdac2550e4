import math

import numpy as np
import pytest
from scipy import special

from landscape_lab import analytic
from landscape_lab.errors import ConfigError


@pytest.mark.parametrize("nu", [-0.5, 0.0, 0.5, 1.0, 2.5])
@pytest.mark.parametrize("z", [1e-3, 0.7, 5.0, 11.9, 12.1, 30.0, 200.0])
def test_bessel_against_scipy(nu, z):
    assert analytic.log_bessel_i(nu, z) == pytest.approx(math.log(special.iv(nu, z)), rel=1e-12, abs=1e-13)


def test_bessel_half_order_closed_form():
    z = 3.0
    assert analytic.bessel_i(0.5, z) == pytest.approx(math.sqrt(2 / (math.pi * z)) * math.sinh(z), rel=1e-14)
    assert analytic.bessel_i(-0.5, z) == pytest.approx(math.sqrt(2 / (math.pi * z)) * math.cosh(z), rel=1e-14)


@pytest.mark.parametrize("r, lam", [(1.0, 0.5), (0.3, 10.0), (2.0, 40.0)])
def test_exit_law_closed_forms(r, lam):
    z = r * math.sqrt(2 * lam)
    assert analytic.exit_time_laplace_ball(r, lam, 1) == pytest.approx(1 / math.cosh(z), rel=1e-12)
    assert analytic.exit_time_laplace_ball(r, lam, 3) == pytest.approx(z / math.sinh(z), rel=1e-12)
    assert analytic.exit_time_laplace_ball(r, lam, 2) == pytest.approx(1 / special.iv(0, z), rel=1e-12)


def test_exit_law_frozen_and_edges():
    assert analytic.exit_time_laplace_ball(1.0, 2.0, 2) == pytest.approx(0.4386762798370488, rel=1e-14)
    assert analytic.exit_time_laplace_ball(1.0, 0.0, 2) == 1.0
    # huge arguments stay finite in log form
    lv = analytic.exit_time_laplace_ball(10.0, 1e6, 2, log=True)
    assert math.isfinite(lv) and lv < -1e4
    with pytest.raises(ValueError):
        analytic.exit_time_laplace_ball(1.0, 1.0, 4)


def test_series_bound_dominates_eigenfunction():
    for x0 in (0.1, 1.0, math.pi / 2, 3.0):
        for t in (0.01, 0.3, 3.0):
            s = analytic.interval_series_bound(analytic.SeriesParams(t, x0))
            assert s.value + s.truncation_bound >= math.sin(x0)
            assert s.truncation_bound < 1e-12


def test_series_large_t_limit():
    s = analytic.interval_series_bound(analytic.SeriesParams(40.0, 1.2))
    assert s.value == pytest.approx(4 / math.pi * math.sin(1.2), abs=1e-12)


def test_series_small_t_tends_to_one():
    # at small t the survival probability from the middle is ~1
    s = analytic.interval_series_bound(analytic.SeriesParams(1e-3, math.pi / 2))
    assert s.value == pytest.approx(math.exp(1e-3), rel=1e-9)
    assert s.n_terms >= 200 and s.truncation_bound < 1e-14


@pytest.mark.parametrize("kw", [dict(t=0, x0=1), dict(t=1, x0=0), dict(t=1, x0=4), dict(t=1, x0=1, n_terms=0)])
def test_series_params_validation(kw):
    with pytest.raises(ConfigError):
        analytic.SeriesParams(**kw)


def test_closed_forms_sandwich():
    for x in np.linspace(0, math.pi, 101):
        f = analytic.interval_closed_forms(float(x))
        assert f.sandwich_ok
    with pytest.raises(ValueError):
        analytic.interval_closed_forms(4.0)


def test_normalization_roundtrip():
    out = analytic.convert_normalization(1.0, 0.5, lam=1.0, V=np.array([2.0]), u=3.0)
    assert out["lam"] == 0.5 and out["V"][0] == 1.0 and out["u"] == 6.0
    assert out["lam"] * out["u"] == 1.0 * 3.0
