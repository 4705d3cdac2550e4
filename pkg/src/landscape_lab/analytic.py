"""Closed-form oracles: the interval example and Brownian exit laws on balls.

The interval example on [0, pi] uses the plain -Laplacian normalization:
phi_1 = sin x, lambda_1 = 1, u = x (pi - x) / 2 and the survival series
(4 e^{lambda t} / pi) sum_{k odd} e^{-k^2 t} sin(k x0) / k.
The ball exit law is for Brownian motion with generator Laplacian / 2.
"""

from dataclasses import dataclass
import math

import numpy as np

from .errors import ConfigError

BESSEL_SERIES_MAX = 12.0


@dataclass(frozen=True)
class SeriesParams:
    t: float
    x0: float
    n_terms: int = 200

    def __post_init__(self):
        if self.n_terms < 1:
            raise ConfigError("n_terms must be >= 1")
        if not self.t > 0:
            raise ConfigError("t must be positive")
        if not 0 < self.x0 < math.pi:
            raise ConfigError("x0 must lie in (0, pi)")


@dataclass(frozen=True)
class SeriesValue:
    value: float
    truncation_bound: float
    n_terms: int


@dataclass(frozen=True)
class IntervalForms:
    phi1: float
    lambda1: float
    u: float
    sandwich_ok: bool


def _odd_tail_bound(k_first, t):
    # sum_{k odd >= K} e^{-k^2 t} / k <= e^{-K^2 t} / (K (1 - e^{-4 K t}))
    return math.exp(-k_first * k_first * t) / (k_first * -math.expm1(-4.0 * k_first * t))


def interval_series_bound(params, lam=1.0, tol=1e-14, max_terms=10 ** 7):
    """Right-hand side of the path-integral bound on [0, pi] with V = 0.

    Uses at least ``params.n_terms`` odd terms and extends the sum until the
    truncation bound drops below ``tol`` (relative to the prefactor).
    """
    t, x0 = params.t, params.x0
    n = params.n_terms
    while _odd_tail_bound(2 * n + 1, t) > tol and n < max_terms:
        n *= 2
    k = np.arange(1, 2 * n, 2, dtype=np.float64)
    s = float(np.sum(np.exp(-k * k * t) * np.sin(k * x0) / k))
    pref = 4.0 * math.exp(lam * t) / math.pi
    return SeriesValue(pref * s, pref * _odd_tail_bound(2 * n + 1, t), n)


def interval_closed_forms(x):
    if not 0.0 <= x <= math.pi:
        raise ValueError("x must lie in [0, pi]")
    phi = math.sin(x)
    u = x * (math.pi - x) / 2.0
    middle = min(1.0, 4.0 / math.pi * phi)
    slack = 4 * np.finfo(float).eps
    ok = phi <= middle + slack and middle <= u + slack
    if not ok:
        raise AssertionError(f"sandwich violated at x = {x}: {phi}, {middle}, {u}")
    return IntervalForms(phi, 1.0, u, ok)


def convert_normalization(from_scale, to_scale, lam=None, V=None, u=None):
    """Translate (lambda, V, u) between -from_scale*Lap and -to_scale*Lap.

    (-a Lap + V) phi = lambda phi  <=>  (-b Lap + (b/a) V) phi = (b/a) lambda phi,
    and the landscape scales by a/b; the product lambda * u is unchanged.
    """
    r = to_scale / from_scale
    out = {}
    if lam is not None:
        out["lam"] = lam * r
    if V is not None:
        out["V"] = V * r
    if u is not None:
        out["u"] = u / r
    return out


def bessel_i_series(nu, z):
    """I_nu(z) from its power series (all terms positive for nu > -1)."""
    if z == 0:
        return 1.0 if nu == 0 else (0.0 if nu > 0 else math.inf)
    q = 0.25 * z * z
    term = math.exp(nu * math.log(0.5 * z) - math.lgamma(nu + 1.0))
    total = term
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + nu))
        total += term
        if term < 1e-17 * total:
            return total


def _hankel_sums(nu, z):
    """Optimally truncated sums sum (-1)^k a_k / z^k and sum a_k / z^k."""
    mu = 4.0 * nu * nu
    a = 1.0
    alt, plain = 1.0, 1.0
    prev = math.inf
    k = 0
    while True:
        k += 1
        a *= (mu - (2 * k - 1) ** 2) / (8.0 * k * z)
        if a == 0.0:
            break
        if abs(a) >= prev:
            break
        alt += (-1) ** k * a
        plain += a
        prev = abs(a)
        if prev < 1e-17:
            break
    return alt, plain


def log_bessel_i(nu, z):
    """log I_nu(z) for z > 0."""
    if z <= BESSEL_SERIES_MAX:
        return math.log(bessel_i_series(nu, z))
    alt, plain = _hankel_sums(nu, z)
    stokes = math.cos(math.pi * (nu + 0.5)) * math.exp(-2.0 * z) * plain
    return z - 0.5 * math.log(2.0 * math.pi * z) + math.log(alt + stokes)


def bessel_i(nu, z):
    if z <= BESSEL_SERIES_MAX:
        return bessel_i_series(nu, z)
    return math.exp(log_bessel_i(nu, z))


def bessel_i_asymptotic(nu, z):
    alt, plain = _hankel_sums(nu, z)
    stokes = math.cos(math.pi * (nu + 0.5)) * math.exp(-2.0 * z) * plain
    return math.exp(z) / math.sqrt(2.0 * math.pi * z) * (alt + stokes)


def exit_time_laplace_ball(r, lam, d, log=False):
    """E exp(-lam * tau) for Brownian motion (generator Lap/2) leaving B_r from its centre.

    Equals (z/2)^nu / (Gamma(nu+1) I_nu(z)) with z = r sqrt(2 lam), nu = d/2 - 1.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if d not in (1, 2, 3):
        raise ValueError("d must be 1, 2 or 3")
    if lam == 0:
        return 0.0 if log else 1.0
    nu = d / 2.0 - 1.0
    z = r * math.sqrt(2.0 * lam)
    lv = nu * math.log(0.5 * z) - math.lgamma(nu + 1.0) - log_bessel_i(nu, z)
    lv = min(lv, 0.0)
    return lv if log else math.exp(lv)


def mc_exit_time_laplace(r, lams, d, n_paths, dt, seed=0, horizon=None, threads=None):
    """Monte Carlo E exp(-lam * tau) on shared paths for each lam in ``lams``.

    Exit is detected at step ends only (no bridge correction), which biases
    tau upwards by O(sqrt(dt)).  Paths still inside at ``horizon`` contribute
    their horizon weight and are counted in ``n_unexited``.
    """
    from .pathint import exit_times, moments

    if horizon is None:
        horizon = 40.0 * r * r / d
    tau = exit_times(d, r, dt, int(math.ceil(horizon / dt)), seed, n_paths, threads=threads)
    unexited = ~np.isfinite(tau)
    tau = np.where(unexited, horizon, tau)
    out = []
    for lam in np.atleast_1d(lams):
        mean, se = moments(np.exp(-lam * tau))
        out.append({"lam": float(lam), "mean": mean, "stderr": se,
                    "n_unexited": int(unexited.sum()), "n_paths": int(n_paths)})
    return out
