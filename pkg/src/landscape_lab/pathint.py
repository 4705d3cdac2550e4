"""Monte Carlo estimators over Brownian paths.

Paths are Euler-Maruyama walks with increments Normal(0, 2 * scale * dt)
per axis, i.e. generated by ``scale * Laplacian`` (scale 1/2 is the
probabilistic normalization).  Each path accumulates the left-endpoint
potential integral S_V, a survival weight (0/1 from the per-step inside
test, optionally multiplied by the Brownian-bridge non-crossing
probability of every wall), and for magnetic runs the real action

    Phi = sum A(w_k) . dw_k + scale * sum (div A)(w_k) dt,

so that the Feynman-Kac weight is chi * exp(-i Phi - S_V).
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np

from . import _backend
from .errors import ConfigError
from .grid import Grid, bilinear, sine_interpolant

CHUNK_PATHS = 8192


@dataclass(frozen=True)
class PathConfig:
    n_paths: int
    dt: float
    t_grid: tuple
    seed: int = 0
    bridge_correction: bool = False
    laplacian_scale: float = 0.5
    snap_to_dt: bool = True
    requested_t_grid: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.n_paths < 2:
            raise ConfigError("n_paths must be >= 2")
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if not self.laplacian_scale > 0:
            raise ConfigError("laplacian_scale must be positive")
        req = tuple(sorted(float(t) for t in np.atleast_1d(self.t_grid)))
        if not req or req[0] <= 0:
            raise ConfigError("t_grid must be a non-empty list of positive times")
        if self.snap_to_dt:
            steps = sorted({max(1, int(round(t / self.dt))) for t in req})
            ts = tuple(k * self.dt for k in steps)
        else:
            ts = tuple(sorted(set(req)))
        object.__setattr__(self, "t_grid", ts)
        if not self.requested_t_grid:
            object.__setattr__(self, "requested_t_grid", req)

    def schedule(self):
        """Per-step sizes and the step counts at which each t is reached."""
        if self.snap_to_dt:
            counts = np.array([int(round(t / self.dt)) for t in self.t_grid], dtype=np.int64)
            return np.full(int(counts[-1]), self.dt), counts
        sizes, counts, total, prev = [], [], 0, 0.0
        for t in self.t_grid:
            span = t - prev
            n = max(1, int(math.ceil(span / self.dt * (1 - 1e-12))))
            sizes.append(np.full(n, span / n))
            total += n
            counts.append(total)
            prev = t
        return np.concatenate(sizes), np.array(counts, dtype=np.int64)

    def with_times(self, t_grid):
        return replace(self, t_grid=tuple(t_grid), requested_t_grid=())

    def to_dict(self):
        return {"n_paths": self.n_paths, "dt": self.dt, "t_grid": list(self.t_grid),
                "requested_t_grid": list(self.requested_t_grid), "seed": self.seed,
                "bridge_correction": self.bridge_correction,
                "laplacian_scale": self.laplacian_scale, "snap_to_dt": self.snap_to_dt}


@dataclass
class PathSample:
    t: np.ndarray
    sv: np.ndarray  # (n_paths, n_t) potential integrals
    w: np.ndarray  # (n_paths, n_t) survival weights
    phase: np.ndarray = None  # (n_paths, n_t) magnetic action Phi
    pos: np.ndarray = None  # (n_paths, n_t, d) positions


@dataclass(frozen=True)
class BoundEstimate:
    x0: tuple
    t: float
    mean: float
    stderr: float
    n_alive: int
    n_paths: int


@dataclass(frozen=True)
class BoundProfile:
    x0: tuple
    lam: float
    estimates: tuple

    def times(self):
        return np.array([e.t for e in self.estimates])

    def means(self):
        return np.array([e.mean for e in self.estimates])

    def stderrs(self):
        return np.array([e.stderr for e in self.estimates])

    def envelope_min(self):
        """The estimate with the smallest mean (first one on ties)."""
        return self.estimates[int(np.argmin(self.means()))]

    def rows(self):
        return [(*self.x0, e.t, e.mean, e.stderr, e.n_alive, e.n_paths, self.lam)
                for e in self.estimates]


@dataclass(frozen=True)
class LandscapeEstimate:
    x0: tuple
    mean: float
    lower: float
    upper: float
    stderr: float
    tail_bound: float
    t_max: float

    def contains(self, value):
        return self.lower <= value <= self.upper


@dataclass(frozen=True)
class PropagatorEstimate:
    x0: tuple
    t: float
    value: complex
    stderr: float
    n_alive: int
    n_paths: int


@dataclass(frozen=True)
class RegularizedSup:
    x0: tuple
    t_star: float
    value: float
    stderr: float
    t: np.ndarray
    values: np.ndarray
    stderrs: np.ndarray


@dataclass(frozen=True)
class Theorem3Record:
    x0: tuple
    lhs: float
    stderr: float
    rhs: float
    u: float
    r: float
    t_star: float
    margin: float
    passed: bool


def moments(values, axis=0):
    """Sample mean and standard error along ``axis``."""
    values = np.asarray(values)
    n = values.shape[axis]
    mean = np.mean(values, axis=axis)
    if np.iscomplexobj(values):
        var = np.var(values.real, axis=axis, ddof=1) + np.var(values.imag, axis=axis, ddof=1)
    else:
        var = np.var(values, axis=axis, ddof=1)
    se = np.sqrt(var / n)
    if np.ndim(mean) == 0:
        return (complex(mean) if np.iscomplexobj(values) else float(mean)), float(se)
    return mean, se


def _domain_bounds(domain, dim):
    if isinstance(domain, Grid):
        return np.array(domain.lower, dtype=float), np.array(domain.upper, dtype=float)
    lo, hi = domain
    return (np.broadcast_to(np.asarray(lo, dtype=float), (dim,)).copy(),
            np.broadcast_to(np.asarray(hi, dtype=float), (dim,)).copy())


def _check_x0(x0, lo, hi):
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.shape != lo.shape:
        raise ConfigError(f"x0 must have {len(lo)} coordinates")
    if not (np.all(x0 > lo) and np.all(x0 < hi)):
        raise ConfigError(f"x0 = {x0.tolist()} is not strictly inside the domain")
    return x0


def iter_path_chunks(V, x0, config, domain=None, kill=True, A=None, div_A=None, midpoint=False,
                     want_positions=False, chunk=CHUNK_PATHS, threads=None, backend=None,
                     trapezoid=False):
    """Yield PathSample blocks of at most ``chunk`` paths, in path-index order."""
    grid = V.grid
    dim = grid.dim
    lo, hi = _domain_bounds(domain if domain is not None else grid, dim)
    x0 = _check_x0(x0, lo, hi)
    kern = _backend.get_kernels(backend)
    threads = threads or _backend.default_threads()
    step_dt, cks = config.schedule()
    magnetic = A is not None
    if magnetic:
        if A.grid != grid:
            raise ConfigError("A must share V's grid")
        if div_A is None:
            raise ConfigError("div_A is required together with A")
        comps = [c.values for c in A.components]
        a0 = comps[0]
        a1 = comps[1] if dim == 2 else None
        dv = div_A.values
    else:
        a0 = a1 = dv = None
    flo = np.array(grid.lower, dtype=float)
    fh = np.array(grid.spacing, dtype=float)
    n_t = len(cks)
    for start in range(0, config.n_paths, chunk):
        n = min(chunk, config.n_paths - start)
        sv = np.zeros((n, n_t))
        w = np.zeros((n, n_t))
        phase = np.zeros((n, n_t)) if magnetic else None
        pos = np.zeros((n, n_t, dim)) if want_positions else None
        kern.walk(x0, lo, hi, flo, fh, V.values, a0, a1, dv, step_dt, cks,
                  int(config.seed), start, n, float(config.laplacian_scale), bool(kill),
                  bool(config.bridge_correction and kill), bool(midpoint), sv, w, phase, pos,
                  threads=threads, trapezoid=bool(trapezoid))
        yield PathSample(np.array(config.t_grid), sv, w, phase, pos)


def run_paths(V, x0, config, domain=None, **kw):
    """All per-path accumulators for ``config.n_paths`` paths started at ``x0``."""
    parts = list(iter_path_chunks(V, x0, config, domain=domain, **kw))
    cat = lambda name: (None if getattr(parts[0], name) is None
                        else np.concatenate([getattr(p, name) for p in parts]))
    return PathSample(parts[0].t, cat("sv"), cat("w"), cat("phase"), cat("pos"))


def theorem2_bound(V, x0, lam, config, domain=None, **kw):
    """E[chi exp(lam t - S_V)] with standard errors for every t in the grid.

    Consumes only V: the magnetic potential never enters this estimator.
    """
    if lam < 0:
        raise ConfigError("lambda must be >= 0")
    s = run_paths(V, x0, config, domain=domain, **kw)
    expo = np.minimum(lam * s.t[None, :] - s.sv, 700.0)
    vals = s.w * np.exp(expo)
    mean, se = moments(vals)
    alive = np.count_nonzero(s.w > 0, axis=0)
    x0t = tuple(float(c) for c in np.atleast_1d(x0))
    est = tuple(BoundEstimate(x0t, float(t), float(m), float(e), int(a), config.n_paths)
                for t, m, e, a in zip(s.t, mean, se, alive))
    return BoundProfile(x0t, float(lam), est)


def _sup_expected_exit(lo, hi, scale):
    # E_y tau_box <= E_y tau_slab <= L^2 / (8 scale) on the narrowest axis
    return float(np.min((hi - lo) ** 2) / (8.0 * scale))


def landscape_via_paths(V, x0, config, domain=None, V_min=None, n_sigma=3.0, **kw):
    """Estimate int_0^inf E[chi exp(-S_V(t))] dt, which equals the landscape u(x0).

    Each path's integrand is nonincreasing in t, so its left and right
    Riemann sums on ``[0] + t_grid`` bracket its integral; beyond the last
    time the tail is at most f(T) * min(1 / V_min, sup E tau).
    """
    grid = V.grid
    lo, hi = _domain_bounds(domain if domain is not None else grid, grid.dim)
    if V_min is None:
        V_min = float(np.min(V.values))
    k_tail = _sup_expected_exit(lo, hi, config.laplacian_scale)
    if V_min > 0:
        k_tail = min(k_tail, 1.0 / V_min)
    t = np.array(config.t_grid)
    dts = np.diff(np.concatenate([[0.0], t]))
    left, right, trap, ftail = [], [], [], []
    f_means = np.zeros(len(t))
    for s in iter_path_chunks(V, x0, config, domain=domain, **kw):
        f = s.w * np.exp(-s.sv)
        fprev = np.concatenate([np.ones((f.shape[0], 1)), f[:, :-1]], axis=1)
        left.append(fprev @ dts)
        right.append(f @ dts)
        trap.append(0.5 * (fprev + f) @ dts)
        ftail.append(f[:, -1])
        f_means += f.sum(axis=0)
    left, right, trap, ftail = (np.concatenate(x) for x in (left, right, trap, ftail))
    f_means /= config.n_paths
    fT = float(np.mean(ftail))
    # point estimate of the tail: exponential extrapolation from the last two
    # times when it decays, else half of the rigorous tail bound
    tail_est = 0.5 * fT * k_tail
    if len(t) >= 2 and f_means[-1] > 0 and f_means[-2] > f_means[-1]:
        rate = math.log(f_means[-2] / f_means[-1]) / (t[-1] - t[-2])
        tail_est = min(fT / rate, fT * k_tail)
    m_trap, se_trap = moments(trap)
    m_trap += tail_est
    m_right, se_right = moments(right)
    m_up, se_up = moments(left + k_tail * ftail)
    x0t = tuple(float(c) for c in np.atleast_1d(x0))
    return LandscapeEstimate(x0t, m_trap, m_right - n_sigma * se_right, m_up + n_sigma * se_up,
                             se_trap, fT * k_tail, float(t[-1]))


def propagator_mc(V, psi, x0, t, config, A=None, div_A=None, midpoint=False, domain=None,
                  interp="bilinear", **kw):
    """Feynman-Kac estimate of [exp(-t H(A, V)) psi](x0).

    ``psi`` is evaluated at path end points bilinearly, or with
    ``interp="sine"`` through its discrete sine series (smooth between
    nodes; needs psi = 0 on the boundary of psi.grid).  When the path spread
    sqrt(t) is comparable to the grid spacing, the kinks of the bilinear
    interpolant bias the estimate at first order in the spread.  With
    ``midpoint=True`` the A.dw sum is evaluated at step midpoints while the
    divergence term is kept, which double counts the Ito correction; it
    exists only as a cross-check of the discretization sensitivity.
    """
    cfg = config if np.isclose(config.t_grid[-1], t) and len(config.t_grid) == 1 else config.with_times([t])
    s = run_paths(V, x0, cfg, domain=domain, A=A, div_A=div_A, midpoint=midpoint,
                  want_positions=True, **kw)
    if interp not in ("bilinear", "sine"):
        raise ConfigError("interp must be 'bilinear' or 'sine'")
    end = s.pos[:, -1, :]
    alive = s.w[:, -1] > 0
    pvals = np.zeros(len(end), dtype=np.complex128)
    f = bilinear if interp == "bilinear" else sine_interpolant
    pvals[alive] = f(psi.grid, psi.values, end[alive])
    weight = s.w[:, -1] * np.exp(-s.sv[:, -1])
    if s.phase is not None:
        weight = weight * np.exp(-1j * s.phase[:, -1])
    vals = weight * pvals
    mean, se = moments(vals.astype(np.complex128))
    x0t = tuple(float(c) for c in np.atleast_1d(x0))
    return PropagatorEstimate(x0t, float(cfg.t_grid[-1]), mean, se,
                              int(np.count_nonzero(s.w[:, -1] > 0)), cfg.n_paths)


def regularized_potential_sup(V, x0, config, domain=None, **kw):
    """argmax over the t grid of E (1/t) int_0^t V(w(s)) ds on free (unkilled) paths.

    V is clamped to its edge values outside the grid, so build it on a box
    that covers the paths' reach.  The time integral uses the trapezoid rule
    (the left-endpoint sum is biased by O(dt / t)).
    """
    kw.setdefault("trapezoid", True)
    s = run_paths(V, x0, config, domain=domain, kill=False, **kw)
    avg = s.sv / s.t[None, :]
    mean, se = moments(avg)
    k = int(np.argmax(mean))
    x0t = tuple(float(c) for c in np.atleast_1d(x0))
    return RegularizedSup(x0t, float(s.t[k]), float(mean[k]), float(se[k]), s.t, mean, se)


def theorem3_check(V, u, x0, config, c_d, V_min, domain=None, n_sigma=3.0, **kw):
    """Compare sup_t E(1/t) int V against 1 / (u(x0) + c_d exp(-sqrt(V_min) r)).

    ``domain`` is the Dirichlet box (defaults to ``u.grid``); ``V`` may live on
    a larger grid so that free paths see the potential beyond the box.
    """
    if not V_min > 0:
        raise ConfigError("the regularized-potential check requires inf V > 0")
    box = domain if domain is not None else u.grid
    lo, hi = _domain_bounds(box, u.grid.dim)
    x0 = _check_x0(x0, lo, hi)
    r = float(np.min(np.minimum(x0 - lo, hi - x0)))
    uval = float(bilinear(u.grid, u.values, x0[None, :])[0])
    sup = regularized_potential_sup(V, x0, config, domain=(lo, hi), **kw)
    rhs = 1.0 / (uval + c_d * math.exp(-math.sqrt(V_min) * r))
    margin = sup.value + n_sigma * sup.stderr - rhs
    return Theorem3Record(tuple(float(c) for c in x0), sup.value, sup.stderr, rhs, uval, r,
                          sup.t_star, margin, bool(margin >= 0))


def exit_times(d, r, dt, max_steps, seed, n_paths, threads=None, backend=None):
    """First step-end time with |w| >= r for walks from the origin (generator Lap/2).

    Unexited paths get ``inf``.
    """
    kern = _backend.get_kernels(backend)
    out = np.empty(int(n_paths))
    kern.exit_times(int(d), float(r), float(dt), int(max_steps), int(seed), int(n_paths), out,
                    threads=threads or _backend.default_threads())
    return out
