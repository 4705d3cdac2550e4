"""Pure-numpy fallback for the path-walking kernels.

Same signatures and random streams as the compiled ``_kernels`` module;
vectorized over paths, looping over time steps.
"""

import numpy as np

from . import rng

NAME = "python"


def _interp(values, lo, h, pos):
    d = pos.shape[1]
    if d == 1:
        n = values.shape[0]
        s = np.clip((pos[:, 0] - lo[0]) / h[0], 0.0, n - 1)
        i = np.minimum(np.floor(s).astype(np.intp), n - 2)
        f = s - i
        return (1 - f) * values[i] + f * values[i + 1]
    n0, n1 = values.shape
    s0 = np.clip((pos[:, 0] - lo[0]) / h[0], 0.0, n0 - 1)
    s1 = np.clip((pos[:, 1] - lo[1]) / h[1], 0.0, n1 - 1)
    i = np.minimum(np.floor(s0).astype(np.intp), n0 - 2)
    j = np.minimum(np.floor(s1).astype(np.intp), n1 - 2)
    fx = s0 - i
    fy = s1 - j
    return ((1 - fx) * (1 - fy) * values[i, j] + fx * (1 - fy) * values[i + 1, j]
            + (1 - fx) * fy * values[i, j + 1] + fx * fy * values[i + 1, j + 1])


def _step_normals(keys, step, d):
    """Normals for ``step`` on every axis: flat draw k = step*d + axis."""
    return [rng.std_normal(keys, np.uint64(step * d + axis)) for axis in range(d)]


def walk(x0, lo, hi, field_lo, field_h, V, A0, A1, divA, step_dt, checkpoints,
         seed, path_start, n_paths, scale, kill, bridge, midpoint,
         out_sv, out_w, out_phase, out_pos, threads=1, trapezoid=False):
    d = len(x0)
    magnetic = A0 is not None
    keys = rng.stream_keys(seed, rng.PATH_STREAM_BASE + path_start + np.arange(n_paths, dtype=np.uint64))
    pos = np.tile(np.asarray(x0, dtype=float), (n_paths, 1))
    sv = np.zeros(n_paths)
    w = np.ones(n_paths)
    phase = np.zeros(n_paths)
    alive = np.ones(n_paths, dtype=bool)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    ck = 0
    n_ck = len(checkpoints)
    vcur = _interp(V, field_lo, field_h, pos)
    for step in range(int(checkpoints[-1])):
        dt = step_dt[step]
        sig = np.sqrt(2.0 * scale * dt)
        z = _step_normals(keys, step, d)
        dx = np.stack([sig * zz for zz in z], axis=1)
        new = pos + dx
        vnew = _interp(V, field_lo, field_h, new)
        inc = 0.5 * (vcur + vnew) * dt if trapezoid else vcur * dt
        sv = sv + np.where(alive, inc, 0.0)
        if magnetic:
            where = 0.5 * (pos + new) if midpoint else pos
            comps = [A0, A1][:d]
            adw = sum(_interp(c, field_lo, field_h, where) * dx[:, a] for a, c in enumerate(comps))
            dphi = adw + scale * _interp(divA, field_lo, field_h, pos) * dt
            phase = phase + np.where(alive, dphi, 0.0)
        if kill:
            inside = np.all((new > lo) & (new < hi), axis=1)
            if bridge:
                inv = 1.0 / (scale * dt)
                for a in range(d):
                    p_lo = np.exp(-(pos[:, a] - lo[a]) * (new[:, a] - lo[a]) * inv)
                    p_hi = np.exp(-(hi[a] - pos[:, a]) * (hi[a] - new[:, a]) * inv)
                    w = np.where(inside & alive, w * (1.0 - p_lo) * (1.0 - p_hi), w)
            w = np.where(alive & ~inside, 0.0, w)
            keep = alive & inside
            new = np.where(keep[:, None], new, pos)
            vnew = np.where(keep, vnew, vcur)
            alive = keep
        pos = new
        vcur = vnew
        while ck < n_ck and step + 1 == checkpoints[ck]:
            out_sv[:, ck] = sv
            out_w[:, ck] = w
            if out_phase is not None:
                out_phase[:, ck] = phase
            if out_pos is not None:
                out_pos[:, ck, :] = pos
            ck += 1


def exit_times(d, r, dt, max_steps, seed, n_paths, out, threads=1):
    keys = rng.stream_keys(seed, rng.PATH_STREAM_BASE + np.arange(n_paths, dtype=np.uint64))
    pos = np.zeros((n_paths, d))
    out[:] = np.inf
    alive = np.ones(n_paths, dtype=bool)
    sig = np.sqrt(dt)
    r2 = r * r
    for step in range(max_steps):
        z = _step_normals(keys, step, d)
        pos = pos + sig * np.stack(z, axis=1)
        exited = alive & (np.sum(pos * pos, axis=1) >= r2)
        out[exited] = (step + 1) * dt
        alive &= ~exited
        if not alive.any():
            break
