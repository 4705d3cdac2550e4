# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled path-walking kernels.

One path per outer iteration (``prange`` over paths); each path owns a
counter-based stream, so results do not depend on the thread count.
Mirrors ``_kernels_py`` exactly in its random stream layout.
"""

from cython.parallel import prange, parallel
from libc.math cimport sqrt, log, exp, floor, INFINITY
from libc.stdint cimport uint64_t
from libc.stdlib cimport malloc, free

import numpy as np

NAME = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t M1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t M2 = 0x94D049BB133111EBULL
cdef uint64_t PATH_BASE = (<uint64_t>1) << 32
cdef double INV_2_52 = 1.0 / 4503599627370496.0
cdef double P_LOW = 0.02425
cdef double A0 = -3.969683028665376e+01, A1 = 2.209460984245205e+02, A2 = -2.759285104469687e+02
cdef double A3 = 1.383577518672690e+02, A4 = -3.066479806614716e+01, A5 = 2.506628277459239e+00
cdef double B0 = -5.447609879822406e+01, B1 = 1.615858368580409e+02, B2 = -1.556989798598866e+02
cdef double B3 = 6.680131188771972e+01, B4 = -1.328068155288572e+01
cdef double C0 = -7.784894002430293e-03, C1 = -3.223964580411365e-01, C2 = -2.400758277161838e+00
cdef double C3 = -2.549732539343734e+00, C4 = 4.374664141464968e+00, C5 = 2.938163982698783e+00
cdef double D0 = 7.784695709041462e-03, D1 = 3.224671290700398e-01, D2 = 2.445134137142996e+00
cdef double D3 = 3.754408661907416e+00


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * M1
    z = (z ^ (z >> 27)) * M2
    return z ^ (z >> 31)


cdef inline uint64_t stream_key(uint64_t base, uint64_t stream) noexcept nogil:
    return mix64(base + (stream + 1) * GOLDEN)


cdef inline double std_normal(uint64_t key, uint64_t k) noexcept nogil:
    # Acklam's normal quantile of an open-interval uniform; matches rng.std_normal
    cdef double p = (<double>(mix64(key + (k + 1) * GOLDEN) >> 12) + 0.5) * INV_2_52
    cdef double q, r
    if p < P_LOW:
        q = sqrt(-2.0 * log(p))
        return ((((((C0 * q + C1) * q + C2) * q + C3) * q + C4) * q + C5)
                / ((((D0 * q + D1) * q + D2) * q + D3) * q + 1.0))
    if p > 1.0 - P_LOW:
        q = sqrt(-2.0 * log(1.0 - p))
        return -((((((C0 * q + C1) * q + C2) * q + C3) * q + C4) * q + C5)
                 / ((((D0 * q + D1) * q + D2) * q + D3) * q + 1.0))
    q = p - 0.5
    r = q * q
    return ((((((A0 * r + A1) * r + A2) * r + A3) * r + A4) * r + A5) * q
            / (((((B0 * r + B1) * r + B2) * r + B3) * r + B4) * r + 1.0))


cdef inline double no_cross(double arg) noexcept nogil:
    # 1 - exp(-arg) rounds to exactly 1.0 for arg > 40
    if arg > 40.0:
        return 1.0
    return 1.0 - exp(-arg)


cdef inline double interp1(const double* f, Py_ssize_t n0, double lo0, double h0, double x) noexcept nogil:
    cdef double s = (x - lo0) / h0
    cdef Py_ssize_t i
    if s < 0.0:
        s = 0.0
    elif s > n0 - 1:
        s = n0 - 1
    i = <Py_ssize_t>floor(s)
    if i > n0 - 2:
        i = n0 - 2
    s -= i
    return (1.0 - s) * f[i] + s * f[i + 1]


cdef inline double interp2(const double* f, Py_ssize_t n0, Py_ssize_t n1, double lo0, double lo1,
                           double h0, double h1, double x, double y) noexcept nogil:
    cdef double s0 = (x - lo0) / h0
    cdef double s1 = (y - lo1) / h1
    cdef Py_ssize_t i, j, k
    if s0 < 0.0:
        s0 = 0.0
    elif s0 > n0 - 1:
        s0 = n0 - 1
    if s1 < 0.0:
        s1 = 0.0
    elif s1 > n1 - 1:
        s1 = n1 - 1
    i = <Py_ssize_t>floor(s0)
    j = <Py_ssize_t>floor(s1)
    if i > n0 - 2:
        i = n0 - 2
    if j > n1 - 2:
        j = n1 - 2
    s0 -= i
    s1 -= j
    k = i * n1 + j
    return ((1.0 - s0) * (1.0 - s1) * f[k] + s0 * (1.0 - s1) * f[k + n1]
            + (1.0 - s0) * s1 * f[k + 1] + s0 * s1 * f[k + n1 + 1])


cdef inline double interp(const double* f, int d, Py_ssize_t n0, Py_ssize_t n1, double lo0, double lo1,
                          double h0, double h1, double x, double y) noexcept nogil:
    if d == 1:
        return interp1(f, n0, lo0, h0, x)
    return interp2(f, n0, n1, lo0, lo1, h0, h1, x, y)


def _as2d(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    return a


def walk(x0, lo, hi, field_lo, field_h, V, A0, A1, divA, step_dt, checkpoints,
         seed, path_start, n_paths, double scale, bint kill, bint bridge, bint midpoint,
         out_sv, out_w, out_phase, out_pos, int threads=1, bint trapezoid=False):
    cdef int d = len(x0)
    cdef bint magnetic = A0 is not None
    cdef bint want_phase = out_phase is not None
    cdef bint want_pos = out_pos is not None
    V2 = _as2d(V)
    cdef const double[:, ::1] mV = V2
    cdef const double[:, ::1] mA0 = _as2d(A0) if magnetic else V2
    cdef const double[:, ::1] mA1 = _as2d(A1) if (magnetic and A1 is not None) else V2
    cdef const double[:, ::1] mD = _as2d(divA) if magnetic else V2
    cdef const double* fV = &mV[0, 0]
    cdef const double* fA0 = &mA0[0, 0]
    cdef const double* fA1 = &mA1[0, 0]
    cdef const double* fD = &mD[0, 0]
    cdef Py_ssize_t n0 = mV.shape[0]
    cdef Py_ssize_t n1 = mV.shape[1]
    cdef const double[::1] sdt = np.ascontiguousarray(step_dt, dtype=np.float64)
    cdef const long long[::1] cks = np.ascontiguousarray(checkpoints, dtype=np.int64)
    cdef double[:, ::1] osv = out_sv
    cdef double[:, ::1] ow = out_w
    cdef double[:, ::1] oph = out_phase if want_phase else np.zeros((1, 1))
    cdef double[:, :, ::1] opos = out_pos if want_pos else np.zeros((1, 1, 1))
    cdef double x00 = x0[0]
    cdef double x01 = x0[1] if d == 2 else 0.0
    cdef double lo0 = lo[0]
    cdef double lo1 = lo[1] if d == 2 else 0.0
    cdef double hi0 = hi[0]
    cdef double hi1 = hi[1] if d == 2 else 0.0
    cdef double flo0 = field_lo[0]
    cdef double flo1 = field_lo[1] if d == 2 else 0.0
    cdef double fh0 = field_h[0]
    cdef double fh1 = field_h[1] if d == 2 else 1.0
    cdef uint64_t base = (<uint64_t>mix64((<uint64_t>seed) + GOLDEN))
    cdef uint64_t pstart = <uint64_t>path_start
    cdef Py_ssize_t npaths = n_paths
    cdef Py_ssize_t n_ck = cks.shape[0]
    cdef long long n_steps = cks[n_ck - 1]
    cdef Py_ssize_t p
    cdef long long step
    cdef Py_ssize_t ck, c2
    cdef uint64_t key
    cdef double x, y, nx, ny, dx, dy, dt, sig, sv, w, ph, inv, mx, my, vcur, vnew
    cdef bint alive
    if threads < 1:
        threads = 1

    with nogil, parallel(num_threads=threads):
        for p in prange(npaths, schedule="dynamic", chunksize=64):
            key = stream_key(base, PATH_BASE + pstart + <uint64_t>p)
            x = x00
            y = x01
            sv = 0.0
            w = 1.0
            ph = 0.0
            alive = True
            ck = 0
            step = 0
            vcur = interp(fV, d, n0, n1, flo0, flo1, fh0, fh1, x, y)
            while step < n_steps:
                dt = sdt[step]
                sig = sqrt(2.0 * scale * dt)
                if not trapezoid:
                    sv = sv + vcur * dt
                if d == 1:
                    dx = sig * std_normal(key, <uint64_t>step)
                    dy = 0.0
                else:
                    dx = sig * std_normal(key, <uint64_t>(2 * step))
                    dy = sig * std_normal(key, <uint64_t>(2 * step + 1))
                nx = x + dx
                ny = y + dy
                vnew = interp(fV, d, n0, n1, flo0, flo1, fh0, fh1, nx, ny)
                if trapezoid:
                    sv = sv + 0.5 * (vcur + vnew) * dt
                if magnetic:
                    if midpoint:
                        mx = 0.5 * (x + nx)
                        my = 0.5 * (y + ny)
                    else:
                        mx = x
                        my = y
                    ph = ph + interp(fA0, d, n0, n1, flo0, flo1, fh0, fh1, mx, my) * dx
                    if d == 2:
                        ph = ph + interp(fA1, d, n0, n1, flo0, flo1, fh0, fh1, mx, my) * dy
                    ph = ph + scale * interp(fD, d, n0, n1, flo0, flo1, fh0, fh1, x, y) * dt
                if kill:
                    if nx <= lo0 or nx >= hi0 or (d == 2 and (ny <= lo1 or ny >= hi1)):
                        alive = False
                        w = 0.0
                    elif bridge:
                        inv = 1.0 / (scale * dt)
                        w = w * no_cross((x - lo0) * (nx - lo0) * inv) * no_cross((hi0 - x) * (hi0 - nx) * inv)
                        if d == 2:
                            w = w * no_cross((y - lo1) * (ny - lo1) * inv) * no_cross((hi1 - y) * (hi1 - ny) * inv)
                if alive:
                    x = nx
                    y = ny
                    vcur = vnew
                step = step + 1
                while ck < n_ck and step == cks[ck]:
                    osv[p, ck] = sv
                    ow[p, ck] = w
                    if want_phase:
                        oph[p, ck] = ph
                    if want_pos:
                        opos[p, ck, 0] = x
                        if d == 2:
                            opos[p, ck, 1] = y
                    ck = ck + 1
                if not alive:
                    # frozen: fill remaining checkpoints and stop
                    c2 = ck
                    while c2 < n_ck:
                        osv[p, c2] = sv
                        ow[p, c2] = 0.0
                        if want_phase:
                            oph[p, c2] = ph
                        if want_pos:
                            opos[p, c2, 0] = x
                            if d == 2:
                                opos[p, c2, 1] = y
                        c2 = c2 + 1
                    break

def exit_times(int d, double r, double dt, long long max_steps, seed, n_paths, double[::1] out,
               int threads=1):
    cdef uint64_t base = (<uint64_t>mix64((<uint64_t>seed) + GOLDEN))
    cdef Py_ssize_t npaths = n_paths
    cdef Py_ssize_t p
    cdef long long step
    cdef int a
    cdef uint64_t key
    cdef double* pos
    cdef double r2 = r * r
    cdef double sig = sqrt(dt)
    cdef double s2
    if threads < 1:
        threads = 1
    with nogil, parallel(num_threads=threads):
        pos = <double*>malloc(3 * sizeof(double))
        for p in prange(npaths, schedule="dynamic", chunksize=64):
            key = stream_key(base, PATH_BASE + <uint64_t>p)
            pos[0] = 0.0
            pos[1] = 0.0
            pos[2] = 0.0
            out[p] = INFINITY
            step = 0
            while step < max_steps:
                s2 = 0.0
                for a in range(d):
                    pos[a] = pos[a] + sig * std_normal(key, <uint64_t>(step * d + a))
                    s2 = s2 + pos[a] * pos[a]
                step = step + 1
                if s2 >= r2:
                    out[p] = step * dt
                    break
        free(pos)
