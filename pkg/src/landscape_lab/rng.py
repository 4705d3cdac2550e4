"""Counter-based random streams.

Every random number used by the package is a pure function of
``(seed, stream, counter)``: a stream key is derived from the seed and a
stream id with the SplitMix64 finalizer, and the n-th draw of a stream is
``mix64(key + (n + 1) * GOLDEN)``.  Nothing is stateful, so results do not
depend on evaluation order, chunking, or thread layout.

The compiled walker (``_kernels.pyx``) implements the same recipe in C.
"""

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

# stream ids; path streams start at PATH_STREAM_BASE + path_index
STREAM_POTENTIAL = 0
STREAM_MAGNETIC_X = 1
STREAM_MAGNETIC_Y = 2
STREAM_PROBE = 16
STREAM_START_VECTOR = 32
STREAM_POINTS = 48
PATH_STREAM_BASE = 1 << 32

_INV_2_53 = 1.0 / 9007199254740992.0
_INV_2_52 = 1.0 / 4503599627370496.0


def mix64(z):
    """SplitMix64 finalizer on Python ints."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def stream_key(seed, stream):
    seed = int(seed) & MASK64
    return mix64(mix64(seed + GOLDEN) + ((int(stream) + 1) * GOLDEN & MASK64))


def _mix64_array(z):
    z = z ^ (z >> np.uint64(30))
    z = z * np.uint64(_M1)
    z = z ^ (z >> np.uint64(27))
    z = z * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def stream_keys(seed, streams):
    """Vectorized :func:`stream_key` over an integer array of stream ids."""
    streams = np.asarray(streams, dtype=np.uint64)
    base = np.uint64(mix64((int(seed) & MASK64) + GOLDEN))
    with np.errstate(over="ignore"):
        return _mix64_array(base + (streams + np.uint64(1)) * np.uint64(GOLDEN))


def raw_bits(keys, counters):
    """64-bit draws ``mix64(key + (counter + 1) * GOLDEN)``, broadcasting."""
    keys = np.asarray(keys, dtype=np.uint64)
    counters = np.asarray(counters, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix64_array(keys + (counters + np.uint64(1)) * np.uint64(GOLDEN))


def bits_to_unit(bits):
    """Map 64-bit draws to doubles in [0, 1) using the top 53 bits."""
    return (bits >> np.uint64(11)).astype(np.float64) * _INV_2_53


def uniform(seed, stream, counters):
    key = np.uint64(stream_key(seed, stream))
    return bits_to_unit(raw_bits(key, counters))


# Acklam's rational approximation to the normal quantile (|rel err| < 1.2e-9)
ACKLAM_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
            1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
ACKLAM_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
            6.680131188771972e+01, -1.328068155288572e+01)
ACKLAM_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
            -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
ACKLAM_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
            3.754408661907416e+00)
P_LOW = 0.02425


def normal_quantile(p):
    """Inverse standard normal CDF on (0, 1), Acklam's approximation."""
    p = np.asarray(p, dtype=np.float64)
    a, b, c, d = ACKLAM_A, ACKLAM_B, ACKLAM_C, ACKLAM_D
    q = p - 0.5
    r = q * q
    mid = ((((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
           / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0))
    tail_p = np.minimum(p, 1.0 - p)
    tq = np.sqrt(-2.0 * np.log(np.maximum(tail_p, 1e-300)))
    tail = ((((((c[0] * tq + c[1]) * tq + c[2]) * tq + c[3]) * tq + c[4]) * tq + c[5])
            / ((((d[0] * tq + d[1]) * tq + d[2]) * tq + d[3]) * tq + 1.0))
    tail = np.where(p < 0.5, tail, -tail)
    return np.where(tail_p < P_LOW, tail, mid)


def bits_to_open_unit(bits):
    """Map 64-bit draws to doubles in (0, 1).

    Uses the top 52 bits so that k + 1/2 is exact and never rounds up to 1.
    """
    return ((bits >> np.uint64(12)).astype(np.float64) + 0.5) * _INV_2_52


def std_normal(keys, counters):
    """Standard normal for draw ``counters`` of each stream key (one draw each)."""
    return normal_quantile(bits_to_open_unit(raw_bits(keys, counters)))


def normal(seed, stream, counters):
    key = np.uint64(stream_key(seed, stream))
    return std_normal(key, counters)
