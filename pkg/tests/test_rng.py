import numpy as np
import pytest
from scipy.special import ndtri
from scipy import stats

from landscape_lab import rng


def test_frozen_stream_values():
    # reference outputs of the counter-based generator; any change breaks reproducibility
    assert rng.stream_key(0, 0) == 12035550249420947055
    assert rng.stream_key(5, 1 << 32) == 8116997677941602817
    bits = rng.raw_bits(np.uint64(rng.stream_key(0, 0)), np.arange(3, dtype=np.uint64))
    assert [int(b) for b in bits] == [2558736989570252433, 17913671590881668180, 5125111896206277188]
    assert np.array_equal(rng.uniform(7, 3, np.arange(4)),
                          [0.3727004975297106, 0.4495074553391727, 0.06712997443468238,
                           0.02383452433285782])
    assert np.allclose(rng.normal(7, 3, np.arange(4)),
                       [-0.32470943221920484, -0.1269058573124264, -1.4975125269888796,
                        -1.9803069487107916], rtol=0, atol=1e-15)


def test_vectorized_keys_match_scalar():
    streams = np.array([0, 3, 1 << 32, (1 << 32) + 17], dtype=np.uint64)
    keys = rng.stream_keys(11, streams)
    assert [int(k) for k in keys] == [rng.stream_key(11, int(s)) for s in streams]


def test_draws_are_order_independent():
    c = np.arange(1000)
    full = rng.uniform(3, 9, c)
    perm = np.random.default_rng(0).permutation(1000)
    assert np.array_equal(rng.uniform(3, 9, c[perm]), full[perm])
    assert np.array_equal(rng.uniform(3, 9, c[500:]), full[500:])


def test_unit_maps_in_range():
    bits = np.array([0, 2 ** 64 - 1], dtype=np.uint64)
    u = rng.bits_to_unit(bits)
    assert u[0] == 0.0 and u[1] < 1.0
    o = rng.bits_to_open_unit(bits)
    assert 0.0 < o[0] and o[1] < 1.0


def test_normal_quantile_accuracy():
    p = np.concatenate([np.logspace(-16, -1, 200), np.linspace(0.02, 0.98, 401),
                        1 - np.logspace(-1, -15, 200)])
    z = rng.normal_quantile(p)
    ref = ndtri(p)
    assert np.max(np.abs(z - ref) / np.maximum(np.abs(ref), 1.0)) < 1.2e-9
    assert rng.normal_quantile(0.5) == 0.0


def test_normal_moments_and_ks():
    z = rng.normal(42, 5, np.arange(200_000))
    assert abs(z.mean()) < 4 * 1 / np.sqrt(2e5)
    assert abs(z.var() - 1) < 0.01
    assert stats.kstest(z, "norm").pvalue > 1e-3


def test_uniform_ks():
    u = rng.uniform(1, 2, np.arange(100_000))
    assert stats.kstest(u, "uniform").pvalue > 1e-3


def test_streams_differ():
    a = rng.uniform(0, 0, np.arange(64))
    b = rng.uniform(0, 1, np.arange(64))
    c = rng.uniform(1, 0, np.arange(64))
    assert not np.array_equal(a, b) and not np.array_equal(a, c)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.5
