import numpy as np
import pytest

from scadasim.rng import SimRandom


def test_same_seed_same_stream():
    a, b = SimRandom(42), SimRandom(42)
    np.testing.assert_array_equal(a.raw(100), b.raw(100))
    assert a.uniform() == b.uniform()
    np.testing.assert_array_equal(a.normal(7, 2.0), b.normal(7, 2.0))


def test_uniform_is_top_53_bits():
    words = SimRandom(9).raw(10)
    expected = [int(w >> np.uint64(11)) / 2**53 for w in words]
    np.testing.assert_array_equal(SimRandom(9).uniform(10), expected)


def test_integer_bounds_and_coverage():
    r = SimRandom(1)
    draws = [r.integer(1, 255) for _ in range(20000)]
    assert min(draws) == 1 and max(draws) == 254
    assert len(set(draws)) == 254


def test_normal_moments():
    z = SimRandom(3).normal(200001, sigma=2.0)
    assert len(z) == 200001
    assert abs(z.mean()) < 0.02 and abs(z.std() - 2.0) < 0.02


@pytest.mark.parametrize("seed", [-1, 2**64])
def test_seed_range(seed):
    with pytest.raises(ValueError):
        SimRandom(seed)


def test_empty_integer_range():
    with pytest.raises(ValueError):
        SimRandom(0).integer(5, 5)
