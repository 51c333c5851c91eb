import numpy as np

from obslae.rng import Lcg

MASK = (1 << 64) - 1


def test_first_states_follow_the_recurrence():
    rng = Lcg(42)
    state = 42
    for _ in range(5):
        state = (6364136223846793005 * state + 1442695040888963407) & MASK
        assert rng.next_u64() == state


def test_uniform_uses_top_53_bits():
    state = (6364136223846793005 * 7 + 1442695040888963407) & MASK
    assert Lcg(7).random() == (state >> 11) / 2.0**53


def test_streams_are_reproducible_and_in_range():
    a = Lcg(3).uniform(-2.0, 5.0, (4, 5))
    b = Lcg(3).uniform(-2.0, 5.0, (4, 5))
    assert np.array_equal(a, b)
    assert a.min() >= -2.0 and a.max() < 5.0
    ints = [Lcg(s).integer(1, 6) for s in range(200)]
    assert set(ints) == {1, 2, 3, 4, 5, 6}
