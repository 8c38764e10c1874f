import numpy as np
import pytest

from rc_lab import seeding


def test_splitmix64_reference_value():
    # first output of the SplitMix64 generator seeded with 0
    assert seeding.splitmix64(seeding.GOLDEN) == 0xE220A8397B1DCDAF


def test_mix_is_deterministic_and_spreads_indices():
    seeds = {seeding.mix(42, i) for i in range(10_000)}
    assert len(seeds) == 10_000
    assert seeding.mix(42, 3) == seeding.mix(42, 3)
    assert seeding.mix(42, 3) != seeding.mix(43, 3)


def test_mix_stays_in_64_bits():
    assert 0 <= seeding.mix(seeding.MASK64, 7) <= seeding.MASK64


@pytest.mark.parametrize("seed, index", [(-1, 0), (1 << 64, 0), (0, -1)])
def test_mix_rejects_bad_input(seed, index):
    with pytest.raises(ValueError):
        seeding.mix(seed, index)


def test_child_streams_reproduce():
    a = seeding.child_stream(5, 2).random(4)
    b = seeding.child_stream(5, 2).random(4)
    c = seeding.child_stream(5, 3).random(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
