import pytest

from lexprobe.rng import MASK64, Xorshift64Star, fnv1a64, stream


def test_fnv1a64_known_values():
    # Standard FNV-1a test vectors.
    assert fnv1a64(b"") == 14695981039346656037
    assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
    assert fnv1a64(b"foobar") == 0x85944171F73967E8


def test_zero_seed_is_replaced():
    gen_zero = Xorshift64Star(0)
    gen_sub = Xorshift64Star(0x9E3779B97F4A7C15)
    assert [gen_zero.next_u64() for _ in range(4)] == [
        gen_sub.next_u64() for _ in range(4)
    ]


def test_outputs_are_64_bit():
    gen = Xorshift64Star(12345)
    for _ in range(100):
        assert 0 <= gen.next_u64() <= MASK64


def test_random_is_in_unit_interval():
    gen = Xorshift64Star(7)
    values = [gen.random() for _ in range(1000)]
    assert all(0.0 <= v < 1.0 for v in values)


def test_same_seed_and_label_reproduce():
    a = stream(42, "sample:year")
    b = stream(42, "sample:year")
    assert [a.next_u64() for _ in range(8)] == [b.next_u64() for _ in range(8)]


@pytest.mark.parametrize("seed", [0, 1, 42, 2**63, MASK64])
def test_distinct_labels_diverge_quickly(seed):
    a = stream(seed, "sample:year")
    b = stream(seed, "select:year")
    assert [a.next_u64() for _ in range(4)] != [b.next_u64() for _ in range(4)]


def test_below_uniform_mean():
    # Empirical mean over 1e5 draws within 3 sigma of (n-1)/2.
    n = 17
    draws = 100_000
    gen = stream(9, "uniformity")
    total = sum(gen.below(n) for _ in range(draws))
    mean = total / draws
    expected = (n - 1) / 2
    sigma = ((n**2 - 1) / 12 / draws) ** 0.5
    assert abs(mean - expected) <= 3 * sigma


def test_below_covers_range_and_rejects_bad_n():
    gen = stream(3, "coverage")
    seen = {gen.below(4) for _ in range(200)}
    assert seen == {0, 1, 2, 3}
    with pytest.raises(ValueError):
        gen.below(0)


def test_sample_without_replacement():
    gen = stream(5, "sampling")
    picked = gen.sample(range(50), 20)
    assert len(picked) == 20
    assert len(set(picked)) == 20
    assert set(picked) <= set(range(50))
    # Exhaustion returns everything.
    assert sorted(stream(5, "sampling").sample(range(3), 10)) == [0, 1, 2]


def test_shuffle_is_a_permutation():
    gen = stream(11, "shuffling")
    items = list(range(12))
    gen.shuffle(items)
    assert sorted(items) == list(range(12))
