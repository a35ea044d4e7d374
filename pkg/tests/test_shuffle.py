import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dualjoin.errors import CorrelationConsumedError, ShapeError
from dualjoin.ring import Permutation, Ring, apply_permutation, reconstruct, sample_permutation
from dualjoin.rng import Rng
from dualjoin.shuffle import correlate, dealer_generate_correlation, oshuffle_receive, oshuffle_send


def run_shuffle(x, perm, rng):
    corr = dealer_generate_correlation(x.shape[0], x.shape[1], perm, rng, Ring(x.dtype.itemsize * 8))
    wire, out_s = oshuffle_send(x, corr.sender)
    out_r = oshuffle_receive(wire, corr.receiver)
    return wire, out_s, out_r, corr


def test_trivial_1x1():
    corr = dealer_generate_correlation(1, 1, Permutation.identity(1), Rng(0))
    assert np.array_equal(reconstruct(corr.sender.share, corr.receiver.share), corr.sender.mask)


def test_correlation_invariant_example_perm():
    pb1 = Permutation.from_one_based([4, 1, 3, 2])
    corr = dealer_generate_correlation(4, 1, pb1, Rng("c"))
    assert np.array_equal(reconstruct(corr.sender.share, corr.receiver.share),
                          apply_permutation(pb1, corr.sender.mask))


def test_correlation_invariant_200_random():
    rng = Rng("corr200")
    for t in range(200):
        n, m = 1 + rng.randbelow(32), rng.randbelow(9)
        ring = Ring([8, 16, 32, 64][t % 4])
        perm = sample_permutation(n, rng)
        corr = dealer_generate_correlation(n, m, perm, rng, ring)
        assert np.array_equal(reconstruct(corr.sender.share, corr.receiver.share),
                              apply_permutation(perm, corr.sender.mask))


def test_dealer_shape_mismatch():
    with pytest.raises(ShapeError):
        dealer_generate_correlation(3, 1, Permutation.identity(4), Rng(0))


def test_send_with_x_equal_mask_gives_zero_wire():
    corr = dealer_generate_correlation(5, 2, sample_permutation(5, Rng(1)), Rng(2))
    wire, _ = oshuffle_send(corr.sender.mask.copy(), corr.sender)
    assert not wire.any()


def test_send_subtracts_mask_example():
    ring = Ring()
    x = ring.asarray([[12], [61], [37], [49]])
    mask = ring.asarray([[5], [20], [9], [30]])
    corr = correlate(mask, Permutation.identity(4), Rng(0))
    wire, share = oshuffle_send(x, corr.sender)
    assert wire.ravel().tolist() == [(a - b) % 2**64 for a, b in zip([12, 61, 37, 49], [5, 20, 9, 30])]
    assert share is corr.sender.share


def test_send_wraps_below_zero():
    ring = Ring(8)
    corr = correlate(ring.asarray([[200]]), Permutation.identity(1), Rng(0))
    wire, _ = oshuffle_send(ring.asarray([[3]]), corr.sender)
    assert wire.tolist() == [[(3 - 200) % 256]]


def test_sender_output_is_independent_of_input():
    perm = sample_permutation(6, Rng(3))
    corr = dealer_generate_correlation(6, 2, perm, Rng(4))
    before = corr.sender.share.copy()
    _, out = oshuffle_send(Ring().random(6, 2, Rng(5)), corr.sender)
    assert out.tobytes() == before.tobytes()


def test_identity_end_to_end():
    x = Ring().random(7, 3, Rng(7))
    _, s, r, _ = run_shuffle(x, Permutation.identity(7), Rng(8))
    assert np.array_equal(reconstruct(s, r), x)


def test_example_first_direction():
    # A's features in pa1 order, shuffled obliviously by pb1, give the composite order
    ring = Ring()
    fa = ring.asarray([[12], [61], [37], [49]])
    pa1 = Permutation.from_one_based([4, 2, 1, 3])
    pb1 = Permutation.from_one_based([4, 1, 3, 2])
    _, s, r, _ = run_shuffle(apply_permutation(pa1, fa), pb1, Rng(0))
    assert reconstruct(s, r).ravel().tolist() == [61, 12, 49, 37]


def test_500_random_end_to_end():
    rng = Rng("e2e500")
    for t in range(500):
        n, m = 1 + rng.randbelow(20), rng.randbelow(5)
        ring = Ring([8, 16, 32, 64][t % 4])
        x = ring.random(n, m, rng)
        perm = sample_permutation(n, rng)
        _, s, r, _ = run_shuffle(x, perm, rng)
        assert np.array_equal(reconstruct(s, r), apply_permutation(perm, x))


@given(st.data())
@settings(max_examples=150)
def test_exhaustive_small_ell8(data):
    n = data.draw(st.integers(1, 5))
    perm = Permutation(data.draw(st.permutations(list(range(n)))))
    x = np.array(data.draw(st.lists(st.integers(0, 255), min_size=n, max_size=n)), dtype=np.uint8).reshape(n, 1)
    mask = np.array(data.draw(st.lists(st.integers(0, 255), min_size=n, max_size=n)), dtype=np.uint8).reshape(n, 1)
    s_share = np.array(data.draw(st.lists(st.integers(0, 255), min_size=n, max_size=n)),
                       dtype=np.uint8).reshape(n, 1)
    corr = correlate(mask, perm, Rng(0), s_share)
    wire, s = oshuffle_send(x, corr.sender)
    r = oshuffle_receive(wire, corr.receiver)
    assert np.array_equal(reconstruct(s, r), apply_permutation(perm, x))


def test_wire_size_is_n_m_ell_over_8():
    for ell in (8, 16, 32, 64):
        x = Ring(ell).random(9, 4, Rng(ell))
        wire, *_ = run_shuffle(x, sample_permutation(9, Rng(1)), Rng(2))
        assert len(Ring(ell).encode(wire)) == 9 * 4 * ell // 8


def test_halves_are_single_use():
    x = Ring().random(3, 1, Rng(0))
    wire, _, _, corr = run_shuffle(x, sample_permutation(3, Rng(1)), Rng(2))
    with pytest.raises(CorrelationConsumedError):
        oshuffle_send(x, corr.sender)
    with pytest.raises(CorrelationConsumedError):
        oshuffle_receive(wire, corr.receiver)


def test_shape_mismatch_on_send_and_receive():
    corr = dealer_generate_correlation(3, 2, Permutation.identity(3), Rng(0))
    with pytest.raises(ShapeError):
        oshuffle_send(Ring().zeros(3, 1), corr.sender)
    with pytest.raises(ShapeError):
        oshuffle_receive(Ring().zeros(2, 2), corr.receiver)
    with pytest.raises(ShapeError):
        oshuffle_send(Ring(32).zeros(3, 2), corr.sender)
