import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import chisquare

from dualjoin import group
from dualjoin.errors import DuplicateIdentifierError, ProtocolError, ShapeError
from dualjoin.group import GroupScalar, keygen, scalar_inverse
from dualjoin.ring import Permutation, apply_permutation, compose, invert, sample_permutation
from dualjoin.rng import Rng
from dualjoin.smig import (EncryptedIdVector, MIPairs, SmigKeys, build_mipairs, run_smig,
                           smig_reencrypt_and_shuffle, smig_setup_party_a, smig_setup_party_b,
                           smig_strip_own_key, validate_ids)
from dualjoin.transport import LoopbackTransport

IDS_A = [b"aaa", b"bbb", b"ccc", b"ddd"]
IDS_B = [b"ddd", b"bbb", b"ggg", b"eee"]


def H(ids):
    return group.hash_many(ids)


def both_parties(ids_a, ids_b, keys_a, keys_b):
    ta, tb = LoopbackTransport.pair(timeout=30)
    out, errs = {}, []

    def go(role, ids, keys, tr):
        try:
            out[role] = run_smig(role, ids, keys, len(ids_a), len(ids_b), tr)
        except Exception as exc:
            errs.append(exc)
            tr.close()

    ths = [threading.Thread(target=go, args=a) for a in (("a", ids_a, keys_a, ta), ("b", ids_b, keys_b, tb))]
    for t in ths:
        t.start()
    for t in ths:
        t.join()
    if errs:
        raise errs[0]
    return out["a"], out["b"], ta, tb


def random_keys(n_a, n_b, rng):
    mk = lambda: SmigKeys(sample_permutation(n_a, rng), sample_permutation(n_b, rng), keygen(rng))
    return mk(), mk()


def plaintext_pairs(ids_a, ids_b, ka, kb):
    """Oracle: map each plaintext match (i, j) through the two composites."""
    p1 = compose(ka.first, kb.first)
    p2 = compose(kb.second, ka.second)
    pos_b = {x: j for j, x in enumerate(ids_b)}
    return sorted((int(p1(i)), int(p2(pos_b[x]))) for i, x in enumerate(ids_a) if x in pos_b)


def test_setup_a_single_id():
    k = GroupScalar(5)
    v = smig_setup_party_a([b"solo"], Permutation.identity(1), k)
    assert v.points == tuple(group.mul_many(k, H([b"solo"])))


def test_setup_a_example_order(example):
    alpha = example.key_a
    v = smig_setup_party_a(IDS_A, example.a_first, alpha)
    assert list(group.mul_many(scalar_inverse(alpha), v.points)) == H([b"ccc", b"bbb", b"ddd", b"aaa"])


def test_setup_b_example_order(example):
    beta = example.key_b
    v = smig_setup_party_b(IDS_B, example.b_second, beta)
    assert list(group.mul_many(scalar_inverse(beta), v.points)) == H([b"ddd", b"eee", b"bbb", b"ggg"])


def test_setup_length_preserved_without_overlap():
    v = smig_setup_party_b([b"p", b"q", b"r"], sample_permutation(3, Rng(0)), GroupScalar(9))
    assert len(v) == 3


def test_setup_rejects_duplicates_and_bad_ids():
    with pytest.raises(DuplicateIdentifierError):
        smig_setup_party_a([b"x", b"x"], Permutation.identity(2), GroupScalar(2))
    with pytest.raises(ValueError):
        validate_ids([b""])
    with pytest.raises(ValueError):
        validate_ids([b"x" * 65])
    with pytest.raises(TypeError):
        validate_ids(["str-not-bytes"])
    with pytest.raises(ShapeError):
        smig_setup_party_a([b"x"], Permutation.identity(2), GroupScalar(2))


def test_reencrypt_identity_with_unit_key():
    v = EncryptedIdVector(tuple(H([b"a", b"b"])))
    assert smig_reencrypt_and_shuffle(v, Permutation.identity(2), GroupScalar(1)).points == v.points


def test_reencrypt_example_order(example):
    a_vec = smig_setup_party_a(IDS_A, example.a_first, example.key_a)
    dual = smig_reencrypt_and_shuffle(a_vec, example.b_first, example.key_b)
    inv = GroupScalar(scalar_inverse(example.key_a).value * scalar_inverse(example.key_b).value % group.ORDER)
    assert list(group.mul_many(inv, dual.points)) == H([b"bbb", b"aaa", b"ddd", b"ccc"])


def test_reencrypt_two_paths_agree():
    rng = Rng("two-path")
    v = EncryptedIdVector(tuple(H([rng.bytes(8) for _ in range(9)])))
    perm, beta = sample_permutation(9, rng), keygen(rng)
    direct = smig_reencrypt_and_shuffle(v, perm, beta).points
    assert list(direct) == apply_permutation(perm, group.mul_many(beta, v.points))


def test_reencrypt_rejects_malformed_points():
    v = EncryptedIdVector((b"\xff" * 32,))
    with pytest.raises(Exception):
        smig_reencrypt_and_shuffle(v, Permutation.identity(1), GroupScalar(3))


def test_strip_inverts_encrypt_and_unit_noop():
    rng = Rng("strip")
    pts = tuple(H([b"u", b"v", b"w"]))
    alpha = keygen(rng)
    enc = EncryptedIdVector(tuple(group.mul_many(alpha, pts)))
    assert smig_strip_own_key(enc, alpha).points == pts
    assert smig_strip_own_key(EncryptedIdVector(pts), GroupScalar(1)).points == pts


def test_strip_example_matches_direct(example):
    a_vec = smig_setup_party_a(IDS_A, example.a_first, example.key_a)
    dual = smig_reencrypt_and_shuffle(a_vec, example.b_first, example.key_b)
    stripped = smig_strip_own_key(dual, example.key_a)
    assert list(stripped.points) == group.mul_many(example.key_b, H([b"bbb", b"aaa", b"ddd", b"ccc"]))


def test_build_mipairs_example(example):
    a_vec = smig_setup_party_a(IDS_A, example.a_first, example.key_a)
    dual = smig_reencrypt_and_shuffle(a_vec, example.b_first, example.key_b)
    b_vec = smig_setup_party_b(IDS_B, example.b_second, example.key_b)
    mip = build_mipairs(smig_strip_own_key(dual, example.key_a), b_vec, example.a_second)
    assert mip.one_based() == [(1, 4), (3, 3)]


def test_build_mipairs_disjoint_is_empty():
    k = GroupScalar(7)
    a = EncryptedIdVector(tuple(group.mul_many(k, H([b"1", b"2"]))))
    b = EncryptedIdVector(tuple(group.mul_many(k, H([b"3", b"4", b"5"]))))
    assert len(build_mipairs(a, b, Permutation.identity(3))) == 0


def test_build_mipairs_identical_sets_n8():
    rng = Rng("n8")
    ids = [f"id{i}".encode() for i in range(8)]
    ka, kb = random_keys(8, 8, rng)
    a_vec = smig_setup_party_a(ids, ka.first, ka.key)
    dual = smig_reencrypt_and_shuffle(a_vec, kb.first, kb.key)
    b_vec = smig_setup_party_b(ids, kb.second, kb.key)
    mip = build_mipairs(smig_strip_own_key(dual, ka.key), b_vec, ka.second)
    assert len(mip) == 8
    assert sorted(mip.first.tolist()) == list(range(8))
    assert sorted(mip.pairs) == plaintext_pairs(ids, ids, ka, kb)


def test_build_mipairs_rejects_collisions():
    p = H([b"z"])[0]
    with pytest.raises(DuplicateIdentifierError):
        build_mipairs(EncryptedIdVector((p,)), EncryptedIdVector((p, p)), Permutation.identity(2))
    with pytest.raises(DuplicateIdentifierError):
        build_mipairs(EncryptedIdVector((p, p)), EncryptedIdVector((p,)), Permutation.identity(1))


def test_run_smig_example_both_parties(example):
    ka = SmigKeys(example.a_first, example.a_second, example.key_a)
    kb = SmigKeys(example.b_first, example.b_second, example.key_b)
    ma, mb, ta, tb = both_parties(IDS_A, IDS_B, ka, kb)
    assert ma.one_based() == mb.one_based() == [(1, 4), (3, 3)]
    assert ta.accounting.phases["smig"].rounds == tb.accounting.phases["smig"].rounds == 3
    assert ta.transcript.causal_rounds("smig") == 3
    sent = ta.accounting.phases["smig"].bytes_sent + tb.accounting.phases["smig"].bytes_sent
    assert sent == 3 * 4 * 32 + 2 * 16  # equal sizes: 3 n sigma/8 + 2 c * 8


def test_run_smig_unbalanced_3_vs_5():
    rng = Rng("3v5")
    ids_a = [b"k1", b"k2", b"k3"]
    ids_b = [b"k9", b"k3", b"k7", b"k1", b"k8"]
    ka, kb = random_keys(3, 5, rng)
    ma, mb, *_ = both_parties(ids_a, ids_b, ka, kb)
    assert ma == mb
    assert list(ma.pairs) == plaintext_pairs(ids_a, ids_b, ka, kb)


def test_run_smig_empty_intersection():
    rng = Rng("c0")
    ka, kb = random_keys(2, 3, rng)
    ma, mb, *_ = both_parties([b"a", b"b"], [b"c", b"d", b"e"], ka, kb)
    assert len(ma) == len(mb) == 0


def test_pairs_invert_to_plaintext_matches():
    rng = Rng("invert-pairs")
    ids_a = [rng.bytes(6) for _ in range(12)]
    ids_b = ids_a[:5] + [rng.bytes(6) for _ in range(4)]
    ka, kb = random_keys(12, 9, rng)
    ma, _, *_ = both_parties(ids_a, ids_b, ka, kb)
    i1 = invert(compose(ka.first, kb.first))
    i2 = invert(compose(kb.second, ka.second))
    got = {(ids_a[i1(i)], ids_b[i2(j)]) for i, j in ma}
    assert got == {(x, x) for x in ids_a[:5]}


@given(st.integers(1, 9), st.integers(1, 9), st.floats(0, 1), st.integers(0, 2**32))
@settings(max_examples=25, deadline=None)
def test_smig_matches_oracle_property(n_a, n_b, rho, seed):
    rng = Rng(seed)
    c = int(rho * min(n_a, n_b))
    shared = [b"s%d" % i for i in range(c)]
    ids_a = shared + [b"a%d" % i for i in range(n_a - c)]
    ids_b = [b"b%d" % i for i in range(n_b - c)] + shared
    ka, kb = random_keys(n_a, n_b, rng)
    ma, mb, *_ = both_parties(ids_a, ids_b, ka, kb)
    assert ma == mb
    assert len(ma) == c
    assert list(ma.pairs) == plaintext_pairs(ids_a, ids_b, ka, kb)


def test_mipairs_wire_roundtrip_and_validation():
    mip = MIPairs(((0, 3), (2, 1)))
    assert len(mip.to_bytes()) == 32
    assert MIPairs.from_bytes(mip.to_bytes(), 4, 4) == mip
    with pytest.raises(ProtocolError):
        MIPairs.from_bytes(b"\x00" * 15, 4, 4)
    with pytest.raises(ProtocolError):
        MIPairs.from_bytes(MIPairs(((2, 0), (1, 1))).to_bytes(), 4, 4)  # not ascending
    with pytest.raises(ProtocolError):
        MIPairs.from_bytes(MIPairs(((0, 1), (1, 1))).to_bytes(), 4, 4)  # repeated second
    with pytest.raises(ProtocolError):
        MIPairs.from_bytes(MIPairs(((0, 9),)).to_bytes(), 4, 4)  # out of range


def test_composite_first_index_uniform():
    # composite-permutation side only; the protocol-level check is in test_acceptance
    ids = [b"id%d" % i for i in range(8)]
    ids_b = ids[:3] + [b"x%d" % i for i in range(5)]
    counts = np.zeros(8, dtype=int)
    rng = Rng("mi-uniform-small")
    for _ in range(600):
        ka, kb = random_keys(8, 8, rng)
        for i, _ in plaintext_pairs(ids, ids_b, ka, kb):
            counts[i] += 1
    assert chisquare(counts).pvalue > 0.001
