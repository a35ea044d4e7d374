import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dualjoin.errors import DuplicateIdentifierError, ShapeError
from dualjoin.files import read_share, read_table, write_share, write_table
from dualjoin.join import PartyTable
from dualjoin.misfa import JoinOutputShare
from dualjoin.ring import Ring
from dualjoin.rng import Rng


def test_table_roundtrip(tmp_path, make_tables):
    ta, _ = make_tables(10, 5, m_a=3)
    write_table(tmp_path / "t.csv", ta)
    back = read_table(tmp_path / "t.csv")
    assert back.ids == ta.ids and np.array_equal(back.features, ta.features)
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "id,f1,f2,f3"


@pytest.mark.parametrize("body,err", [
    ("", ShapeError),
    ("key,f1\nx,1\n", ShapeError),
    ("id,f1\nx,1,2\n", ShapeError),
    ("id,f1\nx,256\n", ShapeError),
    ("id,f1\nx,-1\n", ShapeError),
    ("id,f1\nx,abc\n", ValueError),
    ("id,f1\nx,1\nx,2\n", DuplicateIdentifierError),
])
def test_table_errors(tmp_path, body, err):
    p = tmp_path / "t.csv"
    p.write_text(body)
    with pytest.raises(err):
        read_table(p, Ring(8))


def test_zero_feature_table(tmp_path):
    p = tmp_path / "t.csv"
    p.write_text("id\na\nb\n")
    t = read_table(p)
    assert t.features.shape == (2, 0)


@given(st.sampled_from([8, 16, 32, 64]), st.integers(0, 5), st.integers(0, 5), st.integers(0, 99))
@settings(max_examples=40, deadline=None)
def test_share_roundtrip(tmp_path_factory, ell, c, m, seed):
    path = tmp_path_factory.mktemp("s") / "share.bin"
    x = Ring(ell).random(c, m, Rng(seed))
    write_share(path, x)
    raw = path.read_bytes()
    assert raw[:4] == b"BFRS" and len(raw) == 4 + 2 + 8 + 8 + 2 + c * m * ell // 8
    back = read_share(path)
    assert back.dtype == x.dtype and np.array_equal(back, x)


def test_share_accepts_output_share_object(tmp_path):
    x = Ring().random(2, 3, Rng(0))
    write_share(tmp_path / "a", JoinOutputShare(x, 1))
    write_share(tmp_path / "b", x)
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


def test_share_header_fields(tmp_path):
    write_share(tmp_path / "s", Ring(16).asarray([[1, 2, 3]]))
    raw = (tmp_path / "s").read_bytes()
    assert raw == b"BFRS" + (1).to_bytes(2, "little") + (1).to_bytes(8, "little") + \
        (3).to_bytes(8, "little") + (16).to_bytes(2, "little") + b"\x01\x00\x02\x00\x03\x00"


@pytest.mark.parametrize("mutate", [
    lambda b: b[:10],
    lambda b: b"XXXX" + b[4:],
    lambda b: b[:4] + b"\x02\x00" + b[6:],
    lambda b: b[:-1],
])
def test_share_corruption_detected(tmp_path, mutate):
    write_share(tmp_path / "s", Ring().asarray([[1, 2]]))
    (tmp_path / "s").write_bytes(mutate((tmp_path / "s").read_bytes()))
    with pytest.raises(ShapeError):
        read_share(tmp_path / "s")


def test_table_from_rows_str_ids():
    t = PartyTable.from_rows(["a", b"b"], [[1], [2]])
    assert t.ids == (b"a", b"b")
