"""Binary feature file round trips, corruption handling, and normalization."""

from __future__ import annotations

import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from castsel.errors import (
    BadMagic,
    BadVersion,
    FormatError,
    IdMismatch,
    NonFiniteEntry,
    SampleCountMismatch,
    Truncated,
)
from castsel.feature_store import (
    FeatureMatrix,
    pair_check,
    read_feature_file,
    row_normalize,
    write_feature_file,
)

HEADER = struct.Struct("<IQII")


def make_matrix(n=7, d=5, seed=0):
    r = np.random.default_rng(seed)
    vals = r.standard_normal((n, d)).astype(np.float32).astype(np.float64)
    ids = [f"id{i:04d}" for i in range(n)]
    return FeatureMatrix(ids=ids, values=vals)


def test_round_trip_bit_exact(tmp_path):
    m = make_matrix()
    path = tmp_path / "a.cfm"
    write_feature_file(path, m)
    back = read_feature_file(path)
    assert back.ids == m.ids
    # payload is float32; values already sit on the float32 lattice
    assert back.values.dtype == np.float64
    assert np.array_equal(back.values, m.values)


def test_round_trip_of_round_trip_is_identical(tmp_path):
    m = make_matrix(seed=3)
    p1 = tmp_path / "a.cfm"
    p2 = tmp_path / "b.cfm"
    write_feature_file(p1, m)
    first = read_feature_file(p1)
    write_feature_file(p2, first)
    assert p1.read_bytes() == p2.read_bytes()


def test_empty_dim_zero_rows(tmp_path):
    m = FeatureMatrix(ids=[], values=np.zeros((0, 4)))
    path = tmp_path / "e.cfm"
    write_feature_file(path, m)
    back = read_feature_file(path)
    assert back.n_samples == 0
    assert back.dim == 4


def test_bad_magic(tmp_path):
    m = make_matrix(2, 2)
    path = tmp_path / "a.cfm"
    write_feature_file(path, m)
    raw = bytearray(path.read_bytes())
    raw[:8] = b"XXXXFEAT"
    path.write_bytes(bytes(raw))
    with pytest.raises(BadMagic):
        read_feature_file(path)


def test_bad_version(tmp_path):
    m = make_matrix(2, 2)
    path = tmp_path / "a.cfm"
    write_feature_file(path, m)
    raw = bytearray(path.read_bytes())
    raw[8:8 + HEADER.size] = HEADER.pack(99, 2, 2, raw_id_len(raw))
    path.write_bytes(bytes(raw))
    with pytest.raises(BadVersion):
        read_feature_file(path)


def raw_id_len(raw: bytearray) -> int:
    _, _, _, id_len = HEADER.unpack_from(bytes(raw), 8)
    return id_len


def test_truncated_payload(tmp_path):
    m = make_matrix(4, 3)
    path = tmp_path / "a.cfm"
    write_feature_file(path, m)
    raw = path.read_bytes()
    path.write_bytes(raw[:-5])
    with pytest.raises(Truncated):
        read_feature_file(path)


def test_truncated_header(tmp_path):
    path = tmp_path / "a.cfm"
    path.write_bytes(b"CASTFE")
    with pytest.raises(Truncated):
        read_feature_file(path)


def test_truncated_id_table(tmp_path):
    m = make_matrix(4, 3)
    path = tmp_path / "a.cfm"
    write_feature_file(path, m)
    raw = path.read_bytes()
    # keep header only plus a couple of id bytes
    path.write_bytes(raw[:8 + HEADER.size + 3])
    with pytest.raises(Truncated):
        read_feature_file(path)


def test_trailing_garbage_rejected(tmp_path):
    m = make_matrix(3, 2)
    path = tmp_path / "a.cfm"
    write_feature_file(path, m)
    path.write_bytes(path.read_bytes() + b"\x00\x01")
    with pytest.raises(Truncated):
        read_feature_file(path)


def test_non_finite_entry_reported_with_position(tmp_path):
    m = make_matrix(4, 3)
    m.values[2, 1] = np.nan
    path = tmp_path / "a.cfm"
    write_feature_file(path, m)
    with pytest.raises(NonFiniteEntry) as exc:
        read_feature_file(path)
    assert "2" in str(exc.value) and "1" in str(exc.value)


def test_inf_entry_rejected(tmp_path):
    m = make_matrix(2, 2)
    m.values[0, 0] = np.inf
    path = tmp_path / "a.cfm"
    write_feature_file(path, m)
    with pytest.raises(NonFiniteEntry):
        read_feature_file(path)


def test_id_with_newline_rejected(tmp_path):
    m = make_matrix(2, 2)
    m.ids[0] = "bad\nid"
    with pytest.raises(FormatError):
        write_feature_file(tmp_path / "a.cfm", m)


def test_id_count_row_count_mismatch_rejected(tmp_path):
    m = make_matrix(3, 2)
    m.ids = m.ids[:2]
    with pytest.raises(FormatError):
        write_feature_file(tmp_path / "a.cfm", m)


def test_unicode_ids_survive(tmp_path):
    m = make_matrix(2, 2)
    m.ids = ["café", "налео"]
    path = tmp_path / "a.cfm"
    write_feature_file(path, m)
    assert read_feature_file(path).ids == ["café", "налео"]


def test_pair_check_ok_with_different_dims():
    a = make_matrix(5, 3)
    b = make_matrix(5, 9)
    assert pair_check(a, b) == 5


def test_pair_check_count_mismatch():
    a = make_matrix(5, 3)
    b = make_matrix(6, 3)
    with pytest.raises(SampleCountMismatch):
        pair_check(a, b)


def test_pair_check_id_mismatch_positional():
    a = make_matrix(5, 3)
    b = make_matrix(5, 3)
    b.ids = list(reversed(b.ids))
    with pytest.raises(IdMismatch):
        pair_check(a, b)


def as_fm(x: np.ndarray) -> FeatureMatrix:
    return FeatureMatrix(ids=[f"r{i}" for i in range(x.shape[0])], values=x)


def test_row_normalize_example():
    out = row_normalize(as_fm(np.array([[3.0, 4.0]])))
    assert np.allclose(out.values, [[0.6, 0.8]], atol=1e-15)


def test_row_normalize_zero_row_unchanged():
    out = row_normalize(as_fm(np.array([[0.0, 0.0], [1.0, 0.0]])))
    assert np.array_equal(out.values[0], [0.0, 0.0])
    assert np.array_equal(out.values[1], [1.0, 0.0])


def test_row_normalize_does_not_mutate_input():
    x = np.array([[3.0, 4.0]])
    row_normalize(as_fm(x))
    assert np.array_equal(x, [[3.0, 4.0]])


def test_row_normalize_idempotent_bitwise():
    r = np.random.default_rng(7)
    x = r.standard_normal((40, 6)) * np.exp(r.uniform(-3, 3, size=(40, 1)))
    once = row_normalize(as_fm(x))
    twice = row_normalize(once)
    assert np.array_equal(once.values, twice.values)


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=1, max_value=12), st.integers(min_value=1, max_value=6),
       st.integers(min_value=0, max_value=2**31 - 1))
def test_row_normalize_unit_norm_property(n, d, seed):
    x = np.random.default_rng(seed).standard_normal((n, d))
    out = row_normalize(as_fm(x))
    norms = np.linalg.norm(out.values, axis=1)
    nz = norms > 0
    assert np.all(np.abs(norms[nz] - 1.0) <= 1e-12)
    assert np.array_equal(out.values, row_normalize(out).values)
