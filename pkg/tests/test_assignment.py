"""Cost blending, optimal injective assignment, manifest round trips."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from castsel.assignment import (
    Coreset,
    cost_matrix,
    emit,
    hungarian,
    read_manifest,
    write_manifest,
)
from castsel.errors import Infeasible, InternalError
from castsel.topology import SparseGraph
from tests.conftest import random_graph


def brute_force_assignment(c: np.ndarray):
    k, n = c.shape
    best = None
    best_cost = np.inf
    for combo in itertools.permutations(range(n), k):
        cost = sum(c[r, combo[r]] for r in range(k))
        if cost < best_cost - 1e-15:
            best_cost = cost
            best = combo
    return np.asarray(best), best_cost


# ---------------------------------------------------------------- cost matrix

def make_cost_inputs(rng, n=10, k=3):
    y = rng.standard_normal((k, 4))
    z = rng.standard_normal((n, 4))
    phi_y = {1: rng.standard_normal((k, 2))}
    phi_z = {1: rng.standard_normal((n, 2))}
    beta = {1: 1.0}
    b_star = random_graph(n, rng, p=0.4)
    h_bar = rng.uniform(0.1, 1.0, n)
    return y, z, phi_z, phi_y, beta, b_star, h_bar


def test_cost_matrix_distance_only(rng):
    y, z, phi_z, phi_y, beta, b_star, h_bar = make_cost_inputs(rng)
    cm = cost_matrix(y, z, phi_z, phi_y, beta, b_star, h_bar, 1.0, 0.0, 0.0, 0.0)
    d = cm.d_diff
    want = (d - d.min()) / (d.max() - d.min())
    assert np.allclose(cm.c, want, atol=1e-12)


def test_cost_matrix_confidence_lowers_cost(rng):
    y, z, phi_z, phi_y, beta, b_star, h_bar = make_cost_inputs(rng)
    base = cost_matrix(y, z, phi_z, phi_y, beta, b_star, h_bar, 1.0, 0.0, 0.0, 0.0)
    with_q = cost_matrix(y, z, phi_z, phi_y, beta, b_star, h_bar, 1.0, 0.0, 0.0, 0.5)
    j_best = int(np.argmax(h_bar))
    # the most-confident column drops by the full alpha_q
    assert np.allclose(base.c[:, j_best] - with_q.c[:, j_best], 0.5, atol=1e-12)


def test_cost_matrix_topology_prefers_hubs(rng):
    y, z, phi_z, phi_y, beta, b_star, h_bar = make_cost_inputs(rng)
    cm = cost_matrix(y, z, phi_z, phi_y, beta, b_star, h_bar, 0.0, 0.0, 1.0, 0.0)
    wdeg = b_star.weighted_degree()
    hub = int(np.argmax(wdeg))
    assert np.allclose(cm.c[:, hub], cm.c.min(axis=1), atol=1e-12)


def test_cost_matrix_degenerate_component_zeroed(rng):
    y, z, phi_z, phi_y, beta, b_star, _ = make_cost_inputs(rng)
    flat = np.full(z.shape[0], 0.5)  # constant confidence: min-max collapses
    cm = cost_matrix(y, z, phi_z, phi_y, beta, b_star, flat, 0.0, 0.0, 0.0, 1.0)
    assert np.array_equal(cm.c, np.zeros_like(cm.c))


def test_cost_matrix_wavelet_term_scales(rng):
    y, z, phi_z, phi_y, beta, b_star, h_bar = make_cost_inputs(rng)
    beta2 = {1: 2.0}
    a = cost_matrix(y, z, phi_z, phi_y, beta, b_star, h_bar, 0.0, 1.0, 0.0, 0.0)
    b = cost_matrix(y, z, phi_z, phi_y, beta2, b_star, h_bar, 0.0, 1.0, 0.0, 0.0)
    # min-max normalization makes the blended cost scale free
    assert np.allclose(a.c, b.c, atol=1e-12)
    assert np.allclose(2.0 * a.d_wavelet, b.d_wavelet, atol=1e-12)


# ------------------------------------------------------------------ hungarian

def test_hungarian_identity_on_diagonal():
    c = np.ones((3, 3))
    np.fill_diagonal(c, -1.0)
    assert hungarian(c).tolist() == [0, 1, 2]


def test_hungarian_small_example():
    c = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 1.0]])
    pi = hungarian(c)
    assert pi.tolist() == [0, 2]
    assert c[[0, 1], pi].sum() == 2.0


def test_hungarian_rejects_wide_k():
    with pytest.raises(Infeasible):
        hungarian(np.zeros((4, 3)))


def test_hungarian_rejects_nonfinite():
    c = np.zeros((2, 3))
    c[0, 0] = np.nan
    with pytest.raises(InternalError):
        hungarian(c)


def test_hungarian_matches_brute_force(rng):
    for trial in range(60):
        k = int(rng.integers(1, 5))
        n = int(rng.integers(k, 7))
        c = rng.uniform(-1.0, 1.0, size=(k, n))
        pi = hungarian(c)
        _, best_cost = brute_force_assignment(c)
        got_cost = c[np.arange(k), pi].sum()
        assert len(np.unique(pi)) == k
        assert abs(got_cost - best_cost) < 1e-12


def test_hungarian_integer_costs_brute_force(rng):
    for trial in range(40):
        k = int(rng.integers(2, 5))
        n = int(rng.integers(k, 7))
        c = rng.integers(0, 9, size=(k, n)).astype(np.float64)
        pi = hungarian(c)
        _, best_cost = brute_force_assignment(c)
        assert abs(c[np.arange(k), pi].sum() - best_cost) < 1e-12


def test_hungarian_scale_invariant_optimum(rng):
    # positive rescaling keeps the same total optimal cost ratio
    c = rng.uniform(0.0, 1.0, size=(4, 6))
    pi1 = hungarian(c)
    pi2 = hungarian(3.7 * c)
    t1 = c[np.arange(4), pi1].sum()
    t2 = c[np.arange(4), pi2].sum()
    assert abs(t1 - t2) < 1e-12  # both hit the same optimal total


# -------------------------------------------------------------------- emit/io

def test_emit_writes_manifest(tmp_path, rng):
    c = rng.uniform(size=(3, 5))
    pi = hungarian(c)
    ids = [f"s{i}" for i in range(5)]
    path = tmp_path / "coreset.txt"
    coreset = emit(pi, c, ids, path, seed=7)
    lines = path.read_text().splitlines()
    assert lines[0] == "cast-coreset v1 K=3 N=5 seed=7"
    assert len(lines) == 4
    first = lines[1].split()
    assert first[0] == "0"
    assert int(first[1]) == pi[0]
    assert first[2] == ids[pi[0]]
    assert len(set(coreset.indices.tolist())) == 3
    assert abs(coreset.total_cost - c[np.arange(3), pi].sum()) < 1e-12


def test_emit_rejects_forged_duplicate(tmp_path, rng):
    c = rng.uniform(size=(3, 5))
    with pytest.raises(InternalError):
        emit(np.array([1, 1, 2]), c, [f"s{i}" for i in range(5)], tmp_path / "m", 0)


def test_manifest_round_trip(tmp_path, rng):
    c = rng.uniform(size=(4, 8))
    pi = hungarian(c)
    ids = [f"sample-{i:03d}" for i in range(8)]
    path = tmp_path / "m.txt"
    coreset = emit(pi, c, ids, path, seed=11)
    indices, rids, costs, k, n, seed = read_manifest(path)
    assert np.array_equal(indices, coreset.indices)
    assert rids == coreset.ids
    assert k == 4 and n == 8 and seed == 11
    # 9 significant digits survive the text round trip
    assert np.allclose(costs, coreset.costs, rtol=1e-8)


def test_manifest_rejects_other_files(tmp_path):
    path = tmp_path / "bogus.txt"
    path.write_text("hello world\n")
    with pytest.raises(InternalError):
        read_manifest(path)


def test_write_manifest_deterministic_bytes(tmp_path, rng):
    c = rng.uniform(size=(3, 6))
    pi = hungarian(c)
    ids = [f"s{i}" for i in range(6)]
    p1, p2 = tmp_path / "a", tmp_path / "b"
    emit(pi, c, ids, p1, seed=3)
    emit(pi, c, ids, p2, seed=3)
    assert p1.read_bytes() == p2.read_bytes()