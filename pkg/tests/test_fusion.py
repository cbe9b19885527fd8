"""Diffusion-wavelet responses, entropy collapse scores, consensus blending."""

from __future__ import annotations

import math

import numpy as np
import pytest

from castsel.errors import ShapeMismatch
from castsel.fusion import (
    FusionWeights,
    consensus_response,
    fuse,
    fusion_weights,
    probe,
    reconstruct_unified,
    response_entropy,
    transition,
    union_support,
    wavelet_response,
)
from castsel.topology import SparseGraph
from tests.conftest import random_graph


# ----------------------------------------------------------------- transition

def test_transition_two_node_swap():
    g = SparseGraph.from_edges(2, [0], [1], [0.8])
    p = transition(g).csr.toarray()
    assert np.allclose(p, [[0.0, 1.0], [1.0, 0.0]])


def test_transition_isolated_self_loop():
    g = SparseGraph.from_edges(3, [0], [1], [0.5])
    p = transition(g).csr.toarray()
    assert np.allclose(p[2], [0.0, 0.0, 1.0])
    assert np.allclose(p.sum(axis=1), 1.0)


def test_transition_triangle_uniform():
    g = SparseGraph.from_edges(3, [0, 0, 1], [1, 2, 2], [0.4, 0.4, 0.4])
    p = transition(g).csr.toarray()
    assert np.allclose(p, (np.ones((3, 3)) - np.eye(3)) / 2.0)


def test_transition_rows_sum_to_one(rng):
    g = random_graph(20, rng, p=0.3, isolated=3)
    p = transition(g).csr.toarray()
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-12)


# ---------------------------------------------------------------------- probe

def test_probe_deterministic():
    assert np.array_equal(probe(10, 4, 7), probe(10, 4, 7))
    assert not np.array_equal(probe(10, 4, 7), probe(10, 4, 8))


def test_probe_standardized():
    q = probe(50, 6, 0)
    assert np.allclose(q.mean(axis=0), 0.0, atol=1e-12)
    assert np.allclose(q.std(axis=0), 1.0, atol=1e-12)


def test_probe_two_rows_are_signs():
    q = probe(2, 3, 1)
    assert np.allclose(np.abs(q), 1.0)
    assert np.allclose(q.sum(axis=0), 0.0, atol=1e-12)


# ----------------------------------------------------------- wavelet response

def test_wavelet_rejects_bad_scale():
    g = SparseGraph.from_edges(2, [0], [1], [1.0])
    with pytest.raises(ValueError):
        wavelet_response(transition(g), np.ones((2, 1)), 0)


def test_wavelet_two_node_alternation():
    # P swaps the two nodes: P^1 q - P^2 q = (q_swapped) - q
    g = SparseGraph.from_edges(2, [0], [1], [1.0])
    q = np.array([[1.0], [0.0]])
    w = wavelet_response(transition(g), q, 1)
    assert np.allclose(w, [[-1.0], [1.0]])


def dense_response_oracle(p_dense: np.ndarray, q: np.ndarray, s: int) -> np.ndarray:
    ps = np.linalg.matrix_power(p_dense, s)
    return ps @ q - ps @ ps @ q


def test_wavelet_matches_dense_power_oracle(rng):
    g = random_graph(25, rng, p=0.25, isolated=2)
    p = transition(g)
    q = probe(25, 5, 3)
    for s in (1, 2, 4, 8):
        got = wavelet_response(p, q, s)
        want = dense_response_oracle(p.csr.toarray(), q, s)
        assert np.allclose(got, want, atol=1e-10)


def test_wavelet_vanishes_at_large_scale(rng):
    # on a connected non-bipartite graph the walk mixes, so the band-pass
    # response decays with scale
    g = SparseGraph.from_edges(5, [0, 0, 1, 2, 3, 0], [1, 2, 2, 3, 4, 4],
                               [0.9, 0.8, 0.7, 0.6, 0.5, 0.4])
    p = transition(g)
    q = probe(5, 4, 2)
    norm64 = np.linalg.norm(wavelet_response(p, q, 64))
    assert norm64 < 1e-6


# -------------------------------------------------------------------- entropy

def test_entropy_uniform_energy_is_one():
    w = np.ones((8, 3))
    assert abs(response_entropy(w) - 1.0) < 1e-9


def test_entropy_concentrated_is_zero():
    w = np.zeros((8, 3))
    w[0, 0] = 5.0
    assert response_entropy(w) < 1e-9


def test_entropy_two_of_four_nodes():
    w = np.zeros((4, 2))
    w[0] = [1.0, 0.0]
    w[1] = [0.0, 1.0]
    assert abs(response_entropy(w) - 0.5) < 1e-9


def test_entropy_zero_response_maps_to_one():
    assert response_entropy(np.zeros((6, 2))) == 1.0


def test_entropy_scale_invariant(rng):
    w = rng.standard_normal((12, 4))
    assert abs(response_entropy(w) - response_entropy(3.7 * w)) < 1e-9


# ------------------------------------------------------------- fusion weights

def test_fusion_weights_equal_entropy_is_half():
    fw = fusion_weights(0.4, 0.4, 0.5)
    assert fw.gamma_img == 0.5
    assert fw.gamma_txt == 0.5


def test_fusion_weights_unit_gap_logistic():
    # C_img = 0, C_txt = 1 at temperature 1: gamma_img = 1/(1+e^-1)
    fw = fusion_weights(1.0, 0.0, 1.0)
    assert abs(fw.gamma_img - 1.0 / (1.0 + math.exp(-1.0))) < 1e-12
    assert abs(fw.gamma_img - 0.7310585786300049) < 1e-12


def test_fusion_weights_low_temperature_saturates():
    fw = fusion_weights(1.0, 0.0, 1e-3)
    assert fw.gamma_img > 1.0 - 1e-12


def test_fusion_weights_sum_to_one(rng):
    for _ in range(10):
        h_i, h_t = rng.uniform(0, 1, 2)
        fw = fusion_weights(h_i, h_t, 0.5)
        assert abs(fw.gamma_img + fw.gamma_txt - 1.0) < 1e-12
        # the less collapsed (higher entropy) modality gets the larger share
        if h_i > h_t:
            assert fw.gamma_img >= fw.gamma_txt


def test_consensus_blend_and_shape_check(rng):
    w_i = rng.standard_normal((6, 3))
    w_t = rng.standard_normal((6, 3))
    fw = FusionWeights(0.5, 0.5, 0.5, 0.5, 0.25, 0.75)
    got = consensus_response(w_i, w_t, fw)
    assert np.allclose(got, 0.25 * w_i + 0.75 * w_t)
    with pytest.raises(ShapeMismatch):
        consensus_response(w_i, rng.standard_normal((5, 3)), fw)


# -------------------------------------------------------------- reconstruction

def test_union_support_combines_edges():
    a = SparseGraph.from_edges(3, [0], [1], [0.5])
    b = SparseGraph.from_edges(3, [1], [2], [0.5])
    ii, jj = union_support(a, b)
    assert sorted(zip(ii.tolist(), jj.tolist())) == [(0, 1), (1, 2)]


def test_reconstruct_aligned_rows_keep_weight():
    y = np.array([[1.0, 0.0], [2.0, 0.0], [0.0, 1.0]])
    support = (np.array([0, 0]), np.array([1, 2]))
    g = reconstruct_unified({1: y}, {1: 1.0}, support, lambda_sp=0.25, n=3)
    dense = g.to_dense()
    assert abs(dense[0, 1] - 0.75) < 1e-12  # cos 1 minus threshold
    assert dense[0, 2] == 0.0  # orthogonal responses drop out


def test_reconstruct_negative_cosine_clipped():
    y = np.array([[1.0, 0.0], [-1.0, 0.0]])
    support = (np.array([0]), np.array([1]))
    g = reconstruct_unified({1: y}, {1: 1.0}, support, lambda_sp=0.0, n=2)
    assert g.n_edges == 0


def test_reconstruct_zero_row_gives_no_edge():
    y = np.array([[1.0, 0.0], [0.0, 0.0]])
    support = (np.array([0]), np.array([1]))
    g = reconstruct_unified({1: y}, {1: 1.0}, support, lambda_sp=0.0, n=2)
    assert g.n_edges == 0


def test_reconstruct_threshold_at_one_empties():
    y = np.array([[1.0, 0.0], [1.0, 0.0]])
    support = (np.array([0]), np.array([1]))
    g = reconstruct_unified({1: y}, {1: 1.0}, support, lambda_sp=1.0, n=2)
    assert g.n_edges == 0


def test_reconstruct_multi_scale_mixture():
    y1 = np.array([[1.0, 0.0], [1.0, 0.0]])   # cos 1
    y2 = np.array([[1.0, 0.0], [0.0, 1.0]])   # cos 0
    support = (np.array([0]), np.array([1]))
    g = reconstruct_unified({1: y1, 2: y2}, {1: 0.6, 2: 0.4}, support, 0.1, 2)
    assert abs(g.to_dense()[0, 1] - 0.5) < 1e-12


def test_reconstruct_stays_on_support(rng):
    y = rng.standard_normal((6, 4))
    support = (np.array([0, 2]), np.array([1, 3]))
    g = reconstruct_unified({1: y}, {1: 1.0}, support, 0.0, 6)
    dense = g.to_dense()
    allowed = {(0, 1), (2, 3)}
    nz = {(i, j) for i, j in zip(*np.nonzero(np.triu(dense)))}
    assert nz <= allowed


# ----------------------------------------------------------------------- fuse

def test_fuse_end_to_end_valid_graph(rng):
    a = random_graph(20, rng, p=0.3)
    b = random_graph(20, rng, p=0.3)
    omega = {1: 0.5, 2: 0.5}
    b_star, weights = fuse(a, b, (1, 2), probe_width=8, probe_seed=5,
                           temperature=0.5, omega=omega, lambda_sp=0.05)
    dense = b_star.to_dense()
    assert np.array_equal(dense, dense.T)
    assert dense.min() >= 0.0
    assert set(weights) == {1, 2}
    for fw in weights.values():
        assert abs(fw.gamma_img + fw.gamma_txt - 1.0) < 1e-12
    # support containment: unified edges lie inside the union support
    ua, uj = union_support(a, b)
    allowed = set(zip(ua.tolist(), uj.tolist()))
    bi, bj, _ = b_star.edges_upper()
    assert set(zip(bi.tolist(), bj.tolist())) <= allowed


def test_fuse_deterministic(rng):
    a = random_graph(15, rng, p=0.3)
    b = random_graph(15, rng, p=0.3)
    omega = {1: 1.0}
    g1, _ = fuse(a, b, (1,), 4, 9, 0.5, omega, 0.05)
    g2, _ = fuse(a, b, (1,), 4, 9, 0.5, omega, 0.05)
    assert np.array_equal(g1.to_dense(), g2.to_dense())
