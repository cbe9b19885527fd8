"""Shared test helpers: finite-difference gradients and graph builders."""

from __future__ import annotations

import numpy as np
import pytest

from castsel.topology import SparseGraph


def central_diff_grad(f, y: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite-difference gradient of scalar f at y, coordinatewise."""
    g = np.zeros_like(y)
    it = np.nditer(y, flags=["multi_index"])
    for _ in it:
        ix = it.multi_index
        up = y.copy()
        up[ix] += h
        dn = y.copy()
        dn[ix] -= h
        g[ix] = (f(up) - f(dn)) / (2.0 * h)
    return g


def assert_grad_close(analytic: np.ndarray, numeric: np.ndarray, rtol: float = 1e-4,
                      floor: float = 1e-8):
    """Relative comparison on coordinates with non-negligible gradient."""
    mask = np.abs(analytic) > floor
    if not mask.any():
        assert np.allclose(analytic, numeric, atol=1e-7)
        return
    rel = np.abs(analytic[mask] - numeric[mask]) / np.abs(analytic[mask])
    assert rel.max() < rtol, f"max relative gradient error {rel.max():.3e}"


def random_graph(n: int, rng, p: float = 0.3, isolated: int = 0) -> SparseGraph:
    """Random symmetric weighted graph; optionally leave trailing nodes isolated."""
    ii = []
    jj = []
    ww = []
    top = n - isolated
    for i in range(top):
        for j in range(i + 1, top):
            if rng.random() < p:
                ii.append(i)
                jj.append(j)
                ww.append(rng.uniform(0.05, 1.0))
    if not ii:  # keep at least one edge among the connected part
        if top >= 2:
            ii, jj, ww = [0], [1], [0.5]
        else:
            return SparseGraph.from_edges(n, [], [], [])
    return SparseGraph.from_edges(n, ii, jj, ww)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
