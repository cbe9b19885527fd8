"""Spatial soft relation graph and relation-aware coverage loss.

Direct proxy coverage of each node is propagated one step through a relation
graph that mixes geometric decay with cross-modal topological support. The
loss rewards indirect coverage everywhere (log barrier) and penalizes sharp
coverage differences across related nodes, which pushes proxies out of
already-covered dense regions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import backend
from .topology import SparseGraph

_EPS = 1e-12


@dataclass
class RelationGraph:
    graph: SparseGraph  # symmetric, zero diagonal, weights in [0, 1]
    sigma_r: float
    eta: float

    @property
    def n(self) -> int:
        return self.graph.n


def relation_graph(
    z: np.ndarray,
    hat_img: SparseGraph,
    hat_txt: SparseGraph,
    sigma_r: float | None,
    eta: float,
    support_cap: int,
) -> RelationGraph:
    """Geometric-decay relation weights on graph edges plus spatial neighbors.

    Support = union of both refined modality edge sets, extended by each
    node's support_cap nearest Z-neighbors. R_ij = g_ij * (eta * r_cross +
    (1 - eta)) with g_ij = exp(-||z_i - z_j||^2 / sigma_r^2) and r_cross the
    stronger of the two modality edge weights. sigma_r=None resolves to the
    median distance over the support pairs (1.0 if the support is empty).
    """
    z = np.asarray(z, dtype=np.float64)
    n = z.shape[0]
    pattern = (hat_img.csr != 0) + (hat_txt.csr != 0)
    if support_cap > 0 and n > support_cap:
        idx, _ = backend.knn_scan(z, support_cap)
        rows = np.repeat(np.arange(n, dtype=np.int64), support_cap)
        near = sp.coo_matrix(
            (np.ones(n * support_cap, dtype=bool), (rows, idx.ravel())), shape=(n, n)
        )
        pattern = pattern + near + near.T
    coo = sp.coo_matrix(pattern)
    keep = coo.row < coo.col
    ii = coo.row[keep].astype(np.int64)
    jj = coo.col[keep].astype(np.int64)
    d2 = backend.pair_sq(z, ii, jj)
    if sigma_r is None or sigma_r <= 0.0:
        sigma_r = float(np.median(np.sqrt(d2))) if len(d2) else 1.0
        if sigma_r <= 0.0:
            sigma_r = 1.0
    g = np.exp(-d2 / (sigma_r * sigma_r))
    cross = np.maximum(_gather(hat_img, ii, jj), _gather(hat_txt, ii, jj))
    weights = g * (eta * cross + (1.0 - eta))
    return RelationGraph(
        graph=SparseGraph.from_edges(n, ii, jj, weights), sigma_r=sigma_r, eta=eta
    )


def _gather(graph: SparseGraph, ii, jj) -> np.ndarray:
    if len(ii) == 0:
        return np.zeros(0)
    return np.asarray(graph.csr[ii, jj]).ravel()


def direct_coverage(z: np.ndarray, y: np.ndarray, tau_c: float) -> np.ndarray:
    """h_i = mean_k exp(-||z_i - y_k||^2 / tau_c), in (0, 1]."""
    d2 = backend.pairwise_sq(np.asarray(y, dtype=np.float64), np.asarray(z, dtype=np.float64))
    return np.exp(-d2 / tau_c).mean(axis=0)


def propagate(h: np.ndarray, relation: RelationGraph, beta: float) -> np.ndarray:
    """One step of row-normalized propagation: (1-beta) h + beta R_norm h.

    Rows with zero relation mass propagate nothing and keep h unchanged, so
    the output stays a convex combination of h values.
    """
    r = relation.graph.csr
    mass = np.asarray(r.sum(axis=1)).ravel()
    has = mass > 0.0
    inv = np.where(has, 1.0 / np.where(has, mass, 1.0), 0.0)
    mixed = (r @ h) * inv
    out = (1.0 - beta) * h + beta * mixed
    out[~has] = h[~has]
    return out


def lsrc_loss(h: np.ndarray, h_bar: np.ndarray, relation: RelationGraph, mu: float) -> float:
    """Coverage barrier plus relation-weighted smoothness (value only)."""
    cover = -np.mean(np.log(h_bar + _EPS))
    ii, jj, w = relation.graph.edges_upper()
    if len(ii) == 0 or mu == 0.0:
        return float(cover)
    smooth = (w * (h[ii] - h[jj]) ** 2).sum() / (w.sum() + _EPS)
    return float(cover + mu * smooth)


class LsrcTerm:
    """Evaluates the coverage loss and its gradient with respect to Y.

    The relation graph is treated as constant (it depends only on Z); the
    gradient chains through direct coverage and the propagation step.
    """

    def __init__(self, z: np.ndarray, relation: RelationGraph, tau_c: float,
                 beta: float, mu: float):
        self.z = np.asarray(z, dtype=np.float64)
        self.relation = relation
        self.tau_c = float(tau_c)
        self.beta = float(beta)
        self.mu = float(mu)
        r = relation.graph.csr
        mass = np.asarray(r.sum(axis=1)).ravel()
        self._has_mass = mass > 0.0
        inv = np.where(self._has_mass, 1.0 / np.where(self._has_mass, mass, 1.0), 0.0)
        self._r_norm = sp.diags(inv) @ r  # row-normalized relation
        self._r = r
        self._pair_mass = r.sum() / 2.0  # sum over unordered pairs
        self._wdeg = mass

    def eval(self, y: np.ndarray, d2_yz: np.ndarray | None = None):
        """Returns (value, grad K x D, h, h_bar)."""
        n = self.z.shape[0]
        k = y.shape[0]
        if d2_yz is None:
            d2_yz = backend.pairwise_sq(y, self.z)
        ecov = np.exp(-d2_yz / self.tau_c)
        h = ecov.mean(axis=0)
        h_bar = self._propagate(h)

        value = -np.mean(np.log(h_bar + _EPS))
        g_hbar = -1.0 / (n * (h_bar + _EPS))
        # transpose of the effective propagation operator
        flow = np.where(self._has_mass, (1.0 - self.beta) * g_hbar, g_hbar)
        g_h = flow + self.beta * (self._r_norm.T @ (g_hbar * self._has_mass))

        if self.mu > 0.0 and self._pair_mass > 0.0:
            diff = self._wdeg * h - self._r @ h
            denom = self._pair_mass + _EPS
            value += self.mu * float(h @ diff) / denom
            g_h = g_h + (2.0 * self.mu / denom) * diff

        w = g_h[None, :] * ecov
        grad = (-2.0 / (k * self.tau_c)) * (w.sum(axis=1)[:, None] * y - w @ self.z)
        return float(value), grad, h, h_bar

    def _propagate(self, h: np.ndarray) -> np.ndarray:
        mixed = self._r_norm @ h
        out = (1.0 - self.beta) * h + self.beta * mixed
        out[~self._has_mass] = h[~self._has_mass]
        return out
