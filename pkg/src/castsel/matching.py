"""Fused node representations and the multi-scale wavelet matching loss.

Proxies are continuous points in the fused space Z. Their diffusion responses
are soft interpolations of node responses through distance-decay weights, and
the loss compares proxy and node response distributions per scale (sliced
Wasserstein), pulls proxies toward high-energy boundary nodes, and rewards
response-space coverage. All gradients are hand-derived chain rules; sorting
permutations, argmins, and interpolation supports are frozen within one
evaluation (a subgradient choice, exact away from tie points).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .errors import EmptySet, InternalError, ShapeMismatch
from .fusion import TransitionMatrix, probe, transition, wavelet_response
from .topology import SparseGraph

_EPS = 1e-12


@dataclass
class FusedRepresentation:
    """Row-normalized [image | text | diffusion] concatenation."""

    z: np.ndarray  # N x D_Z float64
    offsets: dict  # block name -> (start, stop)

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @property
    def dim(self) -> int:
        return self.z.shape[1]


def build_z(
    img_norm: np.ndarray,
    txt_norm: np.ndarray,
    b_star: SparseGraph,
    scales,
    probe_width: int,
    probe_seed,
):
    """Assemble Z = normalize([img | txt | diffusion responses of B*]).

    Returns (FusedRepresentation, TransitionMatrix of B*). Zero rows stay
    zero after the final normalization.
    """
    img_norm = np.asarray(img_norm, dtype=np.float64)
    txt_norm = np.asarray(txt_norm, dtype=np.float64)
    if img_norm.shape[0] != txt_norm.shape[0]:
        raise ShapeMismatch(
            f"modalities disagree on rows: {img_norm.shape[0]} vs {txt_norm.shape[0]}"
        )
    n = img_norm.shape[0]
    p_star = transition(b_star)
    q_mat = probe(n, probe_width, probe_seed)
    blocks = [img_norm, txt_norm]
    for s in scales:
        blocks.append(wavelet_response(p_star, q_mat, s))
    z = np.concatenate(blocks, axis=1)
    norms = np.linalg.norm(z, axis=1)
    nz = norms > 0.0
    z[nz] /= norms[nz, None]
    d_i = img_norm.shape[1]
    d_t = txt_norm.shape[1]
    offsets = {
        "img": (0, d_i),
        "txt": (d_i, d_i + d_t),
        "diff": (d_i + d_t, z.shape[1]),
    }
    return FusedRepresentation(z=z, offsets=offsets), p_star


def node_response(z: np.ndarray, p_star: TransitionMatrix, s: int) -> np.ndarray:
    """Diffusion response of arbitrary node signals: P*^s Z - P*^2s Z."""
    return wavelet_response(p_star, np.asarray(z, dtype=np.float64), s)


def _smallest_k(d2: np.ndarray, k: int) -> np.ndarray:
    """Per-row indices of the k smallest values, ties to the lower index."""
    rows, n = d2.shape
    if k >= n:
        order = np.argsort(d2, axis=1, kind="stable")
        return order[:, :k]
    part = np.argpartition(d2, k - 1, axis=1)[:, :k]
    kth = np.take_along_axis(d2, part, axis=1).max(axis=1)
    out = np.empty((rows, k), dtype=np.int64)
    for r in range(rows):
        cand = np.flatnonzero(d2[r] <= kth[r])
        out[r] = cand[np.argsort(d2[r, cand], kind="stable")[:k]]
    return out


def proxy_weights_batch(y: np.ndarray, z: np.ndarray, k_proxy: int, tau_eta: float, d2=None):
    """k_proxy nearest nodes per proxy with softmax(-d^2/tau_eta) weights.

    Returns (idx: K x k_proxy int64, eta: K x k_proxy, rows summing to 1).
    """
    if d2 is None:
        d2 = backend.pairwise_sq(y, z)
    idx = _smallest_k(d2, k_proxy)
    sel = np.take_along_axis(d2, idx, axis=1)
    u = -sel / tau_eta
    u -= u.max(axis=1, keepdims=True)
    eta = np.exp(u)
    eta /= eta.sum(axis=1, keepdims=True)
    return idx, eta


def proxy_weights(y_k: np.ndarray, z: np.ndarray, k_proxy: int, tau_eta: float):
    """Single-proxy neighbor set and interpolation weights."""
    idx, eta = proxy_weights_batch(np.asarray(y_k, dtype=np.float64).reshape(1, -1),
                                   z, k_proxy, tau_eta)
    return idx[0], eta[0]


def _unit_directions(n_proj: int, dim: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_proj, dim))
    norms = np.linalg.norm(dirs, axis=1)
    norms[norms == 0.0] = 1.0
    return dirs / norms[:, None]


def _quantile_rows(sorted_vals: np.ndarray, m: int):
    """Linear interpolation of sorted columns at m midpoint quantiles.

    Returns (values m x P, lo, hi, frac) so callers can reuse the positions.
    """
    n = sorted_vals.shape[0]
    pos = np.clip((np.arange(m) + 0.5) * n / m - 0.5, 0.0, n - 1.0)
    lo = np.floor(pos).astype(np.int64)
    hi = np.minimum(lo + 1, n - 1)
    frac = pos - lo
    vals = sorted_vals[lo] * (1.0 - frac)[:, None] + sorted_vals[hi] * frac[:, None]
    return vals, lo, hi, frac


def swd(a: np.ndarray, b: np.ndarray, n_proj: int, seed, cost: str = "squared") -> float:
    """Sliced Wasserstein distance between two point sets of any sizes.

    Projects both sets on seeded unit directions, sorts, and compares the two
    sorted sequences at min(n, m) midpoint quantiles (the longer side is
    resampled by linear interpolation). Deterministic given the seed;
    symmetric in its arguments.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(b, dtype=np.float64))
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise EmptySet("swd requires nonempty point sets")
    if a.shape[1] != b.shape[1]:
        raise ShapeMismatch(f"point dims differ: {a.shape[1]} vs {b.shape[1]}")
    dirs = _unit_directions(n_proj, a.shape[1], seed)
    pa = np.sort(a @ dirs.T, axis=0)
    pb = np.sort(b @ dirs.T, axis=0)
    m = min(pa.shape[0], pb.shape[0])
    if pa.shape[0] > m:
        pa = _quantile_rows(pa, m)[0]
    if pb.shape[0] > m:
        pb = _quantile_rows(pb, m)[0]
    diff = pa - pb
    if cost == "absolute":
        return float(np.mean(np.abs(diff)))
    return float(np.mean(diff * diff))


def edge_loss(phi_z: np.ndarray, phi_y: np.ndarray) -> float:
    """Energy-weighted distance to the nearest proxy response.

    sum_i e_i * delta_i / (sum_i e_i + eps) with e_i the node response energy
    and delta_i the squared response gap to the closest proxy.
    """
    r = backend.pairwise_sq(phi_y, phi_z)
    delta = r.min(axis=0)
    e = np.einsum("ij,ij->i", phi_z, phi_z)
    return float((e * delta).sum() / (e.sum() + _EPS))


def coverage_loss(phi_z: np.ndarray, phi_y: np.ndarray, tau: float) -> float:
    """Negative log of mean proxy coverage in response space."""
    r = backend.pairwise_sq(phi_y, phi_z)
    cov = np.exp(-r / tau).mean(axis=0)
    return float(-np.mean(np.log(cov + _EPS)))


@dataclass
class ScaleLoss:
    dist: float
    edge: float
    cov: float


@dataclass
class LossReport:
    per_scale: dict = field(default_factory=dict)  # scale -> ScaleLoss
    dist_total: float = 0.0  # beta-weighted sums over active scales
    edge_total: float = 0.0
    cov_total: float = 0.0
    total: float = 0.0
    grad: np.ndarray | None = None  # d total / d Y, K x D_Z


def _segment_rows(values: np.ndarray, seg: np.ndarray, weights: np.ndarray, k: int):
    """(sum of w, sum of w * row) grouped by segment id in [0, k)."""
    sum_w = np.bincount(seg, weights=weights, minlength=k)
    acc = np.zeros((k, values.shape[1]))
    np.add.at(acc, seg, weights[:, None] * values)
    return sum_w, acc


class WaveletMatcher:
    """Caches node-side responses and evaluates the matching loss + gradient.

    The node side (responses, energies, sorted projections, quantile targets)
    depends only on Z and is computed once; per-step work is proportional to
    the proxy count.
    """

    def __init__(
        self,
        z: np.ndarray,
        p_star: TransitionMatrix,
        scales,
        beta: dict,
        lambda_edge: float,
        lambda_cov: float,
        tau: float,
        n_proj: int,
        k_proxy: int,
        tau_eta: float,
        swd_seed,
        cost: str = "squared",
    ):
        self.z = np.asarray(z, dtype=np.float64)
        self.scales = tuple(int(s) for s in scales)
        self.beta = dict(beta)
        self.lambda_edge = float(lambda_edge)
        self.lambda_cov = float(lambda_cov)
        self.tau = float(tau)
        self.k_proxy = int(k_proxy)
        self.tau_eta = float(tau_eta)
        self.cost = cost
        n, dim = self.z.shape
        self.dirs = _unit_directions(n_proj, dim, swd_seed)
        self.phi_z = {}
        self.energy = {}
        self._proj_sorted = {}
        for s in self.scales:
            phi = wavelet_response(p_star, self.z, s)
            self.phi_z[s] = phi
            self.energy[s] = np.einsum("ij,ij->i", phi, phi)
            self._proj_sorted[s] = np.sort(phi @ self.dirs.T, axis=0)
        self._quantiles = {}  # (scale, k) -> K x P node quantile targets

    def _node_quantiles(self, s: int, k: int) -> np.ndarray:
        key = (s, k)
        if key not in self._quantiles:
            self._quantiles[key] = _quantile_rows(self._proj_sorted[s], k)[0]
        return self._quantiles[key]

    def proxy_responses(self, eta_idx: np.ndarray, eta: np.ndarray) -> dict:
        """Interpolated proxy responses at every scale."""
        return {
            s: np.einsum("kt,ktd->kd", eta, self.phi_z[s][eta_idx])
            for s in self.scales
        }

    def loss(self, y: np.ndarray, eta_idx: np.ndarray, eta: np.ndarray, active) -> LossReport:
        """Loss over the active scales plus d(loss)/dY through the weights."""
        k, dim = y.shape
        n = self.z.shape[0]
        if k > n:
            raise InternalError(f"more proxies ({k}) than nodes ({n})")
        n_proj = self.dirs.shape[0]
        report = LossReport(grad=np.zeros_like(y))
        g_phi = {}
        phi_y_all = self.proxy_responses(eta_idx, eta)
        for s in active:
            beta = self.beta[s]
            phi_y = phi_y_all[s]
            phi_z = self.phi_z[s]

            # distribution term: sorted proxy projections vs node quantiles
            py = phi_y @ self.dirs.T
            order = np.argsort(py, axis=0, kind="stable")
            sy = np.take_along_axis(py, order, axis=0)
            diff = sy - self._node_quantiles(s, k)
            if self.cost == "absolute":
                l_dist = float(np.mean(np.abs(diff)))
                g_sorted = np.sign(diff) / (k * n_proj)
            else:
                l_dist = float(np.mean(diff * diff))
                g_sorted = 2.0 * diff / (k * n_proj)
            g_py = np.zeros_like(py)
            np.put_along_axis(g_py, order, g_sorted, axis=0)
            g_dist = g_py @ self.dirs

            # boundary term: energy-weighted nearest-proxy gap
            r = backend.pairwise_sq(phi_y, phi_z)
            kstar = np.argmin(r, axis=0)
            delta = r[kstar, np.arange(n)]
            e = self.energy[s]
            se = e.sum() + _EPS
            l_edge = float((e * delta).sum() / se)
            w_edge = e / se
            sum_w, acc = _segment_rows(phi_z, kstar, w_edge, k)
            g_edge = 2.0 * (sum_w[:, None] * phi_y - acc)

            # coverage term: negative log mean response-space coverage
            ecov = np.exp(-r / self.tau)
            cov = ecov.mean(axis=0)
            l_cov = float(-np.mean(np.log(cov + _EPS)))
            wmat = ecov / (n * k * self.tau * (cov + _EPS))[None, :]
            g_cov = 2.0 * (wmat.sum(axis=1)[:, None] * phi_y - wmat @ phi_z)

            report.per_scale[s] = ScaleLoss(dist=l_dist, edge=l_edge, cov=l_cov)
            report.dist_total += beta * l_dist
            report.edge_total += beta * l_edge
            report.cov_total += beta * l_cov
            g_phi[s] = beta * (
                g_dist + self.lambda_edge * g_edge + self.lambda_cov * g_cov
            )
        report.total = (
            report.dist_total
            + self.lambda_edge * report.edge_total
            + self.lambda_cov * report.cov_total
        )

        # chain through eta (softmax over -d^2/tau_eta) back to proxy coords
        g_eta = np.zeros_like(eta)
        for s in active:
            g_eta += np.einsum("kd,ktd->kt", g_phi[s], self.phi_z[s][eta_idx])
        g_u = eta * (g_eta - (eta * g_eta).sum(axis=1, keepdims=True))
        z_nbr = self.z[eta_idx]
        report.grad = (-2.0 / self.tau_eta) * (
            g_u.sum(axis=1)[:, None] * y - np.einsum("kt,ktd->kd", g_u, z_nbr)
        )
        return report


def wavelet_loss(
    z: np.ndarray,
    y: np.ndarray,
    p_star: TransitionMatrix,
    active_scales,
    beta: dict,
    lambda_edge: float,
    lambda_cov: float,
    tau: float = 0.5,
    n_proj: int = 64,
    k_proxy: int = 8,
    tau_eta: float = 0.5,
    swd_seed=0,
    cost: str = "squared",
) -> LossReport:
    """One-shot convenience wrapper around WaveletMatcher for a single call."""
    matcher = WaveletMatcher(
        z, p_star, active_scales, beta, lambda_edge, lambda_cov,
        tau, n_proj, k_proxy, tau_eta, swd_seed, cost,
    )
    eta_idx, eta = proxy_weights_batch(y, matcher.z, k_proxy, tau_eta)
    return matcher.loss(y, eta_idx, eta, active_scales)
