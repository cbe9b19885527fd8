"""Proxy initialization, coarse-to-fine scale schedule, and gradient descent.

Plain full-batch gradient descent with global norm clipping on
L = L_wavelet + lambda_lsrc * L_LSRC + lambda_reg * L_reg. Larger diffusion
scales activate first; finer scales unlock at evenly spaced step fractions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import backend
from .config import RunConfig
from .errors import KOutOfRange, NonFiniteLoss
from .lsrc import LsrcTerm
from .matching import WaveletMatcher, proxy_weights_batch


def init_proxies(z: np.ndarray, k: int, seed):
    """Farthest-point initialization from a seeded random start row.

    Returns (Y copy of the selected rows, selected indices).
    """
    z = np.asarray(z, dtype=np.float64)
    n = z.shape[0]
    if not 1 <= k <= n:
        raise KOutOfRange(f"k={k} outside [1, {n}]")
    rng = np.random.default_rng(seed)
    start = int(rng.integers(n))
    idx = backend.farthest_points(z, k, start)
    return z[idx].copy(), idx


def schedule(step: int, total_steps: int, scales, full_frac: float = 0.6):
    """Active scale subset at a step: coarsest first, all by full_frac.

    Activation thresholds are evenly spaced over [0, full_frac]; the largest
    scale is active from step 0.
    """
    ordered = sorted(int(s) for s in scales)
    m = len(ordered)
    if m == 1 or total_steps <= 0:
        return tuple(ordered)
    frac = step / total_steps
    thresholds = [t * full_frac / (m - 1) for t in range(m)]
    count = sum(1 for t in thresholds if t <= frac + 1e-12)
    return tuple(ordered[m - count:])


def reg_loss(y: np.ndarray, margin: float, w_div: float, diameter: float = np.inf):
    """Anti-collapse hinge plus diversity reward over proxy pairs.

    value = mean over pairs of max(0, margin - d)^2
            - w_div * min(mean pairwise distance, diameter)
    The diversity term is clamped once mean distance exceeds `diameter`
    (gradient zero there). Coincident pairs contribute zero direction.
    Returns (value, gradient K x D).
    """
    y = np.asarray(y, dtype=np.float64)
    k = y.shape[0]
    grad = np.zeros_like(y)
    if k < 2:
        return 0.0, grad
    d2 = backend.pairwise_sq(y, y)
    d = np.sqrt(np.maximum(d2, 0.0))
    iu, ju = np.triu_indices(k, 1)
    pairs = len(iu)
    pair_d = d[iu, ju]
    hinge = np.maximum(margin - pair_d, 0.0)
    anti = float((hinge * hinge).sum() / pairs)
    mean_d = float(pair_d.sum() / pairs)
    div_clamped = mean_d >= diameter
    div = -w_div * min(mean_d, diameter)

    hinge_full = np.maximum(margin - d, 0.0)
    np.fill_diagonal(hinge_full, 0.0)
    safe = d > 1e-12
    coef = np.zeros_like(d)
    coef[safe] = -2.0 * hinge_full[safe] / d[safe]
    if w_div > 0.0 and not div_clamped:
        coef[safe] += -w_div / d[safe]
    coef /= pairs
    np.fill_diagonal(coef, 0.0)
    grad = coef.sum(axis=1)[:, None] * y - coef @ y
    return anti + div, grad


def init_margin(y0: np.ndarray) -> float:
    """Half the median nearest-other-proxy distance of the initial layout."""
    k = y0.shape[0]
    if k < 2:
        return 0.0
    d2 = backend.pairwise_sq(y0, y0)
    np.fill_diagonal(d2, np.inf)
    nearest = np.sqrt(d2.min(axis=1))
    return 0.5 * float(np.median(nearest))


def data_diameter(z: np.ndarray, block: int = 1024) -> float:
    """Exact max pairwise distance, computed in blocks."""
    z = np.asarray(z, dtype=np.float64)
    sq = np.einsum("ij,ij->i", z, z)
    best = 0.0
    for lo in range(0, z.shape[0], block):
        hi = min(lo + block, z.shape[0])
        d2 = sq[lo:hi, None] + sq[None, :] - 2.0 * (z[lo:hi] @ z.T)
        best = max(best, float(d2.max()))
    return float(np.sqrt(max(best, 0.0)))


@dataclass
class HistoryRow:
    step: int
    active_scales: tuple
    l_dist: float
    l_edge: float
    l_cov: float
    l_lsrc: float
    l_reg: float
    total: float


@dataclass
class OptimizerState:
    y: np.ndarray
    init_indices: np.ndarray
    history: list = field(default_factory=list)
    margin: float = 0.0
    seed: int = 0


def run(
    z: np.ndarray,
    matcher: WaveletMatcher,
    lsrc_term: LsrcTerm,
    k: int,
    config: RunConfig,
    init_seed,
) -> OptimizerState:
    """Optimize K proxies; records one history row per step plus a final row.

    Deterministic for fixed (seed, config). Raises NonFiniteLoss with the
    offending step index if any component goes NaN/inf.
    """
    z = np.asarray(z, dtype=np.float64)
    y, init_idx = init_proxies(z, k, init_seed)
    margin = init_margin(y)
    diameter = data_diameter(z) if (config.lambda_reg > 0 and config.w_div > 0) else np.inf
    state = OptimizerState(y=y, init_indices=init_idx, margin=margin, seed=config.seed)
    k_proxy = min(config.k_proxy, z.shape[0])

    def evaluate(step_y, active):
        d2_yz = backend.pairwise_sq(step_y, z)
        eta_idx, eta = proxy_weights_batch(step_y, z, k_proxy, config.tau_eta, d2=d2_yz)
        wl = matcher.loss(step_y, eta_idx, eta, active)
        ls_val, ls_grad, _, _ = lsrc_term.eval(step_y, d2_yz)
        rg_val, rg_grad = reg_loss(step_y, margin, config.w_div, diameter)
        total = wl.total + config.lambda_lsrc * ls_val + config.lambda_reg * rg_val
        grad = wl.grad + config.lambda_lsrc * ls_grad + config.lambda_reg * rg_grad
        return wl, ls_val, rg_val, total, grad

    for step in range(config.steps):
        active = schedule(step, config.steps, config.scales, config.sched_full)
        wl, ls_val, rg_val, total, grad = evaluate(state.y, active)
        if not np.isfinite(total) or not np.all(np.isfinite(grad)):
            raise NonFiniteLoss(step)
        state.history.append(
            HistoryRow(
                step=step,
                active_scales=active,
                l_dist=wl.dist_total,
                l_edge=wl.edge_total,
                l_cov=wl.cov_total,
                l_lsrc=ls_val,
                l_reg=rg_val,
                total=total,
            )
        )
        norm = float(np.linalg.norm(grad))
        if norm > config.clip_norm:
            grad = grad * (config.clip_norm / norm)
        state.y = state.y - config.lr * grad

    active = schedule(config.steps, max(config.steps, 1), config.scales, config.sched_full)
    wl, ls_val, rg_val, total, _ = evaluate(state.y, active)
    if not np.isfinite(total):
        raise NonFiniteLoss(config.steps)
    state.history.append(
        HistoryRow(
            step=config.steps,
            active_scales=active,
            l_dist=wl.dist_total,
            l_edge=wl.edge_total,
            l_cov=wl.cov_total,
            l_lsrc=ls_val,
            l_reg=rg_val,
            total=total,
        )
    )
    return state
