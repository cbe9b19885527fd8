"""Synthetic bimodal data, baseline selectors, fidelity metrics, pipeline.

The generator reproduces cross-modal information imbalance at desk scale:
per-modality Gaussian mode clusters with consistent labels, where a fraction
of modes in one modality can be collapsed onto a shared center (that modality
then carries no information separating those modes).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import assignment, fusion, lsrc, matching, optimizer, refinement, topology
from . import backend
from .config import RunConfig
from .errors import KOutOfRange, TooFewSamples
from .feature_store import FeatureMatrix, pair_check, row_normalize
from .matching import swd


@dataclass
class SyntheticSpec:
    n_modes: int
    n_per_mode: int
    d_img: int = 16
    d_txt: int = 16
    separation: float = 10.0
    collapse_img: float = 0.0
    collapse_txt: float = 0.0
    noise_sigma: float = 1.0
    seed: int = 0


def _mode_centers(n_modes: int, dim: int, spacing: float, rng) -> np.ndarray:
    """Mode centers with pairwise distance `spacing` (orthogonal construction
    when n_modes <= dim, random Gaussian layout otherwise)."""
    if n_modes <= dim:
        raw = rng.standard_normal((dim, n_modes))
        q, _ = np.linalg.qr(raw)
        return q.T * (spacing / np.sqrt(2.0))
    return rng.standard_normal((n_modes, dim)) * spacing / np.sqrt(2.0 * dim)


def _collapse(centers: np.ndarray, fraction: float) -> np.ndarray:
    """Merge the last round(fraction * n_modes) mode centers onto one center."""
    m = centers.shape[0]
    n_coll = int(round(fraction * m))
    if n_coll < 2:
        return centers
    out = centers.copy()
    out[m - n_coll :] = centers[m - n_coll]
    return out


def gen_synthetic(spec: SyntheticSpec):
    """Deterministic bimodal mode mixture.

    Returns (img FeatureMatrix, txt FeatureMatrix, labels). Rows are grouped
    by mode; modality noise streams are independent.
    """
    m = spec.n_modes
    npm = spec.n_per_mode
    n = m * npm
    spacing = spec.separation * spec.noise_sigma
    centers_i = _collapse(
        _mode_centers(m, spec.d_img, spacing, np.random.default_rng([spec.seed, 1])),
        spec.collapse_img,
    )
    centers_t = _collapse(
        _mode_centers(m, spec.d_txt, spacing, np.random.default_rng([spec.seed, 2])),
        spec.collapse_txt,
    )
    labels = np.repeat(np.arange(m), npm)
    noise_i = np.random.default_rng([spec.seed, 3]).standard_normal((n, spec.d_img))
    noise_t = np.random.default_rng([spec.seed, 4]).standard_normal((n, spec.d_txt))
    img = centers_i[labels] + spec.noise_sigma * noise_i
    txt = centers_t[labels] + spec.noise_sigma * noise_t
    ids = [f"s{i:06d}" for i in range(n)]
    return (
        FeatureMatrix(ids=ids, values=img),
        FeatureMatrix(ids=list(ids), values=txt),
        labels,
    )


def baseline_select(method: str, z: np.ndarray, k: int, seed) -> np.ndarray:
    """Baseline coreset indices: uniform random, herding, or k-center greedy."""
    z = np.asarray(z, dtype=np.float64)
    n = z.shape[0]
    if not 1 <= k <= n:
        raise KOutOfRange(f"k={k} outside [1, {n}]")
    rng = np.random.default_rng(seed)
    if method == "random":
        return np.sort(rng.choice(n, size=k, replace=False)).astype(np.int64)
    if method == "herding":
        mean = z.mean(axis=0)
        chosen = np.empty(k, dtype=np.int64)
        total = np.zeros(z.shape[1])
        taken = np.zeros(n, dtype=bool)
        for t in range(k):
            cand = (total + z) / (t + 1)
            gap = np.einsum("ij,ij->i", cand - mean, cand - mean)
            gap[taken] = np.inf
            pick = int(np.argmin(gap))
            chosen[t] = pick
            taken[pick] = True
            total += z[pick]
        return chosen
    if method == "kcenter":
        start = int(rng.integers(n))
        return backend.farthest_points(z, k, start)
    raise ValueError(f"unknown baseline method {method!r}")


@dataclass
class FidelityReport:
    swd_to_full: float
    modes_covered: int
    redundancy_rate: float


def fidelity(
    z: np.ndarray,
    coreset_indices,
    labels,
    tau_red: float,
    n_proj: int = 64,
    seed: int = 0,
) -> FidelityReport:
    """Distributional fidelity of a selection against the full set."""
    idx = np.asarray(coreset_indices, dtype=np.int64)
    z = np.asarray(z, dtype=np.float64)
    val = swd(z, z[idx], n_proj=n_proj, seed=seed)
    covered = int(len(np.unique(np.asarray(labels)[idx]))) if labels is not None else 0
    k = len(idx)
    if k < 2:
        rate = 0.0
    else:
        d2 = backend.pairwise_sq(z[idx], z[idx])
        iu, ju = np.triu_indices(k, 1)
        rate = float(np.mean(np.sqrt(d2[iu, ju]) < tau_red))
    return FidelityReport(swd_to_full=val, modes_covered=covered, redundancy_rate=rate)


def neutral_representation(img: FeatureMatrix, txt: FeatureMatrix) -> np.ndarray:
    """Method-neutral sample space for evaluation and baselines:
    row-normalized image and text blocks concatenated."""
    return np.concatenate(
        [row_normalize(img).values, row_normalize(txt).values], axis=1
    )


@dataclass
class PipelineResult:
    coreset: assignment.Coreset
    history: list
    fused: matching.FusedRepresentation
    b_star: topology.SparseGraph
    graph_img: topology.SparseGraph
    graph_txt: topology.SparseGraph
    hat_img: topology.SparseGraph
    hat_txt: topology.SparseGraph
    fusion_weights: dict
    state: optimizer.OptimizerState
    cost: assignment.CostMatrix


def run_pipeline(
    img: FeatureMatrix,
    txt: FeatureMatrix,
    k: int,
    config: RunConfig,
    manifest_path=None,
) -> PipelineResult:
    """Full selection pass from paired feature matrices to a coreset.

    Deterministic for fixed inputs and config. Seed streams are derived from
    config.seed with fixed purpose tags, so stages are independent.
    """
    n = pair_check(img, txt)
    if n <= config.k:
        raise TooFewSamples(f"need more than k={config.k} samples, got {n}")
    if not 1 <= k <= n:
        raise KOutOfRange(f"coreset size {k} outside [1, {n}]")

    if config.zero_img:
        img = FeatureMatrix(ids=list(img.ids), values=np.zeros_like(img.values))

    img_graph_in = row_normalize(img).values if config.normalize_img else img.values
    txt_graph_in = row_normalize(txt).values if config.normalize_txt else txt.values

    graph_img, _, _ = topology.build_modality_graph(img_graph_in, config.k)
    graph_txt, _, _ = topology.build_modality_graph(txt_graph_in, config.k)

    hat_img, hat_txt, _, _ = refinement.refine_pair(
        graph_img, graph_txt, config.theta, config.kappa_max
    )

    omega = config.scale_weights("omega")
    b_star, fus_weights = fusion.fuse(
        hat_img,
        hat_txt,
        config.scales,
        config.probe_width,
        [config.seed, 10],
        config.fusion_temp,
        omega,
        config.lambda_sp,
    )

    fused, p_star = matching.build_z(
        row_normalize(img).values,
        row_normalize(txt).values,
        b_star,
        config.scales,
        config.probe_width,
        [config.seed, 11],
    )

    beta = config.scale_weights("beta_scale")
    matcher = matching.WaveletMatcher(
        fused.z,
        p_star,
        config.scales,
        beta,
        config.lambda_edge,
        config.lambda_cov,
        config.tau,
        config.n_proj,
        config.k_proxy,
        config.tau_eta,
        [config.seed, 12],
        config.swd_cost,
    )
    relation = lsrc.relation_graph(
        fused.z,
        hat_img,
        hat_txt,
        config.sigma_r if config.sigma_r > 0 else None,
        config.eta_rel,
        config.support_cap,
    )
    term = lsrc.LsrcTerm(fused.z, relation, config.tau_c, config.beta_prop, config.mu)

    state = optimizer.run(fused.z, matcher, term, k, config, [config.seed, 13])

    k_proxy = min(config.k_proxy, n)
    eta_idx, eta = matching.proxy_weights_batch(
        state.y, fused.z, k_proxy, config.tau_eta
    )
    phi_y = matcher.proxy_responses(eta_idx, eta)
    _, _, _, h_bar = term.eval(state.y)
    cost = assignment.cost_matrix(
        state.y,
        fused.z,
        matcher.phi_z,
        phi_y,
        beta,
        b_star,
        h_bar,
        config.alpha_d,
        config.alpha_w,
        config.alpha_t,
        config.alpha_q,
    )
    pi = assignment.hungarian(cost.c)
    if manifest_path is not None:
        coreset = assignment.emit(pi, cost.c, img.ids, manifest_path, config.seed)
    else:
        costs = cost.c[np.arange(k), pi]
        coreset = assignment.Coreset(
            indices=pi.copy(),
            ids=[img.ids[int(i)] for i in pi],
            costs=costs,
            total_cost=float(costs.sum()),
            k=k,
            n=n,
            seed=config.seed,
        )
    return PipelineResult(
        coreset=coreset,
        history=state.history,
        fused=fused,
        b_star=b_star,
        graph_img=graph_img,
        graph_txt=graph_txt,
        hat_img=hat_img,
        hat_txt=hat_txt,
        fusion_weights=fus_weights,
        state=state,
        cost=cost,
    )


def write_history_csv(history, path) -> None:
    """Loss history as CSV: step,active_scales,L_dist,L_edge,L_cov,L_lsrc,L_reg,total."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("step,active_scales,L_dist,L_edge,L_cov,L_lsrc,L_reg,total\n")
        for row in history:
            scales = "+".join(str(s) for s in row.active_scales)
            fh.write(
                f"{row.step},{scales},{row.l_dist:.9g},{row.l_edge:.9g},"
                f"{row.l_cov:.9g},{row.l_lsrc:.9g},{row.l_reg:.9g},{row.total:.9g}\n"
            )


def write_labels_tsv(ids, labels, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for sid, lab in zip(ids, labels):
            fh.write(f"{sid}\t{int(lab)}\n")


def read_labels_tsv(path, ids) -> np.ndarray:
    """Labels aligned to `ids` order."""
    table = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            sid, lab = line.split("\t")
            table[sid] = int(lab)
    return np.asarray([table[s] for s in ids], dtype=np.int64)
