"""Command-line driver.

Subcommands: gen (synthetic CFM pair), select (coreset manifest + loss
history), eval (fidelity CSV), baseline (reference selectors), dump-graph
(debug graph serialization). Exit codes: 0 success, 1 engine error, 2 usage.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import assignment, fusion, harness, matching, refinement, topology
from .config import load_config
from .errors import CastselError, IdMismatch
from .feature_store import read_feature_file, row_normalize, write_feature_file
from .harness import (
    SyntheticSpec,
    fidelity,
    gen_synthetic,
    neutral_representation,
    read_labels_tsv,
    run_pipeline,
    write_history_csv,
    write_labels_tsv,
)


def _add_config_args(p):
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--seed", type=int, help="override config seed")
    p.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override any config key (repeatable)",
    )


def _build_config(args):
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise CastselError(f"--set expects KEY=VALUE, got {item!r}")
        key, val = item.split("=", 1)
        overrides[key.strip()] = val.strip()
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = str(args.seed)
    if getattr(args, "zero_img", False):
        overrides["zero_img"] = "true"
    return load_config(args.config, overrides)


def _cmd_gen(args):
    spec = SyntheticSpec(
        n_modes=args.modes,
        n_per_mode=args.per_mode,
        d_img=args.d_img,
        d_txt=args.d_txt,
        separation=args.separation,
        collapse_img=args.collapse_img,
        collapse_txt=args.collapse_txt,
        noise_sigma=args.noise,
        seed=args.seed,
    )
    img, txt, labels = gen_synthetic(spec)
    write_feature_file(f"{args.out_prefix}.img.cfm", img)
    write_feature_file(f"{args.out_prefix}.txt.cfm", txt)
    write_labels_tsv(img.ids, labels, f"{args.out_prefix}.labels.tsv")
    print(
        f"wrote {args.out_prefix}.img.cfm {args.out_prefix}.txt.cfm "
        f"{args.out_prefix}.labels.tsv (N={img.n_samples})"
    )
    return 0


def _cmd_select(args):
    config = _build_config(args)
    img = read_feature_file(args.img)
    txt = read_feature_file(args.txt)
    result = run_pipeline(img, txt, args.k, config, manifest_path=args.out)
    history_path = args.history or f"{args.out}.history.csv"
    write_history_csv(result.history, history_path)
    if args.dump_graph:
        result.b_star.dump_text(args.dump_graph)
    final = result.history[-1].total if result.history else float("nan")
    print(
        f"selected {result.coreset.k} of {result.coreset.n} -> {args.out} "
        f"(final loss {final:.6g}, history {history_path})"
    )
    return 0


def _cmd_baseline(args):
    img = read_feature_file(args.img)
    txt = read_feature_file(args.txt)
    z = neutral_representation(img, txt)
    idx = harness.baseline_select(args.method, z, args.k, args.seed)
    coreset = assignment.Coreset(
        indices=np.asarray(idx, dtype=np.int64),
        ids=[img.ids[int(i)] for i in idx],
        costs=np.zeros(len(idx)),
        total_cost=0.0,
        k=len(idx),
        n=img.n_samples,
        seed=args.seed,
    )
    assignment.write_manifest(coreset, args.out)
    print(f"{args.method} baseline selected {coreset.k} of {coreset.n} -> {args.out}")
    return 0


def _cmd_eval(args):
    img = read_feature_file(args.img)
    txt = read_feature_file(args.txt)
    z = neutral_representation(img, txt)
    labels = read_labels_tsv(args.labels, img.ids) if args.labels else None
    if args.tau_red is not None:
        tau_red = args.tau_red
    else:
        # default: a tenth of the median pairwise distance on a seeded subsample
        sub = z
        if z.shape[0] > 2000:
            sub = z[np.random.default_rng(0).choice(z.shape[0], 2000, replace=False)]
        from . import backend

        d2 = backend.pairwise_sq(sub, sub)
        iu, ju = np.triu_indices(sub.shape[0], 1)
        tau_red = 0.1 * float(np.median(np.sqrt(d2[iu, ju])))
    rows = []
    for path in args.manifest:
        indices, ids, _, _, _, _ = assignment.read_manifest(path)
        for pos, sid in zip(indices, ids):
            if img.ids[int(pos)] != sid:
                raise IdMismatch(
                    f"{path}: index {pos} is {img.ids[int(pos)]!r}, manifest says {sid!r}"
                )
        rep = fidelity(z, indices, labels, tau_red, n_proj=args.n_proj, seed=args.seed)
        rows.append((path, rep))
        covered = rep.modes_covered if labels is not None else "n/a"
        print(
            f"{path}: swd_to_full={rep.swd_to_full:.6g} modes_covered={covered} "
            f"redundancy_rate={rep.redundancy_rate:.4f}"
        )
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("manifest,swd_to_full,modes_covered,redundancy_rate\n")
            for path, rep in rows:
                fh.write(
                    f"{path},{rep.swd_to_full:.9g},{rep.modes_covered},"
                    f"{rep.redundancy_rate:.9g}\n"
                )
    return 0


def _cmd_dump_graph(args):
    config = _build_config(args)
    img = read_feature_file(args.img)
    txt = read_feature_file(args.txt)
    from .feature_store import pair_check

    pair_check(img, txt)
    img_in = row_normalize(img).values if config.normalize_img else img.values
    txt_in = row_normalize(txt).values if config.normalize_txt else txt.values
    g_img, _, _ = topology.build_modality_graph(img_in, config.k)
    g_txt, _, _ = topology.build_modality_graph(txt_in, config.k)
    if args.which in ("img", "txt"):
        graph = g_img if args.which == "img" else g_txt
    else:
        hat_i, hat_t, _, _ = refinement.refine_pair(
            g_img, g_txt, config.theta, config.kappa_max
        )
        if args.which == "img-hat":
            graph = hat_i
        elif args.which == "txt-hat":
            graph = hat_t
        else:
            graph, _ = fusion.fuse(
                hat_i,
                hat_t,
                config.scales,
                config.probe_width,
                [config.seed, 10],
                config.fusion_temp,
                config.scale_weights("omega"),
                config.lambda_sp,
            )
    graph.dump_text(args.out)
    print(f"wrote {args.which} graph ({graph.n} nodes, {graph.n_edges} edges) -> {args.out}")
    return 0


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="castsel", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic bimodal CFM pair")
    g.add_argument("--modes", type=int, required=True)
    g.add_argument("--per-mode", type=int, required=True)
    g.add_argument("--d-img", type=int, default=16)
    g.add_argument("--d-txt", type=int, default=16)
    g.add_argument("--separation", type=float, default=10.0)
    g.add_argument("--collapse-img", type=float, default=0.0)
    g.add_argument("--collapse-txt", type=float, default=0.0)
    g.add_argument("--noise", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out-prefix", required=True)
    g.set_defaults(func=_cmd_gen)

    s = sub.add_parser("select", help="run the full selection pipeline")
    s.add_argument("--img", required=True)
    s.add_argument("--txt", required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--history", help="loss history CSV (default <out>.history.csv)")
    s.add_argument("--dump-graph", help="also dump the unified graph edge list here")
    s.add_argument("--zero-img", action="store_true", help="ablation: zero image features")
    _add_config_args(s)
    s.set_defaults(func=_cmd_select)

    b = sub.add_parser("baseline", help="run a baseline selector")
    b.add_argument("--method", choices=("random", "herding", "kcenter"), required=True)
    b.add_argument("--img", required=True)
    b.add_argument("--txt", required=True)
    b.add_argument("--k", type=int, required=True)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", required=True)
    b.set_defaults(func=_cmd_baseline)

    e = sub.add_parser("eval", help="fidelity metrics for one or more manifests")
    e.add_argument("--img", required=True)
    e.add_argument("--txt", required=True)
    e.add_argument("--labels", help="id<TAB>label file from gen")
    e.add_argument("--manifest", action="append", required=True)
    e.add_argument("--tau-red", type=float, help="redundancy distance threshold")
    e.add_argument("--n-proj", type=int, default=64)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", help="CSV output path")
    e.set_defaults(func=_cmd_eval)

    d = sub.add_parser("dump-graph", help="serialize an intermediate graph")
    d.add_argument("--img", required=True)
    d.add_argument("--txt", required=True)
    d.add_argument(
        "--which",
        choices=("img", "txt", "img-hat", "txt-hat", "unified"),
        default="unified",
    )
    d.add_argument("--out", required=True)
    _add_config_args(d)
    d.set_defaults(func=_cmd_dump_graph)
    return p


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CastselError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
