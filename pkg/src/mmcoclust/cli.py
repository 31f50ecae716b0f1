"""Command line entry point: ``mmcoclust {generate,detect,eval,experiment,analyze}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .edgelist import LabeledStack, merge_nodes, read_merge_spec, select_top_layers
from .experiment import load_config, run_experiment, write_table
from .metrics import evaluate
from .model import Membership, sample_network, synth_instance
from .pipeline import METHODS, detect
from .report import (
    analyze_memberships,
    load_labeled_stack,
    load_result,
    read_membership_csv,
    save_instance,
    save_result,
)


def cmd_generate(args) -> int:
    ss_inst, ss_net = np.random.SeedSequence(args.seed).spawn(2)
    truth, B, omega = synth_instance(args.n, args.k, args.n0_r, args.n0_c, args.layers, args.rho, ss_inst)
    A = sample_network(omega, ss_net)
    ls = LabeledStack(A, [str(i + 1) for i in range(args.n)], [str(l + 1) for l in range(args.layers)])
    save_instance(args.out, truth, B, ls, args.rho, args.seed)
    print(f"wrote instance with n={args.n} K={args.k} L={args.layers} to {args.out}")
    return 0


def cmd_detect(args) -> int:
    ls = load_labeled_stack(args.edges, args.nodes, args.layer_labels)
    if args.merge_spec:
        with open(args.merge_spec) as fh:
            ls = merge_nodes(ls, read_merge_spec(fh))
    if args.top_layers:
        ls = select_top_layers(ls, args.top_layers)
    result = detect(ls.stack, args.k, args.method)
    rep = save_result(result, args.out, ls.node_labels, args.threshold)
    print(
        f"{args.method}: n={ls.n} L={ls.L} K={args.k}; "
        f"{int(rep.mixed_export.sum())} highly mixed export, {int(rep.mixed_import.sum())} highly mixed import nodes"
    )
    return 0


def _read_memberships(directory: Path, names):
    out = []
    for name in names:
        with open(directory / name, newline="") as fh:
            out.append(read_membership_csv(fh))
    return out


def cmd_eval(args) -> int:
    est = Path(args.estimate)
    truth_dir = Path(args.truth)
    (lab_r, W_r), (lab_c, W_c) = _read_memberships(est, ["memberships_row.csv", "memberships_col.csv"])
    (tl_r, T_r), (tl_c, T_c) = _read_memberships(truth_dir, ["pi_r.csv", "pi_c.csv"])
    # align truth rows to the estimate's node order
    pos = {lab: i for i, lab in enumerate(tl_r)}
    missing = [lab for lab in lab_r if lab not in pos]
    if missing:
        raise SystemExit(f"estimate nodes missing from truth: {missing[:5]}")
    idx = [pos[lab] for lab in lab_r]
    report = evaluate(Membership(W_r), Membership(T_r[idx]), Membership(W_c), Membership(T_c[idx]))
    text = json.dumps(report.to_dict(), indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def cmd_experiment(args) -> int:
    with open(args.config) as fh:
        cfg = load_config(fh)
    rows = run_experiment(cfg, workers=args.workers)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_table(rows, fh)
    else:
        write_table(rows, sys.stdout)
    return 0


def cmd_analyze(args) -> int:
    result, labels = load_result(args.result)
    rep = analyze_memberships(result, args.threshold, labels)
    text = json.dumps(rep.to_dict(), indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mmcoclust", description="Overlapping co-clustering of multi-layer directed networks")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic instance to a directory")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, default=3)
    g.add_argument("--n0-r", type=int, required=True, help="pure row nodes per community")
    g.add_argument("--n0-c", type=int, required=True, help="pure column nodes per community")
    g.add_argument("--layers", type=int, required=True)
    g.add_argument("--rho", type=float, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    d = sub.add_parser("detect", help="estimate memberships from an edge list")
    d.add_argument("edges")
    d.add_argument("--nodes", help="node label file (id label)")
    d.add_argument("--layer-labels", help="layer label file (id label)")
    d.add_argument("--k", type=int, required=True)
    d.add_argument("--method", choices=METHODS, default="cspdsos")
    d.add_argument("--top-layers", type=int)
    d.add_argument("--merge-spec", help="file of 'kept<TAB>absorbed' label pairs")
    d.add_argument("--threshold", type=float, default=0.5)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_detect)

    e = sub.add_parser("eval", help="score an estimate against a generated instance")
    e.add_argument("estimate", help="directory written by detect")
    e.add_argument("truth", help="directory written by generate")
    e.add_argument("--out")
    e.set_defaults(func=cmd_eval)

    x = sub.add_parser("experiment", help="run a synthetic benchmark grid")
    x.add_argument("config")
    x.add_argument("--out")
    x.add_argument("--workers", type=int, default=1)
    x.set_defaults(func=cmd_experiment)

    a = sub.add_parser("analyze", help="home-base and highly-mixed report for a detection result")
    a.add_argument("result", help="directory written by detect")
    a.add_argument("--threshold", type=float, default=0.5)
    a.add_argument("--out")
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
