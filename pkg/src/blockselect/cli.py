"""Command-line driver for the full pipeline.

Subcommands: ``blockmodel`` (fit candidates, rank by RRE), ``select``
(run the score optimizer against one block model), ``evaluate``
(K-means ACC/NMI for chosen feature counts), ``sweep`` (grid over
composition ratio x sparsity x candidates x d, resumable), and
``perturb`` (robustness of the score vector to block re-allocation).

Every command writes into ``--out``: a ``config.json`` echo of the
resolved flags, its artifacts, and a ``MANIFEST`` of content hashes.
All randomness is keyed to explicit seeds, so rerunning a command with
identical flags reproduces its outputs byte for byte.  ACC appears in
CSV outputs as a percentage; NMI stays in [0, 1].
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .blockmodel import (
    generate_candidates,
    load_blockmodel,
    perturb_allocation,
    save_blockmodel,
)
from .core import cosine_distance
from .data import load_dataset, load_manifest
from .errors import InsufficientSupportError
from .evaluation import evaluate_selection, save_report
from .solver import SolverConfig, load_scores, optimize, save_scores

DEFAULT_BETA_GRID = [round(0.1 * i, 1) for i in range(11)]
DEFAULT_GAMMA_GRID = [0.5 * i for i in range(11)]
DEFAULT_D_LIST = [16, 64, 128, 200, 600]

EVAL_COLUMNS = ["dataset", "d", "beta_bar", "gamma", "blockmodel_id",
                "acc_mean", "acc_std", "nmi_mean", "nmi_std",
                "insufficient_support"]


def _unit_interval(text):
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"{value} is not in [0, 1]")
    return value


def _positive(text):
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"{value} is not positive")
    return value


def _write_config(out_dir, args):
    resolved = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    with open(os.path.join(out_dir, "config.json"), "w", encoding="utf-8") as fh:
        json.dump(resolved, fh, sort_keys=True, indent=2, default=str)
        fh.write("\n")


def _write_manifest(out_dir):
    entries = []
    for root, _, files in os.walk(out_dir):
        for name in files:
            if name == "MANIFEST":
                continue
            path = os.path.join(root, name)
            digest = hashlib.sha256(open(path, "rb").read()).hexdigest()
            entries.append((os.path.relpath(path, out_dir), digest))
    entries.sort()
    with open(os.path.join(out_dir, "MANIFEST"), "w", encoding="utf-8") as fh:
        fh.writelines(f"{digest}  {rel}\n" for rel, digest in entries)


def _load_net(args):
    return load_dataset(load_manifest(args.manifest))


def _resolve_k(args, net):
    if args.k is not None:
        return args.k
    if net.labels is None:
        raise ValueError("--k is required when the dataset has no labels")
    return net.n_classes


def _solver_config(args) -> SolverConfig:
    return SolverConfig(
        beta_bar=args.beta_bar, gamma=args.gamma, eta=args.eta,
        max_iterations=args.max_iters, tolerance=args.tolerance,
        gradient_mode=args.gradient_mode, delta=args.delta, seed=args.seed,
    )


def _eval_row(dataset, d, beta_bar, gamma, bm_id, report=None, insufficient=False):
    if insufficient:
        acc_mean = acc_std = nmi_mean = nmi_std = 0.0
    else:
        acc_mean, acc_std = 100.0 * report.acc_mean, 100.0 * report.acc_std
        nmi_mean, nmi_std = report.nmi_mean, report.nmi_std
    return [dataset, d, repr(float(beta_bar)), repr(float(gamma)), bm_id,
            repr(acc_mean), repr(acc_std), repr(nmi_mean), repr(nmi_std),
            str(insufficient).lower()]


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


# ---------------------------------------------------------------------------
# subcommands


def cmd_blockmodel(args) -> int:
    net = _load_net(args)
    k = _resolve_k(args, net)
    os.makedirs(args.out, exist_ok=True)
    cs = generate_candidates(net.adjacency, k=k, count=args.count,
                             base_seed=args.seed, iterations=args.iterations)
    for i, cand in enumerate(cs):
        save_blockmodel(os.path.join(args.out, f"blockmodel_{i:02d}.json"), cand)
    order = sorted(range(len(cs)), key=lambda i: (cs[i].rre, i))
    _write_csv(
        os.path.join(args.out, "rre_summary.csv"),
        ["candidate", "seed", "rre"],
        [[i, cs[i].seed, repr(cs[i].rre)] for i in order],
    )
    _write_config(args.out, args)
    _write_manifest(args.out)
    best = order[0]
    print(f"wrote {len(cs)} candidates to {args.out}; "
          f"lowest RRE {cs[best].rre:.6f} (candidate {best})")
    return 0


def cmd_select(args) -> int:
    net = _load_net(args)
    cand = load_blockmodel(args.blockmodel)
    cfg = _solver_config(args)
    os.makedirs(args.out, exist_ok=True)
    scores, trace = optimize(net, cand.model, cfg)
    save_scores(os.path.join(args.out, "scores.json"), scores)
    trace.to_csv(os.path.join(args.out, "trace.csv"))
    result = {
        "converged": trace.converged,
        "stop_reason": trace.stop_reason,
        "iterations": trace.final.iteration,
        "loss_b": trace.final.loss_b,
        "loss_m": trace.final.loss_m,
        "nnz": trace.final.nnz,
        "warnings": trace.warnings,
    }
    with open(os.path.join(args.out, "result.json"), "w", encoding="utf-8") as fh:
        json.dump(result, fh, sort_keys=True, indent=2)
        fh.write("\n")
    _write_config(args.out, args)
    _write_manifest(args.out)
    print(f"selection finished ({trace.stop_reason} after "
          f"{trace.final.iteration} iterations, nnz={trace.final.nnz})")
    return 0


def cmd_evaluate(args) -> int:
    net = _load_net(args)
    scores = load_scores(args.scores)
    os.makedirs(args.out, exist_ok=True)
    dataset = load_manifest(args.manifest).name
    rows = []
    for d in args.d:
        try:
            report = evaluate_selection(net, scores, d, runs=args.runs,
                                        base_seed=args.seed)
        except InsufficientSupportError as exc:
            # reporting convention: zero metrics with a flag, so sweep
            # aggregation stays rectangular (the library itself is strict)
            rows.append(_eval_row(dataset, d, args.beta_bar, args.gamma,
                                  args.blockmodel_id, insufficient=True))
            print(f"d={d}: insufficient support (nnz={exc.nnz}); "
                  "reported zero metrics", file=sys.stderr)
            continue
        save_report(os.path.join(args.out, f"report_d{d}.json"), report)
        rows.append(_eval_row(dataset, d, args.beta_bar, args.gamma,
                              args.blockmodel_id, report=report))
    _write_csv(os.path.join(args.out, "evaluation.csv"), EVAL_COLUMNS, rows)
    _write_config(args.out, args)
    _write_manifest(args.out)
    print(f"wrote evaluation.csv with {len(rows)} rows to {args.out}")
    return 0


def _sweep_cell(payload):
    """One (candidate, beta, gamma) cell; returns the cell dict to persist."""
    net, cand, bm_index, beta, gamma, args = payload
    cfg = SolverConfig(
        beta_bar=beta, gamma=gamma, eta=args.eta,
        max_iterations=args.max_iters, tolerance=args.tolerance,
        gradient_mode=args.gradient_mode, delta=args.delta, seed=args.seed,
    )
    scores, trace = optimize(net, cand.model, cfg)
    cell = {"blockmodel_id": bm_index, "beta_bar": beta, "gamma": gamma,
            "converged": trace.converged, "nnz": trace.final.nnz, "rows": []}
    for d in args.d:
        try:
            report = evaluate_selection(net, scores, d, runs=args.runs,
                                        base_seed=args.seed)
            cell["rows"].append({
                "d": d, "acc_mean": report.acc_mean, "acc_std": report.acc_std,
                "nmi_mean": report.nmi_mean, "nmi_std": report.nmi_std,
                "insufficient_support": False,
            })
        except InsufficientSupportError:
            cell["rows"].append({
                "d": d, "acc_mean": 0.0, "acc_std": 0.0,
                "nmi_mean": 0.0, "nmi_std": 0.0,
                "insufficient_support": True,
            })
    return cell


def _cell_name(bm_index, beta, gamma):
    return f"cell_bm{bm_index:02d}_beta{beta:g}_gamma{gamma:g}.json"


def cmd_sweep(args) -> int:
    net = _load_net(args)
    k = _resolve_k(args, net)
    os.makedirs(args.out, exist_ok=True)
    cells_dir = os.path.join(args.out, "cells")
    os.makedirs(cells_dir, exist_ok=True)
    cs = generate_candidates(net.adjacency, k=k, count=args.count,
                             base_seed=args.seed, iterations=args.iterations)
    for i, cand in enumerate(cs):
        save_blockmodel(os.path.join(args.out, f"blockmodel_{i:02d}.json"), cand)

    grid = [(i, beta, gamma)
            for i in range(len(cs))
            for beta in args.beta_bar_grid
            for gamma in args.gamma_grid]
    pending = [(i, b, g) for i, b, g in grid
               if not os.path.exists(os.path.join(cells_dir, _cell_name(i, b, g)))]
    skipped = len(grid) - len(pending)

    payloads = [(net, cs[i], i, b, g, args) for i, b, g in pending]
    if args.workers > 1 and payloads:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_sweep_cell, payloads))
    else:
        results = [_sweep_cell(p) for p in payloads]
    for (i, b, g), cell in zip(pending, results):
        with open(os.path.join(cells_dir, _cell_name(i, b, g)), "w",
                  encoding="utf-8") as fh:
            json.dump(cell, fh, sort_keys=True)
            fh.write("\n")

    dataset = load_manifest(args.manifest).name
    rows = []
    for i, beta, gamma in grid:  # aggregation in fixed grid order
        with open(os.path.join(cells_dir, _cell_name(i, beta, gamma)),
                  encoding="utf-8") as fh:
            cell = json.load(fh)
        for row in cell["rows"]:
            rows.append([
                dataset, row["d"], repr(float(beta)), repr(float(gamma)), i,
                repr(100.0 * row["acc_mean"]), repr(100.0 * row["acc_std"]),
                repr(row["nmi_mean"]), repr(row["nmi_std"]),
                str(row["insufficient_support"]).lower(),
            ])
    _write_csv(os.path.join(args.out, "sweep.csv"), EVAL_COLUMNS, rows)
    _write_config(args.out, args)
    _write_manifest(args.out)
    print(f"sweep complete: {len(grid)} cells ({skipped} reused), "
          f"{len(rows)} rows in sweep.csv")
    return 0


def cmd_perturb(args) -> int:
    net = _load_net(args)
    base = load_blockmodel(args.blockmodel)
    cfg = _solver_config(args)
    os.makedirs(args.out, exist_ok=True)
    base_scores, _ = optimize(net, base.model, cfg)
    rows = []
    for fi, fraction in enumerate(args.fractions):
        for mi, mode in enumerate(args.modes):
            for rep in range(args.repeats):
                seed = args.seed + rep + args.repeats * (mi + len(args.modes) * fi)
                perturbed = perturb_allocation(base.model, net.adjacency,
                                               fraction, mode, seed=seed)
                scores, _ = optimize(net, perturbed, cfg)
                dist = cosine_distance(scores.values, base_scores.values)
                rows.append([repr(float(fraction)), mode, rep, repr(dist)])
    _write_csv(os.path.join(args.out, "perturbation.csv"),
               ["fraction", "mode", "repeat", "cosine_distance"], rows)
    _write_config(args.out, args)
    _write_manifest(args.out)
    print(f"wrote {len(rows)} perturbation rows to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_common(p):
    p.add_argument("--manifest", required=True, help="dataset manifest JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)


def _add_solver_flags(p):
    p.add_argument("--beta-bar", type=_unit_interval, default=0.6,
                   help="gradient composition ratio in [0, 1]")
    p.add_argument("--gamma", type=float, default=0.0,
                   help="sparsity penalty weight")
    p.add_argument("--eta", type=_positive, default=1e-2,
                   help="constant step size")
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--tolerance", type=_positive, default=1e-6)
    p.add_argument("--gradient-mode", choices=("analytic", "paper_literal"),
                   default="analytic")
    p.add_argument("--delta", type=float, default=1e-6,
                   help="stabilizer added to image matrices")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blockselect",
        description="block-model-guided unsupervised feature selection",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("blockmodel", help="fit candidate block models")
    _add_common(p)
    p.add_argument("--k", type=int, default=None,
                   help="block count (defaults to the label class count)")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--iterations", type=int, default=100)
    p.set_defaults(func=cmd_blockmodel)

    p = sub.add_parser("select", help="optimize feature scores")
    _add_common(p)
    p.add_argument("--blockmodel", required=True, help="block model JSON")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("evaluate", help="cluster selected features, report ACC/NMI")
    _add_common(p)
    p.add_argument("--scores", required=True, help="score vector JSON")
    p.add_argument("--d", type=int, nargs="+", default=DEFAULT_D_LIST)
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--beta-bar", type=float, default=float("nan"),
                   help="annotation column for the CSV row")
    p.add_argument("--gamma", type=float, default=float("nan"),
                   help="annotation column for the CSV row")
    p.add_argument("--blockmodel-id", default="",
                   help="annotation column for the CSV row")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="grid over beta_bar x gamma x candidates x d")
    _add_common(p)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--beta-bar-grid", type=_unit_interval, nargs="+",
                   default=DEFAULT_BETA_GRID)
    p.add_argument("--gamma-grid", type=float, nargs="+",
                   default=DEFAULT_GAMMA_GRID)
    p.add_argument("--d", type=int, nargs="+", default=DEFAULT_D_LIST)
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--eta", type=_positive, default=1e-2)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--tolerance", type=_positive, default=1e-6)
    p.add_argument("--gradient-mode", choices=("analytic", "paper_literal"),
                   default="analytic")
    p.add_argument("--delta", type=float, default=1e-6)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("perturb", help="score robustness to block re-allocation")
    _add_common(p)
    p.add_argument("--blockmodel", required=True, help="base block model JSON")
    p.add_argument("--fractions", type=_unit_interval, nargs="+",
                   default=[0.05, 0.10])
    p.add_argument("--modes", nargs="+", choices=("keep_M", "recompute_M"),
                   default=["keep_M", "recompute_M"])
    p.add_argument("--repeats", type=int, default=5)
    _add_solver_flags(p)
    p.set_defaults(func=cmd_perturb)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
