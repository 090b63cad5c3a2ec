"""Command line interface: gen / prior / update / verify / report."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import DynpprError
from .graph import write_edge_list
from .harness import (ExperimentSpec, prepare_priors, read_rows_csv,
                      run_experiment, summarize_rows, verify_suite)
from .perturb import PerturbPlan, make_evolution


def _plan_flags(p):
    p.add_argument("--plan", help="plan JSON file (overrides inline flags)")
    p.add_argument("--insert-nodes", type=int, default=0)
    p.add_argument("--delete-nodes", type=int, default=0)
    p.add_argument("--insert-edge-frac", type=float, default=0.0)
    p.add_argument("--delete-edge-frac", type=float, default=0.0)


def _run_flags(p):
    p.add_argument("--sources", type=int, default=100,
                   help="number of source nodes sampled among survivors")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for the plan (when inline) and source sampling")
    p.add_argument("--alpha", type=float, default=0.85)
    p.add_argument("--eps", default="1e-8",
                   help="epsilon spec: a float, and/or method=value pairs, "
                        "comma separated (e.g. '1e-8,per_edge=1e-9')")
    p.add_argument("--benchmark-eps", type=float, default=1e-10)
    p.add_argument("--methods", default="vwppr,per_edge,from_scratch",
                   help=f"comma list of methods")
    p.add_argument("--exact-correction", action="store_true",
                   help="run vwppr with the exact deletion correction "
                        "(renames its rows to vwppr_exact)")
    p.add_argument("--max-pushes", type=int, default=None)
    p.add_argument("--out", default="runs", help="output directory")


def _parse_eps(text):
    default = None
    per_method = {}
    for token in str(text).split(","):
        token = token.strip()
        if not token:
            continue
        if "=" in token:
            name, value = token.split("=", 1)
            per_method[name.strip()] = float(value)
        else:
            default = float(token)
    return default, per_method


def _plan_from_args(args) -> PerturbPlan:
    if getattr(args, "plan", None):
        return PerturbPlan.read(args.plan)
    return PerturbPlan(
        insert_nodes=args.insert_nodes,
        delete_nodes=args.delete_nodes,
        insert_edge_fraction=args.insert_edge_frac,
        delete_edge_fraction=args.delete_edge_frac,
        rng_seed=getattr(args, "seed", 0))


def _spec_from_args(args) -> ExperimentSpec:
    default_eps, per_method = _parse_eps(args.eps)
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    if args.exact_correction:
        methods = tuple("vwppr_exact" if m == "vwppr" else m for m in methods)
        per_method = {("vwppr_exact" if k == "vwppr" else k): v
                      for k, v in per_method.items()}
    kwargs = dict(
        dataset=args.dataset,
        plan=_plan_from_args(args),
        source_count=args.sources,
        methods=methods,
        eps=per_method,
        alpha=args.alpha,
        benchmark_epsilon=args.benchmark_eps,
        out_dir=args.out,
        rng_seed=args.seed,
        max_pushes=args.max_pushes,
    )
    if default_eps is not None:
        kwargs["default_epsilon"] = default_eps
    return ExperimentSpec(**kwargs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynppr",
        description="Forward-push personalized PageRank with incremental "
                    "updates over evolving directed graphs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="carve an evolution out of a snapshot")
    p.add_argument("--dataset", required=True, help="edge list (or .npz cache)")
    _plan_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("prior", help="precompute priors and benchmarks")
    p.add_argument("--dataset", required=True)
    _plan_flags(p)
    _run_flags(p)

    p = sub.add_parser("update", help="run update methods and report")
    p.add_argument("--dataset", required=True)
    _plan_flags(p)
    _run_flags(p)

    p = sub.add_parser("verify", help="run the capability check suite")
    p.add_argument("--scale", default="small", choices=("small", "medium"))

    p = sub.add_parser("report", help="recompute a summary from a rows CSV")
    p.add_argument("--rows", required=True, help="report.csv from `update`")
    p.add_argument("--out", default=None, help="also write summary JSON here")
    return parser


def _cmd_gen(args) -> int:
    from .harness import _load_dataset

    plan = _plan_from_args(args)
    full = _load_dataset(args.dataset)
    evo = make_evolution(full, plan)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    plan.write(out / "plan.json")
    evo.batch.write(out / "batch.txt")
    write_edge_list(out / "original.edges", evo.original)
    write_edge_list(out / "updated.edges", evo.updated)
    print(f"original web: {evo.original!r}")
    print(f"updated web:  {evo.updated!r}")
    print(f"batch: {evo.batch.summary()}")
    print(f"wrote plan.json, batch.txt, original.edges, updated.edges to {out}")
    return 0


def _cmd_prior(args) -> int:
    info = prepare_priors(_spec_from_args(args))
    print(f"cached {info['priors']} priors and {info['benchmarks']} "
          f"benchmarks in {info['cache_dir']}")
    return 0


def _cmd_update(args) -> int:
    report = run_experiment(_spec_from_args(args))
    for name, entry in report.summary["methods"].items():
        err = entry["mean_l1_error"]
        err_s = f"{err:.3e}" if err is not None else "n/a"
        print(f"{name:>13}: mean pushes {entry['mean_pushes']:.0f}, "
              f"mean l1 error {err_s}, "
              f"total wall {entry['total_wall_time_s']:.3f}s, "
              f"failed {entry['failed']}")
    print(f"rows: {report.csv_path}")
    print(f"summary: {report.summary_path}")
    return 0


def _cmd_verify(args) -> int:
    results = verify_suite(args.scale)
    for res in results:
        print(res.line())
    bad = sum(0 if res.passed else 1 for res in results)
    print(f"{len(results) - bad}/{len(results)} checks passed")
    return 0 if bad == 0 else 1


def _cmd_report(args) -> int:
    rows = read_rows_csv(args.rows)
    summary = summarize_rows(rows)
    text = json.dumps(summary, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


_COMMANDS = {
    "gen": _cmd_gen,
    "prior": _cmd_prior,
    "update": _cmd_update,
    "verify": _cmd_verify,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except DynpprError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
