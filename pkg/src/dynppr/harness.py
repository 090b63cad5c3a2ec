"""Benchmark harness: run update methods over one evolution and report.

The protocol: carve an evolution out of a snapshot (``perturb``), sample
source nodes among the survivors, converge a prior for every (source,
method-epsilon) pair on the original web (cached to disk), then run each
method across the change and score it against a high-accuracy from-scratch
benchmark on the updated web.  Costs are reported as push counts first,
wall time second; JIT warmup happens before anything is timed.

``calibrate_epsilon`` reproduces the matched-accuracy protocol: pin a
reference method at a fixed epsilon, then bisect the target method's
epsilon (in log space) until their mean l1 errors agree to a relative
tolerance.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import _kernels, checks
from .dynamic import (UpdateProblem, per_edge_baseline, tracking_init,
                      vw_init)
from .errors import (BudgetExceededError, CalibrationError,
                     PreconditionError, ValidationError)
from .graph import Graph, load_edge_list, load_graph_cache
from .perturb import PerturbPlan, make_evolution
from .solver import SolverConfig, gauss_southwell, ppr_from_scratch

METHODS = ("vwppr", "vwppr_exact", "per_edge", "tracking_only",
           "from_scratch")

CSV_COLUMNS = ("dataset", "method", "source", "pushes", "wall_time_s",
               "l1_error", "initializer_time_s", "epsilon")

WALL_TIME_COLUMNS = ("wall_time_s", "initializer_time_s")

_RNG_NAME = "numpy-pcg64"


@dataclass
class ExperimentSpec:
    dataset: str
    plan: PerturbPlan
    source_count: int = 100
    methods: tuple = ("vwppr", "per_edge", "from_scratch")
    eps: dict = field(default_factory=dict)
    alpha: float = 0.85
    default_epsilon: float = 1e-8
    benchmark_epsilon: float = 1e-10
    out_dir: str = "runs"
    rng_seed: int = 0
    max_pushes: int | None = None
    cache_dir: str | None = None

    def __post_init__(self):
        self.methods = tuple(self.methods)
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValidationError(
                f"unknown methods {sorted(unknown)}; choose from {METHODS}")
        if not self.methods:
            raise ValidationError("no methods requested")
        if self.source_count < 1:
            raise ValidationError("source_count must be at least 1")
        for name, value in dict(self.eps).items():
            if value <= 0:
                raise ValidationError(f"epsilon for {name} must be positive")
        # delegate range checks
        SolverConfig(alpha=self.alpha, epsilon=self.default_epsilon)
        SolverConfig(alpha=self.alpha, epsilon=self.benchmark_epsilon)

    def epsilon_for(self, method: str) -> float:
        return float(self.eps.get(method, self.default_epsilon))


@dataclass
class ReportRow:
    dataset: str
    method: str
    source: int
    pushes: int
    wall_time_s: float
    l1_error: float
    initializer_time_s: float
    epsilon: float


@dataclass
class ExperimentReport:
    rows: list
    summary: dict
    csv_path: str | None = None
    summary_path: str | None = None


@dataclass
class CalibrationResult:
    epsilon: float
    target_error: float
    reference_error: float
    probes: list


def _file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _load_dataset(path) -> Graph:
    path = str(path)
    if path.endswith(".npz"):
        return load_graph_cache(path)
    return load_edge_list(path)


class _Workbench:
    """Shared state for one experiment: evolution, sources, caches."""

    def __init__(self, spec: ExperimentSpec):
        _kernels.warmup()
        self.spec = spec
        self.full = _load_dataset(spec.dataset)
        digest = _file_digest(spec.dataset)[:12]
        plan_digest = hashlib.sha256(
            spec.plan.to_json().encode()).hexdigest()[:12]
        self.dataset_id = f"{Path(spec.dataset).stem}-{digest}"
        self._key_base = f"{digest}-{plan_digest}-a{spec.alpha:g}"
        self.evo = make_evolution(self.full, spec.plan)
        if "tracking_only" in spec.methods and not self.evo.batch.is_link_only:
            raise PreconditionError(
                "tracking_only requires a link-only plan (no node changes)")
        self.idm = self.evo.map_original_to_updated
        surv = self.idm.survivors_old
        if surv.size < spec.source_count:
            raise ValidationError(
                f"only {surv.size} surviving sources available, "
                f"{spec.source_count} requested")
        rng = np.random.default_rng(spec.rng_seed)
        self.sources = np.sort(rng.choice(surv, size=spec.source_count,
                                          replace=False))
        self.cache = Path(spec.cache_dir) if spec.cache_dir else \
            Path(spec.out_dir) / "prior_cache"
        self.cache.mkdir(parents=True, exist_ok=True)
        self._bench = {}

    def _solve_cached(self, role, graph, source, eps):
        key = f"{role}-{self._key_base}-e{eps:.6e}-s{source}.npz"
        path = self.cache / key
        if path.exists():
            with np.load(path) as z:
                return z["pi"], z["r"]
        cfg = SolverConfig(alpha=self.spec.alpha, epsilon=eps)
        pi, r, _ = ppr_from_scratch(graph, source, cfg)
        np.savez(path, pi=pi, r=r)
        return pi, r

    def benchmark(self, s_old: int) -> np.ndarray:
        if s_old not in self._bench:
            s_new = int(self.idm.old_to_new[s_old])
            pi, _ = self._solve_cached("bench", self.evo.updated, s_new,
                                       self.spec.benchmark_epsilon)
            self._bench[s_old] = pi
        return self._bench[s_old]

    def run_method(self, method: str, eps: float):
        """One row per source; budget blowups mark the row failed (nan)."""
        spec = self.spec
        cfg = SolverConfig(alpha=spec.alpha, epsilon=eps,
                           max_pushes=spec.max_pushes)
        rows = []
        for s_old in (int(s) for s in self.sources):
            s_new = int(self.idm.old_to_new[s_old])
            bench_pi = self.benchmark(s_old)
            init_s = 0.0
            failed = False
            pi = None
            try:
                if method == "from_scratch":
                    pi, _, stats = ppr_from_scratch(self.evo.updated, s_new,
                                                    cfg)
                else:
                    prior_pi, prior_r = self._solve_cached(
                        "prior", self.evo.original, s_old, eps)
                    problem = UpdateProblem(
                        self.evo.original, self.evo.updated, self.idm, s_old,
                        prior_pi, prior_r, cfg,
                        exact_deletion_correction=(method == "vwppr_exact"))
                    if method == "per_edge":
                        pi, _, stats = per_edge_baseline(problem)
                    else:
                        init = tracking_init if method == "tracking_only" \
                            else vw_init
                        t0 = time.perf_counter()
                        pi0, r0 = init(problem)
                        init_s = time.perf_counter() - t0
                        pi, _, stats = gauss_southwell(
                            self.evo.updated, s_new, pi0, r0, cfg)
                        stats.wall_time_s += init_s
            except BudgetExceededError as exc:
                stats = exc.stats
                failed = True
            err = float("nan") if failed else \
                float(np.abs(pi - bench_pi).sum())
            rows.append(ReportRow(self.dataset_id, method, s_old,
                                  stats.pushes, stats.wall_time_s, err,
                                  init_s, eps))
        return rows

    def mean_error(self, method: str, eps: float) -> float:
        errs = [row.l1_error for row in self.run_method(method, eps)
                if not math.isnan(row.l1_error)]
        if not errs:
            raise CalibrationError(
                f"every {method} run failed at eps={eps:g}")
        return float(np.mean(errs))


def summarize_rows(rows, extra=None) -> dict:
    """Aggregate rows per method; recomputable from the CSV alone."""
    methods = {}
    for row in rows:
        methods.setdefault(row.method, []).append(row)
    out = {
        "rows": len(rows),
        "rng": _RNG_NAME,
        "selection_policy": "queue",
        "wall_time_note": ("total_wall_time_s sums per-source runs; "
                           "mean_* divide by the row count"),
        "methods": {},
    }
    for name, group in sorted(methods.items()):
        ok = [r for r in group if not math.isnan(r.l1_error)]
        entry = {
            "rows": len(group),
            "failed": len(group) - len(ok),
            "epsilon": sorted({r.epsilon for r in group}),
            "mean_pushes": float(np.mean([r.pushes for r in group])),
            "total_pushes": int(np.sum([r.pushes for r in group])),
            "mean_wall_time_s": float(np.mean([r.wall_time_s for r in group])),
            "total_wall_time_s": float(np.sum([r.wall_time_s for r in group])),
            "mean_initializer_time_s": float(
                np.mean([r.initializer_time_s for r in group])),
            "mean_l1_error": float(np.mean([r.l1_error for r in ok]))
            if ok else None,
        }
        out["methods"][name] = entry
    if extra:
        out.update(extra)
    return out


def write_rows_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            rec = asdict(row)
            writer.writerow([repr(rec[c]) if isinstance(rec[c], float)
                             else rec[c] for c in CSV_COLUMNS])


def read_rows_csv(path) -> list:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValidationError(f"{path}: missing columns {sorted(missing)}")
        for rec in reader:
            rows.append(ReportRow(
                rec["dataset"], rec["method"], int(rec["source"]),
                int(rec["pushes"]), float(rec["wall_time_s"]),
                float(rec["l1_error"]), float(rec["initializer_time_s"]),
                float(rec["epsilon"])))
    return rows


def prepare_priors(spec: ExperimentSpec) -> dict:
    """Warm the disk cache: priors per (source, method epsilon) + benchmarks."""
    bench = _Workbench(spec)
    eps_set = sorted({spec.epsilon_for(m) for m in spec.methods
                      if m != "from_scratch"})
    priors = 0
    for eps in eps_set:
        for s in bench.sources:
            bench._solve_cached("prior", bench.evo.original, int(s), eps)
            priors += 1
    for s in bench.sources:
        bench.benchmark(int(s))
    return {"priors": priors, "benchmarks": int(bench.sources.size),
            "cache_dir": str(bench.cache)}


def run_experiment(spec: ExperimentSpec, write: bool = True) -> ExperimentReport:
    bench = _Workbench(spec)
    rows = []
    for method in spec.methods:
        rows.extend(bench.run_method(method, spec.epsilon_for(method)))
    summary = summarize_rows(rows, extra={
        "dataset": str(spec.dataset),
        "dataset_id": bench.dataset_id,
        "plan": json.loads(spec.plan.to_json()),
        "alpha": spec.alpha,
        "benchmark_epsilon": spec.benchmark_epsilon,
        "source_count": spec.source_count,
        "rng_seed": spec.rng_seed,
        "batch": bench.evo.batch.summary(),
    })
    csv_path = summary_path = None
    if write:
        out = Path(spec.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = str(out / "report.csv")
        summary_path = str(out / "summary.json")
        write_rows_csv(csv_path, rows)
        with open(summary_path, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return ExperimentReport(rows, summary, csv_path, summary_path)


def calibrate_epsilon(spec: ExperimentSpec, target_method: str,
                      reference_method: str, rel_tol: float = 0.05,
                      max_probes: int = 40) -> CalibrationResult:
    """Find the target's epsilon whose mean l1 error matches the reference.

    The reference runs at its pinned ``spec.eps[reference_method]``.
    Raises :class:`CalibrationError` (with the probe trace) if the bracket
    cannot be established or the bisection runs out of probes.
    """
    for m in (target_method, reference_method):
        if m not in METHODS:
            raise ValidationError(f"unknown method {m!r}")
    if reference_method not in spec.eps:
        raise ValidationError("reference method needs a pinned epsilon")
    bench = _Workbench(spec)
    ref_eps = spec.epsilon_for(reference_method)
    ref_err = bench.mean_error(reference_method, ref_eps)
    trace = [{"method": reference_method, "epsilon": ref_eps,
              "mean_l1_error": ref_err}]
    if target_method == reference_method:
        return CalibrationResult(ref_eps, ref_err, ref_err, trace)

    probes = 0

    def probe(eps):
        nonlocal probes
        probes += 1
        if probes > max_probes:
            raise CalibrationError(
                f"calibration did not converge in {max_probes} probes",
                trace=trace)
        err = bench.mean_error(target_method, eps)
        trace.append({"method": target_method, "epsilon": eps,
                      "mean_l1_error": err})
        return err

    def matched(err):
        if ref_err == 0.0:
            return err == 0.0
        return abs(err - ref_err) <= rel_tol * ref_err

    eps = ref_eps
    err = probe(eps)
    if matched(err):
        return CalibrationResult(eps, err, ref_err, trace)
    if err < ref_err:
        lo, hi = eps, None
        while hi is None:
            eps *= 4.0
            if eps > 0.5:
                raise CalibrationError(
                    "target error never reaches the reference level",
                    trace=trace)
            err = probe(eps)
            if matched(err):
                return CalibrationResult(eps, err, ref_err, trace)
            if err >= ref_err:
                hi = eps
            else:
                lo = eps
    else:
        lo, hi = None, eps
        while lo is None:
            eps /= 4.0
            if eps < 1e-18:
                raise CalibrationError(
                    "target error never drops to the reference level",
                    trace=trace)
            err = probe(eps)
            if matched(err):
                return CalibrationResult(eps, err, ref_err, trace)
            if err <= ref_err:
                lo = eps
            else:
                hi = eps
    while True:
        mid = math.sqrt(lo * hi)
        if mid <= lo or mid >= hi:
            # the bracket collapsed to adjacent floats: the target's error
            # is a step function of epsilon at this scale and the reference
            # level falls inside a step wider than rel_tol.  More sources
            # (or a bigger graph) refine the steps; widening rel_tol works
            # too.  Without this exit the loop would re-probe the same two
            # step values until max_probes.
            raise CalibrationError(
                "target error steps over the reference level: the error "
                "curve is discrete at this scale and no epsilon lands "
                f"within {rel_tol:.0%} of the reference", trace=trace)
        err = probe(mid)
        if matched(err):
            return CalibrationResult(mid, err, ref_err, trace)
        if err < ref_err:
            lo = mid
        else:
            hi = mid


_VERIFY_PRESETS = {
    "small": dict(
        residual=dict(count=10, n_hi=120, eps=1e-6),
        bound=dict(count=10, n_hi=120),
        locality=dict(count=8),
        averaging=dict(count=4, n_hi=60),
        link=dict(count=20),
        node=dict(count=20),
        end=dict(count=8, n_lo=150, n_hi=250),
    ),
    "medium": dict(
        residual=dict(count=30, n_hi=200),
        bound=dict(count=30, n_hi=200),
        locality=dict(count=20),
        averaging=dict(count=10, n_hi=120),
        link=dict(count=60),
        node=dict(count=60),
        end=dict(count=25),
    ),
}


def verify_suite(scale: str = "small"):
    """Run the capability checks at a preset scale; returns CheckResults."""
    if scale not in _VERIFY_PRESETS:
        raise ValidationError(
            f"unknown scale {scale!r}; choose from {sorted(_VERIFY_PRESETS)}")
    p = _VERIFY_PRESETS[scale]
    return [
        checks.check_residual_identity(**p["residual"]),
        checks.check_l1_bound(**p["bound"]),
        checks.check_locality(**p["locality"]),
        checks.check_pagerank_averaging(**p["averaging"]),
        checks.check_link_init_exact(**p["link"]),
        checks.check_node_init_fidelity(**p["node"]),
        checks.check_end_to_end(**p["end"]),
    ]
