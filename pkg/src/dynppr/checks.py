"""Verification checks behind ``verify_suite`` and the acceptance tests.

Each check runs a randomized family of instances against an independent
oracle (the residual identity evaluated by sparse matvec, a dense linear
solve, power iteration, or a brute-force python loop) and reports the
worst observed quantity next to its tolerance.  The acceptance tests call
these with the contract sizes; ``verify_suite`` calls them with smaller
presets for a quick health check.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import gallery
from .dynamic import (UpdateProblem, per_edge_baseline, tracking_init,
                      vw_init, vwppr_update)
from .errors import ValidationError
from .graph import apply_batch, out_neighbors_effective
from .perturb import PerturbPlan, make_evolution
from .solver import (DANGLING_UNIFORM, MAX_RESIDUAL, QUEUE, SolverConfig,
                     gauss_southwell, oracle_dense, power_iteration,
                     ppr_from_scratch, residual_of)


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    seconds: float
    detail: str = ""

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        return (f"[{mark}] {self.name}: worst {self.worst:.3e} vs "
                f"tolerance {self.tolerance:.3e} ({self.seconds:.2f}s)"
                + (f" -- {self.detail}" if self.detail else ""))


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def _random_graphs(rng, count, n_lo, n_hi, mean_deg):
    for _ in range(count):
        n = int(rng.integers(n_lo, n_hi + 1))
        deg = float(rng.uniform(1.0, mean_deg))
        yield gallery.random_digraph(n, deg, seed=rng)


def check_residual_identity(count=50, n_lo=10, n_hi=200, mean_deg=8.0,
                            eps=1e-6, every=100, tol=1e-12, seed=1):
    """The invariant r = (1-a)e_s - pi(I - aP) holds mid-run, entrywise.

    Watches every ``every``-th push and the converged state, alternating
    the FIFO and max-residual selection policies across instances.
    """
    rng = np.random.default_rng(seed)

    def run():
        worst = 0.0
        for idx, g in enumerate(_random_graphs(rng, count, n_lo, n_hi, mean_deg)):
            s = int(rng.integers(g.node_count))
            sel = QUEUE if idx % 2 == 0 else MAX_RESIDUAL
            cfg = SolverConfig(epsilon=eps, selection=sel)
            gaps = []

            def watch(pushes, pi, r):
                true_r = residual_of(g, s, pi, cfg.alpha)
                gaps.append(float(np.abs(true_r - r).max()))

            ppr_from_scratch(g, s, cfg, observer=watch, observe_every=every)
            worst = max(worst, max(gaps))
        return worst

    worst, secs = _timed(run)
    return CheckResult("residual identity during pushes", worst <= tol,
                       worst, tol, secs, f"{count} digraphs, eps={eps:g}")


def _exact_residual(g, source, pi, alpha):
    """Residual of ``pi`` in exact rational arithmetic.

    Floats *are* rationals, so the defect (1-a)e_s + a P'pi - pi of a stored
    vector against the true transition rows (exact 1/deg, dangling mass to
    the source) is computable with zero rounding.  Returns a list of
    Fractions.
    """
    a = Fraction(float(alpha))
    n = g.node_count
    pif = [Fraction(v) for v in pi.tolist()]
    rt = [-p for p in pif]
    rt[source] += 1 - a
    indptr, indices, deg = g.indptr, g.indices, g.out_degree
    dangling_mass = Fraction(0)
    for i in range(n):
        x = pif[i]
        if x == 0:
            continue
        d = int(deg[i])
        if d == 0:
            dangling_mass += x
            continue
        w = a * x / d
        for v in indices[indptr[i]:indptr[i + 1]].tolist():
            rt[v] += w
    rt[source] += a * dangling_mass
    return rt


def exact_bound_margin(g, source, pi, oracle, alpha, extra=0.0):
    """Certify ``||pi - oracle||_1 <= ||r(pi)||_1/(1-a) + extra`` exactly.

    For a cold-start push run the l1 bound is an *identity* (non-negative
    residual, row-stochastic transition), so the two sides agree to within
    accumulated rounding (~1e-16) and a float comparison of err vs bound is
    a coin flip.  Everything here is therefore evaluated over the rationals:
    err and bound are exact functions of the stored vectors, and the oracle's
    own distance from the true fixed point is not assumed but *measured*,
    via its exact residual: delta = ||r(oracle)||_1/(1-a) bounds it by the
    same argument.  The check passes iff err - delta <= bound + extra, which
    can never produce a false violation and still flags any genuine excess
    error much above delta (~1e-15 with the refined dense oracle).

    Returns ``(ok, margin, delta)`` with margin = float(bound+extra-err).
    """
    a = Fraction(float(alpha))
    one_minus = 1 - a
    rt = _exact_residual(g, source, pi, alpha)
    ro = _exact_residual(g, source, oracle, alpha)
    bound = sum(map(abs, rt)) / one_minus
    delta = sum(map(abs, ro)) / one_minus
    err = Fraction(0)
    for x, y in zip(pi.tolist(), oracle.tolist()):
        err += abs(Fraction(x) - Fraction(y))
    allowed = bound + Fraction(float(extra))
    ok = err - delta <= allowed
    return ok, float(allowed - err), float(delta)


def check_l1_bound(count=50, n_lo=10, n_hi=200, mean_deg=8.0, eps=1e-6,
                   seed=2):
    """l1 error against a dense solve never exceeds ||r||_1 / (1-alpha).

    Certified in exact arithmetic (see exact_bound_margin); the reported
    worst margin is min(bound - err) and may legitimately sit at -1e-16
    because the bound is tight for cold starts.
    """
    rng = np.random.default_rng(seed)

    def run():
        margin = np.inf
        delta_hi = 0.0
        violations = 0
        for g in _random_graphs(rng, count, n_lo, n_hi, mean_deg):
            s = int(rng.integers(g.node_count))
            cfg = SolverConfig(epsilon=eps)
            pi, r, _ = ppr_from_scratch(g, s, cfg)
            ok, m, delta = exact_bound_margin(
                g, s, pi, oracle_dense(g, s, cfg.alpha), cfg.alpha)
            margin = min(margin, m)
            delta_hi = max(delta_hi, delta)
            if not ok:
                violations += 1
        return margin, violations, delta_hi

    (margin, violations, delta_hi), secs = _timed(run)
    return CheckResult("l1 error bound vs dense solve", violations == 0,
                       margin, 0.0, secs,
                       f"{violations} violations; worst margin is "
                       f"min(bound-err); oracle slack <= {delta_hi:.1e}")


def _two_block_graph(rng, n_a, n_b, deg):
    """Random digraph where block B only points INTO block A.

    Nothing in B is reachable from A, so a source in A must leave B
    untouched entirely.
    """
    ga = gallery.random_digraph(n_a, deg, seed=rng)
    gb = gallery.random_digraph(n_b, deg, seed=rng)
    us = [ga.edge_sources().astype(np.int64),
          gb.edge_sources().astype(np.int64) + n_a]
    vs = [ga.indices.astype(np.int64), gb.indices.astype(np.int64) + n_a]
    bridges = max(1, n_b // 4)
    us.append(rng.integers(n_a, n_a + n_b, size=bridges))
    vs.append(rng.integers(0, n_a, size=bridges))
    from .graph import Graph
    return Graph.from_edges(np.concatenate(us), np.concatenate(vs),
                            num_nodes=n_a + n_b)


def _reachable_from(g, s):
    seen = np.zeros(g.node_count, dtype=bool)
    seen[s] = True
    stack = [s]
    while stack:
        u = stack.pop()
        for v in g.neighbors(u):
            if not seen[v]:
                seen[v] = True
                stack.append(int(v))
    return seen


def check_locality(count=30, n_a=80, n_b=60, mean_deg=4.0, eps=1e-8, seed=3):
    """Mass and pushes stay on the set reachable from the source.

    Scores and residuals off the reachable set must be *exactly* zero
    (from a cold start every residual is non-negative, so a single push
    would leave a strictly positive score behind).
    """
    rng = np.random.default_rng(seed)

    def run():
        worst = 0.0
        checked = 0
        for _ in range(count):
            g = _two_block_graph(rng, n_a, n_b, mean_deg)
            s = int(rng.integers(n_a))
            reach = _reachable_from(g, s)
            if reach.all():
                continue
            checked += 1
            cfg = SolverConfig(epsilon=eps)
            pi, r, _ = ppr_from_scratch(g, s, cfg)
            off = ~reach
            worst = max(worst, float(np.abs(pi[off]).max()),
                        float(np.abs(r[off]).max()))
        if checked == 0:
            raise ValidationError("locality check generated no unreachable sets")
        return worst, checked

    (worst, checked), secs = _timed(run)
    return CheckResult("locality off the reachable set", worst == 0.0,
                       worst, 0.0, secs, f"{checked} graphs with unreachable nodes")


def check_pagerank_averaging(count=20, n_lo=20, n_hi=120, mean_deg=5.0,
                             eps=1e-9, pr_tol=1e-12, seed=4):
    """Global PageRank equals the mean of all egocentric vectors.

    Needs one shared transition matrix, so every run patches dangling rows
    uniformly.  Tolerance: n*eps/(1-alpha) for the pushed vectors plus
    10*pr_tol for the power-iteration reference.
    """
    rng = np.random.default_rng(seed)

    def run():
        worst_excess = -np.inf
        for g in _random_graphs(rng, count, n_lo, n_hi, mean_deg):
            n = g.node_count
            cfg = SolverConfig(epsilon=eps, dangling=DANGLING_UNIFORM)
            acc = np.zeros(n)
            for s in range(n):
                pi, _, _ = ppr_from_scratch(g, s, cfg)
                acc += pi
            acc /= n
            pr = power_iteration(g, 0, cfg.alpha, tol=pr_tol, uniform=True)
            dist = float(np.abs(acc - pr).sum())
            bound = n * eps / (1.0 - cfg.alpha) + 10.0 * pr_tol
            worst_excess = max(worst_excess, dist - bound)
        return worst_excess

    worst, secs = _timed(run)
    return CheckResult("global PageRank as mean of egocentric runs",
                       worst <= 0.0, worst, 0.0, secs,
                       "worst is max(distance - allowed)")


def random_problem(rng, n=120, mean_deg=5.0, n_insert=0, n_delete=0,
                   n_edge_ins=3, n_edge_del=3, eps_prior=1e-7, alpha=0.85,
                   exact=False, payload=4):
    """Random UpdateProblem: graph, batch, converged prior."""
    g = gallery.random_digraph(int(n), mean_deg, seed=rng)
    source = int(rng.integers(g.node_count))
    batch = gallery.random_batch(g, rng, n_insert=n_insert, n_delete=n_delete,
                                 n_edge_ins=n_edge_ins, n_edge_del=n_edge_del,
                                 protect=[source], payload=payload)
    new, idm = apply_batch(g, batch)
    cfg = SolverConfig(alpha=alpha, epsilon=eps_prior)
    pi, r, _ = ppr_from_scratch(g, source, cfg)
    return UpdateProblem(g, new, idm, source, pi, r, cfg,
                         exact_deletion_correction=exact)


def deletion_term(problem: UpdateProblem) -> np.ndarray:
    """Brute-force alpha * sum_d pi[d] * (effective row of d -> survivors).

    This is exactly what the default virtual-web warm start leaves in the
    residual (r0 - r_true); the exact mode subtracts it.
    """
    idm = problem.id_map
    o2n = idm.old_to_new
    out = np.zeros(problem.new_graph.node_count)
    for u in idm.deleted_old:
        x = float(problem.prior_pi[u])
        if x == 0.0:
            continue
        w, tgt = out_neighbors_effective(problem.old_graph, int(u),
                                         problem.source_old)
        for t in tgt:
            t2 = o2n[t]
            if t2 >= 0:
                out[t2] += problem.config.alpha * x * w
    return out


def check_link_init_exact(count=100, n=150, mean_deg=5.0, max_flips=50,
                          tol=1e-12, seed=5):
    """Link-only warm start satisfies the new web's identity to rounding."""
    rng = np.random.default_rng(seed)

    def run():
        worst = 0.0
        for _ in range(count):
            flips = int(rng.integers(1, max_flips + 1))
            dele = int(rng.integers(0, flips + 1))
            p = random_problem(rng, n=n, mean_deg=mean_deg,
                               n_edge_ins=flips - dele, n_edge_del=dele)
            pi0, r0 = tracking_init(p)
            true_r = residual_of(p.new_graph, p.source_old, pi0, p.config.alpha)
            worst = max(worst, float(np.abs(true_r - r0).max()))
        return worst

    worst, secs = _timed(run)
    return CheckResult("link-only warm start exactness", worst <= tol,
                       worst, tol, secs, f"{count} batches, 1..{max_flips} flips")


def check_node_init_fidelity(count=100, n=150, mean_deg=5.0, tol=1e-12,
                             seed=6):
    """Virtual-web warm start: default misses exactly the departed rows'
    influence; the exact mode misses nothing."""
    rng = np.random.default_rng(seed)

    def run():
        worst = 0.0
        for _ in range(count):
            p = random_problem(rng, n=n, mean_deg=mean_deg,
                               n_insert=int(rng.integers(1, 6)),
                               n_delete=int(rng.integers(1, 6)),
                               n_edge_ins=int(rng.integers(0, 8)),
                               n_edge_del=int(rng.integers(0, 8)))
            pi0, r0 = vw_init(p)
            true_r = residual_of(p.new_graph, p.source_new, pi0, p.config.alpha)
            expected_gap = deletion_term(p)  # r0 - true_r, brute force
            worst = max(worst, float(np.abs((r0 - true_r) - expected_gap).max()))
            p.exact_deletion_correction = True
            pi0, r0 = vw_init(p)
            worst = max(worst, float(np.abs(true_r - r0).max()))
        return worst

    worst, secs = _timed(run)
    return CheckResult("virtual-web warm start fidelity", worst <= tol,
                       worst, tol, secs, f"{count} node+link batches")


def check_end_to_end(count=50, n_lo=200, n_hi=400, mean_deg=5.0, eps=1e-7,
                     seed=7):
    """Every update path lands within its l1 bound of a dense solve.

    The default virtual-web start gets the documented extra allowance
    alpha * ||pi_deleted||_1 / (1 - alpha).
    """
    rng = np.random.default_rng(seed)

    def run():
        slack = -np.inf
        violations = 0
        cases = 0
        for idx in range(count):
            n = int(rng.integers(n_lo, n_hi + 1))
            g = gallery.random_digraph(n, mean_deg, seed=rng)
            link_only = idx % 5 == 0
            plan = PerturbPlan(
                insert_nodes=0 if link_only else int(rng.integers(1, 6)),
                delete_nodes=0 if link_only else int(rng.integers(1, 6)),
                insert_edge_fraction=float(rng.uniform(0.01, 0.05)),
                delete_edge_fraction=float(rng.uniform(0.01, 0.05)),
                rng_seed=int(rng.integers(2**31)))
            evo = make_evolution(g, plan)
            idm = evo.map_original_to_updated
            surv = idm.survivors_old
            s_old = int(surv[rng.integers(surv.size)])
            s_new = int(idm.old_to_new[s_old])
            cfg = SolverConfig(epsilon=eps)
            prior_pi, prior_r, _ = ppr_from_scratch(evo.original, s_old, cfg)
            exact = oracle_dense(evo.updated, s_new, cfg.alpha)

            def problem(correct):
                return UpdateProblem(evo.original, evo.updated, idm, s_old,
                                     prior_pi, prior_r, cfg,
                                     exact_deletion_correction=correct)

            runs = []
            p = problem(False)
            dead_mass = float(np.abs(prior_pi[idm.deleted_old]).sum())
            extra = cfg.alpha * dead_mass / (1.0 - cfg.alpha)
            pi, r, _ = vwppr_update(p)
            runs.append((pi, extra))
            pi, r, _ = vwppr_update(problem(True))
            runs.append((pi, 0.0))
            pi, r, _ = per_edge_baseline(problem(False))
            runs.append((pi, 0.0))
            pi, r, _ = ppr_from_scratch(evo.updated, s_new, cfg)
            runs.append((pi, 0.0))
            if link_only:
                pt = problem(False)
                pi0, r0 = tracking_init(pt)
                pi, r, _ = gauss_southwell(evo.updated, s_new, pi0, r0, cfg)
                runs.append((pi, 0.0))
            for pi, extra in runs:
                ok, margin, _ = exact_bound_margin(evo.updated, s_new, pi,
                                                   exact, cfg.alpha, extra)
                slack = max(slack, -margin)
                violations += 0 if ok else 1
                cases += 1
        return slack, violations, cases

    (worst, violations, cases), secs = _timed(run)
    return CheckResult("end-to-end error within l1 bounds", violations == 0,
                       worst, 0.0, secs,
                       f"{cases} method runs; worst is max(err - allowed)")
