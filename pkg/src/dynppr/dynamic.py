"""Warm-started PPR solves across one web change.

Given a converged pair (pi, r) on the old web, these routines build a
starting pair on the new web whose residual already accounts for the
change, so the push solver only has to clean up what actually moved:

* :func:`tracking_init` -- link flips only, same node set.  The warm start
  ``r0 = r + alpha * pi * (P_new - P_old)`` restricted to the rows that
  changed is *exact*: its residual identity holds to rounding.
* :func:`vw_init` -- simultaneous node arrivals/departures plus link flips.
  Survivors carry their scores over (inserted nodes start at zero) and the
  residual is amended row-by-row for every surviving row whose effective
  out-row changed.  By default the influence the departed nodes used to
  exert on survivors is left in place (it is small when departures carry
  little mass); ``exact_deletion_correction=True`` subtracts
  ``alpha * pi[d] * row(d)`` for every departed d, making the warm start
  exact as well.
* :func:`per_edge_baseline` -- the sequential comparison point: the same
  batch serialized into single-edge mutations, re-amending and re-pushing
  after every one.

All three consume an :class:`UpdateProblem`, which validates on
construction that the prior actually is a converged pair for the old web
(residual identity within 1e-9 sup-norm) and that the source survives.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import BudgetExceededError, DynpprError, PreconditionError, ValidationError
from .graph import Graph, IdMap, changed_rows, out_neighbors_effective
from .solver import (DANGLING_SOURCE, SolverConfig, SolverStats,
                     gauss_southwell, residual_of)

_PRIOR_IDENTITY_TOL = 1e-9


@dataclass
class UpdateProblem:
    """One update instance: old web, new web, id map, source, and prior."""

    old_graph: Graph
    new_graph: Graph
    id_map: IdMap
    source_old: int
    prior_pi: np.ndarray
    prior_r: np.ndarray
    config: SolverConfig
    exact_deletion_correction: bool = False
    _changed: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        n_old = self.old_graph.node_count
        if self.id_map.n_old != n_old or self.id_map.n_new != self.new_graph.node_count:
            raise ValidationError("id map does not match the two graphs")
        if not 0 <= self.source_old < n_old:
            raise ValidationError(f"source {self.source_old} out of range")
        if self.id_map.old_to_new[self.source_old] < 0:
            raise PreconditionError(
                "the source node departs in this batch; updates that delete "
                "the source are not supported")
        if self.config.dangling != DANGLING_SOURCE:
            raise PreconditionError(
                "dynamic updates assume source-dangling transition semantics")
        self.prior_pi = np.asarray(self.prior_pi, dtype=np.float64)
        self.prior_r = np.asarray(self.prior_r, dtype=np.float64)
        if self.prior_pi.size != n_old or self.prior_r.size != n_old:
            raise ValidationError("prior length does not match the old graph")
        gap = residual_of(self.old_graph, self.source_old, self.prior_pi,
                          self.config.alpha) - self.prior_r
        worst = float(np.abs(gap).max()) if gap.size else 0.0
        if worst > _PRIOR_IDENTITY_TOL:
            raise ValidationError(
                f"prior violates the residual identity (sup gap {worst:.3e}); "
                "it is not a converged pair for the old graph")

    @property
    def source_new(self) -> int:
        return int(self.id_map.old_to_new[self.source_old])

    def changed_survivors(self) -> np.ndarray:
        """Surviving old rows whose effective out-row changed (cached)."""
        if self._changed is None:
            self._changed = changed_rows(self.old_graph, self.new_graph,
                                         self.id_map, self.source_old)
        return self._changed


def _amend_rows(r0, g: Graph, rows, x, alpha, sign, source, o2n=None):
    """Accumulate ``sign * alpha * x_i * (effective row i)`` into r0.

    ``source`` is given in r0's id space; with ``o2n`` the row targets are
    mapped and targets that do not survive are dropped.
    """
    if rows.size == 0:
        return
    deg = g.out_degree[rows]
    nz = deg > 0
    if np.any(nz):
        rr = rows[nz]
        lens = deg[nz]
        total = int(lens.sum())
        within = np.arange(total) - np.repeat(np.cumsum(lens) - lens, lens)
        tgt = g.indices[np.repeat(g.indptr[rr], lens) + within].astype(np.int64)
        w = np.repeat(sign * alpha * x[nz] / lens, lens)
        if o2n is not None:
            tgt = o2n[tgt]
            keep = tgt >= 0
            tgt, w = tgt[keep], w[keep]
        if tgt.size:
            r0 += np.bincount(tgt, weights=w, minlength=r0.size)
    mass = float(x[~nz].sum())
    if mass != 0.0:
        r0[source] += sign * alpha * mass


def tracking_init(problem: UpdateProblem):
    """Warm start across a link-only change (same node set).

    Returns ``(pi0, r0)`` on the new web.  Exact: the pair satisfies the
    new web's residual identity to rounding.  Batches that add or remove
    nodes are rejected -- use :func:`vw_init` for those.
    """
    if not problem.id_map.is_identity:
        raise PreconditionError(
            "batch adds or removes nodes; the link-only warm start does not "
            "apply -- use vw_init")
    rows = problem.changed_survivors()
    pi0 = problem.prior_pi.copy()
    r0 = problem.prior_r.copy()
    x = problem.prior_pi[rows]
    alpha = problem.config.alpha
    s = problem.source_old
    _amend_rows(r0, problem.old_graph, rows, x, alpha, -1.0, s)
    _amend_rows(r0, problem.new_graph, rows, x, alpha, +1.0, s)
    return pi0, r0


def vw_init(problem: UpdateProblem):
    """Warm start across simultaneous node and link changes.

    Returns ``(pi0, r0)`` in the new web's id space.  Exact on inserted
    nodes always; on survivors the departed nodes' old influence is only
    removed when ``exact_deletion_correction`` is set (default keeps the
    cheap approximate start).
    """
    idm = problem.id_map
    o2n = idm.old_to_new
    n_new = problem.new_graph.node_count
    surv = idm.survivors_old
    alpha = problem.config.alpha
    s_new = problem.source_new

    pi0 = np.zeros(n_new)
    r0 = np.zeros(n_new)
    pi0[o2n[surv]] = problem.prior_pi[surv]
    r0[o2n[surv]] = problem.prior_r[surv]

    rows = problem.changed_survivors()
    x = problem.prior_pi[rows]
    _amend_rows(r0, problem.old_graph, rows, x, alpha, -1.0, s_new, o2n=o2n)
    _amend_rows(r0, problem.new_graph, o2n[rows], x, alpha, +1.0, s_new)

    if problem.exact_deletion_correction:
        dead = idm.deleted_old
        _amend_rows(r0, problem.old_graph, dead, problem.prior_pi[dead],
                    alpha, -1.0, s_new, o2n=o2n)
    return pi0, r0


def vwppr_update(problem: UpdateProblem, observer=None, observe_every=100):
    """vw_init + push to convergence on the new web.

    Returns ``(pi, r, stats)``; ``stats.wall_time_s`` covers initializer
    plus solve, ``stats.pushes`` counts solver work only.
    """
    t0 = time.perf_counter()
    pi0, r0 = vw_init(problem)
    init_s = time.perf_counter() - t0
    pi, r, stats = gauss_southwell(problem.new_graph, problem.source_new,
                                   pi0, r0, problem.config,
                                   observer=observer, observe_every=observe_every)
    stats.wall_time_s += init_s
    return pi, r, stats


# -- per-edge sequential baseline ----------------------------------------------


def _build_linked_adjacency(g: Graph, extra_nodes: int, extra_edges: int):
    """Lay the CSR rows out as sorted singly linked chains in a pool."""
    n_old = g.node_count
    m = g.edge_count
    n_tot = n_old + extra_nodes
    cap = m + extra_edges
    dst = np.zeros(cap, dtype=np.int32)
    dst[:m] = g.indices
    nxt = np.full(cap, -1, dtype=np.int64)
    if m:
        nxt[: m - 1] = np.arange(1, m, dtype=np.int64)
        nxt[m - 1] = -1
        deg = g.out_degree
        ends = g.indptr[1:][deg > 0] - 1
        nxt[ends] = -1
    head = np.full(n_tot, -1, dtype=np.int64)
    deg = g.out_degree
    head[:n_old][deg > 0] = g.indptr[:-1][deg > 0]
    out_deg = np.zeros(n_tot, dtype=np.int64)
    out_deg[:n_old] = deg
    return head, nxt, dst, out_deg


def _per_edge_schedule(old: Graph, new: Graph, idm: IdMap):
    """Serialize a batch into single mutations over driver slots.

    Slots: old ids keep their numbers; arriving node k (new id n_surv + k)
    gets slot n_old + k.  Order: departing nodes ascending (in-edges, then
    out-edges, each shared edge once, then the drop), arriving nodes
    ascending (node, in-edges, out-edges), surviving-pair deletions
    ascending, surviving-pair insertions ascending.
    """
    o2n, n2o = idm.old_to_new, idm.new_to_old
    n_old, n_new = idm.n_old, idm.n_new
    n_surv = n_old - idm.num_deleted
    kinds, us, vs = [], [], []

    def emit(kind, u, v=0):
        kinds.append(kind)
        us.append(int(u))
        vs.append(int(v))

    # departing nodes
    processed = np.zeros(n_old, dtype=bool)
    rev = old.reverse()
    for u in idm.deleted_old:
        for x in rev.neighbors(u):
            if not processed[x]:
                emit(_kernels.OP_DEL_EDGE, x, u)
        for y in old.neighbors(u):
            if y != u and not processed[y]:
                emit(_kernels.OP_DEL_EDGE, u, y)
        emit(_kernels.OP_DROP_NODE, u)
        processed[u] = True

    # arriving nodes; slot(new id j) for inserted j is n_old + (j - n_surv)
    def slot(j):
        jo = n2o[j]
        return jo if jo >= 0 else n_old + (j - n_surv)

    new_rev = new.reverse()
    for w in idm.inserted_new:
        sw = slot(w)
        emit(_kernels.OP_ADD_NODE, sw)
        for x in new_rev.neighbors(w):
            if n2o[x] >= 0 or x < w:
                emit(_kernels.OP_ADD_EDGE, slot(x), sw)
        for y in new.neighbors(w):
            if n2o[y] >= 0 or y <= w:
                emit(_kernels.OP_ADD_EDGE, sw, slot(y))

    # surviving-pair deltas, diffed in the new id space (keys stay sorted)
    src_old = old.edge_sources().astype(np.int64)
    alive = (o2n[src_old] >= 0) & (o2n[old.indices] >= 0)
    old_keys = o2n[src_old[alive]] * n_new + o2n[old.indices[alive]]
    src_new = new.edge_sources().astype(np.int64)
    surv_e = (n2o[src_new] >= 0) & (n2o[new.indices] >= 0)
    new_keys = src_new[surv_e] * n_new + new.indices[surv_e]
    for key in np.setdiff1d(old_keys, new_keys, assume_unique=True):
        emit(_kernels.OP_DEL_EDGE, n2o[key // n_new], n2o[key % n_new])
    for key in np.setdiff1d(new_keys, old_keys, assume_unique=True):
        emit(_kernels.OP_ADD_EDGE, n2o[key // n_new], n2o[key % n_new])

    return (np.array(kinds, np.int64), np.array(us, np.int64),
            np.array(vs, np.int64))


def per_edge_baseline(problem: UpdateProblem):
    """Replay the batch one edge at a time, re-pushing after each mutation.

    Returns ``(pi, r, stats)`` in the new web's id space, like
    :func:`vwppr_update`.  ``stats.initial_residual_l1`` is the prior's
    residual on the old web; pushes accumulate over the whole replay.
    """
    t0 = time.perf_counter()
    idm = problem.id_map
    old, new = problem.old_graph, problem.new_graph
    kinds, us, vs = _per_edge_schedule(old, new, idm)
    n_adds = int((kinds == _kernels.OP_ADD_EDGE).sum())
    head, nxt, dst, out_deg = _build_linked_adjacency(
        old, idm.num_inserted, n_adds)
    n_tot = head.size
    pi_run = np.zeros(n_tot)
    r_run = np.zeros(n_tot)
    pi_run[:idm.n_old] = problem.prior_pi
    r_run[:idm.n_old] = problem.prior_r
    cfg = problem.config
    budget = _kernels.NO_BUDGET if cfg.max_pushes is None else cfg.max_pushes

    pushes, touched, status, _ = _kernels.per_edge_run(
        head, nxt, dst, out_deg, old.edge_count, pi_run, r_run,
        kinds, us, vs, cfg.epsilon, cfg.alpha, problem.source_old, budget)
    if status < 0:
        raise DynpprError("per-edge schedule referenced a missing edge")

    n_surv = idm.n_old - idm.num_deleted
    a = idm.num_inserted
    pi = np.zeros(idm.n_new)
    r = np.zeros(idm.n_new)
    surv = idm.survivors_old
    pi[idm.old_to_new[surv]] = pi_run[surv]
    r[idm.old_to_new[surv]] = r_run[surv]
    if a:
        pi[n_surv + np.arange(a)] = pi_run[idm.n_old + np.arange(a)]
        r[n_surv + np.arange(a)] = r_run[idm.n_old + np.arange(a)]

    wall = time.perf_counter() - t0
    stats = SolverStats(int(pushes), int(touched), wall,
                        float(np.abs(problem.prior_r).sum()),
                        float(np.abs(r).sum()))
    if status == 0:
        raise BudgetExceededError(
            f"push budget {cfg.max_pushes} exhausted during per-edge replay",
            pi=pi, r=r, stats=stats)
    return pi, r, stats
