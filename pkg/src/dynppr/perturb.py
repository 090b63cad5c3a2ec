"""Synthetic web evolution.

Reproduces the standard protocol for studying PPR maintenance on a static
snapshot S: pick a region A by BFS (these become the "arriving" nodes),
form the pre-change web W0 = S minus A, withhold the last k edges of a
random stream over W0 (these later arrive as link insertions), pick a
departing set D and a set of l edges to drop, and package everything as
one :class:`~dynppr.graph.PerturbationBatch` from the original web
(W0 minus the withheld edges) to the updated web.

Everything is driven by one PCG64 generator seeded from the plan, so a
fixed (snapshot, plan) pair reproduces the batch byte for byte.
"""

from __future__ import annotations

import json
import warnings
from collections import deque
from dataclasses import dataclass, asdict

import numpy as np

from .errors import ValidationError
from .graph import (Graph, IdMap, InsertedNode, PerturbationBatch,
                    apply_batch)

_RNG_NAME = "numpy-pcg64"
_CHURN_WARN_LEVEL = 0.10


@dataclass(frozen=True)
class PerturbPlan:
    """How much of each change kind one evolution applies."""

    insert_nodes: int = 0
    delete_nodes: int = 0
    insert_edge_fraction: float = 0.0
    delete_edge_fraction: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.insert_nodes < 0 or self.delete_nodes < 0:
            raise ValidationError("node counts must be non-negative")
        for f in (self.insert_edge_fraction, self.delete_edge_fraction):
            if not 0.0 <= f < 1.0:
                raise ValidationError(f"edge fraction {f} outside [0, 1)")

    def to_json(self) -> str:
        payload = asdict(self)
        payload["rng"] = _RNG_NAME
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PerturbPlan":
        payload = json.loads(text)
        rng = payload.pop("rng", _RNG_NAME)
        if rng != _RNG_NAME:
            raise ValidationError(f"plan was generated with unknown rng {rng!r}")
        return cls(**payload)

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json() + "\n")

    @classmethod
    def read(cls, path) -> "PerturbPlan":
        with open(path) as fh:
            return cls.from_json(fh.read())


def bfs_sample(g: Graph, start: int, count: int, rng=None) -> np.ndarray:
    """First ``count`` nodes in out-edge BFS order from ``start``.

    When the frontier empties before enough nodes are seen, the walk
    restarts at a uniformly random unvisited node.
    """
    n = g.node_count
    if not 1 <= count <= n:
        raise ValidationError(f"count {count} outside 1..{n}")
    if not 0 <= start < n:
        raise ValidationError(f"start {start} out of range")
    if rng is None:
        rng = np.random.default_rng(0)
    visited = np.zeros(n, dtype=bool)
    order = np.empty(count, dtype=np.int64)
    queue = deque()
    taken = 0

    def visit(u):
        nonlocal taken
        visited[u] = True
        order[taken] = u
        taken += 1
        queue.append(u)

    visit(start)
    while taken < count:
        if not queue:
            rest = np.where(~visited)[0]
            visit(int(rest[rng.integers(rest.size)]))
            continue
        u = queue.popleft()
        for v in g.neighbors(u):
            if not visited[v]:
                visit(int(v))
                if taken == count:
                    break
    return order


@dataclass
class EvolutionResult:
    """An original web, the batch turning it into the updated web, and maps."""

    original: Graph
    batch: PerturbationBatch
    updated: Graph
    map_full_to_original: IdMap
    map_original_to_updated: IdMap
    plan: PerturbPlan

    @property
    def map_full_to_updated(self) -> IdMap:
        return self.map_full_to_original.compose(self.map_original_to_updated)


def make_evolution(full: Graph, plan: PerturbPlan) -> EvolutionResult:
    """Carve one evolution out of a static snapshot (see module docstring).

    Churn above 10% of the snapshot warns but proceeds.
    """
    rng = np.random.default_rng(plan.rng_seed)
    n = full.node_count
    a, d = plan.insert_nodes, plan.delete_nodes
    if a > 0 and a >= n:
        raise ValidationError(f"cannot withhold {a} nodes from a {n}-node web")
    churn = max(
        a / n if n else 0.0, d / n if n else 0.0,
        plan.insert_edge_fraction, plan.delete_edge_fraction)
    if churn > _CHURN_WARN_LEVEL:
        warnings.warn(
            f"plan churns {churn:.1%} of the snapshot; update-time results "
            "may not be meaningful", stacklevel=2)

    # region A that will later arrive, in BFS discovery order
    if a:
        A = bfs_sample(full, int(rng.integers(n)), a, rng)
    else:
        A = np.empty(0, dtype=np.int64)

    w0, map_full_w0 = apply_batch(full, PerturbationBatch(deleted_nodes=A))
    m0 = w0.edge_count

    k = int(round(plan.insert_edge_fraction * m0))
    l = int(round(plan.delete_edge_fraction * m0))

    # random stream over W0's edges; the last k are withheld and arrive later
    perm = rng.permutation(m0)
    eu = w0.edge_sources().astype(np.int64)[perm]
    ev = w0.indices.astype(np.int64)[perm]
    withheld = np.stack([eu[m0 - k:], ev[m0 - k:]], axis=1) if k else \
        np.empty((0, 2), np.int64)

    original, map_w0_orig = apply_batch(
        w0, PerturbationBatch(deleted_edges=withheld))
    n0 = original.node_count

    if d >= n0:
        raise ValidationError(f"cannot delete {d} of {n0} nodes")
    D = np.sort(rng.choice(n0, size=d, replace=False).astype(np.int64))
    in_d = np.zeros(n0, dtype=bool)
    in_d[D] = True

    # l random departures among the original web's edges that survive D
    cu, cv = eu[: m0 - k], ev[: m0 - k]
    ok = ~in_d[cu] & ~in_d[cv]
    cand = np.where(ok)[0]
    if l > cand.size:
        raise ValidationError(
            f"plan wants {l} edge deletions but only {cand.size} qualify")
    pick = rng.choice(cand, size=l, replace=False) if l else \
        np.empty(0, np.int64)
    deleted_edges = np.stack([cu[pick], cv[pick]], axis=1) if l else \
        np.empty((0, 2), np.int64)

    # withheld edges come back, unless an endpoint departs
    keep = ~in_d[withheld[:, 0]] & ~in_d[withheld[:, 1]] if k else \
        np.empty(0, dtype=bool)
    inserted_edges = withheld[keep] if k else withheld

    # arriving nodes carry their snapshot-incident edges (minus D)
    pos_in_a = np.full(n, -1, dtype=np.int64)
    if a:
        pos_in_a[A] = np.arange(a)
    full_rev = full.reverse()
    o2w = map_full_w0.old_to_new
    nodes = []
    for j, t in enumerate(A):
        pre = n0 + j

        def classify(ids, own_is_src):
            out = []
            for q in ids:
                pj = pos_in_a[q]
                if pj >= 0:
                    # edge inside A: charge it to the higher pre-id
                    # (self-loops count as out-edges)
                    if own_is_src and pj <= j or not own_is_src and pj < j:
                        out.append(n0 + pj)
                else:
                    w0_id = o2w[q]
                    if not in_d[w0_id]:
                        out.append(int(w0_id))
            return np.array(out, dtype=np.int64)

        nodes.append(InsertedNode(
            pre,
            out_edges=classify(full.neighbors(t), True),
            in_edges=classify(full_rev.neighbors(t), False)))

    batch = PerturbationBatch(tuple(nodes), D, inserted_edges, deleted_edges)
    updated, map_orig_upd = apply_batch(original, batch)
    return EvolutionResult(original, batch, updated, map_full_w0,
                           map_orig_upd, plan)
