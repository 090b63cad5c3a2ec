"""Synthetic digraphs and random perturbation batches.

Deterministic generators used by the test suite, the verification checks,
and the demo scripts.  ``scale_free_digraph`` is the stand-in for a web
crawl: a copy-model graph whose in-degrees follow a heavy tail while
out-degrees stay near the requested mean.
"""

from __future__ import annotations

import numpy as np

from .errors import ValidationError
from .graph import Graph, InsertedNode, PerturbationBatch


def _as_rng(seed_or_rng):
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def random_digraph(n: int, mean_out_degree: float, seed=0,
                   self_loops: bool = True) -> Graph:
    """Uniform random digraph with about n * mean_out_degree distinct edges."""
    if n <= 0:
        raise ValidationError("n must be positive")
    rng = _as_rng(seed)
    m = int(n * mean_out_degree)
    u = rng.integers(0, n, size=m)
    v = rng.integers(0, n, size=m)
    if not self_loops:
        keep = u != v
        u, v = u[keep], v[keep]
    return Graph.from_edges(u, v, num_nodes=n)


def scale_free_digraph(n: int, out_per_node: int = 8, seed=0,
                       copy_prob: float = 0.5, chunk: int = 16384) -> Graph:
    """Copy-model digraph: heavy-tailed in-degrees, ~out_per_node out-degree.

    Each new node draws targets either by copying the target of a random
    earlier edge (with probability ``copy_prob`` -- that is what produces
    the preferential-attachment tail) or uniformly among earlier nodes.
    """
    if n < 2:
        raise ValidationError("need at least 2 nodes")
    rng = _as_rng(seed)
    k = int(out_per_node)
    core = min(max(k, 2), n)
    srcs = [np.arange(core, dtype=np.int64)]
    dsts = [(np.arange(core, dtype=np.int64) + 1) % core]
    total = core
    lo = core
    while lo < n:
        hi = min(lo + chunk, n)
        cnt = (hi - lo) * k
        uniform = rng.integers(0, lo, size=cnt)
        copied_at = rng.integers(0, total, size=cnt)
        coin = rng.random(cnt) < copy_prob
        # copy targets from edges generated so far (flat view over chunks)
        flat = np.concatenate(dsts) if len(dsts) > 1 else dsts[0]
        dsts = [flat]
        tgt = np.where(coin, flat[copied_at], uniform)
        src = np.repeat(np.arange(lo, hi, dtype=np.int64), k)
        srcs.append(src)
        dsts.append(tgt)
        total += cnt
        lo = hi
    return Graph.from_edges(np.concatenate(srcs), np.concatenate(dsts),
                            num_nodes=n)


def crawl_digraph(n: int, out_per_node: int = 8, out_cap: int = 512,
                  seed=0) -> Graph:
    """Crawl-shaped benchmark graph with one giant strongly-connected core.

    Symmetrizes a copy-model graph (so the core is strongly connected and
    in-degrees keep their heavy tail), then trims every out-row to at most
    ``out_cap`` targets: pages link out a bounded number of times, however
    many links point back at them.
    """
    if out_cap < 1:
        raise ValidationError("out_cap must be at least 1")
    g0 = scale_free_digraph(n, out_per_node=out_per_node, seed=seed)
    us = g0.edge_sources().astype(np.int64)
    vs = g0.indices.astype(np.int64)
    g = Graph.from_edges(np.r_[us, vs], np.r_[vs, us], num_nodes=n)
    deg = g.out_degree
    rng = _as_rng(seed)
    keep = np.ones(g.edge_count, dtype=bool)
    for i in np.flatnonzero(deg > out_cap):
        row = np.arange(g.indptr[i], g.indptr[i + 1])
        keep[rng.choice(row, size=row.size - out_cap, replace=False)] = False
    if keep.all():
        return g
    return Graph.from_edges(g.edge_sources()[keep], g.indices[keep],
                            num_nodes=n)


def write_random_edge_list(path, n: int, m: int, seed=0,
                           chunk: int = 4_000_000) -> None:
    """Stream m random 'u v' lines over n nodes to a text file.

    Lines may repeat (the loader dedups); used to produce large ingestion
    fixtures without holding them in memory.
    """
    import pandas as pd

    rng = _as_rng(seed)
    with open(path, "w") as fh:
        fh.write(f"# random edge list: {n} nodes, {m} lines\n")
        left = m
        while left > 0:
            take = min(chunk, left)
            block = pd.DataFrame({
                "u": rng.integers(0, n, size=take),
                "v": rng.integers(0, n, size=take),
            })
            block.to_csv(fh, sep="\t", header=False, index=False,
                         lineterminator="\n")
            left -= take


def random_batch(g: Graph, rng, n_insert: int = 0, n_delete: int = 0,
                 n_edge_ins: int = 0, n_edge_del: int = 0, protect=(),
                 payload: int = 4) -> PerturbationBatch:
    """A random valid batch on g; nodes in ``protect`` never depart.

    Arriving nodes get up to ``payload`` random in- and out-edges among
    survivors and previously listed arrivals.
    """
    rng = _as_rng(rng)
    n = g.node_count
    protect = np.asarray(sorted(set(int(p) for p in protect)), dtype=np.int64)
    cand = np.setdiff1d(np.arange(n, dtype=np.int64), protect)
    if n_delete > cand.size:
        raise ValidationError("not enough deletable nodes")
    deleted = np.sort(rng.choice(cand, size=n_delete, replace=False)) \
        if n_delete else np.empty(0, np.int64)
    dead = np.zeros(n, dtype=bool)
    dead[deleted] = True
    survivors = np.where(~dead)[0]

    # link flips among survivors
    keys = g.edge_keys()
    src = g.edge_sources().astype(np.int64)
    alive_e = np.where(~dead[src] & ~dead[g.indices])[0]
    if n_edge_del > alive_e.size:
        raise ValidationError("not enough deletable edges")
    pick = rng.choice(alive_e, size=n_edge_del, replace=False) \
        if n_edge_del else np.empty(0, np.int64)
    deleted_edges = np.stack([src[pick], g.indices[pick].astype(np.int64)],
                             axis=1)

    ins = []
    guard = 0
    while len(ins) < n_edge_ins:
        guard += 1
        if guard > 200:
            raise ValidationError("could not find enough absent edges")
        want = (n_edge_ins - len(ins)) * 2 + 4
        uu = survivors[rng.integers(0, survivors.size, size=want)]
        vv = survivors[rng.integers(0, survivors.size, size=want)]
        kk = uu * n + vv
        fresh = kk[np.searchsorted(keys, kk) >= keys.size] if keys.size == 0 \
            else kk[(keys[np.minimum(np.searchsorted(keys, kk), keys.size - 1)] != kk)]
        for key in fresh:
            if len(ins) == n_edge_ins:
                break
            pair = (int(key // n), int(key % n))
            if pair not in ins:
                ins.append(pair)
    inserted_edges = np.array(sorted(set(ins)), dtype=np.int64).reshape(-1, 2)

    # arriving nodes: random payload, each edge listed exactly once
    used = set()
    nodes = []
    for j in range(n_insert):
        pre = n + j
        pool = np.concatenate([survivors, n + np.arange(j + 1, dtype=np.int64)])
        outs, ins_list = [], []
        for _ in range(int(rng.integers(0, payload + 1))):
            t = int(pool[rng.integers(pool.size)])
            if (pre, t) not in used:
                used.add((pre, t))
                outs.append(t)
        for _ in range(int(rng.integers(0, payload + 1))):
            s = int(pool[rng.integers(pool.size)])
            if s == pre:
                continue  # self-loops ride along as out-edges
            if (s, pre) not in used:
                used.add((s, pre))
                ins_list.append(s)
        nodes.append(InsertedNode(pre, np.array(outs, np.int64),
                                  np.array(ins_list, np.int64)))
    return PerturbationBatch(tuple(nodes), deleted, inserted_edges,
                             deleted_edges)
