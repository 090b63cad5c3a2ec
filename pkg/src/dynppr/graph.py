"""Directed graph storage, edge-list ingestion, and batch mutation.

Node IDs are dense integers ``0..n-1``.  Out-adjacency lives in CSR arrays
``(indptr, indices)`` with every row sorted ascending and duplicate-free.
Transition semantics are row-stochastic: a node of out-degree d spreads its
mass uniformly (1/d) over its targets, and a node with no out-links
("dangling") behaves as if it had a single link back to a caller-supplied
source node.  That dangling patch is virtual -- computed on the fly, never
stored -- because it depends on which source the caller is solving for.

A :class:`PerturbationBatch` describes one simultaneous web change (node
arrivals with their incident edges, node departures, plus link flips among
surviving nodes) and :func:`apply_batch` materializes the successor graph
together with the :class:`IdMap` that relates the two ID spaces: survivors
are compacted preserving relative order, inserted nodes take the next dense
IDs, and IDs are never reused.
"""

from __future__ import annotations

import io
import logging
import os
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import ParseError, ValidationError

log = logging.getLogger(__name__)

_CACHE_FORMAT = "dynppr-graph"
_CACHE_VERSION = 1

# Guard for packing an edge (u, v) into the single int64 key u * n + v.
_MAX_PACKABLE_NODES = np.int64(3_000_000_000)


@dataclass(frozen=True)
class IngestStats:
    """Counts reported by the edge-list loader (raw lines vs after dedup)."""

    raw_edge_count: int
    edge_count: int
    node_count: int


class Graph:
    """Immutable directed graph over nodes ``0..n-1`` in CSR form."""

    __slots__ = ("indptr", "indices", "ingest", "_trans", "_rev", "_deg")

    def __init__(self, indptr, indices, ingest=None):
        indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        indices = np.ascontiguousarray(indices, dtype=np.int32)
        if indptr.ndim != 1 or indptr.size == 0 or indptr[0] != 0:
            raise ValidationError("indptr must be 1-d and start at 0")
        if indices.ndim != 1 or indptr[-1] != indices.size:
            raise ValidationError("indptr and indices disagree on edge count")
        if np.any(np.diff(indptr) < 0):
            raise ValidationError("indptr must be non-decreasing")
        n = indptr.size - 1
        if indices.size and (indices.min() < 0 or indices.max() >= n):
            raise ValidationError("neighbor id out of range")
        indptr.setflags(write=False)
        indices.setflags(write=False)
        self.indptr = indptr
        self.indices = indices
        self.ingest = ingest
        self._trans = None
        self._rev = None
        self._deg = None

    # -- construction ------------------------------------------------------

    @classmethod
    def from_edges(cls, u, v, num_nodes=None, ingest=None):
        """Build from parallel endpoint arrays; duplicates collapse."""
        u = np.asarray(u, dtype=np.int64).ravel()
        v = np.asarray(v, dtype=np.int64).ravel()
        if u.size != v.size:
            raise ValidationError("endpoint arrays differ in length")
        if u.size and (u.min() < 0 or v.min() < 0):
            raise ValidationError("negative node id")
        top = int(max(u.max(), v.max())) + 1 if u.size else 0
        if num_nodes is None:
            num_nodes = top
        elif num_nodes < top:
            raise ValidationError(f"num_nodes={num_nodes} below max id {top - 1}")
        if num_nodes > _MAX_PACKABLE_NODES:
            raise ValidationError("graph too large for packed edge keys")
        n = int(num_nodes)
        keys = np.unique(u * n + v) if u.size else np.empty(0, np.int64)
        src = keys // n if n else keys
        dst = keys % n if n else keys
        counts = np.bincount(src, minlength=n) if n else np.zeros(0, np.int64)
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return cls(indptr, dst.astype(np.int32), ingest=ingest)

    # -- basic accessors ----------------------------------------------------

    @property
    def node_count(self) -> int:
        return self.indptr.size - 1

    @property
    def edge_count(self) -> int:
        return self.indices.size

    @property
    def out_degree(self) -> np.ndarray:
        if self._deg is None:
            deg = np.diff(self.indptr)
            deg.setflags(write=False)
            self._deg = deg
        return self._deg

    def neighbors(self, u: int) -> np.ndarray:
        """Out-targets of u as a (read-only) slice of the CSR indices."""
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def edge_sources(self) -> np.ndarray:
        """Source endpoint per edge, aligned with ``indices``."""
        return np.repeat(np.arange(self.node_count, dtype=np.int32),
                         self.out_degree)

    def edge_keys(self) -> np.ndarray:
        """Edges packed as sorted int64 keys ``u * n + v``."""
        n = self.node_count
        return self.edge_sources().astype(np.int64) * n + self.indices

    def transition_matrix(self):
        """Row-stochastic scipy CSR with 1/out_degree weights.

        Dangling rows are all-zero here; callers apply the dangling patch
        themselves (it is source-dependent).
        """
        if self._trans is None:
            from scipy import sparse

            deg = self.out_degree
            data = np.repeat(
                np.divide(1.0, deg, out=np.zeros(deg.size), where=deg > 0), deg
            )
            self._trans = sparse.csr_matrix(
                (data, self.indices.astype(np.int64), self.indptr),
                shape=(self.node_count, self.node_count),
            )
        return self._trans

    def reverse(self) -> "Graph":
        """Graph with every edge flipped (cached)."""
        if self._rev is None:
            n = self.node_count
            counts = np.bincount(self.indices, minlength=n)
            indptr = np.zeros(n + 1, dtype=np.int64)
            np.cumsum(counts, out=indptr[1:])
            order = np.argsort(self.indices, kind="stable")
            self._rev = Graph(indptr, self.edge_sources()[order])
        return self._rev

    def equal_structure(self, other: "Graph") -> bool:
        return (
            self.node_count == other.node_count
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
        )

    def __repr__(self):
        return f"Graph(n={self.node_count}, m={self.edge_count})"


def out_neighbors_effective(g: Graph, u: int, source: int):
    """Effective out-row of u for a given source: ``(weight, targets)``.

    Dangling nodes yield ``(1.0, [source])``; all weights in a row are equal
    so a scalar is returned.  Row weights always sum to exactly 1.
    """
    lo, hi = g.indptr[u], g.indptr[u + 1]
    if hi > lo:
        return 1.0 / (hi - lo), g.indices[lo:hi]
    return 1.0, np.array([source], dtype=np.int32)


# -- edge-list text format ---------------------------------------------------


def load_edge_list(source, num_nodes=None, compact=False, symmetrize=False,
                   chunk_lines=2_000_000) -> Graph:
    """Read a SNAP-style whitespace edge list into a :class:`Graph`.

    ``source`` may be a path (fast chunked parse) or a file-like object
    (streaming parse).  Lines starting with ``#`` and blank lines are
    skipped; every other line must hold exactly two non-negative integers,
    else :class:`ParseError` with the 1-based line number.  Duplicate edges
    collapse; self-loops are kept.  Node ids run 0..max_id unless ``compact``
    remaps the ids actually used to a dense range.  Empty input gives the
    empty graph.
    """
    if isinstance(source, (str, os.PathLike)):
        u, v, raw = _read_edges_path(os.fspath(source), chunk_lines)
    else:
        u, v, raw = _read_edges_stream(source)
    if symmetrize and u.size:
        u, v = np.concatenate([u, v]), np.concatenate([v, u])
    if compact and u.size:
        used, inv = np.unique(np.concatenate([u, v]), return_inverse=True)
        u, v = inv[: u.size], inv[u.size:]
        if num_nodes is None:
            num_nodes = used.size
    g = Graph.from_edges(u, v, num_nodes=num_nodes)
    g.ingest = IngestStats(int(raw), g.edge_count, g.node_count)
    log.info("edge list: %d raw lines, %d edges after dedup, %d nodes",
             raw, g.edge_count, g.node_count)
    return g


def _read_edges_path(path, chunk_lines):
    us, vs, raw = [], [], 0
    try:
        with pd.read_csv(path, sep=r"\s+", comment="#", header=None,
                         dtype=np.int64, chunksize=chunk_lines) as reader:
            for chunk in reader:
                if chunk.shape[1] != 2:
                    raise _locate_parse_error(path, "wrong column count")
                arr = chunk.to_numpy()
                if arr.size and arr.min() < 0:
                    raise _locate_parse_error(path, "negative id")
                us.append(arr[:, 0].copy())
                vs.append(arr[:, 1].copy())
                raw += arr.shape[0]
    except pd.errors.EmptyDataError:
        return np.empty(0, np.int64), np.empty(0, np.int64), 0
    except ParseError:
        raise
    except (ValueError, OverflowError, pd.errors.ParserError) as exc:
        raise _locate_parse_error(path, str(exc)) from exc
    if not us:
        return np.empty(0, np.int64), np.empty(0, np.int64), 0
    return np.concatenate(us), np.concatenate(vs), raw


def _locate_parse_error(path, fallback_msg):
    """Re-scan a file in python to pin the offending line number."""
    try:
        with open(path, "rb") as fh:
            _read_edges_stream(fh)
    except ParseError as exc:
        return exc
    return ParseError(f"malformed edge list: {fallback_msg}")


def _read_edges_stream(stream):
    us, vs = [], []
    raw = 0
    for lineno, line in enumerate(stream, 1):
        if isinstance(line, bytes):
            line = line.decode("utf-8", errors="replace")
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.split()
        if len(parts) != 2:
            raise ParseError(f"expected 'u v', got {body!r}", lineno)
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer endpoint in {body!r}", lineno) from None
        if u < 0 or v < 0:
            raise ParseError(f"negative node id in {body!r}", lineno)
        if u >= 2**62 or v >= 2**62:
            raise ParseError(f"node id out of range in {body!r}", lineno)
        us.append(u)
        vs.append(v)
        raw += 1
    return (np.asarray(us, dtype=np.int64), np.asarray(vs, dtype=np.int64), raw)


def write_edge_list(path, g: Graph, comment=None) -> None:
    """Write a graph back out in the SNAP-style text format."""
    with open(path, "w") as fh:
        if comment:
            for ln in str(comment).splitlines():
                fh.write(f"# {ln}\n")
        fh.write(f"# nodes {g.node_count} edges {g.edge_count}\n")
        src = g.edge_sources()
        step = 4_000_000
        for lo in range(0, src.size, step):
            hi = min(lo + step, src.size)
            fh.writelines(f"{a}\t{b}\n" for a, b in
                          zip(src[lo:hi].tolist(), g.indices[lo:hi].tolist()))


def save_graph_cache(path, g: Graph) -> None:
    """Binary cache of the CSR arrays (versioned npz)."""
    np.savez(path, fmt=np.array(_CACHE_FORMAT), version=np.array([_CACHE_VERSION]),
             indptr=g.indptr, indices=g.indices)


def load_graph_cache(path) -> Graph:
    with np.load(path, allow_pickle=False) as z:
        if "fmt" not in z or str(z["fmt"]) != _CACHE_FORMAT:
            raise ValidationError(f"{path}: not a graph cache")
        if int(z["version"][0]) != _CACHE_VERSION:
            raise ValidationError(
                f"{path}: cache version {int(z['version'][0])} unsupported")
        return Graph(z["indptr"], z["indices"])


# -- id maps -----------------------------------------------------------------


@dataclass(frozen=True)
class IdMap:
    """Relates node IDs before and after a perturbation batch.

    ``old_to_new[i]`` is -1 when old node i was deleted; ``new_to_old[j]`` is
    -1 when new node j was inserted.  Survivors keep their relative order and
    occupy the low new IDs; inserted nodes take the dense IDs above them.
    """

    old_to_new: np.ndarray
    new_to_old: np.ndarray

    def __post_init__(self):
        o2n = np.ascontiguousarray(self.old_to_new, dtype=np.int64)
        n2o = np.ascontiguousarray(self.new_to_old, dtype=np.int64)
        object.__setattr__(self, "old_to_new", o2n)
        object.__setattr__(self, "new_to_old", n2o)
        alive = o2n >= 0
        mapped = o2n[alive]
        if mapped.size:
            if mapped.max() >= n2o.size:
                raise ValidationError("old_to_new maps outside the new space")
            if np.any(np.diff(mapped) <= 0):
                raise ValidationError("survivors must keep relative order")
            if not np.array_equal(n2o[mapped], np.where(alive)[0]):
                raise ValidationError("old_to_new/new_to_old disagree")
        ins = n2o < 0
        n_surv = int(mapped.size)
        if int(ins.sum()) != n2o.size - n_surv or (ins.size and np.any(ins[:n_surv])):
            raise ValidationError("inserted ids must be dense above survivors")
        keep = n2o[~ins]
        if keep.size and (keep.min() < 0 or keep.max() >= o2n.size):
            raise ValidationError("new_to_old maps outside the old space")
        o2n.setflags(write=False)
        n2o.setflags(write=False)

    @classmethod
    def identity(cls, n: int) -> "IdMap":
        ids = np.arange(n, dtype=np.int64)
        return cls(ids, ids.copy())

    @property
    def n_old(self) -> int:
        return self.old_to_new.size

    @property
    def n_new(self) -> int:
        return self.new_to_old.size

    @property
    def survivors_old(self) -> np.ndarray:
        return np.where(self.old_to_new >= 0)[0]

    @property
    def deleted_old(self) -> np.ndarray:
        return np.where(self.old_to_new < 0)[0]

    @property
    def inserted_new(self) -> np.ndarray:
        return np.where(self.new_to_old < 0)[0]

    @property
    def num_deleted(self) -> int:
        return int((self.old_to_new < 0).sum())

    @property
    def num_inserted(self) -> int:
        return int((self.new_to_old < 0).sum())

    @property
    def is_identity(self) -> bool:
        return (self.n_old == self.n_new and self.num_deleted == 0
                and self.num_inserted == 0)

    def map_old(self, ids):
        """Map old ids to new ids, erroring on deleted nodes."""
        out = self.old_to_new[np.asarray(ids, dtype=np.int64)]
        if np.any(out < 0):
            raise ValidationError("mapped a deleted node")
        return out

    def compose(self, later: "IdMap") -> "IdMap":
        """Map for applying this step then ``later``."""
        if later.n_old != self.n_new:
            raise ValidationError("compose: intermediate sizes disagree")
        o2n = np.full(self.n_old, -1, dtype=np.int64)
        alive = self.old_to_new >= 0
        o2n[alive] = later.old_to_new[self.old_to_new[alive]]
        n2o = np.full(later.n_new, -1, dtype=np.int64)
        mid_alive = later.new_to_old >= 0
        n2o[mid_alive] = self.new_to_old[later.new_to_old[mid_alive]]
        return IdMap(o2n, n2o)


# -- perturbation batches -----------------------------------------------------


def _edge_array(edges) -> np.ndarray:
    arr = np.asarray(edges, dtype=np.int64)
    if arr.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValidationError("edge list must be shaped (k, 2)")
    return arr


@dataclass(frozen=True)
class InsertedNode:
    """One arriving node: its batch-local pre-id plus incident edges.

    Edge endpoints are old survivor ids or other pre-ids (``n_old + k``).
    """

    pre_id: int
    out_edges: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    in_edges: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))

    def __post_init__(self):
        object.__setattr__(self, "out_edges",
                           np.unique(np.asarray(self.out_edges, np.int64)))
        object.__setattr__(self, "in_edges",
                           np.unique(np.asarray(self.in_edges, np.int64)))


@dataclass(frozen=True)
class PerturbationBatch:
    """One simultaneous change: node arrivals/departures plus link flips.

    ``inserted_edges``/``deleted_edges`` hold pairs among *surviving* old
    ids; edges incident to departing nodes are implied by the departure and
    must not be listed.  Arriving nodes carry their incident edges in their
    :class:`InsertedNode` payloads.
    """

    inserted_nodes: tuple = ()
    deleted_nodes: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    inserted_edges: np.ndarray = field(default_factory=lambda: np.empty((0, 2), np.int64))
    deleted_edges: np.ndarray = field(default_factory=lambda: np.empty((0, 2), np.int64))

    def __post_init__(self):
        object.__setattr__(self, "inserted_nodes", tuple(self.inserted_nodes))
        object.__setattr__(self, "deleted_nodes",
                           np.unique(np.asarray(self.deleted_nodes, np.int64)))
        for name in ("inserted_edges", "deleted_edges"):
            arr = _edge_array(getattr(self, name))
            if arr.size:
                arr = np.unique(arr, axis=0)
            object.__setattr__(self, name, arr)

    @property
    def num_inserted(self) -> int:
        return len(self.inserted_nodes)

    @property
    def num_deleted(self) -> int:
        return int(self.deleted_nodes.size)

    @property
    def is_link_only(self) -> bool:
        return self.num_inserted == 0 and self.num_deleted == 0

    def summary(self) -> str:
        return (f"+{self.num_inserted}/-{self.num_deleted} nodes, "
                f"+{self.inserted_edges.shape[0]}/-{self.deleted_edges.shape[0]}"
                " edges")

    # text round trip ------------------------------------------------------

    def to_text(self) -> str:
        out = ["# perturbation batch v1", "[insert_nodes]"]
        for node in self.inserted_nodes:
            outs = ",".join(str(t) for t in node.out_edges)
            ins = ",".join(str(s) for s in node.in_edges)
            out.append(f"{node.pre_id} out={outs} in={ins}")
        out.append("[delete_nodes]")
        out.extend(str(u) for u in self.deleted_nodes)
        out.append("[insert_edges]")
        out.extend(f"{u} {v}" for u, v in self.inserted_edges)
        out.append("[delete_edges]")
        out.extend(f"{u} {v}" for u, v in self.deleted_edges)
        return "\n".join(out) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "PerturbationBatch":
        section = None
        nodes, dnodes, iedges, dedges = [], [], [], []
        for lineno, line in enumerate(text.splitlines(), 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if body.startswith("["):
                if body not in ("[insert_nodes]", "[delete_nodes]",
                                "[insert_edges]", "[delete_edges]"):
                    raise ParseError(f"unknown section {body!r}", lineno)
                section = body
                continue
            try:
                if section == "[insert_nodes]":
                    pre, rest = body.split(None, 1) if " " in body else (body, "")
                    kv = dict(tok.split("=", 1) for tok in rest.split())
                    outs = [int(t) for t in kv.get("out", "").split(",") if t]
                    ins = [int(t) for t in kv.get("in", "").split(",") if t]
                    nodes.append(InsertedNode(int(pre), np.array(outs, np.int64),
                                              np.array(ins, np.int64)))
                elif section == "[delete_nodes]":
                    dnodes.append(int(body))
                elif section in ("[insert_edges]", "[delete_edges]"):
                    u, v = body.split()
                    (iedges if section == "[insert_edges]" else dedges).append(
                        (int(u), int(v)))
                else:
                    raise ParseError("content before any section header", lineno)
            except (ValueError, KeyError):
                raise ParseError(f"malformed entry {body!r}", lineno) from None
        return cls(tuple(nodes), np.array(dnodes, np.int64),
                   _edge_array(iedges), _edge_array(dedges))

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def read(cls, path) -> "PerturbationBatch":
        with open(path) as fh:
            return cls.from_text(fh.read())


def apply_batch(g: Graph, batch: PerturbationBatch):
    """Apply a perturbation batch functionally: returns ``(new_graph, id_map)``.

    The input graph is untouched.  Raises :class:`ValidationError` for
    inconsistent batches (deleting a missing edge, inserting a duplicate,
    endpoints that do not exist or are departing, bad pre-ids).
    """
    n_old = g.node_count
    deleted = batch.deleted_nodes
    if deleted.size and (deleted[0] < 0 or deleted[-1] >= n_old):
        raise ValidationError("deleted node id out of range")
    a = batch.num_inserted
    pre_ids = np.array([node.pre_id for node in batch.inserted_nodes], np.int64)
    if a and not np.array_equal(pre_ids, n_old + np.arange(a)):
        raise ValidationError(
            f"pre-ids must be {n_old}..{n_old + a - 1} in order")

    keep = np.ones(n_old, dtype=bool)
    keep[deleted] = False
    n_surv = n_old - deleted.size
    n_new = n_surv + a
    if n_new > _MAX_PACKABLE_NODES:
        raise ValidationError("graph too large for packed edge keys")
    old_to_new = np.cumsum(keep, dtype=np.int64) - 1
    old_to_new[~keep] = -1
    new_to_old = np.full(n_new, -1, dtype=np.int64)
    new_to_old[:n_surv] = np.where(keep)[0]
    idmap = IdMap(old_to_new, new_to_old)

    def to_new(ids, what):
        ids = np.asarray(ids, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= n_old + a):
            raise ValidationError(f"{what}: endpoint out of range")
        out = np.empty(ids.size, dtype=np.int64)
        pre = ids >= n_old
        out[pre] = n_surv + (ids[pre] - n_old)
        mapped = old_to_new[ids[~pre]]
        if np.any(mapped < 0):
            raise ValidationError(f"{what}: endpoint is a departing node")
        out[~pre] = mapped
        return out

    # surviving old edges, in new-id space (stays sorted: the survivor map
    # is monotone)
    src = g.edge_sources().astype(np.int64)
    alive_e = keep[src] & keep[g.indices]
    keys = old_to_new[src[alive_e]] * n_new + old_to_new[g.indices[alive_e]]

    de = batch.deleted_edges
    if de.size:
        dk = np.sort(to_new(de[:, 0], "deleted edge") * n_new
                     + to_new(de[:, 1], "deleted edge"))
        if not keys.size:
            raise ValidationError("deleting a missing edge")
        pos = np.searchsorted(keys, dk)
        bad = (pos >= keys.size) | (keys[np.minimum(pos, keys.size - 1)] != dk)
        if np.any(bad):
            raise ValidationError("deleting a missing edge")
        mask = np.ones(keys.size, dtype=bool)
        mask[pos] = False
        keys = keys[mask]

    ie = batch.inserted_edges
    if ie.size:
        ik = np.sort(to_new(ie[:, 0], "inserted edge") * n_new
                     + to_new(ie[:, 1], "inserted edge"))
        pos = np.searchsorted(keys, ik)
        hit = (pos < keys.size)
        hit[hit] = keys[pos[hit]] == ik[hit]
        if np.any(hit):
            raise ValidationError("inserting a duplicate edge")
        keys = np.concatenate([keys, ik])

    payload = []
    for node in batch.inserted_nodes:
        w = n_surv + (node.pre_id - n_old)
        if node.out_edges.size:
            payload.append(w * n_new + to_new(node.out_edges, "arriving node out-edge"))
        if node.in_edges.size:
            payload.append(to_new(node.in_edges, "arriving node in-edge") * n_new + w)
    if payload:
        pk = np.concatenate(payload)
        if np.unique(pk).size != pk.size:
            raise ValidationError("duplicate edge in arriving-node payload")
        keys = np.concatenate([keys, pk])

    keys = np.sort(keys)
    if keys.size > 1 and np.any(np.diff(keys) == 0):
        raise ValidationError("batch produces a duplicate edge")
    src_new = keys // n_new if n_new else keys
    dst_new = keys % n_new if n_new else keys
    counts = np.bincount(src_new, minlength=n_new) if n_new else np.zeros(0, np.int64)
    indptr = np.zeros(n_new + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return Graph(indptr, dst_new.astype(np.int32)), idmap


def changed_rows(old: Graph, new: Graph, id_map: IdMap, source_old: int) -> np.ndarray:
    """Surviving old node ids whose *effective* out-row changed.

    A row is unchanged iff its effective distribution (dangling patch
    included) on the new web is the image of its old one under the id map.
    The two dangling corner cases fall out of that definition: old row
    ``{source}`` turning dangling, and old dangling turning into row
    ``{source}``, are both unchanged.  Sound and complete; sorted ascending.
    """
    if id_map.n_old != old.node_count or id_map.n_new != new.node_count:
        raise ValidationError("id map does not match the two graphs")
    o2n = id_map.old_to_new
    source_new = int(o2n[source_old]) if 0 <= source_old < old.node_count else -1
    if source_new < 0:
        raise ValidationError("source node missing from the new web")
    surv = id_map.survivors_old
    if surv.size == 0:
        return np.empty(0, dtype=np.int64)

    deg_old = old.out_degree[surv]
    nid = o2n[surv]
    deg_new = new.out_degree[nid]

    mapped = o2n[old.indices]
    row_of = old.edge_sources()
    dead_rows = np.bincount(row_of[mapped < 0], minlength=old.node_count)
    has_dead = dead_rows[surv] > 0

    changed = has_dead.copy()

    same = np.where((deg_old == deg_new) & (deg_old > 0) & ~changed)[0]
    if same.size:
        lens = deg_old[same]
        total = int(lens.sum())
        within = np.arange(total) - np.repeat(np.cumsum(lens) - lens, lens)
        a_vals = mapped[np.repeat(old.indptr[surv[same]], lens) + within]
        b_vals = new.indices[np.repeat(new.indptr[nid[same]], lens) + within]
        mism = a_vals != b_vals
        if mism.any():
            rows = np.unique(np.repeat(np.arange(same.size), lens)[mism])
            changed[same[rows]] = True

    mm = (deg_old != deg_new) & ~changed
    changed |= mm
    corner = np.where(mm & (deg_old == 0) & (deg_new == 1))[0]
    if corner.size:
        tgt = new.indices[new.indptr[nid[corner]]]
        changed[corner[tgt == source_new]] = False
    corner = np.where(mm & (deg_old == 1) & (deg_new == 0) & ~has_dead)[0]
    if corner.size:
        tgt = old.indices[old.indptr[surv[corner]]]
        changed[corner[tgt == source_old]] = False

    return surv[changed]
