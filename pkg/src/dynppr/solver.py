"""Forward-push (Gauss-Southwell) personalized PageRank solver.

The solved system is ``pi = alpha * pi @ P + (1 - alpha) * e_source`` with
row-stochastic P: each node spreads 1/out_degree to its targets and a
dangling node sends everything back to the source (or, in ``uniform``
dangling mode, spreads 1/n everywhere -- that mode exists so that every
egocentric run can share one transition matrix, which is what makes the
global-PageRank averaging identity hold exactly).

The solver keeps the invariant

    r = (1 - alpha) * e_source - pi @ (I - alpha * P)

throughout: one push settles r[i] into pi[i] and scatters alpha*r[i]/d over
the out-row.  When every |r| <= epsilon the l1 error of pi is at most
||r||_1 / (1 - alpha).

Three engines sit behind :func:`gauss_southwell`: a jitted FIFO kernel (the
default), a pure-python FIFO twin used when an observer needs to watch the
run (it replays the kernel push-for-push), and a max-residual engine with a
lazy heap (ties broken toward the lowest node id).
"""

from __future__ import annotations

import heapq
import json
import time
from collections import deque
from dataclasses import dataclass, asdict

import numpy as np

from . import _kernels
from .errors import (BudgetExceededError, OracleSizeError, ParseError,
                     ValidationError)
from .graph import Graph

QUEUE = "queue"
MAX_RESIDUAL = "max_residual"

DANGLING_SOURCE = "source"
DANGLING_UNIFORM = "uniform"


@dataclass(frozen=True)
class SolverConfig:
    alpha: float = 0.85
    epsilon: float = 1e-8
    max_pushes: int | None = None
    selection: str = QUEUE
    dangling: str = DANGLING_SOURCE

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha must be in (0, 1), got {self.alpha}")
        if not self.epsilon > 0.0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")
        if self.max_pushes is not None and self.max_pushes <= 0:
            raise ValidationError("max_pushes must be positive or None")
        if self.selection not in (QUEUE, MAX_RESIDUAL):
            raise ValidationError(f"unknown selection policy {self.selection!r}")
        if self.dangling not in (DANGLING_SOURCE, DANGLING_UNIFORM):
            raise ValidationError(f"unknown dangling mode {self.dangling!r}")


@dataclass
class SolverStats:
    pushes: int
    touched_nodes: int
    wall_time_s: float
    initial_residual_l1: float
    final_residual_l1: float

    def as_dict(self):
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.as_dict())


def _validate_run(g: Graph, source: int, pi0, r0):
    n = g.node_count
    if n == 0:
        raise ValidationError("cannot solve on an empty graph")
    if not 0 <= source < n:
        raise ValidationError(f"source {source} out of range for n={n}")
    pi = np.array(pi0, dtype=np.float64, copy=True).ravel()
    r = np.array(r0, dtype=np.float64, copy=True).ravel()
    if pi.size != n or r.size != n:
        raise ValidationError("pi0/r0 length does not match the graph")
    return pi, r


def gauss_southwell(g: Graph, source: int, pi0, r0, config: SolverConfig,
                    observer=None, observe_every: int = 100):
    """Push from (pi0, r0) until every |r| <= epsilon.

    Returns ``(pi, r, stats)``; inputs are not mutated.  ``observer``, when
    given, is called as ``observer(pushes, pi, r)`` after every
    ``observe_every``-th push and once more at termination (this routes the
    run through the python twin engine, which matches the kernel
    push-for-push).  Raises :class:`BudgetExceededError` carrying the
    partial state when ``max_pushes`` runs out.
    """
    pi, r = _validate_run(g, source, pi0, r0)
    budget = _kernels.NO_BUDGET if config.max_pushes is None else config.max_pushes
    uniform = config.dangling == DANGLING_UNIFORM
    initial_l1 = float(np.abs(r).sum())
    t0 = time.perf_counter()
    if config.selection == MAX_RESIDUAL:
        pushes, touched, done = _push_maxres_py(
            g, pi, r, config.epsilon, config.alpha, source, budget, uniform,
            observer, observe_every)
    elif observer is not None:
        pushes, touched, done = _push_fifo_py(
            g, pi, r, config.epsilon, config.alpha, source, budget, uniform,
            observer, observe_every)
    else:
        pushes, touched, done = _kernels.push_csr(
            g.indptr, g.indices, pi, r, config.epsilon, config.alpha,
            source, budget, uniform)
    wall = time.perf_counter() - t0
    stats = SolverStats(int(pushes), int(touched), wall, initial_l1,
                        float(np.abs(r).sum()))
    if not done:
        raise BudgetExceededError(
            f"push budget {config.max_pushes} exhausted "
            f"(residual l1 still {stats.final_residual_l1:.3e})",
            pi=pi, r=r, stats=stats)
    return pi, r, stats


def ppr_from_scratch(g: Graph, source: int, config: SolverConfig,
                     observer=None, observe_every: int = 100):
    """Solve from the cold start pi = 0, r = (1 - alpha) * e_source."""
    n = g.node_count
    if n == 0:
        raise ValidationError("cannot solve on an empty graph")
    pi0 = np.zeros(n)
    r0 = np.zeros(n)
    if not 0 <= source < n:
        raise ValidationError(f"source {source} out of range for n={n}")
    r0[source] = 1.0 - config.alpha
    return gauss_southwell(g, source, pi0, r0, config,
                           observer=observer, observe_every=observe_every)


# -- python engines ----------------------------------------------------------


def _push_fifo_py(g, pi, r, eps, alpha, source, budget, uniform,
                  observer, every):
    n = g.node_count
    indptr, indices = g.indptr, g.indices
    queue = deque()
    inq = np.zeros(n, dtype=bool)
    pushed = np.zeros(n, dtype=bool)
    for i in range(n):
        if r[i] > eps or r[i] < -eps:
            queue.append(i)
            inq[i] = True
    pushes = 0
    done = True

    def bump(j, w):
        r[j] += w
        if not inq[j] and (r[j] > eps or r[j] < -eps):
            queue.append(j)
            inq[j] = True

    while queue:
        if pushes >= budget:
            done = False
            break
        i = queue.popleft()
        inq[i] = False
        ri = r[i]
        if -eps <= ri <= eps:
            continue
        pushes += 1
        pushed[i] = True
        pi[i] += ri
        r[i] = 0.0
        lo, hi = indptr[i], indptr[i + 1]
        if hi > lo:
            w = alpha * ri / (hi - lo)
            for e in range(lo, hi):
                bump(int(indices[e]), w)
        elif uniform:
            w = alpha * ri / n
            for j in range(n):
                bump(j, w)
        else:
            bump(source, alpha * ri)
        if observer is not None and pushes % every == 0:
            observer(pushes, pi, r)
    if observer is not None:
        observer(pushes, pi, r)
    return pushes, int(pushed.sum()), done


def _push_maxres_py(g, pi, r, eps, alpha, source, budget, uniform,
                    observer, every):
    """Greedy largest-|r| selection via a lazy heap, lowest id on ties."""
    n = g.node_count
    indptr, indices = g.indptr, g.indices
    heap = [(-abs(float(r[i])), i) for i in range(n) if abs(r[i]) > eps]
    heapq.heapify(heap)
    pushed = np.zeros(n, dtype=bool)
    pushes = 0
    done = True

    def bump(j, w):
        r[j] += w
        if abs(r[j]) > eps:
            heapq.heappush(heap, (-abs(float(r[j])), j))

    while heap:
        if pushes >= budget:
            done = False
            break
        negv, i = heapq.heappop(heap)
        cur = abs(float(r[i]))
        if cur <= eps:
            continue
        if -negv != cur:  # stale entry: re-rank at the current magnitude
            heapq.heappush(heap, (-cur, i))
            continue
        pushes += 1
        pushed[i] = True
        ri = r[i]
        pi[i] += ri
        r[i] = 0.0
        lo, hi = indptr[i], indptr[i + 1]
        if hi > lo:
            w = alpha * ri / (hi - lo)
            for e in range(lo, hi):
                bump(int(indices[e]), w)
        elif uniform:
            w = alpha * ri / n
            for j in range(n):
                bump(j, w)
        else:
            bump(source, alpha * ri)
        if observer is not None and pushes % every == 0:
            observer(pushes, pi, r)
    if observer is not None:
        observer(pushes, pi, r)
    return pushes, int(pushed.sum()), done


# -- oracles and identities ---------------------------------------------------


def residual_of(g: Graph, source: int, pi, alpha: float,
                dangling: str = DANGLING_SOURCE) -> np.ndarray:
    """Exact residual of an approximation: (1-alpha)e_s - pi (I - alpha P)."""
    n = g.node_count
    pi = np.asarray(pi, dtype=np.float64)
    if pi.size != n:
        raise ValidationError("pi length does not match the graph")
    P = g.transition_matrix()
    prop = P.T.dot(pi)
    mass = float(pi[g.out_degree == 0].sum())
    r = alpha * prop - pi
    if dangling == DANGLING_UNIFORM:
        r += alpha * mass / n
    else:
        r[source] += alpha * mass
    r[source] += 1.0 - alpha
    return r


def oracle_dense(g: Graph, source: int, alpha: float,
                 dangling: str = DANGLING_SOURCE, cap: int = 2000) -> np.ndarray:
    """Direct dense solve of the PPR linear system (small graphs only)."""
    n = g.node_count
    if n == 0:
        raise ValidationError("empty graph")
    if n > cap:
        raise OracleSizeError(
            f"dense oracle refused: n={n} exceeds cap={cap}")
    deg = g.out_degree
    P = np.zeros((n, n))
    nz = deg > 0
    rows = np.repeat(np.arange(n)[nz], deg[nz])
    P[rows, g.indices] = np.repeat(1.0 / deg[nz], deg[nz])
    if dangling == DANGLING_UNIFORM:
        P[~nz, :] = 1.0 / n
    else:
        P[~nz, source] = 1.0
    b = np.zeros(n)
    b[source] = 1.0 - alpha
    A = np.eye(n) - alpha * P.T
    x = np.linalg.solve(A, b)
    # One step of iterative refinement with the defect accumulated in extended
    # precision.  The plain LU answer is good to ~1e-15 relative; the refined
    # answer is correctly rounded for all practical purposes and, usefully,
    # independent of which LAPACK build produced the first solve.
    A_ld = np.eye(n, dtype=np.longdouble) - np.longdouble(alpha) * P.T.astype(np.longdouble)
    defect = b.astype(np.longdouble) - A_ld @ x.astype(np.longdouble)
    x = (x.astype(np.longdouble)
         + np.linalg.solve(A, defect.astype(np.float64)).astype(np.longdouble))
    return x.astype(np.float64)


def power_iteration(g: Graph, source: int, alpha: float, tol: float = 1e-12,
                    uniform: bool = False, max_iters: int = 200_000) -> np.ndarray:
    """Fixed-point iteration on pi = alpha pi P + (1-alpha) mu.

    ``uniform=True`` switches *both* the restart vector mu and the dangling
    patch to 1/n (global PageRank); the default is egocentric (mu = e_s,
    dangling mass returns to the source).
    """
    n = g.node_count
    if n == 0:
        raise ValidationError("empty graph")
    mu = np.full(n, 1.0 / n) if uniform else np.zeros(n)
    if not uniform:
        mu[source] = 1.0
    P = g.transition_matrix()
    dang = g.out_degree == 0
    pi = mu.copy()
    for _ in range(max_iters):
        prop = P.T.dot(pi)
        mass = float(pi[dang].sum())
        if uniform:
            prop += mass / n
        else:
            prop[source] += mass
        new = alpha * prop + (1.0 - alpha) * mu
        delta = float(np.abs(new - pi).sum())
        pi = new
        if delta <= tol:
            return pi
    raise BudgetExceededError("power iteration did not converge", pi=pi)


def l1_error_bound(r, alpha: float) -> float:
    """Worst-case l1 distance to the exact solution: ||r||_1 / (1 - alpha)."""
    return float(np.abs(np.asarray(r)).sum() / (1.0 - alpha))


# -- vector text round trip ----------------------------------------------------


def save_vector(path, vec) -> None:
    """Write non-zero entries as 'node_id score' lines, sorted by id."""
    vec = np.asarray(vec, dtype=np.float64)
    with open(path, "w") as fh:
        for i in np.nonzero(vec)[0]:
            fh.write("%d %.17g\n" % (i, vec[i]))


def load_vector(path, n: int) -> np.ndarray:
    out = np.zeros(n)
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            if len(parts) != 2:
                raise ParseError(f"expected 'node_id score', got {body!r}", lineno)
            try:
                i = int(parts[0])
                val = float(parts[1])
            except ValueError:
                raise ParseError(f"malformed entry {body!r}", lineno) from None
            if not 0 <= i < n:
                raise ParseError(f"node id {i} out of range", lineno)
            out[i] = val
    return out
