"""Jitted push kernels.

Two adjacency layouts: plain CSR for the static solver, and a singly linked
pool (head/nxt/dst) for the per-edge replay baseline, which has to mutate
one edge at a time between solves.  Chains in the pool are kept sorted by
target so their iteration order matches CSR row order exactly; that makes a
single-edge replay bit-compatible with the batch warm-start path.

All kernels treat the residual as signed and use a FIFO ring with an
in-queue flag (each node queued at most once).  A push is one loop
execution: settle r[i] into pi[i], then scatter alpha*r[i]/d to the
out-row, or to the source (dangling) / everywhere (uniform mode).
"""

import numpy as np
from numba import njit

NO_BUDGET = 2**62


@njit(cache=True)
def push_csr(indptr, indices, pi, r, eps, alpha, source, budget,
             uniform_dangling):
    """Run pushes until every |r| <= eps. Returns (pushes, touched, done)."""
    n = indptr.shape[0] - 1
    cap = n + 1
    queue = np.empty(cap, np.int64)
    inq = np.zeros(n, np.bool_)
    pushed = np.zeros(n, np.bool_)
    qh = 0
    qt = 0
    for i in range(n):
        if r[i] > eps or r[i] < -eps:
            queue[qt] = i
            qt = (qt + 1) % cap
            inq[i] = True
    pushes = 0
    done = True
    while qh != qt:
        if pushes >= budget:
            done = False
            break
        i = queue[qh]
        qh = (qh + 1) % cap
        inq[i] = False
        ri = r[i]
        if ri <= eps and ri >= -eps:
            continue
        pushes += 1
        pushed[i] = True
        pi[i] += ri
        r[i] = 0.0
        d = indptr[i + 1] - indptr[i]
        if d > 0:
            w = alpha * ri / d
            for e in range(indptr[i], indptr[i + 1]):
                j = indices[e]
                r[j] += w
                if not inq[j] and (r[j] > eps or r[j] < -eps):
                    queue[qt] = j
                    qt = (qt + 1) % cap
                    inq[j] = True
        elif uniform_dangling:
            w = alpha * ri / n
            for j in range(n):
                r[j] += w
                if not inq[j] and (r[j] > eps or r[j] < -eps):
                    queue[qt] = j
                    qt = (qt + 1) % cap
                    inq[j] = True
        else:
            r[source] += alpha * ri
            if not inq[source] and (r[source] > eps or r[source] < -eps):
                queue[qt] = source
                qt = (qt + 1) % cap
                inq[source] = True
    touched = 0
    for i in range(n):
        if pushed[i]:
            touched += 1
    return pushes, touched, done


@njit(cache=True)
def _drain_ll(head, nxt, dst, out_deg, pi, r, eps, alpha, source,
              queue, inq, pushed, qh, qt, budget):
    """Push over the linked-pool adjacency until the queue empties."""
    cap = head.shape[0] + 1
    pushes = 0
    while qh != qt:
        if pushes >= budget:
            return qh, qt, pushes, False
        i = queue[qh]
        qh = (qh + 1) % cap
        inq[i] = False
        ri = r[i]
        if ri <= eps and ri >= -eps:
            continue
        pushes += 1
        pushed[i] = True
        pi[i] += ri
        r[i] = 0.0
        d = out_deg[i]
        if d > 0:
            w = alpha * ri / d
            e = head[i]
            while e != -1:
                j = dst[e]
                r[j] += w
                if not inq[j] and (r[j] > eps or r[j] < -eps):
                    queue[qt] = j
                    qt = (qt + 1) % cap
                    inq[j] = True
                e = nxt[e]
        else:
            r[source] += alpha * ri
            if not inq[source] and (r[source] > eps or r[source] < -eps):
                queue[qt] = source
                qt = (qt + 1) % cap
                inq[source] = True
    return qh, qt, pushes, True


# op kinds for per_edge_run
OP_DEL_EDGE = 0
OP_ADD_EDGE = 1
OP_DROP_NODE = 2
OP_ADD_NODE = 3


@njit(cache=True)
def per_edge_run(head, nxt, dst, out_deg, cursor, pi, r,
                 op_kind, op_u, op_v, eps, alpha, source, budget):
    """Replay single-edge mutations, re-solving after each.

    For an edge op on row u: subtract the old effective row's contribution
    alpha*pi[u]*row, splice the edge in/out of the sorted chain, add the new
    effective row back, then push every touched node (ascending) whose
    residual crosses eps.  Dropping an isolated node u folds its settled
    mass back into the residual at the source (r[source] -= alpha*pi[u]).

    Returns (pushes, touched, status, cursor); status 1 = ok, 0 = budget
    exhausted, -1 = schedule referenced a missing edge.
    """
    n = head.shape[0]
    cap = n + 1
    queue = np.empty(cap, np.int64)
    inq = np.zeros(n, np.bool_)
    pushed = np.zeros(n, np.bool_)
    touch = np.empty(2 * n + 4, np.int64)
    qh = 0
    qt = 0
    total = 0
    status = 1
    for t in range(op_kind.shape[0]):
        kind = op_kind[t]
        u = op_u[t]
        ntouch = 0
        if kind <= OP_ADD_EDGE:
            v = op_v[t]
            x = pi[u]
            d_old = out_deg[u]
            if x != 0.0:
                if d_old > 0:
                    w = alpha * x / d_old
                    e = head[u]
                    while e != -1:
                        r[dst[e]] -= w
                        touch[ntouch] = dst[e]
                        ntouch += 1
                        e = nxt[e]
                else:
                    r[source] -= alpha * x
                    touch[ntouch] = source
                    ntouch += 1
            if kind == OP_DEL_EDGE:
                e = head[u]
                prev = -1
                while e != -1 and dst[e] != v:
                    prev = e
                    e = nxt[e]
                if e == -1:
                    return total, 0, -1, cursor
                if prev == -1:
                    head[u] = nxt[e]
                else:
                    nxt[prev] = nxt[e]
                out_deg[u] = d_old - 1
            else:
                slot = cursor
                cursor += 1
                dst[slot] = np.int32(v)
                e = head[u]
                prev = -1
                while e != -1 and dst[e] < v:
                    prev = e
                    e = nxt[e]
                nxt[slot] = e
                if prev == -1:
                    head[u] = slot
                else:
                    nxt[prev] = slot
                out_deg[u] = d_old + 1
            d_new = out_deg[u]
            if x != 0.0:
                if d_new > 0:
                    w = alpha * x / d_new
                    e = head[u]
                    while e != -1:
                        r[dst[e]] += w
                        touch[ntouch] = dst[e]
                        ntouch += 1
                        e = nxt[e]
                else:
                    r[source] += alpha * x
                    touch[ntouch] = source
                    ntouch += 1
        elif kind == OP_DROP_NODE:
            if pi[u] != 0.0:
                r[source] -= alpha * pi[u]
                pi[u] = 0.0
                touch[ntouch] = source
                ntouch += 1
            r[u] = 0.0
        # OP_ADD_NODE: a fresh node arrives with no mass and no edges yet
        if ntouch > 0:
            tt = np.sort(touch[:ntouch])
            last = np.int64(-1)
            for k in range(ntouch):
                j = tt[k]
                if j == last:
                    continue
                last = j
                if not inq[j] and (r[j] > eps or r[j] < -eps):
                    queue[qt] = j
                    qt = (qt + 1) % cap
                    inq[j] = True
            qh, qt, done, ok = _drain_ll(head, nxt, dst, out_deg, pi, r,
                                         eps, alpha, source, queue, inq,
                                         pushed, qh, qt, budget - total)
            total += done
            if not ok:
                status = 0
                break
    touched = 0
    for i in range(n):
        if pushed[i]:
            touched += 1
    return total, touched, status, cursor


def warmup():
    """Trigger JIT compilation on tiny inputs so timed runs stay clean."""
    indptr = np.array([0, 1, 1], np.int64)
    indices = np.array([1], np.int32)
    for uniform in (False, True):
        pi = np.zeros(2)
        r = np.array([0.15, 0.0])
        push_csr(indptr, indices, pi, r, 1e-4, 0.85, 0, NO_BUDGET, uniform)
    head = np.array([0, -1], np.int64)
    nxt = np.array([-1, -1, -1], np.int64)
    dst = np.array([1, 0, 0], np.int32)
    out_deg = np.array([1, 0], np.int64)
    pi = np.zeros(2)
    r = np.array([0.15, 0.0])
    ops = (np.array([OP_ADD_EDGE], np.int64), np.array([1], np.int64),
           np.array([0], np.int64))
    per_edge_run(head, nxt, dst, out_deg, 1, pi, r, ops[0], ops[1], ops[2],
                 1e-4, 0.85, 0, NO_BUDGET)
