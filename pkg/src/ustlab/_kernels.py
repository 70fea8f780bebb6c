"""Compiled inner loops for walks and tree samplers.

Every kernel that draws random numbers takes a ``seed`` and reseeds numba's
generator (thread-local) before its first draw, so a call is a pure function
of its arguments.  Draw order: for Wilson, start vertices in the given order
and, within one walk, step order; each step draws a laziness coin (lazy mode
only) and then a uniform for the edge choice.
"""
from __future__ import annotations

import numpy as np
from numba import njit

_OPTS = dict(cache=True, nogil=True)


@njit(**_OPTS)
def _pick_slot(indptr, cumw, v):
    lo = indptr[v]
    hi = indptr[v + 1]
    x = np.random.random() * cumw[hi - 1]
    # binary search for the first slot whose running weight exceeds x
    a = lo
    b = hi - 1
    while a < b:
        mid = (a + b) >> 1
        if cumw[mid] > x:
            b = mid
        else:
            a = mid + 1
    return a


@njit(**_OPTS)
def seed_numba(seed):
    np.random.seed(seed)


@njit(**_OPTS)
def wilson_kernel(indptr, nbr, cumw, slot_edge, in_tree, order, lazy, seed):
    np.random.seed(seed)
    return _wilson(indptr, nbr, cumw, slot_edge, in_tree, order, lazy)


@njit(**_OPTS)
def _wilson(indptr, nbr, cumw, slot_edge, in_tree, order, lazy):
    n = indptr.shape[0] - 1
    parent = np.full(n, -1, np.int64)
    parent_edge = np.full(n, -1, np.int64)
    nxt = np.full(n, -1, np.int64)
    nxt_edge = np.full(n, -1, np.int64)
    tree = in_tree.copy()
    steps = 0
    for i in range(order.shape[0]):
        start = order[i]
        u = start
        while not tree[u]:
            if lazy and np.random.random() < 0.5:
                steps += 1
                continue
            k = _pick_slot(indptr, cumw, u)
            nxt[u] = nbr[k]
            nxt_edge[u] = slot_edge[k]
            u = nbr[k]
            steps += 1
        u = start
        while not tree[u]:
            tree[u] = True
            parent[u] = nxt[u]
            parent_edge[u] = nxt_edge[u]
            u = nxt[u]
    return parent, parent_edge, steps


@njit(**_OPTS)
def aldous_broder_kernel(indptr, nbr, cumw, slot_edge, start, lazy, seed):
    np.random.seed(seed)
    return _aldous_broder(indptr, nbr, cumw, slot_edge, start, lazy)


@njit(**_OPTS)
def _aldous_broder(indptr, nbr, cumw, slot_edge, start, lazy):
    n = indptr.shape[0] - 1
    parent = np.full(n, -1, np.int64)
    parent_edge = np.full(n, -1, np.int64)
    seen = np.zeros(n, np.bool_)
    seen[start] = True
    remaining = n - 1
    u = start
    steps = 0
    while remaining > 0:
        steps += 1
        if lazy and np.random.random() < 0.5:
            continue
        k = _pick_slot(indptr, cumw, u)
        v = nbr[k]
        if not seen[v]:
            seen[v] = True
            parent[v] = u
            parent_edge[v] = slot_edge[k]
            remaining -= 1
        u = v
    return parent, parent_edge, steps


@njit(**_OPTS)
def walk_fixed_kernel(indptr, nbr, cumw, slot_edge, start, length, lazy, seed):
    np.random.seed(seed)
    verts = np.empty(length + 1, np.int64)
    edges = np.full(length, -1, np.int64)
    u = start
    verts[0] = u
    for t in range(length):
        if not (lazy and np.random.random() < 0.5):
            k = _pick_slot(indptr, cumw, u)
            edges[t] = slot_edge[k]
            u = nbr[k]
        verts[t + 1] = u
    return verts, edges


@njit(**_OPTS)
def walk_until_kernel(indptr, nbr, cumw, slot_edge, start, target, lazy, max_steps, seed):
    """Walk from ``start`` until ``target[X_t]``; returns the walk up to and
    including the hitting step (a walk of length 0 when ``start`` is a target).
    ``max_steps < 0`` means unbounded."""
    np.random.seed(seed)
    cap = 64
    verts = np.empty(cap, np.int64)
    edges = np.empty(cap, np.int64)
    u = start
    verts[0] = u
    t = 0
    while not target[u]:
        if max_steps >= 0 and t >= max_steps:
            break
        if t + 1 >= cap:
            cap *= 2
            nv = np.empty(cap, np.int64)
            ne = np.empty(cap, np.int64)
            nv[: t + 1] = verts[: t + 1]
            ne[:t] = edges[:t]
            verts = nv
            edges = ne
        if lazy and np.random.random() < 0.5:
            edges[t] = -1
        else:
            k = _pick_slot(indptr, cumw, u)
            edges[t] = slot_edge[k]
            u = nbr[k]
        t += 1
        verts[t] = u
    return verts[: t + 1].copy(), edges[:t].copy()


@njit(**_OPTS)
def lerw_kernel(indptr, nbr, cumw, slot_edge, start, target, lazy, seed):
    """Loop-erased walk from ``start`` to the target set, via last-exit pointers."""
    np.random.seed(seed)
    n = indptr.shape[0] - 1
    nxt = np.full(n, -1, np.int64)
    nxt_edge = np.full(n, -1, np.int64)
    u = start
    steps = 0
    while not target[u]:
        steps += 1
        if lazy and np.random.random() < 0.5:
            continue
        k = _pick_slot(indptr, cumw, u)
        nxt[u] = nbr[k]
        nxt_edge[u] = slot_edge[k]
        u = nbr[k]
    count = 1
    u = start
    while not target[u]:
        u = nxt[u]
        count += 1
    path = np.empty(count, np.int64)
    pedges = np.empty(count - 1, np.int64)
    u = start
    i = 0
    path[0] = u
    while not target[u]:
        pedges[i] = nxt_edge[u]
        u = nxt[u]
        i += 1
        path[i] = u
    return path, pedges, steps


@njit(**_OPTS)
def many_walks_kernel(indptr, nbr, cumw, starts, length, lazy, seed):
    """One lazy walk of the given length from every start; rows are walks."""
    np.random.seed(seed)
    k = starts.shape[0]
    out = np.empty((k, length + 1), np.int64)
    for i in range(k):
        u = starts[i]
        out[i, 0] = u
        for t in range(length):
            if not (lazy and np.random.random() < 0.5):
                u = nbr[_pick_slot(indptr, cumw, u)]
            out[i, t + 1] = u
    return out


@njit(**_OPTS)
def _children_csr(parent):
    n = parent.shape[0]
    counts = np.zeros(n + 1, np.int64)
    for v in range(n):
        if parent[v] >= 0:
            counts[parent[v] + 1] += 1
    for i in range(n):
        counts[i + 1] += counts[i]
    fill = counts[:-1].copy()
    kids = np.empty(max(counts[n], 1), np.int64)
    for v in range(n):
        p = parent[v]
        if p >= 0:
            kids[fill[p]] = v
            fill[p] += 1
    return counts, kids


@njit(**_OPTS)
def depth_kernel(parent):
    """Distance from every vertex to its root along parent pointers."""
    n = parent.shape[0]
    depth = np.full(n, -1, np.int64)
    stack = np.empty(n, np.int64)
    for v in range(n):
        if depth[v] >= 0:
            continue
        top = 0
        u = v
        while u >= 0 and depth[u] < 0:
            stack[top] = u
            top += 1
            u = parent[u]
        d = -1 if u < 0 else depth[u]
        while top > 0:
            top -= 1
            d += 1
            depth[stack[top]] = d
    return depth


@njit(**_OPTS)
def _farthest(indptr_c, kids, parent, source, n):
    dist = np.full(n, -1, np.int64)
    queue = np.empty(n, np.int64)
    queue[0] = source
    dist[source] = 0
    head = 0
    tail = 1
    far = source
    while head < tail:
        x = queue[head]
        head += 1
        if dist[x] > dist[far]:
            far = x
        p = parent[x]
        if p >= 0 and dist[p] < 0:
            dist[p] = dist[x] + 1
            queue[tail] = p
            tail += 1
        for j in range(indptr_c[x], indptr_c[x + 1]):
            c = kids[j]
            if dist[c] < 0:
                dist[c] = dist[x] + 1
                queue[tail] = c
                tail += 1
    return far, dist[far], tail


@njit(**_OPTS)
def tree_diameter_kernel(parent):
    """Double-sweep diameter of the tree given by parent pointers.

    Returns ``(diameter, reached)`` where ``reached`` counts the vertices of
    the component of vertex 0; a caller compares it with ``n``.
    """
    n = parent.shape[0]
    indptr_c, kids = _children_csr(parent)
    a, _, reached = _farthest(indptr_c, kids, parent, 0, n)
    _, diam, _ = _farthest(indptr_c, kids, parent, a, n)
    return diam, reached


@njit(**_OPTS)
def subtree_heights_kernel(parent):
    """Height of the past (in-tree) of every vertex: longest chain of
    descendants below it."""
    n = parent.shape[0]
    depth = depth_kernel(parent)
    order = np.argsort(-depth)
    height = np.zeros(n, np.int64)
    for i in range(n):
        v = order[i]
        p = parent[v]
        if p >= 0 and height[v] + 1 > height[p]:
            height[p] = height[v] + 1
    return height


@njit(**_OPTS)
def trajectories_kernel(indptr, nbr, cumw, slot_edge, starts, in_w, seed):
    """One non-lazy W-trajectory from every start: step once, then walk
    until the walk is back in W.  Returns flat vertex and edge arrays and
    vertex offsets; trajectory ``i`` has edges ``eoff = voff - i``."""
    np.random.seed(seed)
    k = starts.shape[0]
    voff = np.zeros(k + 1, np.int64)
    cap = max(16, 4 * k)
    verts = np.empty(cap, np.int64)
    edges = np.empty(cap, np.int64)
    nv = 0
    ne = 0
    for i in range(k):
        u = starts[i]
        while True:
            if nv + 2 > cap:
                cap *= 2
                a = np.empty(cap, np.int64)
                b = np.empty(cap, np.int64)
                a[:nv] = verts[:nv]
                b[:ne] = edges[:ne]
                verts = a
                edges = b
            verts[nv] = u
            nv += 1
            if in_w[u] and nv - 1 > voff[i]:
                break
            s = _pick_slot(indptr, cumw, u)
            edges[ne] = slot_edge[s]
            ne += 1
            u = nbr[s]
        voff[i + 1] = nv
    return verts[:nv].copy(), edges[:ne].copy(), voff


@njit(**_OPTS)
def first_visits_kernel(verts, edges, voff, first, in_w, n, stop_when_covered):
    """Scan trajectories from index ``first`` on.

    For every vertex, the index of the first trajectory with an edge leaving
    it (-1 if none), and for vertices outside W the tail and id of the first
    edge entering it in that trajectory.  With ``stop_when_covered`` the scan
    ends once every vertex outside W has been reached.
    """
    sig = np.full(n, -1, np.int64)
    parent = np.full(n, -1, np.int64)
    pedge = np.full(n, -1, np.int64)
    missing = 0
    for v in range(n):
        if not in_w[v]:
            missing += 1
    k = voff.shape[0] - 1
    for i in range(first, k):
        if stop_when_covered and missing == 0:
            break
        lo = voff[i]
        hi = voff[i + 1]
        w0 = verts[lo]
        if sig[w0] < 0:
            sig[w0] = i
        eo = lo - i
        for j in range(lo + 1, hi - 1):
            v = verts[j]
            if sig[v] < 0:
                sig[v] = i
                parent[v] = verts[j - 1]
                pedge[v] = edges[eo + (j - lo) - 1]
                missing -= 1
    return sig, parent, pedge, missing


@njit(**_OPTS)
def root_of_kernel(parent):
    n = parent.shape[0]
    root = np.full(n, -1, np.int64)
    for v in range(n):
        if root[v] >= 0:
            continue
        u = v
        while parent[u] >= 0 and root[u] < 0:
            u = parent[u]
        r = u if root[u] < 0 else root[u]
        u = v
        while root[u] < 0:
            root[u] = r
            if parent[u] < 0:
                break
            u = parent[u]
    return root


@njit(**_OPTS)
def wilson_batch_kernel(indptr, nbr, cumw, slot_edge, in_tree, order, lazy, reps, seed):
    np.random.seed(seed)
    n = indptr.shape[0] - 1
    parents = np.empty((reps, n), np.int64)
    pedges = np.empty((reps, n), np.int64)
    for r in range(reps):
        p, e, _ = _wilson(indptr, nbr, cumw, slot_edge, in_tree, order, lazy)
        parents[r] = p
        pedges[r] = e
    return parents, pedges


@njit(**_OPTS)
def aldous_broder_batch_kernel(indptr, nbr, cumw, slot_edge, start, lazy, reps, seed):
    np.random.seed(seed)
    n = indptr.shape[0] - 1
    parents = np.empty((reps, n), np.int64)
    pedges = np.empty((reps, n), np.int64)
    for r in range(reps):
        p, e, _ = _aldous_broder(indptr, nbr, cumw, slot_edge, start, lazy)
        parents[r] = p
        pedges[r] = e
    return parents, pedges


@njit(**_OPTS)
def ab_stream_kernel(indptr, nbr, cumw, slot_edge, w_list, w_cum, in_w, reps, seed):
    """AB_W(t) read off the interlacement process run forward from ``t``.

    Gaps between trajectories are Exp(1); only their order matters for the
    forest, so the times are returned as the per-vertex sigma minus ``t``.
    """
    np.random.seed(seed)
    n = indptr.shape[0] - 1
    parents = np.full((reps, n), -1, np.int64)
    pedges = np.full((reps, n), -1, np.int64)
    sig = np.full((reps, n), np.inf)
    outside = 0
    for v in range(n):
        if not in_w[v]:
            outside += 1
    total = w_cum[w_cum.shape[0] - 1]
    for r in range(reps):
        missing = outside
        now = 0.0
        seen = np.zeros(n, np.bool_)
        while missing > 0:
            now += np.random.exponential(1.0)
            x = np.random.random() * total
            a = 0
            b = w_cum.shape[0] - 1
            while a < b:
                mid = (a + b) >> 1
                if w_cum[mid] > x:
                    b = mid
                else:
                    a = mid + 1
            u = w_list[a]
            if not seen[u]:
                seen[u] = True
                sig[r, u] = now
            while True:
                k = _pick_slot(indptr, cumw, u)
                v = nbr[k]
                if in_w[v]:
                    break
                if not seen[v]:
                    seen[v] = True
                    sig[r, v] = now
                    parents[r, v] = u
                    pedges[r, v] = slot_edge[k]
                    missing -= 1
                u = v
    return parents, pedges, sig
