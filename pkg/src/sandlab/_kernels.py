"""Jitted hot loops over the CSR graph layout.

Everything here takes plain arrays (indptr, targets, n) so the same
kernels serve arbitrary multigraphs and wired boxes alike.  The sink is
vertex index n.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ._rng import next_below, next_u64  # noqa: F401 (re-exported for kernels)


@njit(cache=True)
def stabilize_csr(indptr, targets, n, eta):
    """Exhaustive legal toppling; returns (stable config, odometer).

    Queue-driven with multi-topplings (a vertex holding k*deg grains
    topples k times at once); the abelian property makes the schedule
    irrelevant to the result.
    """
    eta = eta.copy()
    odo = np.zeros(n, dtype=np.int64)
    deg = indptr[1:] - indptr[:-1]
    queue = np.empty(n, dtype=np.int64)
    in_queue = np.zeros(n, dtype=np.bool_)
    head = 0
    tail = 0
    for x in range(n):
        if eta[x] >= deg[x]:
            queue[tail] = x
            tail = (tail + 1) % n if n > 1 else 0
            if n == 1:
                tail = 0
            in_queue[x] = True
    count = 0
    for x in range(n):
        if in_queue[x]:
            count += 1
    while count > 0:
        x = queue[head]
        head = (head + 1) % n
        in_queue[x] = False
        count -= 1
        k = eta[x] // deg[x]
        if k <= 0:
            continue
        eta[x] -= k * deg[x]
        odo[x] += k
        for t in range(indptr[x], indptr[x + 1]):
            y = targets[t]
            if y < n:
                eta[y] += k
                if eta[y] >= deg[y] and not in_queue[y]:
                    queue[tail] = y
                    tail = (tail + 1) % n
                    in_queue[y] = True
                    count += 1
        if eta[x] >= deg[x] and not in_queue[x]:
            queue[tail] = x
            tail = (tail + 1) % n
            in_queue[x] = True
            count += 1
    return eta, odo


@njit(cache=True)
def stabilize_random_order(indptr, targets, n, eta, rng_state):
    """Single legal topplings chosen uniformly among unstable vertices.

    Slow path used to certify schedule-independence.
    """
    eta = eta.copy()
    odo = np.zeros(n, dtype=np.int64)
    deg = indptr[1:] - indptr[:-1]
    unstable = np.empty(n, dtype=np.int64)
    pos = np.full(n, -1, dtype=np.int64)
    m = 0
    for x in range(n):
        if eta[x] >= deg[x]:
            unstable[m] = x
            pos[x] = m
            m += 1
    while m > 0:
        j = next_below(rng_state, m)
        x = unstable[j]
        eta[x] -= deg[x]
        odo[x] += 1
        if eta[x] < deg[x]:
            last = unstable[m - 1]
            unstable[j] = last
            pos[last] = j
            pos[x] = -1
            m -= 1
        for t in range(indptr[x], indptr[x + 1]):
            y = targets[t]
            if y < n and pos[y] < 0:
                eta[y] += 1
                if eta[y] >= deg[y]:
                    unstable[m] = y
                    pos[y] = m
                    m += 1
            elif y < n:
                eta[y] += 1
    return eta, odo


@njit(cache=True)
def wave_decompose_csr(indptr, targets, n, eta, x0):
    """Wave decomposition of the avalanche started by adding at x0.

    Returns (final config, odometer, wave_id) where wave_id[k, v] = 1 if
    v toppled in wave k; the array is truncated to the realized waves.
    """
    eta = eta.copy()
    deg = indptr[1:] - indptr[:-1]
    eta[x0] += 1
    odo = np.zeros(n, dtype=np.int64)
    waves = []
    while eta[x0] >= deg[x0]:
        toppled = np.zeros(n, dtype=np.uint8)
        stack = np.empty(n, dtype=np.int64)
        top = 0
        # release one toppling at x0, then relax everything else fully
        eta[x0] -= deg[x0]
        odo[x0] += 1
        toppled[x0] = 1
        for t in range(indptr[x0], indptr[x0 + 1]):
            y = targets[t]
            if y < n:
                eta[y] += 1
                if eta[y] >= deg[y] and y != x0 and not toppled[y]:
                    stack[top] = y
                    top += 1
        while top > 0:
            top -= 1
            x = stack[top]
            if toppled[x] or eta[x] < deg[x] or x == x0:
                continue
            eta[x] -= deg[x]
            odo[x] += 1
            toppled[x] = 1
            for t in range(indptr[x], indptr[x + 1]):
                y = targets[t]
                if y < n:
                    eta[y] += 1
                    if eta[y] >= deg[y] and y != x0 and not toppled[y]:
                        stack[top] = y
                        top += 1
        waves.append(toppled)
    return eta, odo, waves


@njit(cache=True)
def wilson_csr(indptr, targets, n, root, rng_state):
    """Uniform spanning tree via loop-erased random walks.

    Returns the chosen CSR slot per vertex (-1 for the root if it is a
    non-sink vertex).  Walks sweep vertices in canonical order; the
    last-exit ("next pointer") implementation erases loops implicitly.
    """
    in_tree = np.zeros(n + 1, dtype=np.bool_)
    in_tree[root] = True
    next_slot = np.full(n, -1, dtype=np.int64)
    deg = indptr[1:] - indptr[:-1]
    for v in range(n):
        if in_tree[v]:
            continue
        u = v
        while not in_tree[u]:
            s = indptr[u] + next_below(rng_state, deg[u])
            next_slot[u] = s
            u = targets[s]
        u = v
        while not in_tree[u]:
            in_tree[u] = True
            u = targets[next_slot[u]]
    return next_slot


@njit(cache=True)
def tree_depths(parent_vertex, n):
    """Distance to the sink along parent pointers (sink = n)."""
    depth = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    for v in range(n):
        if depth[v] >= 0:
            continue
        u = v
        top = 0
        while u < n and depth[u] < 0:
            stack[top] = u
            top += 1
            u = parent_vertex[u]
        base = 0 if u == n else depth[u]
        while top > 0:
            top -= 1
            base += 1
            depth[stack[top]] = base
    return depth


@njit(cache=True)
def tree_to_heights(indptr, targets, n, parent_slot):
    """Invert the burning bijection: oriented spanning tree -> sandpile.

    Burn time of x equals its tree distance to the sink; the height is
    deg(x) - (#edges to earlier-burnt vertices) + rank of the tree edge
    among edges to vertices burnt exactly one round earlier, ranked in
    CSR (canonical) order.
    """
    parent_vertex = np.empty(n, dtype=np.int64)
    for v in range(n):
        parent_vertex[v] = targets[parent_slot[v]]
    depth = tree_depths(parent_vertex, n)
    eta = np.empty(n, dtype=np.int64)
    for x in range(n):
        tx = depth[x]
        m = 0
        rank = 0
        for t in range(indptr[x], indptr[x + 1]):
            y = targets[t]
            ty = 0 if y == n else depth[y]
            if ty < tx:
                m += 1
                if ty == tx - 1 and t < parent_slot[x]:
                    rank += 1
        deg_x = indptr[x + 1] - indptr[x]
        eta[x] = deg_x - m + rank
    return eta


@njit(cache=True)
def heights_to_tree(indptr, targets, n, eta):
    """Burning bijection: recurrent sandpile -> oriented spanning tree.

    Returns (parent_slot, burn_time); burn_time[x] = -1 flags a vertex
    that never burns (the input was not recurrent).
    """
    deg = indptr[1:] - indptr[:-1]
    burn_time = np.full(n, -1, dtype=np.int64)
    # unburnt-degree bookkeeping: degree towards unburnt non-sink vertices
    deg_u = np.zeros(n, dtype=np.int64)
    for x in range(n):
        for t in range(indptr[x], indptr[x + 1]):
            if targets[t] < n:
                deg_u[x] += 1
    frontier = np.empty(n, dtype=np.int64)
    nf = 0
    for x in range(n):
        if eta[x] >= deg_u[x]:
            frontier[nf] = x
            nf += 1
    t_round = 1
    parent_slot = np.full(n, -1, dtype=np.int64)
    while nf > 0:
        for i in range(nf):
            burn_time[frontier[i]] = t_round
        new_frontier = np.empty(n, dtype=np.int64)
        nn = 0
        for i in range(nf):
            x = frontier[i]
            for t in range(indptr[x], indptr[x + 1]):
                y = targets[t]
                if y < n and burn_time[y] < 0:
                    deg_u[y] -= 1
                    if eta[y] >= deg_u[y]:
                        # may be appended several times; dedupe below
                        found = False
                        for j in range(nn):
                            if new_frontier[j] == y:
                                found = True
                                break
                        if not found:
                            new_frontier[j + 1 if False else nn] = y
                            nn += 1
        frontier = new_frontier
        nf = nn
        t_round += 1
    for x in range(n):
        if burn_time[x] < 0:
            return parent_slot, burn_time
        tx = burn_time[x]
        m = 0
        for t in range(indptr[x], indptr[x + 1]):
            y = targets[t]
            ty = 0 if y == n else burn_time[y]
            if 0 <= ty < tx:
                m += 1
        i_needed = eta[x] - (deg[x] - m)
        seen = 0
        for t in range(indptr[x], indptr[x + 1]):
            y = targets[t]
            ty = 0 if y == n else burn_time[y]
            if ty == tx - 1 and ty >= 0:
                if seen == i_needed:
                    parent_slot[x] = t
                    break
                seen += 1
    return parent_slot, burn_time
