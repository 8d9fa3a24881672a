"""Exact minimum cuts on dense undirected networks.

FIFO push-relabel on a dense residual matrix.  Capacities are doubles;
termination does not depend on their values (the relabel count is
bounded combinatorially), every push subtracts an exact minimum, and
the reported cut set is the source-reachable side of the final residual
network, which is the inclusion-minimal minimum cut.  The cut *value*
is recomputed as an exact sum of the original capacities across the
returned cut, so it is independent of flow arithmetic; the max-flow
value is kept alongside as the optimality certificate.

Forced terminal groups are contracted into the source and sink rather
than wired with large capacities, so no infinities enter the arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .energy import exact_sum
from .space import Mask


@njit(cache=True)
def _push_relabel(res: np.ndarray, source: int, sink: int) -> float:
    n = res.shape[0]
    height = np.zeros(n, dtype=np.int64)
    excess = np.zeros(n, dtype=np.float64)
    cur = np.zeros(n, dtype=np.int64)
    in_queue = np.zeros(n, dtype=np.bool_)
    queue = np.empty(n + 1, dtype=np.int64)
    head = 0
    tail = 0

    height[source] = n
    for v in range(n):
        c = res[source, v]
        if v != source and c > 0.0:
            res[source, v] = 0.0
            res[v, source] += c
            excess[v] += c
            if v != sink and not in_queue[v]:
                queue[tail] = v
                tail = (tail + 1) % (n + 1)
                in_queue[v] = True

    relabels = 0
    max_relabels = 2 * n * n + 16
    while head != tail:
        u = queue[head]
        head = (head + 1) % (n + 1)
        in_queue[u] = False
        while excess[u] > 0.0:
            if cur[u] == n:
                lowest = 4 * n
                for v in range(n):
                    if res[u, v] > 0.0 and height[v] < lowest:
                        lowest = height[v]
                if lowest >= 4 * n:
                    break
                height[u] = lowest + 1
                cur[u] = 0
                relabels += 1
                if relabels > max_relabels:
                    return -1.0
            else:
                v = cur[u]
                if res[u, v] > 0.0 and height[u] == height[v] + 1:
                    delta = excess[u] if excess[u] < res[u, v] else res[u, v]
                    res[u, v] -= delta
                    res[v, u] += delta
                    excess[u] -= delta
                    excess[v] += delta
                    if v != source and v != sink and not in_queue[v]:
                        queue[tail] = v
                        tail = (tail + 1) % (n + 1)
                        in_queue[v] = True
                else:
                    cur[u] += 1
    return excess[sink]


def _residual_reachable(res: np.ndarray, source: int, eps: float) -> np.ndarray:
    n = res.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[source] = True
    frontier = np.array([source], dtype=np.int64)
    while frontier.size:
        reach = (res[frontier] > eps).any(axis=0)
        new = reach & ~seen
        seen |= new
        frontier = np.flatnonzero(new)
    return seen


@dataclass(frozen=True)
class CutResult:
    """Minimum cut: inclusion-minimal source side, value, and certificate.

    ``degenerate`` is set when the maximal optimal side differs from the
    minimal one, i.e. the minimizer is not unique.
    """

    source_side: Mask
    value: float
    max_flow: float
    degenerate: bool = False


def min_cut_dense(
    capacities: np.ndarray,
    source_mask: Mask,
    sink_mask: Mask,
    sink_unary: np.ndarray | None = None,
) -> CutResult:
    """Minimum s-t cut with contracted terminal groups.

    ``capacities`` is a symmetric nonnegative matrix of per-unordered-edge
    capacities with a zero diagonal.  All nodes in ``source_mask`` are
    forced into the returned side, all nodes in ``sink_mask`` are forced
    out.  ``sink_unary`` optionally adds a node-to-sink capacity per free
    node (the per-node cost of membership in the source side).
    """
    cap = np.asarray(capacities, dtype=np.float64)
    s_mask = np.asarray(source_mask, dtype=bool)
    t_mask = np.asarray(sink_mask, dtype=bool)
    n = cap.shape[0]
    if cap.shape != (n, n):
        raise ValueError("capacity matrix must be square")
    if (s_mask & t_mask).any():
        raise ValueError("source and sink sets must be disjoint")
    if not s_mask.any():
        raise ValueError("source set must be nonempty")
    if not t_mask.any() and sink_unary is None:
        raise ValueError("sink set must be nonempty")

    free = np.flatnonzero(~s_mask & ~t_mask)
    m = free.size
    s_ids = np.flatnonzero(s_mask)
    t_ids = np.flatnonzero(t_mask)

    # Constant part of every admissible cut: direct source-sink pairs plus
    # the unary cost of the forced-in nodes.
    base_parts = []
    if t_ids.size:
        base_parts.append(cap[np.ix_(s_ids, t_ids)].ravel())
    if sink_unary is not None:
        base_parts.append(np.asarray(sink_unary, dtype=np.float64)[s_ids])
    base = exact_sum(np.concatenate(base_parts)) if base_parts else 0.0

    if m == 0:
        side = s_mask.copy()
        value = _cut_value(cap, side, sink_unary)
        return CutResult(source_side=side, value=value, max_flow=value)

    red = np.zeros((m + 2, m + 2))
    src, snk = 0, m + 1
    red[1 : m + 1, 1 : m + 1] = cap[np.ix_(free, free)]
    to_src = cap[np.ix_(free, s_ids)].sum(axis=1)
    to_snk = cap[np.ix_(free, t_ids)].sum(axis=1) if t_ids.size else np.zeros(m)
    if sink_unary is not None:
        to_snk = to_snk + np.asarray(sink_unary, dtype=np.float64)[free]
    red[src, 1 : m + 1] = to_src
    red[1 : m + 1, src] = to_src
    red[snk, 1 : m + 1] = to_snk
    red[1 : m + 1, snk] = to_snk

    res = red.copy()
    flow = _push_relabel(res, src, snk)
    if flow < 0.0:
        raise RuntimeError("push-relabel exceeded its relabel budget")

    eps = 1e-11 * max(1.0, float(red.max()))
    reach = _residual_reachable(res, src, eps)
    side = s_mask.copy()
    side[free[reach[1 : m + 1]]] = True

    # Maximal optimal side: everything that cannot reach the sink.
    co_reach = _residual_reachable(np.ascontiguousarray(res.T), snk, eps)
    side_max = ~t_mask
    side_max[free[co_reach[1 : m + 1]]] = False
    degenerate = bool((side_max != side).any())

    value = _cut_value(cap, side, sink_unary)
    max_flow = base + flow
    scale = max(1.0, abs(value))
    if abs(max_flow - value) > 1e-6 * scale:
        raise RuntimeError(
            f"max-flow {max_flow!r} disagrees with recomputed cut value {value!r}"
        )
    return CutResult(source_side=side, value=value, max_flow=max_flow, degenerate=degenerate)


def _cut_value(cap: np.ndarray, side: Mask, sink_unary: np.ndarray | None) -> float:
    inside = np.flatnonzero(side)
    outside = np.flatnonzero(~side)
    parts = []
    if inside.size and outside.size:
        parts.append(cap[np.ix_(inside, outside)].ravel())
    if sink_unary is not None and inside.size:
        parts.append(np.asarray(sink_unary, dtype=np.float64)[inside])
    if not parts:
        return 0.0
    return exact_sum(np.concatenate(parts))
