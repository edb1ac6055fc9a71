"""Passenger routing on time-expanded event graphs.

Routes minimize the perceived travel time (arrival - earliest departure +
penalty * transfers).  Cost and transfer count are folded into one integer
label ``cost * TRANSFER_BASE + transfers`` so that a plain integer Dijkstra
optimizes the pair (cost, transfers) lexicographically; both components are
arc-additive.

Ties are resolved deterministically: among optimal routes the one ending at
the lowest arrival-event id wins, and among those the route whose arc
priority sequence is lexicographically smallest.  The tie rule is exact and
cheap (optimal-predecessor lists only grow when true ties occur), which lets
independent brute-force enumeration reproduce routing results bit for bit.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

INF = 1 << 60

#: base for folding (cost, transfers) into one integer label; any route has
#: far fewer than this many transfers
TRANSFER_BASE = 4096


def make_label(cost: int, transfers: int) -> int:
    return cost * TRANSFER_BASE + transfers


def split_label(label: int) -> tuple[int, int]:
    return label // TRANSFER_BASE, label % TRANSFER_BASE


@dataclass
class SearchResult:
    target: int
    label: int  # cost * TRANSFER_BASE + transfers
    arcs: list[tuple]  # (prio, tail, head) along the chosen path

    @property
    def cost(self) -> int:
        return self.label // TRANSFER_BASE

    @property
    def transfers(self) -> int:
        return self.label % TRANSFER_BASE


def lex_dijkstra(sources, successors, targets) -> SearchResult | None:
    """Shortest path from weighted sources to the best target node.

    sources: list of (node, initial_label); successors(u) yields
    (priority, weight, v) with priority tuples unique per u and sorted
    ascending; targets: set of admissible terminal nodes.

    Returns the path minimizing (label, terminal id, arc priority sequence),
    or None if no target is reachable.
    """
    dist: dict[int, int] = {}
    preds: dict[int, list[int]] = {}
    init: dict[int, int] = {}
    heap: list[tuple[int, int]] = []
    for node, label in sources:
        if label < init.get(node, INF):
            init[node] = label
    for node, label in init.items():
        dist[node] = label
        heapq.heappush(heap, (label, node))

    settled: set[int] = set()
    while heap:
        label, u = heapq.heappop(heap)
        if label != dist.get(u, INF) or u in settled:
            continue
        settled.add(u)
        for _prio, w, v in successors(u):
            cand = label + w
            old = dist.get(v, INF)
            if cand < old:
                dist[v] = cand
                preds[v] = [u]
                heapq.heappush(heap, (cand, v))
            elif cand == old:
                p = preds.setdefault(v, [])
                if u not in p:
                    p.append(u)

    best = None
    for t in targets:
        d = dist.get(t, INF)
        if d < INF and (best is None or (d, t) < best):
            best = (d, t)
    if best is None:
        return None
    label, tstar = best

    # nodes lying on some optimal path to the chosen terminal
    marked = {tstar}
    stack = [tstar]
    while stack:
        v = stack.pop()
        for u in preds.get(v, ()):
            if u not in marked:
                marked.add(u)
                stack.append(u)

    # greedy forward walks: from a fixed start, taking the lowest-priority
    # optimal arc at every step yields the lex-smallest arc sequence
    def walk(s: int) -> list[tuple]:
        out: list[tuple] = []
        u = s
        while u != tstar:
            for prio, w, v in successors(u):
                if v in marked and dist[u] + w == dist[v]:
                    out.append((prio, u, v))
                    u = v
                    break
            else:
                raise AssertionError("optimal subgraph walk lost its way")
        return out

    starts = sorted(s for s in marked if dist[s] == init.get(s, INF))
    if tstar in starts:
        # the empty sequence is a prefix of every other, hence minimal
        return SearchResult(tstar, label, [])
    best_arcs = None
    for s in starts:
        cand = walk(s)
        if best_arcs is None or [a[0] for a in cand] < [a[0] for a in best_arcs]:
            best_arcs = cand
    if best_arcs is None:
        return None
    return SearchResult(tstar, label, best_arcs)
