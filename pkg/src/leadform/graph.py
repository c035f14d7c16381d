"""Directed communication topology between agents.

Agents are labelled ``1..n`` as in the usual leader-follower notation. An
edge ``(j, i)`` means information flows from ``j`` to ``i``: agent ``i``
measures ``x_j`` and so ``j`` belongs to the neighbour set ``N_i``.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable

from .errors import CycleDetected, DuplicateEdge, IndexOutOfRange, SelfLoop

Edge = tuple[int, int]


@dataclass(frozen=True)
class CommGraph:
    """Validated directed graph with a designated leader.

    Use :func:`build_graph` rather than the constructor directly.
    """

    n: int
    leader: int
    edges: frozenset[Edge]
    _in: dict[int, tuple[int, ...]] = field(repr=False, compare=False, hash=False)
    _out: dict[int, tuple[int, ...]] = field(repr=False, compare=False, hash=False)

    @property
    def agents(self) -> range:
        return range(1, self.n + 1)

    @property
    def followers(self) -> list[int]:
        return [i for i in self.agents if i != self.leader]

    def in_neighbors(self, i: int) -> tuple[int, ...]:
        """Agents whose state ``i`` receives (the set ``N_i``), ascending."""
        return self._in[i]

    def out_neighbors(self, j: int) -> tuple[int, ...]:
        return self._out[j]

    def sorted_edges(self) -> list[Edge]:
        return sorted(self.edges)


def build_graph(n: int, leader: int | None = None, edges: Iterable[Edge] = ()) -> CommGraph:
    """Build a :class:`CommGraph`.

    Parameters
    ----------
    n : int
        Number of agents, at least 2.
    leader : int, optional
        Leader label, defaults to ``n``.
    edges : iterable of (from, to)
        ``(j, i)`` means agent ``i`` listens to agent ``j``.

    Raises
    ------
    IndexOutOfRange, SelfLoop, DuplicateEdge
    """
    n = int(n)
    if n < 2:
        raise IndexOutOfRange(f"need at least 2 agents, got n={n}")
    leader = n if leader is None else int(leader)
    if not 1 <= leader <= n:
        raise IndexOutOfRange(f"leader {leader} outside 1..{n}")

    seen: set[Edge] = set()
    for e in edges:
        j, i = (int(v) for v in e)
        if not (1 <= j <= n and 1 <= i <= n):
            raise IndexOutOfRange(f"edge {j}->{i} has an index outside 1..{n}")
        if i == j:
            raise SelfLoop(f"self-loop on agent {i}; self feedback is a gain, not an edge")
        if (j, i) in seen:
            raise DuplicateEdge(f"edge {j}->{i} listed twice")
        seen.add((j, i))

    ins = {k: [] for k in range(1, n + 1)}
    outs = {k: [] for k in range(1, n + 1)}
    for j, i in seen:
        ins[i].append(j)
        outs[j].append(i)
    return CommGraph(
        n=n,
        leader=leader,
        edges=frozenset(seen),
        _in={k: tuple(sorted(v)) for k, v in ins.items()},
        _out={k: tuple(sorted(v)) for k, v in outs.items()},
    )


def leader_distances(g: CommGraph) -> dict[int, int]:
    """BFS hop count from the leader along edge direction (reachable agents only)."""
    dist = {g.leader: 0}
    queue = deque([g.leader])
    while queue:
        j = queue.popleft()
        for i in g.out_neighbors(j):
            if i not in dist:
                dist[i] = dist[j] + 1
                queue.append(i)
    return dist


def leader_eccentricity(g: CommGraph) -> int:
    """Largest hop distance from the leader; raises if some agent is unreachable."""
    dist = leader_distances(g)
    if len(dist) != g.n:
        missing = sorted(set(g.agents) - set(dist))
        raise ValueError(f"agents {missing} are not reachable from the leader")
    return max(dist.values())


def has_rooted_spanning_tree(g: CommGraph) -> bool:
    """True iff every agent is reachable from the leader."""
    return len(leader_distances(g)) == g.n


def find_cycle(g: CommGraph) -> list[int] | None:
    """Return one directed cycle as ``[v0, v1, ..., v0]`` or None.

    Iterative DFS; roots and successors are visited in ascending order so the
    reported cycle is deterministic.
    """
    WHITE, GREY, BLACK = 0, 1, 2
    color = {v: WHITE for v in g.agents}
    parent: dict[int, int] = {}
    for root in g.agents:
        if color[root] != WHITE:
            continue
        color[root] = GREY
        stack = [(root, iter(g.out_neighbors(root)))]
        while stack:
            v, it = stack[-1]
            for w in it:
                if color[w] == WHITE:
                    color[w] = GREY
                    parent[w] = v
                    stack.append((w, iter(g.out_neighbors(w))))
                    break
                if color[w] == GREY:
                    cycle = [v]
                    while cycle[-1] != w:
                        cycle.append(parent[cycle[-1]])
                    cycle.reverse()
                    return cycle + [cycle[0]]
            else:
                color[v] = BLACK
                stack.pop()
    return None


def is_acyclic(g: CommGraph) -> bool:
    return find_cycle(g) is None


def topological_order(g: CommGraph) -> list[int]:
    """Kahn ordering: every edge ``j -> i`` has ``j`` before ``i``.

    The leader goes first whenever it has no pending predecessors; other ties
    are broken by lowest agent label.

    Raises
    ------
    CycleDetected
    """
    indeg = {v: len(g.in_neighbors(v)) for v in g.agents}
    ready = [(0 if v == g.leader else 1, v) for v in g.agents if indeg[v] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        _, v = heapq.heappop(ready)
        order.append(v)
        for w in g.out_neighbors(v):
            indeg[w] -= 1
            if indeg[w] == 0:
                heapq.heappush(ready, (0 if w == g.leader else 1, w))
    if len(order) != g.n:
        cycle = find_cycle(g)
        raise CycleDetected(f"graph has a directed cycle {cycle}", cycle=cycle)
    return order


@dataclass(frozen=True)
class StructuralReport:
    n: int
    edge_count: int
    spanning_tree: bool
    acyclic: bool
    min_edges: int
    max_edges: int
    at_min_edges: bool
    within_max: bool
    beta_unique: bool
    cycle: tuple[int, ...] | None = None

    @property
    def synthesizable(self) -> bool:
        """Both structural hypotheses for local pole placement hold."""
        return self.spanning_tree and self.acyclic

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "edges": self.edge_count,
            "spanning_tree": self.spanning_tree,
            "acyclic": self.acyclic,
            "min_edges": self.min_edges,
            "max_edges": self.max_edges,
            "at_min_edges": self.at_min_edges,
            "within_max": self.within_max,
            "beta_unique": self.beta_unique,
            "cycle": list(self.cycle) if self.cycle else None,
            "synthesizable": self.synthesizable,
        }


def structural_report(g: CommGraph) -> StructuralReport:
    """Edge-count bounds and the two structural flags in one place."""
    m = len(g.edges)
    cycle = find_cycle(g)
    return StructuralReport(
        n=g.n,
        edge_count=m,
        spanning_tree=has_rooted_spanning_tree(g),
        acyclic=cycle is None,
        min_edges=g.n - 1,
        max_edges=g.n * (g.n - 1) // 2,
        at_min_edges=m == g.n - 1,
        within_max=m <= g.n * (g.n - 1) // 2,
        beta_unique=all(len(g.in_neighbors(i)) == 1 for i in g.followers),
        cycle=tuple(cycle) if cycle else None,
    )
