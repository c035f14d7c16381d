"""Bipartite graph of the pencil ``sI - A`` and determinant by matchings.

Rows ``u_1..u_n`` and columns ``v_1..v_n`` are labelled 1-based so that row
``u_i`` is agent ``i``. Every diagonal pair is an edge because of the ``sI``
term; an off-diagonal edge ``(i, j)`` exists when ``a_ij != 0``.

This module is deliberately independent of the synthesis code: it is the
combinatorial oracle the numeric results are checked against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import LimitExceeded, NonSquare, NotPerfectMatching, TooLarge
from .graph import CommGraph, is_acyclic

MAX_EXPANSION_SIZE = 12


@dataclass(frozen=True)
class BipartiteGraph:
    """Weighted bipartite graph of ``sI - A``.

    ``diagonal[i-1]`` is ``a_ii`` (edge weight ``s - a_ii``); ``off`` maps an
    off-diagonal ``(row, col)`` to ``a_ij`` (edge weight ``-a_ij``).
    """

    n: int
    diagonal: tuple[float, ...]
    off: dict[tuple[int, int], float]

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        return frozenset([(i, i) for i in range(1, self.n + 1)] + list(self.off))

    def has_edge(self, row: int, col: int) -> bool:
        return row == col or (row, col) in self.off

    def row_adjacency(self) -> dict[int, tuple[int, ...]]:
        adj = {i: [i] for i in range(1, self.n + 1)}
        for i, j in self.off:
            adj[i].append(j)
        return {i: tuple(sorted(c)) for i, c in adj.items()}


@dataclass(frozen=True)
class Matching:
    n: int
    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        rows = [r for r, _ in self.pairs]
        cols = [c for _, c in self.pairs]
        if len(set(rows)) != len(rows) or len(set(cols)) != len(cols):
            raise ValueError(f"edges of a matching must be non-adjacent: {self.pairs}")
        object.__setattr__(self, "pairs", tuple(sorted(self.pairs)))

    @property
    def is_perfect(self) -> bool:
        return len(self.pairs) == self.n

    def as_permutation(self) -> tuple[int, ...]:
        """Column matched to each row, rows in order (perfect matchings only)."""
        return tuple(c for _, c in self.pairs)

    @classmethod
    def diagonal(cls, n: int) -> "Matching":
        return cls(n, tuple((i, i) for i in range(1, n + 1)))


@dataclass(frozen=True)
class AlternatingCycle:
    """Closed walk ``u_a v_b u_c ...`` alternating matched / unmatched edges."""

    vertices: tuple[str, ...]
    edges: tuple[tuple[tuple[int, int], bool], ...]  # ((row, col), in_matching)

    @property
    def rows(self) -> tuple[int, ...]:
        return tuple(int(v[1:]) for v in self.vertices[:-1] if v[0] == "u")

    def __str__(self) -> str:
        return "".join(self.vertices)


def _as_square(A) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NonSquare(f"expected a square matrix, got shape {A.shape}")
    return A


def pencil_bipartite(A) -> BipartiteGraph:
    """Bipartite graph of ``sI - A`` for a numeric matrix or boolean pattern."""
    A = _as_square(A)
    n = A.shape[0]
    vals = A.astype(float)
    off = {
        (i + 1, j + 1): float(vals[i, j])
        for i in range(n)
        for j in range(n)
        if i != j and A[i, j] != 0
    }
    return BipartiteGraph(n=n, diagonal=tuple(float(vals[i, i]) for i in range(n)), off=off)


def structural_pencil(g: CommGraph) -> BipartiteGraph:
    """Pencil pattern implied by a graph: one unit weight per edge ``j -> i``."""
    return BipartiteGraph(
        n=g.n,
        diagonal=(0.0,) * g.n,
        off={(i, j): 1.0 for j, i in g.edges},
    )


def _iter_permutations(bg: BipartiteGraph) -> Iterator[tuple[int, ...]]:
    """Backtracking over row->column assignments supported by ``bg``.

    Yields 1-based column tuples in lexicographic order.
    """
    adj = bg.row_adjacency()
    n = bg.n
    used = [False] * (n + 1)
    chosen: list[int] = []

    def rec(row):
        if row > n:
            yield tuple(chosen)
            return
        for col in adj[row]:
            if not used[col]:
                used[col] = True
                chosen.append(col)
                yield from rec(row + 1)
                chosen.pop()
                used[col] = False

    yield from rec(1)


def enumerate_perfect_matchings(bg: BipartiteGraph, limit: int = 10_000) -> list[Matching]:
    """All perfect matchings of ``bg`` in lexicographic order.

    Raises
    ------
    LimitExceeded
        If more than ``limit`` perfect matchings exist.
    """
    if limit < 1:
        raise ValueError("limit must be at least 1")
    out = []
    for perm in _iter_permutations(bg):
        if len(out) == limit:
            raise LimitExceeded(f"more than {limit} perfect matchings")
        out.append(Matching(bg.n, tuple(zip(range(1, bg.n + 1), perm))))
    return out


def find_alternating_cycle(bg: BipartiteGraph, m: Matching) -> AlternatingCycle | None:
    """Search for a cycle alternating between ``m`` and the other edges.

    From row ``u`` the matched edge leads to column ``m(u)``; from there any
    unmatched edge ``(u', m(u))`` leads to row ``u'``. A directed cycle in
    that row-to-row relation is exactly an alternating cycle, and none exists
    iff ``m`` is the only perfect matching.

    Raises
    ------
    NotPerfectMatching
    """
    if m.n != bg.n or not m.is_perfect:
        raise NotPerfectMatching("matching does not cover every row")
    for r, c in m.pairs:
        if not bg.has_edge(r, c):
            raise NotPerfectMatching(f"({r}, {c}) is not an edge of the bipartite graph")

    match = dict(m.pairs)
    row_of_col = {c: r for r, c in m.pairs}
    col_rows: dict[int, list[int]] = {c: [] for c in range(1, bg.n + 1)}
    for r, c in bg.edges:
        if row_of_col[c] != r:
            col_rows[c].append(r)
    succ = {u: sorted(col_rows[match[u]]) for u in range(1, bg.n + 1)}

    WHITE, GREY, BLACK = 0, 1, 2
    color = dict.fromkeys(succ, WHITE)
    parent: dict[int, int] = {}
    for root in sorted(succ):
        if color[root] != WHITE:
            continue
        color[root] = GREY
        stack = [(root, iter(succ[root]))]
        while stack:
            u, it = stack[-1]
            for w in it:
                if color[w] == WHITE:
                    color[w] = GREY
                    parent[w] = u
                    stack.append((w, iter(succ[w])))
                    break
                if color[w] == GREY:
                    rows = [u]
                    while rows[-1] != w:
                        rows.append(parent[rows[-1]])
                    rows.reverse()
                    return _cycle_from_rows(rows, match)
            else:
                color[u] = BLACK
                stack.pop()
    return None


def _cycle_from_rows(rows: list[int], match: dict[int, int]) -> AlternatingCycle:
    verts: list[str] = []
    edges = []
    k = len(rows)
    for idx, u in enumerate(rows):
        col = match[u]
        nxt = rows[(idx + 1) % k]
        verts += [f"u{u}", f"v{col}"]
        edges += [((u, col), True), ((nxt, col), False)]
    verts.append(f"u{rows[0]}")
    return AlternatingCycle(vertices=tuple(verts), edges=tuple(edges))


@dataclass(frozen=True)
class CycleEquivalence:
    g_has_cycle: bool
    bg_has_cycle: bool
    bg_cycle: AlternatingCycle | None

    @property
    def equivalent(self) -> bool:
        return self.g_has_cycle == self.bg_has_cycle


def lemma_cycle_equivalence(g: CommGraph) -> CycleEquivalence:
    """Compare directed cycles of ``g`` with alternating cycles of its pencil."""
    bg = structural_pencil(g)
    cyc = find_alternating_cycle(bg, Matching.diagonal(g.n))
    return CycleEquivalence(g_has_cycle=not is_acyclic(g), bg_has_cycle=cyc is not None, bg_cycle=cyc)


def _parity(perm: tuple[int, ...]) -> int:
    """+1 for even permutations, -1 for odd (cycle decomposition)."""
    seen = [False] * len(perm)
    sign = 1
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        k = start
        while not seen[k]:
            seen[k] = True
            k = perm[k] - 1
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def char_poly_matchings(A) -> np.ndarray:
    """Coefficients of ``det(sI - A)``, highest degree first, by matching expansion.

    Each perfect matching of the pencil contributes the signed product of its
    edge weights: ``s - a_ii`` for diagonal edges and ``-a_ij`` otherwise.

    Raises
    ------
    TooLarge
        For ``n > 12``; the expansion is factorial in the worst case.
    """
    A = _as_square(A).astype(float)
    n = A.shape[0]
    if n > MAX_EXPANSION_SIZE:
        raise TooLarge(f"matching expansion limited to n <= {MAX_EXPANSION_SIZE}, got {n}")
    bg = pencil_bipartite(A)
    coeffs = np.zeros(n + 1)
    for perm in _iter_permutations(bg):
        term = np.array([float(_parity(perm))])
        for row, col in enumerate(perm, start=1):
            if row == col:
                term = np.convolve(term, [1.0, -A[row - 1, row - 1]])
            else:
                term = term * -A[row - 1, col - 1]
        coeffs[n + 1 - len(term):] += term
    return coeffs
