"""
Characteristic polynomials from perfect matchings
=================================================

Each perfect matching of the pencil bipartite graph of sI - A is one signed
term of det(sI - A). An acyclic graph has only the diagonal matching.
"""

import numpy as np

from leadform import (
    build_graph,
    char_poly_matchings,
    enumerate_perfect_matchings,
    faddeev_leverrier,
    find_alternating_cycle,
    pencil_bipartite,
    spectrum,
    structural_pencil,
)
from leadform.bipartite import Matching

A = np.array([[-3.0, 1, 0, 7], [0, -4, 2, 0], [-3, 0, -4, -2], [0, 0, 0, 0]])
bg = pencil_bipartite(A)
for m in enumerate_perfect_matchings(bg):
    print(m.as_permutation())

print("matchings  ", char_poly_matchings(A))
print("recursion  ", faddeev_leverrier(A))
print("roots      ", np.round(spectrum(A), 4))

# the 1 -> 3 -> 2 -> 1 loop shows up as an alternating cycle
print(find_alternating_cycle(bg, Matching.diagonal(4)))

tree = build_graph(4, 4, [(4, 1), (1, 2), (2, 3)])
print(len(enumerate_perfect_matchings(structural_pencil(tree))), "matching on a tree")
