"""
Placing poles and a formation on an acyclic graph
==================================================

Diagonal gains fix the spectrum, inter-agent gains fix the kernel.
"""

import numpy as np

from leadform import build_graph, structural_report, synthesize, verify_formation

# agent i listens to agent j for every edge (j, i); agent 5 leads
g = build_graph(5, 5, [(5, 2), (5, 4), (2, 3), (4, 3), (3, 1), (4, 1)])
print(structural_report(g).as_dict())

poles = [-3, -3.5, -4, -5]
F = np.array([-3.0, 2, -2, -1, 1])

# min-norm betas, then a pinned alternative with the same poles and kernel
for policy, pinned in [("min-norm", None), ("pinned", {(1, 3): 4.0, (3, 2): 1.0})]:
    gains, A = synthesize(g, poles, F, policy, pinned)
    rep = verify_formation(A, F, poles)
    print(policy)
    print(np.round(A, 4))
    print("spectrum", np.round(rep.spectrum.real, 9), "kernel residual", rep.kernel_residual)

# a cycle (1 <-> 2) couples the betas into the spectrum, so synthesis refuses it
cyclic = build_graph(3, 3, [(3, 2), (2, 1), (1, 2)])
print(structural_report(cyclic).cycle)
