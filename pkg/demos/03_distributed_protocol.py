"""
Computing gains with local messages only
========================================

Each follower knows its diagonal gain and its desired offsets to the agents
it listens to. The leader's target spreads one hop per round.
"""

import numpy as np

from leadform import (
    OffsetTable,
    assign_diagonal,
    build_graph,
    init_protocol,
    leader_eccentricity,
    run_rounds,
    solve_betas,
)

g = build_graph(6, 6, [(6, 1), (1, 2), (2, 3), (6, 5), (5, 4)])
F = np.array([1.0, 2.0, 4.0, -1.5, -0.5, 3.0])
diag = assign_diagonal(g, [-3, -2, -3, -2, -3], {1: -3, 2: -2, 3: -3, 4: -2, 5: -3})

offsets = OffsetTable.from_formation(g, F)
run = run_rounds(init_protocol(g, offsets, diag), leader_target=3.0)
print(run.format_trace())
print("rounds", run.rounds, "eccentricity", leader_eccentricity(g))

central = solve_betas(g, diag, F, "tree-unique")
print("same as central solve:", run.gains().betas == central.betas)

# moving the leader only changes the leader target; offsets stay local
moved = run_rounds(init_protocol(g, offsets, diag), leader_target=5.0)
print(np.array(moved.targets()) - np.array(run.targets()))
