"""Decentralized pole placement and formation gains for leader-follower
single-integrator networks."""

from .bipartite import (
    BipartiteGraph,
    Matching,
    char_poly_matchings,
    enumerate_perfect_matchings,
    find_alternating_cycle,
    lemma_cycle_equivalence,
    pencil_bipartite,
    structural_pencil,
)
from .graph import (
    CommGraph,
    build_graph,
    has_rooted_spanning_tree,
    is_acyclic,
    leader_eccentricity,
    structural_report,
    topological_order,
)
from .protocol import OffsetTable, check_cocycle, init_protocol, retarget, run_rounds
from .sim import LeaderLaw, Trajectory, fit_rates, settling_time, simulate, simulate_nd, simulate_segments
from .spectral import faddeev_leverrier, spectrum
from .synthesis import (
    Formation,
    GainSet,
    PoleSpec,
    assign_diagonal,
    build_closed_loop,
    solve_betas,
    synthesize,
    verify_formation,
)

__version__ = "0.1.0"
