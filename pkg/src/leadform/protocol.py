"""Synchronous-round simulation of local gain recomputation.

Followers never see absolute targets. Agent ``i`` stores only its diagonal
entry ``a_ii`` and the relative offsets ``gamma_ij = f_i - f_j`` for its
in-neighbours. Each round, agents that resolved their target in the previous
round send it to their out-neighbours; an agent that hears from any
in-neighbour sets ``f_i = f_j + gamma_ij`` and solves its own gain row.

The per-agent computation (:func:`agent_step`) receives a
:class:`LocalView` and nothing else, so there is no route to global state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations
from typing import Callable, Mapping

from .errors import InconsistentOffsets, MissingOffset, Unreachable
from .graph import CommGraph
from .synthesis import GainSet, row_betas

CONSISTENCY_TOL = 1e-9


@dataclass(frozen=True)
class OffsetTable:
    """``gammas[(i, j)] = f_i - f_j`` for every ``j`` in ``N_i`` (one axis)."""

    gammas: dict[tuple[int, int], float]
    axis: str = "x"

    @classmethod
    def from_formation(cls, g: CommGraph, F, axis: str = "x") -> "OffsetTable":
        f = [float(v) for v in getattr(F, "F", F)]
        return cls({(i, j): f[i - 1] - f[j - 1] for j, i in g.edges}, axis)

    def __getitem__(self, key: tuple[int, int]) -> float:
        return self.gammas[key]


@dataclass(frozen=True)
class CocycleReport:
    max_violation: float
    worst: str | None
    checked: int

    @property
    def consistent(self) -> bool:
        return self.max_violation <= CONSISTENCY_TOL


def check_cocycle(offsets: OffsetTable) -> CocycleReport:
    """Check ``gamma_ij + gamma_jk = gamma_ik`` wherever all three are stored.

    Antisymmetric pairs ``gamma_ij = -gamma_ji`` are checked as well.
    """
    g = offsets.gammas
    worst, where, checked = 0.0, None, 0
    for (i, j), gij in sorted(g.items()):
        if (j, i) in g and i < j:
            checked += 1
            v = abs(gij + g[(j, i)])
            if v > worst:
                worst, where = v, f"gamma_{i}{j} + gamma_{j}{i} != 0"
    agents = sorted({a for key in g for a in key})
    for i, j, k in permutations(agents, 3):
        if (i, j) in g and (j, k) in g and (i, k) in g:
            checked += 1
            v = abs(g[(i, j)] + g[(j, k)] - g[(i, k)])
            if v > worst:
                worst, where = v, f"gamma_{i}{j} + gamma_{j}{k} != gamma_{i}{k}"
    return CocycleReport(worst, where, checked)


@dataclass(frozen=True)
class LocalView:
    """Everything agent ``agent`` is allowed to read when it resolves."""

    agent: int
    a_ii: float
    gammas: Mapping[int, float]  # j -> gamma_ij for j in N_i
    inbox: Mapping[int, float]  # j -> f_j received this far


def agent_step(view: LocalView) -> tuple[float, dict[int, float]]:
    """Resolve one agent from local data.

    The target comes from the lowest-labelled neighbour heard from; every
    other received target must agree. Targets of neighbours not heard from
    yet are implied by the offsets, so the gain row can be solved at once.
    """
    heard = sorted(view.inbox)
    first = heard[0]
    f_i = view.inbox[first] + view.gammas[first]
    for j in heard[1:]:
        alt = view.inbox[j] + view.gammas[j]
        if abs(alt - f_i) > CONSISTENCY_TOL * max(1.0, abs(f_i)):
            raise InconsistentOffsets(
                f"agent {view.agent}: neighbour {first} implies {f_i:g}, neighbour {j} implies {alt:g}",
                agent=view.agent,
                discrepancy=abs(alt - f_i),
            )
    nbr_targets = {j: (view.inbox[j] if j in view.inbox else f_i - view.gammas[j]) for j in view.gammas}
    policy = "tree-unique" if len(nbr_targets) == 1 else "min-norm"
    return f_i, row_betas(view.a_ii, f_i, nbr_targets, policy, agent=view.agent)


@dataclass
class AgentState:
    id: int
    known_targets: dict[int, float] = field(default_factory=dict)
    own_target: float | None = None
    beta_row: dict[int, float] = field(default_factory=dict)
    round_resolved: int | None = None

    @property
    def resolved(self) -> bool:
        return self.own_target is not None


@dataclass(frozen=True)
class RoundRecord:
    round: int
    agent: int
    target: float
    betas: dict[int, float]

    def as_dict(self) -> dict:
        return {
            "round": self.round,
            "agent": self.agent,
            "target": self.target,
            "betas": {str(j): b for j, b in self.betas.items()},
        }


@dataclass
class ProtocolRun:
    graph: CommGraph
    offsets: OffsetTable
    diag: dict[int, float]
    agents: dict[int, AgentState]
    leader_target: float | None = None
    rounds: int = 0
    trace: list[RoundRecord] = field(default_factory=list)

    @property
    def resolved(self) -> bool:
        return all(a.resolved for a in self.agents.values())

    def targets(self) -> list[float]:
        """Resolved formation vector, index ``i-1`` for agent ``i``."""
        return [self.agents[i].own_target for i in self.graph.agents]

    def gains(self) -> GainSet:
        betas = {(i, j): b for i, a in self.agents.items() for j, b in a.beta_row.items()}
        return GainSet(self.graph.n, self.graph.leader, dict(self.diag), dict(sorted(betas.items())))

    def format_trace(self) -> str:
        lines = [f"{'round':>5} {'agent':>5} {'target':>14}  betas"]
        for r in self.trace:
            row = ", ".join(f"b{r.agent},{j}={b:.6g}" for j, b in r.betas.items())
            lines.append(f"{r.round:>5} {r.agent:>5} {r.target:>14.6g}  {row}")
        return "\n".join(lines)


def init_protocol(g: CommGraph, offsets: OffsetTable, gains: GainSet | Mapping[int, float]) -> ProtocolRun:
    """Set up agents with only their local data; nobody is resolved yet.

    ``gains`` may be a :class:`GainSet` or a bare ``agent -> a_ii`` map.

    Raises
    ------
    MissingOffset
        Some edge ``j -> i`` has no ``gamma_ij``.
    """
    diag = dict(gains.diag if isinstance(gains, GainSet) else gains)
    missing = [(i, j) for j, i in g.sorted_edges() if i != g.leader and (i, j) not in offsets.gammas]
    if missing:
        raise MissingOffset(f"no offset for {', '.join(f'gamma_{i}{j}' for i, j in missing)}")
    absent = [i for i in g.followers if i not in diag]
    if absent:
        raise ValueError(f"no diagonal gain for agents {absent}")
    diag.setdefault(g.leader, 0.0)
    return ProtocolRun(g, offsets, diag, {i: AgentState(i) for i in g.agents})


def _view(run: ProtocolRun, i: int) -> LocalView:
    g = run.graph
    return LocalView(
        agent=i,
        a_ii=run.diag[i],
        gammas={j: run.offsets.gammas[(i, j)] for j in g.in_neighbors(i)},
        inbox=dict(run.agents[i].known_targets),
    )


def run_rounds(
    run: ProtocolRun,
    leader_target: float,
    observer: Callable[[LocalView], None] | None = None,
) -> ProtocolRun:
    """Resolve every agent by synchronous message rounds.

    Round 0 resolves the leader. In round ``k`` each agent that received a
    target sent in round ``k-1`` resolves; agents at hop distance ``k`` from
    the leader therefore resolve in round ``k``. Messages sent in the last
    round are still delivered and checked for consistency.

    ``observer`` is called with each :class:`LocalView` before the agent
    acts, which lets a harness audit what agents read.

    Raises
    ------
    Unreachable, InconsistentOffsets
    """
    g = run.graph
    agents = {i: AgentState(i) for i in g.agents}
    out = ProtocolRun(g, run.offsets, dict(run.diag), agents, float(leader_target))

    leader = agents[g.leader]
    leader.own_target = float(leader_target)
    leader.round_resolved = 0
    out.trace.append(RoundRecord(0, g.leader, leader.own_target, {}))
    sending = [g.leader]
    k = 0
    while sending:
        k += 1
        # deliver messages sent last round
        for j in sending:
            fj = agents[j].own_target
            for i in g.out_neighbors(j):
                st = agents[i]
                st.known_targets[j] = fj
                if st.resolved and i != g.leader:
                    implied = st.own_target - run.offsets.gammas[(i, j)]
                    if abs(implied - fj) > CONSISTENCY_TOL * max(1.0, abs(fj)):
                        raise InconsistentOffsets(
                            f"agent {i}: late target {fj:g} from {j} disagrees with implied {implied:g}",
                            agent=i,
                            discrepancy=abs(implied - fj),
                        )
        newly = []
        for i in g.agents:
            st = agents[i]
            if st.resolved or not st.known_targets or i == g.leader:
                continue
            view = _view(out, i)
            if observer is not None:
                observer(view)
            st.own_target, st.beta_row = agent_step(view)
            st.round_resolved = k
            newly.append(i)
            out.trace.append(RoundRecord(k, i, st.own_target, dict(st.beta_row)))
        if newly:
            out.rounds = k
        sending = newly

    pending = [i for i in g.agents if not agents[i].resolved]
    if pending:
        raise Unreachable(f"agents {pending} never received a target", agents=pending)
    return out


def retarget(run: ProtocolRun, new_leader_target: float, observer=None) -> ProtocolRun:
    """Re-run resolution with the same offsets and diagonal for a moved leader."""
    return run_rounds(run, new_leader_target, observer)
