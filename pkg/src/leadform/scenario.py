"""Scenario files (YAML) and the end-to-end pipeline behind the CLI.

A scenario looks like::

    name: five-agent
    n: 5
    leader: 5                    # optional, defaults to n
    edges: [[5, 2], [5, 4], [2, 3], [4, 3], [3, 1], [4, 1]]   # [from, to]
    poles: [-3, -3.5, -4, -5]
    pole_assignment: {1: -3}     # optional, agent -> pole, must cover all followers
    policy: min-norm             # tree-unique | min-norm | pinned
    pinned: [[1, 3, 4.0]]        # optional [i, j, beta_ij]
    formation:
      x: {F: [-3, 2, -2, -1, 1]}
      y:                         # or relative offsets + leader target
        offsets: [[1, 5, 2.0], ...]   # [i, j, gamma_ij = f_i - f_j]
        leader_target: 3.0
        retarget: [{at: 6.0, target: 7.0}]
    simulation: {dt: 0.01, horizon: 10, leader_law: {mode: proportional}, x0: {x: [...]}}

Agent labels are 1-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .errors import GraphError, ScenarioError
from .graph import CommGraph, build_graph, structural_report
from .protocol import OffsetTable, ProtocolRun, init_protocol, run_rounds
from .sim import LeaderLaw, Trajectory, default_dt, simulate_segments
from .synthesis import GainSet, PoleSpec, assign_diagonal, build_closed_loop, solve_betas


@dataclass
class AxisSpec:
    name: str
    F: np.ndarray | None = None
    offsets: OffsetTable | None = None
    leader_target: float | None = None
    retarget: list[tuple[float, float]] = field(default_factory=list)


@dataclass
class SimParams:
    dt: float | None = None
    horizon: float | None = None
    leader_law: dict = field(default_factory=dict)
    x0: dict[str, list[float]] = field(default_factory=dict)


@dataclass
class Scenario:
    name: str
    graph: CommGraph
    poles: PoleSpec
    axes: list[AxisSpec]
    assignment: dict[int, float] | None = None
    policy: str = "min-norm"
    pinned: dict[tuple[int, int], float] = field(default_factory=dict)
    sim: SimParams = field(default_factory=SimParams)
    output_dir: str | None = None


def _req(d: dict, key: str, where: str = "scenario") -> Any:
    if key not in d:
        raise ScenarioError(f"{where}: missing key '{key}'")
    return d[key]


def parse_scenario(data: dict) -> Scenario:
    """Validate a decoded scenario mapping."""
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a mapping at top level")
    try:
        n = int(_req(data, "n"))
        edges = [tuple(int(v) for v in e) for e in data.get("edges", [])]
        if any(len(e) != 2 for e in edges):
            raise ScenarioError("every edge must be a [from, to] pair")
        g = build_graph(n, data.get("leader"), edges)
        poles = PoleSpec(tuple(float(p) for p in _req(data, "poles")))
        if len(poles) != n - 1:
            raise ScenarioError(f"need {n - 1} poles, got {len(poles)}")
        assignment = data.get("pole_assignment")
        if assignment is not None:
            assignment = {int(k): float(v) for k, v in assignment.items()}
        policy = data.get("policy", "min-norm")
        if policy not in ("tree-unique", "min-norm", "pinned"):
            raise ScenarioError(f"unknown policy {policy!r}")
        pinned = {(int(i), int(j)): float(b) for i, j, b in data.get("pinned", [])}

        axes = []
        formation = _req(data, "formation")
        if not isinstance(formation, dict) or not formation:
            raise ScenarioError("formation must map axis names to specs")
        for name, spec in formation.items():
            axes.append(_parse_axis(str(name), spec, g))

        s = data.get("simulation", {}) or {}
        sim = SimParams(
            dt=None if s.get("dt") is None else float(s["dt"]),
            horizon=None if s.get("horizon") is None else float(s["horizon"]),
            leader_law=dict(s.get("leader_law", {}) or {}),
            x0={str(k): [float(v) for v in vals] for k, vals in (s.get("x0", {}) or {}).items()},
        )
        for ax, vals in sim.x0.items():
            if len(vals) != n:
                raise ScenarioError(f"x0 for axis {ax} has {len(vals)} entries, need {n}")
        out = (data.get("output") or {}).get("dir")
    except GraphError as exc:
        raise ScenarioError(str(exc)) from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ScenarioError):
            raise
        raise ScenarioError(f"malformed scenario: {exc}") from exc
    return Scenario(str(data.get("name", "scenario")), g, poles, axes, assignment, policy, pinned, sim, out)


def _parse_axis(name: str, spec: dict, g: CommGraph) -> AxisSpec:
    if not isinstance(spec, dict):
        raise ScenarioError(f"axis {name}: expected a mapping")
    has_F, has_off = "F" in spec, "offsets" in spec
    if has_F == has_off:
        raise ScenarioError(f"axis {name}: give exactly one of 'F' or 'offsets'")
    ax = AxisSpec(name)
    if has_F:
        ax.F = np.asarray(spec["F"], dtype=float)
        if ax.F.size != g.n:
            raise ScenarioError(f"axis {name}: F has {ax.F.size} entries, need {g.n}")
        ax.leader_target = float(ax.F[g.leader - 1])
        if spec.get("retarget"):
            raise ScenarioError(f"axis {name}: retarget needs offsets, not absolute F")
    else:
        gammas = {(int(i), int(j)): float(v) for i, j, v in spec["offsets"]}
        ax.offsets = OffsetTable(gammas, name)
        ax.leader_target = float(_req(spec, "leader_target", f"axis {name}"))
        ax.retarget = sorted((float(r["at"]), float(r["target"])) for r in spec.get("retarget", []) or [])
    return ax


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{path}: not valid YAML: {exc}") from exc
    return parse_scenario(data)


# -- pipeline ---------------------------------------------------------------


@dataclass
class AxisSolution:
    axis: str
    gains: GainSet
    A: np.ndarray
    F: np.ndarray
    run: ProtocolRun | None = None


def base_diagonal(scn: Scenario) -> GainSet:
    return assign_diagonal(scn.graph, scn.poles, scn.assignment)


def solve_axis(scn: Scenario, ax: AxisSpec, leader_target: float | None = None, policy=None) -> AxisSolution:
    """Gains for one axis: centrally from ``F``, or by the protocol from offsets."""
    g = scn.graph
    diag = base_diagonal(scn)
    if ax.F is not None:
        gains = solve_betas(g, diag, ax.F, policy or scn.policy, scn.pinned)
        return AxisSolution(ax.name, gains, build_closed_loop(g, gains), ax.F.copy())
    run = run_rounds(init_protocol(g, ax.offsets, diag), ax.leader_target if leader_target is None else leader_target)
    gains = run.gains()
    return AxisSolution(ax.name, gains, build_closed_loop(g, gains), np.array(run.targets()), run)


def horizon_for(scn: Scenario) -> float:
    if scn.sim.horizon is not None:
        return scn.sim.horizon
    slowest = min(abs(p) for p in scn.poles.lambdas)
    return 10.0 / slowest


def _law(scn: Scenario, target: float) -> LeaderLaw:
    spec = dict(scn.sim.leader_law)
    return LeaderLaw(
        target=target,
        mode=spec.get("mode", "proportional"),
        gain=spec.get("gain"),
        t_off=spec.get("t_off"),
        tol=float(spec.get("tol", 1e-6)),
    )


@dataclass
class AxisRun:
    axis: str
    trajectory: Trajectory
    solutions: list[AxisSolution]  # one per segment

    @property
    def final_F(self) -> np.ndarray:
        return self.solutions[-1].F


def simulate_scenario(scn: Scenario, dt: float | None = None, horizon: float | None = None) -> list[AxisRun]:
    """Simulate every axis, recomputing gains at each retarget time.

    Segment boundaries are snapped to the step grid so that all axes share
    one time base.
    """
    T = horizon if horizon is not None else horizon_for(scn)
    sols0 = [solve_axis(scn, ax) for ax in scn.axes]
    if dt is None:
        dt = scn.sim.dt or min(default_dt(s.A, _law(scn, 0.0)) for s in sols0)
    total_steps = int(round(T / dt))
    runs = []
    for ax, sol in zip(scn.axes, sols0):
        sols = [sol]
        marks = [0]
        for at, target in ax.retarget:
            k = int(round(at / dt))
            if 0 < k < total_steps:
                sols.append(solve_axis(scn, ax, leader_target=target))
                marks.append(k)
        marks.append(total_steps)
        segments = [
            (s.A, _law(scn, float(s.F[scn.graph.leader - 1])), (b - a) * dt)
            for s, a, b in zip(sols, marks[:-1], marks[1:])
        ]
        x0 = scn.sim.x0.get(ax.name, [0.0] * scn.graph.n)
        traj = simulate_segments(segments, x0, dt, scn.graph.leader, ax.name)
        runs.append(AxisRun(ax.name, traj, sols))
    return runs


def check(scn: Scenario):
    return structural_report(scn.graph)
