"""Decentralized gain synthesis for single-integrator formations.

Sign convention: the canonical quantity is the closed-loop diagonal entry
``a_ii``. A follower with requested pole ``lambda_i`` gets ``a_ii = lambda_i``
and the self-feedback gain of ``u_i = sum_j beta_ij x_j - alpha_i x_i`` is
``alpha_i = -a_ii``. The leader keeps ``a_nn = 0`` and no incoming gains.

On an acyclic graph rooted at the leader the spectrum of the closed loop is
fixed by the diagonal alone, while the inter-agent gains only decide which
vector spans the kernel. :func:`assign_diagonal` handles the first part,
:func:`solve_betas` the second.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    IncompleteGains,
    PinnedInconsistent,
    PoleCountMismatch,
    PolicyMismatch,
    RowUnsolvable,
    StructuralViolation,
    ZeroFollowerPole,
)
from .graph import CommGraph, structural_report
from .spectral import match_multisets, spectrum

POLICIES = ("tree-unique", "min-norm", "pinned")
KERNEL_TOL = 1e-9
SPECTRUM_TOL = 1e-6


@dataclass(frozen=True)
class PoleSpec:
    """Follower poles; the structural leader pole at 0 is implicit."""

    lambdas: tuple[float, ...]

    def __post_init__(self):
        lam = tuple(float(x) for x in self.lambdas)
        object.__setattr__(self, "lambdas", lam)
        if any(x == 0.0 for x in lam):
            raise ZeroFollowerPole("follower poles must be nonzero; 0 is reserved for the leader")
        if any(x > 0 for x in lam):
            warnings.warn(
                f"unstable follower poles requested: {[x for x in lam if x > 0]}",
                RuntimeWarning,
                stacklevel=3,
            )

    def __len__(self):
        return len(self.lambdas)

    @property
    def full(self) -> tuple[float, ...]:
        return self.lambdas + (0.0,)


@dataclass(frozen=True)
class Formation:
    """Absolute target positions along one axis, index ``i-1`` for agent ``i``."""

    F: np.ndarray
    axis: str = "x"

    def __post_init__(self):
        object.__setattr__(self, "F", np.asarray(self.F, dtype=float).reshape(-1))

    def __len__(self):
        return self.F.size

    def __getitem__(self, agent: int) -> float:
        return float(self.F[agent - 1])

    @property
    def zero_agents(self) -> list[int]:
        return [i + 1 for i in np.flatnonzero(self.F == 0.0)]


@dataclass
class GainSet:
    """Closed-loop diagonal plus sparse inter-agent gains.

    ``betas[(i, j)]`` is the gain agent ``i`` applies to ``x_j``.
    """

    n: int
    leader: int
    diag: dict[int, float]
    betas: dict[tuple[int, int], float] = field(default_factory=dict)

    @property
    def alphas(self) -> dict[int, float]:
        """Self-feedback gains ``alpha_i = -a_ii``."""
        return {i: (-a if a != 0 else 0.0) for i, a in self.diag.items()}

    def row(self, i: int) -> dict[int, float]:
        return {j: b for (r, j), b in sorted(self.betas.items()) if r == i}

    def table(self) -> list[dict]:
        """One record per agent: diagonal entry, alpha and its beta row."""
        return [
            {
                "agent": i,
                "a_ii": self.diag.get(i),
                "alpha": self.alphas.get(i),
                "betas": self.row(i),
            }
            for i in range(1, self.n + 1)
        ]

    def copy(self) -> "GainSet":
        return GainSet(self.n, self.leader, dict(self.diag), dict(self.betas))


def _formation_vector(F, n: int) -> np.ndarray:
    vec = F.F if isinstance(F, Formation) else np.asarray(F, dtype=float).reshape(-1)
    if vec.size != n:
        raise ValueError(f"formation has {vec.size} entries, graph has {n} agents")
    return vec


def assign_diagonal(
    g: CommGraph,
    poles: PoleSpec | Sequence[float],
    assignment: Mapping[int, float] | None = None,
) -> GainSet:
    """Put the requested poles on the follower diagonal.

    By default the poles are sorted in descending order and handed to the
    followers in ascending label order. ``assignment`` overrides this with an
    explicit ``agent -> pole`` map, which must use exactly the multiset of
    ``poles``.

    Raises
    ------
    StructuralViolation
        No rooted spanning tree, or a directed cycle is present.
    PoleCountMismatch, ZeroFollowerPole
    """
    rep = structural_report(g)
    if not rep.spanning_tree:
        raise StructuralViolation("some agents are not reachable from the leader")
    if not rep.acyclic:
        raise StructuralViolation(
            f"directed cycle {list(rep.cycle)}: closed-loop poles would depend on the betas"
        )
    if not isinstance(poles, PoleSpec):
        poles = PoleSpec(tuple(poles))
    if len(poles) != g.n - 1:
        raise PoleCountMismatch(f"need {g.n - 1} follower poles, got {len(poles)}")

    followers = g.followers
    if assignment is None:
        values = sorted(poles.lambdas, reverse=True)
        diag = dict(zip(followers, values))
    else:
        assignment = {int(k): float(v) for k, v in assignment.items()}
        if sorted(assignment) != followers:
            raise PoleCountMismatch(f"assignment must cover followers {followers}, got {sorted(assignment)}")
        if sorted(assignment.values()) != sorted(poles.lambdas):
            raise PoleCountMismatch("assignment does not use the requested pole multiset")
        diag = dict(assignment)
    diag[g.leader] = 0.0
    return GainSet(n=g.n, leader=g.leader, diag=dict(sorted(diag.items())))


def row_betas(
    a_ii: float,
    f_i: float,
    neighbor_targets: Mapping[int, float],
    policy: str = "min-norm",
    pinned: Mapping[int, float] | None = None,
    agent: int | None = None,
) -> dict[int, float]:
    """Solve one row ``a_ii f_i + sum_j beta_ij f_j = 0`` for the betas.

    This is the only information an agent needs, which is what lets the
    distributed protocol call it with purely local data.
    """
    nbrs = sorted(neighbor_targets)
    rhs = -a_ii * f_i
    if policy == "tree-unique":
        if len(nbrs) != 1:
            raise PolicyMismatch(f"agent {agent}: tree-unique needs exactly one neighbour, has {len(nbrs)}")
    elif policy == "pinned":
        pinned = dict(pinned or {})
        extra = set(pinned) - set(nbrs)
        if extra:
            raise PinnedInconsistent(f"agent {agent}: pinned gains on non-neighbours {sorted(extra)}")
        rhs -= sum(pinned[j] * neighbor_targets[j] for j in pinned)
        free = [j for j in nbrs if j not in pinned]
        if not free:
            if abs(rhs) > KERNEL_TOL * max(1.0, abs(a_ii * f_i)):
                raise PinnedInconsistent(f"agent {agent}: pinned gains leave residual {rhs:g}")
            return {j: float(pinned[j]) for j in nbrs}
        out = {j: float(pinned[j]) for j in pinned}
        try:
            out.update(_min_norm({j: neighbor_targets[j] for j in free}, rhs, agent))
        except RowUnsolvable as exc:
            raise PinnedInconsistent(str(exc)) from exc
        return dict(sorted(out.items()))
    elif policy != "min-norm":
        raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")

    if not nbrs:
        raise RowUnsolvable(f"agent {agent} has no in-neighbours", agent=agent)
    return _min_norm({j: neighbor_targets[j] for j in nbrs}, rhs, agent)


def _min_norm(targets: Mapping[int, float], rhs: float, agent) -> dict[int, float]:
    nbrs = sorted(targets)
    f = np.array([targets[j] for j in nbrs], dtype=float)
    if len(nbrs) == 1:
        # same expression as the closed form so both policies agree bit for bit
        if f[0] == 0.0:
            if rhs == 0.0:
                return {nbrs[0]: 0.0}
            raise RowUnsolvable(f"agent {agent}: neighbour {nbrs[0]} has target 0", agent=agent)
        return {nbrs[0]: float(rhs / f[0])}
    norm2 = float(f @ f)
    if norm2 == 0.0:
        if rhs == 0.0:
            return dict.fromkeys(nbrs, 0.0)
        raise RowUnsolvable(f"agent {agent}: every neighbour target is 0", agent=agent)
    beta = rhs * f / norm2
    return {j: float(b) for j, b in zip(nbrs, beta)}


def solve_betas(
    g: CommGraph,
    gains: GainSet,
    F,
    policy: str = "min-norm",
    pinned: Mapping[tuple[int, int], float] | None = None,
) -> GainSet:
    """Fill the inter-agent gains so that ``A F = 0``.

    Parameters
    ----------
    policy : {"tree-unique", "min-norm", "pinned"}
        ``tree-unique`` is the closed form for single-neighbour rows,
        ``min-norm`` picks the least-norm solution of each row, ``pinned``
        keeps user-chosen gains from ``pinned`` and min-norms the rest.

    Raises
    ------
    RowUnsolvable, PolicyMismatch, PinnedInconsistent
    """
    f = _formation_vector(F, g.n)
    missing = [i for i in g.agents if i not in gains.diag]
    if missing:
        raise IncompleteGains(f"diagonal not assigned for agents {missing}")
    pinned = {(int(i), int(j)): float(v) for (i, j), v in (pinned or {}).items()}
    for i, j in pinned:
        if (j, i) not in g.edges:
            raise PinnedInconsistent(f"pinned beta_{i}{j} is not on an edge {j}->{i}")
        if i == g.leader:
            raise PinnedInconsistent("the leader takes no feedback")

    out = gains.copy()
    out.betas = {}
    for i in g.followers:
        nbrs = {j: float(f[j - 1]) for j in g.in_neighbors(i)}
        row_pins = {j: v for (r, j), v in pinned.items() if r == i}
        row_policy = "pinned" if policy == "pinned" and row_pins else ("min-norm" if policy == "pinned" else policy)
        row = row_betas(gains.diag[i], float(f[i - 1]), nbrs, row_policy, row_pins, agent=i)
        out.betas.update({(i, j): b for j, b in row.items()})
    return out


def build_closed_loop(g: CommGraph, gains: GainSet) -> np.ndarray:
    """Assemble ``A`` with ``a_ii`` on the diagonal and ``beta_ij`` at ``(i, j)``.

    Raises
    ------
    IncompleteGains
        A diagonal entry or the gain of some edge is missing.
    """
    missing_diag = [i for i in g.agents if i not in gains.diag]
    if missing_diag:
        raise IncompleteGains(f"diagonal not assigned for agents {missing_diag}")
    A = np.zeros((g.n, g.n))
    for i in g.agents:
        A[i - 1, i - 1] = gains.diag[i]
    for (i, j), b in gains.betas.items():
        if (j, i) not in g.edges:
            raise ValueError(f"beta_{i}{j} given but {j}->{i} is not an edge")
        A[i - 1, j - 1] = b
    missing = [(i, j) for j, i in g.sorted_edges() if i != g.leader and (i, j) not in gains.betas]
    if missing:
        raise IncompleteGains(f"no gain for edges {missing}")
    return A


@dataclass(frozen=True)
class FormationReport:
    kernel_residual: float
    spectrum: np.ndarray
    expected: np.ndarray | None
    max_pole_error: float | None
    tol: float

    @property
    def kernel_ok(self) -> bool:
        return self.kernel_residual < KERNEL_TOL

    @property
    def spectrum_matches(self) -> bool | None:
        if self.max_pole_error is None:
            return None
        return self.max_pole_error <= self.tol

    @property
    def ok(self) -> bool:
        return self.kernel_ok and self.spectrum_matches is not False

    def as_dict(self) -> dict:
        return {
            "kernel_residual": self.kernel_residual,
            "kernel_ok": self.kernel_ok,
            "spectrum": [_cplx(z) for z in self.spectrum],
            "expected": None if self.expected is None else [_cplx(z) for z in self.expected],
            "max_pole_error": self.max_pole_error,
            "spectrum_matches": self.spectrum_matches,
        }


def _cplx(z):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def verify_formation(A, F, poles=None, tol: float = SPECTRUM_TOL) -> FormationReport:
    """Check ``A F = 0`` and compare the spectrum of ``A`` with ``poles + {0}``.

    ``poles`` may be a :class:`PoleSpec` or a plain sequence of the ``n - 1``
    follower poles (complex values allowed); ``None`` skips the comparison.
    """
    A = np.asarray(A, dtype=float)
    f = _formation_vector(F, A.shape[0])
    residual = float(np.max(np.abs(A @ f))) if f.size else 0.0
    ev = spectrum(A)
    expected = err = None
    if poles is not None:
        lam = poles.full if isinstance(poles, PoleSpec) else tuple(poles) + (0.0,)
        if len(lam) != A.shape[0]:
            raise PoleCountMismatch(f"need {A.shape[0] - 1} follower poles, got {len(lam) - 1}")
        expected, err = match_multisets(ev, lam)
    return FormationReport(residual, ev, expected, err, tol)


def synthesize(
    g: CommGraph,
    poles,
    F,
    policy: str = "min-norm",
    pinned=None,
    assignment=None,
) -> tuple[GainSet, np.ndarray]:
    """Diagonal assignment, gain solve and assembly in one call."""
    gains = solve_betas(g, assign_diagonal(g, poles, assignment), F, policy, pinned)
    return gains, build_closed_loop(g, gains)
