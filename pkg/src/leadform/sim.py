"""Fixed-step RK4 simulation of ``x' = A x + e_leader v(t, x)``."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, SignalBelowFloor, UnstableStep

# RK4 stability interval on the negative real axis is about [-2.785, 0]
RK4_REAL_BOUND = 2.785
DT_MIN, DT_MAX = 1e-4, 1e-1
MODES = ("proportional", "withdraw_at", "withdraw_on_converge", "hold", "none")


@dataclass(frozen=True)
class LeaderLaw:
    """External input on the leader.

    ``proportional`` applies ``v = gain * (target - x_leader)`` throughout;
    ``withdraw_at`` does the same until ``t_off``; ``withdraw_on_converge``
    until ``|target - x_leader| < tol``. ``hold`` places the leader at the
    target at ``t = 0`` (an ideal position-controlled leader) and ``none``
    applies no input at all. ``gain=None`` means "pick a default from A".
    """

    target: float = 0.0
    mode: str = "proportional"
    gain: float | None = None
    t_off: float | None = None
    tol: float = 1e-6

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown leader mode {self.mode!r}")
        if self.gain is not None and self.gain <= 0 and self.mode not in ("hold", "none"):
            raise ValueError("leader gain must be positive")
        if self.mode == "withdraw_at" and self.t_off is None:
            raise ValueError("withdraw_at needs t_off")


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (len(times), n)
    inputs: np.ndarray  # leader input at each sample
    leader: int
    axis: str = "x"
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.states.shape[1]

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def error(self, F) -> np.ndarray:
        return self.states - np.asarray(F, dtype=float)[None, :]


def _fastest_rate(A: np.ndarray) -> float:
    ev = np.linalg.eigvals(A)
    mags = np.abs(ev[np.abs(ev) > 1e-12])
    return float(mags.max()) if mags.size else 0.0


def default_leader_gain(A) -> float:
    """Leader gain equal to the fastest closed-loop rate (1.0 if all poles are 0)."""
    r = _fastest_rate(np.asarray(A, dtype=float))
    return r if r > 0 else 1.0


def default_dt(A, law: LeaderLaw | None = None) -> float:
    """``0.1 / rate`` clamped to ``[1e-4, 1e-1]``.

    ``rate`` is the larger of the fastest pole and ``|A|_2``: RK4 truncation
    error follows ``|A dt|``, which the eigenvalues understate for
    non-normal matrices (large inter-agent gains).
    """
    A = np.asarray(A, dtype=float)
    rate = max(_fastest_rate(A), float(np.linalg.norm(A, 2)) if A.size else 0.0)
    if law is not None and law.mode in ("proportional", "withdraw_at", "withdraw_on_converge"):
        rate = max(rate, law.gain if law.gain is not None else default_leader_gain(A))
    if rate == 0:
        return DT_MAX
    return float(np.clip(0.1 / rate, DT_MIN, DT_MAX))


def _effective(A: np.ndarray, leader: int, k: float) -> np.ndarray:
    M = A.copy()
    M[leader - 1, leader - 1] -= k
    return M


def simulate(
    A,
    x0,
    law: LeaderLaw | None = None,
    dt: float | None = None,
    T: float = 10.0,
    leader: int | None = None,
    axis: str = "x",
    t0: float = 0.0,
) -> Trajectory:
    """Integrate the closed loop with classical RK4.

    Parameters
    ----------
    A : (n, n) array_like
        Closed-loop matrix; the leader row is expected to be zero.
    x0 : (n,) array_like
    law : LeaderLaw, optional
        Defaults to no input.
    dt : float, optional
        Largest allowed step, see :func:`default_dt`. It is shrunk slightly
        when needed so that a whole number of steps ends exactly at ``T``.
    leader : int, optional
        1-based leader label, defaults to ``n``.

    Raises
    ------
    DimensionMismatch, UnstableStep
    """
    A = np.asarray(A, dtype=float)
    x = np.array(x0, dtype=float).reshape(-1)
    n = A.shape[0]
    if A.shape != (n, n) or x.size != n:
        raise DimensionMismatch(f"A is {A.shape}, x0 has {x.size} entries")
    leader = n if leader is None else int(leader)
    law = law or LeaderLaw(mode="none")
    k = 0.0
    if law.mode in ("proportional", "withdraw_at", "withdraw_on_converge"):
        k = law.gain if law.gain is not None else default_leader_gain(A)
    if dt is None:
        dt = default_dt(A, law if k else None)
    if dt <= 0:
        raise ValueError("dt must be positive")
    steps = max(1, int(np.ceil(T / dt - 1e-9)))
    dt = T / steps
    A_on = _effective(A, leader, k)
    stiff = max(_fastest_rate(A_on), _fastest_rate(A))
    if dt * stiff > RK4_REAL_BOUND:
        raise UnstableStep(f"dt={dt:g} too large for rate {stiff:g} (need dt <= {RK4_REAL_BOUND / stiff:g})")

    e = np.zeros(n)
    e[leader - 1] = 1.0
    u = law.target * k * e  # constant part of the input
    if law.mode == "hold":
        x[leader - 1] = law.target

    times = t0 + dt * np.arange(steps + 1)
    states = np.empty((steps + 1, n))
    inputs = np.zeros(steps + 1)
    states[0] = x
    active = k > 0
    for s in range(steps):
        t = times[s]
        if law.mode == "withdraw_on_converge" and active and abs(law.target - x[leader - 1]) < law.tol:
            active = False
        if law.mode == "withdraw_at" and active and t >= law.t_off - 1e-12 * max(1.0, abs(t)):
            active = False
        if active:
            inputs[s] = k * (law.target - x[leader - 1])
            M, c = A_on, u
        else:
            M, c = A, 0.0
        k1 = M @ x + c
        k2 = M @ (x + 0.5 * dt * k1) + c
        k3 = M @ (x + 0.5 * dt * k2) + c
        k4 = M @ (x + dt * k3) + c
        x = x + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        states[s + 1] = x
    if active:
        inputs[-1] = k * (law.target - x[leader - 1])
    return Trajectory(times, states, inputs, leader, axis, {"dt": dt, "leader_gain": k, "mode": law.mode})


def simulate_segments(
    segments: Sequence[tuple[np.ndarray, LeaderLaw, float]],
    x0,
    dt: float,
    leader: int | None = None,
    axis: str = "x",
) -> Trajectory:
    """Chain simulations with state continuity, e.g. to swap gains on retarget.

    Each segment is ``(A, law, duration)``; the gains and leader target are
    swapped instantly at segment boundaries.
    """
    parts = []
    x = np.asarray(x0, dtype=float)
    t = 0.0
    for A, law, duration in segments:
        tr = simulate(A, x, law, dt=dt, T=duration, leader=leader, axis=axis, t0=t)
        parts.append(tr if not parts else _drop_first(tr))
        x = tr.final
        t = float(tr.times[-1])
    times = np.concatenate([p.times for p in parts])
    states = np.vstack([p.states for p in parts])
    inputs = np.concatenate([p.inputs for p in parts])
    boundaries = [float(p.times[-1]) for p in parts[:-1]]
    return Trajectory(times, states, inputs, parts[0].leader, axis, {"dt": dt, "segments": boundaries})


def _drop_first(tr: Trajectory) -> Trajectory:
    return Trajectory(tr.times[1:], tr.states[1:], tr.inputs[1:], tr.leader, tr.axis, tr.meta)


def simulate_nd(systems, x0s, laws, dt: float | None = None, T: float = 10.0, axes=None, leader=None):
    """Simulate independent axes on a shared time base.

    ``dt`` defaults to the smallest per-axis default so every axis uses the
    same grid.
    """
    systems = [np.asarray(A, dtype=float) for A in systems]
    if not (len(systems) == len(x0s) == len(laws)):
        raise DimensionMismatch("need one x0 and one law per axis")
    if len({A.shape for A in systems}) > 1:
        raise DimensionMismatch("all axes must have the same number of agents")
    axes = axes or [f"axis{k}" for k in range(len(systems))]
    if dt is None:
        dt = min(default_dt(A, law) for A, law in zip(systems, laws))
    return [simulate(A, x0, law, dt, T, leader, ax) for A, x0, law, ax in zip(systems, x0s, laws, axes)]


@dataclass(frozen=True)
class RateFit:
    rates: dict[int, float]
    window: tuple[float, float]

    @property
    def slowest(self) -> float:
        vals = [r for r in self.rates.values() if np.isfinite(r)]
        return min(vals)


def fit_rates(traj: Trajectory, F, t_start: float | None = None, floor: float = 1e-10) -> RateFit:
    """Exponential decay rate of ``|x_i - f_i|`` for each follower.

    A least-squares line is fitted to ``log|x_i - f_i|`` over
    ``[t_start, t_end]`` (default: second half of the run), ignoring samples
    at or below ``floor * max(1, |F|_inf)``. Followers without enough signal
    get ``nan``.

    Raises
    ------
    SignalBelowFloor
        When no follower has a usable error signal.
    """
    f = np.asarray(getattr(F, "F", F), dtype=float)
    t = traj.times
    if t_start is None:
        t_start = t[0] + 0.5 * (t[-1] - t[0])
    mask = t >= t_start
    thresh = floor * max(1.0, float(np.max(np.abs(f))) if f.size else 1.0)
    rates = {}
    for i in range(1, traj.n + 1):
        if i == traj.leader:
            continue
        err = np.abs(traj.states[mask, i - 1] - f[i - 1])
        ok = err > thresh
        if ok.sum() < 3:
            rates[i] = float("nan")
            continue
        slope = np.polyfit(t[mask][ok], np.log(err[ok]), 1)[0]
        rates[i] = float(-slope)
    if all(np.isnan(r) for r in rates.values()):
        raise SignalBelowFloor("tracking error is already at the numerical floor")
    return RateFit(rates, (float(t_start), float(t[-1])))


def settling_time(traj: Trajectory, F, rel_tol: float = 1e-3) -> float | None:
    """First time after which ``|x - F|_inf`` stays below ``rel_tol * |F|_inf``."""
    f = np.asarray(getattr(F, "F", F), dtype=float)
    bound = rel_tol * max(float(np.max(np.abs(f))), np.finfo(float).tiny)
    err = np.max(np.abs(traj.states - f[None, :]), axis=1)
    bad = np.flatnonzero(err >= bound)
    if bad.size == 0:
        return float(traj.times[0])
    if bad[-1] == err.size - 1:
        return None
    return float(traj.times[bad[-1] + 1])
