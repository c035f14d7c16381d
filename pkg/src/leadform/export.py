"""CSV and SVG output for trajectories."""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .sim import Trajectory  # noqa: E402

# fixed metadata and hash salt keep SVG output reproducible
_SVG_META = {"Date": None, "Creator": "leadform"}
plt.rcParams["svg.hashsalt"] = "leadform"


def trajectory_csv(traj: Trajectory) -> str:
    """Header ``t,agent_1,...,agent_n`` then one row per sample."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"agent_{i}" for i in range(1, traj.n + 1)])
    for t, row in zip(traj.times, traj.states):
        w.writerow([repr(float(t))] + [repr(float(v)) for v in row])
    return buf.getvalue()


def write_csv(traj: Trajectory, path) -> Path:
    path = Path(path)
    path.write_text(trajectory_csv(traj))
    return path


def read_csv(path):
    """Inverse of :func:`write_csv`: returns ``(times, states)`` as lists."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    body = [[float(v) for v in r] for r in rows[1:]]
    return [r[0] for r in body], [r[1:] for r in body]


def plot_positions(traj: Trajectory, path, F=None, title=None) -> Path:
    """Line chart of every agent's position against time."""
    fig, ax = plt.subplots(figsize=(7, 4))
    for i in range(traj.n):
        label = f"agent {i + 1}" + (" (leader)" if i + 1 == traj.leader else "")
        ax.plot(traj.times, traj.states[:, i], label=label, lw=1.2)
    if F is not None:
        for v in getattr(F, "F", F):
            ax.axhline(float(v), color="0.7", lw=0.6, ls="--")
    for b in traj.meta.get("segments", []):
        ax.axvline(b, color="k", lw=0.6, ls=":")
    ax.set_xlabel("t [s]")
    ax.set_ylabel(f"position ({traj.axis})")
    ax.set_title(title or f"agent positions, axis {traj.axis}")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    return _save(fig, path)


def plot_paths(
    tx: Trajectory,
    ty: Trajectory,
    path,
    formations: Sequence[tuple[Sequence[float], Sequence[float]]] = (),
    title=None,
) -> Path:
    """2-D agent paths; each entry of ``formations`` is outlined as a closed polygon.

    The outlines are written as SVG groups ``formation-1``, ``formation-2``...
    """
    fig, ax = plt.subplots(figsize=(6, 5))
    for i in range(tx.n):
        ax.plot(tx.states[:, i], ty.states[:, i], lw=1.0, label=f"agent {i + 1}")
        ax.plot(tx.states[-1, i], ty.states[-1, i], "o", ms=4, color="k")
    for k, (fx, fy) in enumerate(formations, start=1):
        xs = list(fx) + [fx[0]]
        ys = list(fy) + [fy[0]]
        (line,) = ax.plot(xs, ys, "--", color="0.3", lw=1.0)
        line.set_gid(f"formation-{k}")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel(tx.axis)
    ax.set_ylabel(ty.axis)
    ax.set_title(title or "agent paths")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def _save(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, format="svg", metadata=_SVG_META)
    plt.close(fig)
    return path
