"""
A hexagon that follows its leader
=================================

Two independent axes, a leader retarget half way, and gains recomputed by
the protocol at the switch. Writes CSV and SVG files to ``demo_output/``.
"""

from pathlib import Path

import numpy as np

from leadform.export import plot_paths, plot_positions, write_csv
from leadform.scenario import load_scenario, simulate_scenario

here = Path(__file__).resolve().parent
out = here / "demo_output"
out.mkdir(exist_ok=True)

scn = load_scenario(here.parent / "scenarios" / "hexagon.yaml")
rx, ry = simulate_scenario(scn)

for r in (rx, ry):
    write_csv(r.trajectory, out / f"trajectory_{r.axis}.csv")
    plot_positions(r.trajectory, out / f"positions_{r.axis}.svg", r.final_F)

shapes = [(rx.solutions[k].F, ry.solutions[k].F) for k in range(2)]
plot_paths(rx.trajectory, ry.trajectory, out / "paths.svg", shapes)

start = np.stack([rx.solutions[0].F, ry.solutions[0].F], axis=1)
end = np.stack([rx.trajectory.final, ry.trajectory.final], axis=1)
print("translation per agent\n", np.round(end - start, 5))
