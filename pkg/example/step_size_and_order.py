"""Benchmark #5: sensitivity of the safe interval to integration step and order.

The safe interval is set by the dynamics (the stable equilibrium and the
basin of the held-input loop), and the enclosures stay tight until the
step reaches about half the period.
"""
from pathlib import Path

import numpy as np

from saw import Grid, analyze, read_model

model = read_model(Path(__file__).parent / "model5.txt")
grid = Grid.of(model)


def hull(gi):
    ids = gi.indices()
    if ids.size == 0:
        return "empty"
    return f"[{grid.edges[0][ids.min()]:.2f}, {grid.edges[0][ids.max() + 1]:.2f}]"


for order in (2, 4):
    for h in (0.1, 0.3, 0.8, 1.6):
        res = analyze(model.replace(step_size=h), order=order)
        print(f"order {order}  h={h:<4}  |Gamma_I|={len(res.gamma_i):3d}  {hull(res.gamma_i):16s} "
              f"{res.verdict.result}")

# the end boxes do get wider with h, just not enough to lose a cell
from saw.reach import Reach

lo, hi = grid.cell_bounds
for h in (0.1, 0.3):
    r = Reach(model.replace(step_size=h)).flowpipe_batch(lo, hi, 0, keep_segments=False)
    print(f"h={h}: mean end-box width {np.mean(r.end_hi - r.end_lo):.6f}")
