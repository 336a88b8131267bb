"""Benchmark #1 stage by stage: one-step graph, K-step graph, closed subgraph.

Same pipeline as ``saw example/model1.txt`` but with the intermediate
objects kept around so they can be poked at.
"""
from pathlib import Path

import numpy as np

from saw import (Grid, build_one_step, check_initial, inductiveness, local_safety,
                 read_model, render_svg, render_text)

here = Path(__file__).parent
model = read_model(here / "model1.txt")
print("states", model.state_names, "inputs", model.input_names)
print("period", model.period, "step", model.step_size, "(m, K) =", (model.m, model.K))

grid = Grid.of(model)
print(grid.size, "cells of width", grid.widths)

# %% one-step graph: every cell, once with the control applied and once with a miss
g1 = build_one_step(model)
print("edges:", g1.edge_count)
print("unsafe (cell, event) pairs:", g1.unsafe.sum(axis=0), "for (meet, miss)")

# a cell near the corner drifts out of the box when the control is missed
corner = grid.flat_index((49, 49))
print("corner cell", grid.cell_box(corner), "unsafe:", g1.unsafe[corner])

# the origin cell maps onto a handful of neighbours
centre = grid.flat_index((25, 25))
print("successors of", grid.cell_box(centre), "->", g1.successor_ids(centre, 0))

# %% K-step graph under adversarial misses, then the largest closed subset
gamma_s, gk = local_safety(g1, model.m, model.K)
gamma_i = inductiveness(gk, gamma_s)
print("locally safe:", len(gamma_s), " inductive:", len(gamma_i))

verdict = check_initial(model, gamma_i, edges=g1.edge_count, start_region=gk.start_region,
                        end_region=gk.end_region, k_edges=gk.edge_count,
                        safe_region=len(gamma_i))
print(render_text(verdict))

# how far does the safe region reach along each axis?
mask = gamma_i.to_mask().reshape(model.grid_count, model.grid_count)
rows = np.flatnonzero(mask.any(axis=1))
print("x1 range covered:", grid.edges[0][rows.min()], grid.edges[0][rows.max() + 1])

render_svg(model, gamma_s, gamma_i, "benchmark1.svg")
print("wrote benchmark1.svg")
