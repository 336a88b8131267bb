"""Sampled trajectories from the computed safe set never leave the safe box.

A plain RK4 simulation (no validation) under random admissible miss
patterns; a quick sanity check to run after changing the engine.
"""
from pathlib import Path

import numpy as np

from saw import Grid, analyze, read_model
from saw.oracle import sample_admissible_pattern, simulate

model = read_model(Path(__file__).parent / "model1.txt")
res = analyze(model)

rng = np.random.default_rng(0)
lo, hi = Grid.of(model).cell_bounds
cells = rng.choice(res.gamma_i.indices(), 200)
x0 = rng.uniform(lo[cells], hi[cells])
periods = 10 * model.K
sigma = np.stack([sample_admissible_pattern(model.m, model.K, periods, s) for s in range(200)])

tr = simulate(model, x0, sigma, periods)
print("escaped:", tr.left.sum(), "of", len(x0))
print("mean miss rate:", sigma.mean().round(3))

