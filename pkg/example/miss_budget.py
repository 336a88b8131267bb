"""How the safe region shrinks as more deadline misses are allowed.

The one-step graph does not depend on (m, K), so it is built once and the
cheap graph stages are re-run for every constraint.
"""
from pathlib import Path

from saw import build_one_step, inductiveness, local_safety, read_model

model = read_model(Path(__file__).parent / "model1.txt")
g1 = build_one_step(model)

print(" m  K  |Gamma_S|  |Gamma_I|")
prev = None
for K in (5, 9):
    prev = None
    for m in range(0, 5):
        gs, gk = local_safety(g1, m, K)
        gi = inductiveness(gk, gs)
        print(f"{m:2d} {K:2d}  {len(gs):8d}  {len(gi):8d}")
        if prev is not None:
            assert gi.issubset(prev)  # more misses never help
        prev = gi
