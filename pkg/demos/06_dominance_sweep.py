"""A desk-scale dominance sweep, end to end.

Sweeps a coarse high-(p,q) grid, classifies each cell by the two-round
protocol, and writes the results/dominance CSVs that the figure renderer
(frontend/) turns into the region maps. Rerunning with the same seed
reproduces the CSVs byte for byte.
"""

import os

from tracerace.harness import GridSpec, dominance_map, sweep_two_policy
from tracerace.reporting import write_dominance_csv, write_results_csv

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

spec = GridSpec(
    p_start=0.70, p_stop=0.95, p_step=0.05,
    q_start=0.70, q_stop=0.95, q_step=0.05,
    round1_n=20_000, d_threshold=0.01, master_seed=2024,
)
results = sweep_two_policy(spec, checkpoint_dir=os.path.join(OUT, "checkpoint"))

dmap = dominance_map(results)
print("q ->", " ".join(f"{q:4.2f}" for q in spec.q_values()))
codes = {"winner-ascending-time": "A", "winner-descending-time": "D",
         "no-confidence-below-threshold-d": ".", "no-confidence-failed-bound": "?"}
for p in spec.p_values():
    row = " ".join(f"{codes[dmap.cells[(p, q)]]:>4}" for q in spec.q_values())
    print(f"p={p:4.2f}", row)

write_results_csv(os.path.join(OUT, "results.csv"), results)
write_dominance_csv(os.path.join(OUT, "dominance.csv"), results)
print(f"\nwrote {OUT}/results.csv and {OUT}/dominance.csv")
print("render with:  cd frontend && npm run render -- "
      f"--input ../demos/out/dominance.csv --kind dominance-map --output map.png")
