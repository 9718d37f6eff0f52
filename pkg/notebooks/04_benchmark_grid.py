"""
Benchmark grid and reports
==========================

Run a scenario x size x policy x seed grid, normalize against FCFS and write
the CSV summaries. ``hpcsched bench`` does the same from the shell.
"""

import csv
import tempfile
from pathlib import Path

from hpcsched.agent import ProviderConfig
from hpcsched.bench import emit_report, run_grid

out = Path(tempfile.mkdtemp(prefix="hpcsched-grid-"))
grid = run_grid(
    scenarios=["HomogeneousShort", "LongJobDominant", "Adversarial"],
    sizes=[10, 20],
    policies=["fcfs", "sjf", "exact", "react"],
    seeds=[1, 2, 3],
    output_dir=out,
    provider=ProviderConfig(),  # offline greedy-sjf-text mock
)
print(len(grid.results), "runs written to", out)
for msg in grid.refusals[:3]:
    print("refused:", msg)

paths = emit_report(grid.results, out)
with open(paths["normalized_summary"], newline="") as fh:
    for row in csv.DictReader(fh):
        print(f"{row['policy']:24s} {row['scenario']:17s} n={row['num_jobs']:>3s} "
              f"makespan={float(row['makespan']):.3f} avg_wait={row['avg_wait']}")
print(open(paths["overhead_summary"]).read())
