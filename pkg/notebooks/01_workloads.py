"""
Synthetic workloads
===================

Generate each of the seven scenario families and look at what they contain.
"""

import numpy as np

from hpcsched import ClusterConfig, Scenario, ScenarioSpec, generate_workload

cluster = ClusterConfig()
print(f"cluster: {cluster.total_nodes} nodes, {cluster.total_memory_gb} GB")

# A workload is fully determined by (scenario, num_jobs, seed).
for kind in Scenario:
    jobs = generate_workload(ScenarioSpec(kind, 60, seed=1), cluster)
    walls = np.array([j.walltime for j in jobs])
    nodes = np.array([j.nodes for j in jobs])
    print(
        f"{kind.value:18s} walltime mean={walls.mean():9.1f} max={walls.max():7d}  "
        f"nodes mean={nodes.mean():6.1f} max={nodes.max():4d}"
    )

# The heterogeneous mix draws walltimes from Gamma(1.5, 300), so a large
# sample should have a mean near 450 s.
big = generate_workload(ScenarioSpec("HeterogeneousMix", 2000, seed=7))
print("HeterogeneousMix mean walltime over 2000 jobs:", np.mean([j.walltime for j in big]))

# Same seed, same bytes.
a = generate_workload(ScenarioSpec("BurstyIdle", 10, seed=3))
b = generate_workload(ScenarioSpec("BurstyIdle", 10, seed=3))
print("deterministic:", a == b)
for j in a[:4]:
    print(j)
