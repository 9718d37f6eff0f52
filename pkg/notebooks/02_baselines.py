"""
Baseline schedulers
===================

FCFS, SJF and the exact makespan solver on the same small instance, plus the
convoy effect that motivates moving away from FCFS.
"""

from hpcsched import ClusterConfig, ScenarioSpec, compute_metrics, generate_workload
from hpcsched.policies import exact_min_makespan, fcfs_schedule, makespan, sjf_schedule
from hpcsched.sim import audit_schedule

cluster = ClusterConfig()
jobs = generate_workload(ScenarioSpec("HighParallelism", 8, seed=2))

schedules = {
    "fcfs": fcfs_schedule(jobs, cluster),
    "sjf": sjf_schedule(jobs, cluster),
    "exact": exact_min_makespan(jobs, cluster),
}
for name, sched in schedules.items():
    assert audit_schedule(jobs, sched, cluster) == []
    m = compute_metrics(jobs, sched, cluster)
    print(f"{name:6s} makespan={m.makespan:8.0f} avg_wait={m.avg_wait:8.1f} node_util={m.node_utilization:.3f}")

# %%
# Convoy effect: one 100000 s job holds half the machine and, under strict
# head-of-line FCFS, nothing behind a blocked head may start.
adv = generate_workload(ScenarioSpec("Adversarial", 20, seed=1))
for name, policy in (("fcfs", fcfs_schedule), ("sjf", sjf_schedule)):
    m = compute_metrics(adv, policy(adv, cluster), cluster)
    print(f"Adversarial {name}: avg_wait={m.avg_wait:.1f} jain_job={m.jain_job:.3f}")

# %%
# Long-job dominant workloads: SJF should cut the average wait.
for seed in range(1, 6):
    w = generate_workload(ScenarioSpec("LongJobDominant", 20, seed))
    f = compute_metrics(w, fcfs_schedule(w, cluster), cluster).avg_wait
    s = compute_metrics(w, sjf_schedule(w, cluster), cluster).avg_wait
    print(f"seed {seed}: FCFS wait {f:9.1f}  SJF wait {s:9.1f}  makespan SJF/FCFS "
          f"{makespan(w, sjf_schedule(w, cluster)) / makespan(w, fcfs_schedule(w, cluster)):.3f}")
