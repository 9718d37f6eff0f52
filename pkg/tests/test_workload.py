import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hpcsched.workload import (
    ClusterConfig,
    JobSpec,
    Scenario,
    ScenarioSpec,
    WorkloadError,
    dumps_workload,
    generate_workload,
    loads_workload,
    make_rng,
    read_workload,
    round_half_up,
    sample_gamma,
    write_workload,
)


def test_adversarial_blocking_job():
    jobs = generate_workload(ScenarioSpec(Scenario.ADVERSARIAL, 5, seed=1))
    assert (jobs[0].nodes, jobs[0].walltime, jobs[0].memory_gb) == (128, 100000, 1024)
    for j in jobs[1:]:
        assert (j.nodes, j.walltime, j.memory_gb) == (1, 60, 2)


def test_homogeneous_short_ranges():
    jobs = generate_workload(ScenarioSpec("HomogeneousShort", 10, seed=42))
    assert len(jobs) == 10
    assert all(j.nodes == 2 and j.memory_gb == 4 and 30 <= j.walltime <= 120 for j in jobs)


def test_heterogeneous_mix_mean_walltime():
    jobs = generate_workload(ScenarioSpec("HeterogeneousMix", 100, seed=7))
    mean = np.mean([j.walltime for j in jobs])
    assert 0.75 * 450 <= mean <= 1.25 * 450


@pytest.mark.parametrize(
    "kind, check",
    [
        ("HeterogeneousMix", lambda j: j.nodes in {2**k for k in range(9)}
         and j.memory_gb // j.nodes in {1, 2, 4, 8} and j.walltime >= 1),
        ("LongJobDominant", lambda j: (j.nodes == 128 and 10000 <= j.walltime <= 50000)
         or (j.nodes == 2 and 60 <= j.walltime <= 500)),
        ("HighParallelism", lambda j: j.nodes in (64, 128, 256) and j.memory_gb == 8 * j.nodes),
        ("ResourceSparse", lambda j: j.nodes == 1 and j.memory_gb in (1, 2, 4) and 30 <= j.walltime <= 300),
        ("BurstyIdle", lambda j: j.nodes in (1, 2, 4) and j.memory_gb in (2, 4, 8)),
    ],
)
def test_scenario_parameter_ranges(kind, check):
    for seed in range(5):
        jobs = generate_workload(ScenarioSpec(kind, 60, seed))
        assert all(check(j) for j in jobs)


def test_bursty_alternates_short_long():
    jobs = generate_workload(ScenarioSpec("BurstyIdle", 20, 3))
    for j in jobs:
        if j.job_id % 2 == 1:
            assert 30 <= j.walltime <= 120
        else:
            assert 2000 <= j.walltime <= 5000


def test_long_job_fraction_concentrates():
    jobs = generate_workload(ScenarioSpec("LongJobDominant", 1000, seed=5))
    frac = sum(j.nodes == 128 for j in jobs) / len(jobs)
    assert 0.15 <= frac <= 0.25


def test_gamma_exponential_mean():
    rng = make_rng(123)
    draws = [sample_gamma(1.0, 800.0, rng) for _ in range(100_000)]
    assert 760 <= np.mean(draws) <= 840


def test_gamma_variance():
    rng = make_rng(321)
    draws = [sample_gamma(1.5, 300.0, rng) for _ in range(100_000)]
    assert abs(np.var(draws) - 135_000) <= 0.10 * 135_000


@pytest.mark.parametrize("shape, scale", [(0, 300), (1.5, 0), (-1, 1)])
def test_gamma_rejects_nonpositive(shape, scale):
    with pytest.raises(WorkloadError):
        sample_gamma(shape, scale, make_rng(0))


def test_round_half_up():
    assert [round_half_up(x) for x in (0.5, 1.5, 2.49, 2.5)] == [1, 2, 2, 3]


@pytest.mark.parametrize("bad", [{"num_jobs": 0}, {"kind": "NotAScenario"}])
def test_invalid_scenario_spec(bad):
    args = {"kind": "Adversarial", "num_jobs": 5, **bad}
    with pytest.raises(WorkloadError):
        ScenarioSpec(**args)


def test_default_num_users():
    assert ScenarioSpec("Adversarial", 3).users == 3
    assert ScenarioSpec("Adversarial", 60).users == 8


@settings(max_examples=40, deadline=None)
@given(
    kind=st.sampled_from(list(Scenario)),
    n=st.integers(1, 120),
    seed=st.integers(0, 2**64 - 1),
    users=st.one_of(st.none(), st.integers(1, 12)),
)
def test_generation_properties(kind, n, seed, users):
    spec = ScenarioSpec(kind, n, seed, users)
    jobs = generate_workload(spec)
    assert [j.job_id for j in jobs] == list(range(1, n + 1))
    allowed = {f"user_{i}" for i in range(1, spec.users + 1)}
    for j in jobs:
        j.check()
        assert j.submit_time == 0
        assert j.user_id in allowed
    assert dumps_workload(generate_workload(spec)) == dumps_workload(jobs)


def test_clamping_to_small_cluster():
    small = ClusterConfig(total_nodes=100, total_memory_gb=300)
    jobs = generate_workload(ScenarioSpec("HighParallelism", 30, 1), small)
    assert all(j.nodes <= 100 and j.memory_gb <= 300 for j in jobs)


def test_round_trip(tmp_path):
    jobs = generate_workload(ScenarioSpec("HeterogeneousMix", 10, 11))
    path = tmp_path / "w.json"
    write_workload(jobs, path)
    assert read_workload(path) == jobs
    rows = json.loads(path.read_text())
    assert list(rows[0]) == ["job_id", "user_id", "submit_time", "walltime", "nodes", "memory_gb"]


def test_parse_errors():
    row = JobSpec(1, "user_1", 0, 10, 2, 4).to_dict()
    with pytest.raises(WorkloadError, match="nodes out of range"):
        loads_workload(json.dumps([{**row, "nodes": 0}]))
    with pytest.raises(WorkloadError, match="no jobs"):
        loads_workload("")
    with pytest.raises(WorkloadError, match="no jobs"):
        loads_workload("[]")
    with pytest.raises(WorkloadError, match="line 1"):
        loads_workload("[{")
    with pytest.raises(WorkloadError, match="missing field 'walltime'"):
        loads_workload(json.dumps([{k: v for k, v in row.items() if k != "walltime"}]))
    with pytest.raises(WorkloadError, match="job_id"):
        loads_workload(json.dumps([{**row, "job_id": 2}]))
