"""Experiment driver: single runs, scenario x size x policy grids, CSV reports.

Per-run artifacts live in ``<output_dir>/<run_id>/``:

* ``workload.json`` - the generated jobs
* ``schedule.json`` - job_id -> start time
* ``metrics.json`` - the eight objective values
* ``overhead.json`` - agent call/latency accounting (zeros for heuristics)
* ``trace.jsonl`` - one record per agent decision step (agent runs only)
* ``run.json`` - config echo plus wall time
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import re
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from . import sim
from .agent import OverheadReport, ProviderConfig, ProviderKind, make_provider, run_react_loop
from .metrics import METRIC_FIELDS, MetricsReport, compute_metrics, normalize
from .policies import InstanceTooLarge, PolicyKind, run_policy
from .workload import ClusterConfig, Scenario, ScenarioSpec, generate_workload, read_workload, write_workload

log = logging.getLogger(__name__)

OVERHEAD_COLUMNS = ("call_count", "total_latency", "mean_latency", "median_latency", "p95_latency")


class HarnessError(RuntimeError):
    pass


class NormalizationError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    scenario: ScenarioSpec
    policy: PolicyKind = PolicyKind.FCFS
    provider: Optional[ProviderConfig] = None
    output_dir: Optional[str] = None
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    workload_path: Optional[str] = None
    scratchpad_window: Optional[int] = None
    max_calls: Optional[int] = None
    max_consecutive_rejects: int = 5
    exact_max_jobs: int = 10

    def __post_init__(self):
        object.__setattr__(self, "policy", PolicyKind.parse(self.policy))
        if (self.provider is not None) != (self.policy is PolicyKind.REACT):
            raise HarnessError("a provider is required for the react policy and only for it")

    @property
    def run_id(self) -> str:
        s = self.scenario
        slug = f"{s.kind.value}-{s.num_jobs}-{s.seed}-{self.policy.value}"
        if self.provider is not None:
            model = re.sub(r"[^A-Za-z0-9.]+", "-", self.provider.model_name).strip("-")
            slug += f"-{self.provider.provider_kind.value}-{model}"
        return slug

    def to_dict(self) -> dict:
        s = self.scenario
        return {
            "scenario": s.kind.value,
            "num_jobs": s.num_jobs,
            "seed": s.seed,
            "num_users": s.users,
            "policy": self.policy.value,
            "provider": self.provider.to_dict() if self.provider else None,
            "cluster": {"total_nodes": self.cluster.total_nodes, "total_memory_gb": self.cluster.total_memory_gb},
            "workload_path": self.workload_path,
            "scratchpad_window": self.scratchpad_window,
            "max_calls": self.max_calls,
            "max_consecutive_rejects": self.max_consecutive_rejects,
        }


@dataclass
class RunResult:
    run_id: str
    config: dict
    metrics: MetricsReport
    overhead: OverheadReport
    schedule: dict
    wall_time: float

    @property
    def scenario(self) -> str:
        return self.config["scenario"]

    @property
    def num_jobs(self) -> int:
        return self.config["num_jobs"]

    @property
    def seed(self) -> int:
        return self.config["seed"]

    @property
    def policy(self) -> str:
        return self.config["policy"]

    @property
    def label(self) -> str:
        """Policy name, qualified by model for agent runs."""
        prov = self.config.get("provider")
        if prov:
            return f"{self.policy}:{prov['model_name']}"
        return self.policy


def _dump_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def run_single(config: RunConfig) -> RunResult:
    t0 = time.perf_counter()
    cluster = config.cluster
    if config.workload_path:
        jobs = read_workload(config.workload_path, cluster)
    else:
        jobs = generate_workload(config.scenario, cluster)

    overhead = OverheadReport()
    records = None
    if config.policy is PolicyKind.REACT:
        provider = make_provider(config.provider)
        run = run_react_loop(
            jobs,
            cluster,
            provider,
            max_calls=config.max_calls,
            max_consecutive_rejects=config.max_consecutive_rejects,
            scratchpad_window=config.scratchpad_window,
        )
        schedule, overhead, records = run.schedule, run.overhead, run.records
    elif config.policy is PolicyKind.EXACT:
        schedule = run_policy(config.policy, jobs, cluster, max_jobs=config.exact_max_jobs)
    else:
        schedule = run_policy(config.policy, jobs, cluster)

    violations = sim.audit_schedule(jobs, schedule, cluster)
    if violations:
        raise HarnessError(f"{config.run_id}: schedule violates capacity: {violations[:5]}")
    metrics = compute_metrics(jobs, schedule, cluster)
    wall = time.perf_counter() - t0
    result = RunResult(config.run_id, config.to_dict(), metrics, overhead, schedule, wall)

    if config.output_dir is not None:
        out = Path(config.output_dir) / config.run_id
        out.mkdir(parents=True, exist_ok=True)
        write_workload(jobs, out / "workload.json")
        (out / "metrics.json").write_text(metrics.dumps(), encoding="utf-8")
        _dump_json({str(k): v for k, v in schedule.items()}, out / "schedule.json")
        _dump_json(overhead.to_dict(), out / "overhead.json")
        _dump_json({"run_id": config.run_id, "config": result.config, "wall_time": wall}, out / "run.json")
        if records is not None:
            sim.write_trace(records, out / "trace.jsonl")
    return result


def load_results(output_dir) -> list:
    """Rebuild :class:`RunResult` objects from a directory of finished runs."""
    results = []
    for run_file in sorted(Path(output_dir).glob("*/run.json")):
        d = run_file.parent
        meta = json.loads(run_file.read_text(encoding="utf-8"))
        cfg = meta["config"]
        metrics = MetricsReport.from_dict(json.loads((d / "metrics.json").read_text()), cfg["num_jobs"])
        oh = json.loads((d / "overhead.json").read_text())
        overhead = OverheadReport(
            total_elapsed=oh["total_elapsed"],
            call_count=oh["call_count"],
            per_call_latencies=oh["per_call_latencies"],
            rejected_action_count=oh["rejected_action_count"],
            forced_action_count=oh.get("forced_action_count", 0),
        )
        schedule = {int(k): v for k, v in json.loads((d / "schedule.json").read_text()).items()}
        results.append(RunResult(meta["run_id"], cfg, metrics, overhead, schedule, meta["wall_time"]))
    return results


def normalize_results(results: Sequence[RunResult]) -> dict:
    """Map run_id -> FCFS-normalized report, grouping by (scenario, num_jobs, seed)."""
    baselines = {}
    for r in results:
        if r.policy == PolicyKind.FCFS.value:
            baselines[(r.scenario, r.num_jobs, r.seed)] = r.metrics
    out = {}
    for r in results:
        key = (r.scenario, r.num_jobs, r.seed)
        if key not in baselines:
            raise NormalizationError(f"no FCFS baseline for scenario={key[0]} n={key[1]} seed={key[2]}")
        out[r.run_id] = normalize(r.metrics, baselines[key])
    return out


def _fmt(x) -> str:
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return repr(float(x)) if isinstance(x, float) else str(x)


def write_summary(results: Sequence[RunResult], path, normalized: Optional[dict] = None) -> None:
    header = ["run_id", "scenario", "num_jobs", "seed", "policy"]
    header += list(METRIC_FIELDS)
    if normalized is not None:
        header += [f"norm_{m}" for m in METRIC_FIELDS]
    header += list(OVERHEAD_COLUMNS) + ["rejected_action_count", "wall_time"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in results:
            row = [r.run_id, r.scenario, r.num_jobs, r.seed, r.label]
            row += [_fmt(getattr(r.metrics, m)) for m in METRIC_FIELDS]
            if normalized is not None:
                nr = normalized[r.run_id]
                row += [_fmt(nr[m]) for m in METRIC_FIELDS]
            stats = r.overhead.latency_stats()
            row += [r.overhead.call_count, _fmt(r.overhead.total_latency)]
            row += [_fmt(stats[k]) for k in ("mean_latency", "median_latency", "p95_latency")]
            row += [r.overhead.rejected_action_count, _fmt(r.wall_time)]
            w.writerow(row)


@dataclass
class GridResult:
    results: list
    refusals: list
    summary_path: Optional[Path] = None


def _grid_configs(scenarios, sizes, policies, seeds, output_dir, provider, cluster, num_users, exact_max_jobs):
    configs, refusals = [], []
    for kind in scenarios:
        for n in sizes:
            for seed in seeds:
                spec = ScenarioSpec(Scenario.parse(kind), n, seed, num_users)
                for pol in policies:
                    pol = PolicyKind.parse(pol)
                    if pol is PolicyKind.EXACT and n > exact_max_jobs:
                        msg = f"exact solver refused {spec.kind.value} n={n} seed={seed}: limit is {exact_max_jobs} jobs"
                        log.info(msg)
                        refusals.append(msg)
                        continue
                    configs.append(
                        RunConfig(
                            scenario=spec,
                            policy=pol,
                            provider=provider if pol is PolicyKind.REACT else None,
                            output_dir=None if output_dir is None else str(output_dir),
                            cluster=cluster,
                            exact_max_jobs=exact_max_jobs,
                        )
                    )
    return configs, refusals


def default_parallelism(provider: Optional[ProviderConfig]) -> int:
    if provider is not None and provider.provider_kind is not ProviderKind.MOCK:
        return 1
    return os.cpu_count() or 1


def run_grid(
    scenarios: Iterable,
    sizes: Iterable[int],
    policies: Iterable,
    seeds: Iterable[int],
    output_dir=None,
    provider: Optional[ProviderConfig] = None,
    parallelism: Optional[int] = None,
    cluster: Optional[ClusterConfig] = None,
    num_users: Optional[int] = None,
    normalize_to_fcfs: bool = True,
    exact_max_jobs: int = 10,
) -> GridResult:
    """Run every scenario x size x seed x policy combination.

    Exact-solver cells above ``exact_max_jobs`` are skipped and reported in
    ``GridResult.refusals``. With ``output_dir`` set, ``summary.csv`` is
    written there.
    """
    cluster = cluster or ClusterConfig()
    policies = [PolicyKind.parse(p) for p in policies]
    if normalize_to_fcfs and PolicyKind.FCFS not in policies:
        raise NormalizationError("normalization requested but FCFS is not in the policy list")
    if PolicyKind.REACT in policies and provider is None:
        raise HarnessError("the react policy needs a provider config")
    configs, refusals = _grid_configs(
        list(scenarios), list(sizes), policies, list(seeds), output_dir, provider, cluster, num_users, exact_max_jobs
    )
    workers = parallelism or default_parallelism(provider)
    if workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_single, configs, chunksize=max(1, len(configs) // (4 * workers))))
    else:
        results = [run_single(c) for c in configs]
    normalized = normalize_results(results) if normalize_to_fcfs else None
    summary = None
    if output_dir is not None:
        Path(output_dir).mkdir(parents=True, exist_ok=True)
        summary = Path(output_dir) / "summary.csv"
        write_summary(results, summary, normalized)
        if refusals:
            (Path(output_dir) / "refusals.log").write_text("\n".join(refusals) + "\n", encoding="utf-8")
    return GridResult(results, refusals, summary)


def _finite_mean(values):
    vals = [v for v in values if not math.isinf(v)]
    return float(np.mean(vals)) if vals else math.inf


def _finite_std(values):
    vals = [v for v in values if not math.isinf(v)]
    return float(np.std(vals)) if vals else math.inf


def emit_report(results: Sequence[RunResult], output_dir, group_by=("policy", "scenario", "num_jobs")) -> dict:
    """Aggregate results over seeds into normalized and overhead summaries.

    Writes ``normalized_summary.csv`` (mean and std of each normalized metric
    per group), ``normalized_long.csv`` (one row per group and metric) and
    ``overhead_summary.csv`` (call counts and per-call latency quantiles).
    Undefined ratios are left out of the means. Returns the written paths.
    """
    if not results:
        raise ValueError("no results to report")
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    normalized = normalize_results(results)

    def key_of(r):
        vals = {"policy": r.label, "scenario": r.scenario, "num_jobs": r.num_jobs, "seed": r.seed}
        return tuple(vals[g] for g in group_by)

    groups = defaultdict(list)
    for r in results:
        groups[key_of(r)].append(r)
    keys = sorted(groups, key=lambda k: tuple(str(x) if not isinstance(x, int) else f"{x:09d}" for x in k))

    paths = {}
    p = out / "normalized_summary.csv"
    with open(p, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(group_by) + ["runs"] + [c for m in METRIC_FIELDS for c in (m, f"{m}_std")])
        for k in keys:
            rs = groups[k]
            row = list(k) + [len(rs)]
            for m in METRIC_FIELDS:
                vals = [normalized[r.run_id][m] for r in rs]
                row += [_fmt(_finite_mean(vals)), _fmt(_finite_std(vals))]
            w.writerow(row)
    paths["normalized_summary"] = p

    p = out / "normalized_long.csv"
    with open(p, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(group_by) + ["metric", "normalized", "raw"])
        for k in keys:
            rs = groups[k]
            for m in METRIC_FIELDS:
                norm = _finite_mean([normalized[r.run_id][m] for r in rs])
                raw = float(np.mean([getattr(r.metrics, m) for r in rs]))
                w.writerow(list(k) + [m, _fmt(norm), _fmt(raw)])
    paths["normalized_long"] = p

    p = out / "overhead_summary.csv"
    with open(p, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(
            list(group_by)
            + ["runs", "call_count_mean", "call_count_total", "total_elapsed_mean", "rejected_mean",
               "latency_mean", "latency_p25", "latency_median", "latency_p75", "latency_p95", "latency_max"]
        )
        for k in keys:
            rs = groups[k]
            lat = [x for r in rs for x in r.overhead.per_call_latencies]
            q = np.percentile(lat, [25, 50, 75, 95]) if lat else [0.0] * 4
            w.writerow(
                list(k)
                + [
                    len(rs),
                    _fmt(float(np.mean([r.overhead.call_count for r in rs]))),
                    sum(r.overhead.call_count for r in rs),
                    _fmt(float(np.mean([r.overhead.total_elapsed for r in rs]))),
                    _fmt(float(np.mean([r.overhead.rejected_action_count for r in rs]))),
                    _fmt(float(np.mean(lat)) if lat else 0.0),
                    *(_fmt(float(x)) for x in q),
                    _fmt(float(max(lat)) if lat else 0.0),
                ]
            )
    paths["overhead_summary"] = p
    return paths
