"""Command line entry point: ``hpcsched {generate,run,bench,report}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .agent import ProviderConfig, ProviderKind
from .bench import RunConfig, emit_report, load_results, run_grid, run_single
from .policies import PolicyKind
from .workload import ClusterConfig, Scenario, ScenarioSpec, generate_workload, write_workload

POLICY_CHOICES = [p.value for p in PolicyKind]
SCENARIO_CHOICES = [s.value for s in Scenario]


def _provider_from_args(args):
    if args.policy_needs_provider is False:
        return None
    kind = ProviderKind(args.provider)
    model = args.model
    if model is None:
        model = "greedy-sjf-text" if kind is ProviderKind.MOCK else None
    if model is None:
        raise SystemExit("--model is required for live providers")
    return ProviderConfig(
        provider_kind=kind,
        model_name=model,
        temperature=args.temperature,
        max_output_tokens=args.max_tokens,
        reasoning_effort=args.reasoning_effort,
        endpoint=args.endpoint,
    )


def _add_workload_args(p, multi=False):
    if multi:
        p.add_argument("--scenario", nargs="+", choices=SCENARIO_CHOICES, default=SCENARIO_CHOICES)
        p.add_argument("--jobs", nargs="+", type=int, default=[10, 20, 40, 60, 80, 100])
        p.add_argument("--seeds", nargs="+", type=int, default=None,
                       help="seed list (default: 1..10, or 1 for live providers)")
    else:
        p.add_argument("--scenario", choices=SCENARIO_CHOICES, required=True)
        p.add_argument("--jobs", type=int, required=True)
        p.add_argument("--seed", type=int, default=0)
    p.add_argument("--users", type=int, default=None, help="number of users (default min(8, jobs))")
    p.add_argument("--nodes", type=int, default=256)
    p.add_argument("--memory", type=int, default=2048, help="total memory in GB")


def _add_agent_args(p):
    p.add_argument("--provider", choices=[k.value for k in ProviderKind], default="mock")
    p.add_argument("--model", default=None, help="model name (mock: greedy-sjf-text)")
    p.add_argument("--endpoint", default=None)
    p.add_argument("--temperature", type=float, default=None)
    p.add_argument("--max-tokens", type=int, default=5000)
    p.add_argument("--reasoning-effort", default=None)
    p.add_argument("--scratchpad-window", type=int, default=None)
    p.add_argument("--max-calls", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hpcsched", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic workload to a JSON file")
    _add_workload_args(g)
    g.add_argument("--out", required=True, help="output workload.json path")

    r = sub.add_parser("run", help="run one policy on one workload")
    _add_workload_args(r)
    r.add_argument("--policy", choices=POLICY_CHOICES, default="fcfs")
    r.add_argument("--workload", default=None, help="read jobs from this file instead of generating")
    r.add_argument("--out", required=True, help="output directory")
    _add_agent_args(r)

    b = sub.add_parser("bench", help="run a scenario x size x policy x seed grid")
    _add_workload_args(b, multi=True)
    b.add_argument("--policy", nargs="+", choices=POLICY_CHOICES, default=["fcfs", "sjf"])
    b.add_argument("--out", required=True)
    b.add_argument("--parallelism", type=int, default=None)
    _add_agent_args(b)

    rep = sub.add_parser("report", help="aggregate finished runs in a directory")
    rep.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")

    if args.command == "generate":
        spec = ScenarioSpec(args.scenario, args.jobs, args.seed, args.users)
        cluster = ClusterConfig(args.nodes, args.memory)
        write_workload(generate_workload(spec, cluster), args.out)
        print(args.out)
        return 0

    if args.command == "run":
        args.policy_needs_provider = args.policy == "react"
        cfg = RunConfig(
            scenario=ScenarioSpec(args.scenario, args.jobs, args.seed, args.users),
            policy=args.policy,
            provider=_provider_from_args(args),
            output_dir=args.out,
            cluster=ClusterConfig(args.nodes, args.memory),
            workload_path=args.workload,
            scratchpad_window=args.scratchpad_window,
            max_calls=args.max_calls,
        )
        result = run_single(cfg)
        print(json.dumps({"run_id": result.run_id, **result.metrics.to_dict()}, indent=2))
        return 0

    if args.command == "bench":
        args.policy_needs_provider = "react" in args.policy
        provider = _provider_from_args(args)
        seeds = args.seeds
        if seeds is None:
            live = provider is not None and provider.provider_kind is not ProviderKind.MOCK
            seeds = [1] if live else list(range(1, 11))
        grid = run_grid(
            args.scenario,
            args.jobs,
            args.policy,
            seeds,
            output_dir=args.out,
            provider=provider,
            parallelism=args.parallelism,
            cluster=ClusterConfig(args.nodes, args.memory),
            num_users=args.users,
        )
        for msg in grid.refusals:
            logging.info(msg)
        emit_report(grid.results, args.out)
        print(f"{len(grid.results)} runs; summary at {grid.summary_path}")
        return 0

    if args.command == "report":
        results = load_results(args.out)
        if not results:
            print(f"no runs found under {args.out}", file=sys.stderr)
            return 1
        paths = emit_report(results, args.out)
        for p in paths.values():
            print(p)
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
