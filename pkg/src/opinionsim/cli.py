"""Command-line entry point: preprocess, init, run, branch, evaluate, inspect-checkpoint, generate."""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Any, Dict, List, Optional

from .evaluation.logs import SchemaError
from .evaluation.report import ReportConfig, build_report, write_report
from .ingestion import (FilterConfig, InitConfig, ScenarioSpec, SyntheticConfig, generate, initialize_agents,
                        preprocess, read_follows, read_records, scenario_events, synthetic_roster, write_records)
from .ingestion.schema import HistoricalPost, UserRecord
from .intervention import BranchPlan, InterventionError, run_branches
from .llm.gateway import GatewayError
from .simulator.config import SimConfig, load_config
from .simulator.engine import (ACTION_LOG, CheckpointError, Roster, Simulation, build_gateway, latest_checkpoint,
                               read_checkpoint, resume, run)


class CLIError(Exception):
    """A user-facing failure reported as a structured message with exit status 1."""


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    d = argparse.SUPPRESS if suppress else None
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=d, help="JSON config file merged over the defaults")
    p.add_argument("--seed", type=int, default=d, help="simulation seed")
    p.add_argument("--mock-llm", action="store_true", default=d, help="use the deterministic mock backend")
    p.add_argument("--threads", type=int, default=d, help="worker threads for agent cognition")
    p.add_argument("--out-dir", default=d, help="output directory (default: current directory)")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="opinionsim", parents=[_global_flags(False)],
                                     description="LLM-agent public-opinion simulator")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    g = [_global_flags(True)]

    p = sub.add_parser("preprocess", parents=g, help="clean raw users/posts JSONL")
    p.add_argument("--users", required=True)
    p.add_argument("--posts", required=True)
    p.add_argument("--keywords", nargs="*", default=[])
    p.add_argument("--blacklist", nargs="*", default=[])
    p.add_argument("--min-length", type=int, default=5)
    p.add_argument("--activity-threshold", type=int, default=2)
    p.add_argument("--window-start")
    p.add_argument("--window-end")

    p = sub.add_parser("init", parents=g, help="build an agent roster from a cleaned dataset")
    p.add_argument("--users", required=True)
    p.add_argument("--posts", required=True)
    p.add_argument("--follows")
    p.add_argument("--scenario", help="scenario JSON supplying event background and start time")
    p.add_argument("--t-start")
    p.add_argument("--event-background", default="")

    p = sub.add_parser("run", parents=g, help="run a scenario")
    p.add_argument("--roster", help="roster JSON from `init`; a synthetic roster is generated when omitted")
    p.add_argument("--scenario")
    p.add_argument("--steps", type=int)
    p.add_argument("--agents", type=int, default=100, help="synthetic roster size")
    p.add_argument("--resume", action="store_true", help="continue from the latest checkpoint in --out-dir")

    p = sub.add_parser("branch", parents=g, help="execute a branch plan from a checkpoint")
    p.add_argument("--plan", required=True)

    p = sub.add_parser("evaluate", parents=g, help="compare a simulated log with a reference log")
    p.add_argument("--sim", help="simulated action log (default: <out-dir>/action_log.jsonl)")
    p.add_argument("--real", required=True, help="reference log: action log or real-post JSONL")
    p.add_argument("--t-start", help="origin for wall-clock timestamps in the reference log")
    p.add_argument("--bin-width", type=float, default=60.0)
    p.add_argument("--pi-window", type=float, default=360.0)
    p.add_argument("--hotness", choices=("all", "posts"), default="all")

    p = sub.add_parser("inspect-checkpoint", parents=g, help="verify and summarize a checkpoint")
    p.add_argument("path")

    p = sub.add_parser("generate", parents=g, help="write a synthetic dataset and scenario")
    p.add_argument("--agents", type=int, default=100)
    p.add_argument("--steps", type=int, default=276)
    return parser


def _out(args, *parts: str) -> str:
    return os.path.join(args.out_dir or ".", *parts)


def _config(args, extra: Optional[Dict[str, Any]] = None) -> SimConfig:
    overrides: Dict[str, Any] = dict(extra or {})
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    return load_config(args.config, overrides)


def _gateway(args, cfg: SimConfig):
    if not args.mock_llm and not cfg.gateway.endpoints:
        raise CLIError("no LLM endpoints configured; add gateway.endpoints to --config or pass --mock-llm")
    return build_gateway(cfg, mock=bool(args.mock_llm))


def _print(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False))


def cmd_preprocess(args) -> None:
    users, bad_u = read_records(args.users, UserRecord)
    posts, bad_p = read_records(args.posts, HistoricalPost)
    filters = FilterConfig(args.keywords, args.min_length, args.blacklist, args.activity_threshold,
                           args.window_start, args.window_end)
    data, summary = preprocess(users, posts, filters, unparseable=bad_u + bad_p)
    os.makedirs(_out(args), exist_ok=True)
    write_records(_out(args, "users.jsonl"), data.users)
    write_records(_out(args, "posts.jsonl"), data.posts)
    with open(_out(args, "preprocess_summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary.to_dict(), fh, indent=2, sort_keys=True)
    _print(summary.to_dict())


def cmd_init(args) -> None:
    t_start, background = args.t_start, args.event_background
    if args.scenario:
        spec = ScenarioSpec.load(args.scenario)
        t_start, background = t_start or spec.t_start, background or spec.event_background
    cfg = _config(args)
    users, _ = read_records(args.users, UserRecord)
    posts, _ = read_records(args.posts, HistoricalPost)
    data, _ = preprocess(users, posts, FilterConfig(min_length=0, activity_threshold=0))
    follows = read_follows(args.follows) if args.follows else None
    roster = initialize_agents(data, _gateway(args, cfg),
                               InitConfig(background, t_start or cfg.t_start, threads=cfg.threads, seed=cfg.seed,
                                          memory_capacity=cfg.memory.capacity), follows=follows)
    os.makedirs(_out(args), exist_ok=True)
    roster.save(_out(args, "roster.json"))
    flagged = sum(1 for a in roster.agents if a.flags)
    _print({"roster": _out(args, "roster.json"), "agents": len(roster.agents), "flagged": flagged,
            "follow_edges": len(roster.follow_edges)})


def cmd_run(args) -> None:
    extra: Dict[str, Any] = {}
    spec = ScenarioSpec.load(args.scenario) if args.scenario else None
    if spec is not None:
        extra.update(spec.config_overrides())
    if args.steps is not None:
        extra["max_steps"] = args.steps
    cfg = _config(args, extra)
    gateway = _gateway(args, cfg)
    out_dir = _out(args)
    if args.resume:
        ckpt = latest_checkpoint(out_dir)
        if ckpt is None:
            raise CLIError(f"no checkpoint found under {out_dir}/checkpoints")
        sim = resume(ckpt, out_dir, gateway, cfg)
        sim.run()
        _print({"resumed_from": ckpt, "step": sim.step_index, "checkpoint": sim.checkpoint_path()})
        return
    if args.roster:
        roster = Roster.load(args.roster)
    elif spec is not None and spec.users and spec.posts:
        users, _ = read_records(spec.users, UserRecord)
        posts, _ = read_records(spec.posts, HistoricalPost)
        data, _ = preprocess(users, posts, FilterConfig(min_length=0, activity_threshold=0))
        roster = initialize_agents(data, gateway, InitConfig(cfg.event_background, cfg.t_start, threads=cfg.threads,
                                                             seed=cfg.seed),
                                   follows=read_follows(spec.follows) if spec.follows else None)
    else:
        sc = SyntheticConfig(n_users=args.agents, t_start=cfg.t_start, seed=cfg.seed)
        if not cfg.events:
            cfg.events = scenario_events(sc)
        roster = synthetic_roster(sc, gateway, cfg.event_background)
    paths = run(cfg, roster, out_dir, gateway)
    _print(paths)


def cmd_branch(args) -> None:
    plan = BranchPlan.load(args.plan)
    header, state = read_checkpoint(plan.checkpoint)
    cfg = SimConfig.from_dict(state["config"])
    if args.config:
        cfg = load_config(args.config)
    result = run_branches(plan, _out(args), lambda: _gateway(args, cfg), threads=args.threads or 1)
    _print({"manifest": _out(args, "manifest.json"), "arms": [a["name"] for a in result["manifest"]["arms"]],
            "comparison": result["comparison"]["outcomes"]})


def cmd_evaluate(args) -> None:
    sim = args.sim or _out(args, ACTION_LOG)
    cfg = ReportConfig(bin_width=args.bin_width, pi_window=args.pi_window, hotness_actions=args.hotness,
                       t_start=args.t_start or _config(args).t_start, seed=args.seed or 0)
    report = build_report(sim, args.real, cfg)
    paths = write_report(report, _out(args, "report"))
    _print({"report": paths["report"], "behavior": report.behavior, "content": report.content,
            "topology": report.topology})


def cmd_inspect(args) -> None:
    header, state = read_checkpoint(args.path)
    from .cognition.beliefs import BeliefState, identity_digest

    digest = identity_digest({a["agent_id"]: BeliefState.from_dict(a["beliefs"]) for a in state["agents"]})
    _print({"header": header, "step": state["step"], "t": state["t"], "agents": len(state["agents"]),
            "seed": state["config"]["seed"], "pending_events": len(state["queue"]),
            "triggered_events": len(state["triggered"]), "pending_interventions": len(state["interventions"]),
            "identity_digest": digest})


def cmd_generate(args) -> None:
    sc = SyntheticConfig(n_users=args.agents, steps=args.steps, seed=args.seed or 0)
    users, history, reference = generate(sc)
    os.makedirs(_out(args), exist_ok=True)
    write_records(_out(args, "users.jsonl"), users)
    write_records(_out(args, "posts.jsonl"), history)
    write_records(_out(args, "reference.jsonl"), reference)
    scenario = {"event_background": "A fire breaks out at a chemical factory; officials respond over two days.",
                "t_start": sc.t_start, "steps": sc.steps, "dt": sc.dt, "events": scenario_events(sc),
                "users": "users.jsonl", "posts": "posts.jsonl"}
    with open(_out(args, "scenario.json"), "w", encoding="utf-8") as fh:
        json.dump(scenario, fh, indent=2, ensure_ascii=False)
    _print({"users": len(users), "history_posts": len(history), "reference_posts": len(reference),
            "scenario": _out(args, "scenario.json")})


COMMANDS = {"preprocess": cmd_preprocess, "init": cmd_init, "run": cmd_run, "branch": cmd_branch,
            "evaluate": cmd_evaluate, "inspect-checkpoint": cmd_inspect, "generate": cmd_generate}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (CLIError, SchemaError, CheckpointError, InterventionError, GatewayError, ValueError, KeyError,
            FileNotFoundError) as exc:
        err = {"error": type(exc).__name__, "command": args.command, "message": str(exc)}
        print(json.dumps(err, ensure_ascii=False), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
