"""Command line entry point.

    exodss serve   --config cfg.yaml --port 7763 --log-dir logs [--serve-ui dist/]
    exodss replay  --log logs/p01-2a.jsonl
    exodss agent run   --policy GreedyFeedback --condition IDM --seed 7 \
                       --edits 50 --endpoint 127.0.0.1:7763
    exodss agent batch --n 24 --seed-start 1 --policy Random --edits 150 \
                       --log-dir out/logs
    exodss analyze --logs out/logs --sus sus.csv --out out/tables [--exact-p]
    exodss dump-config
"""

from __future__ import annotations

import argparse
import asyncio
import sys
from pathlib import Path

from .agents import AgentRunSpec, run_agent_session, run_batch
from .config import default_config, dump_config, load_config
from .replay import replay_log


def _load(config_path: str | None):
    return load_config(config_path) if config_path else default_config()


def _cmd_serve(args) -> int:
    from .server import FacadeServer

    config = _load(args.config)
    server = FacadeServer(
        config,
        log_dir=args.log_dir or config.log_dir,
        ui_dir=args.serve_ui,
    )

    async def main() -> None:
        port = await server.start(host=args.host, port=args.port)
        print(f"listening on {args.host}:{port} (TCP frames, WebSocket, static UI)", flush=True)
        await server.serve_forever()

    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        pass
    return 0


def _cmd_replay(args) -> int:
    report = replay_log(args.log)
    print(
        f"{report.path.name}: {report.events} events, "
        f"{report.edits_checked} edits and {report.finals_checked} evaluations re-checked"
    )
    if report.ok:
        print("replay: deterministic, no mismatches")
        return 0
    for line in report.mismatches[:20]:
        print(f"MISMATCH {line}")
    print(f"replay: {len(report.mismatches)} mismatches")
    return 1


def _cmd_agent_run(args) -> int:
    host, _, port = args.endpoint.rpartition(":")
    spec = AgentRunSpec(
        policy=args.policy,
        seed=args.seed,
        edit_budget=args.edits,
        participant_id=args.participant,
        condition=args.condition,
        delay_model=args.delay,
    )
    config = _load(args.config) if (args.config or args.policy == "HillClimb") else None
    result = run_agent_session(spec, host or "127.0.0.1", int(port), config)
    print(
        f"session {result.session_id}: order={'/'.join(result.condition_order)} "
        f"edits={result.edits_sent} reverts={result.reverts_sent}"
    )
    return 0


def _cmd_agent_batch(args) -> int:
    config = _load(args.config)
    endpoint = None
    if args.endpoint:
        host, _, port = args.endpoint.rpartition(":")
        endpoint = (host or "127.0.0.1", int(port))
    batch = run_batch(
        config,
        log_dir=args.log_dir,
        n=args.n,
        seed_start=args.seed_start,
        policy=args.policy,
        edits=args.edits,
        delay_model=args.delay,
        condition=args.condition,
        participant_prefix=args.prefix,
        jobs=args.jobs,
        endpoint=endpoint,
    )
    print(f"{len(batch.results)} sessions logged under {batch.log_dir}")
    return 0


def _cmd_analyze(args) -> int:
    from .analytics import run_analysis

    written = run_analysis(
        log_dir=args.logs,
        out_dir=args.out,
        sus_csv=args.sus,
        exact_p=args.exact_p,
    )
    for name in sorted(written):
        print(f"wrote {written[name]}")
    return 0


def _cmd_dump_config(args) -> int:
    print(dump_config(_load(args.config)), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exodss", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the session server")
    serve.add_argument("--config", help="YAML config file (defaults otherwise)")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=None, help="override the config port")
    serve.add_argument("--log-dir", default=None)
    serve.add_argument("--serve-ui", default=None, help="static directory with the browser client")
    serve.set_defaults(func=_cmd_serve)

    replay = sub.add_parser("replay", help="re-run evaluations recorded in a session log")
    replay.add_argument("--log", required=True)
    replay.set_defaults(func=_cmd_replay)

    agent = sub.add_parser("agent", help="headless simulated participants")
    agent_sub = agent.add_subparsers(dest="agent_command", required=True)

    run = agent_sub.add_parser("run", help="play one full session against a server")
    run.add_argument("--policy", default="Random", choices=("Random", "GreedyFeedback", "HillClimb"))
    run.add_argument("--condition", default=None, choices=("IDM", "nIDM"),
                     help="force this condition first (otherwise seeded coin flip)")
    run.add_argument("--seed", type=int, required=True)
    run.add_argument("--edits", type=int, default=50)
    run.add_argument("--participant", default="agent")
    run.add_argument("--delay", default="jitter:800")
    run.add_argument("--endpoint", default="127.0.0.1:7763")
    run.add_argument("--config", default=None,
                     help="server config; required for HillClimb's local oracle")
    run.set_defaults(func=_cmd_agent_run)

    batch = agent_sub.add_parser("batch", help="run a cohort against a private server")
    batch.add_argument("--n", type=int, default=24)
    batch.add_argument("--seed-start", type=int, default=1)
    batch.add_argument("--policy", default="GreedyFeedback",
                       choices=("Random", "GreedyFeedback", "HillClimb"))
    batch.add_argument("--condition", default=None, choices=("IDM", "nIDM"))
    batch.add_argument("--edits", type=int, default=150)
    batch.add_argument("--delay", default="jitter:800")
    batch.add_argument("--prefix", default="p")
    batch.add_argument("--jobs", type=int, default=1)
    batch.add_argument("--log-dir", required=True)
    batch.add_argument("--endpoint", default=None, help="use an existing server instead")
    batch.add_argument("--config", default=None)
    batch.set_defaults(func=_cmd_agent_batch)

    analyze = sub.add_parser("analyze", help="turn session logs into the analysis tables")
    analyze.add_argument("--logs", required=True)
    analyze.add_argument("--sus", default=None, help="external questionnaire CSV (participant_id,q1..q10)")
    analyze.add_argument("--out", required=True)
    analyze.add_argument("--exact-p", action="store_true",
                         help="exact permutation p-values where sample sizes allow")
    analyze.set_defaults(func=_cmd_analyze)

    dump = sub.add_parser("dump-config", help="print the effective configuration as YAML")
    dump.add_argument("--config", default=None)
    dump.set_defaults(func=_cmd_dump_config)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
