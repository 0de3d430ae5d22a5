"""Command-line entry point: ``simulate``, ``fuzz`` and ``replay``.

Exit status is 0 on success, 1 on divergence or oracle mismatch, 2 on usage
errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import scenarios
from .codec import dumps
from .fuzz import WORKLOADS, FuzzConfig, fuzz
from .runlog import LogError, log_lines, read_log, replay, write_log
from .scenarios.runner import oracle_outcome

PASS, FAIL, USAGE = 0, 1, 2


def _emit(report: dict, as_json: bool, lines: list[str]) -> None:
    if as_json:
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print("\n".join(lines))


def _render_lines(kind: str, rendered) -> list[str]:
    if kind == "rich":
        return [f"  text:   {rendered['text']}", f"  markup: {rendered['markup']}"]
    if kind == "recipe":
        return [f"  {r['name']:<10} {r['amount']:>10} {r['unit']}" for r in rendered]
    rows = [f"  {'object':<10} {'x':>14} {'y':>14}"]
    rows += [f"  {r['object']:<10} {r['x']:>14} {r['y']:>14}" for r in rendered]
    return rows


def cmd_simulate(args, parser) -> int:
    if args.list:
        print("\n".join(scenarios.available()))
        return PASS
    if not args.scenario:
        parser.error("--scenario is required")
    if args.scenario not in scenarios.available():
        parser.error(f"unknown scenario {args.scenario!r}; try --list")
    scenario = scenarios.load(args.scenario)
    if args.write_golden:
        first = scenarios.run(scenario, scenarios.runner.ExhaustiveChooser())
        path = Path(scenarios.runner.__file__).parent / "data" / f"{args.scenario}.golden.json"
        path.write_text(json.dumps(oracle_outcome(scenario, first), indent=2, sort_keys=True) + "\n")
        print(f"wrote {path}")
        return PASS
    report, runs = scenarios.check(scenario, args.seed, scenarios.load_golden(args.scenario))
    if args.log:
        net = runs[0].net
        snaps = {r: net[r].elements() for r in net.ids}
        write_log(args.log, log_lines(net.ids, net.events, snaps, {"scenario": args.scenario}))
    data = report.to_json()
    lines = [f"{data['verdict']} {args.scenario} ({report.schedules} schedules, envelopes {report.counts})"]
    lines += _render_lines(scenario["element"], report.render)
    lines += [f"  problem: {p}" for p in report.problems]
    _emit(data, args.json, lines)
    return PASS if report.ok else FAIL


def cmd_fuzz(args, parser) -> int:
    try:
        cfg = FuzzConfig(
            ops=args.ops,
            replicas=args.replicas,
            seed=args.seed,
            schedules=args.schedules,
            foreach=not args.no_foreach,
            skip_buffer=args.inject_skip_buffer,
            workload=args.workload,
        )
    except ValueError as exc:
        parser.error(str(exc))
    if args.seeds < 1:
        parser.error("--seeds must be at least 1")
    report = fuzz(cfg, range(args.seed, args.seed + args.seeds))
    if args.log:
        if "minimized_log" in report:
            write_log(args.log, report["minimized_log"])
        else:
            from .fuzz import fuzz_one

            write_log(args.log, fuzz_one(cfg, cfg.seed, keep_log=True).log)
    lines = [
        f"{report['verdict']} fuzz ops={cfg.ops} replicas={cfg.replicas} seeds={args.seeds} "
        f"schedules={cfg.schedules}",
        f"  envelopes: {report['counts']}",
        f"  divergences: {report['divergences']}  oracle mismatches: {report['oracle_mismatches']}",
    ]
    if "failing_seed" in report:
        lines.append(f"  first failing seed: {report['failing_seed']}")
        lines.append(f"  minimized log: {len(report['minimized_log'])} lines")
    _emit(report, args.json, lines)
    return PASS if report["verdict"] == "PASS" else FAIL


def cmd_replay(args, parser) -> int:
    try:
        log = read_log(args.log)
    except FileNotFoundError:
        parser.error(f"no such log {args.log}")
    except LogError as exc:
        print(f"replay: parse error at {exc}", file=sys.stderr)
        return USAGE
    result = replay(log)
    data = result.to_json()
    lines = [f"{data['verdict']} replay {args.log} ({len(log.deliveries)} deliveries)"]
    if result.error:
        lines.append(f"  error: {result.error}")
    lines += [f"  unknown envelope: {u}" for u in result.unknown]
    lines += [f"  snapshot mismatch: {r}" for r in result.mismatched]
    if not result.converged:
        lines.append("  replicas with identical deliveries ended in different states")
    if args.json:
        print(dumps(data))
    else:
        print("\n".join(lines))
    return PASS if result.ok else FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="foreach-crdt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scripted scenario under all its schedules")
    sim.add_argument("--scenario")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--log", type=Path)
    sim.add_argument("--list", action="store_true", help="list scenarios")
    sim.add_argument("--json", action="store_true", help="print the JSON report")
    sim.add_argument("--write-golden", action="store_true", help="regenerate the golden file from the oracle")
    sim.set_defaults(func=cmd_simulate, parser=sim)

    fz = sub.add_parser("fuzz", help="random operations, random causal schedules")
    fz.add_argument("--ops", type=int, default=200)
    fz.add_argument("--replicas", type=int, default=4)
    fz.add_argument("--seed", type=int, default=0)
    fz.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    fz.add_argument("--schedules", type=int, default=10)
    fz.add_argument("--workload", choices=WORKLOADS)
    fz.add_argument("--no-foreach", action="store_true", help="insert/delete/apply only")
    fz.add_argument("--inject-skip-buffer", action="store_true",
                    help="break the concurrent-insert loop (harness self-test)")
    fz.add_argument("--log", type=Path)
    fz.add_argument("--json", action="store_true")
    fz.set_defaults(func=cmd_fuzz, parser=fz)

    rp = sub.add_parser("replay", help="re-deliver a JSON-lines log")
    rp.add_argument("--log", type=Path, required=True)
    rp.add_argument("--json", action="store_true")
    rp.set_defaults(func=cmd_replay, parser=rp)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args, args.parser)


if __name__ == "__main__":
    sys.exit(main())
