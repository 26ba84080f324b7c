"""Operator command line: validate, run, replay, assess, explain, serve.

Exit codes: 0 on success, 1 on validation or semantic failure, 2 on I/O
failure.  All run artifacts are plain JSON or JSON Lines and are
self-sufficient: a scenario plus its event log reproduce the final
state hash with no hidden inputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import state as state_mod
from .causal import rules_to_json
from .errors import CorruptLog, ScenarioError, WorldError
from .gateway import serve
from .runner import run_loop
from .scenario import build_kernel, demo_scenario_path, load_scenario
from .worldscope import WorldProfile, assess_applicability

KNOWLEDGE_JSON = "knowledge.json"
KNOWLEDGE_TEXT = "knowledge.txt"
REPORT_JSON = "report.json"


def _read_json(path: Path) -> object:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}", f"JSON parse error: {exc.msg}") from exc


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except WorldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="worldkernel",
        description="Transactional world engine with incremental causal rule learning.",
        epilog=f"A demo scenario is bundled at: {demo_scenario_path()}",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="typecheck a scenario file end to end")
    p.add_argument("scenario", type=Path)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="run a seeded simulation and write its artifacts")
    p.add_argument("scenario", type=Path)
    p.add_argument("--steps", type=int, default=None, help="rounds to execute (default: run section)")
    p.add_argument("--seed", type=int, default=None, help="scheduling seed (default: run section)")
    p.add_argument("--out", type=Path, default=Path("run_artifacts"), help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("replay", help="rebuild the final state from a scenario and its event log")
    p.add_argument("scenario", type=Path)
    p.add_argument("log", type=Path)
    p.add_argument("--expect", default=None, help="fail unless the final hash equals this")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("assess", help="applicability verdict for a world profile JSON")
    p.add_argument("profile", type=Path)
    p.set_defaults(func=cmd_assess)

    p = sub.add_parser("explain", help="print rules from a knowledge export at a threshold")
    p.add_argument("knowledge", type=Path)
    p.add_argument("--theta", type=float, default=0.0, help="minimum probability to print")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("serve", help="start the HTTP gateway on a fresh kernel")
    p.add_argument("scenario", type=Path)
    p.add_argument("--bind", default="127.0.0.1:8099", help="host:port to listen on")
    p.set_defaults(func=cmd_serve)

    return parser


def cmd_validate(args: argparse.Namespace) -> int:
    load_scenario(args.scenario)
    print(f"{args.scenario}: valid")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    steps = args.steps if args.steps is not None else scenario.run_steps
    if steps is None:
        print("error: --steps not given and the scenario has no run.steps", file=sys.stderr)
        return 1
    seed = args.seed if args.seed is not None else scenario.run_seed

    report, kernel = run_loop(scenario, steps, seed, args.out)
    out: Path = args.out
    (out / KNOWLEDGE_JSON).write_text(
        json.dumps(rules_to_json(kernel.learner.knowledge_view(), kernel.terminology),
                   sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )
    (out / KNOWLEDGE_TEXT).write_text(
        "".join(line + "\n" for line in report.rendered_rules), encoding="utf-8"
    )
    (out / REPORT_JSON).write_text(
        json.dumps(report.to_json_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )

    committed = sum(s.committed for s in report.agents.values())
    print(f"scenario: {scenario.name}")
    print(f"steps: {steps}  seed: {seed}")
    print(f"committed: {committed}  version: {kernel.version}")
    print(f"rules in view: {len(report.rules)}")
    print(f"final state hash: {report.final_state_hash}")
    print(f"artifacts: {out}")
    return 0


def cmd_replay(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    entries = []
    with args.log.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                entries.append(json.loads(line))
            except json.JSONDecodeError as exc:
                print(f"error: {args.log}:{lineno}: not a JSON line: {exc.msg}", file=sys.stderr)
                return 1

    final = state_mod.replay(scenario.schema, scenario.init_doc, entries)
    digest = state_mod.state_hash(final)
    print(digest)

    expected = args.expect
    if expected is None:
        report_path = args.log.parent / REPORT_JSON
        if report_path.exists():
            report = _read_json(report_path)
            expected = report.get("finalStateHash")
            if len(entries) < _report_commit_count(report):
                raise CorruptLog(len(entries) + 1, "log is shorter than the recorded run")
    if expected is not None and digest != expected:
        print(f"error: hash mismatch: expected {expected}", file=sys.stderr)
        return 1
    return 0


def _report_commit_count(report: dict) -> int:
    return sum(stats.get("committed", 0) for stats in report.get("agents", {}).values())


def cmd_assess(args: argparse.Namespace) -> int:
    doc = _read_json(args.profile)
    try:
        profile = WorldProfile.from_json_dict(doc)
    except ValueError as exc:
        print(f"error: {args.profile}: {exc}", file=sys.stderr)
        return 1
    report = assess_applicability(profile)
    print(json.dumps(report.to_json_dict(), sort_keys=True, indent=2))
    print(report.render())
    return 0


def cmd_explain(args: argparse.Namespace) -> int:
    rules = _read_json(args.knowledge)
    if not isinstance(rules, list) or not all(
        isinstance(r, dict) and {"premise", "conclusion", "p", "countPremise"} <= set(r)
        for r in rules
    ):
        print(f"error: {args.knowledge}: expected a JSON list of exported rules", file=sys.stderr)
        return 1
    for rule in rules:
        if rule["p"] < args.theta:
            continue
        premise = " AND ".join(rule["premise"]) if rule["premise"] else "(always)"
        print(
            f"IF {premise} THEN {rule['conclusion']} "
            f"[p = {rule['p']:.3f}, support = {rule['countPremise']:.1f}]"
        )
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    scenario = load_scenario(args.scenario)
    kernel = build_kernel(scenario)
    handle = serve(kernel, args.bind)
    print(f"serving {scenario.name} on {handle.url}")
    try:
        handle.wait()
    except KeyboardInterrupt:
        handle.shutdown()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
