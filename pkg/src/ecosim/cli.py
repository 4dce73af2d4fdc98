"""Command-line entry points: batch scenario runner, REPL, planner, HTTP
service, and rule promotion."""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from dataclasses import dataclass
from pathlib import Path

from . import world
from .errors import EcosimError, ParseError, ScenarioFormatError
from .library import list_rules, load_prelude, promote, search_path
from .parser import parse_utterance
from .planner import DEFAULT_DEPTH_LIMIT, Plan, plan
from .scenario import load_scenario
from .simulator import Session, Trace, evaluate_query, pretty_action_text
from .statements import GoalSpec, Role, classify


@dataclass
class RunReport:
    exit_code: int
    lines: list
    session: Session | None = None
    trace: Trace | None = None

    def to_json(self) -> dict:
        return {
            "exit_code": self.exit_code,
            "report": self.lines,
            "trace": self.trace.to_json() if self.trace else None,
        }


def _parse_error_line(source: str, lineno: int, err: ParseError) -> str:
    return f"{source}:{lineno}:{err.span[0] + 1}: {err.message}"


def run_scenario_file(path, lib_path=None, *, continue_on_error: bool = False,
                      depth_limit: int = DEFAULT_DEPTH_LIMIT) -> RunReport:
    """Load, run, and assert one scenario file. Exit code 0 iff all
    assertions pass, 1 on assertion/runtime failure, 2 on parse/IO errors."""
    lines: list = []
    try:
        sc = load_scenario(Path(path))
        em = load_prelude(sc.prelude, search_path(lib_path))
    except (ScenarioFormatError, EcosimError) as err:
        return RunReport(2, [str(err)])
    session = Session(em, depth_limit=depth_limit)
    for lineno, text in sc.text:
        try:
            stmt = parse_utterance(text)
        except ParseError as err:
            return RunReport(2, lines + [_parse_error_line(sc.source, lineno, err)])
        record = session.submit_statement(stmt)
        if record.failure is not None:
            lines.append(f"step {record.index} failed: {record.failure}")
            if not continue_on_error:
                return RunReport(1, lines, session, session.trace())
    failures = 0
    for assertion in sc.asserts:
        try:
            q = parse_utterance(assertion.query)
        except ParseError as err:
            return RunReport(2, lines + [_parse_error_line(sc.source, assertion.line, err)])
        if classify(q) is not Role.QUERY:
            return RunReport(2, lines + [f"{sc.source}:{assertion.line}: not a query"])
        try:
            answer = evaluate_query(session.emulator, session.state, q, session.ctx)
            got = answer.text
        except EcosimError as err:
            got = f"error: {err}"
        ok = got == assertion.expected
        failures += 0 if ok else 1
        status = "ok" if ok else "FAIL"
        lines.append(f"{status}: {assertion.query} => {assertion.expected} (got {got})")
    return RunReport(1 if failures else 0, lines, session, session.trace())


def cmd_run(args) -> int:
    report = run_scenario_file(
        args.scenario,
        args.lib_path,
        continue_on_error=args.continue_on_error,
        depth_limit=args.depth_limit,
    )
    if args.json:
        print(json.dumps(report.to_json(), indent=2))
    else:
        for line in report.lines:
            print(line)
    return report.exit_code


def _goal_from(args) -> GoalSpec:
    if args.goal:
        text = args.goal.strip()
        if not text.lower().startswith("goal"):
            text = "Goal: " + text.rstrip(".") + "."
        stmt = parse_utterance(text)
        if not isinstance(stmt, GoalSpec):
            raise EcosimError(f"not a goal: {args.goal!r}")
        return stmt
    sc = load_scenario(Path(args.scenario))
    goals = [
        stmt
        for _, text in sc.text
        for stmt in [parse_utterance(text)]
        if isinstance(stmt, GoalSpec)
    ]
    if goals:
        return goals[-1]
    raise EcosimError("no goal given; pass --goal 'CONDITION' or put one in TEXT")


def cmd_plan(args) -> int:
    report = run_scenario_file(args.scenario, args.lib_path, depth_limit=args.depth_limit)
    if report.exit_code == 2 or report.session is None:
        for line in report.lines:
            print(line, file=sys.stderr)
        return 2
    session = report.session
    try:
        goal = _goal_from(args)
        outcome = plan(session.emulator, session.state, goal, args.depth_limit)
    except EcosimError as err:
        print(str(err), file=sys.stderr)
        return 2
    if isinstance(outcome, Plan):
        if args.json:
            print(json.dumps({
                "found": True,
                "length": outcome.length,
                "expanded": outcome.expanded,
                "actions": [
                    pretty_action_text(session.emulator, session.state, a)
                    for a in outcome.actions
                ],
            }, indent=2))
        else:
            for i, act in enumerate(outcome.actions, start=1):
                print(f"{i}. {pretty_action_text(session.emulator, session.state, act)}")
            print(f"plan length {outcome.length}, expanded {outcome.expanded} nodes")
        return 0
    if args.json:
        print(json.dumps({"found": False, "reason": outcome.reason,
                          "expanded": outcome.expanded}, indent=2))
    else:
        print(outcome.reason)
    return 1


def cmd_promote(args) -> int:
    report = run_scenario_file(args.scenario, args.lib_path)
    if report.trace is None:
        for line in report.lines:
            print(line, file=sys.stderr)
        return 2
    rule_ids = [int(x) for x in args.rules.split(",") if x]
    try:
        appended = promote(report.trace, rule_ids, Path(args.target))
    except EcosimError as err:
        print(str(err), file=sys.stderr)
        return 2
    for line in appended:
        print(f"promoted: {line}")
    return 0


def _print_parse_error(text: str, err: ParseError) -> None:
    print(f"parse error: {err.message}")
    print(f"  {text}")
    start = min(err.span[0], len(text))
    width = max(1, min(err.span[1], len(text)) - start)
    print("  " + " " * start + "^" * width)
    if err.expected:
        print("  expected one of: " + ", ".join(sorted(err.expected)))


def cmd_repl(args) -> int:
    em = load_prelude(args.lib, search_path(args.lib_path))
    session = Session(em, depth_limit=args.depth_limit)
    print(f"loaded: {', '.join(args.lib) or '(none)'} (emulator v{em.version}); :quit to leave")
    while True:
        try:
            line = input("> ").strip()
        except EOFError:
            print()
            return 0
        if not line:
            continue
        if line.startswith(":"):
            if not _repl_meta(session, line):
                return 0
            continue
        try:
            record = session.submit(line)
        except ParseError as err:
            _print_parse_error(line, err)
            continue
        bits = [f"[{record.role} v{record.emulator_version} {record.state_hash[:8]}]"]
        for ev in record.events:
            bits.append(f"event {ev.name}({ev.subject})")
        if record.answer is not None:
            bits.append(record.answer)
        if record.failure is not None:
            bits.append(record.failure)
        print(" ".join(bits))


def _repl_meta(session: Session, line: str) -> bool:
    try:
        parts = shlex.split(line)
    except ValueError as err:
        print(f"bad meta-command: {err}")
        return True
    cmd = parts[0]
    if cmd == ":quit":
        return False
    if cmd == ":state":
        print(world.canonical_json(session.state))
    elif cmd == ":affordances":
        for act in session.affordances():
            print(pretty_action_text(session.emulator, session.state, act))
    elif cmd == ":rules":
        print(json.dumps(list_rules(session.emulator), indent=2))
    elif cmd == ":undo":
        print("undone" if session.undo() else "nothing to undo")
    elif cmd == ":whatif":
        if len(parts) != 3:
            print('usage: :whatif "CMD[; CMD]" "QUERY"')
            return True
        commands = [c.strip() for c in parts[1].split(";") if c.strip()]
        try:
            answer = session.whatif(commands, parts[2])
            print(answer.text)
        except EcosimError as err:
            print(f"error: {err}")
    else:
        print(f"unknown meta-command {cmd}; have :state :affordances :rules :whatif :undo :quit")
    return True


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(lib_path=args.lib_path)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ecosim", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--lib-path", action="append", default=None,
                       help="extra library search directory (repeatable)")
        p.add_argument("--depth-limit", type=int, default=DEFAULT_DEPTH_LIMIT)
        p.add_argument("--json", action="store_true")

    p_run = sub.add_parser("run", help="run a scenario file and check its assertions")
    p_run.add_argument("scenario")
    p_run.add_argument("--continue-on-error", action="store_true")
    common(p_run)
    p_run.set_defaults(func=cmd_run)

    p_plan = sub.add_parser("plan", help="search for a shortest plan reaching a goal")
    p_plan.add_argument("scenario")
    p_plan.add_argument("--goal", default=None, help="goal condition, e.g. 'the bag is burst'")
    common(p_plan)
    p_plan.set_defaults(func=cmd_plan)

    p_repl = sub.add_parser("repl", help="interactive session")
    p_repl.add_argument("--lib", action="append", default=None,
                        help="library to preload (repeatable; default core)")
    common(p_repl)
    p_repl.set_defaults(func=cmd_repl)

    p_promote = sub.add_parser("promote", help="append situation rules to a library file")
    p_promote.add_argument("scenario")
    p_promote.add_argument("--rules", required=True, help="comma-separated rule ids")
    p_promote.add_argument("--target", required=True, help="library file to append to")
    common(p_promote)
    p_promote.set_defaults(func=cmd_promote)

    p_serve = sub.add_parser("serve", help="HTTP/JSON session service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8787)
    common(p_serve)
    p_serve.set_defaults(func=cmd_serve)
    return ap


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    if args.command == "repl" and args.lib is None:
        args.lib = ["core"]
    try:
        return args.func(args)
    except EcosimError as err:
        print(str(err), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
