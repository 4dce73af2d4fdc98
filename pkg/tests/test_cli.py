from __future__ import annotations

import builtins
import json
from pathlib import Path

import pytest

from conftest import FIXTURE_W_TEXT

from ecosim import world
from ecosim.cli import main, run_scenario_file
from ecosim.library import load_prelude
from ecosim.scenario import load_scenario, parse_scenario
from ecosim.errors import ScenarioFormatError
from ecosim.simulator import Session


def test_scenario_format_sections(fixtures_dir):
    sc = load_scenario(fixtures_dir / "fixture_w.eco")
    assert sc.prelude == ("core",)
    assert len(sc.text) == 7
    assert sc.asserts[0].expected == "no"


def test_scenario_format_errors():
    with pytest.raises(ScenarioFormatError):
        parse_scenario("There is a bag.\n")  # statement outside sections
    with pytest.raises(ScenarioFormatError):
        parse_scenario("ASSERT:\nDoes it burst?\n")  # missing =>


def test_fixture_w_whatif_run_exits_0(fixtures_dir, capsys):
    assert main(["run", str(fixtures_dir / "fixture_w.eco")]) == 0
    out = capsys.readouterr().out
    assert out.count("ok:") == 4


def test_fixture_w_2_exits_0(fixtures_dir):
    assert main(["run", str(fixtures_dir / "fixture_w_2.eco")]) == 0


def test_fixture_w_3_exits_0(fixtures_dir):
    assert main(["run", str(fixtures_dir / "fixture_w_3.eco")]) == 0


def test_fixture_c_exits_0(fixtures_dir):
    assert main(["run", str(fixtures_dir / "fixture_c.eco")]) == 0


def test_syntax_error_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.eco"
    bad.write_text("PRELUDE: core market\nTEXT:\nThere is a bag.\nPut the the the.\n")
    assert main(["run", str(bad)]) == 2
    out = capsys.readouterr().out
    assert f"{bad}:4:" in out  # file:line:col


def test_failed_assertion_exits_1(tmp_path, capsys):
    sc = tmp_path / "wrong.eco"
    sc.write_text(
        "PRELUDE: core market\nTEXT:\nThere is a bag.\nASSERT:\nDoes the bag burst? => yes\n"
    )
    assert main(["run", str(sc)]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_run_json_report(fixtures_dir, capsys):
    assert main(["run", str(fixtures_dir / "fixture_w_2.eco"), "--json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["exit_code"] == 0
    assert doc["trace"]["final_emulator_version"] > 0


def test_exit_codes_stable_across_runs(fixtures_dir):
    path = str(fixtures_dir / "fixture_w_3.eco")
    assert [main(["run", path]) for _ in range(3)] == [0, 0, 0]


# --- plan subcommand ----------------------------------------------------------


def test_plan_cli_json(fixtures_dir, capsys):
    code = main(["plan", str(fixtures_dir / "fixture_plan.eco"),
                 "--goal", "the bag is burst", "--json"])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["found"] and doc["length"] == 3
    assert len(doc["actions"]) == 3


def test_plan_cli_goal_from_text(fixtures_dir, capsys):
    assert main(["plan", str(fixtures_dir / "fixture_plan.eco")]) == 0
    out = capsys.readouterr().out
    assert "plan length 3" in out


def test_plan_cli_unreachable(fixtures_dir, capsys):
    code = main(["plan", str(fixtures_dir / "fixture_plan.eco"),
                 "--goal", "the bag contains 4 watermelons", "--depth-limit", "4"])
    assert code == 1
    assert "no plan within depth 4" in capsys.readouterr().out


# --- promote subcommand ----------------------------------------------------------


def test_promote_cli(tmp_path, capsys):
    lib = tmp_path / "market-base.eco"
    lib.write_text(
        "A watermelon is a kind of thing.\nThe weight of a watermelon is 9 kg.\n"
    )
    sc = tmp_path / "scene.eco"
    sc.write_text(
        "PRELUDE: core market-base\nTEXT:\nAll watermelons are portable.\n"
        "There is a watermelon.\nTake the watermelon.\n"
    )
    code = main(["promote", str(sc), "--rules", "2", "--target", str(lib),
                 "--lib-path", str(tmp_path)])
    assert code == 0
    assert "All watermelons are portable." in lib.read_text()


# --- REPL ---------------------------------------------------------------------------


def run_repl(monkeypatch, capsys, lines):
    feed = iter(lines)
    monkeypatch.setattr(builtins, "input", lambda prompt="": next(feed))
    code = main(["repl", "--lib", "core", "--lib", "market"])
    return code, capsys.readouterr().out


def test_repl_session_flow(monkeypatch, capsys):
    code, out = run_repl(monkeypatch, capsys, [
        *FIXTURE_W_TEXT,
        ":affordances",
        ":whatif \"he puts three watermelons in the bag\" \"Does it burst?\"",
        ":state",
        "Put a watermelon in the bag.",
        ":undo",
        ":state",
        ":quit",
    ])
    assert code == 0
    assert "Put watermelon 2 in bag 1." in out  # canonical-ordered affordances
    assert "yes" in out
    states = [l for l in out.splitlines() if l.startswith("{")]
    assert states[0] == states[1]  # :undo restored the pre-put state


def test_repl_whatif_isolation(monkeypatch, capsys):
    code, out = run_repl(monkeypatch, capsys, [
        *FIXTURE_W_TEXT,
        ":state",
        ":whatif \"he puts three watermelons in the bag\" \"Does it burst?\"",
        ":state",
        ":quit",
    ])
    states = [l for l in out.splitlines() if l.startswith("{")]
    assert states[0] == states[1]


def test_repl_parse_error_keeps_looping(monkeypatch, capsys):
    code, out = run_repl(monkeypatch, capsys, [
        "The the the.",
        "There is a bag.",
        ":quit",
    ])
    assert code == 0
    assert "parse error" in out and "^" in out
    assert "[Fact" in out


def test_repl_undo_on_empty(monkeypatch, capsys):
    code, out = run_repl(monkeypatch, capsys, [":undo", ":quit"])
    assert "nothing to undo" in out


# --- interface equivalence ----------------------------------------------------------


def test_batch_and_repl_state_equivalence(tmp_path):
    texts = FIXTURE_W_TEXT + ["Put two watermelons in the bag."]
    sc = tmp_path / "eq.eco"
    sc.write_text("PRELUDE: core market\nTEXT:\n" + "\n".join(texts) + "\n")
    report = run_scenario_file(sc)
    assert report.exit_code == 0

    session = Session(load_prelude(["core", "market"]))
    for t in texts:
        session.submit(t)
    assert world.canonical_json(report.session.state) == world.canonical_json(session.state)
