import json
import os

import pytest

from conftest import CORPUS
from kog.cli import main

EDITOR = str(CORPUS / "editor.kog")


def run_cli(capsys, *args):
    code = main([str(a) for a in args])
    return code, capsys.readouterr().out


def test_check_ok(capsys):
    assert run_cli(capsys, "check", EDITOR) == (0, "ok\n")


def test_check_reports_rule_and_position(capsys):
    code, out = run_cli(capsys, "check", CORPUS / "negative" / "join_field.kog")
    assert code == 1
    assert out.count("\n") == 1
    assert ":8:9: LocalRequired:" in out


def test_parse_error_exit(tmp_path, capsys):
    bad = tmp_path / "bad.kog"
    bad.write_text("{ Bool a; a = ; }")
    code, out = run_cli(capsys, "check", bad)
    assert code == 1 and "parse error" in out


def test_run_with_type_checks(capsys):
    code, out = run_cli(capsys, "run", EDITOR, "--seed", 7, "--max-steps", 10000, "--check-types")
    assert code == 0
    assert out.startswith("outcome: terminated")
    assert "violations: 0" in out
    assert "intf {Dictionary, SpellChecker}" in out


def test_check_types_does_not_change_the_trace(tmp_path, capsys):
    plain, checked = tmp_path / "a.json", tmp_path / "b.json"
    main(["run", EDITOR, "--seed", "3", "--json", str(plain)])
    main(["run", EDITOR, "--seed", "3", "--json", str(checked), "--check-types"])
    capsys.readouterr()
    assert plain.read_bytes() == checked.read_bytes()


def test_ill_typed_program_needs_unsafe(capsys):
    path = CORPUS / "unsafe" / "absent_method.kog"
    assert run_cli(capsys, "run", path)[0] == 1
    code, out = run_cli(capsys, "run", path, "--unsafe")
    assert code == 3 and "outcome: error-process" in out


def test_budget_exit_code(tmp_path, capsys):
    loop = tmp_path / "loop.kog"
    loop.write_text("{ Bool go; go = true; while go { skip; } }")
    code, out = run_cli(capsys, "run", loop, "--max-steps", 20)
    assert code == 4 and "budget-exhausted" in out


def test_explore_report(tmp_path, capsys):
    report = tmp_path / "report.json"
    code, out = run_cli(capsys, "explore", EDITOR, "--depth", 200, "--check-types", "--json", report)
    assert code == 0
    assert "violations: 0" in out and "truncated: false" in out
    doc = json.loads(report.read_text())
    assert doc["violations"] == [] and doc["states-checked"] > 0


def test_explore_flags_the_gap(capsys):
    code, out = run_cli(capsys, "explore", CORPUS / "gap" / "branch_upgrade.kog", "--check-types")
    assert code == 3 and "RTT-Proc" in out


def test_trace_to_stdout(capsys):
    code, out = run_cli(capsys, "trace", CORPUS / "linear.kog")
    doc = json.loads(out)
    assert code == 0
    assert [s["rule"] for s in doc["steps"]] == ["Assign1", "Assign1", "Skip"]
    assert doc["final"]["outcome"] == "terminated" and doc["final"]["steps"] == 3
    assert all(len(s["digest-after"]) == 16 for s in doc["steps"])


def test_kog_seed_overrides_flag(monkeypatch, capsys):
    path = CORPUS / "clients.kog"
    monkeypatch.setenv("KOG_SEED", "5")
    main(["trace", str(path), "--seed", "9"])
    from_env = capsys.readouterr().out
    monkeypatch.delenv("KOG_SEED")
    main(["trace", str(path), "--seed", "5"])
    assert capsys.readouterr().out == from_env


@pytest.mark.parametrize("flag", [["--max-steps", "0"], ["--seed", "-1"], ["--policy", "fifo"]])
def test_bad_flags_are_rejected(flag):
    with pytest.raises(SystemExit) as info:
        main(["run", EDITOR, *flag])
    assert info.value.code == 2
