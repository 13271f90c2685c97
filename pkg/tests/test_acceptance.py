"""Acceptance suite: one test per criterion, each reported as a PASS/FAIL line.

Run standalone with ``python3 tests/test_acceptance.py``.
"""
import contextlib
import json
import random
import subprocess
import sys
import time
from collections import Counter

import pytest

from conftest import CORPUS, POSITIVE
from oracles import group_le, intf_oracle, random_hierarchy, reaches, subsets
from kog import rtcheck, runtime as R
from kog.parser import parse_file
from kog.syntax import ANY, Group, Iface, Obj
from kog.typecheck import subtype, type_program

ACCEPTANCE_RESULTS = {}


@contextlib.contextmanager
def criterion(n, title):
    notes = []
    try:
        yield notes
    except BaseException as exc:
        ACCEPTANCE_RESULTS[n] = (title, False, str(exc).splitlines()[0] if str(exc) else type(exc).__name__)
        print(f"criterion {n}: FAIL  {title}")
        raise
    ACCEPTANCE_RESULTS[n] = (title, True, "; ".join(notes))
    print(f"criterion {n}: PASS  {title}")


def kog(*args, env=None):
    return subprocess.run([sys.executable, "-m", "kog", *map(str, args)],
                          capture_output=True, text=True, env=env)


def test_1_editor_end_to_end():
    with criterion(1, "editor program: typechecks, terminates on seeds 0-9, editor group covers both services") as notes:
        program = parse_file(CORPUS / "editor.kog")
        assert type_program(program) == []
        want = Group(frozenset({"SpellChecker", "Dictionary"}))
        slowest = 0.0
        for seed in range(10):
            seen = {}

            def on_step(before, t, after):
                if not after.objects["o1"].idle:
                    seen["main"] = after.objects["o1"].stack[-1].locals
                if t.rule in ("Leave1", "Leave2"):
                    seen["leave"] = t.rule
                    seen["old"] = before.objects[t.obj].stack[0].locals["od"][1]

            start = time.perf_counter()
            result = R.run(program, seed=seed, on_step=on_step)
            slowest = max(slowest, time.perf_counter() - start)
            assert result.outcome == "terminated", f"seed {seed}: {result.outcome}"
            final = result.final
            editor = seen["main"]["editor"][1]
            env = rtcheck.canonical_env(final)
            assert subtype(program, env[editor], want), f"seed {seed}: editor is {env[editor]}"
            assert seen["leave"] == "Leave1", f"seed {seed}: old dictionary could not leave"
            exports = final.groups[editor.id]
            assert (seen["old"], "Dictionary") not in exports
            fresh = seen["main"]["fresh"][1]
            assert (fresh, "Dictionary") in exports
            assert any(program.iface_le(i, "Dictionary") for i in R.intf(program, exports))
        assert slowest < 1.0, f"slowest seed took {slowest:.3f}s"
        notes.append(f"slowest seed {slowest * 1000:.0f} ms")


def _explore_corpus(on_transition=None, check=None):
    results = {}
    for name in POSITIVE:
        program = parse_file(CORPUS / f"{name}.kog")
        results[name] = (program, R.explore(program, depth=300, state_bound=100_000,
                                            check=check, on_transition=on_transition))
    return results


def test_2_subject_reduction():
    with criterion(2, "subject reduction over exhaustive exploration of the corpus") as notes:
        assert len(POSITIVE) >= 6
        start = time.perf_counter()
        coverage = Counter()
        states = 0
        for name in POSITIVE:
            program = parse_file(CORPUS / f"{name}.kog")
            assert type_program(program) == [], name
            assert rtcheck.check_state(R.initial_configuration(program)) == [], f"{name}: initial state"
            report = rtcheck.explore_harness(program, depth=300, state_bound=100_000)
            assert report.ok, f"{name}: {report.violations[0].to_json()}"
            assert "error-process" not in report.outcomes, name
            assert not report.truncated, f"{name}: exploration truncated"
            states += report.states
            coverage += R.explore(program, depth=300, state_bound=100_000).rule_counts
        missing = set(R.RULES) - set(coverage)
        assert not missing, f"rules never fired: {sorted(missing)}"
        elapsed = time.perf_counter() - start
        assert elapsed < 60, f"{elapsed:.1f}s"
        notes.append(f"{states} states, 19/19 rules, {elapsed:.2f}s")


NEGATIVE = sorted((CORPUS / "negative").glob("*.kog"))


def test_3_negative_corpus():
    with criterion(3, "negative corpus rejected with the expected rule tags") as notes:
        assert len(NEGATIVE) >= 8
        tags = set()
        for path in NEGATIVE:
            expected = path.read_text().splitlines()[0].removeprefix("// expect:").strip()
            errors = type_program(parse_file(path))
            assert errors, f"{path.name} was accepted"
            assert errors[0].rule == expected, f"{path.name}: got {errors[0].rule}, expected {expected}"
            tags.add(expected)
        required = {"LocalRequired", "T-Call", "T-New", "T-Return", "T-Inspect", "T-Leave"}
        assert required <= tags, f"missing {sorted(required - tags)}"
        notes.append(f"{len(NEGATIVE)} programs")


def test_4_intf_oracle():
    with criterion(4, "intf agrees with the brute-force oracle on 1000 random export sets"):
        rng = random.Random(4)
        for trial in range(1000):
            program, names, parents = random_hierarchy(rng, 5)
            members = [Obj(f"o{k}") for k in range(1, 4)]
            entries = {(rng.choice(members), rng.choice(names)) for _ in range(rng.randint(0, 6))}
            got = set(R.intf(program, frozenset(entries)))
            assert got == intf_oracle(parents, entries), f"trial {trial}: {entries}"


def test_5_subtyping_properties():
    with criterion(5, "subtyping is reflexive, transitive and matches the for-all/exists group rule"):
        rng = random.Random(5)
        for trial in range(200):
            program, names, parents = random_hierarchy(rng, 5)
            types = [Iface(n) for n in names] + [ANY]
            for a in types:
                assert subtype(program, a, a)
                for b in types:
                    assert subtype(program, a, b) == reaches(parents, a.name, b.name), (trial, a, b)
                    for c in types:
                        if subtype(program, a, b) and subtype(program, b, c):
                            assert subtype(program, a, c), (trial, a, b, c)
            groups = [frozenset(s) for s in subsets(names, 3)]
            for s1 in groups:
                g1 = Group(s1)
                assert subtype(program, g1, g1)
                for s2 in groups:
                    assert subtype(program, g1, Group(s2)) == group_le(parents, s1, s2), (trial, s1, s2)
                    if s1 >= s2:
                        assert subtype(program, g1, Group(s2))


def test_6_leave_discipline():
    with criterion(6, "every Leave1 preserves intf and every Leave2 leaves exports unchanged") as notes:
        counts = Counter()
        bad = []

        def hook(before, t, after):
            if t.rule == "Leave1":
                counts[t.rule] += 1
                parents = _parents(before.program)
                if intf_oracle(parents, before.groups[t.partner]) != intf_oracle(parents, after.groups[t.partner]):
                    bad.append(t)
            elif t.rule == "Leave2":
                counts[t.rule] += 1
                if before.groups[t.partner] != after.groups[t.partner]:
                    bad.append(t)
            return []

        _explore_corpus(on_transition=hook)
        assert counts["Leave1"] > 0 and counts["Leave2"] > 0, dict(counts)
        assert not bad, f"{len(bad)} counterexamples, first {bad[0]}"
        notes.append(f"{counts['Leave1']} Leave1, {counts['Leave2']} Leave2")


def _parents(program):
    return {i.name: list(i.extends) for i in program.interfaces}


@pytest.mark.parametrize("policy", ["random", "round-robin"])
def test_7_determinism(tmp_path, policy):
    with criterion(7, "identical invocations give byte-identical JSON traces"):
        outputs = []
        for k in range(2):
            path = tmp_path / f"trace{k}.json"
            done = kog("run", CORPUS / "clients.kog", "--seed", 7, "--policy", policy, "--json", path)
            assert done.returncode == 0, done.stdout + done.stderr
            outputs.append(path.read_bytes())
        assert outputs[0] == outputs[1]
        doc = json.loads(outputs[0])
        assert doc["final"]["outcome"] == "terminated"
        assert doc["steps"] and {"index", "rule", "object", "stmt-rendering", "digest-after"} <= set(doc["steps"][0])


def test_8_stuck_detection():
    with criterion(8, "stuck programs exit 2 naming the blocked rule"):
        cycle = kog("run", CORPUS / "stuck" / "mutual_call.kog")
        assert cycle.returncode == 2, cycle.stdout
        assert "wait-cycle" in cycle.stdout and "Call1" in cycle.stdout, cycle.stdout
        acquire = kog("run", CORPUS / "stuck" / "no_provider.kog")
        assert acquire.returncode == 2, acquire.stdout
        assert "Acquire no-match" in acquire.stdout, acquire.stdout


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
