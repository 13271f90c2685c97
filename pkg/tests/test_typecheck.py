import random

import pytest

from conftest import CORPUS, POSITIVE
from oracles import random_hierarchy, reaches
from kog import syntax as S
from kog.parser import parse, parse_file
from kog.syntax import ANY, BOOL, NULL_TYPE, ClassType, Group, Iface
from kog.typecheck import branch_join, compose, join_types, subtype, type_program, type_stmt

HIER = parse("""
interface A { }
interface B extends A { }
interface C extends A { }
interface D extends B, C { }
interface E { }
{ skip; }
""")


def g(*names):
    return Group(frozenset(names))


@pytest.mark.parametrize("t1,t2,expected", [
    (Iface("D"), Iface("A"), True),
    (Iface("A"), Iface("D"), False),
    (Iface("E"), ANY, True),
    (g("B", "E"), Iface("A"), True),
    (g("E"), Iface("A"), False),
    (g("D", "E"), g("B", "C", "E"), True),
    (g("B"), g("B", "C"), False),
    (g(), ANY, True),
    (Iface("A"), g("A"), False),
    (NULL_TYPE, Iface("A"), True),
    (NULL_TYPE, BOOL, False),
    (BOOL, ANY, False),
])
def test_subtype_table(t1, t2, expected):
    assert subtype(HIER, t1, t2) is expected


def test_join_types():
    assert join_types(HIER, g("A", "B"), g("B", "C")) == g("B")
    assert join_types(HIER, Iface("D"), Iface("B")) == Iface("B")
    assert join_types(HIER, Iface("B"), Iface("C")) == Iface("A")
    assert join_types(HIER, Iface("B"), Iface("E")) == ANY


def test_compose_is_right_biased():
    assert compose({"x": BOOL, "y": ANY}, {"y": Iface("A")}) == {"x": BOOL, "y": Iface("A")}


def test_branch_join_reverts_one_sided_upgrades():
    base = {"x": g(), "y": g()}
    d1 = {"x": g("A"), "y": g("A", "B")}
    d2 = {"y": g("B")}
    assert branch_join(HIER, base, d1, d2) == {"x": g(), "y": g("B")}
    assert branch_join(HIER, base, {"z": g("A")}, {}) == {}


def test_join_effect_upgrades_local_group():
    program = parse("interface I { } { Group<> g; I x; x joins g as I; }")
    (s,) = program.main_body
    assert type_stmt(program, {"g": g(), "x": Iface("I")}, s, {"g"}) == {"g": g("I")}


def test_class_types_follow_implements():
    program = parse("interface I { } interface J extends I { } class C() implements J { } { skip; }")
    assert subtype(program, ClassType("C"), Iface("I"))
    assert not subtype(program, ClassType("C"), g("I"))
    assert subtype(program, ClassType(S.MAIN_CLASS), ANY)


@pytest.mark.parametrize("name", POSITIVE + ["linear"])
def test_positive_corpus_is_accepted(name):
    assert type_program(parse_file(CORPUS / f"{name}.kog")) == []


@pytest.mark.parametrize("path", sorted((CORPUS / "negative").glob("*.kog")), ids=lambda p: p.name)
def test_negative_corpus_tag(path):
    expected = path.read_text().splitlines()[0].removeprefix("// expect:").strip()
    errors = type_program(parse_file(path))
    assert errors and errors[0].rule == expected
    assert errors[0].pos is not None


def test_errors_accumulate_across_methods_but_stop_within_one():
    program = parse("""
    interface I { Bool f(); Bool g(); }
    class C() implements I {
        Bool f() { Bool r; Group<> x; r = x; r = x; return r; }
        Bool g() { Bool r; Group<> x; r = x; return r; }
    }
    { skip; }
    """)
    errors = type_program(program)
    assert [e.rule for e in errors] == ["T-Assign", "T-Assign"]


def test_inspect_accepts_interface_target_and_scopes_alias():
    program = parse("""
    interface I { Bool f(); } interface J { Bool h(); }
    { I x; Bool r; x subtypeOf J y { r = y.h(); r = y.f(); } else { skip; } }
    """)
    assert type_program(program) == []
    program = parse("""
    interface I { } interface J { Bool h(); }
    { I x; Bool r; x subtypeOf J y { skip; } else { skip; } r = y.h(); }
    """)
    assert [e.rule for e in type_program(program)] == ["T-Var"]


def test_ambiguous_inherited_signature():
    program = parse("interface A { Bool f(); } interface B { Bool f(Bool x); } interface C extends A, B { } { skip; }")
    assert [e.rule for e in type_program(program)] == ["AmbiguousSignature"]


def test_random_hierarchies_match_reachability():
    rng = random.Random(11)
    for _ in range(50):
        program, names, parents = random_hierarchy(rng)
        for a in names:
            for b in names:
                assert subtype(program, Iface(a), Iface(b)) == reaches(parents, a, b)


def test_extra_class_methods_only_reachable_through_this():
    header = "interface I { Bool f(); } class C() implements I { Bool f() { Bool r; r = this.g(); return r; } Bool g() { Bool r; return r; } }"
    assert type_program(parse(header + " { I c; Bool r; c = new C(); r = c.f(); }")) == []
    errors = type_program(parse(header + " { I c; Bool r; c = new C(); r = c.g(); }"))
    assert [e.rule for e in errors] == ["T-Call"]
