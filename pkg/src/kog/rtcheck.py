"""Runtime typing of configurations and the subject-reduction harness.

A configuration is well typed when every stored value inhabits the type of
its binding, every export entry is backed by its member, and every process
continuation type-checks under the canonical runtime environment composed
with the object's fields and the process's locals.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from . import runtime as R
from . import syntax as S
from .errors import TypeCheckError
from .syntax import NULL, NULL_TYPE, BOOL, ClassType, Group, Grp, Iface, Obj, Program
from .typecheck import Checker, subtype
from .runtime import Configuration, Violation


def canonical_env(cfg: Configuration) -> dict:
    """Runtime types: objects get their class, groups the set they currently export."""
    env = {Obj(o.id): ClassType(o.cls) for o in cfg.objects.values()}
    for g, exports in cfg.groups.items():
        env[Grp(g)] = Group(frozenset(i for _, i in exports))
    return env


def value_type(env: dict, v):
    if v is True or v is False:
        return BOOL
    if v is NULL:
        return NULL_TYPE
    return env[v]


def _binding_types(binding) -> dict:
    return {name: t for name, (t, _) in binding.items()}


RtViolation = Violation


def check_config(program: Program, env: dict | None, cfg: Configuration) -> list[Violation]:
    """Every violation of the runtime typing rules in ``cfg`` (empty when well typed)."""
    checker = Checker(program)
    if env is None:
        env = canonical_env(cfg)
    out: list[Violation] = []

    def check_binding(where, binding):
        for name, (t, v) in binding.items():
            if isinstance(v, (Obj, Grp)) and v not in env:
                out.append(Violation("RTT-Config", f"{where}.{name}", f"dangling reference {v}"))
                continue
            vt = value_type(env, v)
            if not subtype(program, vt, t):
                out.append(Violation("RTT-Sub", f"{where}.{name}",
                                     f"value {S.render_value(v)} : {vt} does not inhabit {t}"))

    for g, exports in cfg.groups.items():
        for v, iface in sorted(exports, key=R._entry_key):
            if v not in env:
                out.append(Violation("RTT-Exp", g, f"exported {v} does not exist"))
            elif not subtype(program, env[v], Iface(iface)):
                out.append(Violation("RTT-Exp", g, f"{v} : {env[v]} exported as {iface}"))

    for o in cfg.objects.values():
        check_binding(o.id, o.fields)
        for depth, proc in enumerate(o.stack):
            where = f"{o.id}[{depth}]"
            if proc.error:
                out.append(Violation("RTT-Proc", where, "error process"))
                continue
            where = f"{o.id}[{depth}]:{proc.cls}.{proc.method}"
            check_binding(where, proc.locals)
            ctx = dict(env)
            ctx.update(_binding_types(o.fields))
            ctx.update(_binding_types(proc.locals))
            expected = None
            if proc.ret is not None:
                decl = program.class_table.get(proc.cls)
                m = decl.method(proc.method) if decl else None
                expected = m.sig.ret if m else None
            try:
                checker.check_body(ctx, proc.stmts, set(proc.locals), proc.ret, expected)
            except TypeCheckError as exc:
                out.append(Violation("RTT-Proc", where, f"{exc.rule}: {exc.message}"))
    return out


def check_state(cfg: Configuration) -> list[Violation]:
    return check_config(cfg.program, None, cfg)


def growth_violations(before: Configuration, t, after: Configuration) -> list[Violation]:
    """The runtime environment may only grow: object types fixed, group types only improve."""
    program = before.program
    old, new = canonical_env(before), canonical_env(after)
    out = []
    for v, t_old in old.items():
        t_new = new.get(v)
        if t_new is None:
            out.append(Violation("RTT-Growth", str(v), f"{v} disappeared after {t}"))
        elif isinstance(v, Obj) and t_new != t_old:
            out.append(Violation("RTT-Growth", str(v), f"{v} changed class after {t}"))
        elif isinstance(v, Grp) and not subtype(program, t_new, t_old):
            out.append(Violation("RTT-Growth", str(v), f"{v} : {t_old} became {t_new} after {t}"))
    return out


def leave_violations(before: Configuration, t, after: Configuration) -> list[Violation]:
    """A Leave step must never shrink the interfaces a group offers."""
    if t.rule not in ("Leave1", "Leave2"):
        return []
    program = before.program
    g = t.partner
    if t.rule == "Leave2":
        if before.groups[g] == after.groups[g]:
            return []
        return [Violation("Leave-Discipline", g, "Leave2 changed the export set")]
    old = R.intf(program, before.groups[g])
    new = R.intf(program, after.groups[g])
    if old == new:
        return []
    return [Violation("Leave-Discipline", g, f"intf changed from {sorted(old)} to {sorted(new)}")]


@dataclass
class HarnessReport:
    mode: str
    states: int = 0
    steps: int = 0
    runs: int = 0
    violations: list[Violation] = field(default_factory=list)
    outcomes: dict = field(default_factory=dict)
    truncated: bool = False

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "states-checked": self.states,
            "transitions-checked": self.steps,
            "violations": [v.to_json() for v in self.violations],
            "truncated": self.truncated,
        }


def step_violations(before, t, after):
    return growth_violations(before, t, after) + leave_violations(before, t, after)


def trace_harness(program: Program, seeds=range(10), max_steps: int = 100_000,
                  policy: str = "random") -> HarnessReport:
    """Type-check every configuration along seeded runs."""
    report = HarnessReport("trace")
    for seed in seeds:
        path = []
        found: list[Violation] = []

        def on_step(before, t, after):
            path.append(t)
            report.steps += 1
            local = step_violations(before, t, after) + check_state(after)
            for v in local:
                v.path = list(path)
            found.extend(local)

        start = R.initial_configuration(program)
        found.extend(check_state(start))
        result = R.run(program, policy=policy, seed=seed, max_steps=max_steps, on_step=on_step)
        report.runs += 1
        report.states += len(result.steps) + 1
        report.outcomes[result.outcome] = report.outcomes.get(result.outcome, 0) + 1
        report.violations.extend(found)
    return report


def explore_harness(program: Program, depth: int = 500, state_bound: int = 1_000_000) -> HarnessReport:
    """Type-check every reachable configuration within the bounds."""
    result = R.explore(program, depth=depth, state_bound=state_bound,
                       check=check_state, on_transition=step_violations)
    return HarnessReport("explore", result.states_visited, result.transitions, 0,
                         result.violations, dict(result.outcomes), result.truncated)
