"""Runtime configurations and the small-step reduction rules.

A configuration holds objects (each with a field binding and a stack of
processes, top first) and groups (each a set of ``(value, interface)``
export entries).  Every step applies exactly one rule instance for one
acting object; concurrency is interleaving.
"""
from __future__ import annotations

import hashlib
import random
from collections import Counter, deque
from dataclasses import dataclass, field, replace

from . import syntax as S
from .errors import IllegalTransition
from .syntax import NULL, BoolType, ClassType, Group, Grp, Iface, Obj, Program, Type
from .typecheck import subtype

RULES = (
    "Skip", "Assign1", "Assign2", "New-Group", "Cond1", "Cond2", "While",
    "Call1", "Call2", "Call3", "Return1", "Return2", "New-Object", "Join",
    "Acquire", "Leave1", "Leave2", "Query1", "Query2",
)
RULE_ORDER = {name: i for i, name in enumerate(RULES)}

EXIT_CODES = {
    "terminated": 0,
    "stuck": 2,
    "error-process": 3,
    "runtime-error": 3,
    "budget-exhausted": 4,
}

Binding = dict  # name -> (Type, Value)


# ---------------------------------------------------------------- state

@dataclass(frozen=True, eq=False)
class Process:
    method: str
    cls: str
    locals: Binding
    stmts: tuple
    ret: str | None
    error: bool = False

    def __repr__(self):
        if self.error:
            return "Process(error)"
        return f"Process({self.cls}.{self.method}, {len(self.stmts)} stmts, ret={self.ret})"


ERROR_PROCESS = Process("error", "", {}, (), None, error=True)


@dataclass(frozen=True, eq=False)
class ObjectState:
    id: str
    cls: str
    fields: Binding
    stack: tuple  # tuple[Process, ...], active process first

    @property
    def idle(self) -> bool:
        return not self.stack

    @property
    def ref(self) -> Obj:
        return Obj(self.id)


@dataclass(frozen=True, eq=False)
class Configuration:
    program: Program = field(repr=False)
    objects: dict  # id -> ObjectState, in creation order
    groups: dict  # id -> frozenset[(Value, str)], in creation order
    next_object: int = 1
    next_group: int = 1

    def exports(self, g: str) -> frozenset:
        return self.groups[g]


@dataclass(frozen=True, order=True)
class Transition:
    rule: str
    obj: str
    partner: str | None = None
    choice: tuple | None = None

    def to_json(self) -> dict:
        out = {"rule": self.rule, "object": self.obj}
        if self.partner is not None:
            out["partner"] = self.partner
        if self.choice is not None:
            value, iface = self.choice
            out["choice"] = {"value": S.render_value(value), "interface": iface}
        return out

    def __str__(self):
        text = f"{self.rule}@{self.obj}"
        if self.partner:
            text += f"->{self.partner}"
        if self.choice:
            text += f"[{S.render_value(self.choice[0])}:{self.choice[1]}]"
        return text


def _id_key(ident: str):
    return (ident[0], int(ident[1:]))


# ---------------------------------------------------------------- auxiliary functions

def default(t: Type):
    return False if isinstance(t, BoolType) else NULL


def _defaults(decls) -> Binding:
    return {d.name: (d.type, default(d.type)) for d in decls}


def bind(program: Program, method: str, cls: str, args) -> Process:
    decl = program.class_table.get(cls)
    m = decl.method(method) if decl is not None else None
    if m is None or len(m.sig.params) != len(args):
        return ERROR_PROCESS
    binding = {p.name: (p.type, v) for p, v in zip(m.sig.params, args)}
    binding.update(_defaults(m.locals))
    return Process(method, cls, binding, m.body, m.ret)


def atts(program: Program, cls: str, args, self_ref: Obj) -> Binding:
    decl = program.cls(cls)
    binding = _defaults(decl.fields)
    binding.update((p.name, (p.type, v)) for p, v in zip(decl.params, args))
    binding["this"] = (ClassType(cls), self_ref)
    return binding


def init(program: Program, cls: str) -> Process:
    decl = program.cls(cls)
    return Process("init", cls, _defaults(decl.init_locals), decl.init_body, None)


def intf(program: Program, exports) -> frozenset[str]:
    names = {iface for _, iface in exports}
    return frozenset(i for i in names if not any(program.iface_lt(j, i) for j in names))


def group_view(t: Type) -> frozenset[str] | None:
    if isinstance(t, Group):
        return t.ifaces
    if isinstance(t, Iface):
        return frozenset([t.name])
    return None


def initial_configuration(program: Program) -> Configuration:
    main = Process("main", S.MAIN_CLASS, _defaults(program.main_locals), program.main_body, None)
    obj = _normalize(ObjectState("o1", S.MAIN_CLASS, {}, (main,)))
    return Configuration(program, {"o1": obj}, {}, 2, 1)


# ---------------------------------------------------------------- evaluation helpers

def _lookup(obj: ObjectState, proc: Process, x: str):
    if x in proc.locals:
        return proc.locals[x]
    if x in obj.fields:
        return obj.fields[x]
    return None


def _value(obj: ObjectState, proc: Process, atom):
    if isinstance(atom, str):
        entry = _lookup(obj, proc, atom)
        return None if entry is None else entry[1]
    return atom


def _expr_value(obj, proc, e):
    if isinstance(e, S.Var):
        return _value(obj, proc, e.name)
    if isinstance(e, S.BoolLit):
        return e.value
    return e.value  # Val


def _is_ref(v) -> bool:
    return isinstance(v, (Obj, Grp))


def _normalize(obj: ObjectState) -> ObjectState:
    """Drop finished query scopes and pop finished return-free processes."""
    stack = obj.stack
    while stack:
        top = stack[0]
        if top.error:
            break
        stmts, binding = top.stmts, top.locals
        changed = False
        while stmts and isinstance(stmts[0], S.DropVar):
            if not changed:
                binding = dict(binding)
                changed = True
            binding.pop(stmts[0].name, None)
            stmts = stmts[1:]
        if changed:
            top = replace(top, stmts=stmts, locals=binding)
            stack = (top,) + stack[1:]
        if not top.stmts and top.ret is None:
            stack = stack[1:]
            continue
        break
    if stack is obj.stack:
        return obj
    return replace(obj, stack=stack)


def _with_top(obj: ObjectState, top: Process) -> ObjectState:
    return replace(obj, stack=(top,) + obj.stack[1:])


def _advance(top: Process, new_head=(), **changes) -> Process:
    return replace(top, stmts=tuple(new_head) + top.stmts[1:], **changes)


# ---------------------------------------------------------------- enabledness

def _acquire_candidates(cfg: Configuration, obj, proc, e: S.Acquire):
    program = cfg.program
    if e.in_var is not None:
        g = _value(obj, proc, e.in_var)
        if not isinstance(g, Grp):
            return None
        pool = cfg.groups[g.id]
    else:
        pool = set()
        for exports in cfg.groups.values():
            pool |= exports
    excluded = {_value(obj, proc, x) for x in e.excluded}
    found = [
        (v, j) for v, j in pool
        if program.iface_le(j, e.iface) and v not in excluded
    ]
    return sorted(found, key=_entry_key)


def _entry_key(entry):
    v, iface = entry
    return (type(v).__name__, _id_key(v.id), iface)


def object_transitions(cfg: Configuration, oid: str) -> list[Transition]:
    """All rule instances for which ``oid`` is the acting object."""
    obj = cfg.objects[oid]
    if obj.idle:
        return []
    top = obj.stack[0]
    if top.error:
        return []
    program = cfg.program
    if not top.stmts:
        if top.ret is None:
            return []
        if len(obj.stack) == 1:
            for other in cfg.objects.values():
                if other.id != oid and other.stack:
                    head = other.stack[0].stmts[:1]
                    if (head and isinstance(head[0], S.Assign) and isinstance(head[0].expr, S.Wait)
                            and head[0].expr.obj.id == oid and head[0].expr.method == top.method):
                        return [Transition("Return1", oid, other.id)]
            return []
        below = obj.stack[1]
        head = below.stmts[:1]
        if (head and isinstance(head[0], S.Assign) and isinstance(head[0].expr, S.Wait)
                and head[0].expr.obj.id == oid and head[0].expr.method == top.method):
            return [Transition("Return2", oid)]
        return []

    s = top.stmts[0]
    if isinstance(s, S.Skip):
        return [Transition("Skip", oid)]
    if isinstance(s, S.While):
        return [Transition("While", oid)]
    if isinstance(s, S.If):
        v = _value(obj, top, s.cond)
        if v is True:
            return [Transition("Cond1", oid)]
        if v is False:
            return [Transition("Cond2", oid)]
        return []
    if isinstance(s, S.Assign):
        e = s.expr
        if isinstance(e, (S.Var, S.BoolLit, S.Val)):
            if s.target in top.locals:
                rule = "Assign1"
            elif s.target in obj.fields:
                rule = "Assign2"
            else:
                return []
            if isinstance(e, S.Var) and _lookup(obj, top, e.name) is None:
                return []
            return [Transition(rule, oid)]
        if isinstance(e, S.NewGroup):
            return [Transition("New-Group", oid)]
        if isinstance(e, S.New):
            if e.cls not in program.class_table:
                return []
            return [Transition("New-Object", oid)]
        if isinstance(e, S.Call):
            target = _value(obj, top, e.target)
            if isinstance(target, Obj):
                if target.id == oid:
                    return [Transition("Call2", oid)]
                if target.id in cfg.objects and cfg.objects[target.id].idle:
                    return [Transition("Call1", oid, target.id)]
                return []
            if isinstance(target, Grp):
                out = [
                    Transition("Call3", oid, target.id, (v, i))
                    for v, i in cfg.groups[target.id]
                    if e.method in S.method_names(program, Iface(i))
                ]
                return sorted(out, key=lambda t: _entry_key(t.choice))
            return []
        if isinstance(e, S.Acquire):
            found = _acquire_candidates(cfg, obj, top, e)
            if not found:
                return []
            partner = None
            if e.in_var is not None:
                partner = _value(obj, top, e.in_var).id
            return [Transition("Acquire", oid, partner, entry) for entry in found]
        return []  # Wait: blocked until the callee returns
    if isinstance(s, S.Joins):
        v = _value(obj, top, s.member)
        entry = top.locals.get(s.group)
        if not _is_ref(v) or entry is None or not isinstance(entry[0], Group) or not isinstance(entry[1], Grp):
            return []
        return [Transition("Join", oid, entry[1].id)]
    if isinstance(s, S.Leaves):
        v = _value(obj, top, s.member)
        g = _value(obj, top, s.group)
        if not _is_ref(v) or not isinstance(g, Grp):
            return []
        exports = cfg.groups[g.id]
        after = exports - {(v, i) for i in s.ifaces}
        ok = intf(program, exports) == intf(program, after)
        return [Transition("Leave1" if ok else "Leave2", oid, g.id)]
    if isinstance(s, S.SubtypeOf):
        entry = _lookup(obj, top, s.target)
        if entry is None or s.alias in top.locals or s.alias in obj.fields:
            return []
        t, v = entry
        if isinstance(v, Obj):
            return [Transition("Query2", oid, v.id)]
        if not isinstance(v, Grp) or group_view(t) is None:
            return []
        hit = any(program.iface_le(j, s.iface) for _, j in cfg.groups[v.id])
        return [Transition("Query1" if hit else "Query2", oid, v.id)]
    return []


def enabled(cfg: Configuration) -> list[Transition]:
    out = []
    for oid in cfg.objects:
        out.extend(object_transitions(cfg, oid))
    return out


# ---------------------------------------------------------------- application

def apply(cfg: Configuration, t: Transition) -> Configuration:
    if t not in object_transitions(cfg, t.obj):
        raise IllegalTransition(f"{t} is not enabled")
    program = cfg.program
    objects = dict(cfg.objects)
    groups = cfg.groups
    next_object, next_group = cfg.next_object, cfg.next_group
    obj = objects[t.obj]
    top = obj.stack[0]
    s = top.stmts[0] if top.stmts else None
    rule = t.rule

    def put(o: ObjectState):
        objects[o.id] = _normalize(o)

    if rule == "Skip":
        put(_with_top(obj, _advance(top)))
    elif rule in ("Assign1", "Assign2"):
        v = _expr_value(obj, top, s.expr)
        if rule == "Assign1":
            binding = dict(top.locals)
            binding[s.target] = (binding[s.target][0], v)
            put(_with_top(obj, _advance(top, locals=binding)))
        else:
            fields = dict(obj.fields)
            fields[s.target] = (fields[s.target][0], v)
            put(replace(obj, fields=fields, stack=(_advance(top),) + obj.stack[1:]))
    elif rule == "New-Group":
        g = f"g{next_group}"
        next_group += 1
        groups = dict(groups)
        groups[g] = frozenset()
        put(_with_top(obj, _advance(top, [S.Assign(s.target, S.Val(Grp(g)), s.pos)])))
    elif rule == "New-Object":
        e = s.expr
        new_id = f"o{next_object}"
        next_object += 1
        args = [_value(obj, top, a) for a in e.args]
        created = ObjectState(new_id, e.cls, atts(program, e.cls, args, Obj(new_id)),
                              (init(program, e.cls),))
        put(_with_top(obj, _advance(top, [S.Assign(s.target, S.Val(Obj(new_id)), s.pos)])))
        put(created)
    elif rule in ("Cond1", "Cond2"):
        branch = s.then if rule == "Cond1" else s.orelse
        put(_with_top(obj, _advance(top, branch)))
    elif rule == "While":
        unfolded = S.If(s.cond, s.body + (s,), (S.Skip(s.pos),), s.pos)
        put(_with_top(obj, _advance(top, [unfolded])))
    elif rule in ("Call1", "Call2"):
        e = s.expr
        target = _value(obj, top, e.target)
        args = [_value(obj, top, a) for a in e.args]
        callee_cls = obj.cls if rule == "Call2" else objects[target.id].cls
        pr = bind(program, e.method, callee_cls, args)
        waiting = _advance(top, [S.Assign(s.target, S.Wait(target, e.method, e.pos), s.pos)])
        if rule == "Call2":
            put(replace(obj, stack=(pr, waiting) + obj.stack[1:]))
        else:
            put(_with_top(obj, waiting))
            put(replace(objects[target.id], stack=(pr,)))
    elif rule == "Call3":
        e = s.expr
        v, _ = t.choice
        forwarded = S.Call(v, e.method, e.args, e.pos)
        put(_with_top(obj, _advance(top, [S.Assign(s.target, forwarded, s.pos)])))
    elif rule == "Return1":
        v = _value(obj, top, top.ret)
        caller = objects[t.partner]
        ctop = caller.stack[0]
        cs = ctop.stmts[0]
        put(replace(obj, stack=()))
        put(_with_top(caller, _advance(ctop, [S.Assign(cs.target, S.Val(v), cs.pos)])))
    elif rule == "Return2":
        v = _value(obj, top, top.ret)
        below = obj.stack[1]
        bs = below.stmts[0]
        resumed = _advance(below, [S.Assign(bs.target, S.Val(v), bs.pos)])
        put(replace(obj, stack=(resumed,) + obj.stack[2:]))
    elif rule == "Join":
        v = _value(obj, top, s.member)
        gt, g = top.locals[s.group]
        groups = dict(groups)
        groups[g.id] = groups[g.id] | {(v, i) for i in s.ifaces}
        binding = dict(top.locals)
        binding[s.group] = (Group(gt.ifaces | frozenset(s.ifaces)), g)
        put(_with_top(obj, _advance(top, locals=binding)))
    elif rule == "Acquire":
        v, _ = t.choice
        put(_with_top(obj, _advance(top, [S.Assign(s.target, S.Val(v), s.pos)])))
    elif rule in ("Leave1", "Leave2"):
        if rule == "Leave1":
            v = _value(obj, top, s.member)
            groups = dict(groups)
            groups[t.partner] = groups[t.partner] - {(v, i) for i in s.ifaces}
            put(_with_top(obj, _advance(top, s.then)))
        else:
            put(_with_top(obj, _advance(top, s.orelse)))
    elif rule == "Query1":
        t_x, g = _lookup(obj, top, s.target)
        binding = dict(top.locals)
        binding[s.alias] = (Group(group_view(t_x) | {s.iface}), g)
        put(_with_top(obj, _advance(top, s.then + (S.DropVar(s.alias, s.pos),), locals=binding)))
    elif rule == "Query2":
        put(_with_top(obj, _advance(top, s.orelse)))
    else:
        raise IllegalTransition(f"unknown rule {rule}")
    return Configuration(program, objects, groups, next_object, next_group)


# ---------------------------------------------------------------- diagnosis

def active_statement(cfg: Configuration, oid: str):
    obj = cfg.objects[oid]
    if obj.idle or obj.stack[0].error or not obj.stack[0].stmts:
        return None
    return obj.stack[0].stmts[0]


def render_active(cfg: Configuration, oid: str) -> str:
    from .parser import show_stmt

    obj = cfg.objects[oid]
    if obj.idle:
        return "idle"
    top = obj.stack[0]
    if top.error:
        return "error"
    if not top.stmts:
        return f"return {top.ret};"
    return show_stmt(top.stmts[0])


def fault(cfg: Configuration, oid: str) -> str | None:
    """A runtime error at the active statement: a null or non-reference operand where a reference is required."""
    obj = cfg.objects[oid]
    s = active_statement(cfg, oid)
    if s is None:
        return None
    top = obj.stack[0]

    def bad(atom):
        v = _value(obj, top, atom)
        return None if _is_ref(v) else f"{S.render_atom(atom)} is {S.render_value(v) if v is not None else 'unbound'}"

    problem = None
    if isinstance(s, S.If):
        v = _value(obj, top, s.cond)
        if not isinstance(v, bool):
            problem = f"condition {s.cond} is {S.render_value(v) if v is not None else 'unbound'}"
    elif isinstance(s, S.Assign):
        e = s.expr
        if _lookup(obj, top, s.target) is None:
            problem = f"{s.target} is unbound"
        elif isinstance(e, S.Var) and _lookup(obj, top, e.name) is None:
            problem = f"{e.name} is unbound"
        elif isinstance(e, S.Call):
            problem = bad(e.target)
        elif isinstance(e, S.Acquire) and e.in_var is not None:
            v = _value(obj, top, e.in_var)
            if not isinstance(v, Grp):
                problem = f"acquire in {e.in_var}: not a group"
        elif isinstance(e, S.New) and e.cls not in cfg.program.class_table:
            problem = f"no class {e.cls}"
    elif isinstance(s, S.Joins):
        problem = bad(s.member)
        entry = top.locals.get(s.group)
        if problem is None and (entry is None or not isinstance(entry[1], Grp)):
            problem = f"join target {s.group} is not a local group"
    elif isinstance(s, S.Leaves):
        problem = bad(s.member)
        if problem is None and not isinstance(_value(obj, top, s.group), Grp):
            problem = f"leave target {s.group} is not a group"
    elif isinstance(s, S.SubtypeOf):
        problem = bad(s.target)
    return f"{oid}: runtime error at '{render_active(cfg, oid)}': {problem}" if problem else None


def has_error_process(cfg: Configuration) -> bool:
    return any(p.error for o in cfg.objects.values() for p in o.stack)


def diagnose(cfg: Configuration) -> list[str]:
    """Explain why each non-idle object cannot move, and report wait cycles."""
    lines = []
    edges: dict[str, tuple[str, str]] = {}
    for oid, obj in cfg.objects.items():
        if obj.idle:
            continue
        top = obj.stack[0]
        if top.error:
            lines.append(f"{oid}: error process")
            continue
        if object_transitions(cfg, oid):
            continue
        problem = fault(cfg, oid)
        if problem:
            lines.append(problem)
            continue
        if not top.stmts:
            lines.append(f"{oid}: at return with no waiting caller (Return1/Return2)")
            continue
        s = top.stmts[0]
        e = s.expr if isinstance(s, S.Assign) else None
        if isinstance(e, S.Wait):
            lines.append(f"{oid}: waiting-on-return from {e.obj}.{e.method}")
            edges[oid] = (e.obj.id, "wait")
        elif isinstance(e, S.Call):
            target = _value(obj, top, e.target)
            if isinstance(target, Obj):
                lines.append(f"{oid}: waiting-on-busy-callee {target} at '{render_active(cfg, oid)}' (Call1 blocked)")
                edges[oid] = (target.id, "Call1")
            else:
                lines.append(f"{oid}: no exporter of {e.method} in {target} (Call3 blocked)")
        elif isinstance(e, S.Acquire):
            lines.append(f"{oid}: blocked-acquire at '{render_active(cfg, oid)}' (Acquire no-match)")
        else:
            lines.append(f"{oid}: blocked at '{render_active(cfg, oid)}'")
    reported = set()
    for start in edges:
        path, node = [], start
        while node in edges and node not in path:
            path.append(node)
            node = edges[node][0]
        if node in path:
            cycle = path[path.index(node):]
            key = frozenset(cycle)
            if key in reported:
                continue
            reported.add(key)
            rules = sorted({edges[n][1] for n in cycle} - {"wait"}) or ["wait"]
            chain = " -> ".join(cycle + [node])
            lines.append(f"wait-cycle: {chain} ({', '.join(rules)} wait-cycle)")
    return lines


# ---------------------------------------------------------------- canonical encoding

class _Encoder:
    def __init__(self, cfg: Configuration):
        self.cfg = cfg
        self.names: dict = {}
        self.queue: deque = deque()

    def ref(self, v) -> str:
        if v is True:
            return "T"
        if v is False:
            return "F"
        if v is NULL:
            return "N"
        name = self.names.get(v)
        if name is None:
            prefix = "o" if isinstance(v, Obj) else "g"
            name = f"{prefix}{len(self.names)}"
            self.names[v] = name
            self.queue.append(v)
        return name

    def node(self, x) -> str:
        if isinstance(x, (Obj, Grp, bool)) or x is NULL:
            return self.ref(x)
        if isinstance(x, str):
            return x
        if x is None:
            return "_"
        if isinstance(x, tuple):
            return "[" + ",".join(self.node(i) for i in x) + "]"
        if isinstance(x, frozenset):
            return "{" + ",".join(sorted(self.node(i) for i in x)) + "}"
        if isinstance(x, (S.BoolType, S.Iface, S.Group, S.ClassType)):
            return str(x)
        name = type(x).__name__
        parts = [self.node(getattr(x, f)) for f in x.__dataclass_fields__ if f != "pos"]
        return name + "(" + ",".join(parts) + ")"

    def binding(self, b: Binding) -> str:
        return "{" + ";".join(f"{k}:{v[0]}={self.ref(v[1])}" for k, v in sorted(b.items())) + "}"

    def process(self, p: Process) -> str:
        if p.error:
            return "error"
        return f"{p.cls}.{p.method}{self.binding(p.locals)}{self.node(p.stmts)}ret={p.ret}"

    def encode(self) -> str:
        cfg = self.cfg
        out = []
        pending_objects = list(cfg.objects)
        pending_groups = list(cfg.groups)
        self.ref(Obj(pending_objects[0]))
        while True:
            while self.queue:
                v = self.queue.popleft()
                name = self.names[v]
                if isinstance(v, Obj):
                    o = cfg.objects[v.id]
                    procs = "|".join(self.process(p) for p in o.stack)
                    out.append(f"{name}:{o.cls}{self.binding(o.fields)}<{procs}>")
                else:
                    entries = sorted(cfg.groups[v.id], key=_entry_key)
                    out.append(f"{name}:(" + ",".join(f"{self.ref(e)}:{i}" for e, i in entries) + ")")
            rest = [Obj(o) for o in pending_objects if Obj(o) not in self.names]
            rest += [Grp(g) for g in pending_groups if Grp(g) not in self.names]
            if not rest:
                break
            self.ref(rest[0])
        return "\n".join(out)


def encode(cfg: Configuration) -> str:
    return _Encoder(cfg).encode()


def digest(cfg: Configuration) -> str:
    return hashlib.blake2b(encode(cfg).encode(), digest_size=8).hexdigest()


def state_key(cfg: Configuration) -> bytes:
    return hashlib.blake2b(encode(cfg).encode(), digest_size=16).digest()


# ---------------------------------------------------------------- scheduling

@dataclass
class Step:
    index: int
    transition: Transition
    stmt: str
    digest: str

    def to_json(self) -> dict:
        out = {"index": self.index}
        out.update(self.transition.to_json())
        out["stmt-rendering"] = self.stmt
        out["digest-after"] = self.digest
        return out


@dataclass
class RunResult:
    outcome: str
    steps: list[Step]
    final: Configuration
    diagnosis: list[str]

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.outcome]


def classify(cfg: Configuration, transitions) -> tuple[str | None, list[str]]:
    """Outcome of a configuration if execution must stop here, else None."""
    if has_error_process(cfg):
        return "error-process", diagnose(cfg)
    faults = [f for f in (fault(cfg, o) for o in cfg.objects) if f]
    if faults:
        return "runtime-error", faults
    if not transitions:
        if all(o.idle for o in cfg.objects.values()):
            return "terminated", []
        return "stuck", diagnose(cfg)
    return None, []


class RoundRobin:
    def __init__(self):
        self.last: str | None = None

    def choose(self, cfg: Configuration, transitions):
        ids = sorted({t.obj for t in transitions}, key=_id_key)
        pick = ids[0]
        if self.last is not None:
            later = [i for i in ids if _id_key(i) > _id_key(self.last)]
            if later:
                pick = later[0]
        self.last = pick
        mine = [t for t in transitions if t.obj == pick]
        return min(mine, key=lambda t: RULE_ORDER[t.rule])


class SeededRandom:
    def __init__(self, seed: int):
        self.rng = random.Random(seed)

    def choose(self, cfg, transitions):
        return transitions[self.rng.randrange(len(transitions))]


def make_policy(policy: str, seed: int):
    if policy in ("random", "seeded-random"):
        return SeededRandom(seed)
    if policy == "round-robin":
        return RoundRobin()
    raise ValueError(f"unknown policy {policy}")


def run(program: Program, policy: str = "random", seed: int = 0, max_steps: int = 100_000,
        on_step=None) -> RunResult:
    """Execute one schedule. ``on_step(before, transition, after)`` observes every step."""
    chooser = make_policy(policy, seed)
    cfg = initial_configuration(program)
    steps: list[Step] = []
    while True:
        transitions = enabled(cfg)
        outcome, diagnosis = classify(cfg, transitions)
        if outcome is not None:
            return RunResult(outcome, steps, cfg, diagnosis)
        if len(steps) >= max_steps:
            return RunResult("budget-exhausted", steps, cfg, [])
        t = chooser.choose(cfg, transitions)
        rendered = render_active(cfg, t.obj)
        after = apply(cfg, t)
        steps.append(Step(len(steps), t, rendered, digest(after)))
        if on_step is not None:
            on_step(cfg, t, after)
        cfg = after


# ---------------------------------------------------------------- exhaustive exploration

@dataclass
class Violation:
    rule: str
    location: str
    message: str
    path: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"rule": self.rule, "location": self.location, "message": self.message,
                "path": [str(t) for t in self.path]}


@dataclass
class ExploreResult:
    states_visited: int
    transitions: int
    violations: list[Violation]
    truncated: bool
    terminal: list[Configuration]
    outcomes: Counter
    rule_counts: Counter


def explore(program: Program, depth: int = 500, state_bound: int = 1_000_000,
            check=None, on_transition=None) -> ExploreResult:
    """Breadth-first enumeration of every interleaving, deduplicating isomorphic states.

    ``check(cfg)`` and ``on_transition(before, t, after)`` return lists of
    :class:`Violation`; each is reported with a witness path from the initial state.
    """
    start = initial_configuration(program)
    start_key = state_key(start)
    parents: dict[bytes, tuple] = {start_key: (None, None)}
    frontier = deque([(start, start_key, 0)])
    violations: list[Violation] = []
    terminal: list[Configuration] = []
    outcomes: Counter = Counter()
    rule_counts: Counter = Counter()
    truncated = False
    n_transitions = 0

    def path_to(key):
        out = []
        while parents[key][0] is not None:
            key, t = parents[key]
            out.append(t)
        return out[::-1]

    def report(found, key, extra=None):
        for v in found:
            v.path = path_to(key) + ([extra] if extra is not None else [])
            violations.append(v)

    if check is not None:
        report(check(start), start_key)
    while frontier:
        cfg, key, d = frontier.popleft()
        transitions = enabled(cfg)
        outcome, _ = classify(cfg, transitions)
        if outcome is not None:
            outcomes[outcome] += 1
            terminal.append(cfg)
            continue
        if d >= depth:
            truncated = True
            continue
        for t in transitions:
            after = apply(cfg, t)
            n_transitions += 1
            rule_counts[t.rule] += 1
            if on_transition is not None:
                report(on_transition(cfg, t, after), key, t)
            k = state_key(after)
            if k in parents:
                continue
            if len(parents) >= state_bound:
                truncated = True
                continue
            parents[k] = (key, t)
            if check is not None:
                report(check(after), k)
            frontier.append((after, k, d + 1))
    return ExploreResult(len(parents), n_transitions, violations, truncated, terminal, outcomes, rule_counts)
