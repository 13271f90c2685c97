"""Static type-and-effect checking: subtyping, context algebra, and the statement/expression rules."""
from __future__ import annotations

from collections.abc import Mapping

from . import syntax as S
from .errors import AmbiguousSignature, NoSuchMethod, TypeCheckError, UndeclaredName
from .syntax import (
    ANY, ANY_NAME, BOOL, NULL_TYPE, BoolType, ClassType, Group, Iface, NullType, Program, Type,
)

Context = Mapping  # name (or runtime value) -> Type
Effect = dict


# ---------------------------------------------------------------- subtyping

def subtype(program: Program, t1: Type, t2: Type) -> bool:
    """Reflexive subtyping ``t1 ≼ t2``."""
    if t1 == t2:
        return True
    if isinstance(t1, NullType):
        return not isinstance(t2, BoolType)
    if isinstance(t1, BoolType) or isinstance(t2, (BoolType, NullType)):
        return False
    if isinstance(t2, Iface):
        k = t2.name
        if isinstance(t1, Iface):
            return program.iface_le(t1.name, k)
        if isinstance(t1, Group):
            return k == ANY_NAME or any(program.iface_le(j, k) for j in t1.ifaces)
        if isinstance(t1, ClassType):
            if t1.name not in program.class_table:
                return k == ANY_NAME
            return S.implements(program, t1.name, k)
        return False
    if isinstance(t2, Group):
        if isinstance(t1, Group):
            return all(any(program.iface_le(i, j) for i in t1.ifaces) for j in t2.ifaces)
        return False
    return False


def strict_subtype(program: Program, t1: Type, t2: Type) -> bool:
    return t1 != t2 and subtype(program, t1, t2)


# ---------------------------------------------------------------- contexts

def compose(g1: Context, g2: Context) -> dict:
    out = dict(g1)
    out.update(g2)
    return out


def join_types(program: Program, t1: Type, t2: Type) -> Type:
    """The best common supertype of two bindings of one variable (Any when none is unique)."""
    if t1 == t2:
        return t1
    if isinstance(t1, Group) and isinstance(t2, Group):
        return Group(t1.ifaces & t2.ifaces)
    if subtype(program, t1, t2):
        return t2
    if subtype(program, t2, t1):
        return t1
    candidates = [
        name for name in program.iface_table
        if subtype(program, t1, Iface(name)) and subtype(program, t2, Iface(name))
    ]
    minimal = [
        c for c in candidates if not any(program.iface_lt(d, c) for d in candidates)
    ]
    return Iface(minimal[0]) if len(minimal) == 1 else ANY


def intersect(program: Program, g1: Context, g2: Context) -> dict:
    return {x: join_types(program, g1[x], g2[x]) for x in g1 if x in g2}


def branch_join(program: Program, base: Context, d1: Context, d2: Context) -> Effect:
    """Effect of a two-way branch: upgrades survive only where both branches agree."""
    keys = [x for x in list(d1) + [k for k in d2 if k not in d1] if x in base]
    left = {x: d1.get(x, base[x]) for x in keys}
    right = {x: d2.get(x, base[x]) for x in keys}
    return intersect(program, left, right)


# ---------------------------------------------------------------- checker

def _group_view(t: Type) -> frozenset[str] | None:
    if isinstance(t, Group):
        return t.ifaces
    if isinstance(t, Iface):
        return frozenset([t.name])
    return None


class Checker:
    """Rule-by-rule checker. Methods raise :class:`TypeCheckError` on the first failure."""

    def __init__(self, program: Program):
        self.program = program

    # -- helpers

    def lookup(self, ctx: Context, atom, pos) -> Type:
        if atom is True or atom is False:
            return BOOL
        if atom is S.NULL:
            return NULL_TYPE
        if atom in ctx:
            return ctx[atom]
        if isinstance(atom, str):
            raise TypeCheckError("T-Var", f"undeclared variable {atom}", pos)
        raise TypeCheckError("RTT-Config", f"no runtime type for {atom}", pos)

    def sub(self, t1: Type, t2: Type) -> bool:
        return subtype(self.program, t1, t2)

    def need_iface(self, name: str, rule: str, pos):
        if name not in self.program.iface_table:
            raise TypeCheckError(rule, f"undeclared interface {name}", pos)

    # -- expressions

    def type_expr(self, ctx: Context, e, expected: Type) -> None:
        pos = e.pos
        if isinstance(e, S.Var):
            t = self.lookup(ctx, e.name, pos)
            if not self.sub(t, expected):
                raise TypeCheckError("T-Assign", f"{e.name} has type {t}, expected {expected}", pos)
        elif isinstance(e, S.BoolLit):
            if not self.sub(BOOL, expected):
                raise TypeCheckError("T-Assign", f"Bool literal where {expected} expected", pos)
        elif isinstance(e, S.Val):
            t = self.lookup(ctx, e.value, pos)
            if not self.sub(t, expected):
                raise TypeCheckError("RTT-Sub", f"value {S.render_value(e.value)} : {t} does not inhabit {expected}", pos)
        elif isinstance(e, S.Call):
            self.type_call(ctx, e, expected)
        elif isinstance(e, S.New):
            if e.cls not in self.program.class_table:
                raise TypeCheckError("T-New", f"undeclared class {e.cls}", pos)
            params = S.ptypes(self.program, e.cls)
            args = [self.lookup(ctx, a, pos) for a in e.args]
            if len(args) != len(params) or not all(map(self.sub, args, params)):
                raise TypeCheckError("T-New", f"arguments to new {e.cls} do not match its parameters", pos)
            if not (isinstance(expected, Iface) and S.implements(self.program, e.cls, expected.name)):
                raise TypeCheckError("T-New", f"class {e.cls} does not implement {expected}", pos)
        elif isinstance(e, S.NewGroup):
            if not self.sub(Group(), expected):
                raise TypeCheckError("T-Group", f"newgroup has type Group<>, expected {expected}", pos)
        elif isinstance(e, S.Acquire):
            self.need_iface(e.iface, "T-Acquire", pos)
            if e.in_var is not None:
                t = self.lookup(ctx, e.in_var, pos)
                if not isinstance(t, Group):
                    raise TypeCheckError("T-Acquire", f"acquire in {e.in_var}: {t} is not a group type", pos)
            for x in e.excluded:
                self.lookup(ctx, x, pos)
            if not self.sub(Iface(e.iface), expected):
                raise TypeCheckError("T-Acquire", f"acquire {e.iface} where {expected} expected", pos)
        elif isinstance(e, S.Wait):
            owner = self.lookup(ctx, e.obj, pos)
            try:
                t = S.ret_type(self.program, owner, e.method)
            except (NoSuchMethod, AmbiguousSignature, UndeclaredName) as exc:
                raise TypeCheckError("RTT-Wait", str(exc), pos) from None
            if not self.sub(t, expected):
                raise TypeCheckError("RTT-Wait", f"wait({e.obj}, {e.method}) : {t}, expected {expected}", pos)
        else:
            raise TypeCheckError("T-Var", f"unknown expression {e!r}", pos)

    def type_call(self, ctx: Context, e: S.Call, expected: Type) -> None:
        pos = e.pos
        target = S.render_atom(e.target)
        t = self.lookup(ctx, e.target, pos)
        if not isinstance(t, (Iface, Group, ClassType)):
            raise TypeCheckError("T-Call", f"call target {target} has type {t}", pos)
        arg_types = [self.lookup(ctx, a, pos) for a in e.args]
        if not S.match(self.program, e.method, arg_types, t):
            shown = ", ".join(map(str, arg_types))
            raise TypeCheckError("T-Call", f"no method {e.method}({shown}) in {t}", pos)
        try:
            ret = S.ret_type(self.program, t, e.method)
        except AmbiguousSignature as exc:
            raise TypeCheckError("T-Call", str(exc), pos) from None
        if not self.sub(ret, expected):
            raise TypeCheckError("T-Call", f"{target}.{e.method} returns {ret}, expected {expected}", pos)

    # -- statements

    def type_stmts(self, ctx: Context, stmts, locals_: frozenset) -> Effect:
        ctx = dict(ctx)
        total: Effect = {}
        for s in stmts:
            if isinstance(s, S.DropVar):
                ctx.pop(s.name, None)
                total.pop(s.name, None)
                locals_ = locals_ - {s.name}
                continue
            delta = self.type_stmt(ctx, s, locals_)
            ctx.update(delta)
            total.update(delta)
        return total

    def type_stmt(self, ctx: Context, s, locals_: frozenset) -> Effect:
        pos = s.pos
        if isinstance(s, S.Skip):
            return {}
        if isinstance(s, S.Assign):
            target = self.lookup(ctx, s.target, pos)
            self.type_expr(ctx, s.expr, target)
            return {}
        if isinstance(s, S.If):
            if self.lookup(ctx, s.cond, pos) != BOOL:
                raise TypeCheckError("T-Conditional", f"condition {s.cond} is not Bool", pos)
            d1 = self.type_stmts(ctx, s.then, locals_)
            d2 = self.type_stmts(ctx, s.orelse, locals_)
            return branch_join(self.program, ctx, d1, d2)
        if isinstance(s, S.While):
            if self.lookup(ctx, s.cond, pos) != BOOL:
                raise TypeCheckError("T-While", f"condition {s.cond} is not Bool", pos)
            d = self.type_stmts(ctx, s.body, locals_)
            # the loop may run zero times
            return branch_join(self.program, ctx, d, {})
        if isinstance(s, S.Joins):
            for name in s.ifaces:
                self.need_iface(name, "T-Join", pos)
            if s.group not in locals_:
                self.lookup(ctx, s.group, pos)
                raise TypeCheckError("LocalRequired", f"join target {s.group} is not a local variable", pos)
            gt = self.lookup(ctx, s.group, pos)
            if not isinstance(gt, Group):
                raise TypeCheckError("T-Join", f"{s.group} has type {gt}, not a group type", pos)
            mt = self.lookup(ctx, s.member, pos)
            for name in s.ifaces:
                if not self.sub(mt, Iface(name)):
                    raise TypeCheckError("T-Join", f"{s.member} : {mt} does not implement {name}", pos)
            return {s.group: Group(gt.ifaces | frozenset(s.ifaces))}
        if isinstance(s, S.Leaves):
            for name in s.ifaces:
                self.need_iface(name, "T-Leave", pos)
            mt = self.lookup(ctx, s.member, pos)
            for name in s.ifaces:
                if not self.sub(mt, Iface(name)):
                    raise TypeCheckError("T-Leave", f"{s.member} : {mt} does not implement {name}", pos)
            gt = self.lookup(ctx, s.group, pos)
            if not isinstance(gt, Group):
                raise TypeCheckError("T-Leave", f"{s.group} has type {gt}, not a group type", pos)
            d1 = self.type_stmts(ctx, s.then, locals_)
            d2 = self.type_stmts(ctx, s.orelse, locals_)
            return branch_join(self.program, ctx, d1, d2)
        if isinstance(s, S.SubtypeOf):
            self.need_iface(s.iface, "T-Inspect", pos)
            known = _group_view(self.lookup(ctx, s.target, pos))
            if known is None:
                raise TypeCheckError("T-Inspect", f"{s.target} is not a group or interface reference", pos)
            if s.alias in ctx:
                raise TypeCheckError("T-Inspect", f"query variable {s.alias} is already bound", pos)
            inner = compose(ctx, {s.alias: Group(known | {s.iface})})
            d1 = self.type_stmts(inner, s.then, locals_ | {s.alias})
            d1.pop(s.alias, None)
            d2 = self.type_stmts(ctx, s.orelse, locals_)
            return branch_join(self.program, ctx, d1, d2)
        raise TypeCheckError("T-Var", f"unknown statement {s!r}", pos)

    def check_body(self, ctx: Context, stmts, locals_, ret: str | None, expected: Type | None, pos=None):
        """A body ``s; return x`` (or a return-free body when ``ret`` is None)."""
        delta = self.type_stmts(ctx, stmts, frozenset(locals_))
        if ret is None or expected is None:
            return delta
        after = compose(ctx, delta)
        t = self.lookup(after, ret, pos)
        if not self.sub(t, expected):
            raise TypeCheckError("T-Return", f"returns {ret} : {t}, declared {expected}", pos)
        return delta

    # -- declarations

    def class_context(self, c: S.ClassDecl) -> dict:
        ctx = {"this": ClassType(c.name)}
        ctx.update((f.name, f.type) for f in c.fields)
        return ctx

    def check_method(self, c: S.ClassDecl, m: S.MethodDecl) -> None:
        binds = m.sig.params + m.locals
        ctx = compose(self.class_context(c), {d.name: d.type for d in binds})
        self.check_body(ctx, m.body, {d.name for d in binds}, m.ret, m.sig.ret, m.pos)

    def check_init(self, c: S.ClassDecl) -> None:
        ctx = self.class_context(c)
        ctx.update((p.name, p.type) for p in c.params)
        ctx.update((d.name, d.type) for d in c.init_locals)
        self.check_body(ctx, c.init_body, {d.name for d in c.init_locals}, None, None)

    def check_conformance(self, c: S.ClassDecl) -> list[TypeCheckError]:
        errors = []
        for name in c.implements:
            for sig in sorted(S.mtd(self.program, Iface(name)), key=lambda s: s.name):
                m = c.method(sig.name)
                if m is None:
                    errors.append(TypeCheckError(
                        "T-Class", f"class {c.name} lacks method {sig.name} required by {name}", c.pos))
                elif m.sig.shape != sig.shape:
                    errors.append(TypeCheckError(
                        "T-Class", f"method {c.name}.{sig.name} does not match its signature in {name}", m.pos))
        return errors

    def check_program(self) -> list[TypeCheckError]:
        errors = S.check_wellformed(self.program)
        if errors:
            return errors
        for c in self.program.classes:
            errors.extend(self.check_conformance(c))
            self._collect(errors, self.check_init, c)
            for m in c.methods:
                self._collect(errors, self.check_method, c, m)
        main_ctx = {d.name: d.type for d in self.program.main_locals}
        self._collect(errors, self.check_body, main_ctx, self.program.main_body,
                      set(main_ctx), None, None)
        return errors

    @staticmethod
    def _collect(errors, fn, *args):
        try:
            fn(*args)
        except TypeCheckError as exc:
            errors.append(exc)


# ---------------------------------------------------------------- module-level API

def type_expr(program: Program, ctx: Context, e, expected: Type) -> None:
    Checker(program).type_expr(ctx, e, expected)


def type_stmt(program: Program, ctx: Context, s, locals_=None) -> Effect:
    if locals_ is None:
        locals_ = {k for k in ctx if isinstance(k, str) and k != "this"}
    return Checker(program).type_stmt(ctx, s, frozenset(locals_))


def type_program(program: Program) -> list[TypeCheckError]:
    return Checker(program).check_program()
