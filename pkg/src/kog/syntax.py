"""Abstract syntax, runtime values, and program-table lookups.

Expressions are flat: every argument position holds an *atom*, which in
source programs is a variable name and at runtime may also be a value
substituted in place by a reduction rule.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

from .errors import AmbiguousSignature, NoSuchMethod, Pos, TypeCheckError, UndeclaredName

ANY_NAME = "Any"
MAIN_CLASS = "$Main"


# ---------------------------------------------------------------- types

@dataclass(frozen=True)
class BoolType:
    def __str__(self):
        return "Bool"


@dataclass(frozen=True)
class Iface:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Group:
    ifaces: frozenset[str] = frozenset()

    def __str__(self):
        return "Group<" + ",".join(sorted(self.ifaces)) + ">"


@dataclass(frozen=True)
class ClassType:
    name: str

    def __str__(self):
        return f"class {self.name}"


@dataclass(frozen=True)
class NullType:
    # type of the null value; never written in source
    def __str__(self):
        return "Null"


Type = Union[BoolType, Iface, Group, ClassType, NullType]

BOOL = BoolType()
ANY = Iface(ANY_NAME)
NULL_TYPE = NullType()


def group(*names: str) -> Group:
    return Group(frozenset(names))


def is_reference(t: Type) -> bool:
    return not isinstance(t, BoolType)


# ---------------------------------------------------------------- runtime values

@dataclass(frozen=True, order=True)
class Obj:
    id: str

    def __str__(self):
        return self.id


@dataclass(frozen=True, order=True)
class Grp:
    id: str

    def __str__(self):
        return self.id


class _Null:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "null"

    __str__ = __repr__

    def __reduce__(self):
        return (_Null, ())


NULL = _Null()

Value = Union[Obj, Grp, bool, _Null]
Atom = Union[str, Obj, Grp, bool, _Null]


def render_value(v) -> str:
    if v is True:
        return "true"
    if v is False:
        return "false"
    return str(v)


def render_atom(a: Atom) -> str:
    return a if isinstance(a, str) else render_value(a)


# ---------------------------------------------------------------- expressions

@dataclass(frozen=True)
class Var:
    name: str
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BoolLit:
    value: bool
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    target: Atom
    method: str
    args: tuple[str, ...]
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class New:
    cls: str
    args: tuple[str, ...]
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class NewGroup:
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Acquire:
    iface: str
    in_var: str | None
    excluded: tuple[str, ...]
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Wait:
    """Runtime only: the caller's lock while ``obj`` executes ``method``."""
    obj: Obj
    method: str
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Val:
    """Runtime only: a value substituted for an expression."""
    value: Value
    pos: Pos = field(default=None, compare=False, repr=False)


Expr = Union[Var, BoolLit, Call, New, NewGroup, Acquire, Wait, Val]


# ---------------------------------------------------------------- statements

@dataclass(frozen=True)
class Skip:
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Assign:
    target: str
    expr: Expr
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class If:
    cond: str
    then: tuple
    orelse: tuple
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class While:
    cond: str
    body: tuple
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Joins:
    member: str
    group: str
    ifaces: tuple[str, ...]
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Leaves:
    member: str
    group: str
    ifaces: tuple[str, ...]
    then: tuple
    orelse: tuple
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class SubtypeOf:
    target: str
    iface: str
    alias: str
    then: tuple
    orelse: tuple
    alias_generated: bool = False
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class DropVar:
    """Runtime only: end of the scope of a query alias."""
    name: str
    pos: Pos = field(default=None, compare=False, repr=False)


Stmt = Union[Skip, Assign, If, While, Joins, Leaves, SubtypeOf, DropVar]
Block = tuple  # tuple[Stmt, ...]


# ---------------------------------------------------------------- declarations

@dataclass(frozen=True)
class VarDecl:
    name: str
    type: Type
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Signature:
    ret: Type
    name: str
    params: tuple[VarDecl, ...]
    void: bool = False
    pos: Pos = field(default=None, compare=False, repr=False)

    @property
    def param_types(self) -> tuple[Type, ...]:
        return tuple(p.type for p in self.params)

    @property
    def shape(self) -> tuple:
        """Identity of a signature up to parameter names."""
        return (self.ret, self.name, self.param_types)


@dataclass(frozen=True)
class InterfaceDecl:
    name: str
    extends: tuple[str, ...]
    sigs: tuple[Signature, ...]
    pos: Pos = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class MethodDecl:
    sig: Signature
    locals: tuple[VarDecl, ...]
    body: Block
    ret: str
    pos: Pos = field(default=None, compare=False, repr=False)

    @property
    def name(self) -> str:
        return self.sig.name


@dataclass(frozen=True)
class ClassDecl:
    name: str
    params: tuple[VarDecl, ...]
    implements: tuple[str, ...]
    fields: tuple[VarDecl, ...]
    init_locals: tuple[VarDecl, ...]
    init_body: Block
    methods: tuple[MethodDecl, ...]
    pos: Pos = field(default=None, compare=False, repr=False)

    def method(self, name: str) -> MethodDecl | None:
        for m in self.methods:
            if m.name == name:
                return m
        return None


@dataclass(frozen=True)
class Program:
    interfaces: tuple[InterfaceDecl, ...]
    classes: tuple[ClassDecl, ...]
    main_locals: tuple[VarDecl, ...]
    main_body: Block

    @cached_property
    def iface_table(self) -> dict[str, InterfaceDecl]:
        table = {ANY_NAME: InterfaceDecl(ANY_NAME, (), ())}
        for decl in self.interfaces:
            table.setdefault(decl.name, decl)
        return table

    @cached_property
    def class_table(self) -> dict[str, ClassDecl]:
        table = {}
        for decl in self.classes:
            table.setdefault(decl.name, decl)
        return table

    @cached_property
    def _ancestor_cache(self) -> dict[str, frozenset[str]]:
        return {}

    def iface(self, name: str) -> InterfaceDecl:
        try:
            return self.iface_table[name]
        except KeyError:
            raise UndeclaredName(f"undeclared interface {name}") from None

    def cls(self, name: str) -> ClassDecl:
        try:
            return self.class_table[name]
        except KeyError:
            raise UndeclaredName(f"undeclared class {name}") from None

    def ancestors(self, name: str) -> frozenset[str]:
        """Strict supertypes of interface ``name`` (Any included for every other interface)."""
        cache = self._ancestor_cache
        if name in cache:
            return cache[name]
        self.iface(name)
        seen: set[str] = set()
        stack = list(self.iface(name).extends)
        while stack:
            n = stack.pop()
            if n in seen:
                continue
            seen.add(n)
            stack.extend(self.iface(n).extends)
        if name != ANY_NAME:
            seen.add(ANY_NAME)
        result = frozenset(seen)
        cache[name] = result
        return result

    def iface_lt(self, a: str, b: str) -> bool:
        return a != b and b in self.ancestors(a)

    def iface_le(self, a: str, b: str) -> bool:
        return a == b or b in self.ancestors(a)


# ---------------------------------------------------------------- lookups

def mtd(program: Program, t: Type) -> frozenset[Signature]:
    if isinstance(t, Iface):
        sigs = set(program.iface(t.name).sigs)
        for anc in program.ancestors(t.name):
            sigs.update(program.iface(anc).sigs)
        return frozenset(sigs)
    if isinstance(t, Group):
        sigs = set()
        for name in t.ifaces:
            sigs |= mtd(program, Iface(name))
        return frozenset(sigs)
    if isinstance(t, ClassType):
        return frozenset(m.sig for m in program.cls(t.name).methods)
    return frozenset()


def method_names(program: Program, t: Type) -> frozenset[str]:
    return frozenset(s.name for s in mtd(program, t))


def _named(program: Program, t: Type, m: str) -> list[Signature]:
    return sorted((s for s in mtd(program, t) if s.name == m), key=lambda s: str(s.shape))


def match(program: Program, m: str, arg_types, t: Type) -> bool:
    from .typecheck import subtype

    for sig in _named(program, t, m):
        params = sig.param_types
        if len(params) == len(arg_types) and all(
            subtype(program, a, p) for a, p in zip(arg_types, params)
        ):
            return True
    return False


def lookup_signature(program: Program, t: Type, m: str) -> Signature:
    sigs = _named(program, t, m)
    if not sigs:
        raise NoSuchMethod(f"no method {m} in {t}")
    shapes = {s.shape for s in sigs}
    if len(shapes) > 1:
        raise AmbiguousSignature(f"conflicting signatures for {m} in {t}")
    return sigs[0]


def ret_type(program: Program, t: Type, m: str) -> Type:
    return lookup_signature(program, t, m).ret


def ptypes(program: Program, cls: str) -> list[Type]:
    return [p.type for p in program.cls(cls).params]


def implements(program: Program, cls: str, iface: str) -> bool:
    decl = program.cls(cls)
    program.iface(iface)
    if iface == ANY_NAME:
        return True
    return any(program.iface_le(j, iface) for j in decl.implements)


# ---------------------------------------------------------------- well-formedness

def _type_names(t: Type) -> list[str]:
    if isinstance(t, Iface):
        return [t.name]
    if isinstance(t, Group):
        return sorted(t.ifaces)
    return []


def check_wellformed(program: Program) -> list[TypeCheckError]:
    """Declaration-level checks run before typing: names, duplicates, cycles, inherited signatures."""
    errors: list[TypeCheckError] = []
    known = {ANY_NAME} | {i.name for i in program.interfaces}

    def check_type(t: Type, pos):
        if isinstance(t, ClassType):
            errors.append(TypeCheckError("WF-Type", f"class {t.name} used as a type", pos))
        for n in _type_names(t):
            if n not in known:
                errors.append(TypeCheckError("WF-Undeclared", f"undeclared interface {n}", pos))

    def check_decls(decls, what, pos):
        seen = set()
        for d in decls:
            if d.name in seen:
                errors.append(TypeCheckError("WF-Duplicate", f"duplicate {what} {d.name}", d.pos or pos))
            seen.add(d.name)
            check_type(d.type, d.pos or pos)

    seen_if: set[str] = set()
    for decl in program.interfaces:
        if decl.name in seen_if:
            errors.append(TypeCheckError("WF-Duplicate", f"duplicate interface {decl.name}", decl.pos))
        seen_if.add(decl.name)
        for n in decl.extends:
            if n not in known:
                errors.append(TypeCheckError("WF-Undeclared", f"undeclared interface {n}", decl.pos))
        names = set()
        for sig in decl.sigs:
            if sig.name in names:
                errors.append(TypeCheckError("WF-Duplicate", f"duplicate method {sig.name} in {decl.name}", sig.pos))
            names.add(sig.name)
            check_type(sig.ret, sig.pos)
            check_decls(sig.params, "parameter", sig.pos)

    cyclic = _cyclic_interfaces(program, known)
    for decl in program.interfaces:
        if decl.name in cyclic:
            errors.append(TypeCheckError("WF-Cycle", f"interface {decl.name} extends itself", decl.pos))
    if errors:
        return errors

    for decl in program.interfaces:
        try:
            for name in method_names(program, Iface(decl.name)):
                lookup_signature(program, Iface(decl.name), name)
        except AmbiguousSignature as exc:
            errors.append(TypeCheckError("AmbiguousSignature", str(exc), decl.pos))

    seen_cls: set[str] = set()
    for decl in program.classes:
        if decl.name in seen_cls or decl.name == MAIN_CLASS:
            errors.append(TypeCheckError("WF-Duplicate", f"duplicate class {decl.name}", decl.pos))
        seen_cls.add(decl.name)
        for n in decl.implements:
            if n not in known:
                errors.append(TypeCheckError("WF-Undeclared", f"undeclared interface {n}", decl.pos))
        check_decls(decl.params, "class parameter", decl.pos)
        check_decls(decl.fields, "field", decl.pos)
        check_decls(decl.init_locals, "local", decl.pos)
        methods = set()
        for m in decl.methods:
            if m.name in methods:
                errors.append(TypeCheckError("WF-Duplicate", f"duplicate method {m.name} in {decl.name}", m.pos))
            methods.add(m.name)
            check_type(m.sig.ret, m.pos)
            check_decls(m.sig.params + m.locals, "parameter or local", m.pos)
    check_decls(program.main_locals, "local", None)
    return errors


def _cyclic_interfaces(program: Program, known: set[str]) -> set[str]:
    graph = {d.name: [n for n in d.extends if n in known] for d in program.interfaces}
    cyclic = set()
    for start in graph:
        stack = list(graph[start])
        seen = set()
        while stack:
            n = stack.pop()
            if n == start:
                cyclic.add(start)
                break
            if n in seen:
                continue
            seen.add(n)
            stack.extend(graph.get(n, ()))
    return cyclic
