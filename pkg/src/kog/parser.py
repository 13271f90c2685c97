"""Surface syntax for kernel programs (``.kog`` files): lexer, recursive-descent parser, printer."""
from __future__ import annotations

import re
from dataclasses import dataclass

from . import syntax as S
from .errors import ParseError

KEYWORDS = frozenset("""
    interface extends class implements new newgroup acquire in except joins as
    leaves subtypeOf if else while skip return true false Bool Any Group this
    emptyset void
""".split())

PUNCT = "{}()<>,;=."

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>//[^\n]*)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct>[{}()<>,;=.])
  | (?P<bad>.)
""", re.VERBOSE)

VOID_RESULT = "$void"


@dataclass(frozen=True)
class Token:
    kind: str  # 'keyword' | 'identifier' | 'punctuation' | 'eof'
    lexeme: str
    line: int
    column: int

    def describe(self) -> str:
        return "end of input" if self.kind == "eof" else repr(self.lexeme)


def tokenize(text: str) -> list[Token]:
    tokens = []
    line, line_start = 1, 0
    for m in _TOKEN_RE.finditer(text):
        kind = m.lastgroup
        col = m.start() - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "name":
            lexeme = m.group()
            tokens.append(Token("keyword" if lexeme in KEYWORDS else "identifier", lexeme, line, col))
        elif kind == "punct":
            tokens.append(Token("punctuation", m.group(), line, col))
        elif kind == "bad":
            raise ParseError(f"unexpected character {m.group()!r}", line, col)
    # eof sits just past the last character so its position stays inside the text
    tokens.append(Token("eof", "", line, max(1, len(text) - line_start)))
    return tokens


def parse(text: str) -> S.Program:
    return Parser(tokenize(text)).program()


def parse_file(path) -> S.Program:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())


class Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0
        self.fresh = 0

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def at(self, lexeme: str, offset: int = 0) -> bool:
        t = self.peek(offset)
        return t.kind in ("keyword", "punctuation") and t.lexeme == lexeme

    def fail(self, message: str, *expected: str):
        t = self.tok
        raise ParseError(f"{message}, found {t.describe()}", t.line, t.column, expected)

    def expect(self, lexeme: str) -> Token:
        if not self.at(lexeme):
            self.fail(f"expected {lexeme!r}", lexeme)
        t = self.tok
        self.i += 1
        return t

    def accept(self, lexeme: str) -> bool:
        if self.at(lexeme):
            self.i += 1
            return True
        return False

    def ident(self) -> str:
        if self.tok.kind != "identifier":
            self.fail("expected an identifier", "identifier")
        t = self.tok
        self.i += 1
        return t.lexeme

    def var(self) -> str:
        if self.at("this"):
            self.i += 1
            return "this"
        return self.ident()

    def pos(self):
        return (self.tok.line, self.tok.column)

    # -- declarations

    def program(self) -> S.Program:
        interfaces, classes = [], []
        while True:
            if self.at("interface"):
                interfaces.append(self.interface())
            elif self.at("class"):
                classes.append(self.class_decl())
            else:
                break
        if not self.at("{"):
            self.fail("expected a declaration or the main block", "interface", "class", "{")
        locals_, body = self.block_with_decls()
        if self.tok.kind != "eof":
            self.fail("unexpected text after the main block", "end of input")
        return S.Program(tuple(interfaces), tuple(classes), locals_, body)

    def iface_name(self) -> str:
        if self.accept("Any"):
            return S.ANY_NAME
        return self.ident()

    def iface_list(self) -> tuple[str, ...]:
        names = [self.iface_name()]
        while self.accept(","):
            names.append(self.iface_name())
        return tuple(names)

    def interface(self) -> S.InterfaceDecl:
        pos = self.pos()
        self.expect("interface")
        name = self.ident()
        extends = self.iface_list() if self.accept("extends") else ()
        self.expect("{")
        sigs = []
        while not self.at("}"):
            sigs.append(self.signature())
            self.expect(";")
        self.expect("}")
        return S.InterfaceDecl(name, extends, tuple(sigs), pos)

    def type(self) -> S.Type:
        if self.accept("Bool"):
            return S.BOOL
        if self.accept("Any"):
            return S.ANY
        if self.accept("Group"):
            self.expect("<")
            names: tuple[str, ...] = ()
            if self.accept("emptyset"):
                pass
            elif not self.at(">"):
                names = self.iface_list()
            self.expect(">")
            return S.Group(frozenset(names))
        if self.tok.kind == "identifier":
            return S.Iface(self.ident())
        self.fail("expected a type", "Bool", "Any", "Group", "identifier")

    def starts_type(self) -> bool:
        return self.at("Bool") or self.at("Any") or self.at("Group") or self.tok.kind == "identifier"

    def params(self) -> tuple[S.VarDecl, ...]:
        self.expect("(")
        params = []
        if not self.at(")"):
            while True:
                pos = self.pos()
                t = self.type()
                params.append(S.VarDecl(self.ident(), t, pos))
                if not self.accept(","):
                    break
        self.expect(")")
        return tuple(params)

    def signature(self) -> S.Signature:
        pos = self.pos()
        void = self.accept("void")
        ret = S.BOOL if void else self.type()
        name = self.ident()
        return S.Signature(ret, name, self.params(), void, pos)

    def class_decl(self) -> S.ClassDecl:
        pos = self.pos()
        self.expect("class")
        name = self.ident()
        params = self.params() if self.at("(") else ()
        implements = self.iface_list() if self.accept("implements") else ()
        self.expect("{")
        fields = []
        init_locals, init_body = (), ()
        methods = []
        while self.starts_type():
            start = self.i
            pos_f = self.pos()
            t = self.type()
            field_name = self.ident()
            if not self.accept(";"):
                self.i = start
                break
            fields.append(S.VarDecl(field_name, t, pos_f))
        if self.at("{"):
            init_locals, init_body = self.block_with_decls()
            self.accept(";")
        while not self.at("}"):
            methods.append(self.method())
        self.expect("}")
        return S.ClassDecl(name, params, implements, tuple(fields), init_locals, init_body,
                           tuple(methods), pos)

    def method(self) -> S.MethodDecl:
        pos = self.pos()
        if not (self.at("void") or self.starts_type()):
            self.fail("expected a method or '}'", "method", "}")
        sig = self.signature()
        self.expect("{")
        locals_ = self.decls()
        body = self.stmts()
        self.expect("return")
        ret = None
        if not self.at(";"):
            ret = self.var()
        self.expect(";")
        self.expect("}")
        if sig.void:
            if ret is not None:
                self.fail_at(pos, f"void method {sig.name} returns a value")
            locals_ = locals_ + (S.VarDecl(VOID_RESULT, S.BOOL, pos),)
            ret = VOID_RESULT
        elif ret is None:
            self.fail_at(pos, f"method {sig.name} must return a variable")
        return S.MethodDecl(sig, locals_, body, ret, pos)

    def fail_at(self, pos, message):
        raise ParseError(message, pos[0], pos[1])

    def decls(self) -> tuple[S.VarDecl, ...]:
        out = []
        while self.starts_type() and (
            self.at("Bool") or self.at("Any") or self.at("Group") or self.peek(1).kind == "identifier"
        ):
            pos = self.pos()
            t = self.type()
            out.append(S.VarDecl(self.ident(), t, pos))
            self.expect(";")
        return tuple(out)

    def block_with_decls(self):
        self.expect("{")
        locals_ = self.decls()
        body = self.stmts()
        self.expect("}")
        return locals_, body

    # -- statements

    def block(self) -> tuple:
        self.expect("{")
        body = self.stmts()
        self.expect("}")
        return body

    def stmts(self) -> tuple:
        out = []
        while not (self.at("}") or self.at("return") or self.tok.kind == "eof"):
            if self.accept(";"):
                continue
            out.append(self.stmt())
        return tuple(out)

    def stmt(self):
        pos = self.pos()
        if self.accept("skip"):
            self.expect(";")
            return S.Skip(pos)
        if self.accept("if"):
            cond = self.var()
            then = self.block()
            orelse = self.block() if self.accept("else") else ()
            return S.If(cond, then, orelse, pos)
        if self.accept("while"):
            cond = self.var()
            return S.While(cond, self.block(), pos)
        if not (self.tok.kind == "identifier" or self.at("this")):
            self.fail("expected a statement", "skip", "if", "while", "identifier")
        x = self.var()
        if self.accept("joins"):
            y = self.var()
            self.expect("as")
            ifaces = self.iface_list()
            self.expect(";")
            return S.Joins(x, y, ifaces, pos)
        if self.accept("leaves"):
            y = self.var()
            self.expect("as")
            ifaces = self.iface_list()
            then = self.block()
            self.expect("else")
            return S.Leaves(x, y, ifaces, then, self.block(), pos)
        if self.accept("subtypeOf"):
            iface = self.iface_name()
            generated = not (self.tok.kind == "identifier")
            if generated:
                self.fresh += 1
                alias = f"$q{self.fresh}"
            else:
                alias = self.ident()
            then = self.block()
            self.expect("else")
            return S.SubtypeOf(x, iface, alias, then, self.block(), generated, pos)
        if self.at("="):
            if x == "this":
                self.fail_at(pos, "cannot assign to this")
            self.i += 1
            e = self.expr()
            self.expect(";")
            return S.Assign(x, e, pos)
        self.fail("expected '=', 'joins', 'leaves' or 'subtypeOf'", "=", "joins", "leaves", "subtypeOf")

    def var_list(self) -> tuple[str, ...]:
        self.expect("(")
        names = []
        if not self.at(")"):
            names.append(self.var())
            while self.accept(","):
                names.append(self.var())
        self.expect(")")
        return tuple(names)

    def expr(self):
        pos = self.pos()
        if self.accept("true"):
            return S.BoolLit(True, pos)
        if self.accept("false"):
            return S.BoolLit(False, pos)
        if self.accept("newgroup"):
            return S.NewGroup(pos)
        if self.accept("new"):
            cls = self.ident()
            return S.New(cls, self.var_list(), pos)
        if self.accept("acquire"):
            iface = self.iface_name()
            in_var = self.var() if self.accept("in") else None
            excluded: list[str] = []
            if self.accept("except"):
                if not self.accept("emptyset"):
                    excluded.append(self.var())
                    while self.accept(","):
                        excluded.append(self.var())
            return S.Acquire(iface, in_var, tuple(excluded), pos)
        if self.tok.kind == "identifier" or self.at("this"):
            x = self.var()
            if self.accept("."):
                m = self.ident()
                return S.Call(x, m, self.var_list(), pos)
            return S.Var(x, pos)
        self.fail("expected an expression", "true", "false", "newgroup", "new", "acquire", "identifier")


# ---------------------------------------------------------------- printing

def show_type(t: S.Type) -> str:
    return str(t)


def show_expr(e) -> str:
    if isinstance(e, S.Var):
        return e.name
    if isinstance(e, S.BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, S.Val):
        return S.render_value(e.value)
    if isinstance(e, S.Call):
        return f"{S.render_atom(e.target)}.{e.method}({', '.join(e.args)})"
    if isinstance(e, S.New):
        return f"new {e.cls}({', '.join(e.args)})"
    if isinstance(e, S.NewGroup):
        return "newgroup"
    if isinstance(e, S.Acquire):
        text = f"acquire {e.iface}"
        if e.in_var is not None:
            text += f" in {e.in_var}"
        return text + " except " + (", ".join(e.excluded) if e.excluded else "emptyset")
    if isinstance(e, S.Wait):
        return f"wait({e.obj}, {e.method})"
    raise TypeError(f"not an expression: {e!r}")


def show_stmt(s, indent: int = 0) -> str:
    """Render one statement; nested blocks are rendered on one line unless ``indent`` is given."""
    lines = _stmt_lines(s, indent)
    return "\n".join(lines) if indent else " ".join(line.strip() for line in lines)


def _block_lines(body, indent):
    out = []
    for s in body:
        out.extend(_stmt_lines(s, indent))
    return out


def _stmt_lines(s, indent):
    pad = "    " * indent
    if isinstance(s, S.Skip):
        return [pad + "skip;"]
    if isinstance(s, S.Assign):
        return [f"{pad}{s.target} = {show_expr(s.expr)};"]
    if isinstance(s, S.Joins):
        return [f"{pad}{s.member} joins {s.group} as {', '.join(s.ifaces)};"]
    if isinstance(s, S.DropVar):
        return [f"{pad}/* end {s.name} */"]
    if isinstance(s, S.While):
        return ([f"{pad}while {s.cond} {{"] + _block_lines(s.body, indent + 1) + [pad + "}"])
    if isinstance(s, S.If):
        head = f"if {s.cond}"
    elif isinstance(s, S.Leaves):
        head = f"{s.member} leaves {s.group} as {', '.join(s.ifaces)}"
    elif isinstance(s, S.SubtypeOf):
        head = f"{s.target} subtypeOf {s.iface}" + ("" if s.alias_generated else f" {s.alias}")
    else:
        raise TypeError(f"not a statement: {s!r}")
    return ([f"{pad}{head} {{"] + _block_lines(s.then, indent + 1) + [pad + "} else {"]
            + _block_lines(s.orelse, indent + 1) + [pad + "}"])


def _show_params(params) -> str:
    return ", ".join(f"{p.type} {p.name}" for p in params)


def _show_sig(sig: S.Signature) -> str:
    ret = "void" if sig.void else str(sig.ret)
    return f"{ret} {sig.name}({_show_params(sig.params)})"


def pretty(program: S.Program) -> str:
    out: list[str] = []
    for i in program.interfaces:
        ext = f" extends {', '.join(i.extends)}" if i.extends else ""
        out.append(f"interface {i.name}{ext} {{")
        out.extend(f"    {_show_sig(sig)};" for sig in i.sigs)
        out.append("}")
        out.append("")
    for c in program.classes:
        impl = f" implements {', '.join(c.implements)}" if c.implements else ""
        out.append(f"class {c.name}({_show_params(c.params)}){impl} {{")
        out.extend(f"    {f.type} {f.name};" for f in c.fields)
        out.append("    {")
        out.extend(f"        {d.type} {d.name};" for d in c.init_locals)
        out.extend(_block_lines(c.init_body, 2))
        out.append("    }")
        for m in c.methods:
            out.append(f"    {_show_sig(m.sig)} {{")
            out.extend(f"        {d.type} {d.name};" for d in m.locals if d.name != VOID_RESULT)
            out.extend(_block_lines(m.body, 2))
            out.append("        return;" if m.sig.void else f"        return {m.ret};")
            out.append("    }")
        out.append("}")
        out.append("")
    out.append("{")
    out.extend(f"    {d.type} {d.name};" for d in program.main_locals)
    out.extend(_block_lines(program.main_body, 1))
    out.append("}")
    return "\n".join(out) + "\n"
