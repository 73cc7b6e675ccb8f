"""The guarded-assignment program DSL: parsing, validation, critical terms.

Grammar (whitespace and newlines insignificant):

    program := vocab inputs output init? oracles? rules
    vocab   := "vocab" "{" "constructors" "{" sigs "}" "dynamic" "{" sigs "}" "}"
    sigs    := sig (";" sig)*            sig := IDENT "/" NAT
    inputs  := "inputs" "{" (IDENT ("," IDENT)*)? "}"
    output  := "output" "{" IDENT "}"
    init    := "init" "{" (assign ";")* "}"
    oracles := "oracles" "{" (IDENT "/" NAT "=" STRING ";")* "}"
    rules   := "rules" "{" stmt* "}"
    stmt    := assign | "if" guard "then" "{" stmt* "}" ("else" "{" stmt* "}")?
    assign  := term ":=" (term | "undef")
    guard   := atom | "not" guard | guard ("and"|"or") guard | "(" guard ")"
    atom    := (term | "undef") "=" (term | "undef")

"not" binds tighter than "and", which binds tighter than "or"; both are
left-associative.  Keywords are reserved and cannot name symbols.  Oracle
bodies are separate program files, located relative to the host program.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .terms import (
    KIND_CONSTRUCTOR,
    KIND_DYNAMIC,
    KIND_ORACLE,
    Symbol,
    Term,
    TermSyntaxError,
    UNDEF_WORD,
    Vocabulary,
    compact_size,
    distinct_subterms,
    format_term,
)

KEYWORDS = frozenset(
    [
        "vocab", "constructors", "dynamic", "inputs", "output", "init",
        "oracles", "rules", "if", "then", "else", "not", "and", "or", UNDEF_WORD,
    ]
)


# --- AST -------------------------------------------------------------------
# An rhs (or atom side) of None stands for the literal undef.


@dataclass(frozen=True)
class GAtom:
    lhs: Term | None
    rhs: Term | None


@dataclass(frozen=True)
class GNot:
    sub: "Guard"


@dataclass(frozen=True)
class GAnd:
    left: "Guard"
    right: "Guard"


@dataclass(frozen=True)
class GOr:
    left: "Guard"
    right: "Guard"


Guard = GAtom | GNot | GAnd | GOr


@dataclass(frozen=True)
class Assign:
    head: Symbol
    head_args: tuple[Term, ...]
    rhs: Term | None

    def head_term(self) -> Term:
        return Term(self.head, self.head_args)


@dataclass(frozen=True)
class Cond:
    guard: Guard
    then: tuple["Stmt", ...]
    orelse: tuple["Stmt", ...] = ()


Stmt = Assign | Cond


@dataclass(frozen=True)
class OracleDef:
    symbol: Symbol  # kind == oracle
    path: str
    body: "Program"


@dataclass
class Program:
    vocab: Vocabulary
    inputs: tuple[Symbol, ...]
    output: Symbol
    init: tuple[Assign, ...]
    rules: tuple[Stmt, ...]
    oracles: tuple[OracleDef, ...] = ()
    name: str = "<program>"

    def oracle(self, name: str) -> OracleDef | None:
        for o in self.oracles:
            if o.symbol.name == name:
                return o
        return None


@dataclass(frozen=True)
class CriticalTerms:
    """The program's terms and subterms, ordered small to big."""

    terms: tuple[Term, ...]
    position: dict[Term, int] = field(compare=False, default_factory=dict)

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)


# --- Tokenizer ---------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s+"
    r"|(?P<ID>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<NAT>\d+)"
    r"|(?P<STR>\"[^\"\n]*\")"
    r"|(?P<OP>:=|[{}(),;/=])"
)


class _Cursor:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                self._err_at(pos, f"unexpected character {text[pos]!r}")
            if m.lastgroup is not None:
                self.tokens.append((m.lastgroup, m.group(), m.start()))
            pos = m.end()
        self.i = 0

    def _err_at(self, pos: int, msg: str):
        line = self.text.count("\n", 0, pos) + 1
        col = pos - self.text.rfind("\n", 0, pos)
        raise TermSyntaxError(msg, line, col)

    def err(self, msg: str, pos: int | None = None):
        if pos is None:
            pos = self.tokens[self.i][2] if self.i < len(self.tokens) else len(self.text)
        self._err_at(pos, msg)

    def peek(self) -> str | None:
        return self.tokens[self.i][1] if self.i < len(self.tokens) else None

    def peek_kind(self) -> str | None:
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def next(self, expect: str | None = None) -> tuple[str, str, int]:
        if self.i >= len(self.tokens):
            self.err("unexpected end of input")
        kind, value, pos = self.tokens[self.i]
        if expect is not None and value != expect:
            self.err(f"expected {expect!r}, found {value!r}", pos)
        self.i += 1
        return kind, value, pos

    def take(self, value: str) -> bool:
        if self.peek() == value:
            self.i += 1
            return True
        return False

    def at_end(self) -> bool:
        return self.i >= len(self.tokens)

    def ident(self, what: str) -> tuple[str, int]:
        kind, value, pos = self.next()
        if kind != "ID":
            self.err(f"expected {what}, found {value!r}", pos)
        return value, pos


# --- Parser ------------------------------------------------------------------


def _parse_sig(cur: _Cursor, kind: str, names: dict[str, Symbol]) -> Symbol:
    name, pos = cur.ident("a symbol name")
    if name in KEYWORDS:
        cur.err(f"{name!r} is a reserved word", pos)
    cur.next("/")
    nkind, nval, npos = cur.next()
    if nkind != "NAT":
        cur.err(f"expected an arity, found {nval!r}", npos)
    if name in names:
        cur.err(f"duplicate symbol {name!r}", pos)
    sym = Symbol(name, int(nval), kind)
    names[name] = sym
    return sym


def _parse_sig_block(cur: _Cursor, kind: str, names: dict[str, Symbol]) -> list[Symbol]:
    cur.next("{")
    out = []
    if cur.peek() != "}":
        out.append(_parse_sig(cur, kind, names))
        while cur.take(";"):
            if cur.peek() == "}":
                break
            out.append(_parse_sig(cur, kind, names))
    cur.next("}")
    return out


def _parse_term(cur: _Cursor, symbols: dict[str, Symbol]) -> Term:
    """A term from the token stream, resolved against the program's symbols."""
    stack: list[tuple[Symbol, int, list[Term]]] = []
    while True:
        name, pos = cur.ident("a term")
        if name in KEYWORDS:
            cur.err(f"{name!r} is a reserved word, not a term", pos)
        sym = symbols.get(name)
        if sym is None:
            cur.err(f"undeclared symbol {name!r}", pos)
        if cur.peek() == "(" and sym.arity > 0:
            cur.next("(")
            stack.append((sym, pos, []))
            continue
        if sym.arity != 0:
            cur.err(f"symbol {sym.name}/{sym.arity} used without arguments", pos)
        node = Term(sym)
        while True:
            if not stack:
                return node
            head, head_pos, children = stack[-1]
            children.append(node)
            kind, value, pos = cur.next()
            if value == ",":
                break
            if value == ")":
                stack.pop()
                if len(children) != head.arity:
                    cur.err(
                        f"symbol {head.name}/{head.arity} applied to "
                        f"{len(children)} arguments",
                        head_pos,
                    )
                node = Term(head, children)
                continue
            cur.err(f"expected ',' or ')', found {value!r}", pos)


def _parse_term_or_undef(cur: _Cursor, symbols: dict[str, Symbol]) -> Term | None:
    if cur.peek() == UNDEF_WORD:
        cur.next()
        return None
    return _parse_term(cur, symbols)


def _parse_atom(cur: _Cursor, symbols: dict[str, Symbol]) -> GAtom:
    lhs = _parse_term_or_undef(cur, symbols)
    cur.next("=")
    rhs = _parse_term_or_undef(cur, symbols)
    return GAtom(lhs, rhs)


def _parse_guard_unit(cur: _Cursor, symbols: dict[str, Symbol]) -> Guard:
    if cur.take("not"):
        return GNot(_parse_guard_unit(cur, symbols))
    if cur.take("("):
        g = _parse_guard(cur, symbols)
        cur.next(")")
        return g
    return _parse_atom(cur, symbols)


def _parse_guard_and(cur: _Cursor, symbols: dict[str, Symbol]) -> Guard:
    g = _parse_guard_unit(cur, symbols)
    while cur.take("and"):
        g = GAnd(g, _parse_guard_unit(cur, symbols))
    return g


def _parse_guard(cur: _Cursor, symbols: dict[str, Symbol]) -> Guard:
    g = _parse_guard_and(cur, symbols)
    while cur.take("or"):
        g = GOr(g, _parse_guard_and(cur, symbols))
    return g


def _parse_assign(cur: _Cursor, symbols: dict[str, Symbol]) -> Assign:
    pos = cur.tokens[cur.i][2] if cur.i < len(cur.tokens) else len(cur.text)
    head_term = _parse_term(cur, symbols)
    if head_term.head.kind == KIND_CONSTRUCTOR:
        cur.err(f"cannot assign to constructor {head_term.head.name!r}", pos)
    if head_term.head.kind == KIND_ORACLE:
        cur.err(f"cannot assign to oracle {head_term.head.name!r}", pos)
    cur.next(":=")
    rhs = _parse_term_or_undef(cur, symbols)
    return Assign(head_term.head, head_term.args, rhs)


def _parse_stmt(cur: _Cursor, symbols: dict[str, Symbol]) -> Stmt:
    if cur.take("if"):
        guard = _parse_guard(cur, symbols)
        cur.next("then")
        cur.next("{")
        then = []
        while cur.peek() != "}":
            then.append(_parse_stmt(cur, symbols))
        cur.next("}")
        orelse: list[Stmt] = []
        if cur.take("else"):
            cur.next("{")
            while cur.peek() != "}":
                orelse.append(_parse_stmt(cur, symbols))
            cur.next("}")
        return Cond(guard, tuple(then), tuple(orelse))
    return _parse_assign(cur, symbols)


def parse_program(
    text: str,
    *,
    base_dir: str | Path | None = None,
    name: str = "<program>",
    _stack: tuple[str, ...] = (),
) -> Program:
    """Parse a program.  Oracle bodies are loaded from files relative to base_dir."""
    cur = _Cursor(text)
    names: dict[str, Symbol] = {}

    cur.next("vocab")
    cur.next("{")
    cur.next("constructors")
    _parse_sig_block(cur, KIND_CONSTRUCTOR, names)
    cur.next("dynamic")
    _parse_sig_block(cur, KIND_DYNAMIC, names)
    cur.next("}")
    vocab = Vocabulary(names.values())

    def lookup_dynamic(what: str) -> Symbol:
        ident, pos = cur.ident(f"an {what} name")
        sym = names.get(ident)
        if sym is None:
            cur.err(f"undeclared symbol {ident!r}", pos)
        return sym

    cur.next("inputs")
    cur.next("{")
    inputs: list[Symbol] = []
    if cur.peek() != "}":
        inputs.append(lookup_dynamic("input"))
        while cur.take(","):
            inputs.append(lookup_dynamic("input"))
    cur.next("}")

    cur.next("output")
    cur.next("{")
    output = lookup_dynamic("output")
    cur.next("}")

    init: list[Assign] = []
    if cur.take("init"):
        cur.next("{")
        while cur.peek() != "}":
            init.append(_parse_assign(cur, names))
            cur.next(";")
        cur.next("}")

    oracles: list[OracleDef] = []
    if cur.take("oracles"):
        cur.next("{")
        while cur.peek() != "}":
            oname, opos = cur.ident("an oracle name")
            if oname in KEYWORDS:
                cur.err(f"{oname!r} is a reserved word", opos)
            if oname in names:
                cur.err(f"duplicate symbol {oname!r}", opos)
            cur.next("/")
            nkind, nval, npos = cur.next()
            if nkind != "NAT":
                cur.err(f"expected an arity, found {nval!r}", npos)
            cur.next("=")
            skind, sval, spos = cur.next()
            if skind != "STR":
                cur.err(f"expected a quoted path, found {sval!r}", spos)
            cur.next(";")
            path = sval[1:-1]
            if base_dir is None:
                cur.err(f"cannot load oracle {oname!r}: no base directory", spos)
            full = Path(base_dir) / path
            resolved = str(full.resolve())
            if resolved in _stack:
                cur.err(f"oracle cycle through {path!r}", spos)
            try:
                body_text = full.read_text()
            except OSError as exc:
                cur.err(f"cannot load oracle body {path!r}: {exc}", spos)
            body = parse_program(
                body_text,
                base_dir=full.parent,
                name=path,
                _stack=_stack + (resolved,),
            )
            sym = Symbol(oname, int(nval), KIND_ORACLE)
            names[oname] = sym
            oracles.append(OracleDef(sym, path, body))
        cur.next("}")

    cur.next("rules")
    cur.next("{")
    rules: list[Stmt] = []
    while cur.peek() != "}":
        rules.append(_parse_stmt(cur, names))
    cur.next("}")
    if not cur.at_end():
        cur.err(f"unexpected {cur.peek()!r} after rules")

    return Program(
        vocab=vocab,
        inputs=tuple(inputs),
        output=output,
        init=tuple(init),
        rules=tuple(rules),
        oracles=tuple(oracles),
        name=name,
    )


def parse_program_file(path: str | Path) -> Program:
    path = Path(path)
    return parse_program(
        path.read_text(),
        base_dir=path.parent,
        name=path.name,
        _stack=(str(path.resolve()),),
    )


# --- Validation ---------------------------------------------------------------


def _is_constructor_ground(t: Term) -> bool:
    return all(s.head.kind == KIND_CONSTRUCTOR for s in distinct_subterms(t))


def validate_program(p: Program) -> list[str]:
    """Structural diagnostics; an empty list means the program is well-formed."""
    diags: list[str] = []
    constructors = p.vocab.constructors
    if not constructors:
        diags.append("vocabulary has no constructors")
    elif not any(c.arity == 0 for c in constructors):
        diags.append("no nullary constructor: the domain of values is empty")

    for sym in p.inputs:
        if sym.kind != KIND_DYNAMIC:
            diags.append(f"input {sym.name!r} must be a dynamic symbol")
        if sym.arity != 0:
            diags.append(f"input {sym.name!r} must be nullary (arity {sym.arity})")
    if p.output.kind != KIND_DYNAMIC:
        diags.append(f"output {p.output.name!r} must be a dynamic symbol")
    if p.output.arity != 0:
        diags.append(f"output {p.output.name!r} must be nullary (arity {p.output.arity})")

    for a in p.init:
        if a.head.kind != KIND_DYNAMIC:
            diags.append(f"init assigns to non-dynamic symbol {a.head.name!r}")
        for arg in a.head_args:
            if not _is_constructor_ground(arg):
                diags.append(
                    f"init location argument {format_term(arg)!r} is not a constructor term"
                )
        if a.rhs is None:
            diags.append(f"init value for {a.head.name!r} cannot be undef")
        elif not _is_constructor_ground(a.rhs):
            diags.append(
                f"init value {format_term(a.rhs)!r} is not a constructor term"
            )

    host_k = {(s.name, s.arity) for s in constructors}
    for o in p.oracles:
        body_k = {(s.name, s.arity) for s in o.body.vocab.constructors}
        if body_k != host_k:
            diags.append(
                f"oracle {o.symbol.name!r}: constructor mismatch with body {o.path!r}"
            )
        if len(o.body.inputs) != o.symbol.arity:
            diags.append(
                f"oracle {o.symbol.name!r}/{o.symbol.arity} body declares "
                f"{len(o.body.inputs)} inputs"
            )
        for d in validate_program(o.body):
            diags.append(f"oracle {o.symbol.name!r}: {d}")
    return diags


# --- Critical terms ------------------------------------------------------------


def _walk_guard_terms(g: Guard, found: list[Term]):
    if isinstance(g, GAtom):
        if g.lhs is not None:
            found.append(g.lhs)
        if g.rhs is not None:
            found.append(g.rhs)
    elif isinstance(g, GNot):
        _walk_guard_terms(g.sub, found)
    else:
        _walk_guard_terms(g.left, found)
        _walk_guard_terms(g.right, found)


def _walk_stmt_terms(stmt: Stmt, found: list[Term]):
    if isinstance(stmt, Assign):
        found.append(stmt.head_term())
        if stmt.rhs is not None:
            found.append(stmt.rhs)
    else:
        _walk_guard_terms(stmt.guard, found)
        for s in stmt.then:
            _walk_stmt_terms(s, found)
        for s in stmt.orelse:
            _walk_stmt_terms(s, found)


def program_terms(p: Program) -> list[Term]:
    """Terms of the program in textual order: inputs, output, then rules."""
    found: list[Term] = [Term(sym) for sym in p.inputs]
    found.append(Term(p.output))
    for stmt in p.rules:
        _walk_stmt_terms(stmt, found)
    return found


def critical_terms(p: Program) -> CriticalTerms:
    """The subterm-closed, deduplicated term list, ordered small to big.

    Order is ascending compact size with ties broken by first textual
    occurrence (subterms count as occurring inside their first host term,
    innermost first).  Proper subterms are strictly smaller, so the order is
    automatically subterm-closed.
    """
    occurrence: dict[Term, int] = {}
    for t in program_terms(p):
        for sub in distinct_subterms(t):
            if sub not in occurrence:
                occurrence[sub] = len(occurrence)
    ordered = sorted(occurrence, key=lambda t: (compact_size(t), occurrence[t]))
    return CriticalTerms(tuple(ordered), {t: i for i, t in enumerate(ordered)})


# --- Canonical printing ---------------------------------------------------------


def _format_guard(g: Guard, parent: str = "or") -> str:
    if isinstance(g, GAtom):
        lhs = UNDEF_WORD if g.lhs is None else format_term(g.lhs)
        rhs = UNDEF_WORD if g.rhs is None else format_term(g.rhs)
        return f"{lhs} = {rhs}"
    if isinstance(g, GNot):
        sub = _format_guard(g.sub, "not")
        if isinstance(g.sub, (GAnd, GOr)):
            sub = f"({sub})"
        return f"not {sub}"
    if isinstance(g, GAnd):
        left = _format_guard(g.left, "and")
        right = _format_guard(g.right, "and")
        if isinstance(g.left, GOr):
            left = f"({left})"
        if isinstance(g.right, (GOr, GAnd)):
            right = f"({right})"
        return f"{left} and {right}"
    left = _format_guard(g.left, "or")
    right = _format_guard(g.right, "or")
    if isinstance(g.right, GOr):
        right = f"({right})"
    return f"{left} or {right}"


def _format_assign(a: Assign) -> str:
    head = format_term(a.head_term())
    rhs = UNDEF_WORD if a.rhs is None else format_term(a.rhs)
    return f"{head} := {rhs}"


def _format_stmt(stmt: Stmt, indent: str) -> list[str]:
    if isinstance(stmt, Assign):
        return [f"{indent}{_format_assign(stmt)}"]
    lines = [f"{indent}if {_format_guard(stmt.guard)} then {{"]
    for s in stmt.then:
        lines.extend(_format_stmt(s, indent + "  "))
    if stmt.orelse:
        lines.append(f"{indent}}} else {{")
        for s in stmt.orelse:
            lines.extend(_format_stmt(s, indent + "  "))
    lines.append(f"{indent}}}")
    return lines


def format_program(p: Program) -> str:
    """Canonical text form; parsing it back yields an equal program."""
    lines = ["vocab {"]
    cons = "; ".join(f"{s.name}/{s.arity}" for s in p.vocab.constructors)
    dyn = "; ".join(f"{s.name}/{s.arity}" for s in p.vocab.dynamics)
    lines.append(f"  constructors {{ {cons} }}")
    lines.append(f"  dynamic {{ {dyn} }}")
    lines.append("}")
    lines.append("inputs { " + ", ".join(s.name for s in p.inputs) + " }")
    lines.append("output { " + p.output.name + " }")
    if p.init:
        lines.append("init {")
        for a in p.init:
            lines.append(f"  {_format_assign(a)};")
        lines.append("}")
    if p.oracles:
        lines.append("oracles {")
        for o in p.oracles:
            lines.append(f'  {o.symbol.name}/{o.symbol.arity} = "{o.path}";')
        lines.append("}")
    lines.append("rules {")
    for stmt in p.rules:
        lines.extend(_format_stmt(stmt, "  "))
    lines.append("}")
    return "\n".join(lines) + "\n"
