"""Problem-file format: declarations, constraints, mappings, and a policy.

    source PatDoc/2
    global DocList/3
    constraint: PatDoc(p, d) -> exists s . PatSpec(p, s), DocSpec(d, s)
    mapping: OpenHours(b, t) := IsOpen(b, t)
    policy: PatSpec(p, s)
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .model import (
    CRIT_NAME,
    ISCRIT,
    Atom,
    ConjunctiveQuery,
    Dependency,
    MappingSet,
    Schema,
    Setting,
    Var,
    mapping_rule,
)

IDENT = r"[A-Za-z][A-Za-z0-9_]*"
_TOKEN = re.compile(rf"\s*(?:(?P<id>{IDENT})|(?P<int>\d+)|(?P<arrow>->)|(?P<def>:=)|(?P<p>[(),./])|(?P<bad>\S))")
RESERVED = {ISCRIT, CRIT_NAME}


class ParseError(ValueError):
    def __init__(self, msg: str, line: int = 0, col: int = 0):
        self.msg, self.line, self.col = msg, line, col
        super().__init__(f"line {line}, col {col}: {msg}" if line else msg)


@dataclass(frozen=True)
class ProblemFile:
    schema: Schema
    constraints: tuple[Dependency, ...] = ()
    mappings: MappingSet = field(default_factory=MappingSet)
    policy: ConjunctiveQuery | None = None

    def setting(self) -> Setting:
        if self.policy is None:
            raise ValueError("problem has no policy")
        return Setting(self.constraints, self.mappings, self.policy, self.schema)


class _Line:
    """Token cursor over one line, keeping columns for error messages."""

    def __init__(self, text: str, lineno: int, offset: int):
        self.lineno = lineno
        self.toks = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                break
            kind = m.lastgroup
            if kind == "bad":
                raise ParseError(f"unexpected character {m.group(kind)!r}", lineno, offset + m.start(kind) + 1)
            self.toks.append((kind, m.group(kind), offset + m.start(kind) + 1))
            pos = m.end()
        self.i = 0
        self.end_col = offset + len(text) + 1

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, self.end_col)

    def next(self, kind=None, value=None):
        k, v, c = self.peek()
        if k is None or (kind and k != kind) or (value and v != value):
            want = value or kind or "token"
            raise ParseError(f"expected {want}, found {v or 'end of line'}", self.lineno, c)
        self.i += 1
        return v, c

    def accept(self, kind=None, value=None) -> bool:
        k, v, _ = self.peek()
        if k is not None and (not kind or k == kind) and (not value or v == value):
            self.i += 1
            return True
        return False

    def done(self):
        k, v, c = self.peek()
        if k is not None:
            raise ParseError(f"unexpected {v!r}", self.lineno, c)


def _ident_list(ln: _Line, close: str = ")") -> list[tuple[str, int]]:
    out = []
    if ln.accept("p", close):
        return out
    while True:
        out.append(ln.next("id"))
        if ln.accept("p", close):
            return out
        ln.next("p", ",")


class _Parser:
    def __init__(self, text: str):
        self.source: list[tuple[str, int]] = []
        self.globals_: list[tuple[str, int]] = []
        self.arity: dict[str, int] = {}
        self.lines: list[tuple[str, _Line]] = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            body = raw.split("#", 1)[0]
            if not body.strip():
                continue
            m = re.match(r"\s*(source|global|constraint\s*:|mapping\s*:|policy\s*:)", body)
            if not m:
                col = len(body) - len(body.lstrip()) + 1
                raise ParseError("expected source, global, constraint:, mapping: or policy:", lineno, col)
            kw = m.group(1).rstrip(":").strip()
            self.lines.append((kw, _Line(body[m.end():], lineno, m.end())))

    def parse(self) -> ProblemFile:
        for kw, ln in self.lines:
            if kw in ("source", "global"):
                self.decl(kw, ln)
        constraints, rules, policy = [], [], None
        seen_targets: set[str] = set()
        for kw, ln in self.lines:
            if kw == "constraint":
                constraints.append(self.constraint(ln, f"c{len(constraints) + 1}"))
            elif kw == "mapping":
                r, col = self.mapping(ln)
                t = r.head[0].pred
                if t in seen_targets:
                    raise ParseError(f"global predicate {t} already has a mapping", ln.lineno, col)
                seen_targets.add(t)
                rules.append(r)
            elif kw == "policy":
                if policy is not None:
                    raise ParseError("more than one policy", ln.lineno, 1)
                policy = self.policy(ln)
        return ProblemFile(Schema(tuple(self.source), tuple(self.globals_)), tuple(constraints),
                           MappingSet(rules), policy)

    def decl(self, kw: str, ln: _Line):
        name, col = ln.next("id")
        if name in RESERVED:
            raise ParseError(f"{name} is reserved", ln.lineno, col)
        if name in self.arity:
            raise ParseError(f"{name} declared twice", ln.lineno, col)
        ln.next("p", "/")
        n, _ = ln.next("int")
        ln.done()
        self.arity[name] = int(n)
        (self.source if kw == "source" else self.globals_).append((name, int(n)))

    def atom(self, ln: _Line, allowed: set[str], role: str) -> Atom:
        name, col = ln.next("id")
        if name in RESERVED:
            raise ParseError(f"{name} is reserved", ln.lineno, col)
        if name not in self.arity:
            raise ParseError(f"undeclared predicate {name}", ln.lineno, col)
        if name not in allowed:
            raise ParseError(f"{name} may not appear in {role}", ln.lineno, col)
        ln.next("p", "(")
        args = []
        for v, vcol in _ident_list(ln):
            if v in self.arity or v in RESERVED:
                raise ParseError(f"{v} is a predicate name, not a variable", ln.lineno, vcol)
            args.append(Var(v))
        if len(args) != self.arity[name]:
            raise ParseError(f"{name} has arity {self.arity[name]}, got {len(args)} arguments", ln.lineno, col)
        return Atom(name, tuple(args))

    def atoms(self, ln: _Line, allowed: set[str], role: str) -> list[Atom]:
        out = [self.atom(ln, allowed, role)]
        while ln.accept("p", ","):
            out.append(self.atom(ln, allowed, role))
        return out

    def constraint(self, ln: _Line, label: str) -> Dependency:
        src = {n for n, _ in self.source}
        body = self.atoms(ln, src, "constraints")
        ln.next("arrow")
        declared = None
        c = ln.peek()[2]
        if ln.peek()[:2] == ("id", "exists") and (len(ln.toks) > ln.i + 1 and ln.toks[ln.i + 1][1] != "("):
            ln.next()
            declared = []
            while True:
                declared.append(Var(ln.next("id")[0]))
                if ln.accept("p", "."):
                    break
                ln.next("p", ",")
        head = self.atoms(ln, src, "constraints")
        ln.done()
        d = Dependency(tuple(body), tuple(head), label)
        if declared is not None and set(declared) != set(d.existentials):
            raise ParseError(f"exists lists {', '.join(map(str, declared))} but the existential "
                             f"variables are {', '.join(map(str, d.existentials)) or 'none'}", ln.lineno, c)
        return d

    def mapping(self, ln: _Line) -> tuple[Dependency, int]:
        col = ln.peek()[2]
        head = self.atom(ln, {n for n, _ in self.globals_}, "a mapping head")
        ln.next("def")
        body = self.atoms(ln, {n for n, _ in self.source}, "a mapping body")
        ln.done()
        if len(set(head.args)) != head.arity:
            raise ParseError("mapping head variables must be distinct", ln.lineno, col)
        bv = {v for a in body for v in a.args}
        missing = [str(v) for v in head.args if v not in bv]
        if missing:
            raise ParseError(f"head variables {', '.join(missing)} missing from the body", ln.lineno, col)
        return mapping_rule(head, body), col

    def policy(self, ln: _Line) -> ConjunctiveQuery:
        free = []
        if ln.accept("p", "("):
            free = [Var(v) for v, _ in _ident_list(ln)]
        col = ln.peek()[2]
        atoms = self.atoms(ln, {n for n, _ in self.source}, "the policy")
        ln.done()
        try:
            return ConjunctiveQuery(tuple(atoms), tuple(free))
        except ValueError as e:
            raise ParseError(str(e), ln.lineno, col) from None


def parse(text: str) -> ProblemFile:
    return _Parser(text).parse()


def _atoms(atoms) -> str:
    return ", ".join(f"{a.pred}({', '.join(map(str, a.args))})" for a in atoms)


def dumps(pf: ProblemFile) -> str:
    """Canonical text; ``parse(dumps(pf)) == pf``."""
    out = [f"source {n}/{k}" for n, k in pf.schema.source]
    out += [f"global {n}/{k}" for n, k in pf.schema.globals_]
    for d in pf.constraints:
        ex = d.existentials
        rhs = _atoms(d.head)
        if ex:
            rhs = f"exists {', '.join(map(str, ex))} . {rhs}"
        out.append(f"constraint: {_atoms(d.body)} -> {rhs}")
    for r in pf.mappings:
        out.append(f"mapping: {_atoms(r.head)} := {_atoms(r.body)}")
    if pf.policy is not None:
        free = f"({', '.join(map(str, pf.policy.free))}) " if pf.policy.free else ""
        out.append(f"policy: {free}{_atoms(pf.policy.atoms)}")
    return "\n".join(out) + "\n"


def from_setting(s: Setting) -> ProblemFile:
    """Problem file for a generated setting; constraint labels are renumbered."""
    schema = s.schema
    if schema is None:
        arity = {}
        for d in list(s.sigma) + list(s.mappings):
            for a in d.body + d.head:
                arity[a.pred] = a.arity
        for a in s.policy.atoms:
            arity[a.pred] = a.arity
        glob = {n for n, _ in s.mappings.global_preds()}
        schema = Schema(tuple((n, k) for n, k in arity.items() if n not in glob),
                        tuple(s.mappings.global_preds()))
    cons = tuple(d.with_label(f"c{i}") for i, d in enumerate(s.sigma, 1))
    maps = MappingSet([mapping_rule(r.head[0], r.body) for r in s.mappings])
    return ProblemFile(schema, cons, maps, s.policy)
