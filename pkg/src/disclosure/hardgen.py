"""Hardness-family generators with independent brute-force reference solvers."""

from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass, field
from .model import (
    CRIT,
    Atom,
    ConjunctiveQuery,
    Const,
    Dependency,
    Instance,
    MappingSet,
    Schema,
    Setting,
    Var,
    atom,
    mapping_rule,
)

MAX_VERTICES = 12
MAX_INPUTS = 16


# 3-coloring

@dataclass(frozen=True)
class ColoringProblem:
    vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple(tuple(e) for e in self.edges))
        for a, b in self.edges:
            if a == b or not (1 <= a <= self.vertices and 1 <= b <= self.vertices):
                raise ValueError(f"bad edge {a}-{b}")

    @classmethod
    def parse(cls, spec: str, vertices: int | None = None) -> "ColoringProblem":
        edges = []
        for part in filter(None, (p.strip() for p in spec.split(","))):
            a, b = part.split("-")
            edges.append((int(a), int(b)))
        n = vertices or max((max(e) for e in edges), default=0)
        return cls(n, tuple(edges))

    @classmethod
    def random(cls, rng: random.Random, n: int, p: float = 0.5) -> "ColoringProblem":
        edges = [(a, b) for a in range(1, n + 1) for b in range(a + 1, n + 1) if rng.random() < p]
        return cls(n, tuple(edges))


def color3(g: ColoringProblem) -> bool:
    if g.vertices > MAX_VERTICES:
        raise ValueError(f"at most {MAX_VERTICES} vertices")
    for col in itertools.product(range(3), repeat=g.vertices):
        if all(col[a - 1] != col[b - 1] for a, b in g.edges):
            return True
    return False


def gen_3coloring(g: ColoringProblem) -> Setting:
    ok = lambda *vs: atom("OK", *vs)
    sigma = (Dependency((ok("x", "y", "z"),), (ok("x", "z", "y"),), "swap23"),
             Dependency((ok("x", "y", "z"),), (ok("y", "x", "z"),), "swap12"))
    m = MappingSet([mapping_rule(Atom("M", ()), [ok("x", "y", "z")])])
    atoms = [ok(f"v{a}", f"v{b}", f"c{k}") for k, (a, b) in enumerate(g.edges, 1)]
    schema = Schema((("OK", 3),), (("M", 0),))
    return Setting(sigma, m, ConjunctiveQuery(atoms), schema)


# Circuit-SAT over the single-shared-value instance

@dataclass(frozen=True)
class Circuit:
    """Wires 1..k, wire 1 is the output.  Gates are ("NOT", i, o) or ("OR", i, j, o)."""

    wires: int
    gates: tuple[tuple, ...]
    names: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(tuple(g) for g in self.gates))
        outs = [g[-1] for g in self.gates]
        if len(set(outs)) != len(outs):
            raise ValueError("a wire is the output of two gates")
        for g in self.gates:
            if g[0] not in ("NOT", "OR") or len(g) != (3 if g[0] == "NOT" else 4):
                raise ValueError(f"bad gate {g}")
            if not all(1 <= w <= self.wires for w in g[1:]):
                raise ValueError(f"gate {g} mentions an unknown wire")
        self.order()

    def inputs(self) -> list[int]:
        outs = {g[-1] for g in self.gates}
        return [w for w in range(1, self.wires + 1) if w not in outs]

    def order(self) -> list[tuple]:
        """Gates in evaluation order; cycles are rejected."""
        by_out = {g[-1]: g for g in self.gates}
        done, out, onstack = set(), [], set()

        def visit(w):
            if w in done or w not in by_out:
                return
            if w in onstack:
                raise ValueError("cyclic circuit")
            onstack.add(w)
            g = by_out[w]
            for i in g[1:-1]:
                visit(i)
            onstack.discard(w)
            done.add(w)
            out.append(g)

        for w in sorted(by_out):
            visit(w)
        return out

    def evaluate(self, assignment: dict[int, bool]) -> dict[int, bool]:
        vals = dict(assignment)
        for g in self.order():
            if g[0] == "NOT":
                vals[g[2]] = not vals[g[1]]
            else:
                vals[g[3]] = vals[g[1]] or vals[g[2]]
        return vals

    @classmethod
    def parse(cls, spec: str) -> "Circuit":
        """Parse ``name=EXPR`` with EXPR := INPUT | NOT EXPR | OR(EXPR, EXPR) | (EXPR)."""
        _, _, expr = spec.rpartition("=")
        toks = re.findall(r"NOT|OR|[A-Za-z0-9_]+|[(),]", expr)
        pos = 0
        gates = []
        inputs: dict[str, int] = {}
        counter = itertools.count(2)

        def take(t=None):
            nonlocal pos
            if pos >= len(toks) or (t is not None and toks[pos] != t):
                raise ValueError(f"circuit syntax error near token {pos} in {spec!r}")
            pos += 1
            return toks[pos - 1]

        def node(out):
            tok = take()
            if tok == "NOT":
                w = next(counter)
                node(w)
                gates.append(("NOT", w, out))
            elif tok == "OR":
                take("(")
                a, b = next(counter), next(counter)
                node(a)
                take(",")
                node(b)
                take(")")
                gates.append(("OR", a, b, out))
            elif tok == "(":
                node(out)
                take(")")
            elif tok in ("(", ")", ","):
                raise ValueError(f"unexpected {tok!r} in {spec!r}")
            else:
                alias.append((out, tok))

        alias: list[tuple[int, str]] = []
        node(1)
        if pos != len(toks):
            raise ValueError(f"trailing input in {spec!r}")
        # wires standing for a named input are merged into one wire per name
        subst: dict[int, int] = {}
        for w, name in alias:
            subst[w] = inputs.setdefault(name, w)
        gates = [tuple([g[0]] + [subst.get(x, x) for x in g[1:]]) for g in gates]
        used = sorted({1} | {x for g in gates for x in g[1:]})
        renum = {w: i for i, w in enumerate(used, 1)}
        gates = [tuple([g[0]] + [renum[x] for x in g[1:]]) for g in gates]
        names = {renum[w]: n for n, w in inputs.items()}
        return cls(len(used), tuple(gates), names)

    @classmethod
    def random(cls, rng: random.Random, n_gates: int, n_inputs: int = 3) -> "Circuit":
        """Random circuit built top-down; wire 1 is the output."""
        if n_gates < 1 or n_inputs < 1:
            raise ValueError("need at least one gate and one input")
        gates = []
        wires = 1 + n_inputs
        inputs = list(range(2, 2 + n_inputs))
        pending = [1]
        for _ in range(n_gates):
            if not pending:
                break
            out = pending.pop(rng.randrange(len(pending)))
            if rng.random() < 0.4:
                wires += 1
                gates.append(("NOT", wires, out))
                pending.append(wires)
            else:
                a = wires + 1
                b = wires + 2
                wires += 2
                gates.append(("OR", a, b, out))
                pending += [a, b]
        # remaining open wires are tied to primary inputs
        tie = {w: rng.choice(inputs) for w in pending}
        gates = [tuple([g[0]] + [tie.get(x, x) for x in g[1:-1]] + [g[-1]]) for g in gates]
        used = sorted({1} | {x for g in gates for x in g[1:]})
        renum = {w: i for i, w in enumerate(used, 1)}
        gates = [tuple([g[0]] + [renum[x] for x in g[1:]]) for g in gates]
        return cls(len(used), tuple(gates))


def sat(c: Circuit) -> bool:
    ins = c.inputs()
    if len(ins) > MAX_INPUTS:
        raise ValueError(f"at most {MAX_INPUTS} inputs")
    for bits in itertools.product((False, True), repeat=len(ins)):
        if c.evaluate(dict(zip(ins, bits)))[1]:
            return True
    return False


CIRCUIT_ROWS = (
    "y y x x y v1 x y",
    "x y y x x v1 v2 v3",
    "y x x y x v1 v2 v3",
    "x x y y x v1 v2 v3",
    "x u y y v1 x v2 v3",
    "v1 v2 v3 x v4 y y x",
)

ATOMMAP_NOCONSTRAINTS = "ATOMMAP_NOCONSTRAINTS"
FR1LTGD_PROJMAP = "FR1LTGD_PROJMAP"


def circuit_instance() -> Instance:
    """The six-row R/8 instance: c is the only value shared across rows."""
    c = CRIT
    facts = []
    for k, row in enumerate(CIRCUIT_ROWS, 1):
        vals = {"x": c}
        args = []
        for j, name in enumerate(row.split(), 1):
            if name == "y":
                vals.setdefault("y", Const(f"n{k}"))
            elif name not in vals:
                vals[name] = Const(f"e{k}_{j}")
            args.append(vals[name])
        facts.append(Atom("R", tuple(args)))
    return Instance(facts)


def circuit_query(c: Circuit) -> ConjunctiveQuery:
    fresh = itertools.count(1)

    def row(cells: dict[int, str]) -> Atom:
        return Atom("R", tuple(Var(cells[i]) if i in cells else Var(f"f{next(fresh)}") for i in range(1, 9)))

    atoms = [row({1: f"v{i}", 2: f"v{i}"}) for i in range(1, c.wires + 1)]
    atoms.append(row({3: "v1", 4: "v1"}))
    for k, g in enumerate(c.gates, 1):
        if g[0] == "NOT":
            i, j = g[1], g[2]
            atoms += [row({1: f"v{i}", 3: f"r{k}"}),
                      row({4: f"r{k}", 6: f"p{k}"}),
                      row({7: f"p{k}", 8: f"v{j}"})]
        else:
            i, j, o = g[1], g[2], g[3]
            atoms += [row({1: f"v{i}", 3: f"x{k}"}),
                      row({2: f"v{j}", 4: f"y{k}"}),
                      row({3: f"x{k}", 4: f"y{k}", 5: f"v{o}"})]
    return ConjunctiveQuery(atoms)


def gen_circuit_sat(c: Circuit, variant: str = ATOMMAP_NOCONSTRAINTS) -> tuple[Setting, Instance]:
    rows = [atom("R", *r.split()) for r in CIRCUIT_ROWS]
    q = circuit_query(c)
    if variant == ATOMMAP_NOCONSTRAINTS:
        m = MappingSet([mapping_rule(atom(f"T{k}", "x"), [r]) for k, r in enumerate(rows, 1)])
        sigma: tuple = ()
        schema = Schema((("R", 8),), tuple((f"T{k}", 1) for k in range(1, 7)))
    elif variant == FR1LTGD_PROJMAP:
        m = MappingSet([mapping_rule(atom("T", "x"), [atom("A", "x")])])
        sigma = tuple(Dependency((atom("A", "x"),), (r,), f"row{k}") for k, r in enumerate(rows, 1))
        schema = Schema((("A", 1), ("R", 8)), (("T", 1),))
    else:
        raise ValueError(f"unknown variant {variant}")
    return Setting(sigma, m, q, schema), circuit_instance()


# Inclusion dependency implication

@dataclass(frozen=True)
class IdImplication:
    ids: tuple[Dependency, ...]
    goal: tuple[str, str]
    arity: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "ids", tuple(self.ids))
        ar = dict(self.arity)
        for d in self.ids:
            if len(d.body) != 1 or len(d.head) != 1:
                raise ValueError(f"not an inclusion dependency: {d}")
            for a in d.body + d.head:
                if len(set(a.args)) != a.arity:
                    raise ValueError(f"repeated variable in {d}")
                if ar.setdefault(a.pred, a.arity) != a.arity:
                    raise ValueError(f"inconsistent arity for {a.pred}")
        r1, r2 = self.goal
        if r1 in ar and r2 in ar and ar[r1] != ar[r2]:
            raise ValueError("goal relations have different arities")
        n = ar.get(r1, ar.get(r2))
        if n is None:
            raise ValueError("goal arity unknown")
        ar.setdefault(r1, n)
        ar.setdefault(r2, n)
        object.__setattr__(self, "arity", ar)

    @classmethod
    def random(cls, rng: random.Random, n_preds: int = 4, n_ids: int = 4, arity: int = 2) -> "IdImplication":
        """Acyclic ID set (S_i into S_j only for i < j), so every chase terminates."""
        preds = [f"S{i}" for i in range(n_preds)]
        xs = [f"x{i}" for i in range(arity)]
        ids = []
        for k in range(n_ids):
            i = rng.randrange(n_preds - 1)
            j = rng.randrange(i + 1, n_preds)
            hv = rng.sample(xs, arity)
            if rng.random() < 0.3:
                hv[rng.randrange(arity)] = "z"
            ids.append(Dependency((atom(preds[i], *xs),), (atom(preds[j], *hv),), f"id{k}"))
        a = rng.randrange(n_preds - 1)
        b = rng.randrange(a + 1, n_preds)
        return cls(tuple(ids), (preds[a], preds[b]), {p: arity for p in preds})


def implies(p: IdImplication) -> bool:
    """Chase a frozen R1 tuple, tracking which goal column sits at which position."""
    r1, r2 = p.goal
    n = p.arity[r1]
    start = (r1, tuple(range(n)))
    target = (r2, tuple(range(n)))
    seen = {start}
    todo = [start]
    while todo:
        pred, cols = todo.pop()
        if (pred, cols) == target:
            return True
        for d in p.ids:
            b, h = d.body[0], d.head[0]
            if b.pred != pred:
                continue
            val = dict(zip(b.args, cols))
            nxt = (h.pred, tuple(val.get(t) for t in h.args))
            if nxt not in seen:
                seen.add(nxt)
                todo.append(nxt)
    return False


def gen_id_implication(p: IdImplication) -> Setting:
    r1, r2 = p.goal
    n = p.arity[r1]
    xs = [f"X{i}" for i in range(1, n + 1)]
    shadow = f"shadow{r1}"
    sigma = tuple(p.ids) + (Dependency((atom(shadow, *xs),), (atom(r1, *xs),), "shadow"),)
    m = MappingSet([mapping_rule(Atom("V", ()), [atom(shadow, *xs)])])
    q = ConjunctiveQuery([atom(shadow, *xs), atom(r2, *xs)])
    source = tuple(sorted(p.arity.items())) + ((shadow, n),)
    return Setting(sigma, m, q, Schema(source, (("V", 0),)))
