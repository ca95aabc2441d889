"""Logical vocabulary: terms, atoms, conjunctive queries, dependencies, GAV mappings.

Everything here is an immutable value.  Classification of dependencies and
mappings is a pure function of syntax.
"""

from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Sequence


@dataclass(frozen=True)
class Const:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Null:
    id: int

    def __str__(self) -> str:
        return f"_:n{self.id}"


Term = Const | Var | Null

CRIT_NAME = "__crit"
CRIT = Const(CRIT_NAME)
ISCRIT = "IsCrit"


def term_key(t: Term) -> tuple:
    """Total order on terms: constants, then nulls by creation, then variables."""
    if isinstance(t, Const):
        return (0, 0, t.name)
    if isinstance(t, Null):
        return (1, t.id, "")
    return (2, 0, t.name)


class NullFactory:
    """Monotone null allocator; one per engine run keeps traces reproducible."""

    def __init__(self, start: int = 1):
        self._counter = itertools.count(start)
        self._lock = threading.Lock()

    def fresh(self) -> Null:
        with self._lock:
            return Null(next(self._counter))


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[Term, ...] = ()

    def __post_init__(self):
        if not isinstance(self.args, tuple):
            object.__setattr__(self, "args", tuple(self.args))

    @property
    def arity(self) -> int:
        return len(self.args)

    def vars(self) -> list[Var]:
        return unique(a for a in self.args if isinstance(a, Var))

    def is_ground(self) -> bool:
        return not any(isinstance(a, Var) for a in self.args)

    def subst(self, mapping) -> "Atom":
        return Atom(self.pred, tuple(mapping.get(a, a) for a in self.args))

    def __str__(self) -> str:
        return f"{self.pred}({', '.join(map(str, self.args))})"


Fact = Atom


def atom(pred: str, *names: str) -> Atom:
    """Build an atom whose arguments are all variables (test and generator helper)."""
    return Atom(pred, tuple(Var(n) for n in names))


def unique(items: Iterable) -> list:
    seen = {}
    for x in items:
        seen.setdefault(x, None)
    return list(seen)


def atoms_vars(atoms: Iterable[Atom]) -> list[Var]:
    return unique(v for a in atoms for v in a.vars())


def var_occurrences(atoms: Iterable[Atom]) -> dict[Var, int]:
    counts: dict[Var, int] = {}
    for a in atoms:
        for t in a.args:
            if isinstance(t, Var):
                counts[t] = counts.get(t, 0) + 1
    return counts


@dataclass(frozen=True)
class ConjunctiveQuery:
    atoms: tuple[Atom, ...]
    free: tuple[Var, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "free", tuple(self.free))
        body_vars = set(self.vars())
        for v in self.free:
            if v not in body_vars:
                raise ValueError(f"free variable {v} does not occur in the query")
        for a in self.atoms:
            for t in a.args:
                if not isinstance(t, Var):
                    raise ValueError(f"queries may not mention constants: {a}")

    def vars(self) -> list[Var]:
        return atoms_vars(self.atoms)

    @property
    def is_boolean(self) -> bool:
        return not self.free

    def preds(self) -> set[str]:
        return {a.pred for a in self.atoms}

    def __str__(self) -> str:
        body = " ∧ ".join(map(str, self.atoms)) or "⊤"
        if self.free:
            return f"({', '.join(map(str, self.free))}) {body}"
        return body


CQ = ConjunctiveQuery


class DepClass(str, Enum):
    TGD = "TGD"
    FGTGD = "FGTGD"
    GTGD = "GTGD"
    LTGD = "LTGD"
    INCDEP = "IncDep"
    UID = "UID"


class MapClass(str, Enum):
    CQMAP = "CQMap"
    GUARDED = "GuardedMap"
    ATOM = "AtomMap"
    PROJ = "ProjMap"


@dataclass(frozen=True)
class Dependency:
    """A TGD ``body -> exists ys. head``.  ``label`` is a stable rule id."""

    body: tuple[Atom, ...]
    head: tuple[Atom, ...]
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        object.__setattr__(self, "head", tuple(self.head))
        if not self.head:
            raise ValueError("dependency head must be non-empty")

    @property
    def frontier(self) -> list[Var]:
        hv = set(atoms_vars(self.head))
        return [v for v in atoms_vars(self.body) if v in hv]

    @property
    def existentials(self) -> list[Var]:
        bv = set(atoms_vars(self.body))
        return [v for v in atoms_vars(self.head) if v not in bv]

    def with_label(self, label: str) -> "Dependency":
        return Dependency(self.body, self.head, label)

    def __str__(self) -> str:
        ex = self.existentials
        lhs = " ∧ ".join(map(str, self.body)) or "⊤"
        rhs = " ∧ ".join(map(str, self.head))
        if ex:
            rhs = f"∃{','.join(map(str, ex))} {rhs}"
        return f"{lhs} → {rhs}"


def classify_dependency(d: Dependency) -> frozenset[DepClass]:
    classes = {DepClass.TGD}
    front = set(d.frontier)
    body_vars = set(atoms_vars(d.body))
    if any(front <= set(a.vars()) for a in d.body):
        classes.add(DepClass.FGTGD)
    else:
        return frozenset(classes)
    if any(body_vars <= set(a.vars()) for a in d.body):
        classes.add(DepClass.GTGD)
    else:
        return frozenset(classes)
    if len(d.body) != 1:
        return frozenset(classes)
    classes.add(DepClass.LTGD)
    no_repeat = lambda atoms: all(c == 1 for c in var_occurrences(atoms).values())
    if len(d.head) == 1 and no_repeat(d.body) and no_repeat(d.head):
        classes.add(DepClass.INCDEP)
        if len(front) <= 1:
            classes.add(DepClass.UID)
    return frozenset(classes)


def classify_all(deps: Sequence[Dependency]) -> frozenset[DepClass]:
    """Classes shared by every dependency (all classes for an empty set)."""
    out = set(DepClass)
    for d in deps:
        out &= classify_dependency(d)
    return frozenset(out)


def strongest(classes: Iterable[Enum], order: Sequence[Enum]) -> Enum | None:
    cs = set(classes)
    for c in reversed(order):
        if c in cs:
            return c
    return None


DEP_ORDER = (DepClass.TGD, DepClass.FGTGD, DepClass.GTGD, DepClass.LTGD, DepClass.INCDEP, DepClass.UID)
MAP_ORDER = (MapClass.CQMAP, MapClass.GUARDED, MapClass.ATOM, MapClass.PROJ)


@dataclass(frozen=True)
class Schema:
    source: tuple[tuple[str, int], ...] = ()
    globals_: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "source", tuple(self.source))
        object.__setattr__(self, "globals_", tuple(self.globals_))
        s = {n for n, _ in self.source}
        g = {n for n, _ in self.globals_}
        if s & g:
            raise ValueError(f"predicates declared both source and global: {sorted(s & g)}")
        if ISCRIT in s | g:
            raise ValueError("IsCrit is reserved")

    @property
    def arities(self) -> dict[str, int]:
        return dict(self.source) | dict(self.globals_)

    def source_names(self) -> set[str]:
        return {n for n, _ in self.source}

    def global_names(self) -> set[str]:
        return {n for n, _ in self.globals_}


@dataclass(frozen=True)
class MappingSet:
    """GAV mappings: exactly one rule per global predicate.

    Each rule is a :class:`Dependency` whose head is a single global atom with
    pairwise distinct variables and whose body is a CQ over the sources.
    """

    rules: tuple[Dependency, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        seen = set()
        for r in self.rules:
            if len(r.head) != 1:
                raise ValueError(f"mapping head must be a single atom: {r}")
            h = r.head[0]
            if h.pred in seen:
                raise ValueError(f"global predicate {h.pred} has more than one mapping rule")
            seen.add(h.pred)
            if len(set(h.args)) != len(h.args) or not all(isinstance(a, Var) for a in h.args):
                raise ValueError(f"mapping head must have distinct variables: {h}")
            if r.existentials:
                raise ValueError(f"mapping head variable missing from body: {r}")

    def __iter__(self) -> Iterator[Dependency]:
        return iter(self.rules)

    def __len__(self) -> int:
        return len(self.rules)

    def target(self, r: Dependency) -> Atom:
        return r.head[0]

    def global_preds(self) -> list[tuple[str, int]]:
        return [(r.head[0].pred, r.head[0].arity) for r in self.rules]

    def by_target(self) -> dict[str, Dependency]:
        return {r.head[0].pred: r for r in self.rules}


def mapping_rule(head: Atom, body: Sequence[Atom], label: str = "") -> Dependency:
    return Dependency(tuple(body), (head,), label or f"m:{head.pred}")


def classify_mapping_rule(r: Dependency) -> frozenset[MapClass]:
    classes = {MapClass.CQMAP}
    allv = set(atoms_vars(r.body))
    if any(allv <= set(a.vars()) for a in r.body):
        classes.add(MapClass.GUARDED)
    if len(r.body) == 1:
        classes.add(MapClass.ATOM)
        if all(c == 1 for c in var_occurrences(r.body).values()):
            classes.add(MapClass.PROJ)
    return frozenset(classes)


def classify_mapping(m: MappingSet) -> frozenset[MapClass]:
    out = set(MapClass)
    for r in m:
        out &= classify_mapping_rule(r)
    return frozenset(out)


class Instance:
    """A deduplicated set of facts with insertion-ordered iteration."""

    __slots__ = ("_facts",)

    def __init__(self, facts: Iterable[Atom] = ()):
        d = {}
        for f in facts:
            if not f.is_ground():
                raise ValueError(f"facts may not contain variables: {f}")
            d.setdefault(f, None)
        self._facts = d

    def __iter__(self) -> Iterator[Atom]:
        return iter(self._facts)

    def __len__(self) -> int:
        return len(self._facts)

    def __contains__(self, f) -> bool:
        return f in self._facts

    def __eq__(self, other) -> bool:
        return isinstance(other, Instance) and set(self._facts) == set(other._facts)

    def __hash__(self):
        return hash(frozenset(self._facts))

    def facts(self) -> list[Atom]:
        return list(self._facts)

    def by_pred(self, pred: str) -> list[Atom]:
        return [f for f in self._facts if f.pred == pred]

    def values(self) -> list[Term]:
        return unique(t for f in self._facts for t in f.args)

    def union(self, other: Iterable[Atom]) -> "Instance":
        return Instance(itertools.chain(self._facts, other))

    def __repr__(self) -> str:
        return "Instance({" + ", ".join(map(str, self._facts)) + "})"


class AuxNames:
    """Deterministic allocator for auxiliary predicate names (``__aux<N>``)."""

    def __init__(self, prefix: str = "__aux"):
        self.prefix = prefix
        self._n = itertools.count(1)

    def fresh(self) -> str:
        return f"{self.prefix}{next(self._n)}"


def normalize_heads(deps: Sequence[Dependency], names: AuxNames | None = None) -> list[Dependency]:
    """Split multi-atom heads through one intermediate predicate per rule.

    ``B -> exists ys. H1 ∧ H2`` becomes ``B -> exists ys. Aux(frontier, ys)``
    plus ``Aux(frontier, ys) -> Hi`` for every head atom.
    """
    names = names or AuxNames()
    out: list[Dependency] = []
    for d in deps:
        if len(d.head) == 1:
            out.append(d)
            continue
        aux = Atom(names.fresh(), tuple(d.frontier + d.existentials))
        base = d.label or aux.pred
        out.append(Dependency(d.body, (aux,), f"{base}/aux"))
        for i, h in enumerate(d.head, 1):
            out.append(Dependency((aux,), (h,), f"{base}/h{i}"))
    return out


@dataclass(frozen=True)
class Setting:
    """A disclosure problem: source constraints, mappings, policy."""

    sigma: tuple[Dependency, ...]
    mappings: MappingSet
    policy: ConjunctiveQuery
    schema: Schema | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "sigma", tuple(self.sigma))
