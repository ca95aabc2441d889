"""Homomorphism search and the restricted chase.

This is the shared kernel: every decision procedure in the package ends up
calling :func:`iter_matches` or running a :class:`Chaser`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Sequence

from .model import (
    Atom,
    ConjunctiveQuery,
    Dependency,
    Instance,
    Null,
    NullFactory,
    Term,
    Var,
    atoms_vars,
    term_key,
)

log = logging.getLogger(__name__)

Homomorphism = dict  # Var -> Const | Null


class FactStore:
    """Mutable fact set indexed per predicate and per (predicate, position, value).

    Buckets are insertion-ordered dicts so that iteration never depends on
    string hashing.
    """

    def __init__(self, facts: Iterable[Atom] = ()):
        self._by_pred: dict[str, dict[Atom, None]] = {}
        self._by_pos: dict[tuple[str, int, Term], dict[Atom, None]] = {}
        self._n = 0
        for f in facts:
            self.add(f)

    def add(self, f: Atom) -> bool:
        bucket = self._by_pred.setdefault(f.pred, {})
        if f in bucket:
            return False
        bucket[f] = None
        for i, v in enumerate(f.args):
            self._by_pos.setdefault((f.pred, i, v), {})[f] = None
        self._n += 1
        return True

    def __contains__(self, f: Atom) -> bool:
        return f in self._by_pred.get(f.pred, ())

    def __len__(self) -> int:
        return self._n

    def __iter__(self) -> Iterator[Atom]:
        for bucket in self._by_pred.values():
            yield from bucket

    def by_pred(self, pred: str):
        return self._by_pred.get(pred, {})

    def lookup(self, pred: str, pos: int, value: Term):
        return self._by_pos.get((pred, pos, value), {})

    def preds(self) -> list[str]:
        return [p for p, b in self._by_pred.items() if b]

    def to_instance(self) -> Instance:
        return Instance(iter(self))

    def substituted(self, mapping: dict) -> "FactStore":
        return FactStore(f.subst(mapping) for f in self)


def as_store(db) -> FactStore:
    if isinstance(db, FactStore):
        return db
    return FactStore(db)


def _candidates(store: FactStore, a: Atom, binding: dict):
    best = None
    for i, t in enumerate(a.args):
        v = binding.get(t, t) if isinstance(t, Var) else t
        if isinstance(v, Var):
            continue
        bucket = store.lookup(a.pred, i, v)
        if best is None or len(bucket) < len(best):
            best = bucket
            if not best:
                break
    return store.by_pred(a.pred) if best is None else best


def iter_matches(db, atoms: Sequence[Atom], binding: dict | None = None, guard=None) -> Iterator[dict]:
    """Yield every extension of ``binding`` mapping all ``atoms`` into ``db``.

    The next atom to join is the one with the smallest candidate bucket; ties
    go to the earlier atom, so enumeration order is deterministic.  ``guard``,
    if given, is called as ``guard(binding, var)`` after each new binding and
    prunes the branch when it returns False.
    """
    store = as_store(db)
    binding = dict(binding or {})
    yield from _search(store, list(atoms), binding, guard)


def _search(store: FactStore, remaining: list[Atom], binding: dict, guard=None):
    if not remaining:
        yield dict(binding)
        return
    best_i, best_c = 0, None
    for i, a in enumerate(remaining):
        c = _candidates(store, a, binding)
        if best_c is None or len(c) < len(best_c):
            best_i, best_c = i, c
            if not c:
                return
    a = remaining[best_i]
    rest = remaining[:best_i] + remaining[best_i + 1:]
    for f in list(best_c):
        if len(f.args) != len(a.args):
            continue
        added = []
        ok = True
        for t, v in zip(a.args, f.args):
            if isinstance(t, Var):
                cur = binding.get(t)
                if cur is None:
                    binding[t] = v
                    added.append(t)
                    if guard is not None and not guard(binding, t):
                        ok = False
                        break
                elif cur != v:
                    ok = False
                    break
            elif t != v:
                ok = False
                break
        if ok:
            yield from _search(store, rest, binding, guard)
        for t in added:
            del binding[t]


def first_match(db, atoms: Sequence[Atom], binding: dict | None = None) -> dict | None:
    return next(iter_matches(db, atoms, binding), None)


def binding_key(h: dict, order: Sequence[Var]) -> tuple:
    return tuple(term_key(h[v]) for v in order)


def eval_cq(db, q: ConjunctiveQuery) -> list[Homomorphism]:
    """All homomorphisms of ``q`` into ``db``, sorted by the values of q's variables."""
    order = q.vars()
    out = list(iter_matches(db, q.atoms))
    out.sort(key=lambda h: binding_key(h, order))
    return out


def holds(db, q: ConjunctiveQuery) -> bool:
    return first_match(db, q.atoms) is not None


@dataclass(frozen=True)
class ChaseBudget:
    max_rounds: int = 8
    max_facts: int = 100_000

    def __post_init__(self):
        if self.max_rounds < 0 or self.max_facts < 0:
            raise ValueError("budget values must be non-negative")


class ChaseStatus(str, Enum):
    SATURATED = "SATURATED"
    BUDGET_EXHAUSTED = "BUDGET_EXHAUSTED"


@dataclass(frozen=True)
class TraceStep:
    rule: str
    trigger: dict
    added: tuple[Atom, ...]
    fresh: tuple[Null, ...] = ()


@dataclass
class ChaseResult:
    instance: Instance
    status: ChaseStatus
    rounds: int
    trace: list[TraceStep] = field(default_factory=list)

    @property
    def saturated(self) -> bool:
        return self.status is ChaseStatus.SATURATED


def head_satisfied(store: FactStore, d: Dependency, trigger: dict) -> bool:
    front = {v: trigger[v] for v in d.frontier}
    return first_match(store, d.head, front) is not None


class Chaser:
    """Restricted chase in breadth-first rounds.

    Triggers of a round are computed against the instance as it stood when
    the round started; rules are visited in declaration order and their
    triggers in lexicographic binding order.  A trigger fires only if its head
    is not already witnessed at firing time.
    """

    def __init__(self, db, deps: Sequence[Dependency], max_facts: int = 100_000,
                 nulls: NullFactory | None = None, keep_trace: bool = True):
        self.store = FactStore(db) if not isinstance(db, FactStore) else db
        self.deps = list(deps)
        self.nulls = nulls or NullFactory()
        self.max_facts = max_facts
        self.trace: list[TraceStep] = []
        self.keep_trace = keep_trace
        self.rounds = 0
        self.overflow = False
        self._body_vars = [atoms_vars(d.body) for d in self.deps]

    def triggers(self) -> list[tuple[Dependency, list[dict]]]:
        out = []
        for d, order in zip(self.deps, self._body_vars):
            ms = list(iter_matches(self.store, d.body))
            ms.sort(key=lambda h: binding_key(h, order))
            out.append((d, ms))
        return out

    def has_live_trigger(self) -> bool:
        for d in self.deps:
            for m in iter_matches(self.store, d.body):
                if not head_satisfied(self.store, d, m):
                    return True
        return False

    def fire(self, d: Dependency, trigger: dict) -> list[Atom]:
        ext = {v: trigger[v] for v in d.frontier}
        fresh = []
        for y in d.existentials:
            n = self.nulls.fresh()
            ext[y] = n
            fresh.append(n)
        added = [f for f in (h.subst(ext) for h in d.head) if self.store.add(f)]
        if self.keep_trace:
            self.trace.append(TraceStep(d.label, dict(trigger), tuple(added), tuple(fresh)))
        return added

    def round(self) -> list[Atom]:
        """Run one round; returns the facts it added."""
        self.rounds += 1
        added: list[Atom] = []
        for d, matches in self.triggers():
            for m in matches:
                if head_satisfied(self.store, d, m):
                    continue
                added.extend(self.fire(d, m))
                if len(self.store) >= self.max_facts:
                    self.overflow = True
                    return added
        return added


def chase(db, deps: Sequence[Dependency], budget: ChaseBudget = ChaseBudget()) -> ChaseResult:
    runner = Chaser(db, deps, budget.max_facts)
    status = _drive(runner, budget)
    return ChaseResult(runner.store.to_instance(), status, runner.rounds, runner.trace)


def _drive(runner: Chaser, budget: ChaseBudget, check=None):
    """Run rounds until saturation, budget exhaustion, or ``check`` returns truthy."""
    if check is not None and check():
        return None
    while runner.rounds < budget.max_rounds:
        added = runner.round()
        if runner.overflow:
            return ChaseStatus.BUDGET_EXHAUSTED
        if check is not None and added and check():
            return None
        if not added:
            return ChaseStatus.SATURATED
    if runner.has_live_trigger():
        return ChaseStatus.BUDGET_EXHAUSTED
    return ChaseStatus.SATURATED


class Status(str, Enum):
    ENTAILED = "ENTAILED"
    NOT_ENTAILED = "NOT_ENTAILED"
    DISCLOSED = "DISCLOSED"
    NOT_DISCLOSED = "NOT_DISCLOSED"
    UNKNOWN = "UNKNOWN"


@dataclass
class Verdict:
    """Outcome of a decision procedure.

    ``witness`` is set for positive answers, ``certificate`` for negative ones
    (the saturated instance for chase-based procedures).
    """

    status: Status
    witness: dict | None = None
    query: ConjunctiveQuery | None = None
    certificate: object = None
    rounds: int = 0
    facts: int = 0
    reason: str = ""
    details: dict = field(default_factory=dict)

    @property
    def positive(self) -> bool:
        return self.status in (Status.ENTAILED, Status.DISCLOSED)

    @property
    def negative(self) -> bool:
        return self.status in (Status.NOT_ENTAILED, Status.NOT_DISCLOSED)

    @property
    def unknown(self) -> bool:
        return self.status is Status.UNKNOWN


def entails_any(db, deps: Sequence[Dependency], queries: Sequence[ConjunctiveQuery],
                budget: ChaseBudget = ChaseBudget(), keep_trace: bool = False,
                probe=None) -> Verdict:
    """Chase once, checking every query after every round; the first match wins.

    ``probe(store)`` may replace the per-query check; it returns a
    ``(query, homomorphism)`` pair or None.
    """
    for q in queries:
        if not q.is_boolean:
            raise ValueError("entailment queries must be Boolean")
    runner = Chaser(db, deps, budget.max_facts, keep_trace=keep_trace)
    found: list = []

    def check():
        if probe is not None:
            hit = probe(runner.store)
            if hit is not None:
                found.append(hit)
            return hit is not None
        for q in queries:
            h = first_match(runner.store, q.atoms)
            if h is not None:
                found.append((q, h))
                return True
        return False

    status = _drive(runner, budget, check)
    if found:
        q, h = found[0]
        return Verdict(Status.ENTAILED, witness=h, query=q, rounds=runner.rounds,
                       facts=len(runner.store), details={"store": runner.store})
    if status is ChaseStatus.SATURATED:
        return Verdict(Status.NOT_ENTAILED, certificate=runner.store.to_instance(),
                       rounds=runner.rounds, facts=len(runner.store))
    reason = "max_facts reached" if runner.overflow else f"no saturation within {budget.max_rounds} rounds"
    return Verdict(Status.UNKNOWN, rounds=runner.rounds, facts=len(runner.store), reason=reason)


def entails(db, deps: Sequence[Dependency], q: ConjunctiveQuery,
            budget: ChaseBudget = ChaseBudget()) -> Verdict:
    return entails_any(db, deps, [q], budget)


def satisfies(db, deps: Sequence[Dependency]) -> bool:
    """Brute-force check that every trigger of every dependency is witnessed."""
    store = as_store(db)
    return all(head_satisfied(store, d, m) for d in deps for m in iter_matches(store, d.body))


@dataclass
class AnnotatedChaseForest:
    nodes: list[Term]
    labels: dict[Term, set[str]]
    edges: list[tuple[Term, Term, Atom]]
    roots: list[Term]
    facts: Instance
    status: ChaseStatus

    def children(self, v: Term) -> list[Term]:
        return [b for a, b, _ in self.edges if a == v]

    def adjoining_violations(self) -> list[tuple[Term, str, int]]:
        """(value, predicate, position) triples with more than one adjoining fact."""
        seen: dict[tuple[Term, str, int], Atom] = {}
        bad = []
        for f in self.facts:
            if f.arity != 2:
                continue
            for i, v in enumerate(f.args):
                key = (v, f.pred, i)
                if key in seen and seen[key] != f:
                    bad.append(key)
                seen.setdefault(key, f)
        return bad


def build_chase_forest(db, uids: Sequence[Dependency],
                       budget: ChaseBudget = ChaseBudget()) -> AnnotatedChaseForest:
    """Restricted chase over a binary schema, arranged as a forest of generated values."""
    facts = list(db)
    for a in facts + [x for d in uids for x in d.body + d.head]:
        if a.arity > 2:
            raise ValueError(f"chase forest needs a binary schema, got {a}")
    res = chase(facts, uids, budget)
    nodes = []
    for f in facts:
        nodes.extend(v for v in f.args if v not in nodes)
    roots = list(nodes)
    edges = []
    for step in res.trace:
        fresh = set(step.fresh)
        for f in step.added:
            old = [v for v in f.args if v not in fresh]
            new = [v for v in f.args if v in fresh]
            if not old and new:
                roots.append(new[0])
                old, new = new[:1], new[1:]
            for v2 in new:
                for v1 in old:
                    edges.append((v1, v2, f))
        nodes.extend(step.fresh)
    labels: dict[Term, set[str]] = {v: set() for v in nodes}
    for f in res.instance:
        if f.arity == 1:
            labels.setdefault(f.args[0], set()).add(f.pred)
    forest = AnnotatedChaseForest(nodes, labels, edges, roots, res.instance, res.status)
    bad = forest.adjoining_violations()
    if bad:
        raise AssertionError(f"unique adjoining label property violated at {bad[:3]}")
    return forest
