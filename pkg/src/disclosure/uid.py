"""Polynomial-time disclosure for unary inclusion dependencies and projection mappings.

Pipeline: truncate source relations to their invisible positions, binarize,
remove forking pairs, and check each connected query component against the
tree-shaped chase of the binarized rules.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from typing import Sequence

from .engine import ChaseBudget, Status, Verdict
from .model import (
    ISCRIT,
    Atom,
    ConjunctiveQuery,
    Const,
    DepClass,
    Dependency,
    Instance,
    MapClass,
    MappingSet,
    Var,
    atoms_vars,
    classify_all,
    classify_mapping,
    unique,
)
from .vischase import _check_policy, crit_fact, disclose_via_vischase

Slot = tuple[str, int]  # (predicate, 1-based position)


def _exports(d: Dependency) -> list[tuple[Slot, Slot]]:
    """(body slot, head slot) for each occurrence pair of a frontier variable."""
    out = []
    front = set(d.frontier)
    for b in d.body:
        for i, x in enumerate(b.args, 1):
            if x not in front:
                continue
            for h in d.head:
                for j, y in enumerate(h.args, 1):
                    if y == x:
                        out.append(((b.pred, i), (h.pred, j)))
    return out


@dataclass
class PositionGraph:
    nodes: list[Slot]
    edges: list[tuple[Slot, Slot]]
    visible: set[Slot]

    @classmethod
    def build(cls, sigma: Sequence[Dependency], m: MappingSet) -> "PositionGraph":
        nodes: list[Slot] = []
        for d in list(sigma) + list(m):
            for a in d.body + d.head:
                nodes.extend((a.pred, i) for i in range(1, a.arity + 1))
        nodes = unique(nodes)
        edges = unique(e for d in list(sigma) + list(m) for e in _exports(d))
        glob = {r.head[0].pred for r in m}
        visible = {n for n in nodes if n[0] in glob}
        changed = True
        while changed:
            changed = False
            for s, t in edges:
                if t in visible and s not in visible:
                    visible.add(s)
                    changed = True
        visible = {n for n in visible if n[0] not in glob}
        return cls(nodes, edges, visible)

    def invisible_positions(self, pred: str, arity: int) -> list[int]:
        return [i for i in range(1, arity + 1) if (pred, i) not in self.visible]


def tilde(pred: str) -> str:
    return f"{pred}~"


@dataclass
class UidReduction:
    base: Instance
    sigma: list[Dependency]
    query: ConjunctiveQuery
    graph: PositionGraph
    reachable: list[str]
    parts: dict = field(default_factory=dict)


def _check_classes(sigma, m):
    if DepClass.UID not in classify_all(sigma):
        raise ValueError("source constraints must all be UIDs")
    if MapClass.PROJ not in classify_mapping(m):
        raise ValueError("mappings must all be projections")


def reduce_uid(sigma: Sequence[Dependency], m: MappingSet, p: ConjunctiveQuery) -> UidReduction:
    """Entailment problem over truncated relations equivalent to disclosure of ``p``."""
    sigma = list(sigma)
    _check_classes(sigma, m)
    _check_policy(p, m)
    g = PositionGraph.build(sigma, m)
    glob = {r.head[0].pred for r in m}
    arity: dict[str, int] = {}
    for d in sigma + list(m):
        for a in d.body + d.head:
            arity[a.pred] = a.arity
    for a in p.atoms:
        arity.setdefault(a.pred, a.arity)

    def trunc(a: Atom) -> Atom:
        if a.pred == ISCRIT:
            return a
        return Atom(tilde(a.pred), tuple(a.args[i - 1] for i in g.invisible_positions(a.pred, a.arity)))

    reachable = unique(a.pred for r in m for a in r.body)
    changed = True
    while changed:
        changed = False
        for d in sigma:
            if d.body[0].pred in reachable and d.head[0].pred not in reachable:
                reachable.append(d.head[0].pred)
                changed = True
    w = Var("w")
    reach_rules = []
    for P in reachable:
        xs = tuple(Var(f"x{i}") for i in g.invisible_positions(P, arity[P]))
        reach_rules.append(Dependency((Atom(ISCRIT, (w,)),), (Atom(tilde(P), xs),), f"reach:{P}"))
    ones, crits = [], []
    for d in sigma:
        b, h = d.body[0], d.head[0]
        if b.pred in glob or h.pred in glob:
            continue
        for (bs, hs) in _exports(d):
            if bs in g.visible:
                if hs not in g.visible and b.pred in reachable:
                    x = b.args[bs[1] - 1]
                    crits.append(Dependency((Atom(ISCRIT, (x,)),), (trunc(h),), f"crit:{d.label}"))
            else:
                ones.append(Dependency((trunc(b),), (trunc(h),), f"inv:{d.label}"))
    visible_vars = set()
    invisible_vars = set()
    for a in p.atoms:
        if a.pred == ISCRIT:
            continue
        for i, t in enumerate(a.args, 1):
            (visible_vars if (a.pred, i) in g.visible else invisible_vars).add(t)
    atoms = []
    for a in p.atoms:
        t = trunc(a)
        if t.pred == ISCRIT and t.args[0] not in invisible_vars:
            continue
        atoms.append(t)
    atoms.extend(Atom(ISCRIT, (v,)) for v in atoms_vars(p.atoms) if v in visible_vars and v in invisible_vars)
    q = ConjunctiveQuery(unique(atoms))
    sig = reach_rules + ones + crits
    return UidReduction(Instance([crit_fact()]), sig, q, g, reachable,
                        {"reach": reach_rules, "inv": ones, "crit": crits})


# Binarization: R(x1..xn) is represented by a tuple id t with R.i(t, xi) and R.E(t).

def bpred(pred: str, i: int | str) -> str:
    return f"{pred}.{i}"


@dataclass
class Binarized:
    base: Instance
    sigma: list[Dependency]
    query: ConjunctiveQuery


def binarize(sigma: Sequence[Dependency], base: Sequence[Atom], q: ConjunctiveQuery) -> Binarized:
    arity: dict[str, int] = {}
    for a in [x for d in sigma for x in d.body + d.head] + list(base) + list(q.atoms):
        if arity.setdefault(a.pred, a.arity) != a.arity:
            raise ValueError(f"inconsistent arity for {a.pred}")
    t, t2, x = Var("t"), Var("t2"), Var("x")
    out: list[Dependency] = []
    for d in sigma:
        if len(d.body) != 1 or len(d.head) != 1:
            raise ValueError(f"binarize needs single-atom rules: {d}")
        ex = _exports(d)
        if not ex:
            out.append(Dependency((Atom(bpred(d.body[0].pred, "E"), (t,)),),
                                  (Atom(bpred(d.head[0].pred, "E"), (t2,)),), f"{d.label}/E"))
        for (bp, i), (hp, j) in ex:
            out.append(Dependency((Atom(bpred(bp, i), (t, x)),), (Atom(bpred(hp, j), (t2, x)),),
                                  f"{d.label}/{i}>{j}"))
    for pred, n in arity.items():
        for i in range(1, n + 1):
            out.append(Dependency((Atom(bpred(pred, i), (t, x)),), (Atom(bpred(pred, "E"), (t,)),),
                                  f"bridge:{pred}.{i}>E"))
            out.append(Dependency((Atom(bpred(pred, "E"), (t,)),), (Atom(bpred(pred, i), (t, x)),),
                                  f"bridge:{pred}.E>{i}"))
    facts = []
    for k, f in enumerate(base, 1):
        tid = Const(f"__t{k}")
        facts.extend(Atom(bpred(f.pred, i), (tid, v)) for i, v in enumerate(f.args, 1))
        facts.append(Atom(bpred(f.pred, "E"), (tid,)))
    atoms = []
    taken = {v.name for v in q.vars()}
    counter = itertools.count(1)
    for a in q.atoms:
        name = f"t{next(counter)}"
        while name in taken:
            name = f"t{next(counter)}"
        taken.add(name)
        tv = Var(name)
        atoms.extend(Atom(bpred(a.pred, i), (tv, v)) for i, v in enumerate(a.args, 1))
        atoms.append(Atom(bpred(a.pred, "E"), (tv,)))
    return Binarized(Instance(facts), out, ConjunctiveQuery(atoms))


def eliminate_forking(q: ConjunctiveQuery) -> ConjunctiveQuery:
    """Unify forking pairs (same predicate, shared variable at the same position) to a fixpoint."""
    atoms = unique(q.atoms)
    while True:
        pair = _find_fork(atoms)
        if pair is None:
            return ConjunctiveQuery(atoms, q.free)
        keep, drop = pair
        atoms = unique(a.subst({drop: keep}) for a in atoms)


def _find_fork(atoms):
    for i, a in enumerate(atoms):
        if a.arity != 2:
            continue
        for b in atoms[i + 1:]:
            if b.pred != a.pred or b == a:
                continue
            for k in (0, 1):
                if a.args[k] == b.args[k] and a.args[1 - k] != b.args[1 - k]:
                    return a.args[1 - k], b.args[1 - k]
    return None


def components(q: ConjunctiveQuery) -> list[ConjunctiveQuery]:
    """Connected components by shared variables; variable-free atoms stand alone."""
    parent: dict = {}

    def find(v):
        while parent.setdefault(v, v) != v:
            v = parent[v]
        return v

    for a in q.atoms:
        vs = a.vars()
        for v in vs[1:]:
            parent[find(v)] = find(vs[0])
    groups: dict = {}
    for a in q.atoms:
        key = find(a.vars()[0]) if a.vars() else ("atom", a)
        groups.setdefault(key, []).append(a)
    return [ConjunctiveQuery(g) for g in groups.values()]


@dataclass
class CqGraph:
    nodes: list[Var]
    labels: dict[Var, set[str]]
    edges: dict[frozenset, list[Atom]]

    @classmethod
    def of(cls, q: ConjunctiveQuery) -> "CqGraph":
        nodes = q.vars()
        labels = {v: set() for v in nodes}
        edges: dict[frozenset, list[Atom]] = {}
        for a in q.atoms:
            if a.arity == 1:
                labels[a.args[0]].add(a.pred)
            elif a.arity == 2:
                edges.setdefault(frozenset(a.args), []).append(a)
            else:
                raise ValueError(f"CQ-graph needs a binary schema: {a}")
        return cls(nodes, labels, edges)

    def is_acyclic(self) -> bool:
        parent = {v: v for v in self.nodes}

        def find(v):
            while parent[v] != v:
                v = parent[v]
            return v

        for e, atoms in self.edges.items():
            if len(e) == 1 or len(atoms) > 1:
                return False
            a, b = tuple(e)
            ra, rb = find(a), find(b)
            if ra == rb:
                return False
            parent[ra] = rb
        return True

    def neighbors(self, v: Var) -> list[tuple[Var, Atom]]:
        out = []
        for e, atoms in self.edges.items():
            if v in e and len(e) == 2:
                (u,) = e - {v}
                out.extend((u, a) for a in atoms)
        return out


@dataclass(frozen=True)
class TreeArrangement:
    root: Var
    parent: dict

    @classmethod
    def all(cls, g: CqGraph) -> list["TreeArrangement"]:
        out = []
        for r in g.nodes:
            par = {}
            stack = [r]
            seen = {r}
            while stack:
                v = stack.pop()
                for u, _ in g.neighbors(v):
                    if u not in seen:
                        seen.add(u)
                        par[u] = v
                        stack.append(u)
            out.append(cls(r, par))
        return out


# The chase of binary UIDs is a forest whose subtrees are determined by a
# node's "kind": the slots it occupied when created and the slot that links it
# to its parent.  Kinds are finite, so the forest is described by a finite
# graph and query embeddings are searched top-down on it.

@dataclass(frozen=True)
class GenKind:
    init: frozenset
    up: frozenset


@dataclass(frozen=True)
class BaseNode:
    value: object


def _flip(s: Slot) -> Slot:
    return (s[0], 3 - s[1])


class ForestModel:
    """Finite description of the restricted chase of binary UIDs over a tree-shaped base."""

    def __init__(self, uids: Sequence[Dependency], base: Sequence[Atom]):
        self.uids = list(uids)
        for d in self.uids:
            if len(d.body) != 1 or len(d.head) != 1 or len(d.frontier) > 1:
                raise ValueError(f"not a unary inclusion dependency: {d}")
            for a in d.body + d.head:
                if a.arity > 2:
                    raise ValueError(f"binary schema required: {a}")
        self.base = list(dict.fromkeys(base))
        self.arity = {a.pred: a.arity for d in self.uids for a in d.body + d.head}
        for f in self.base:
            if f.arity > 2 or f.arity == 0:
                raise ValueError(f"base facts must be unary or binary: {f}")
            self.arity[f.pred] = f.arity
        self.succ: dict[Slot, list[Slot]] = {}
        self.zero: list[Dependency] = []
        for d in self.uids:
            ex = _exports(d)
            if not ex:
                self.zero.append(d)
            for s, t in ex:
                self.succ.setdefault(s, []).append(t)
        self._base_slots: dict = {}
        self._base_nbr: dict = {}
        for f in self.base:
            for i, v in enumerate(f.args, 1):
                self._base_slots.setdefault(v, set()).add((f.pred, i))
                if f.arity == 2:
                    key = (v, (f.pred, i))
                    other = f.args[2 - i]
                    if other == v or self._base_nbr.setdefault(key, other) != other:
                        raise ValueError("base must satisfy unique adjoining labels without self-loops")
        self._check_base_forest()
        self.nodes = self._reachable_nodes()

    def _check_base_forest(self):
        parent = {}

        def find(v):
            while parent.setdefault(v, v) != v:
                v = parent[v]
            return v

        pairs = set()
        for f in self.base:
            if f.arity != 2:
                continue
            pair = frozenset(f.args)
            if pair in pairs:
                raise ValueError("base has two facts on one pair of values")
            pairs.add(pair)
            a, b = find(f.args[0]), find(f.args[1])
            if a == b:
                raise ValueError("base facts must form a forest")
            parent[a] = b

    @functools.lru_cache(maxsize=None)
    def closure(self, init: frozenset) -> frozenset:
        out = set(init)
        stack = list(init)
        while stack:
            s = stack.pop()
            for t in self.succ.get(s, ()):
                if t not in out:
                    out.add(t)
                    stack.append(t)
        return frozenset(out)

    def init_of(self, node) -> frozenset:
        if isinstance(node, BaseNode):
            return frozenset(self._base_slots[node.value])
        return node.init

    def slots(self, node) -> frozenset:
        return self.closure(self.init_of(node))

    def unary(self, node) -> set[str]:
        return {p for p, i in self.slots(node) if self.arity.get(p) == 1}

    def child(self, node, s: Slot):
        """The neighbor reached from ``node`` through binary slot ``s``, or None."""
        if isinstance(node, BaseNode):
            nb = self._base_nbr.get((node.value, s))
            if nb is not None:
                return BaseNode(nb)
            if s in self.slots(node):
                return GenKind(frozenset([_flip(s)]), frozenset([_flip(s)]))
            return None
        if s in node.up or s not in self.slots(node):
            return None
        return GenKind(frozenset([_flip(s)]), frozenset([_flip(s)]))

    def _children(self, node):
        for s in sorted(self.slots(node)):
            if self.arity.get(s[0]) == 2:
                c = self.child(node, s)
                if c is not None:
                    yield c

    def _reachable_nodes(self) -> list:
        """Base nodes, their descendants, and roots created by frontier-0 rules."""
        seen = dict.fromkeys(BaseNode(v) for v in self._base_slots)
        todo = list(seen)
        preds: set[str] = set()
        fired: set[int] = set()
        while todo:
            while todo:
                node = todo.pop()
                preds |= {p for p, _ in self.slots(node)}
                for c in self._children(node):
                    if c not in seen:
                        seen[c] = None
                        todo.append(c)
            for k, d in enumerate(self.zero):
                if k not in fired and d.body[0].pred in preds:
                    fired.add(k)
                    root = GenKind(frozenset([(d.head[0].pred, 1)]), frozenset())
                    if root not in seen:
                        seen[root] = None
                        todo.append(root)
        return list(seen)

    def present_preds(self) -> set[str]:
        return {p for n in self.nodes for p, _ in self.slots(n)}

    def entails(self, q: ConjunctiveQuery, anchors: dict | None = None) -> bool:
        """Does the chase of the base satisfy ``q``?  ``q`` must be non-forking."""
        anchors = anchors or {}
        return all(self._entails_connected(c, anchors) for c in components(q))

    def _entails_connected(self, q: ConjunctiveQuery, anchors: dict) -> bool:
        if not q.atoms:
            return True
        if not q.vars():
            return all(self._holds_ground(a) for a in q.atoms)
        g = CqGraph.of(q)
        if not g.is_acyclic():
            return False
        anchored = [v for v in g.nodes if v in anchors]
        memo: dict = {}

        def fits(x, node) -> bool:
            if x in anchors and node != BaseNode(anchors[x]):
                return False
            return g.labels[x] <= self.unary(node)

        def down(x, frm, node) -> bool:
            key = (x, frm, node)
            if key in memo:
                return memo[key]
            memo[key] = False
            ok = fits(x, node)
            if ok:
                for y, a in g.neighbors(x):
                    if y == frm:
                        continue
                    pos = 1 if a.args[0] == x else 2
                    c = self.child(node, (a.pred, pos))
                    if c is None or not down(y, x, c):
                        ok = False
                        break
            memo[key] = ok
            return ok

        if anchored:
            return down(anchored[0], None, BaseNode(anchors[anchored[0]]))
        return any(down(r, None, n) for r in g.nodes for n in self.nodes)

    def _holds_ground(self, a: Atom) -> bool:
        if a.arity == 1:
            return a.pred in self.unary(BaseNode(a.args[0])) if a.args[0] in self._base_slots else False
        return a in self.base


def decide_uid_entailment(uids: Sequence[Dependency], q: ConjunctiveQuery,
                          base: Sequence[Atom] = ()) -> bool:
    """Entailment of a connected non-forking query by binary UIDs from ``base``."""
    return ForestModel(uids, base).entails(q)


def uid_atomic_entails(uids: Sequence[Dependency], premise, goal: Sequence[Atom]) -> bool:
    """Does the premise atom (or base instance) entail the existential closure of ``goal``?

    Variables of the goal that occur in the premise stay bound to it.
    """
    if isinstance(premise, Atom):
        frz = {v: Const(f"__p_{v.name}") for v in premise.vars()}
        base = [premise.subst(frz)]
        anchors = {v: c for v, c in frz.items()}
    else:
        base, anchors = list(premise), {}
    q = eliminate_forking(ConjunctiveQuery(tuple(goal)))
    return ForestModel(uids, base).entails(q, anchors)


def disclose_uid_ptime(sigma: Sequence[Dependency], m: MappingSet, p: ConjunctiveQuery,
                       budget_for_cross_check: ChaseBudget | None = None) -> Verdict:
    red = reduce_uid(sigma, m, p)
    b = binarize(red.sigma, list(red.base), red.query)
    model = ForestModel(b.sigma, list(b.base))
    q = eliminate_forking(b.query)
    comps = components(q)
    failing = None
    for c in comps:
        if not model.entails(c):
            failing = c
            break
    details = {"components": len(comps), "reduced_query": str(red.query),
               "visible": sorted(red.graph.visible), "kinds": len(model.nodes)}
    if failing is not None:
        return Verdict(Status.NOT_DISCLOSED, certificate=failing, details=details,
                       reason="component not entailed")
    witness = None
    if budget_for_cross_check is not None:
        v = disclose_via_vischase(sigma, m, p, budget_for_cross_check)
        details["cross_check"] = v.status.value
        witness = v.witness
    return Verdict(Status.DISCLOSED, witness=witness, query=p, details=details)
