"""Visible chase: chase rounds interleaved with merging mapping-image values into c_crit.

A policy is disclosed exactly when it holds in the visible chase of Hide_M.
The module also carries :func:`oracle_disclose`, a deliberately naive second
implementation of the same semantics used to cross-check everything else.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .engine import (
    ChaseBudget,
    ChaseStatus,
    Chaser,
    FactStore,
    Status,
    Verdict,
    first_match,
    iter_matches,
)
from .model import (
    CRIT,
    ISCRIT,
    Atom,
    ConjunctiveQuery,
    Const,
    Dependency,
    Instance,
    MappingSet,
    NullFactory,
    Var,
    atoms_vars,
    normalize_heads,
)


def critical_instance(preds: Iterable[tuple[str, int]]) -> Instance:
    return Instance(Atom(name, (CRIT,) * arity) for name, arity in preds)


def crit_fact() -> Atom:
    return Atom(ISCRIT, (CRIT,))


def hide(m: MappingSet) -> Instance:
    """Source witnesses for the critical image of ``m``.

    Frontier variables become c_crit; each existential variable of each rule
    becomes its own constant ``c_<var>`` (suffixed when the name is taken).
    """
    used: set[str] = set()
    facts = []
    for r in m:
        head_vars = set(r.head[0].vars())
        sub = {}
        for v in atoms_vars(r.body):
            if v in head_vars:
                sub[v] = CRIT
                continue
            name, k = f"c_{v.name}", 2
            while name in used:
                name, k = f"c_{v.name}_{k}", k + 1
            used.add(name)
            sub[v] = Const(name)
        facts.extend(a.subst(sub) for a in r.body)
    return Instance(facts)


@dataclass(frozen=True)
class SceqRule:
    """phi(xs) -> x = c_crit for every target x."""

    body: tuple[Atom, ...]
    targets: tuple[Var, ...]


def sceq_rules(m: MappingSet) -> list[SceqRule]:
    return [SceqRule(r.body, tuple(r.head[0].vars())) for r in m if r.head[0].vars()]


def merge_substitution(store: FactStore, rules: Sequence[SceqRule]) -> dict:
    """Values that some SCEQ trigger forces to c_crit, in discovery order."""
    sub = {}
    for r in rules:
        for h in iter_matches(store, r.body):
            for x in r.targets:
                v = h[x]
                if v != CRIT:
                    sub.setdefault(v, CRIT)
    return sub


def merge_fixpoint(store: FactStore, rules: Sequence[SceqRule]) -> tuple[FactStore, dict]:
    merged: dict = {}
    while True:
        sub = merge_substitution(store, rules)
        if not sub:
            return store, merged
        merged.update(sub)
        store = store.substituted(sub)


@dataclass
class VisibleChaseState:
    instance: Instance
    merged: dict = field(default_factory=dict)
    round: int = 0


def _check_policy(p: ConjunctiveQuery, m: MappingSet):
    if not p.is_boolean:
        raise ValueError("policy must be Boolean; boolify it first")
    glob = {n for n, _ in m.global_preds()}
    bad = sorted(p.preds() & glob)
    if bad:
        raise ValueError(f"policy mentions global predicates: {bad}")


class VisibleChase:
    """Stateful runner: round 0 is the merge fixpoint on Hide_M."""

    def __init__(self, sigma: Sequence[Dependency], m: MappingSet, max_facts: int = 100_000,
                 keep_trace: bool = True):
        self.sceq = sceq_rules(m)
        base = list(hide(m)) + [crit_fact()]
        self.chaser = Chaser(base, normalize_heads(sigma), max_facts, keep_trace=keep_trace)
        self.merged: dict = {}
        self.merge()

    @property
    def store(self) -> FactStore:
        return self.chaser.store

    @property
    def rounds(self) -> int:
        return self.chaser.rounds

    def merge(self) -> bool:
        store, merged = merge_fixpoint(self.chaser.store, self.sceq)
        self.chaser.store = store
        self.merged.update(merged)
        return bool(merged)

    def step(self) -> bool:
        """One chase round plus merge fixpoint; True if anything changed."""
        added = self.chaser.round()
        if self.chaser.overflow:
            return True
        merged = self.merge()
        return bool(added) or merged

    def state(self) -> VisibleChaseState:
        return VisibleChaseState(self.store.to_instance(), dict(self.merged), self.rounds)

    def live(self) -> bool:
        return self.chaser.has_live_trigger()


def visible_chase(sigma: Sequence[Dependency], m: MappingSet,
                  budget: ChaseBudget = ChaseBudget()) -> tuple[VisibleChaseState, ChaseStatus]:
    vc = VisibleChase(sigma, m, budget.max_facts)
    status = _run(vc, budget, None)[0]
    return vc.state(), status


def _run(vc: VisibleChase, budget: ChaseBudget, p: ConjunctiveQuery | None):
    def check():
        return None if p is None else first_match(vc.store, p.atoms)

    h = check()
    if h is not None:
        return None, h
    while vc.rounds < budget.max_rounds:
        changed = vc.step()
        if vc.chaser.overflow:
            return ChaseStatus.BUDGET_EXHAUSTED, None
        if not changed:
            return ChaseStatus.SATURATED, None
        h = check()
        if h is not None:
            return None, h
    status = ChaseStatus.BUDGET_EXHAUSTED if vc.live() else ChaseStatus.SATURATED
    return status, None


def disclose_via_vischase(sigma: Sequence[Dependency], m: MappingSet, p: ConjunctiveQuery,
                          budget: ChaseBudget = ChaseBudget()) -> Verdict:
    _check_policy(p, m)
    vc = VisibleChase(sigma, m, budget.max_facts)
    status, h = _run(vc, budget, p)
    n = len(vc.store)
    if h is not None:
        return Verdict(Status.DISCLOSED, witness=h, query=p, certificate=vc.state(),
                       rounds=vc.rounds, facts=n, details={"trace": vc.chaser.trace})
    if status is ChaseStatus.SATURATED:
        return Verdict(Status.NOT_DISCLOSED, certificate=vc.store.to_instance(),
                       rounds=vc.rounds, facts=n)
    reason = "max_facts reached" if vc.chaser.overflow else f"no saturation within {budget.max_rounds} rounds"
    return Verdict(Status.UNKNOWN, rounds=vc.rounds, facts=n, reason=reason)


# Oracle: naive semi-oblivious chase plus merges.  No indexes, no restricted
# firing, policy checked only at the end of a round.  A round that leaves a
# merge-closed model of sigma also ends the run, which keeps the oracle from
# spinning on settings whose restricted chase terminates.

def _naive_matches(facts: list, atoms: Sequence[Atom], h: dict):
    if not atoms:
        yield h
        return
    first, rest = atoms[0], atoms[1:]
    for f in facts:
        if f.pred != first.pred or len(f.args) != len(first.args):
            continue
        h2 = dict(h)
        ok = True
        for t, v in zip(first.args, f.args):
            if isinstance(t, Var):
                if h2.setdefault(t, v) != v:
                    ok = False
                    break
            elif t != v:
                ok = False
                break
        if ok:
            yield from _naive_matches(facts, rest, h2)


def _dedup(facts: Iterable[Atom]) -> list:
    return list(dict.fromkeys(facts))


def _naive_model(facts: list, deps: Sequence[Dependency]) -> bool:
    for d in deps:
        front = d.frontier
        for h in _naive_matches(facts, d.body, {}):
            if next(_naive_matches(facts, d.head, {v: h[v] for v in front}), None) is None:
                return False
    return True


def oracle_disclose(sigma: Sequence[Dependency], m: MappingSet, p: ConjunctiveQuery,
                    budget: ChaseBudget = ChaseBudget()) -> Verdict:
    _check_policy(p, m)
    deps = list(sigma)
    nulls = NullFactory()
    targets = [(r.body, r.head[0].vars()) for r in m]
    facts = _dedup(list(hide(m)) + [crit_fact()])
    fired: set = set()

    def merge(facts):
        changed = False
        while True:
            sub = {}
            for body, xs in targets:
                for h in _naive_matches(facts, body, {}):
                    for x in xs:
                        if h[x] != CRIT:
                            sub[h[x]] = CRIT
            if not sub:
                return facts, changed
            changed = True
            facts = _dedup(f.subst(sub) for f in facts)
            nonlocal fired
            fired = {(i, tuple(sub.get(v, v) for v in key)) for i, key in fired}

    def holds(facts):
        return next(_naive_matches(facts, p.atoms, {}), None)

    facts, _ = merge(facts)
    rounds = 0
    while True:
        h = holds(facts)
        if h is not None:
            return Verdict(Status.DISCLOSED, witness=h, query=p, certificate=Instance(facts),
                           rounds=rounds, facts=len(facts))
        if _naive_model(facts, deps):
            return Verdict(Status.NOT_DISCLOSED, certificate=Instance(facts), rounds=rounds,
                           facts=len(facts))
        if rounds >= budget.max_rounds or len(facts) >= budget.max_facts:
            return Verdict(Status.UNKNOWN, rounds=rounds, facts=len(facts),
                           reason="oracle budget exhausted")
        rounds += 1
        snapshot = list(facts)
        new = []
        for i, d in enumerate(deps):
            front = d.frontier
            for h in _naive_matches(snapshot, d.body, {}):
                key = (i, tuple(h[v] for v in front))
                if key in fired:
                    continue
                fired.add(key)
                ext = {v: h[v] for v in front}
                for y in d.existentials:
                    ext[y] = nulls.fresh()
                new.extend(a.subst(ext) for a in d.head)
        facts = _dedup(facts + new)
        facts, _ = merge(facts)
