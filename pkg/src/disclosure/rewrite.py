"""Reductions from disclosure to plain query entailment over IsCrit-annotated rules."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .engine import ChaseBudget, Status, Verdict, entails_any, first_match, iter_matches
from .model import (
    ISCRIT,
    Atom,
    AuxNames,
    ConjunctiveQuery,
    DepClass,
    Dependency,
    Instance,
    MapClass,
    MappingSet,
    Var,
    atoms_vars,
    classify_all,
    classify_mapping,
    mapping_rule,
    normalize_heads,
    var_occurrences,
)
from .vischase import _check_policy, crit_fact, hide


def iscrit(v) -> Atom:
    return Atom(ISCRIT, (v,))


def _fresh_name(base: str, taken: set[str]) -> str:
    k = 2
    while f"{base}_{k}" in taken:
        k += 1
    name = f"{base}_{k}"
    taken.add(name)
    return name


def annotate(atoms: Sequence[Atom], annotation: Sequence[Var]) -> tuple[Atom, ...]:
    """Split later occurrences of each annotated variable and mark all copies critical."""
    taken = {v.name for v in atoms_vars(atoms)}
    ann = set(annotation)
    seen: dict[Var, int] = {}
    copies: dict[Var, list[Var]] = {v: [] for v in annotation}
    out = []
    for a in atoms:
        args = []
        for t in a.args:
            if isinstance(t, Var) and t in ann:
                seen[t] = seen.get(t, 0) + 1
                if seen[t] > 1:
                    nv = Var(_fresh_name(t.name, taken))
                    copies[t].append(nv)
                    t = nv
            args.append(t)
        out.append(Atom(a.pred, tuple(args)))
    for v in annotation:
        out.append(iscrit(v))
        out.extend(iscrit(c) for c in copies[v])
    return tuple(out)


def annotations(vs: Sequence[Var]) -> list[tuple[Var, ...]]:
    """All subsets of ``vs``, by increasing size then variable order."""
    return [c for k in range(len(vs) + 1) for c in itertools.combinations(vs, k)]


def crit_rewrite_query(q: ConjunctiveQuery, only_repeated: bool = False) -> list[ConjunctiveQuery]:
    """One rewriting per annotation; with ``only_repeated`` the family is pruned to
    annotations over repeated variables (the others are implied by these)."""
    if not q.is_boolean:
        raise ValueError("crit_rewrite_query needs a Boolean query")
    vs = q.vars()
    if only_repeated:
        occ = var_occurrences(q.atoms)
        vs = [v for v in vs if occ[v] > 1]
    return [ConjunctiveQuery(annotate(q.atoms, a)) for a in annotations(vs)]


def crit_rewrite_dep(d: Dependency) -> list[Dependency]:
    """Annotation family of one rule, restricted to repeated body variables.

    Annotating a variable that occurs once only adds IsCrit conjuncts to the
    body, so that rule is implied by the unannotated one.
    """
    occ = var_occurrences(d.body)
    reps = [v for v in atoms_vars(d.body) if occ[v] > 1]
    out = []
    for a in annotations(reps):
        label = d.label if not a else f"{d.label}@{'+'.join(v.name for v in a)}"
        out.append(Dependency(annotate(d.body, a), d.head, label))
    return out


def crit_rewrite_deps(deps: Sequence[Dependency]) -> list[Dependency]:
    return [r for d in deps for r in crit_rewrite_dep(d)]


def iscrit_rules(m: MappingSet) -> list[Dependency]:
    out = []
    for r in m:
        h = r.head[0]
        xs = tuple(Var(f"x{i}") for i in range(1, h.arity + 1))
        for i, x in enumerate(xs, 1):
            out.append(Dependency((Atom(h.pred, xs),), (iscrit(x),), f"iscrit:{h.pred}/{i}"))
    return out


def _pairs(args) -> list[tuple[int, int]]:
    n = len(args)
    return [(e, f) for e in range(1, n + 1) for f in range(e + 1, n + 1) if args[e - 1] == args[f - 1]]


def crit_rewrite_ptime(d: Dependency, rule_id: str | int = 0) -> list[Dependency]:
    """Linear-size rewriting of a linear TGD through a chain of auxiliary predicates.

    Each pair of equal body positions (e, f) is discharged either by the
    values really being equal or by both being critical.
    """
    if len(d.body) != 1 or len(d.head) != 1:
        raise ValueError(f"crit_rewrite_ptime needs a single-atom body and head: {d}")
    b = d.body[0]
    pairs = _pairs(b.args)
    if not pairs:
        return [d]
    n = b.arity
    w = tuple(Var(f"w{i}") for i in range(1, n + 1))

    def eq(e, f):
        return tuple(w[e - 1] if i == f - 1 else w[i] for i in range(n))

    def aux(e, f):
        return f"__B_{e}_{f}_{rule_id}"

    out = []
    prev = b.pred
    for k, (e, f) in enumerate(pairs):
        tag = f"{d.label}#{e},{f}"
        we = eq(e, f)
        out.append(Dependency((Atom(prev, we),), (Atom(aux(e, f), we),), tag + "=eq"))
        out.append(Dependency((Atom(prev, w), iscrit(w[e - 1]), iscrit(w[f - 1])),
                              (Atom(aux(e, f), w),), tag + "=crit"))
        prev = aux(e, f)
    taken = {v.name for v in atoms_vars(d.body + d.head)}
    seen = set()
    xs = []
    for t in b.args:
        if t in seen:
            t = Var(_fresh_name(t.name, taken))
        seen.add(t)
        xs.append(t)
    out.append(Dependency((Atom(prev, tuple(xs)),), d.head, f"{d.label}#final"))
    return out


def annotated_probe(q: ConjunctiveQuery):
    """Check all annotated rewritings of ``q`` with a single search.

    Some rewriting matches iff every variable's occurrences either map to one
    value or all map to IsCrit values, so occurrences are bound separately and
    branches violating that are pruned.  Returns ``probe(store)`` giving the
    matching rewriting and its homomorphism, or None.
    """
    owner: dict[Var, Var] = {}
    occs: dict[Var, list[Var]] = {}
    atoms = []
    for a in q.atoms:
        args = []
        for t in a.args:
            o = Var(f"{t.name}#{len(occs.get(t, ()))}")
            owner[o] = t
            occs.setdefault(t, []).append(o)
            args.append(o)
        atoms.append(Atom(a.pred, tuple(args)))

    def probe(store):
        def crit(v):
            return bool(store.lookup(ISCRIT, 0, v))

        def guard(b, o):
            vals = [b[x] for x in occs[owner[o]] if x in b]
            return all(v == vals[0] for v in vals) or all(crit(v) for v in vals)

        for h in iter_matches(store, atoms, guard=guard):
            ann = [v for v in q.vars() if len({h[o] for o in occs[v]}) > 1]
            qa = ConjunctiveQuery(annotate(q.atoms, ann))
            w = first_match(store, qa.atoms)
            if w is not None:
                return qa, w
        return None

    return probe


class Mode(str, Enum):
    FULL = "FULL"
    PTIME = "PTIME"


@dataclass
class RewriteBundle:
    """Constraints and base of the entailment problem; the annotated query family
    is produced on demand since it is exponential in the policy."""

    policy: ConjunctiveQuery
    constraints: list[Dependency]
    base: Instance
    provenance: dict = field(default_factory=dict)

    def queries(self, only_repeated: bool = True) -> list[ConjunctiveQuery]:
        return crit_rewrite_query(self.policy, only_repeated)


def mapping_deps(m: MappingSet) -> list[Dependency]:
    return [r.with_label(r.label or f"m:{r.head[0].pred}") for r in m]


def build_bundle(sigma: Sequence[Dependency], m: MappingSet, p: ConjunctiveQuery,
                 mode: Mode = Mode.FULL) -> RewriteBundle:
    mode = Mode(mode)
    sig = normalize_heads(sigma)
    maps = mapping_deps(m)
    if mode is Mode.PTIME:
        if DepClass.LTGD not in classify_all(sig):
            raise ValueError("PTIME rewriting needs linear source constraints")
        if MapClass.ATOM not in classify_mapping(m):
            raise ValueError("PTIME rewriting needs atomic mappings")
        rs = [r for i, d in enumerate(sig) for r in crit_rewrite_ptime(d, f"s{i}")]
        ms = [r for i, d in enumerate(maps) for r in crit_rewrite_ptime(d, f"m{i}")]
    else:
        rs = crit_rewrite_deps(sig)
        ms = crit_rewrite_deps(maps)
    ic = iscrit_rules(m)
    prov = {"sigma": len(rs), "mappings": len(ms), "iscrit": len(ic)}
    base = Instance(list(hide(m)) + [crit_fact()])
    return RewriteBundle(p, rs + ms + ic, base, prov)


def disclose_via_entailment(sigma: Sequence[Dependency], m: MappingSet, p: ConjunctiveQuery,
                            budget: ChaseBudget = ChaseBudget(), mode: Mode = Mode.FULL) -> Verdict:
    _check_policy(p, m)
    bundle = build_bundle(sigma, m, p, mode)
    v = entails_any(bundle.base, bundle.constraints, [], budget, probe=annotated_probe(p))
    status = {Status.ENTAILED: Status.DISCLOSED, Status.NOT_ENTAILED: Status.NOT_DISCLOSED}.get(
        v.status, Status.UNKNOWN)
    v.details["bundle"] = dict(bundle.provenance)
    return Verdict(status, witness=v.witness, query=v.query, certificate=v.certificate,
                   rounds=v.rounds, facts=v.facts, reason=v.reason, details=v.details)


def reduce_to_projmap(sigma: Sequence[Dependency], m: MappingSet) -> tuple[list[Dependency], MappingSet]:
    """Move each mapping body into the constraints behind a fresh relation R_phi."""
    sig = list(sigma)
    names = AuxNames("__raux")
    rules = []
    for r in m:
        h = r.head[0]
        hv = set(h.vars())
        ys = [v for v in atoms_vars(r.body) if v not in hv]
        rp = Atom(f"__R_{h.pred}", tuple(h.args) + tuple(ys))
        sig.append(Dependency(r.body, (rp,), f"proj:{h.pred}/in"))
        sig.extend(normalize_heads([Dependency((rp,), r.body, f"proj:{h.pred}/out")], names))
        rules.append(mapping_rule(Atom(f"__T_{h.pred}", h.args), [rp]))
    return sig, MappingSet(rules)


def boolify_policy(p: ConjunctiveQuery) -> ConjunctiveQuery:
    if p.is_boolean:
        return p
    return ConjunctiveQuery(p.atoms + tuple(iscrit(x) for x in p.free))


def sceq_to_fgtgd(m: MappingSet) -> tuple[list[Dependency], Instance]:
    """Rules phi(x, ys) -> IsCrit(x) standing in for the merges, plus the Hide_M base."""
    deps = []
    for r in m:
        xs = r.head[0].vars()
        if len(xs) > 1:
            raise ValueError(f"frontier larger than one is not frontier-guarded: {r}")
        if xs:
            deps.append(Dependency(r.body, (iscrit(xs[0]),), f"sceq:{r.head[0].pred}"))
    return deps, Instance(list(hide(m)) + [crit_fact()])


def disclose_via_sceq(sigma: Sequence[Dependency], m: MappingSet, p: ConjunctiveQuery,
                      budget: ChaseBudget = ChaseBudget()) -> Verdict:
    """Entailment check with the merges replaced by :func:`sceq_to_fgtgd` rules."""
    _check_policy(p, m)
    deps, base = sceq_to_fgtgd(m)
    cons = crit_rewrite_deps(normalize_heads(sigma)) + crit_rewrite_deps(deps)
    v = entails_any(base, cons, [], budget, probe=annotated_probe(p))
    status = {Status.ENTAILED: Status.DISCLOSED, Status.NOT_ENTAILED: Status.NOT_DISCLOSED}.get(
        v.status, Status.UNKNOWN)
    return Verdict(status, witness=v.witness, query=v.query, certificate=v.certificate,
                   rounds=v.rounds, facts=v.facts, reason=v.reason)
