"""Seeded random disclosure settings for differential testing."""

from __future__ import annotations

import random
from typing import Callable

from .model import (
    Atom,
    ConjunctiveQuery,
    Dependency,
    MappingSet,
    Schema,
    Setting,
    Var,
    atoms_vars,
    mapping_rule,
)

VARS = [Var(n) for n in "xyzuvw"]


def _schema(rng: random.Random, max_preds: int, max_arity: int) -> list[tuple[str, int]]:
    n = rng.randint(1, max_preds)
    return [(f"P{i}", rng.randint(1, max_arity)) for i in range(n)]


def _atom(rng, pred, arity, pool, distinct=False) -> Atom:
    if distinct:
        return Atom(pred, tuple(rng.sample(pool, arity)))
    return Atom(pred, tuple(rng.choice(pool) for _ in range(arity)))


def _mappings(rng, preds, k, atomic, proj):
    rules = []
    for i in range(k):
        if atomic:
            p, a = rng.choice(preds)
            body = [_atom(rng, p, a, VARS[:3] if not proj else VARS[:a], distinct=proj)]
        else:
            body = [_atom(rng, *rng.choice(preds), VARS[:3]) for _ in range(rng.randint(1, 2))]
        bv = atoms_vars(body)
        hv = rng.sample(bv, rng.randint(0, len(bv)))
        rules.append(mapping_rule(Atom(f"T{i}", tuple(hv)), body))
    return MappingSet(rules)


def _policy(rng, preds, max_atoms=2) -> ConjunctiveQuery:
    atoms = [_atom(rng, *rng.choice(preds), VARS[:3]) for _ in range(rng.randint(1, max_atoms))]
    return ConjunctiveQuery(atoms)


def _finish(sigma, m, p, preds) -> Setting:
    schema = Schema(tuple(preds), tuple(m.global_preds()))
    return Setting(tuple(sigma), m, p, schema)


def general(seed: int) -> Setting:
    """At most 4 predicates of arity at most 3, 4 constraints, 3 mappings."""
    rng = random.Random(seed)
    preds = _schema(rng, 4, 3)
    sigma = []
    for i in range(rng.randint(0, 4)):
        body = [_atom(rng, *rng.choice(preds), VARS[:3]) for _ in range(rng.randint(1, 2))]
        head = [_atom(rng, *rng.choice(preds), VARS[:2] + VARS[3:5]) for _ in range(rng.randint(1, 2))]
        sigma.append(Dependency(tuple(body), tuple(head), f"r{i}"))
    m = _mappings(rng, preds, rng.randint(1, 3), atomic=False, proj=False)
    return _finish(sigma, m, _policy(rng, preds), preds)


def ltgd_atommap(seed: int) -> Setting:
    rng = random.Random(seed)
    preds = _schema(rng, 4, 3)
    sigma = []
    for i in range(rng.randint(1, 4)):
        body = [_atom(rng, *rng.choice(preds), VARS[:3])]
        head = [_atom(rng, *rng.choice(preds), VARS[:2] + VARS[3:5]) for _ in range(rng.randint(1, 2))]
        sigma.append(Dependency(tuple(body), tuple(head), f"r{i}"))
    m = _mappings(rng, preds, rng.randint(1, 3), atomic=True, proj=False)
    return _finish(sigma, m, _policy(rng, preds), preds)


def uid_projmap(seed: int) -> Setting:
    rng = random.Random(seed)
    preds = _schema(rng, 4, 3)
    sigma = []
    for i in range(rng.randint(1, 4)):
        bp, ba = rng.choice(preds)
        hp, ha = rng.choice(preds)
        body = Atom(bp, tuple(VARS[:ba]))
        head_vars = list(VARS[3:3 + ha])
        if rng.random() < 0.85:
            head_vars[rng.randrange(ha)] = rng.choice(body.args)
        sigma.append(Dependency((body,), (Atom(hp, tuple(head_vars)),), f"r{i}"))
    m = _mappings(rng, preds, rng.randint(1, 3), atomic=True, proj=True)
    return _finish(sigma, m, _policy(rng, preds, 3), preds)


FAMILIES: dict[str, Callable[[int], Setting]] = {
    "general": general,
    "ltgd": ltgd_atommap,
    "uid": uid_projmap,
}
