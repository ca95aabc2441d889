"""Random binary UID sets over a one-fact base, with small connected queries."""

import random

from disclosure.model import Atom, ConjunctiveQuery, Const, Dependency, atom

PREDS = ["R", "S", "T"]


def random_shape(seed):
    rng = random.Random(seed)
    uids = []
    for k in range(rng.randint(1, 4)):
        i, j = rng.randint(0, 1), rng.randint(0, 1)
        bargs, hargs = ["u", "u"], ["z", "z"]
        bargs[i], bargs[1 - i], hargs[j] = "x", "y", "x"
        uids.append(Dependency((atom(rng.choice(PREDS), *bargs),), (atom(rng.choice(PREDS), *hargs),), f"u{k}"))
    base = [Atom(rng.choice(PREDS), (Const("a"), Const("b")))]
    vs, atoms = ["v0"], []
    for _ in range(rng.randint(1, 4)):
        old = rng.choice(vs)
        new = rng.choice(vs) if rng.random() < 0.25 else f"v{len(vs)}"
        if new not in vs:
            vs.append(new)
        args = [old, new]
        rng.shuffle(args)
        atoms.append(atom(rng.choice(PREDS), *args))
    return uids, base, ConjunctiveQuery(tuple(atoms))
