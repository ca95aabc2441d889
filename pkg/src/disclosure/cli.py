"""Command-line front end: check, classify, gen, diff."""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from pathlib import Path

from . import hardgen, randgen
from .engine import ChaseBudget, Status
from .model import (
    DEP_ORDER,
    MAP_ORDER,
    DepClass,
    Dependency,
    MapClass,
    Setting,
    atom,
    classify_all,
    classify_dependency,
    classify_mapping,
    classify_mapping_rule,
    strongest,
)
from .problem import ParseError, dumps, from_setting, parse
from .report import Report, validate_report
from .rewrite import Mode, boolify_policy, disclose_via_entailment
from .uid import disclose_uid_ptime
from .vischase import disclose_via_vischase, oracle_disclose

ALGOS = ["auto", "vischase", "critrewrite", "critrewrite-ptime", "uid-ptime", "oracle"]
EXIT_OK, EXIT_USAGE, EXIT_UNKNOWN, EXIT_DIFF = 0, 1, 2, 3


class UsageError(Exception):
    pass


def classes_of(s: Setting) -> tuple[DepClass, MapClass]:
    return strongest(classify_all(s.sigma), DEP_ORDER), strongest(classify_mapping(s.mappings), MAP_ORDER)


def legal_algorithms(s: Setting) -> list[str]:
    """Applicable algorithms, most specific first."""
    dcs, mcs = classify_all(s.sigma), classify_mapping(s.mappings)
    out = []
    if DepClass.UID in dcs and MapClass.PROJ in mcs:
        out.append("uid-ptime")
    if DepClass.LTGD in dcs and MapClass.ATOM in mcs:
        out.append("critrewrite-ptime")
    return out + ["critrewrite", "vischase", "oracle"]


def pick_algorithm(s: Setting) -> str:
    return legal_algorithms(s)[0]


def run_algorithm(algo: str, s: Setting, budget: ChaseBudget):
    p = s.policy
    if algo == "vischase":
        return disclose_via_vischase(s.sigma, s.mappings, p, budget)
    if algo == "oracle":
        return oracle_disclose(s.sigma, s.mappings, p, budget)
    if algo == "critrewrite":
        return disclose_via_entailment(s.sigma, s.mappings, p, budget, Mode.FULL)
    if algo == "critrewrite-ptime":
        return disclose_via_entailment(s.sigma, s.mappings, p, budget, Mode.PTIME)
    if algo == "uid-ptime":
        return disclose_uid_ptime(s.sigma, s.mappings, p, budget)
    raise UsageError(f"unknown algorithm {algo}")


def run_check(s: Setting, algo: str = "auto", budget: ChaseBudget = ChaseBudget()) -> Report:
    if budget.max_rounds <= 0 or budget.max_facts <= 0:
        raise UsageError("budget values must be positive")
    notes = []
    if not s.policy.is_boolean:
        notes.append(f"policy had free variables {', '.join(map(str, s.policy.free))}; "
                     "checked its Boolean form with IsCrit conjuncts")
        s = Setting(s.sigma, s.mappings, boolify_policy(s.policy), s.schema)
    legal = legal_algorithms(s)
    if algo == "auto":
        algo = legal[0]
    elif algo not in legal:
        dc, mc = classes_of(s)
        raise UsageError(f"{algo} does not apply to {dc.value} constraints with {mc.value} mappings")
    t0 = time.perf_counter()
    v = run_algorithm(algo, s, budget)
    dt = time.perf_counter() - t0
    if algo == "uid-ptime" and v.status is Status.DISCLOSED and not v.witness:
        notes.append("no witness materialized by the cross-check chase within budget")
    dc, mc = classes_of(s)
    return Report(v, algo, {"constraints": dc.value, "mappings": mc.value}, notes, {"solve": dt})


def _budget(args) -> ChaseBudget:
    if args.rounds <= 0 or args.max_facts <= 0:
        raise UsageError("--rounds and --max-facts must be positive")
    return ChaseBudget(args.rounds, args.max_facts)


def _load(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    return parse(text)


def cmd_check(args) -> int:
    pf = _load(args.file)
    if pf.policy is None:
        raise UsageError(f"{args.file} has no policy")
    rep = run_check(pf.setting(), args.algo, _budget(args))
    if args.json:
        doc = rep.to_json()
        validate_report(doc)
        print(json.dumps(doc, indent=2))
    else:
        print(rep.to_text())
    return EXIT_UNKNOWN if rep.verdict.status is Status.UNKNOWN else EXIT_OK


def cmd_classify(args) -> int:
    pf = _load(args.file)
    for d in pf.constraints:
        print(f"constraint {d.label}: {strongest(classify_dependency(d), DEP_ORDER).value}  {d}")
    for r in pf.mappings:
        print(f"mapping {r.head[0].pred}: {strongest(classify_mapping_rule(r), MAP_ORDER).value}  {r}")
    s_dc = strongest(classify_all(pf.constraints), DEP_ORDER)
    s_mc = strongest(classify_mapping(pf.mappings), MAP_ORDER)
    print(f"constraints: {s_dc.value}")
    print(f"mappings: {s_mc.value}")
    if pf.policy is not None:
        print(f"auto algorithm: {pick_algorithm(pf.setting())}")
    return EXIT_OK


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_gen(args) -> int:
    rng = random.Random(args.seed)
    extra = ""
    if args.kind == "3col":
        if args.edges:
            g = hardgen.ColoringProblem.parse(args.edges)
        else:
            g = hardgen.ColoringProblem.random(rng, args.vertices)
        if not g.edges:
            raise UsageError("graph has no edges")
        if g.vertices > hardgen.MAX_VERTICES:
            raise UsageError(f"at most {hardgen.MAX_VERTICES} vertices")
        s = hardgen.gen_3coloring(g)
        head = f"# 3-coloring, edges {','.join(f'{a}-{b}' for a, b in g.edges)}\n"
    elif args.kind == "circuit":
        c = hardgen.Circuit.parse(args.spec) if args.spec else hardgen.Circuit.random(rng, args.gates)
        if len(c.inputs()) > hardgen.MAX_INPUTS:
            raise UsageError(f"at most {hardgen.MAX_INPUTS} inputs")
        variant = {"atommap": hardgen.ATOMMAP_NOCONSTRAINTS, "fr1": hardgen.FR1LTGD_PROJMAP}[args.variant]
        s, inst = hardgen.gen_circuit_sat(c, variant)
        head = f"# circuit {c.gates}, variant {variant}\n"
        extra = "".join(f"# instance: {f}\n" for f in inst)
    elif args.kind == "idimp":
        if args.chain is not None:
            names = ["R1"] + [f"S{i}" for i in range(1, args.chain)] + ["R2"]
            xs = [f"x{i}" for i in range(1, args.arity + 1)]
            ids = tuple(Dependency((atom(a, *xs),), (atom(b, *xs),), f"id{k}")
                        for k, (a, b) in enumerate(zip(names, names[1:]), 1))
            p = hardgen.IdImplication(ids, ("R1", "R2"), {n: args.arity for n in names})
        else:
            p = hardgen.IdImplication.random(rng)
        s = hardgen.gen_id_implication(p)
        head = f"# ID implication {p.goal[0]} <= {p.goal[1]}\n"
    else:
        s = randgen.FAMILIES[args.family](args.seed)
        head = f"# random {args.family} setting, seed {args.seed}\n"
    _emit(head + dumps(from_setting(s)) + extra, args.out)
    return EXIT_OK


def _diff_problems(args):
    if args.dir:
        for path in sorted(Path(args.dir).glob("*.disc")):
            pf = parse(path.read_text(encoding="utf-8"))
            if pf.policy is not None:
                yield path.name, pf.setting()
        return
    lo, _, hi = args.seeds.partition(":")
    for seed in range(int(lo), int(hi)):
        yield f"{args.family}:{seed}", randgen.FAMILIES[args.family](seed)


def cmd_diff(args) -> int:
    budget = _budget(args)
    total = agree = unknown = 0
    failures = []
    for name, s in _diff_problems(args):
        if not s.policy.is_boolean:
            s = Setting(s.sigma, s.mappings, boolify_policy(s.policy), s.schema)
        total += 1
        verdicts = {a: run_algorithm(a, s, budget).status for a in legal_algorithms(s)}
        resolved = {v for v in verdicts.values() if v is not Status.UNKNOWN}
        if Status.UNKNOWN in verdicts.values():
            unknown += 1
        if len(resolved) > 1:
            failures.append((name, verdicts))
        else:
            agree += 1
    for name, verdicts in failures:
        print(f"DISAGREE {name}: " + ", ".join(f"{a}={v.value}" for a, v in verdicts.items()))
    print(f"problems: {total}  agreeing: {agree}  disagreeing: {len(failures)}  "
          f"with an UNKNOWN: {unknown}")
    return EXIT_DIFF if failures else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="disclose", description="Disclosure analysis for data-integration mappings.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def budget_flags(p):
        p.add_argument("--rounds", type=int, default=8, help="chase rounds (default 8)")
        p.add_argument("--max-facts", type=int, default=100_000, help="fact cap (default 100000)")

    p = sub.add_parser("check", help="decide disclosure for a problem file")
    p.add_argument("file")
    p.add_argument("--algo", choices=ALGOS, default="auto")
    p.add_argument("--json", action="store_true", help="emit a JSON report")
    budget_flags(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("classify", help="print constraint and mapping classes")
    p.add_argument("file")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("gen", help="emit a generated problem file")
    p.add_argument("kind", choices=["3col", "circuit", "idimp", "random"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write here instead of stdout")
    p.add_argument("--edges", help='3col: edge list like "1-2,2-3,1-3"')
    p.add_argument("--vertices", type=int, default=5, help="3col: vertices of a random graph")
    p.add_argument("--spec", help='circuit: expression like "o=OR(NOT 2,2)"')
    p.add_argument("--gates", type=int, default=4, help="circuit: gates of a random circuit")
    p.add_argument("--variant", choices=["atommap", "fr1"], default="fr1")
    p.add_argument("--chain", type=int, help="idimp: number of chained IDs from R1 to R2")
    p.add_argument("--arity", type=int, default=2)
    p.add_argument("--family", choices=sorted(randgen.FAMILIES), default="general")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("diff", help="compare all legal algorithms on a corpus")
    p.add_argument("--family", choices=sorted(randgen.FAMILIES), default="general")
    p.add_argument("--seeds", default="0:200", help="seed range lo:hi")
    p.add_argument("--dir", help="directory of *.disc problem files instead of seeds")
    budget_flags(p)
    p.set_defaults(func=cmd_diff)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, UsageError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
