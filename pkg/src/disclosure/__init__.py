"""Disclosure analysis for source-to-global mappings under source constraints."""

from .engine import ChaseBudget, ChaseStatus, Status, Verdict, chase, entails, eval_cq
from .model import (
    CRIT,
    Atom,
    ConjunctiveQuery,
    Const,
    Dependency,
    Instance,
    MappingSet,
    Null,
    Schema,
    Setting,
    Var,
    atom,
    classify_dependency,
    classify_mapping,
    mapping_rule,
    normalize_heads,
)
from .problem import dumps, parse
from .rewrite import Mode, boolify_policy, disclose_via_entailment
from .uid import disclose_uid_ptime
from .vischase import disclose_via_vischase, oracle_disclose

__all__ = [
    "ChaseBudget",
    "ChaseStatus",
    "Status",
    "Verdict",
    "chase",
    "entails",
    "eval_cq",
    "CRIT",
    "Atom",
    "ConjunctiveQuery",
    "Const",
    "Dependency",
    "Instance",
    "MappingSet",
    "Null",
    "Schema",
    "Setting",
    "Var",
    "atom",
    "classify_dependency",
    "classify_mapping",
    "mapping_rule",
    "normalize_heads",
    "dumps",
    "parse",
    "Mode",
    "boolify_policy",
    "disclose_via_entailment",
    "disclose_uid_ptime",
    "disclose_via_vischase",
    "oracle_disclose",
]
