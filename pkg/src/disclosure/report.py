"""Check reports: JSON shape, schema, and witness re-validation."""

from __future__ import annotations

from dataclasses import dataclass, field

from .engine import Status, Verdict
from .model import Atom, ConjunctiveQuery, Instance, Var

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "disclosure check report",
    "type": "object",
    "required": ["verdict", "algorithm", "classes", "witness", "rounds", "facts", "unknown_reason"],
    "properties": {
        "verdict": {"enum": ["DISCLOSED", "NOT_DISCLOSED", "UNKNOWN"]},
        "algorithm": {"enum": ["vischase", "critrewrite", "critrewrite-ptime", "uid-ptime", "oracle"]},
        "classes": {
            "type": "object",
            "required": ["constraints", "mappings"],
            "properties": {"constraints": {"type": "string"}, "mappings": {"type": "string"}},
        },
        "witness": {"type": ["object", "null"], "additionalProperties": {"type": "string"}},
        "rounds": {"type": "integer", "minimum": 0},
        "facts": {"type": "integer", "minimum": 0},
        "unknown_reason": {"type": ["string", "null"]},
        "certificate": {"type": ["object", "null"]},
        "notes": {"type": "array", "items": {"type": "string"}},
        "timings": {"type": "object", "additionalProperties": {"type": "number"}},
    },
    "allOf": [
        {"if": {"properties": {"verdict": {"const": "DISCLOSED"}}},
         "then": {"properties": {"witness": {"type": "object"}}}},
        {"if": {"properties": {"verdict": {"const": "NOT_DISCLOSED"}}},
         "then": {"properties": {"certificate": {"type": "object"}}, "required": ["certificate"]}},
    ],
}


@dataclass
class Report:
    verdict: Verdict
    algorithm: str
    classes: dict
    notes: list[str] = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    def witness(self) -> dict | None:
        w = self.verdict.witness
        if w is None:
            return {} if self.verdict.status is Status.DISCLOSED else None
        return {str(k): str(v) for k, v in sorted(w.items(), key=lambda kv: kv[0].name)}

    def certificate(self) -> dict | None:
        v = self.verdict
        if v.status is Status.DISCLOSED:
            return None
        c = v.certificate
        if c is None and v.status is Status.UNKNOWN:
            return None
        out = {"saturated": v.status is Status.NOT_DISCLOSED}
        if isinstance(c, Instance):
            out["instance_facts"] = len(c)
        elif isinstance(c, ConjunctiveQuery):
            out["failing_component"] = str(c)
        return out

    def to_json(self) -> dict:
        v = self.verdict
        return {
            "verdict": v.status.value,
            "algorithm": self.algorithm,
            "classes": dict(self.classes),
            "witness": self.witness(),
            "rounds": v.rounds,
            "facts": v.facts,
            "unknown_reason": v.reason if v.status is Status.UNKNOWN else None,
            "certificate": self.certificate(),
            "notes": list(self.notes),
            "timings": dict(self.timings),
        }

    def to_text(self) -> str:
        v = self.verdict
        lines = [f"verdict: {v.status.value}", f"algorithm: {self.algorithm}",
                 f"classes: constraints={self.classes['constraints']} mappings={self.classes['mappings']}"]
        w = self.witness()
        if w:
            lines.append("witness: " + ", ".join(f"{k}={val}" for k, val in w.items()))
        if v.query is not None and v.query.atoms and v.witness:
            lines.append(f"matched: {v.query}")
        lines.append(f"rounds: {v.rounds}  facts: {v.facts}")
        if v.status is Status.UNKNOWN:
            lines.append(f"unknown: {v.reason}")
        cert = self.certificate()
        if cert and v.status is Status.NOT_DISCLOSED:
            lines.append("certificate: " + ", ".join(f"{k}={val}" for k, val in cert.items()))
        lines += [f"note: {n}" for n in self.notes]
        if self.timings:
            lines.append("time: " + ", ".join(f"{k}={t:.3f}s" for k, t in self.timings.items()))
        return "\n".join(lines)


def validate_report(doc: dict) -> None:
    import jsonschema

    jsonschema.validate(doc, REPORT_SCHEMA)


def witness_holds(v: Verdict) -> bool:
    """Re-evaluate the matched query under the witness binding against the certificate state."""
    if v.witness is None or v.query is None:
        return False
    state = v.certificate
    if state is not None and hasattr(state, "instance"):
        state = state.instance
    if state is None:
        state = v.details.get("store")
    if state is None:
        return False
    facts = set(state)
    for a in v.query.atoms:
        g = Atom(a.pred, tuple(v.witness.get(t, t) for t in a.args))
        if any(isinstance(t, Var) for t in g.args) or g not in facts:
            return False
    return True
