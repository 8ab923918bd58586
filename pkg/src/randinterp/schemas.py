"""JSON schemas of the emitted reports and a validator for them."""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema

_NUM = {"type": "number"}
_INT = {"type": "integer"}
_VERDICT = {"enum": ["as_yes", "as_no", "undecided"]}
_STATS = {
    "type": "object",
    "required": ["successes", "trials", "estimate", "wilson_95"],
    "properties": {
        "successes": _INT, "trials": _INT, "estimate": _NUM,
        "wilson_95": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
        "flag": {"type": ["string", "null"]},
    },
}


def _report(type_: str, required: list[str], props: dict) -> dict:
    return {
        "type": "object",
        "required": ["schema", "type"] + required,
        "properties": {"schema": {"const": "v1"}, "type": {"const": type_}, **props},
    }


SCHEMAS = {
    "classification": _report("classification", [
        "profile", "alpha", "interpolating", "separated", "zero_set", "carleson", "basis", "bases"], {
        "alpha": _NUM, "interpolating": _VERDICT, "separated": _VERDICT,
        "zero_set": _VERDICT, "carleson": _VERDICT, "basis": {"type": "string"},
        "bases": {"type": "object", "additionalProperties": {"type": "string"}},
    }),
    "configuration": _report("configuration", ["profile_id", "seed", "trial_index", "max_n", "points"], {
        "points": {"type": "array", "items": {
            "type": "object", "required": ["index", "annulus", "radius", "angle"],
            "properties": {"index": _INT, "annulus": _INT, "radius": _NUM, "angle": _NUM}}},
    }),
    "configurations": _report("configurations", ["configurations"], {
        "configurations": {"type": "array"},
    }),
    "carleson": _report("carleson", ["alpha", "max_depth", "variant", "one_box_constant",
                                     "per_generation_max"], {
        "one_box_constant": _NUM,
        "per_generation_max": {"type": "array", "items": _NUM},
    }),
    "tail": _report("tail", ["profile", "alpha", "trials", "seed", "rows"], {
        "rows": {"type": "array", "items": {
            "type": "object", "required": ["n", "A", "empirical", "gf_bound", "within_3sigma"],
            "properties": {"n": _INT, "A": _NUM, "empirical": _STATS, "gf_bound": _NUM,
                           "within_3sigma": {"type": "boolean"}}}},
    }),
    "separation": _report("separation", ["metric", "delta", "depths", "per_depth", "trend"], {
        "per_depth": {"type": "array", "items": _STATS},
        "trend": {"enum": ["stable", "decaying", "degenerate"]},
    }),
    "dsep_event": _report("dsep_event", ["k", "gamma", "stats", "closed_form"], {
        "stats": _STATS, "closed_form": _NUM,
    }),
    "overflow": _report("overflow", ["gamma_or_profile", "N", "rows"], {
        "rows": {"type": "array", "items": {
            "type": "object", "required": ["n", "stats", "exact"],
            "properties": {"n": _INT, "stats": _STATS, "exact": _NUM}}},
    }),
    "zero_coverage": _report("zero_coverage", ["alpha", "L", "grid", "checkpoints", "mean_covered"], {
        "mean_covered": {"type": "array", "items": _NUM},
    }),
    "trend": _report("trend", ["alpha", "depths", "per_depth", "trend", "symbolic_interpolating"], {
        "per_depth": {"type": "array", "items": _STATS},
        "trend": {"enum": ["stable", "decaying", "degenerate"]},
        "symbolic_interpolating": _VERDICT,
    }),
}


def validate_report(doc: dict) -> None:
    """Raise jsonschema.ValidationError (or ValueError) if doc is not a valid report."""
    if not isinstance(doc, dict):
        raise ValueError("report must be a JSON object")
    kind = doc.get("type")
    if kind not in SCHEMAS:
        raise ValueError(f"unknown report type {kind!r}")
    jsonschema.validate(doc, SCHEMAS[kind])


def validate_file(path: str | Path) -> None:
    validate_report(json.loads(Path(path).read_text(encoding="utf-8")))
