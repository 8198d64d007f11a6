"""JSON documents for spaces, curves and verdicts.

Exact rationals are written as ``"p/q"`` strings.  A curve document carries a
``mode`` flag: in ``"exact"`` mode decimal strings are read as exact
rationals, in ``"approx"`` mode as floats.
"""
from __future__ import annotations

import json
from pathlib import Path

from .core import GeodesicCurve, GeodesyError, MetricSpace, Verdict
from .scalar import all_exact, format_scalar, parse_scalar


def space_from_json(doc: dict) -> MetricSpace:
    from .constructions import GluedSpace
    from .laakso import LaaksoGraph
    from .normed import PiecewiseFunctionSpace, PNormSpace, StepFunctionSpace

    if not isinstance(doc, dict) or "kind" not in doc:
        raise GeodesyError("space descriptor needs a 'kind' field")
    kind = doc["kind"]
    try:
        if kind == "pnorm":
            return PNormSpace(int(doc["n"]), doc.get("p", 1))
        if kind == "step":
            return StepFunctionSpace(tuple(parse_scalar(m) for m in doc["measures"]), doc.get("p", 1))
        if kind == "pwfun":
            return PiecewiseFunctionSpace(doc.get("p", 1))
        if kind == "laakso":
            return LaaksoGraph(int(doc["level"]))
        if kind == "glued":
            base = space_from_json(doc["base"])
            return GluedSpace(base, base.decode_point(doc["glue"]))
    except KeyError as exc:
        raise GeodesyError(f"space descriptor of kind {kind!r} is missing field {exc}") from exc
    raise GeodesyError(f"unknown space kind {kind!r}")


def curve_to_json(curve: GeodesicCurve) -> dict:
    exact = all_exact(*curve.params)
    space = curve.space
    return {
        "space": space.describe(),
        "mode": "exact" if exact else "approx",
        "breakpoints": [{"s": format_scalar(s), "point": space.encode_point(p)}
                        for s, p in curve.breakpoints],
    }


def curve_from_json(doc: dict) -> GeodesicCurve:
    if not isinstance(doc, dict):
        raise GeodesyError("curve document must be a JSON object")
    for key in ("space", "breakpoints"):
        if key not in doc:
            raise GeodesyError(f"curve document is missing field '{key}'")
    mode = doc.get("mode", "exact")
    if mode not in ("exact", "approx"):
        raise GeodesyError(f"field 'mode' must be 'exact' or 'approx', got {mode!r}")
    exact = mode == "exact"
    space = space_from_json(doc["space"])
    bps = []
    for k, item in enumerate(doc["breakpoints"]):
        try:
            bps.append((parse_scalar(item["s"], exact), space.decode_point(item["point"], exact)))
        except (KeyError, TypeError) as exc:
            raise GeodesyError(f"breakpoints[{k}] is malformed: {item!r}") from exc
        except GeodesyError as exc:
            raise GeodesyError(f"breakpoints[{k}]: {exc}") from exc
    return GeodesicCurve(space, tuple(bps))


def verdict_to_json(v: Verdict) -> dict:
    return {
        "verdict": v.verdict,
        "check": v.check,
        "witness_pair": None if v.witness_pair is None else [format_scalar(x) for x in v.witness_pair],
        "lhs": None if v.lhs is None else format_scalar(v.lhs),
        "rhs": None if v.rhs is None else format_scalar(v.rhs),
        "tolerance": v.tolerance,
        "pairs_checked": v.pairs_checked,
    }


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def load_json(source: str):
    """Parse inline JSON, or the file it names; errors carry line/column."""
    text = source
    path = Path(source)
    if not source.lstrip().startswith(("{", "[")):
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise GeodesyError(f"cannot read {source}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise GeodesyError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
