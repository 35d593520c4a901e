"""Canonical case-file format, sign-mark encoding, and bundled fixtures.

The JSON schema (version 1) is the single source of truth for case
serialization::

    {
      "schema": 1,
      "name": "...",
      "config": {eta, aggregation, collapse_threshold, hybrid_ratio,
                 interference_offset, embed_dim},
      "hypotheses": [{"id", "label", "statement"}],
      "observations": [{"id", "statement", "weight",
                        "overrides": {"H1": 1.0 | "check" | "cross" | "ambiguous"}}],
      "interference_overrides": [{"i", "j", "value"}]
    }

UTF-8 throughout; unknown fields are rejected, not ignored. Observation
arrival order is the array order (sequence indices are assigned 1..m on
parse).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .errors import ParseError, SchemaViolationError, ValidationFailedError
from .model import CaseFile, DynamicsConfig, Hypothesis, Observation, validate

SCHEMA_VERSION = 1

FIXTURE_IDS = ("ludwig", "bossetti", "medical", "drift", "order-witness")

_FIXTURE_INFO = {
    "ludwig": (
        "Five accounts of the 1886 deaths scored against seven qualitative marks.",
        "Ludwig II of Bavaria case study: 5x7 qualitative projection grid.",
    ),
    "bossetti": (
        "Six accounts of the contested DNA evidence under weighted qualitative marks.",
        "Bossetti-Gambirasio case study: 6x7 projection grid with strong/medium salience.",
    ),
    "medical": (
        "Acute paralysis differential (botulism vs GBS/MFS) with symmetric evidence.",
        "Clinical parallel-treatment case study: two-hypothesis deferred resolution.",
    ),
    "drift": (
        "Continental drift vs fixism with a late mechanism observation.",
        "Geology paradigm case study: two-hypothesis long suspension.",
    ),
    "order-witness": (
        "Minimal two-observation case whose final amplitudes depend on arrival order.",
        "Synthetic witness for order sensitivity of the normalized update.",
    ),
}


class SignMark(str, Enum):
    CHECK = "check"
    CROSS = "cross"
    AMBIGUOUS = "ambiguous"


def sign_to_projection(mark: SignMark) -> float:
    """Qualitative mark to projection value: supports, contradicts, or neither."""
    return {SignMark.CHECK: 1.0, SignMark.CROSS: -1.0, SignMark.AMBIGUOUS: 0.0}[mark]


@dataclass(frozen=True)
class FixtureManifest:
    fixture_id: str
    description: str
    source: str
    case: CaseFile


_CONFIG_FIELDS = {
    "eta",
    "aggregation",
    "collapse_threshold",
    "hybrid_ratio",
    "interference_offset",
    "embed_dim",
}


def _reject_unknown(obj: Mapping[str, Any], allowed: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise SchemaViolationError(f"unknown field(s) {sorted(unknown)} in {where}")


def _parse_config(obj: Mapping[str, Any]) -> DynamicsConfig:
    _reject_unknown(obj, _CONFIG_FIELDS, "config")
    defaults = DynamicsConfig()
    return DynamicsConfig(
        eta=float(obj.get("eta", defaults.eta)),
        aggregation=str(obj.get("aggregation", defaults.aggregation)),
        collapse_threshold=float(obj.get("collapse_threshold", defaults.collapse_threshold)),
        hybrid_ratio=float(obj.get("hybrid_ratio", defaults.hybrid_ratio)),
        interference_offset=float(obj.get("interference_offset", defaults.interference_offset)),
        embed_dim=int(obj.get("embed_dim", defaults.embed_dim)),
    )


def _parse_override_value(value: Any, where: str) -> float:
    if isinstance(value, str):
        try:
            return sign_to_projection(SignMark(value))
        except ValueError:
            raise SchemaViolationError(
                f"{where}: mark must be check/cross/ambiguous, got {value!r}"
            ) from None
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    raise SchemaViolationError(f"{where}: override must be a number or mark string")


def parse_case(payload: Mapping[str, Any] | str | bytes) -> CaseFile:
    """Parse and validate a schema-1 case document."""
    if isinstance(payload, (str, bytes)):
        try:
            obj = json.loads(payload)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from None
    else:
        obj = payload
    if not isinstance(obj, Mapping):
        raise SchemaViolationError("top level must be an object")
    _reject_unknown(
        obj,
        {"schema", "name", "config", "hypotheses", "observations", "interference_overrides"},
        "case",
    )
    if obj.get("schema") != SCHEMA_VERSION:
        raise SchemaViolationError(f"schema must be {SCHEMA_VERSION}, got {obj.get('schema')!r}")
    if "name" not in obj or not isinstance(obj["name"], str):
        raise SchemaViolationError("name must be a string")
    if "hypotheses" not in obj or not isinstance(obj["hypotheses"], list):
        raise SchemaViolationError("hypotheses must be an array")

    config = _parse_config(obj.get("config", {}))

    hypotheses = []
    for k, h in enumerate(obj["hypotheses"]):
        if not isinstance(h, Mapping):
            raise SchemaViolationError(f"hypotheses[{k}] must be an object")
        _reject_unknown(h, {"id", "label", "statement"}, f"hypotheses[{k}]")
        try:
            hypotheses.append(
                Hypothesis(id=str(h["id"]), label=str(h["label"]), statement=str(h["statement"]))
            )
        except KeyError as exc:
            raise SchemaViolationError(f"hypotheses[{k}] missing {exc}") from None

    observations = []
    raw_observations = obj.get("observations", [])
    if not isinstance(raw_observations, list):
        raise SchemaViolationError("observations must be an array")
    for k, o in enumerate(raw_observations):
        if not isinstance(o, Mapping):
            raise SchemaViolationError(f"observations[{k}] must be an object")
        _reject_unknown(o, {"id", "statement", "weight", "overrides"}, f"observations[{k}]")
        overrides_raw = o.get("overrides", {})
        if not isinstance(overrides_raw, Mapping):
            raise SchemaViolationError(f"observations[{k}].overrides must be an object")
        overrides = {
            str(hid): _parse_override_value(v, f"observations[{k}].overrides[{hid}]")
            for hid, v in overrides_raw.items()
        }
        try:
            observations.append(
                Observation(
                    id=str(o["id"]),
                    statement=str(o["statement"]),
                    weight=float(o.get("weight", 1.0)),
                    polarity_overrides=overrides,
                    sequence=k + 1,
                )
            )
        except KeyError as exc:
            raise SchemaViolationError(f"observations[{k}] missing {exc}") from None

    interference: dict[tuple[str, str], float] = {}
    raw_couplings = obj.get("interference_overrides", [])
    if not isinstance(raw_couplings, list):
        raise SchemaViolationError("interference_overrides must be an array")
    for k, entry in enumerate(raw_couplings):
        if not isinstance(entry, Mapping):
            raise SchemaViolationError(f"interference_overrides[{k}] must be an object")
        _reject_unknown(entry, {"i", "j", "value"}, f"interference_overrides[{k}]")
        try:
            interference[(str(entry["i"]), str(entry["j"]))] = float(entry["value"])
        except KeyError as exc:
            raise SchemaViolationError(f"interference_overrides[{k}] missing {exc}") from None

    case = CaseFile(
        name=obj["name"],
        hypotheses=tuple(hypotheses),
        observations=tuple(observations),
        config=config,
        interference_overrides=interference,
    )
    violations = validate(case)
    if violations:
        raise ValidationFailedError(violations)
    return case


def parse_observation(obj: Mapping[str, Any], sequence: int) -> Observation:
    """Parse one wire-format observation object (same shape as the case
    schema's entries); the caller assigns the arrival sequence."""
    if not isinstance(obj, Mapping):
        raise SchemaViolationError("observation must be an object")
    _reject_unknown(obj, {"id", "statement", "weight", "overrides"}, "observation")
    overrides_raw = obj.get("overrides", {})
    if not isinstance(overrides_raw, Mapping):
        raise SchemaViolationError("observation.overrides must be an object")
    overrides = {
        str(hid): _parse_override_value(v, f"overrides[{hid}]")
        for hid, v in overrides_raw.items()
    }
    try:
        return Observation(
            id=str(obj["id"]),
            statement=str(obj["statement"]),
            weight=float(obj.get("weight", 1.0)),
            polarity_overrides=overrides,
            sequence=sequence,
        )
    except KeyError as exc:
        raise SchemaViolationError(f"observation missing {exc}") from None


def observation_to_dict(observation: Observation) -> dict:
    return {
        "id": observation.id,
        "statement": observation.statement,
        "weight": observation.weight,
        "overrides": {hid: float(v) for hid, v in observation.polarity_overrides.items()},
    }


def serialize_case(case: CaseFile) -> dict:
    """Canonical schema-1 document for a case (marks emitted as numbers)."""
    return {
        "schema": SCHEMA_VERSION,
        "name": case.name,
        "config": {
            "eta": case.config.eta,
            "aggregation": case.config.aggregation,
            "collapse_threshold": case.config.collapse_threshold,
            "hybrid_ratio": case.config.hybrid_ratio,
            "interference_offset": case.config.interference_offset,
            "embed_dim": case.config.embed_dim,
        },
        "hypotheses": [
            {"id": h.id, "label": h.label, "statement": h.statement}
            for h in case.hypotheses
        ],
        "observations": [
            {
                "id": o.id,
                "statement": o.statement,
                "weight": o.weight,
                "overrides": {hid: float(v) for hid, v in o.polarity_overrides.items()},
            }
            for o in sorted(case.observations, key=lambda o: o.sequence)
        ],
        "interference_overrides": [
            {"i": i, "j": j, "value": v}
            for (i, j), v in sorted(case.interference_overrides.items())
        ],
    }


def dumps_case(case: CaseFile) -> str:
    """Byte-stable JSON text for a case."""
    return json.dumps(serialize_case(case), indent=2, sort_keys=True) + "\n"


def load_case(source: str | Path | Mapping[str, Any]) -> CaseFile:
    """Load a case from a path, JSON text, or parsed document."""
    if isinstance(source, Path):
        return parse_case(source.read_text(encoding="utf-8"))
    if isinstance(source, str):
        candidate = Path(source)
        looks_like_json = source.lstrip().startswith("{")
        if not looks_like_json:
            try:
                return parse_case(candidate.read_text(encoding="utf-8"))
            except OSError as exc:
                raise ParseError(f"cannot read case file {source!r}: {exc}") from None
        return parse_case(source)
    return parse_case(source)


def _fixture_path(fixture_id: str):
    return resources.files("qabd").joinpath("fixtures").joinpath(f"{fixture_id}.json")


def fixture(fixture_id: str) -> FixtureManifest:
    """Load one bundled fixture by id."""
    if fixture_id not in FIXTURE_IDS:
        raise ParseError(f"unknown fixture {fixture_id!r}; have {', '.join(FIXTURE_IDS)}")
    text = _fixture_path(fixture_id).read_text(encoding="utf-8")
    case = parse_case(text)
    description, source = _FIXTURE_INFO[fixture_id]
    return FixtureManifest(
        fixture_id=fixture_id, description=description, source=source, case=case
    )


def list_fixtures() -> list[FixtureManifest]:
    """All bundled fixtures, in declaration order."""
    return [fixture(fid) for fid in FIXTURE_IDS]
