"""Wire protocol: newline-delimited UTF-8 JSON frames.

One frame is one JSON object per line carrying an envelope
(type, session_id, revision, body, and an optional client_ms used by
virtual-clock sessions) with a type-specific body. The same frame format
travels over a raw TCP stream and over WebSocket text messages, one frame
per message.

Decoding is the data shield: unknown type tags, unknown fields, and
out-of-range values are rejected with a structured DecodeError instead of
leaking into the session layer. decode_message(encode_message(m)) == m for
every valid message.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping

from .errors import DecodeError

PROTOCOL_VERSION = "v1"
MAX_FRAME_BYTES = 1_000_000

CONDITIONS = ("IDM", "nIDM")
PHASES = ("Tutorial", "Task1", "Task2", "Survey", "Done")
LABELS = ("Improved", "Neutral", "Worsened")
STAGES = ("Fast", "Final")
OVERLAY_MODES = ("mesh", "energy")
CLOCKS = ("real", "virtual")

CLIENT_TYPES = (
    "hello",
    "edit_request",
    "camera_pose",
    "overlay_request",
    "phase_advance",
    "final_selection",
    "survey_response",
)
SERVER_TYPES = (
    "hello_ack",
    "snap_notice",
    "feedback",
    "overlay_data",
    "phase_ack",
    "error",
)
MESSAGE_TYPES = CLIENT_TYPES + SERVER_TYPES


@dataclass(frozen=True)
class WireMessage:
    type: str
    body: Mapping[str, Any]
    session_id: str | None = None
    revision: int = 0
    client_ms: int | None = None


# --- field checkers ----------------------------------------------------------


def _fail(path: str, why: str):
    raise DecodeError(f"{path}: {why}")


def _string(path, v, min_len=0, max_len=4096, pattern_id=False):
    if not isinstance(v, str):
        _fail(path, f"expected string, got {type(v).__name__}")
    if not (min_len <= len(v) <= max_len):
        _fail(path, f"length {len(v)} outside [{min_len}, {max_len}]")
    if pattern_id and not all(c.isalnum() or c in "_-" for c in v):
        _fail(path, "only letters, digits, '_' and '-' allowed")
    return v


def _integer(path, v, lo, hi):
    if isinstance(v, bool) or not isinstance(v, int):
        _fail(path, f"expected integer, got {type(v).__name__}")
    if not (lo <= v <= hi):
        _fail(path, f"value {v} outside [{lo}, {hi}]")
    return v


def _number(path, v, lo=-1e12, hi=1e12):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(path, f"expected number, got {type(v).__name__}")
    if not math.isfinite(v):
        _fail(path, f"value {v} is not finite")
    if not (lo <= v <= hi):
        _fail(path, f"value {v} outside [{lo}, {hi}]")
    return v


def _enum(path, v, allowed):
    if v not in allowed:
        _fail(path, f"value {v!r} not one of {list(allowed)}")
    return v


def _vector3(path, v, lo=-1e6, hi=1e6, nonzero=False):
    if not isinstance(v, list) or len(v) != 3:
        _fail(path, "expected a list of 3 numbers")
    for i, c in enumerate(v):
        _number(f"{path}[{i}]", c, lo, hi)
    if nonzero and all(c == 0 for c in v):
        _fail(path, "zero vector not allowed")
    return v


def _object(path, v, validators: dict[str, Callable], optional: set[str] = frozenset()):
    if not isinstance(v, dict):
        _fail(path, f"expected object, got {type(v).__name__}")
    unknown = set(v) - set(validators)
    if unknown:
        _fail(path, f"unknown fields {sorted(unknown)}")
    for name, check in validators.items():
        if name not in v:
            if name in optional:
                continue
            _fail(path, f"missing field '{name}'")
        check(f"{path}.{name}", v[name])
    return v


def _nullable(check):
    def inner(path, v):
        if v is None:
            return v
        return check(path, v)

    return inner


# --- per-type body validators -------------------------------------------------


def _check_hello(body):
    _object(
        "body",
        body,
        {
            "participant_id": lambda p, v: _string(p, v, 1, 64, pattern_id=True),
            "seed": _nullable(lambda p, v: _integer(p, v, 0, 2**63 - 1)),
            "version": lambda p, v: _enum(p, v, (PROTOCOL_VERSION,)),
            "clock": lambda p, v: _enum(p, v, CLOCKS),
            "first_condition": _nullable(lambda p, v: _enum(p, v, CONDITIONS)),
        },
        optional={"seed", "first_condition"},
    )


def _check_edit_request(body):
    _object(
        "body",
        body,
        {
            "node_id": lambda p, v: _integer(p, v, 0, 1_000_000),
            "delta": lambda p, v: _number(p, v, -100.0, 100.0),
        },
    )


def _check_camera_pose(body):
    _object(
        "body",
        body,
        {
            "position": lambda p, v: _vector3(p, v),
            "direction": lambda p, v: _vector3(p, v, nonzero=True),
        },
    )


def _check_overlay_request(body):
    _object("body", body, {"mode": lambda p, v: _enum(p, v, OVERLAY_MODES)})


def _check_empty(body):
    _object("body", body, {})


def _check_survey_response(body):
    def items(path, v):
        if not isinstance(v, list) or len(v) != 10:
            _fail(path, "expected a list of 10 item scores")
        for i, item in enumerate(v):
            _integer(f"{path}[{i}]", item, 1, 5)

    _object("body", body, {"items": items})


def _check_hello_ack(body):
    def grid(path, v):
        _object(
            path,
            v,
            {
                "bays_x": lambda p, x: _integer(p, x, 1, 1000),
                "bays_z": lambda p, x: _integer(p, x, 1, 1000),
                "module_size": lambda p, x: _number(p, x, 1e-6, 1e6),
            },
        )

    def bounds(path, v):
        _object(
            path,
            v,
            {name: (lambda p, x: _number(p, x, 0, 1e6)) for name in (
                "depth_min", "depth_max", "width_min", "width_max", "offset_max"
            )} | {name: (lambda p, x: _integer(p, x, 1, 1000)) for name in ("lam_min", "lam_max")},
        )

    def nodes(path, v):
        if not isinstance(v, list):
            _fail(path, "expected list")
        for i, row in enumerate(v):
            if not isinstance(row, list) or len(row) != 4:
                _fail(f"{path}[{i}]", "expected [id, x, y, z]")
            _integer(f"{path}[{i}][0]", row[0], 0, 10**9)
            for j in (1, 2, 3):
                _number(f"{path}[{i}][{j}]", row[j])

    def members(path, v):
        if not isinstance(v, list):
            _fail(path, "expected list")
        for i, row in enumerate(v):
            if not isinstance(row, list) or len(row) != 3:
                _fail(f"{path}[{i}]", "expected [id, node_a, node_b]")
            for j in range(3):
                _integer(f"{path}[{i}][{j}]", row[j], 0, 10**9)

    def id_list(path, v):
        if not isinstance(v, list):
            _fail(path, "expected list")
        for i, nid in enumerate(v):
            _integer(f"{path}[{i}]", nid, 0, 10**9)

    def graph(path, v):
        _object(
            path, v,
            {"nodes": nodes, "members": members, "supports": id_list, "key_points": id_list},
        )

    def offsets(path, v):
        if not isinstance(v, list):
            _fail(path, "expected list of [node_id, dy] pairs")
        for i, row in enumerate(v):
            if not isinstance(row, list) or len(row) != 2:
                _fail(f"{path}[{i}]", "expected [node_id, dy]")
            _integer(f"{path}[{i}][0]", row[0], 0, 10**9)
            _number(f"{path}[{i}][1]", row[1])

    def conditions(path, v):
        if not isinstance(v, list) or len(v) != 2:
            _fail(path, "expected two conditions")
        for i, c in enumerate(v):
            _enum(f"{path}[{i}]", c, CONDITIONS)
        if v[0] == v[1]:
            _fail(path, "conditions must be a permutation of IDM/nIDM")

    _object(
        "body",
        body,
        {
            "session_id": lambda p, v: _string(p, v, 1, 128),
            "version": lambda p, v: _enum(p, v, (PROTOCOL_VERSION,)),
            "participant_id": lambda p, v: _string(p, v, 1, 64, pattern_id=True),
            "seed": lambda p, v: _integer(p, v, 0, 2**63 - 1),
            "condition_order": conditions,
            "phase": lambda p, v: _enum(p, v, PHASES),
            "edit_step": lambda p, v: _number(p, v, 1e-9, 1e3),
            "grid": grid,
            "bounds": bounds,
            "graph": graph,
            "offsets": offsets,
        },
    )


def _check_snap_notice(body):
    def changed(path, v):
        if not isinstance(v, list) or not v:
            _fail(path, "expected non-empty list of field names")
        for i, name in enumerate(v):
            _string(f"{path}[{i}]", name, 1, 128)

    _object("body", body, {"changed": changed})


def _check_feedback(body):
    _object(
        "body",
        body,
        {
            "enc1": lambda p, v: _enum(p, v, LABELS),
            "enc2": lambda p, v: _enum(p, v, LABELS),
            "enc3": lambda p, v: _enum(p, v, LABELS),
            "stage": lambda p, v: _enum(p, v, STAGES),
        },
    )


def _check_overlay_data(body):
    def payload(path, v):
        if not isinstance(v, dict):
            _fail(path, "expected object")
        if body.get("mode") == "mesh":
            forces = v.get("member_forces")
            if not isinstance(forces, list):
                _fail(f"{path}.member_forces", "expected list of [member_id, force]")
            for i, row in enumerate(forces):
                if not isinstance(row, list) or len(row) != 2:
                    _fail(f"{path}.member_forces[{i}]", "expected [member_id, force]")
                _integer(f"{path}.member_forces[{i}][0]", row[0], 0, 10**9)
                _number(f"{path}.member_forces[{i}][1]", row[1])
        elif body.get("mode") == "energy":
            for key in ("heating", "cooling", "solar"):
                series = v.get(key)
                if not isinstance(series, list) or len(series) != 12:
                    _fail(f"{path}.{key}", "expected 12 monthly values")
                for i, x in enumerate(series):
                    _number(f"{path}.{key}[{i}]", x, 0, 1e12)
            if set(v) - {"heating", "cooling", "solar"}:
                _fail(path, "unknown energy series")

    _object(
        "body",
        body,
        {"mode": lambda p, v: _enum(p, v, OVERLAY_MODES), "payload": payload},
    )


def _check_phase_ack(body):
    _object(
        "body",
        body,
        {
            "phase": lambda p, v: _enum(p, v, PHASES),
            "condition": _nullable(lambda p, v: _enum(p, v, CONDITIONS)),
        },
    )


def _check_error(body):
    _object(
        "body",
        body,
        {
            "code": lambda p, v: _string(p, v, 1, 64),
            "detail": lambda p, v: _string(p, v, 0, 2048),
        },
    )


_BODY_CHECKS: dict[str, Callable[[Mapping[str, Any]], None]] = {
    "hello": _check_hello,
    "edit_request": _check_edit_request,
    "camera_pose": _check_camera_pose,
    "overlay_request": _check_overlay_request,
    "phase_advance": _check_empty,
    "final_selection": _check_empty,
    "survey_response": _check_survey_response,
    "hello_ack": _check_hello_ack,
    "snap_notice": _check_snap_notice,
    "feedback": _check_feedback,
    "overlay_data": _check_overlay_data,
    "phase_ack": _check_phase_ack,
    "error": _check_error,
}

ENVELOPE_FIELDS = {"type", "session_id", "revision", "body", "client_ms"}


def validate_message(msg: WireMessage) -> WireMessage:
    if msg.type not in _BODY_CHECKS:
        raise DecodeError(f"unknown message type {msg.type!r}")
    if msg.session_id is not None:
        _string("session_id", msg.session_id, 1, 128)
    _integer("revision", msg.revision, 0, 2**63 - 1)
    if msg.client_ms is not None:
        _integer("client_ms", msg.client_ms, 0, 2**63 - 1)
    _BODY_CHECKS[msg.type](msg.body)
    return msg


def encode_message(msg: WireMessage) -> bytes:
    """Serialize to one newline-terminated frame. Validates first, so the
    process never emits a frame its own decoder would reject."""
    validate_message(msg)
    payload: dict[str, Any] = {
        "type": msg.type,
        "session_id": msg.session_id,
        "revision": msg.revision,
        "body": msg.body,
    }
    if msg.client_ms is not None:
        payload["client_ms"] = msg.client_ms
    return (json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")


def decode_message(frame: bytes | str) -> WireMessage:
    """Parse and validate one frame; DecodeError on any malformation."""
    if isinstance(frame, bytes):
        if len(frame) > MAX_FRAME_BYTES:
            raise DecodeError(f"frame of {len(frame)} bytes exceeds limit", offset=MAX_FRAME_BYTES)
        try:
            text = frame.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DecodeError(f"invalid UTF-8: {exc.reason}", offset=exc.start) from exc
    else:
        text = frame
        if len(text) > MAX_FRAME_BYTES:
            raise DecodeError(f"frame of {len(text)} chars exceeds limit", offset=MAX_FRAME_BYTES)
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DecodeError(f"invalid JSON: {exc.msg}", offset=exc.pos) from exc
    if not isinstance(raw, dict):
        raise DecodeError(f"frame must be an object, got {type(raw).__name__}")
    unknown = set(raw) - ENVELOPE_FIELDS
    if unknown:
        raise DecodeError(f"unknown envelope fields {sorted(unknown)}")
    for name in ("type", "body"):
        if name not in raw:
            raise DecodeError(f"missing envelope field '{name}'")
    if not isinstance(raw["type"], str):
        raise DecodeError("type must be a string")
    if not isinstance(raw["body"], dict):
        raise DecodeError("body must be an object")
    msg = WireMessage(
        type=raw["type"],
        body=raw["body"],
        session_id=raw.get("session_id"),
        revision=raw.get("revision", 0),
        client_ms=raw.get("client_ms"),
    )
    if msg.revision is None or isinstance(msg.revision, bool) or not isinstance(msg.revision, int):
        raise DecodeError("revision must be an integer")
    return validate_message(msg)


# --- convenience constructors --------------------------------------------------


def error_message(session_id: str | None, revision: int, code: str, detail: str = "") -> WireMessage:
    return WireMessage(
        type="error", session_id=session_id, revision=revision,
        body={"code": code, "detail": detail[:2048]},
    )


def build_protocol_schema() -> dict[str, Any]:
    """JSON Schema document for the frame envelope and each body type.

    Shipped alongside the package (protocol_schema.json) so non-Python
    clients and the agent harness can validate frames independently.
    """
    num = {"type": "number"}
    nonneg_int = {"type": "integer", "minimum": 0}

    def obj(props, required=None, extra=False):
        return {
            "type": "object",
            "properties": props,
            "required": sorted(required if required is not None else props),
            "additionalProperties": extra,
        }

    vec3 = {"type": "array", "items": num, "minItems": 3, "maxItems": 3}
    id_list = {"type": "array", "items": nonneg_int}
    bodies = {
        "hello": obj(
            {
                "participant_id": {"type": "string", "minLength": 1, "maxLength": 64,
                                   "pattern": "^[A-Za-z0-9_-]+$"},
                "seed": {"type": ["integer", "null"], "minimum": 0},
                "version": {"const": PROTOCOL_VERSION},
                "clock": {"enum": list(CLOCKS)},
                "first_condition": {"enum": list(CONDITIONS) + [None]},
            },
            required=["participant_id", "version", "clock"],
        ),
        "edit_request": obj(
            {
                "node_id": {"type": "integer", "minimum": 0, "maximum": 1_000_000},
                "delta": {"type": "number", "minimum": -100.0, "maximum": 100.0},
            }
        ),
        "camera_pose": obj({"position": vec3, "direction": vec3}),
        "overlay_request": obj({"mode": {"enum": list(OVERLAY_MODES)}}),
        "phase_advance": obj({}),
        "final_selection": obj({}),
        "survey_response": obj(
            {"items": {"type": "array", "minItems": 10, "maxItems": 10,
                       "items": {"type": "integer", "minimum": 1, "maximum": 5}}}
        ),
        "hello_ack": obj(
            {
                "session_id": {"type": "string"},
                "version": {"const": PROTOCOL_VERSION},
                "participant_id": {"type": "string"},
                "seed": nonneg_int,
                "condition_order": {"type": "array", "items": {"enum": list(CONDITIONS)},
                                    "minItems": 2, "maxItems": 2},
                "phase": {"enum": list(PHASES)},
                "edit_step": {"type": "number", "exclusiveMinimum": 0},
                "grid": obj(
                    {
                        "bays_x": {"type": "integer", "minimum": 1},
                        "bays_z": {"type": "integer", "minimum": 1},
                        "module_size": {"type": "number", "exclusiveMinimum": 0},
                    }
                ),
                "bounds": obj(
                    {
                        "depth_min": num, "depth_max": num, "width_min": num,
                        "width_max": num, "lam_min": nonneg_int, "lam_max": nonneg_int,
                        "offset_max": num,
                    }
                ),
                "graph": obj(
                    {
                        "nodes": {"type": "array",
                                  "items": {"type": "array", "minItems": 4, "maxItems": 4}},
                        "members": {"type": "array",
                                    "items": {"type": "array", "items": nonneg_int,
                                              "minItems": 3, "maxItems": 3}},
                        "supports": id_list,
                        "key_points": id_list,
                    }
                ),
                "offsets": {"type": "array",
                            "items": {"type": "array", "minItems": 2, "maxItems": 2}},
            }
        ),
        "snap_notice": obj(
            {"changed": {"type": "array", "items": {"type": "string"}, "minItems": 1}}
        ),
        "feedback": obj(
            {
                "enc1": {"enum": list(LABELS)},
                "enc2": {"enum": list(LABELS)},
                "enc3": {"enum": list(LABELS)},
                "stage": {"enum": list(STAGES)},
            }
        ),
        "overlay_data": obj(
            {"mode": {"enum": list(OVERLAY_MODES)}, "payload": {"type": "object"}}
        ),
        "phase_ack": obj(
            {"phase": {"enum": list(PHASES)}, "condition": {"enum": list(CONDITIONS) + [None]}}
        ),
        "error": obj({"code": {"type": "string"}, "detail": {"type": "string"}}),
    }
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "exodss wire frame",
        "description": "One newline-delimited JSON frame of the session protocol, "
                       f"version {PROTOCOL_VERSION}.",
        "type": "object",
        "properties": {
            "type": {"enum": list(MESSAGE_TYPES)},
            "session_id": {"type": ["string", "null"], "maxLength": 128},
            "revision": nonneg_int,
            "client_ms": nonneg_int,
            "body": {"type": "object"},
        },
        "required": ["type", "session_id", "revision", "body"],
        "additionalProperties": False,
        "allOf": [
            {
                "if": {"properties": {"type": {"const": t}}},
                "then": {"properties": {"body": schema}},
            }
            for t, schema in bodies.items()
        ],
    }
