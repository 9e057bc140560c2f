"""Shared corpus of valid wire frames (boundary values included) and a
byte-level mutator, used by the protocol tests and the acceptance gate."""

import random

from exodss.protocol import PROTOCOL_VERSION, WireMessage


def sample_messages() -> list[WireMessage]:
    """One representative per type, plus boundary-value variants."""
    sid = "p01-2a"
    graph = {
        "nodes": [[0, 0.0, 0.0, 0.0], [1, 2.0, -0.5, 0.0], [2, 0.0, 0.5, 2.0], [3, 2.0, 0.0, 2.0]],
        "members": [[0, 0, 1], [1, 2, 3], [2, 0, 3], [3, 1, 2]],
        "supports": [0, 1],
        "key_points": [2, 3],
    }
    return [
        WireMessage("hello", {"participant_id": "p01", "seed": 0, "version": PROTOCOL_VERSION,
                              "clock": "virtual", "first_condition": None}),
        WireMessage("hello", {"participant_id": "a" * 64, "seed": 2**63 - 1,
                              "version": PROTOCOL_VERSION, "clock": "real",
                              "first_condition": "nIDM"}, client_ms=0),
        WireMessage("edit_request", {"node_id": 0, "delta": -100.0}, sid, 1, client_ms=12),
        WireMessage("edit_request", {"node_id": 1_000_000, "delta": 100.0}, sid, 2**63 - 1),
        WireMessage("camera_pose", {"position": [-1e6, 1e6, 0.0], "direction": [0.0, 0.0, -1.0]}, sid),
        WireMessage("overlay_request", {"mode": "mesh"}, sid, 3),
        WireMessage("overlay_request", {"mode": "energy"}, sid, 3),
        WireMessage("phase_advance", {}, sid, 4),
        WireMessage("final_selection", {}, sid, 5),
        WireMessage("survey_response", {"items": [1, 5, 1, 5, 1, 5, 1, 5, 1, 5]}, sid, 6),
        WireMessage("hello_ack", {
            "session_id": sid, "version": PROTOCOL_VERSION, "participant_id": "p01",
            "seed": 42, "condition_order": ["nIDM", "IDM"], "phase": "Tutorial",
            "edit_step": 0.05,
            "grid": {"bays_x": 1, "bays_z": 1, "module_size": 2.0},
            "bounds": {"depth_min": 0.06, "depth_max": 0.4, "width_min": 0.06,
                       "width_max": 0.3, "lam_min": 1, "lam_max": 10, "offset_max": 0.5},
            "graph": graph,
            "offsets": [[2, 0.5], [3, -0.5]],
        }, sid),
        WireMessage("snap_notice", {"changed": ["node_offsets[2]"]}, sid, 7),
        WireMessage("feedback", {"enc1": "Improved", "enc2": "Neutral", "enc3": "Worsened",
                                 "stage": "Fast"}, sid, 8),
        WireMessage("feedback", {"enc1": "Worsened", "enc2": "Improved", "enc3": "Neutral",
                                 "stage": "Final"}, sid, 8),
        WireMessage("overlay_data", {"mode": "mesh",
                                     "payload": {"member_forces": [[0, -3.5], [1, 12.25]]}}, sid, 9),
        WireMessage("overlay_data", {"mode": "energy",
                                     "payload": {"heating": [0.0] * 12, "cooling": [1.5] * 12,
                                                 "solar": [2.0] * 12}}, sid, 9),
        WireMessage("phase_ack", {"phase": "Task1", "condition": "IDM"}, sid, 10),
        WireMessage("phase_ack", {"phase": "Survey", "condition": None}, sid, 11),
        WireMessage("error", {"code": "bad_phase", "detail": ""}, sid, 12),
    ]


def mutate(frame: bytes, rng: random.Random) -> bytes:
    """Random byte-level corruption of a valid frame."""
    data = bytearray(frame)
    op = rng.randrange(5)
    if op == 0 and data:  # flip a byte
        i = rng.randrange(len(data))
        data[i] = rng.randrange(256)
    elif op == 1 and data:  # delete a slice
        i = rng.randrange(len(data))
        j = min(len(data), i + rng.randint(1, 8))
        del data[i:j]
    elif op == 2:  # insert noise
        i = rng.randrange(len(data) + 1)
        data[i:i] = bytes(rng.randrange(256) for _ in range(rng.randint(1, 8)))
    elif op == 3:  # duplicate a slice
        i = rng.randrange(len(data))
        j = min(len(data), i + rng.randint(1, 16))
        data[i:i] = data[i:j]
    else:  # truncate
        data = data[: rng.randrange(len(data) + 1)]
    return bytes(data)
