"""Wire frames: round-trip identity, strict rejection, fuzz robustness."""

import json
import random

import pytest

from exodss.errors import DecodeError
from exodss.protocol import (
    MESSAGE_TYPES,
    WireMessage,
    build_protocol_schema,
    decode_message,
    encode_message,
    error_message,
)
from wire_samples import mutate, sample_messages


class TestRoundTrip:
    def test_every_type_round_trips(self):
        seen = set()
        for msg in sample_messages():
            seen.add(msg.type)
            assert decode_message(encode_message(msg)) == msg
        assert seen == set(MESSAGE_TYPES)

    def test_newline_terminated_single_line(self):
        frame = encode_message(sample_messages()[0])
        assert frame.endswith(b"\n")
        assert frame.count(b"\n") == 1

    def test_decode_accepts_str_and_bytes(self):
        msg = sample_messages()[2]
        frame = encode_message(msg)
        assert decode_message(frame.decode()) == msg


class TestRejection:
    def test_unknown_type(self):
        with pytest.raises(DecodeError):
            decode_message(json.dumps({"type": "warp", "session_id": None, "revision": 0, "body": {}}))

    def test_truncated_frame(self):
        frame = encode_message(sample_messages()[2])
        with pytest.raises(DecodeError) as err:
            decode_message(frame[: len(frame) // 2])
        assert err.value.offset is not None

    def test_unknown_envelope_field(self):
        with pytest.raises(DecodeError):
            decode_message(json.dumps({"type": "phase_advance", "session_id": "s", "revision": 0,
                                       "body": {}, "extra": 1}))

    def test_unknown_body_field(self):
        with pytest.raises(DecodeError):
            decode_message(json.dumps({"type": "edit_request", "session_id": "s", "revision": 0,
                                       "body": {"node_id": 1, "delta": 0.1, "color": "red"}}))

    def test_out_of_range_values(self):
        bad = [
            {"type": "edit_request", "session_id": "s", "revision": 0,
             "body": {"node_id": -1, "delta": 0.1}},
            {"type": "edit_request", "session_id": "s", "revision": 0,
             "body": {"node_id": 1, "delta": 101.0}},
            {"type": "edit_request", "session_id": "s", "revision": -1,
             "body": {"node_id": 1, "delta": 0.1}},
            {"type": "survey_response", "session_id": "s", "revision": 0,
             "body": {"items": [1, 2, 3, 4, 5, 1, 2, 3, 4, 6]}},
            {"type": "survey_response", "session_id": "s", "revision": 0,
             "body": {"items": [3] * 9}},
            {"type": "camera_pose", "session_id": "s", "revision": 0,
             "body": {"position": [0, 0, 0], "direction": [0, 0, 0]}},
            {"type": "hello", "session_id": None, "revision": 0,
             "body": {"participant_id": "../evil", "version": "v1", "clock": "real"}},
            {"type": "hello", "session_id": None, "revision": 0,
             "body": {"participant_id": "p", "version": "v0", "clock": "real"}},
            {"type": "feedback", "session_id": "s", "revision": 0,
             "body": {"enc1": "Great", "enc2": "Neutral", "enc3": "Neutral", "stage": "Fast"}},
        ]
        for raw in bad:
            with pytest.raises(DecodeError):
                decode_message(json.dumps(raw))

    def test_non_finite_numbers(self):
        # json.dumps would emit NaN/Infinity tokens; the decoder must refuse them
        raw = '{"type":"edit_request","session_id":"s","revision":0,"body":{"node_id":1,"delta":NaN}}'
        with pytest.raises(DecodeError):
            decode_message(raw)

    def test_oversized_frame(self):
        huge = b'{"type":"phase_advance","session_id":"' + b"a" * 2_000_000 + b'","revision":0,"body":{}}'
        with pytest.raises(DecodeError):
            decode_message(huge)

    def test_invalid_utf8(self):
        with pytest.raises(DecodeError):
            decode_message(b'{"type":"phase_advance","session_id":"\xff\xfe","revision":0,"body":{}}')


class TestFuzz:
    def test_fuzzed_frames_never_crash(self):
        rng = random.Random(20240)
        corpus = [encode_message(m) for m in sample_messages()]
        decoded = 0
        rejected = 0
        for i in range(10_000):
            frame = mutate(corpus[i % len(corpus)], rng)
            try:
                msg = decode_message(frame)
            except DecodeError:
                rejected += 1
            else:
                # surviving frames must themselves re-encode cleanly
                assert decode_message(encode_message(msg)) == msg
                decoded += 1
        assert decoded + rejected == 10_000
        assert rejected > 0


class TestSchemaFile:
    def test_shipped_schema_matches_generator(self):
        from importlib import resources

        shipped = json.loads(
            resources.files("exodss").joinpath("protocol_schema.json").read_text("utf-8")
        )
        assert shipped == build_protocol_schema()

    def test_valid_messages_pass_shipped_schema(self):
        import jsonschema

        validator = jsonschema.Draft202012Validator(build_protocol_schema())
        for msg in sample_messages():
            validator.validate(json.loads(encode_message(msg)))

    def test_error_helper_truncates_detail(self):
        msg = error_message("s", 1, "code", "x" * 5000)
        assert len(msg.body["detail"]) == 2048
        decode_message(encode_message(msg))
