"""Session orchestration: one participant, one connection, one event log.

The core is a transport-free state machine. Client frames go in; outbound
frames, log events, and deferred evaluation jobs come out. The expensive
part of an evaluation (truss solve + energy balance) is staged: the fast
metrics are computed inline and a Fast feedback frame goes out immediately,
while the full vector is delivered through `deliver_final`, which may run
later and out of order. A final result whose revision is no longer current
is stale: it is logged but never sent, and never becomes the comparison
baseline.

Log format: one file per session, `<session_id>.jsonl`, one event object per
line with exactly the keys ts_ms, kind, payload. Timestamps are monotonic
milliseconds, zero at SessionStart. Virtual-clock sessions (headless agents)
take time from the client_ms envelope field, which makes logs byte-for-byte
reproducible; real sessions use the server's monotonic clock.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, IO

from .config import ServerConfig, config_to_dict
from .errors import ClockRegression, ProtocolError, SupportNodeImmutable, UnknownNode
from .evaluation import EvaluationContext, FullResult
from .feedback import (
    EncapsulatedFeedback,
    MetricVector,
    Stage,
    encapsulate,
    encapsulate_partial,
)
from .model import DesignConfiguration, apply_node_edit, config_hash, generate_facade, snap_to_valid
from .protocol import PHASES, PROTOCOL_VERSION, WireMessage, error_message

EVENT_KINDS = (
    "SessionStart",
    "PhaseChange",
    "Edit",
    "Snap",
    "EvalFast",
    "EvalFinal",
    "FeedbackShown",
    "CameraPose",
    "FinalSelection",
    "SurveyResponse",
)

TASK_PHASES = ("Task1", "Task2")


@dataclass(frozen=True)
class SessionEvent:
    ts_ms: int
    kind: str
    payload: dict[str, Any]

    def to_json_line(self) -> str:
        return json.dumps(
            {"ts_ms": self.ts_ms, "kind": self.kind, "payload": self.payload},
            sort_keys=True,
            separators=(",", ":"),
        )


class SessionLogWriter:
    """Append-only JSONL writer, flushed per event so a crash loses at most
    the in-flight line."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh: IO[str] = open(self.path, "w", encoding="utf-8")
        self._last_ts: int | None = None

    def append(self, event: SessionEvent) -> None:
        if self._last_ts is not None and event.ts_ms < self._last_ts:
            raise ClockRegression(
                f"event at {event.ts_ms} ms after one at {self._last_ts} ms"
            )
        self._last_ts = event.ts_ms
        self._fh.write(event.to_json_line() + "\n")
        self._fh.flush()

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()


@dataclass
class FinalJob:
    revision: int
    design: DesignConfiguration


@dataclass
class HandleResult:
    outbound: list[WireMessage] = field(default_factory=list)
    events: list[SessionEvent] = field(default_factory=list)
    final_jobs: list[FinalJob] = field(default_factory=list)
    close: bool = False


def _snap_changes(before: DesignConfiguration, after: DesignConfiguration) -> list[str]:
    changed = []
    for name in ("depth", "width", "laminations"):
        if getattr(before.section, name) != getattr(after.section, name):
            changed.append(name)
    keys = set(before.node_offsets) | set(after.node_offsets)
    for nid in sorted(keys):
        if before.node_offsets.get(nid, 0.0) != after.node_offsets.get(nid, 0.0):
            changed.append(f"node_offsets[{nid}]")
    return changed


class SessionCore:
    """State machine for one session; owns no I/O."""

    def __init__(
        self,
        server_config: ServerConfig,
        ctx: EvaluationContext,
        participant_id: str,
        seed: int,
        clock: str = "real",
        first_condition: str | None = None,
    ):
        self.server_config = server_config
        self.ctx = ctx
        self.participant_id = participant_id
        self.seed = seed
        self.clock = clock
        self.session_id = f"{participant_id}-{seed:x}"
        self.rng = random.Random(seed)
        if first_condition is None:
            idm_first = self.rng.random() < 0.5
        else:
            idm_first = first_condition == "IDM"
        self.condition_order: tuple[str, str] = ("IDM", "nIDM") if idm_first else ("nIDM", "IDM")

        self.phase = "Tutorial"
        self.revision = 0
        self.current_config = server_config.initial_configuration()
        self.last_accepted_metrics: MetricVector | None = None
        self.survey_submitted = False
        self.last_full: FullResult | None = None
        self.closed = False

        self._t0: int | None = None
        self._last_abs = 0
        self._last_ts = 0

    # --- clock ----------------------------------------------------------

    def _now(self, msg: WireMessage | None, external_now_ms: int) -> int:
        if self.clock == "virtual":
            absolute = self._last_abs
            if msg is not None and msg.client_ms is not None:
                absolute = max(absolute, msg.client_ms)
            self._last_abs = absolute
        else:
            absolute = external_now_ms
        if self._t0 is None:
            self._t0 = absolute
        ts = max(absolute - self._t0, self._last_ts)
        self._last_ts = ts
        return ts

    # --- helpers ----------------------------------------------------------

    def condition_of(self, phase: str) -> str | None:
        if phase == "Task1":
            return self.condition_order[0]
        if phase == "Task2":
            return self.condition_order[1]
        return None

    @property
    def feedback_visible(self) -> bool:
        return self.phase in TASK_PHASES and self.condition_of(self.phase) == "IDM"

    def _event(self, ts: int, kind: str, payload: dict[str, Any]) -> SessionEvent:
        assert kind in EVENT_KINDS
        return SessionEvent(ts_ms=ts, kind=kind, payload=payload)

    def _feedback_message(self, fb: EncapsulatedFeedback) -> WireMessage:
        return WireMessage(
            type="feedback",
            session_id=self.session_id,
            revision=fb.revision,
            body={
                "enc1": fb.enc1.value,
                "enc2": fb.enc2.value,
                "enc3": fb.enc3.value,
                "stage": fb.stage.value,
            },
        )

    def _error(self, code: str, detail: str = "") -> WireMessage:
        return error_message(self.session_id, self.revision, code, detail)

    # --- entry points ----------------------------------------------------

    def handle_hello(self, msg: WireMessage, external_now_ms: int = 0) -> HandleResult:
        ts = self._now(msg, external_now_ms)
        result = HandleResult()
        result.events.append(
            self._event(
                ts,
                "SessionStart",
                {
                    "session_id": self.session_id,
                    "participant_id": self.participant_id,
                    "seed": self.seed,
                    "condition_order": list(self.condition_order),
                    "clock": self.clock,
                    "config": config_to_dict(self.server_config),
                },
            )
        )
        graph = generate_facade(self.current_config.grid, self.current_config)
        bounds = self.server_config.bounds
        result.outbound.append(
            WireMessage(
                type="hello_ack",
                session_id=self.session_id,
                revision=self.revision,
                body={
                    "session_id": self.session_id,
                    "version": PROTOCOL_VERSION,
                    "participant_id": self.participant_id,
                    "seed": self.seed,
                    "condition_order": list(self.condition_order),
                    "phase": self.phase,
                    "edit_step": self.server_config.edit_step,
                    "grid": {
                        "bays_x": self.current_config.grid.bays_x,
                        "bays_z": self.current_config.grid.bays_z,
                        "module_size": self.current_config.grid.module_size,
                    },
                    "bounds": {
                        "depth_min": bounds.depth_min,
                        "depth_max": bounds.depth_max,
                        "width_min": bounds.width_min,
                        "width_max": bounds.width_max,
                        "lam_min": bounds.lam_min,
                        "lam_max": bounds.lam_max,
                        "offset_max": bounds.offset_max,
                    },
                    "graph": {
                        "nodes": [[n.id, n.x, n.y, n.z] for n in graph.nodes],
                        "members": [[m.id, m.node_a, m.node_b] for m in graph.members],
                        "supports": sorted(graph.supports),
                        "key_points": sorted(graph.key_points),
                    },
                    "offsets": [
                        [nid, self.current_config.node_offsets[nid]]
                        for nid in sorted(self.current_config.node_offsets)
                    ],
                },
            )
        )
        return result

    def handle_message(self, msg: WireMessage, external_now_ms: int = 0) -> HandleResult:
        ts = self._now(msg, external_now_ms)
        if msg.session_id != self.session_id:
            return HandleResult(outbound=[self._error("unknown_session", f"got {msg.session_id!r}")])
        handler = {
            "edit_request": self._on_edit,
            "camera_pose": self._on_camera_pose,
            "overlay_request": self._on_overlay,
            "phase_advance": self._on_phase_advance,
            "final_selection": self._on_final_selection,
            "survey_response": self._on_survey,
        }.get(msg.type)
        if handler is None:
            # hello after start lands here too: valid frame, wrong time
            return HandleResult(outbound=[self._error("unexpected_type", msg.type)])
        try:
            return handler(msg, ts)
        except ProtocolError as exc:
            return HandleResult(outbound=[self._error(exc.code, exc.detail)])

    # --- message handlers ---------------------------------------------------

    def _on_edit(self, msg: WireMessage, ts: int) -> HandleResult:
        if self.phase not in ("Tutorial",) + TASK_PHASES:
            raise ProtocolError("bad_phase", f"cannot edit during {self.phase}")
        node_id = msg.body["node_id"]
        delta = float(msg.body["delta"])
        try:
            edited = apply_node_edit(self.current_config, node_id, delta)
        except UnknownNode as exc:
            raise ProtocolError("unknown_node", str(exc)) from exc
        except SupportNodeImmutable as exc:
            raise ProtocolError("support_immutable", str(exc)) from exc

        self.revision += 1
        snapped_config, snapped = snap_to_valid(edited, self.server_config.bounds)
        changes = _snap_changes(edited, snapped_config) if snapped else []
        self.current_config = snapped_config

        result = HandleResult()
        result.events.append(
            self._event(
                ts,
                "Edit",
                {
                    "revision": self.revision,
                    "node_id": node_id,
                    "delta": delta,
                    "config_hash": config_hash(self.current_config),
                },
            )
        )
        if snapped:
            result.events.append(
                self._event(ts, "Snap", {"revision": self.revision, "changed": changes})
            )
            result.outbound.append(
                WireMessage(
                    type="snap_notice",
                    session_id=self.session_id,
                    revision=self.revision,
                    body={"changed": changes},
                )
            )

        fast = self.ctx.evaluate_fast(self.current_config)
        result.events.append(
            self._event(
                ts,
                "EvalFast",
                {
                    "revision": self.revision,
                    "metrics": {"c3": fast.c3, "c7": fast.c7},
                    "shading": fast.shading,
                },
            )
        )
        if self.feedback_visible and self.last_accepted_metrics is not None:
            fb = encapsulate_partial(
                self.last_accepted_metrics,
                {"c3": fast.c3, "c7": fast.c7},
                self.server_config.epsilon,
                revision=self.revision,
            )
            result.outbound.append(self._feedback_message(fb))
            result.events.append(
                self._event(
                    ts,
                    "FeedbackShown",
                    {
                        "revision": self.revision,
                        "stage": fb.stage.value,
                        "enc1": fb.enc1.value,
                        "enc2": fb.enc2.value,
                        "enc3": fb.enc3.value,
                    },
                )
            )
        result.final_jobs.append(FinalJob(revision=self.revision, design=self.current_config))
        return result

    def deliver_final(
        self, revision: int, full: FullResult, external_now_ms: int = 0
    ) -> HandleResult:
        """Deliver a completed full evaluation back to the session.

        Stale results (a newer revision exists) are logged with a marker but
        never sent and never become the feedback baseline.
        """
        ts = self._now(None, external_now_ms)
        stale = revision < self.revision
        result = HandleResult()
        result.events.append(
            self._event(
                ts,
                "EvalFinal",
                {
                    "revision": revision,
                    "metrics": full.metrics.as_dict(),
                    "stale": stale,
                },
            )
        )
        if stale:
            return result
        prev = self.last_accepted_metrics
        if self.feedback_visible and prev is not None:
            fb = encapsulate(
                prev,
                full.metrics,
                self.server_config.epsilon,
                revision=revision,
                stage=Stage.FINAL,
            )
            result.outbound.append(self._feedback_message(fb))
            result.events.append(
                self._event(
                    ts,
                    "FeedbackShown",
                    {
                        "revision": revision,
                        "stage": fb.stage.value,
                        "enc1": fb.enc1.value,
                        "enc2": fb.enc2.value,
                        "enc3": fb.enc3.value,
                    },
                )
            )
        self.last_accepted_metrics = full.metrics
        self.last_full = full
        return result

    def _on_camera_pose(self, msg: WireMessage, ts: int) -> HandleResult:
        pos = [float(v) for v in msg.body["position"]]
        direction = [float(v) for v in msg.body["direction"]]
        norm = sum(c * c for c in direction) ** 0.5
        direction = [c / norm for c in direction]
        result = HandleResult()
        result.events.append(
            self._event(ts, "CameraPose", {"position": pos, "direction": direction})
        )
        return result

    def _on_overlay(self, msg: WireMessage, ts: int) -> HandleResult:
        if not self.feedback_visible:
            raise ProtocolError("overlay_unavailable", "overlays exist only with feedback enabled")
        if self.last_full is None:
            raise ProtocolError("overlay_unavailable", "no completed evaluation yet")
        mode = msg.body["mode"]
        if mode == "mesh":
            payload = {
                "member_forces": [
                    [mid, self.last_full.member_forces[mid]]
                    for mid in sorted(self.last_full.member_forces)
                ]
            }
        else:
            demand = self.last_full.demand
            payload = {
                "heating": list(demand.heating),
                "cooling": list(demand.cooling),
                "solar": list(demand.solar),
            }
        return HandleResult(
            outbound=[
                WireMessage(
                    type="overlay_data",
                    session_id=self.session_id,
                    revision=self.revision,
                    body={"mode": mode, "payload": payload},
                )
            ]
        )

    def _on_phase_advance(self, msg: WireMessage, ts: int) -> HandleResult:
        idx = PHASES.index(self.phase)
        if self.phase == "Done":
            raise ProtocolError("bad_phase", "session already complete")
        if self.phase == "Survey" and not self.survey_submitted:
            raise ProtocolError("survey_missing", "submit the questionnaire before finishing")
        new_phase = PHASES[idx + 1]
        self.phase = new_phase
        condition = self.condition_of(new_phase)
        result = HandleResult()
        result.events.append(
            self._event(ts, "PhaseChange", {"phase": new_phase, "condition": condition})
        )
        if new_phase in TASK_PHASES:
            # every task starts from the same pristine configuration
            self.current_config = self.server_config.initial_configuration()
            self.last_accepted_metrics = None
            self.last_full = None
            self.revision += 1
            fast = self.ctx.evaluate_fast(self.current_config)
            result.events.append(
                self._event(
                    ts,
                    "EvalFast",
                    {
                        "revision": self.revision,
                        "metrics": {"c3": fast.c3, "c7": fast.c7},
                        "shading": fast.shading,
                        "baseline": True,
                    },
                )
            )
            result.final_jobs.append(FinalJob(revision=self.revision, design=self.current_config))
        if new_phase == "Done":
            result.close = True
            self.closed = True
        result.outbound.append(
            WireMessage(
                type="phase_ack",
                session_id=self.session_id,
                revision=self.revision,
                body={"phase": new_phase, "condition": condition},
            )
        )
        return result

    def _on_final_selection(self, msg: WireMessage, ts: int) -> HandleResult:
        if self.phase not in TASK_PHASES:
            raise ProtocolError("bad_phase", f"cannot finalize during {self.phase}")
        result = HandleResult()
        result.events.append(
            self._event(
                ts,
                "FinalSelection",
                {"revision": self.revision, "config_hash": config_hash(self.current_config)},
            )
        )
        return result

    def _on_survey(self, msg: WireMessage, ts: int) -> HandleResult:
        if self.phase != "Survey":
            raise ProtocolError("bad_phase", f"survey not open during {self.phase}")
        self.survey_submitted = True
        result = HandleResult()
        result.events.append(
            self._event(ts, "SurveyResponse", {"items": list(msg.body["items"])})
        )
        return result


class SyncSessionRunner:
    """Drives a SessionCore with inline evaluation: every deferred job is
    computed and delivered before the next message is processed. This is the
    deterministic path used by the TCP server (per connection) and by
    replay."""

    def __init__(
        self,
        core: SessionCore,
        writer: SessionLogWriter | None = None,
    ):
        self.core = core
        self.writer = writer

    def _commit(self, result: HandleResult, external_now_ms: int) -> list[WireMessage]:
        outbound = list(result.outbound)
        events = list(result.events)
        for job in result.final_jobs:
            full = self.core.ctx.evaluate_full(job.design)
            more = self.core.deliver_final(job.revision, full, external_now_ms)
            outbound.extend(more.outbound)
            events.extend(more.events)
        if self.writer is not None:
            for event in events:
                self.writer.append(event)
        return outbound

    def handle_hello(self, msg: WireMessage, external_now_ms: int = 0) -> list[WireMessage]:
        return self._commit(self.core.handle_hello(msg, external_now_ms), external_now_ms)

    def handle(self, msg: WireMessage, external_now_ms: int = 0) -> list[WireMessage]:
        return self._commit(self.core.handle_message(msg, external_now_ms), external_now_ms)
