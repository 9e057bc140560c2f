"""Headless simulated participants.

Agents speak the real wire protocol over TCP and play a full session:
tutorial, both task phases, questionnaire. They are deliberately simple,
seeded decision rules, not models of human cognition; their role is to give
the experiment pipeline a deterministic cohort.

Policies:
  Random          propose a uniform random node push/pull, keep everything.
  GreedyFeedback  propose randomly; with feedback visible, keep an edit only
                  when at least two of the three domain labels are
                  non-worsened and at least one is improved, otherwise send
                  the inverse edit. Without feedback it degenerates to
                  Random with the same draws.
  HillClimb       calibration oracle: evaluates configurations locally with
                  the server's own config and keeps an edit only when a
                  scalarized objective improves. Sees more than a human
                  could; used to probe what the design space allows.

Every outbound frame is validated against the shipped JSON schema before it
is sent. Agents run a virtual clock (client_ms) advanced by their inter-edit
delay model, so session logs are reproducible byte for byte.
"""

from __future__ import annotations

import json
import random
import socket
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema

from .config import ServerConfig
from .errors import ConnectionLost, ProtocolError
from .evaluation import EvaluationContext
from .feedback import METRIC_FIELDS, LOWER_IS_BETTER, MetricVector
from .model import DesignConfiguration, apply_node_edit, snap_to_valid
from .protocol import PROTOCOL_VERSION, WireMessage, decode_message, encode_message
from .server import ServerThread

POLICIES = ("Random", "GreedyFeedback", "HillClimb")

_schema_validator: jsonschema.Draft202012Validator | None = None


def _validator() -> jsonschema.Draft202012Validator:
    global _schema_validator
    if _schema_validator is None:
        raw = resources.files("exodss").joinpath("protocol_schema.json").read_text("utf-8")
        _schema_validator = jsonschema.Draft202012Validator(json.loads(raw))
    return _schema_validator


def parse_delay_model(text: str) -> tuple[str, int]:
    """'none' | 'constant:<ms>' | 'jitter:<ms>' -> (kind, base_ms)."""
    if text == "none":
        return ("none", 0)
    kind, _, value = text.partition(":")
    if kind not in ("constant", "jitter") or not value.isdigit():
        raise ValueError(f"bad delay model {text!r}")
    return (kind, int(value))


def greedy_keep(feedback: dict | None) -> bool:
    """The greedy acceptance rule on the three domain labels.

    Keep an edit when at least two of the three labels are non-worsened and
    at least one shows improvement; without visible feedback there is
    nothing to judge by and every edit stands."""
    if feedback is None:
        return True
    labels = [feedback["enc1"], feedback["enc2"], feedback["enc3"]]
    non_worsened = sum(label != "Worsened" for label in labels)
    improved = sum(label == "Improved" for label in labels)
    return non_worsened >= 2 and improved >= 1


@dataclass(frozen=True)
class AgentRunSpec:
    policy: str
    seed: int
    edit_budget: int
    participant_id: str
    condition: str | None = None  # forces this condition first when set
    delay_model: str = "jitter:800"

    def check(self) -> None:
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}")
        if self.edit_budget < 1:
            raise ValueError("edit_budget must be >= 1")
        parse_delay_model(self.delay_model)


@dataclass
class AgentResult:
    session_id: str
    participant_id: str
    condition_order: tuple[str, str]
    edits_sent: int
    reverts_sent: int


class AgentConnection:
    """Blocking NDJSON client with schema-checked sends."""

    def __init__(self, host: str, port: int, timeout: float = 30.0):
        self.sock = socket.create_connection((host, port), timeout=timeout)
        self._buffer = b""

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass

    def send(self, msg: WireMessage) -> None:
        frame = encode_message(msg)
        _validator().validate(json.loads(frame))
        self.sock.sendall(frame)

    def recv(self) -> WireMessage:
        while b"\n" not in self._buffer:
            chunk = self.sock.recv(65536)
            if not chunk:
                raise ConnectionLost("server closed the connection")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        return decode_message(line + b"\n")

    def await_type(self, wanted: str, ignore: tuple[str, ...] = ()) -> WireMessage:
        """Read frames until one of type `wanted` arrives; frames in `ignore`
        are discarded, anything else is a protocol violation."""
        while True:
            msg = self.recv()
            if msg.type == wanted:
                return msg
            if msg.type == "error":
                raise ProtocolError(msg.body["code"], msg.body.get("detail", ""))
            if msg.type not in ignore:
                raise ProtocolError("unexpected_message", f"waiting for {wanted}, got {msg.type}")


class _Clock:
    def __init__(self, kind: str, base_ms: int):
        self.kind = kind
        self.base_ms = base_ms
        self.t_ms = 0

    def advance(self, rng: random.Random) -> None:
        if self.kind == "constant":
            self.t_ms += self.base_ms
        elif self.kind == "jitter":
            lo = max(1, self.base_ms // 2)
            self.t_ms += rng.randint(lo, self.base_ms + self.base_ms // 2)

    def tick(self, ms: int = 1) -> None:
        self.t_ms += ms


class AgentSession:
    def __init__(
        self,
        spec: AgentRunSpec,
        host: str,
        port: int,
        server_config: ServerConfig | None = None,
        local_ctx: EvaluationContext | None = None,
    ):
        spec.check()
        if spec.policy == "HillClimb" and server_config is None:
            raise ValueError("HillClimb needs the server config for its local oracle")
        self.spec = spec
        self.rng = random.Random(spec.seed)
        self.conn = AgentConnection(host, port)
        self.clock = _Clock(*parse_delay_model(spec.delay_model))
        self.server_config = server_config
        self.local_ctx = local_ctx
        self.session_id: str | None = None
        self.edit_step = 0.05
        self.free_nodes: list[int] = []
        self.grid_size = (1, 1, 1.0)
        self.condition_order: tuple[str, str] = ("IDM", "nIDM")
        self.edits_sent = 0
        self.reverts_sent = 0
        # HillClimb local state
        self._local_config: DesignConfiguration | None = None
        self._local_best: float | None = None
        self._pending: tuple[DesignConfiguration, float] | None = None

    # --- frame helpers ------------------------------------------------------

    def _send(self, type_: str, body: dict, revision: int = 0) -> None:
        self.conn.send(
            WireMessage(
                type=type_,
                session_id=self.session_id,
                revision=revision,
                body=body,
                client_ms=self.clock.t_ms,
            )
        )

    # --- session flow -------------------------------------------------------

    def run(self) -> AgentResult:
        try:
            self._hello()
            self._tutorial()
            for phase in ("Task1", "Task2"):
                condition = self._advance_phase(expect=phase)
                self._play_task(condition)
            self._advance_phase(expect="Survey")
            self._survey()
            self._advance_phase(expect="Done")
        finally:
            self.conn.close()
        return AgentResult(
            session_id=self.session_id or "",
            participant_id=self.spec.participant_id,
            condition_order=self.condition_order,
            edits_sent=self.edits_sent,
            reverts_sent=self.reverts_sent,
        )

    def _hello(self) -> None:
        body = {
            "participant_id": self.spec.participant_id,
            "seed": self.spec.seed,
            "version": PROTOCOL_VERSION,
            "clock": "virtual",
        }
        if self.spec.condition is not None:
            body["first_condition"] = self.spec.condition
        self.conn.send(WireMessage(type="hello", body=body, client_ms=0))
        ack = self.conn.await_type("hello_ack")
        self.session_id = ack.body["session_id"]
        self.edit_step = float(ack.body["edit_step"])
        self.condition_order = tuple(ack.body["condition_order"])
        grid = ack.body["grid"]
        self.grid_size = (grid["bays_x"], grid["bays_z"], grid["module_size"])
        supports = set(ack.body["graph"]["supports"])
        self.free_nodes = sorted(
            n[0] for n in ack.body["graph"]["nodes"] if n[0] not in supports
        )
        if self.spec.policy == "HillClimb":
            assert self.server_config is not None
            if self.local_ctx is None:
                self.local_ctx = EvaluationContext(self.server_config)
            self._local_config = self.server_config.initial_configuration()

    def _tutorial(self) -> None:
        # scripted warm-up: look around, nudge a node, put it back
        self._camera_pose()
        node = self.free_nodes[0]
        for delta in (self.edit_step, -self.edit_step):
            self.clock.advance(self.rng)
            self._send("edit_request", {"node_id": node, "delta": delta})
        self._camera_pose()

    def _advance_phase(self, expect: str) -> str | None:
        self.clock.tick(200)
        self._send("phase_advance", {})
        ack = self.conn.await_type("phase_ack", ignore=("feedback", "snap_notice"))
        if ack.body["phase"] != expect:
            raise ProtocolError("phase_mismatch", f"expected {expect}, got {ack.body['phase']}")
        return ack.body.get("condition")

    def _propose(self) -> tuple[int, float]:
        node = self.free_nodes[self.rng.randrange(len(self.free_nodes))]
        magnitude = self.rng.randint(1, 3)
        sign = 1 if self.rng.random() < 0.5 else -1
        return node, sign * magnitude * self.edit_step

    def _send_edit(self, node: int, delta: float, condition: str | None) -> dict | None:
        """Send one edit; in feedback-visible play, wait for and return the
        final-stage labels."""
        self.clock.advance(self.rng)
        self._send("edit_request", {"node_id": node, "delta": delta})
        self.edits_sent += 1
        if condition == "IDM":
            final = self.conn.await_type("feedback", ignore=("snap_notice",))
            while final.body["stage"] != "Final":
                final = self.conn.await_type("feedback", ignore=("snap_notice",))
            return final.body
        return None

    def _play_task(self, condition: str | None) -> None:
        budget = self.spec.edit_budget
        pose_every = max(1, budget // 6)
        steps = 0
        judging = self.spec.policy == "HillClimb" or (
            self.spec.policy == "GreedyFeedback" and condition == "IDM"
        )
        while budget > 0:
            if judging and budget == 1 and steps > 0:
                # never gamble the last credit on an unrevertable proposal
                break
            if steps % pose_every == 0:
                self._camera_pose()
            steps += 1
            node, delta = self._propose()
            feedback = self._send_edit(node, delta, condition)
            budget -= 1
            if not self._keep(node, delta, feedback, condition):
                if budget > 0:
                    self._send_edit(node, -delta, condition)
                    self.reverts_sent += 1
                    budget -= 1
                    self._local_revert()
                else:
                    # no budget left to undo; the proposal stands
                    self._local_accept(node, delta)
            else:
                self._local_accept(node, delta)
        self.clock.tick(300)
        self._send("final_selection", {})
        self._camera_pose()

    def _keep(self, node: int, delta: float, feedback: dict | None, condition: str | None) -> bool:
        policy = self.spec.policy
        if policy == "Random":
            return True
        if policy == "GreedyFeedback":
            return greedy_keep(feedback)
        # HillClimb: local oracle, independent of what the server shows
        assert self._local_config is not None and self.local_ctx is not None
        if self._local_best is None:
            self._local_best = self._objective(self._local_config)
        candidate, _ = snap_to_valid(
            apply_node_edit(self._local_config, node, delta), self.server_config.bounds
        )
        score = self._objective(candidate)
        if score < self._local_best:
            self._pending = (candidate, score)
            return True
        self._pending = None
        return False

    def _objective(self, design: DesignConfiguration) -> float:
        metrics = self.local_ctx.evaluate_full(design).metrics
        baseline = self._baseline_metrics()
        total = 0.0
        for name in METRIC_FIELDS:
            ref = getattr(baseline, name)
            if ref == 0:
                continue
            ratio = getattr(metrics, name) / ref
            total += ratio if LOWER_IS_BETTER[name] else -ratio
        return total

    def _baseline_metrics(self) -> MetricVector:
        if not hasattr(self, "_baseline_cache"):
            initial = self.server_config.initial_configuration()
            self._baseline_cache = self.local_ctx.evaluate_full(initial).metrics
        return self._baseline_cache

    def _local_accept(self, node: int, delta: float) -> None:
        if self.spec.policy != "HillClimb" or self._local_config is None:
            return
        pending = self._pending
        if pending is not None:
            self._local_config, self._local_best = pending
        else:
            self._local_config, _ = snap_to_valid(
                apply_node_edit(self._local_config, node, delta), self.server_config.bounds
            )
            self._local_best = self._objective(self._local_config)
        self._pending = None

    def _local_revert(self) -> None:
        self._pending = None

    def _camera_pose(self) -> None:
        bays_x, bays_z, module = self.grid_size
        width, height = bays_x * module, bays_z * module
        outside = self.rng.random() < 0.8
        y = self.rng.uniform(2.0, 8.0) * (1 if outside else -1)
        pos = [self.rng.uniform(-2.0, width + 2.0), y, self.rng.uniform(0.5, height)]
        target = [width / 2.0, 0.0, height / 2.0]
        direction = [t - p for t, p in zip(target, pos)]
        norm = sum(c * c for c in direction) ** 0.5
        direction = [c / norm for c in direction]
        self.clock.tick(50)
        self._send("camera_pose", {"position": pos, "direction": direction})

    def _survey(self) -> None:
        self.clock.tick(500)
        # fixed neutral answers
        self._send("survey_response", {"items": [3] * 10})


def run_agent_session(
    spec: AgentRunSpec,
    host: str,
    port: int,
    server_config: ServerConfig | None = None,
    local_ctx: EvaluationContext | None = None,
) -> AgentResult:
    return AgentSession(spec, host, port, server_config, local_ctx).run()


@dataclass
class BatchResult:
    log_dir: Path
    results: list[AgentResult]


def run_batch(
    config: ServerConfig,
    log_dir: str | Path,
    n: int = 24,
    seed_start: int = 1,
    policy: str = "GreedyFeedback",
    edits: int = 150,
    delay_model: str = "jitter:800",
    condition: str | None = None,
    participant_prefix: str = "p",
    jobs: int = 1,
    endpoint: tuple[str, int] | None = None,
) -> BatchResult:
    """Run a cohort of agents. Without an explicit endpoint a private server
    is started on an ephemeral port and stopped afterwards."""
    log_dir = Path(log_dir)
    specs = [
        AgentRunSpec(
            policy=policy,
            seed=seed_start + i,
            edit_budget=edits,
            participant_id=f"{participant_prefix}{i + 1:02d}",
            condition=condition,
            delay_model=delay_model,
        )
        for i in range(n)
    ]
    local_ctx = EvaluationContext(config) if policy == "HillClimb" else None

    server_thread: ServerThread | None = None
    if endpoint is None:
        server_thread = ServerThread(config, log_dir=log_dir)
        host, port = server_thread.start()
    else:
        host, port = endpoint
    try:
        if jobs <= 1:
            results = [run_agent_session(s, host, port, config, local_ctx) for s in specs]
        else:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                results = list(
                    pool.map(lambda s: run_agent_session(s, host, port, config, local_ctx), specs)
                )
    finally:
        if server_thread is not None:
            server_thread.stop()
    return BatchResult(log_dir=log_dir, results=results)
