"""Log replay: re-run every evaluation recorded in a session log and check
that the stored hashes and metric vectors come out identical.

Logs are self-contained: the SessionStart event embeds the full effective
server configuration, so replay needs nothing but the file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .config import config_from_dict
from .evaluation import EvaluationContext
from .model import apply_node_edit, config_hash, snap_to_valid


@dataclass
class ReplayReport:
    path: Path
    events: int = 0
    edits_checked: int = 0
    finals_checked: int = 0
    mismatches: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def replay_log(path: str | Path) -> ReplayReport:
    path = Path(path)
    report = ReplayReport(path=path)
    server_config = None
    ctx = None
    design = None
    pending: dict[int, object] = {}  # revision -> design awaiting its EvalFinal

    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            event = json.loads(line)
            report.events += 1
            kind = event["kind"]
            payload = event["payload"]

            if kind == "SessionStart":
                server_config = config_from_dict(payload["config"])
                ctx = EvaluationContext(server_config)
                design = server_config.initial_configuration()
            elif kind == "PhaseChange":
                if server_config is not None and payload["phase"] in ("Task1", "Task2"):
                    design = server_config.initial_configuration()
            elif kind == "EvalFast":
                if payload.get("baseline") and design is not None:
                    pending[payload["revision"]] = design
            elif kind == "Edit":
                if design is None or server_config is None:
                    report.mismatches.append(f"line {line_no}: Edit before SessionStart")
                    continue
                design = apply_node_edit(design, payload["node_id"], payload["delta"])
                design, _ = snap_to_valid(design, server_config.bounds)
                recomputed = config_hash(design)
                report.edits_checked += 1
                if recomputed != payload["config_hash"]:
                    report.mismatches.append(
                        f"line {line_no}: config hash {recomputed} != logged {payload['config_hash']}"
                    )
                pending[payload["revision"]] = design
            elif kind == "EvalFinal":
                revision = payload["revision"]
                target = pending.pop(revision, None)
                if target is None or ctx is None:
                    continue  # stale duplicates or pre-parse noise
                metrics = ctx.evaluate_full(target).metrics.as_dict()
                report.finals_checked += 1
                for name, logged in payload["metrics"].items():
                    if metrics[name] != logged:
                        report.mismatches.append(
                            f"line {line_no}: {name} recomputed {metrics[name]!r} != logged {logged!r}"
                        )
    return report
