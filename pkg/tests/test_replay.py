"""Replay re-derives every logged hash and metric vector from the embedded
config and flags any divergence."""

import json

from exodss.agents import AgentRunSpec, run_agent_session
from exodss.config import default_config
from exodss.replay import replay_log
from exodss.server import ServerThread


def make_log(tmp_path, seed=13, edits=6):
    config = default_config()
    thread = ServerThread(config, log_dir=tmp_path)
    host, port = thread.start()
    try:
        spec = AgentRunSpec(policy="GreedyFeedback", seed=seed, edit_budget=edits,
                            participant_id="rp")
        result = run_agent_session(spec, host, port, server_config=config)
    finally:
        thread.stop()
    return tmp_path / f"{result.session_id}.jsonl"


class TestReplay:
    def test_agent_log_replays_clean(self, tmp_path):
        log = make_log(tmp_path)
        report = replay_log(log)
        assert report.ok
        assert report.edits_checked > 0
        assert report.finals_checked > report.edits_checked * 0  # baselines too

    def test_tampered_metric_detected(self, tmp_path):
        log = make_log(tmp_path, seed=14)
        lines = log.read_text().splitlines()
        for i, line in enumerate(lines):
            record = json.loads(line)
            if record["kind"] == "EvalFinal" and not record["payload"]["stale"]:
                record["payload"]["metrics"]["c3"] += 1.0
                lines[i] = json.dumps(record, sort_keys=True)
                break
        tampered = log.with_name("tampered.jsonl")
        tampered.write_text("\n".join(lines) + "\n")
        report = replay_log(tampered)
        assert not report.ok
        assert any("c3" in m for m in report.mismatches)

    def test_tampered_hash_detected(self, tmp_path):
        log = make_log(tmp_path, seed=15)
        lines = log.read_text().splitlines()
        for i, line in enumerate(lines):
            record = json.loads(line)
            if record["kind"] == "Edit":
                record["payload"]["config_hash"] = "0" * 16
                lines[i] = json.dumps(record, sort_keys=True)
                break
        tampered = log.with_name("tampered2.jsonl")
        tampered.write_text("\n".join(lines) + "\n")
        report = replay_log(tampered)
        assert not report.ok
