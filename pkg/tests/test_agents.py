"""Headless agents against a live server: determinism, policy semantics,
budget accounting, and revert exactness."""

import json
from pathlib import Path

import pytest

from exodss.agents import (
    AgentRunSpec,
    greedy_keep,
    parse_delay_model,
    run_agent_session,
    run_batch,
)
from exodss.config import default_config
from exodss.server import ServerThread


class TestGreedyRule:
    def fb(self, enc1, enc2, enc3):
        return {"enc1": enc1, "enc2": enc2, "enc3": enc3}

    def test_two_improved_accepts(self):
        assert greedy_keep(self.fb("Improved", "Improved", "Neutral"))

    def test_majority_worsened_reverts(self):
        assert not greedy_keep(self.fb("Worsened", "Worsened", "Improved"))

    def test_no_feedback_never_reverts(self):
        assert greedy_keep(None)

    def test_needs_at_least_one_improvement(self):
        assert not greedy_keep(self.fb("Neutral", "Neutral", "Neutral"))
        assert greedy_keep(self.fb("Improved", "Neutral", "Neutral"))
        assert not greedy_keep(self.fb("Improved", "Worsened", "Worsened"))


@pytest.fixture(scope="module")
def config():
    return default_config()


def run_once(config, log_dir, participant, seed, policy, edits, condition=None):
    thread = ServerThread(config, log_dir=log_dir)
    host, port = thread.start()
    try:
        spec = AgentRunSpec(
            policy=policy, seed=seed, edit_budget=edits,
            participant_id=participant, condition=condition,
        )
        result = run_agent_session(spec, host, port, server_config=config)
    finally:
        thread.stop()
    return result, Path(log_dir) / f"{result.session_id}.jsonl"


def events_of(log_path):
    return [json.loads(line) for line in log_path.read_text().splitlines()]


def edits_per_phase(events):
    counts = {}
    phase = "Tutorial"
    for e in events:
        if e["kind"] == "PhaseChange":
            phase = e["payload"]["phase"]
        elif e["kind"] == "Edit":
            counts[phase] = counts.get(phase, 0) + 1
    return counts


class TestDeterminism:
    def test_same_spec_identical_logs(self, config, tmp_path):
        _, log1 = run_once(config, tmp_path / "a", "det", 31, "GreedyFeedback", 12)
        _, log2 = run_once(config, tmp_path / "b", "det", 31, "GreedyFeedback", 12)
        assert log1.read_bytes() == log2.read_bytes()

    def test_different_seeds_differ(self, config, tmp_path):
        _, log1 = run_once(config, tmp_path / "a", "det", 1, "Random", 10)
        _, log2 = run_once(config, tmp_path / "b", "det", 2, "Random", 10)
        assert log1.read_bytes() != log2.read_bytes()


class TestPolicySemantics:
    def test_greedy_in_nidm_equals_random(self, config, tmp_path):
        # force nIDM for both tasks? cannot: order is a permutation. Force
        # nIDM first and compare the nIDM task segment across policies.
        _, greedy_log = run_once(config, tmp_path / "g", "same", 17, "GreedyFeedback", 10,
                                 condition="nIDM")
        _, random_log = run_once(config, tmp_path / "r", "same", 17, "Random", 10,
                                 condition="nIDM")
        def nidm_edits(path):
            phase = "Tutorial"
            out = []
            for e in events_of(path):
                if e["kind"] == "PhaseChange":
                    phase = e["payload"]["phase"]
                elif e["kind"] == "Edit" and phase == "Task1":
                    out.append((e["ts_ms"], e["payload"]["node_id"], e["payload"]["delta"],
                                e["payload"]["config_hash"]))
            return out
        assert nidm_edits(greedy_log) == nidm_edits(random_log)

    def test_budget_one_gives_one_edit_per_task(self, config, tmp_path):
        for policy in ("Random", "GreedyFeedback"):
            _, log = run_once(config, tmp_path / policy, "b1", 3, policy, 1)
            counts = edits_per_phase(events_of(log))
            assert counts.get("Task1") == 1 and counts.get("Task2") == 1

    def test_budget_is_upper_bound_on_edits(self, config, tmp_path):
        result, log = run_once(config, tmp_path / "cap", "cap", 5, "GreedyFeedback", 11)
        counts = edits_per_phase(events_of(log))
        assert counts["Task1"] <= 11 and counts["Task2"] <= 11

    def test_revert_restores_previous_hash(self, config, tmp_path):
        _, log = run_once(config, tmp_path / "rev", "rev", 23, "GreedyFeedback", 30,
                          condition="IDM")
        phase = "Tutorial"
        hashes = []
        for e in events_of(log):
            if e["kind"] == "PhaseChange":
                phase = e["payload"]["phase"]
            elif e["kind"] == "Edit" and phase == "Task1":
                hashes.append((e["payload"]["node_id"], e["payload"]["delta"],
                               e["payload"]["config_hash"]))
        # find a revert pair: consecutive edits on one node with opposite deltas
        reverted = [
            (a, b) for a, b in zip(hashes, hashes[1:])
            if a[0] == b[0] and a[1] == -b[1]
        ]
        assert reverted, "greedy rejected nothing in 30 edits; recalibrate"
        # the state after the revert equals the state before the proposal,
        # which is the hash of the edit before the pair
        for i, (a, b) in enumerate(zip(hashes, hashes[1:])):
            if a[0] == b[0] and a[1] == -b[1] and i >= 1:
                assert hashes[i - 1][2] == b[2]
                break

    def test_hillclimb_runs_and_logs(self, config, tmp_path):
        result, log = run_once(config, tmp_path / "hc", "hc", 19, "HillClimb", 8)
        assert result.edits_sent >= 8
        kinds = {e["kind"] for e in events_of(log)}
        assert "SurveyResponse" in kinds and "FinalSelection" in kinds


class TestSessionCompleteness:
    def test_full_flow_logged(self, config, tmp_path):
        _, log = run_once(config, tmp_path / "full", "full", 41, "Random", 4)
        events = events_of(log)
        kinds = [e["kind"] for e in events]
        assert kinds[0] == "SessionStart"
        assert kinds.count("PhaseChange") == 4  # Task1, Task2, Survey, Done
        assert "CameraPose" in kinds
        assert "SurveyResponse" in kinds
        assert kinds.count("FinalSelection") == 2
        # timestamps monotone
        ts = [e["ts_ms"] for e in events]
        assert ts == sorted(ts)

    def test_survey_neutral_answers(self, config, tmp_path):
        _, log = run_once(config, tmp_path / "sus", "sus", 43, "Random", 3)
        survey = [e for e in events_of(log) if e["kind"] == "SurveyResponse"]
        assert survey[0]["payload"]["items"] == [3] * 10


class TestBatch:
    def test_batch_runs_cohort(self, config, tmp_path):
        batch = run_batch(config, tmp_path / "cohort", n=3, seed_start=1,
                          policy="Random", edits=5, jobs=2)
        logs = sorted((tmp_path / "cohort").glob("*.jsonl"))
        assert len(logs) == 3
        assert len(batch.results) == 3
        orders = {r.condition_order for r in batch.results}
        assert orders <= {("IDM", "nIDM"), ("nIDM", "IDM")}


class TestDelayModel:
    def test_parse(self):
        assert parse_delay_model("none") == ("none", 0)
        assert parse_delay_model("constant:500") == ("constant", 500)
        assert parse_delay_model("jitter:800") == ("jitter", 800)
        with pytest.raises(ValueError):
            parse_delay_model("warp:9")

    def test_constant_delay_visible_in_log(self, config, tmp_path):
        thread = ServerThread(config, log_dir=tmp_path / "delay")
        host, port = thread.start()
        try:
            spec = AgentRunSpec(policy="Random", seed=2, edit_budget=4,
                                participant_id="dl", delay_model="constant:1000")
            result = run_agent_session(spec, host, port)
        finally:
            thread.stop()
        events = events_of(tmp_path / "delay" / f"{result.session_id}.jsonl")
        phase = "Tutorial"
        stamps = []
        for e in events:
            if e["kind"] == "PhaseChange":
                phase = e["payload"]["phase"]
            elif e["kind"] == "Edit" and phase == "Task1":
                stamps.append(e["ts_ms"])
        gaps = {b - a for a, b in zip(stamps, stamps[1:])}
        # the constant edit delay plus the deterministic pose tick
        assert len(gaps) == 1
        assert gaps.pop() >= 1000
