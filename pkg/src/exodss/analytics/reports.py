"""Offline analysis of session logs: decision pacing, rank tests, learning
slopes, final-decision outcomes, baseline deviations, questionnaire scores,
and spatial behavior. Everything lands in CSV files plus one human-readable
tests.txt; rendering is left to external tools.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from ..errors import MissingPhase, NoPoseData
from ..feedback import LOWER_IS_BETTER, METRIC_FIELDS
from .stats import (
    EXACT_U_LIMIT,
    learning_slope,
    mann_whitney_u,
    paired_t,
    sus_score,
    trim_outliers,
    wilcoxon_signed_rank,
)

CONDITIONS = ("IDM", "nIDM")
TASK_PHASES = ("Task1", "Task2")
SUS_BENCHMARK = 68.0
FINAL_DECISION_COUNT = 3
MAJORITY_FRACTION = 4 / 7  # blue-border rule: better than baseline in a majority


@dataclass
class TaskTrace:
    phase: str
    condition: str
    baseline_revision: int | None = None
    edits: list[tuple[int, int, int, float]] = field(default_factory=list)  # ts, revision, node, delta
    finals: dict[int, dict[str, float]] = field(default_factory=dict)  # fresh only
    final_selection_revision: int | None = None
    poses: list[tuple[list[float], list[float]]] = field(default_factory=list)


@dataclass
class ParsedSession:
    path: Path
    session_id: str = ""
    participant_id: str = ""
    seed: int = 0
    condition_order: tuple[str, str] = ("IDM", "nIDM")
    config: dict[str, Any] = field(default_factory=dict)
    tasks: dict[str, TaskTrace] = field(default_factory=dict)  # keyed by condition
    sus_items: list[int] | None = None

    def task(self, condition: str) -> TaskTrace | None:
        return self.tasks.get(condition)


def parse_session_log(path: str | Path) -> ParsedSession:
    """Read one .jsonl event log into a per-condition trace."""
    path = Path(path)
    session = ParsedSession(path=path)
    phase = "Tutorial"
    trace: TaskTrace | None = None
    pending_baseline: int | None = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                event = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: bad JSON: {exc}") from exc
            kind = event["kind"]
            payload = event["payload"]
            ts = event["ts_ms"]
            if kind == "SessionStart":
                session.session_id = payload["session_id"]
                session.participant_id = payload["participant_id"]
                session.seed = payload["seed"]
                session.condition_order = tuple(payload["condition_order"])
                session.config = payload.get("config", {})
            elif kind == "PhaseChange":
                phase = payload["phase"]
                if phase in TASK_PHASES:
                    trace = TaskTrace(phase=phase, condition=payload["condition"])
                    session.tasks[payload["condition"]] = trace
                    pending_baseline = None
                else:
                    trace = None
            elif kind == "Edit":
                if trace is not None:
                    trace.edits.append((ts, payload["revision"], payload["node_id"], payload["delta"]))
            elif kind == "EvalFast":
                if trace is not None and payload.get("baseline"):
                    pending_baseline = payload["revision"]
            elif kind == "EvalFinal":
                if trace is not None and not payload.get("stale", False):
                    trace.finals[payload["revision"]] = dict(payload["metrics"])
                    if pending_baseline is not None and payload["revision"] == pending_baseline:
                        trace.baseline_revision = payload["revision"]
                        pending_baseline = None
            elif kind == "FinalSelection":
                if trace is not None:
                    trace.final_selection_revision = payload["revision"]
            elif kind == "CameraPose":
                if trace is not None:
                    trace.poses.append((payload["position"], payload["direction"]))
            elif kind == "SurveyResponse":
                session.sus_items = [int(v) for v in payload["items"]]
    return session


def load_sessions(log_dir: str | Path) -> list[ParsedSession]:
    paths = sorted(Path(log_dir).glob("*.jsonl"))
    return [parse_session_log(p) for p in paths]


# --- decision times -------------------------------------------------------------


@dataclass(frozen=True)
class DecisionSample:
    participant_id: str
    condition: str
    attempt_index: int
    decision_time_s: float


def decision_samples(sessions: Sequence[ParsedSession]) -> list[DecisionSample]:
    """Gaps between consecutive edits within a task; the first edit of a
    phase has no predecessor and contributes nothing. Non-positive gaps
    (virtual clocks with no delay model) are dropped."""
    samples: list[DecisionSample] = []
    for session in sessions:
        for condition in CONDITIONS:
            trace = session.task(condition)
            if trace is None:
                continue
            times = [ts for ts, *_ in trace.edits]
            gaps = [(b - a) / 1000.0 for a, b in zip(times, times[1:])]
            index = 0
            for gap in gaps:
                if gap <= 0:
                    continue
                samples.append(DecisionSample(session.participant_id, condition, index, gap))
                index += 1
    return samples


# --- final decisions ---------------------------------------------------------------


@dataclass
class FinalDecisions:
    participant_id: str
    condition: str
    vectors: list[dict[str, float]]  # oldest to newest, up to k
    flagged: bool  # fewer than k available

    def mean(self, metric: str) -> float:
        return sum(v[metric] for v in self.vectors) / len(self.vectors)


def final_decisions(
    sessions: Sequence[ParsedSession], k: int = FINAL_DECISION_COUNT
) -> list[FinalDecisions]:
    """Last k evaluated decisions (edits with a fresh full evaluation)
    preceding the final selection, per participant and condition. A missing
    task phase raises; a missing selection event falls back to the end of
    the phase."""
    out: list[FinalDecisions] = []
    for session in sessions:
        for condition in CONDITIONS:
            trace = session.task(condition)
            if trace is None:
                raise MissingPhase(
                    f"{session.participant_id}: no {condition} task in {session.path.name}"
                )
            cutoff = trace.final_selection_revision
            decisions = [
                trace.finals[rev]
                for _, rev, _, _ in trace.edits
                if rev in trace.finals and (cutoff is None or rev <= cutoff)
            ]
            chosen = decisions[-k:]
            if not chosen:
                raise MissingPhase(
                    f"{session.participant_id}/{condition}: no evaluated decisions"
                )
            out.append(
                FinalDecisions(
                    participant_id=session.participant_id,
                    condition=condition,
                    vectors=chosen,
                    flagged=len(chosen) < k,
                )
            )
    return out


def improvement_flags(idm_mean: float, nidm_mean: float, metric: str) -> bool:
    if LOWER_IS_BETTER[metric]:
        return idm_mean < nidm_mean
    return idm_mean > nidm_mean


def percent_change(idm_mean: float, nidm_mean: float) -> float | None:
    if nidm_mean == 0:
        return None
    return (idm_mean - nidm_mean) / abs(nidm_mean) * 100.0


def bucket_of(improved_count: int) -> str:
    if improved_count >= 5:
        return "5-7"
    if improved_count >= 3:
        return "3-4"
    return "0-2"


# --- baseline deviation matrix ------------------------------------------------------


@dataclass
class BaselineRow:
    participant_id: str
    deviations_pct: dict[str, float | None]
    improved: dict[str, bool]
    fraction: float
    majority: bool


def baseline_deviation_matrix(
    decisions: Sequence[FinalDecisions],
) -> tuple[dict[str, float], list[BaselineRow]]:
    """Per-metric baseline = mean over every (participant, condition) final
    outcome; each row compares one participant's feedback-condition outcome
    against it, with a polarity-aware improvement overlay."""
    baseline: dict[str, float] = {}
    for metric in METRIC_FIELDS:
        values = [d.mean(metric) for d in decisions]
        baseline[metric] = sum(values) / len(values)
    rows: list[BaselineRow] = []
    for d in sorted(decisions, key=lambda d: d.participant_id):
        if d.condition != "IDM":
            continue
        deviations: dict[str, float | None] = {}
        improved: dict[str, bool] = {}
        for metric in METRIC_FIELDS:
            value = d.mean(metric)
            base = baseline[metric]
            deviations[metric] = None if base == 0 else (value - base) / abs(base) * 100.0
            improved[metric] = value < base if LOWER_IS_BETTER[metric] else value > base
        fraction = sum(improved.values()) / len(METRIC_FIELDS)
        rows.append(
            BaselineRow(
                participant_id=d.participant_id,
                deviations_pct=deviations,
                improved=improved,
                fraction=fraction,
                majority=fraction >= MAJORITY_FRACTION,
            )
        )
    return baseline, rows


# --- spatial summary ------------------------------------------------------------------


@dataclass
class SpatialRow:
    participant_id: str
    condition: str
    n_poses: int
    spread_x: float | None
    spread_z: float | None
    n_front: int
    n_rear: int
    n_inside: int
    n_outside: int


def spatial_summary(sessions: Sequence[ParsedSession]) -> list[SpatialRow]:
    """Positional spread and view-sphere hemisphere counts per participant
    and condition.

    The facade normal is +y. A pose looking along -y (at the facade from
    outside) marks the front hemisphere; looking along +y (outward from
    inside the building) marks the rear one. Position side is counted
    separately as inside (y < 0) versus outside."""
    rows: list[SpatialRow] = []
    for session in sorted(sessions, key=lambda s: s.participant_id):
        for condition in CONDITIONS:
            trace = session.task(condition)
            if trace is None:
                continue
            poses = trace.poses
            if not poses:
                rows.append(
                    SpatialRow(session.participant_id, condition, 0, None, None, 0, 0, 0, 0)
                )
                continue
            xs = [p[0][0] for p in poses]
            zs = [p[0][2] for p in poses]
            spread_x = statistics.pstdev(xs) if len(xs) > 1 else 0.0
            spread_z = statistics.pstdev(zs) if len(zs) > 1 else 0.0
            n_front = sum(1 for _, d in poses if d[1] <= 0)
            n_rear = len(poses) - n_front
            n_inside = sum(1 for p, _ in poses if p[1] < 0)
            rows.append(
                SpatialRow(
                    participant_id=session.participant_id,
                    condition=condition,
                    n_poses=len(poses),
                    spread_x=spread_x,
                    spread_z=spread_z,
                    n_front=n_front,
                    n_rear=n_rear,
                    n_inside=n_inside,
                    n_outside=len(poses) - n_inside,
                )
            )
    if not any(r.n_poses for r in rows):
        # summary still emitted, but flag the absence for the caller's log
        raise NoPoseData("no camera poses in any session")
    return rows


# --- the full pipeline ---------------------------------------------------------------


def _fmt(value: float | None) -> str:
    if value is None:
        return ""
    if isinstance(value, float) and (math.isnan(value) or math.isinf(value)):
        return str(value)
    return repr(float(value))


def _write_atomic(path: Path, text: str) -> None:
    # stage next to the target, then rename: readers never see a torn file
    staging = path.with_name(path.name + ".tmp")
    staging.write_text(text, encoding="utf-8")
    os.replace(staging, path)


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    _write_atomic(path, buffer.getvalue())


def read_sus_csv(path: str | Path) -> dict[str, list[int]]:
    """participant_id,q1..q10 -> items per participant."""
    out: dict[str, list[int]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for record in csv.DictReader(fh):
            items = [int(record[f"q{i}"]) for i in range(1, 11)]
            out[record["participant_id"]] = items
    return out


def run_analysis(
    log_dir: str | Path,
    out_dir: str | Path,
    sus_csv: str | Path | None = None,
    exact_p: bool = False,
    k: int = FINAL_DECISION_COUNT,
) -> dict[str, Path]:
    """Ingest every session log and write the full table set. Returns the
    mapping of artifact name to written path."""
    sessions = load_sessions(log_dir)
    if not sessions:
        raise MissingPhase(f"no .jsonl session logs under {log_dir}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    report: list[str] = []

    # decision times ------------------------------------------------------
    samples = decision_samples(sessions)
    path = out / "decision_times.csv"
    _write_csv(
        path,
        ["participant_id", "condition", "attempt_index", "decision_time_s"],
        [
            (s.participant_id, s.condition, s.attempt_index, _fmt(s.decision_time_s))
            for s in samples
        ],
    )
    written["decision_times"] = path

    by_condition = {c: [s.decision_time_s for s in samples if s.condition == c] for c in CONDITIONS}
    report.append("== decision times ==")
    report.append(
        f"decisions: IDM={len(by_condition['IDM'])} nIDM={len(by_condition['nIDM'])}"
    )
    if all(by_condition.values()):
        for label, series in (("raw", by_condition), ("trimmed5pct", {
            c: trim_outliers(v, 0.05) for c, v in by_condition.items()
        })):
            means = {c: statistics.mean(v) for c, v in series.items()}
            medians = {c: statistics.median(v) for c, v in series.items()}
            report.append(
                f"{label}: mean IDM={means['IDM']:.4f}s nIDM={means['nIDM']:.4f}s "
                f"median IDM={medians['IDM']:.4f}s nIDM={medians['nIDM']:.4f}s"
            )
        u = mann_whitney_u(by_condition["IDM"], by_condition["nIDM"])
        report.append(f"mann_whitney: U={u.u:.1f} p={u.p:.6f} method={u.method}")
        if exact_p and min(len(by_condition["IDM"]), len(by_condition["nIDM"])) <= EXACT_U_LIMIT:
            ue = mann_whitney_u(by_condition["IDM"], by_condition["nIDM"], exact=True)
            report.append(f"mann_whitney_exact: U={ue.u:.1f} p={ue.p:.6f}")
        diffs = _attempt_paired_diffs(samples)
        if any(d != 0 for d in diffs):
            w = wilcoxon_signed_rank(diffs, exact=exact_p and len(diffs) <= 12)
            report.append(
                f"wilcoxon_attempt_paired: W={w.w:.1f} p={w.p:.6f} n={w.n_nonzero} method={w.method}"
            )
    else:
        report.append("one condition has no decision samples; tests skipped")

    # learning slopes ------------------------------------------------------
    slope_rows = []
    slopes_by_condition: dict[str, dict[str, float]] = {c: {} for c in CONDITIONS}
    for session in sorted(sessions, key=lambda s: s.participant_id):
        for condition in CONDITIONS:
            series = [
                s.decision_time_s
                for s in samples
                if s.participant_id == session.participant_id and s.condition == condition
            ]
            if len(series) >= 2:
                slope = learning_slope(series)
                slopes_by_condition[condition][session.participant_id] = slope
                slope_rows.append((session.participant_id, condition, len(series), _fmt(slope)))
    path = out / "slopes.csv"
    _write_csv(path, ["participant_id", "condition", "n_samples", "slope_s_per_attempt"], slope_rows)
    written["slopes"] = path

    report.append("== learning slopes ==")
    for condition in CONDITIONS:
        values = list(slopes_by_condition[condition].values())
        if values:
            sd = statistics.stdev(values) if len(values) > 1 else 0.0
            report.append(
                f"{condition}: mean_slope={statistics.mean(values):.6f} sd={sd:.6f} n={len(values)}"
            )
    shared = sorted(set(slopes_by_condition["IDM"]) & set(slopes_by_condition["nIDM"]))
    if len(shared) >= 2:
        slope_diffs = [
            slopes_by_condition["IDM"][p] - slopes_by_condition["nIDM"][p] for p in shared
        ]
        t, p_value = paired_t(slope_diffs)
        report.append(
            f"paired_t_slopes: mean_diff={statistics.mean(slope_diffs):.6f} "
            f"t={t:.4f} p={p_value:.6f} n={len(shared)}"
        )

    # final decisions ------------------------------------------------------
    decisions = final_decisions(sessions, k=k)
    rows = []
    for d in sorted(decisions, key=lambda d: (d.participant_id, d.condition)):
        for rank, vec in enumerate(d.vectors, start=1):
            rows.append(
                [d.participant_id, d.condition, rank, len(d.vectors), int(d.flagged)]
                + [_fmt(vec[m]) for m in METRIC_FIELDS]
            )
    path = out / "final_decisions.csv"
    _write_csv(
        path,
        ["participant_id", "condition", "decision_rank", "n_available", "flagged"]
        + list(METRIC_FIELDS),
        rows,
    )
    written["final_decisions"] = path

    by_participant: dict[str, dict[str, FinalDecisions]] = {}
    for d in decisions:
        by_participant.setdefault(d.participant_id, {})[d.condition] = d
    pct_changes: dict[str, list[float]] = {m: [] for m in METRIC_FIELDS}
    improving_counts: dict[str, int] = {m: 0 for m in METRIC_FIELDS}
    buckets: dict[str, int] = {"5-7": 0, "3-4": 0, "0-2": 0}
    complete = [p for p, conds in sorted(by_participant.items()) if set(conds) == set(CONDITIONS)]
    for participant in complete:
        idm = by_participant[participant]["IDM"]
        nidm = by_participant[participant]["nIDM"]
        improved_count = 0
        for metric in METRIC_FIELDS:
            change = percent_change(idm.mean(metric), nidm.mean(metric))
            if change is not None:
                pct_changes[metric].append(change)
            if improvement_flags(idm.mean(metric), nidm.mean(metric), metric):
                improving_counts[metric] += 1
                improved_count += 1
        buckets[bucket_of(improved_count)] += 1

    report.append(f"== final decisions (last {k}) ==")
    report.append(f"participants with both conditions: {len(complete)}")
    if complete:
        report.append("mean percent change with feedback vs without, per metric:")
        for metric in METRIC_FIELDS:
            if pct_changes[metric]:
                report.append(f"  {metric}: {statistics.mean(pct_changes[metric]):+.2f}%")
        report.append("participants improving per metric:")
        shares = {}
        for metric in METRIC_FIELDS:
            share = improving_counts[metric] / len(complete) * 100.0
            shares[metric] = share
            report.append(f"  {metric}: {improving_counts[metric]}/{len(complete)} ({share:.1f}%)")
        ranking = sorted(METRIC_FIELDS, key=lambda m: (-shares[m], m))
        report.append(f"top3_improved_metrics: {','.join(ranking[:3])}")
        total = len(complete)
        report.append(
            "improvement buckets: "
            + " ".join(
                f"{name}: {buckets[name]} ({buckets[name] / total * 100.0:.1f}%)"
                for name in ("5-7", "3-4", "0-2")
            )
        )

    # baseline deviation matrix ---------------------------------------------
    baseline, matrix_rows = baseline_deviation_matrix(decisions)
    rows = []
    for r in matrix_rows:
        rows.append(
            [r.participant_id]
            + [_fmt(r.deviations_pct[m]) for m in METRIC_FIELDS]
            + [int(r.improved[m]) for m in METRIC_FIELDS]
            + [_fmt(r.fraction), int(r.majority)]
        )
    path = out / "baseline_matrix.csv"
    _write_csv(
        path,
        ["participant_id"]
        + [f"{m}_pct_dev" for m in METRIC_FIELDS]
        + [f"{m}_improved" for m in METRIC_FIELDS]
        + ["fraction_improved", "majority"],
        rows,
    )
    written["baseline_matrix"] = path

    # sus --------------------------------------------------------------------
    sus_items: dict[str, list[int]] = {}
    for session in sessions:
        if session.sus_items is not None:
            sus_items[session.participant_id] = session.sus_items
    if sus_csv is not None:
        sus_items.update(read_sus_csv(sus_csv))
    rows = []
    scores = []
    for participant in sorted(sus_items):
        score = sus_score(sus_items[participant])
        scores.append(score)
        rows.append([participant, _fmt(score), "", "", "", ""])
    if scores:
        mean = statistics.mean(scores)
        sd = statistics.stdev(scores) if len(scores) > 1 else 0.0
        rows.append(
            [
                "cohort",
                _fmt(mean),
                _fmt(sd),
                _fmt(min(scores)),
                _fmt(max(scores)),
                "above" if mean > SUS_BENCHMARK else "below",
            ]
        )
        report.append("== sus ==")
        report.append(
            f"n={len(scores)} mean={mean:.2f} sd={sd:.2f} range=[{min(scores):.1f}, {max(scores):.1f}] "
            f"benchmark68={'above' if mean > SUS_BENCHMARK else 'below'}"
        )
    path = out / "sus.csv"
    _write_csv(
        path,
        ["participant_id", "score", "sd", "min", "max", "vs_benchmark_68"],
        rows,
    )
    written["sus"] = path

    # spatial ------------------------------------------------------------------
    try:
        spatial_rows = spatial_summary(sessions)
    except NoPoseData:
        spatial_rows = []
        report.append("spatial: no camera poses logged")
    path = out / "spatial.csv"
    _write_csv(
        path,
        [
            "participant_id", "condition", "n_poses", "spread_x_m", "spread_z_m",
            "n_front", "n_rear", "n_inside", "n_outside",
        ],
        [
            (
                r.participant_id, r.condition, r.n_poses, _fmt(r.spread_x), _fmt(r.spread_z),
                r.n_front, r.n_rear, r.n_inside, r.n_outside,
            )
            for r in spatial_rows
        ],
    )
    written["spatial"] = path

    path = out / "tests.txt"
    _write_atomic(path, "\n".join(report) + "\n")
    written["tests"] = path
    return written


def _attempt_paired_diffs(samples: Sequence[DecisionSample]) -> list[float]:
    """Pair decision times by attempt index within each participant."""
    by_key: dict[tuple[str, str], list[float]] = {}
    for s in samples:
        by_key.setdefault((s.participant_id, s.condition), []).append(s.decision_time_s)
    participants = sorted({p for p, _ in by_key})
    diffs: list[float] = []
    for participant in participants:
        idm = by_key.get((participant, "IDM"), [])
        nidm = by_key.get((participant, "nIDM"), [])
        for a, b in zip(idm, nidm):
            diffs.append(a - b)
    return diffs
