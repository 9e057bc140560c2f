"""Encapsulated feedback: relative metric trends rolled up into three
domain labels.

The seven metrics split into structure (C1-C3), environment (C4-C6) and
fabrication (C7). A metric trends positively when it moves in its improving
direction by more than a relative epsilon band; a domain improves when at
least two of its three sub-metrics trend positively (the single-metric
fabrication domain follows its one trend). Lower is better everywhere except
solar gain (C6), which is a passive benefit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

DEFAULT_EPSILON = 0.005

METRIC_FIELDS = ("c1", "c2", "c3", "c4", "c5", "c6", "c7")
LOWER_IS_BETTER = {
    "c1": True,
    "c2": True,
    "c3": True,
    "c4": True,
    "c5": True,
    "c6": False,
    "c7": True,
}
DOMAINS = {
    "enc1": ("c1", "c2", "c3"),
    "enc2": ("c4", "c5", "c6"),
    "enc3": ("c7",),
}


class Trend(Enum):
    POSITIVE = "Positive"
    NEUTRAL = "Neutral"
    NEGATIVE = "Negative"


class FeedbackLabel(Enum):
    IMPROVED = "Improved"
    NEUTRAL = "Neutral"
    WORSENED = "Worsened"


class Stage(Enum):
    FAST = "Fast"
    FINAL = "Final"


@dataclass(frozen=True)
class MetricVector:
    c1: float  # max displacement, cm
    c2: float  # internal elastic energy, kNm
    c3: float  # structural mass, kg
    c4: float  # operational cost, CAD/year
    c5: float  # carbon, kg CO2/year
    c6: float  # solar gain, kWh/year
    c7: float  # fabrication complexity, dimensionless

    def check(self) -> None:
        for name in METRIC_FIELDS:
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
            if v < 0:
                raise ValueError(f"{name} must be non-negative, got {v}")
        if self.c3 <= 0:
            raise ValueError(f"c3 (mass) must be strictly positive, got {self.c3}")

    def as_dict(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in METRIC_FIELDS}

    @classmethod
    def from_dict(cls, d: Mapping[str, float]) -> "MetricVector":
        return cls(**{name: float(d[name]) for name in METRIC_FIELDS})


@dataclass(frozen=True)
class EncapsulatedFeedback:
    enc1: FeedbackLabel
    enc2: FeedbackLabel
    enc3: FeedbackLabel
    revision: int
    stage: Stage

    def labels(self) -> tuple[FeedbackLabel, FeedbackLabel, FeedbackLabel]:
        return (self.enc1, self.enc2, self.enc3)


def metric_trend(
    prev: float,
    curr: float,
    lower_is_better: bool,
    epsilon: float = DEFAULT_EPSILON,
) -> Trend:
    """Classify the relative change from prev to curr.

    The relative change r = (curr - prev) / |prev| must exceed epsilon in
    magnitude to leave the neutral band. A zero prev is handled by direction
    alone: staying at zero is neutral, any departure from zero counts as a
    full-size move in its direction.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if prev == 0.0:
        if curr == 0.0:
            return Trend.NEUTRAL
        grew = curr > 0.0
        improving = grew != lower_is_better
        return Trend.POSITIVE if improving else Trend.NEGATIVE
    r = (curr - prev) / abs(prev)
    if abs(r) <= epsilon:
        return Trend.NEUTRAL
    improving = (r < 0) == lower_is_better
    return Trend.POSITIVE if improving else Trend.NEGATIVE


def domain_label(trends: Sequence[Trend]) -> FeedbackLabel:
    """Roll sub-metric trends into one label: at least two of three positive
    trends mean improvement (a single-metric domain needs just its own)."""
    need = min(2, len(trends))
    positives = sum(t is Trend.POSITIVE for t in trends)
    negatives = sum(t is Trend.NEGATIVE for t in trends)
    if positives >= need:
        return FeedbackLabel.IMPROVED
    if negatives >= need:
        return FeedbackLabel.WORSENED
    return FeedbackLabel.NEUTRAL


def _encapsulate_trends(trends: Mapping[str, Trend], revision: int, stage: Stage) -> EncapsulatedFeedback:
    labels = {
        enc: domain_label([trends[m] for m in metrics])
        for enc, metrics in DOMAINS.items()
    }
    return EncapsulatedFeedback(
        enc1=labels["enc1"], enc2=labels["enc2"], enc3=labels["enc3"],
        revision=revision, stage=stage,
    )


def encapsulate(
    prev: MetricVector,
    curr: MetricVector,
    epsilon: float = DEFAULT_EPSILON,
    revision: int = 0,
    stage: Stage = Stage.FINAL,
) -> EncapsulatedFeedback:
    """Full seven-metric feedback for one revision."""
    trends = {
        name: metric_trend(getattr(prev, name), getattr(curr, name), LOWER_IS_BETTER[name], epsilon)
        for name in METRIC_FIELDS
    }
    return _encapsulate_trends(trends, revision, stage)


def encapsulate_partial(
    prev: MetricVector,
    curr: Mapping[str, float],
    epsilon: float = DEFAULT_EPSILON,
    revision: int = 0,
) -> EncapsulatedFeedback:
    """Fast-stage feedback from whichever metrics are already available;
    missing sub-metrics count as neutral."""
    trends = {}
    for name in METRIC_FIELDS:
        if name in curr:
            trends[name] = metric_trend(getattr(prev, name), curr[name], LOWER_IS_BETTER[name], epsilon)
        else:
            trends[name] = Trend.NEUTRAL
    return _encapsulate_trends(trends, revision, Stage.FAST)
