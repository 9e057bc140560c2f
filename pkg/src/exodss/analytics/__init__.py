from .stats import (
    learning_slope,
    mann_whitney_u,
    paired_t,
    sus_score,
    trim_outliers,
    wilcoxon_signed_rank,
)
from .reports import ParsedSession, parse_session_log, run_analysis

__all__ = [
    "learning_slope",
    "mann_whitney_u",
    "paired_t",
    "sus_score",
    "trim_outliers",
    "wilcoxon_signed_rank",
    "ParsedSession",
    "parse_session_log",
    "run_analysis",
]
