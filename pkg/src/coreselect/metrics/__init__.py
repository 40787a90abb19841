"""Explanation metrics: DTW, scalogram MSE, rhythm slack, feature summaries."""

from .dtw import dtw_distance
from .peaks import (
    EXPECTED_BEATS_PER_WINDOW,
    SLACK_SENTINEL,
    PeakList,
    detect_r_peaks,
    slack_from_intervals,
)
from .summary import (
    FeatureSummary,
    MetricTriple,
    cwt_mse,
    resample_linear,
    score_against_summary,
    score_batch,
    score_sample,
    slack,
    summarize_curve,
    summarize_features,
    znorm,
)
from .wavelet import Scalogram, cwt, default_scales, ricker_taps, scalogram_mse

METRIC_ORDER: tuple[str, ...] = ("dtw", "mse", "slack")

__all__ = [
    "EXPECTED_BEATS_PER_WINDOW",
    "METRIC_ORDER",
    "SLACK_SENTINEL",
    "FeatureSummary",
    "MetricTriple",
    "PeakList",
    "Scalogram",
    "cwt",
    "cwt_mse",
    "default_scales",
    "detect_r_peaks",
    "dtw_distance",
    "resample_linear",
    "ricker_taps",
    "scalogram_mse",
    "score_against_summary",
    "score_batch",
    "score_sample",
    "slack",
    "slack_from_intervals",
    "summarize_curve",
    "summarize_features",
    "znorm",
]
