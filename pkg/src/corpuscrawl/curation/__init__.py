from .ctc import BACKEND, ctc_log_likelihood, ctc_log_loss, min_frames
from .scoring import (DEFAULT_THRESHOLD, PLOT_CAP, SWEEP_CAP, SWEEP_THRESHOLDS, ReferenceScorer,
                      ScoreDurationReport, Splits, SweepReport, UtterancePair, cap_scores,
                      filter_by_threshold, pairs_from_manifest, sample_splits, score_corpus,
                      score_duration_report, threshold_sweep)
from .stats import (LanguageHours, StatsSummary, duration_stats, language_hours, stats_table,
                    summarize, text_length_stats)
from .scripts import SCRIPTS, detect_scripts, script_counts

__all__ = [
    "BACKEND", "ctc_log_likelihood", "ctc_log_loss", "min_frames",
    "DEFAULT_THRESHOLD", "PLOT_CAP", "SWEEP_CAP", "SWEEP_THRESHOLDS", "ReferenceScorer",
    "ScoreDurationReport", "Splits", "SweepReport", "UtterancePair", "cap_scores",
    "filter_by_threshold", "pairs_from_manifest", "sample_splits", "score_corpus",
    "score_duration_report", "threshold_sweep",
    "LanguageHours", "StatsSummary", "duration_stats", "language_hours", "stats_table",
    "summarize", "text_length_stats",
    "SCRIPTS", "detect_scripts", "script_counts",
]
