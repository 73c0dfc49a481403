from .heatmap import HeatmapMatrices, column_trend, heatmap_export, write_heatmap
from .metrics import (
    MetricError,
    MetricReport,
    ModelScorer,
    Scorer,
    SessionScorer,
    answer_probability,
    as_scorer,
    evaluate_records,
    format_compliance,
    metrics_frame,
    rouge_l,
    truth_ratio,
)
from .shift import ShiftError, ShiftTensor, logit_shift, project, shift_distance
from .sinkhorn import PointCloud, SinkhornConfig, SinkhornError, entropic_ot, sinkhorn_divergence, squared_euclidean

__all__ = [
    "HeatmapMatrices",
    "column_trend",
    "heatmap_export",
    "write_heatmap",
    "MetricError",
    "MetricReport",
    "ModelScorer",
    "Scorer",
    "SessionScorer",
    "answer_probability",
    "as_scorer",
    "evaluate_records",
    "format_compliance",
    "metrics_frame",
    "rouge_l",
    "truth_ratio",
    "ShiftError",
    "ShiftTensor",
    "logit_shift",
    "project",
    "shift_distance",
    "PointCloud",
    "SinkhornConfig",
    "SinkhornError",
    "entropic_ot",
    "sinkhorn_divergence",
    "squared_euclidean",
]
