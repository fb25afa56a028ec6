from .metrics import ClassMetrics, RocCurve, auc_score, confusion, f1_score, roc

__all__ = ["ClassMetrics", "RocCurve", "auc_score", "confusion", "f1_score", "roc"]
