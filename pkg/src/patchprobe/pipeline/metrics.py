"""Precision / recall / F1 with "patched" as the positive class."""

from __future__ import annotations

from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class Metrics:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float | None  # None when undefined
    recall: float | None
    f1: float | None
    unknown: int = 0         # Unknown verdicts, already counted as "vulnerable"

    @property
    def precision_undefined(self) -> bool:
        return self.precision is None

    @property
    def recall_undefined(self) -> bool:
        return self.recall is None

    @property
    def f1_undefined(self) -> bool:
        return self.f1 is None

    def to_dict(self):
        return asdict(self)


def _norm(v) -> str:
    v = getattr(v, "value", v)
    v = str(v).lower()
    if v in ("patched",):
        return "patched"
    if v in ("vulnerable", "pre-patch", "prepatch"):
        return "vulnerable"
    return "unknown"


def compute_metrics(pairs) -> Metrics:
    """`pairs` holds (ground_truth, verdict); Unknown predicts vulnerable."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("compute_metrics needs at least one pair")
    tp = fp = fn = tn = unknown = 0
    for truth, pred in pairs:
        truth, pred = _norm(truth), _norm(pred)
        if truth not in ("patched", "vulnerable"):
            raise ValueError(f"ground truth must be patched or vulnerable, got {truth!r}")
        if pred == "unknown":
            unknown += 1
            pred = "vulnerable"
        if truth == "patched":
            tp += pred == "patched"
            fn += pred != "patched"
        else:
            fp += pred == "patched"
            tn += pred != "patched"
    p = tp / (tp + fp) if tp + fp else None
    r = tp / (tp + fn) if tp + fn else None
    f1 = 2 * p * r / (p + r) if p is not None and r is not None and p + r > 0 else None
    return Metrics(tp, fp, fn, tn, p, r, f1, unknown)
