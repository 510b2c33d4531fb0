"""ROC sweep over confidence levels and trapezoidal AUC."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

# p-values and thresholds are rationals computed in floating point;
# equality within this slack counts as "p <= tau".
TAU_SLACK = 1e-12


def confidence_levels(step: float = 0.001) -> np.ndarray:
    """Evenly spaced levels from 0 to 1 inclusive."""
    n = int(round(1.0 / step))
    if n < 1 or not math.isclose(n * step, 1.0, rel_tol=1e-9):
        raise ValueError(f"step must divide 1 evenly, got {step}")
    return np.arange(n + 1) / n


def predict(p_values, levels) -> np.ndarray:
    """Anomalous iff p <= 1 - c; shape (len(p_values), len(levels))."""
    p = np.asarray(p_values, dtype=float)
    tau = 1.0 - np.asarray(levels, dtype=float)
    return p[..., None] <= tau + TAU_SLACK


@dataclass(frozen=True, eq=False)
class RocCurve:
    levels: np.ndarray
    fpr: np.ndarray  # one entry per level
    tpr: np.ndarray
    points: np.ndarray  # sorted, de-duplicated, anchored (fpr, tpr)
    auc: float  # nan when undefined
    defined: bool

    @property
    def tau(self) -> np.ndarray:
        return 1.0 - self.levels

    def to_rows(self):
        for c, t, f, p in zip(self.levels, self.tau, self.fpr, self.tpr):
            yield float(c), float(t), float(f), float(p)


def trapezoid_auc(points) -> float:
    pts = np.asarray(points, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) / 2.0))


def roc_from_predictions(predictions, truths, levels) -> RocCurve:
    """Build the ROC from a (bags x levels) boolean prediction matrix."""
    P = np.asarray(predictions, dtype=bool)
    truth = np.asarray(truths, dtype=bool)
    levels = np.asarray(levels, dtype=float)
    n_pos, n_neg = int(truth.sum()), int((~truth).sum())
    tp = P[truth].sum(axis=0)
    fp = P[~truth].sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        tpr = tp / n_pos if n_pos else np.full(len(levels), np.nan)
        fpr = fp / n_neg if n_neg else np.full(len(levels), np.nan)

    defined = n_pos > 0 and n_neg > 0
    if defined:
        pts = np.column_stack([fpr, tpr])
        pts = np.vstack([[0.0, 0.0], pts, [1.0, 1.0]])
        pts = np.unique(pts, axis=0)  # lexicographic: fpr then tpr
        auc = trapezoid_auc(pts)
    else:
        pts = np.empty((0, 2))
        auc = float("nan")
    return RocCurve(levels, np.asarray(fpr, float), np.asarray(tpr, float), pts, auc, defined)


def roc_from_verdicts(verdicts, truths=None, levels=None) -> RocCurve:
    if truths is None:
        truths = [v.truth for v in verdicts]
    if any(t is None for t in truths):
        raise ValueError("every verdict needs a ground-truth label")
    if levels is None:
        levels = verdicts[0].levels
    P = np.array([v.predictions for v in verdicts], dtype=bool).reshape(len(verdicts), len(levels))
    return roc_from_predictions(P, truths, levels)


def write_roc_csv(path, roc: RocCurve):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["confidence", "tau", "fpr", "tpr"])
        for row in roc.to_rows():
            w.writerow([repr(v) for v in row])


def write_summary_json(path, summary: dict):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, allow_nan=False, default=_jsonable)
        fh.write("\n")


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def auc_or_none(roc: RocCurve) -> Optional[float]:
    return roc.auc if roc.defined else None
