"""Classification metric suite (the 9 selection metrics plus per-class PR
curves) and performance-profile curves over method x problem objective
tables.

Profile curves follow the ratio-to-best construction: for method s and
problem p, r = obj(p, s) / min over applicable methods of obj(p, .), and
rho_s(tau) is the fraction of problems with r <= tau. Inapplicable cells
get an infinite ratio and only register at the tau = inf sentinel, while
still counting in the denominator.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence

import numpy as np

METRICS = (
    "micro_f1",
    "weighted_f1",
    "accuracy",
    "balanced_accuracy",
    "precision",
    "recall",
    "cohen_kappa",
    "jaccard",
    "matthews",
)

RATIO_EPS = 1e-9


def _confusion(pred: np.ndarray, gold: np.ndarray):
    labels = np.unique(np.concatenate([gold, pred]))
    index = {int(c): i for i, c in enumerate(labels)}
    L = len(labels)
    cm = np.zeros((L, L), dtype=np.int64)
    for g, p in zip(gold, pred):
        cm[index[int(g)], index[int(p)]] += 1
    return cm, labels


def _per_class(cm: np.ndarray):
    tp = np.diag(cm).astype(np.float64)
    fp = cm.sum(axis=0) - tp
    fn = cm.sum(axis=1) - tp
    return tp, fp, fn


def _safe_div(a, b):
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    out = np.zeros_like(a)
    np.divide(a, b, out=out, where=b > 0)
    return out


def score(metric: str, predictions, gold, covered=None) -> float:
    """One of the 9 standard metrics, computed over covered points only.

    Multiclass precision/recall/Jaccard are macro-averaged over the classes
    present in gold or predictions (0/0 conventions resolve to 0); MCC uses
    the multiclass generalization; kappa and MCC are 0 when their chance
    normalizer degenerates. Empty coverage scores 0.
    """
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    pred = np.asarray(predictions, dtype=np.int64)
    y = np.asarray(gold, dtype=np.int64)
    if covered is not None:
        mask = np.asarray(covered, dtype=bool)
        pred, y = pred[mask], y[mask]
    if pred.size == 0:
        return 0.0

    cm, labels = _confusion(pred, y)
    tp, fp, fn = _per_class(cm)
    total = cm.sum()
    acc = float(tp.sum() / total)

    if metric in ("accuracy", "micro_f1"):
        # micro-averaged F1 equals accuracy for single-label predictions
        return acc
    if metric == "balanced_accuracy":
        support = cm.sum(axis=1)
        present = support > 0
        return float(_safe_div(tp, cm.sum(axis=1))[present].mean())
    if metric == "precision":
        return float(_safe_div(tp, tp + fp).mean())
    if metric == "recall":
        return float(_safe_div(tp, tp + fn).mean())
    if metric == "jaccard":
        return float(_safe_div(tp, tp + fp + fn).mean())
    if metric == "weighted_f1":
        prec = _safe_div(tp, tp + fp)
        rec = _safe_div(tp, tp + fn)
        f1 = _safe_div(2 * prec * rec, prec + rec)
        support = cm.sum(axis=1)
        return float((f1 * support).sum() / total)
    if metric == "cohen_kappa":
        pe = float((cm.sum(axis=0) * cm.sum(axis=1)).sum()) / (total * total)
        if 1.0 - pe <= 0:
            return 0.0
        return float((acc - pe) / (1.0 - pe))
    if metric == "matthews":
        t = cm.sum(axis=1).astype(np.float64)
        p = cm.sum(axis=0).astype(np.float64)
        s = float(total)
        c = float(tp.sum())
        num = c * s - float((p * t).sum())
        den = np.sqrt(max(s * s - float((p * p).sum()), 0.0)) * np.sqrt(
            max(s * s - float((t * t).sum()), 0.0))
        if den <= 0:
            return 0.0
        return float(num / den)
    raise AssertionError(metric)


def weighted_score(weights, predictions, gold, covered=None) -> float:
    """Convex combination of the 9 metrics (weights in METRICS order)."""
    w = np.asarray(weights, dtype=np.float64)
    out = 0.0
    for wi, metric in zip(w, METRICS):
        if wi > 0:
            out += wi * score(metric, predictions, gold, covered)
    return float(out)


def pr_curves(posterior, gold) -> List[List[tuple]]:
    """Per-class precision-recall points from a posterior threshold sweep.

    For class c, thresholds run over the unique values of posterior[:, c]
    in descending order; each yields (recall, precision) with predicted
    positives = {posterior_c >= threshold}. Zero predicted positives score
    precision 1; a class with no gold members scores recall 0.
    """
    post = np.asarray(posterior, dtype=np.float64)
    y = np.asarray(gold, dtype=np.int64)
    curves = []
    for c in range(post.shape[1]):
        col = post[:, c]
        positives = int((y == c).sum())
        points = []
        for threshold in np.unique(col)[::-1]:
            predicted = col >= threshold
            pp = int(predicted.sum())
            tp = int((predicted & (y == c)).sum())
            precision = tp / pp if pp > 0 else 1.0
            recall = tp / positives if positives > 0 else 0.0
            points.append((recall, precision))
        curves.append(points)
    return curves


@dataclass
class ObjectiveTable:
    """Nonnegative objectives per (method, problem); NaN marks a cell where
    the method is inapplicable (never zero)."""

    methods: list
    problems: list
    values: np.ndarray  # |S| x |P|, NaN = inapplicable
    objective_kind: str  # classification_error | one_minus_coverage

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (len(self.methods), len(self.problems)):
            raise ValueError("values shape must be |methods| x |problems|")
        finite = self.values[~np.isnan(self.values)]
        if finite.size and (not np.all(np.isfinite(finite)) or finite.min() < 0):
            raise ValueError("objectives must be finite and nonnegative")


@dataclass
class ProfileCurve:
    method: str
    tau: np.ndarray  # increasing, >= 1, last entry is the inf sentinel
    rho: np.ndarray  # nondecreasing fractions in [0, 1]


def default_tau_grid(points: int = 100, tau_max: float = 32.0) -> np.ndarray:
    return np.logspace(0.0, np.log10(tau_max), points)


def performance_profile(table: ObjectiveTable, tau_grid=None) -> List[ProfileCurve]:
    """Curves rho_s(tau) = fraction of problems where method s is within a
    factor tau of the best applicable method.

    An exact minimum maps to ratio 1 even when the minimum is 0; otherwise
    the ratio denominator is floored at RATIO_EPS. The denominator of rho
    is the full problem count, so inapplicable cells depress every finite
    point of a method's curve.
    """
    if tau_grid is None:
        tau_grid = default_tau_grid()
    tau = np.append(np.asarray(tau_grid, dtype=np.float64), np.inf)

    n_methods, n_problems = table.values.shape
    ratios = np.full((n_methods, n_problems), np.inf)
    for p in range(n_problems):
        col = table.values[:, p]
        applicable = ~np.isnan(col)
        if not applicable.any():
            raise ValueError(f"problem {table.problems[p]!r} has no applicable method")
        best = float(col[applicable].min())
        denom = max(best, RATIO_EPS)
        for s in range(n_methods):
            if applicable[s]:
                ratios[s, p] = 1.0 if col[s] == best else col[s] / denom

    curves = []
    for s, method in enumerate(table.methods):
        rho = np.array([(ratios[s] <= t).sum() / n_problems for t in tau])
        curves.append(ProfileCurve(method, tau, rho))
    return curves


def write_objective_table(path, table: ObjectiveTable) -> None:
    with Path(path).open("w", encoding="ascii") as fh:
        fh.write(f"objective_kind,{table.objective_kind}\n")
        fh.write("method," + ",".join(table.problems) + "\n")
        for method, row in zip(table.methods, table.values):
            cells = ["na" if np.isnan(v) else repr(float(v)) for v in row]
            fh.write(method + "," + ",".join(cells) + "\n")


def read_objective_table(path) -> ObjectiveTable:
    lines = Path(path).read_text(encoding="ascii").splitlines()
    first = lines[0].split(",")
    if first[0] != "objective_kind" or len(first) != 2:
        raise ValueError(f"{path}: row 1: expected 'objective_kind,<kind>'")
    problems = lines[1].split(",")[1:]
    methods, rows = [], []
    for line in lines[2:]:
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 1 + len(problems):
            raise ValueError(f"{path}: malformed row {parts[0]!r}")
        methods.append(parts[0])
        rows.append([np.nan if cell == "na" else float(cell) for cell in parts[1:]])
    return ObjectiveTable(methods, problems, np.asarray(rows), first[1])


def write_profile_curves(csv_path, json_path, curves: Sequence[ProfileCurve]) -> None:
    with Path(csv_path).open("w", encoding="ascii") as fh:
        fh.write("method,tau,rho\n")
        for curve in curves:
            for t, r in zip(curve.tau, curve.rho):
                tcell = "inf" if np.isinf(t) else repr(float(t))
                fh.write(f"{curve.method},{tcell},{repr(float(r))}\n")
    blob = {
        "curves": [
            {
                "method": c.method,
                "points": [["inf" if np.isinf(t) else float(t), float(r)]
                           for t, r in zip(c.tau, c.rho)],
            }
            for c in curves
        ]
    }
    Path(json_path).write_text(json.dumps(blob, indent=1), encoding="ascii")
