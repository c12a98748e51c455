"""Cross-validation folds, confusion matrices, and classification metrics.

Folds are stratified so per-class counts stay within one record across
folds; each trial carves a stratified validation subset out of its four
training folds. Per-fold confusion matrices are summed (not averaged) so
row sums of the aggregate equal full per-class dataset sizes. Sensitivity,
precision, specificity, and F1 come from the one-vs-rest counts; undefined
ratios (zero denominators) are reported as missing and excluded from the
macro-averaged overall row.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, StratificationError


@dataclass(frozen=True)
class FoldPlan:
    record_ids: np.ndarray      # all record ids, dataset order
    test_fold: np.ndarray       # fold index per record, aligned with record_ids
    validation_ids: tuple       # per fold: ids carved out of that trial's training pool
    k: int

    def test_ids(self, fold: int) -> np.ndarray:
        return self.record_ids[self.test_fold == fold]

    def train_ids(self, fold: int) -> np.ndarray:
        """Training ids for a trial, excluding that trial's validation carve-out."""
        pool = self.record_ids[self.test_fold != fold]
        return pool[~np.isin(pool, self.validation_ids[fold])]


def make_folds(record_ids, labels, k: int = 5, validation_fraction: float = 0.1875,
               seed=0) -> FoldPlan:
    """Stratified k-fold assignment with per-trial validation carve-outs."""
    record_ids = np.asarray(record_ids)
    labels = np.asarray(labels)
    if k < 2:
        raise StratificationError("need at least 2 folds")
    if not 0.0 <= validation_fraction < 1.0:
        raise StratificationError("validation fraction must lie in [0, 1)")
    rng = np.random.default_rng(seed)

    fold_of = np.full(len(record_ids), -1, dtype=np.int64)
    classes = np.unique(labels)
    for c in classes:
        idx = np.where(labels == c)[0]
        if len(idx) < k:
            raise StratificationError(f"class {c} has {len(idx)} records, fewer than {k} folds")
        idx = rng.permutation(idx)
        for f, chunk in enumerate(np.array_split(idx, k)):
            fold_of[chunk] = f

    val_ids = []
    for f in range(k):
        picked = []
        for c in classes:
            pool = np.where((labels == c) & (fold_of != f))[0]
            n_val = int(round(validation_fraction * len(pool)))
            pool = rng.permutation(pool)
            picked.extend(pool[:n_val])
        val_ids.append(np.sort(record_ids[np.array(picked, dtype=np.int64)])
                       if picked else np.array([], dtype=record_ids.dtype))
    return FoldPlan(record_ids=record_ids, test_fold=fold_of,
                    validation_ids=tuple(val_ids), k=k)


# ---------------------------------------------------------------------------
# confusion matrices and metrics


def confusion_matrix(actual, predicted, n_classes: int) -> np.ndarray:
    """Counts with rows = actual class, columns = predicted class."""
    actual = np.asarray(actual)
    predicted = np.asarray(predicted)
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (actual, predicted), 1)
    return cm


def aggregate_folds(per_fold) -> np.ndarray:
    """Elementwise sum of per-fold confusion matrices."""
    mats = [np.asarray(m) for m in per_fold]
    if not mats:
        raise ShapeError("no fold matrices to aggregate")
    if any(m.shape != mats[0].shape for m in mats):
        raise ShapeError("fold confusion matrices must share one class set")
    return np.sum(mats, axis=0)


@dataclass(frozen=True)
class MetricsRow:
    sensitivity: float | None
    precision: float | None
    specificity: float | None
    f1: float | None


def class_counts(cm: np.ndarray, c: int):
    """(TP, FP, FN, TN) one-vs-rest counts for class ``c``."""
    cm = np.asarray(cm)
    tp = int(cm[c, c])
    fn = int(cm[c, :].sum()) - tp
    fp = int(cm[:, c].sum()) - tp
    tn = int(cm.sum()) - tp - fp - fn
    return tp, fp, fn, tn


def _ratio(num, den):
    return num / den if den > 0 else None


def class_metrics(cm: np.ndarray, c: int) -> MetricsRow:
    tp, fp, fn, tn = class_counts(cm, c)
    sens = _ratio(tp, tp + fn)
    prec = _ratio(tp, tp + fp)
    spec = _ratio(tn, tn + fp)
    if sens is None or prec is None or (prec + sens) == 0:
        f1 = None
    else:
        f1 = 2.0 * prec * sens / (prec + sens)
    return MetricsRow(sens, prec, spec, f1)


def _macro(values):
    vals = [v for v in values if v is not None]
    return sum(vals) / len(vals) if vals else None


@dataclass(frozen=True)
class OverallMetrics:
    accuracy: float
    sensitivity: float | None
    precision: float | None
    specificity: float | None
    f1: float | None


def overall_metrics(cm: np.ndarray) -> OverallMetrics:
    cm = np.asarray(cm)
    total = cm.sum()
    if total <= 0:
        raise ShapeError("empty confusion matrix")
    rows = [class_metrics(cm, c) for c in range(cm.shape[0])]
    return OverallMetrics(
        accuracy=float(np.trace(cm)) / float(total),
        sensitivity=_macro(r.sensitivity for r in rows),
        precision=_macro(r.precision for r in rows),
        specificity=_macro(r.specificity for r in rows),
        f1=_macro(r.f1 for r in rows),
    )


def average_index(localization_accuracy: float, severity_accuracy: float) -> float:
    """Single comparison score: the mean of the two stage accuracies."""
    return (localization_accuracy + severity_accuracy) / 2.0


# ---------------------------------------------------------------------------
# table rendering


def _fmt(v, decimals=4):
    return "n/a" if v is None else f"{v:.{decimals}f}"


def metrics_table_text(cm: np.ndarray, class_names) -> str:
    """Human-readable table: counts, per-class metrics, overall row."""
    cm = np.asarray(cm)
    ov = overall_metrics(cm)
    name_w = max(len(str(n)) for n in class_names) + 2
    count_w = max(6, max(len(str(n)) for n in class_names) + 1)
    head = " " * name_w + "".join(f"{str(n):>{count_w}}" for n in class_names)
    head += f"{'Sens':>9}{'Prec':>9}{'Spec':>9}{'F1':>9}"
    lines = [f"Overall accuracy = {ov.accuracy:.4f}", head]
    for i, name in enumerate(class_names):
        row = class_metrics(cm, i)
        cells = "".join(f"{int(v):>{count_w}}" for v in cm[i])
        lines.append(f"{str(name):<{name_w}}{cells}"
                     f"{_fmt(row.sensitivity):>9}{_fmt(row.precision):>9}"
                     f"{_fmt(row.specificity):>9}{_fmt(row.f1):>9}")
    lines.append(f"{'Overall':<{name_w}}{'':>{count_w * len(class_names)}}"
                 f"{_fmt(ov.sensitivity):>9}{_fmt(ov.precision):>9}"
                 f"{_fmt(ov.specificity):>9}{_fmt(ov.f1):>9}")
    return "\n".join(lines)


def metrics_table_csv(cm: np.ndarray, class_names) -> str:
    """Same table as comma-separated values."""
    cm = np.asarray(cm)
    ov = overall_metrics(cm)
    lines = ["overall_accuracy," + f"{ov.accuracy:.6f}",
             "actual\\predicted," + ",".join(str(n) for n in class_names)
             + ",sensitivity,precision,specificity,f1"]
    for i, name in enumerate(class_names):
        row = class_metrics(cm, i)
        lines.append(f"{name}," + ",".join(str(int(v)) for v in cm[i]) + ","
                     + ",".join(_fmt(v, 6) for v in
                                (row.sensitivity, row.precision, row.specificity, row.f1)))
    lines.append("Overall," + "," * len(class_names)
                 + ",".join(_fmt(v, 6) for v in
                            (ov.sensitivity, ov.precision, ov.specificity, ov.f1)))
    return "\n".join(lines)
