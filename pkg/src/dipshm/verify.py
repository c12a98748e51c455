"""Built-in oracle suite: self-contained correctness checks.

Three families of checks, all independent of the implementation paths they
exercise:

* the Stockwell transform is recomputed by direct double summation (explicit
  DFT matrices, no FFT anywhere) and compared against the FFT-based path,
  together with the time-marginal identity sum_tau S[tau, n] / N = X[n];
* every layer's analytic gradient is compared against central finite
  differences;
* the bundled reference confusion matrices are pushed through the metric
  implementation and compared against their printed values, with the known
  internally inconsistent cells flagged (recomputed value prevails).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import evaluation
from .neural import layers as L
from .neural.training import cross_entropy, cross_entropy_grad
from .reference import REFERENCE_TABLES
from .stockwell import stockwell

METRIC_TOLERANCE = 5e-4
ST_TOLERANCE = 1e-9
GRAD_TOLERANCE = 1e-4


# ---------------------------------------------------------------------------
# Stockwell oracles (FFT-free)


def dft_coefficients(x: np.ndarray) -> np.ndarray:
    """Explicit O(N^2) DFT with the 1/N normalization."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    k = np.arange(n)
    basis = np.exp(-2j * np.pi * np.outer(k, k) / n) / n
    return basis @ x


def stockwell_direct(x: np.ndarray, sampling_rate_hz: float) -> np.ndarray:
    """Direct double-summation Stockwell transform, (N/2 + 1) x N.

    S[tau, n] = sum_m X[(m+n) mod N] exp(-2 pi^2 m^2 / n^2) exp(+2j pi m tau / N)
    with row 0 set to the signal mean. Used only as an oracle.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    coeffs = dft_coefficients(x)
    m = np.arange(n)
    synth_basis = np.exp(2j * np.pi * np.outer(m, m) / n)   # [tau, m]
    out = np.empty((n // 2 + 1, n), dtype=complex)
    out[0, :] = x.mean()
    for row in range(1, n // 2 + 1):
        weights = coeffs[(m + row) % n] * np.exp(-2.0 * np.pi**2 * m**2 / row**2)
        out[row, :] = synth_basis @ weights
    return out


# ---------------------------------------------------------------------------
# gradient checking


def _rel_err(a, b):
    scale = max(np.abs(a).max(initial=0.0), np.abs(b).max(initial=0.0), 1e-8)
    return float(np.abs(a - b).max(initial=0.0) / scale)


def _forward_with(layer, x, kwargs):
    kw = dict(kwargs)
    make_rng = kw.pop("make_rng", None)
    if make_rng is not None:
        kw["rng"] = make_rng()
    return layer.forward(x, **kw)


def finite_difference_layer(layer, x, upstream, forward_kwargs=None, step=1e-5):
    """Max relative error between analytic and central-difference gradients.

    The loss is sum(forward(x) * upstream). ``forward_kwargs`` may contain a
    'make_rng' factory so stochastic layers redraw the identical mask on
    every evaluation.
    """
    kwargs = dict(forward_kwargs or {})

    def run(inp):
        return _forward_with(layer, inp, kwargs)

    run(x)
    dx = layer.backward(upstream)
    analytic = {"__x__": dx}
    analytic.update({name: g.copy() for name, g in layer.grads.items()})

    errs = []

    def fd_on(arr, key):
        num = np.empty_like(arr, dtype=float)
        flat = arr.reshape(-1)
        numf = num.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + step
            hi = float((run(x) * upstream).sum())
            flat[i] = keep - step
            lo = float((run(x) * upstream).sum())
            flat[i] = keep
            numf[i] = (hi - lo) / (2.0 * step)
        errs.append(_rel_err(analytic[key], num))

    fd_on(x, "__x__")
    for name in layer.params:
        fd_on(layer.params[name], name)
    return max(errs)


def softmax_cross_entropy_check(rng, n_classes=5, batch=4, step=1e-5):
    """Gradient of mean cross-entropy through softmax, against central FD."""
    logits = rng.normal(size=(batch, n_classes))
    labels = rng.integers(0, n_classes, size=batch)
    sm = L.Softmax()
    probs = sm.forward(logits)
    dlogits = sm.backward(cross_entropy_grad(probs, labels))
    num = np.empty_like(logits)
    for i in range(logits.size):
        keep = logits.reshape(-1)[i]
        logits.reshape(-1)[i] = keep + step
        hi = cross_entropy(L.softmax(logits), labels)
        logits.reshape(-1)[i] = keep - step
        lo = cross_entropy(L.softmax(logits), labels)
        logits.reshape(-1)[i] = keep
        num.reshape(-1)[i] = (hi - lo) / (2.0 * step)
    return _rel_err(dlogits, num)


def _well_separated(rng, shape):
    """Random values whose pairwise gaps exceed the FD step, so window maxima
    cannot flip under a 1e-5 perturbation."""
    x = np.round(rng.normal(size=shape) * 4.0) / 4.0
    return x + np.arange(x.size).reshape(shape) * 1e-3


def make_layer_instance(kind: str, rng):
    """A small random instance of a layer plus an input away from kinks."""
    if kind == "conv":
        x = rng.normal(size=(2, 6, 7, 3))
        w = rng.normal(size=(3, 3, 3, 4)) * 0.5
        return L.Conv2D(w, rng.normal(size=4) * 0.1, stride=(1, 2), padding="same"), x, {}
    if kind == "batchnorm":
        x = rng.normal(size=(5, 4, 3, 2))
        return L.BatchNorm(rng.normal(size=2) + 1.5, rng.normal(size=2)), x, {"train": True}
    if kind == "relu":
        x = rng.normal(size=(4, 6))
        x = np.where(np.abs(x) < 1e-3, 0.5, x)     # keep away from the kink
        return L.ReLU(), x, {}
    if kind == "maxpool":
        x = _well_separated(rng, (2, 4, 8, 3))
        return L.MaxPool((2, 4)), x, {}
    if kind == "maxpool-overlap":
        x = _well_separated(rng, (2, 5, 6, 2))
        return L.MaxPool((2, 2), stride=(1, 2)), x, {}
    if kind == "dropout":
        x = rng.normal(size=(3, 7))
        seed = int(rng.integers(0, 2**31))
        return L.Dropout(0.4), x, {"train": True,
                                   "make_rng": lambda s=seed: np.random.default_rng(s)}
    if kind == "fullyconnected":
        x = rng.normal(size=(3, 10))
        return L.Dense(rng.normal(size=(10, 6)) * 0.3, rng.normal(size=6) * 0.1), x, {}
    raise ValueError(f"unknown layer kind '{kind}'")


GRAD_CHECK_KINDS = ("conv", "batchnorm", "relu", "maxpool", "maxpool-overlap",
                    "dropout", "fullyconnected")


def gradient_check(kind: str, rng, step=1e-5) -> float:
    """Max relative gradient error for one random instance of a layer kind."""
    if kind == "softmax-cross-entropy":
        return softmax_cross_entropy_check(rng, step=step)
    layer, x, kwargs = make_layer_instance(kind, rng)
    upstream = rng.normal(size=_forward_with(layer, x, kwargs).shape)
    return finite_difference_layer(layer, x, upstream, forward_kwargs=kwargs, step=step)


# ---------------------------------------------------------------------------
# reference-table cross-check

# Cells where the printed value disagrees with its own counts by more than
# the tolerance; for these the recomputed value prevails.
KNOWN_INCONSISTENT_CELLS = {
    "deterioration-localization": {
        # the printed scenario-3 row metrics and overall row were computed
        # from the 81-record scenario-1 row (see reference.py)
        "accuracy", "Scenario 3.precision", "Scenario 3.specificity",
        "Scenario 3.f1", "Overall.sensitivity", "Overall.precision",
        "Overall.specificity", "Overall.f1",
    },
    "deterioration-severity-scenario-1": {
        "State 2.f1", "State 3.f1", "State 4.f1", "Overall.f1",
    },
    "deterioration-severity-scenario-2": set(),
    "deterioration-severity-scenario-3": set(),
    "damage-localization": {
        "Healthy.specificity", "Story 3.f1",
        "Overall.sensitivity", "Overall.specificity", "Overall.f1",
    },
    "damage-severity-story-1": {
        "State 2.f1", "State 3.precision", "State 3.f1",
        "State 4.precision", "State 4.f1",
        "State 5.specificity", "State 5.f1",
        "Overall.specificity", "Overall.f1",
    },
    "damage-severity-story-2": {
        "State 6.f1", "State 7.f1",
    },
    "damage-severity-story-3": set(),
}

_METRIC_NAMES = ("sensitivity", "precision", "specificity", "f1")


@dataclass(frozen=True)
class CellMismatch:
    table: str
    cell: str
    reported: float
    recomputed: float


def recheck_reference_tables(class_metrics_fn=None, overall_metrics_fn=None,
                             tolerance=METRIC_TOLERANCE):
    """Recompute all bundled tables; return the cells that disagree."""
    class_metrics_fn = class_metrics_fn or evaluation.class_metrics
    overall_metrics_fn = overall_metrics_fn or evaluation.overall_metrics
    mismatches = []
    for table in REFERENCE_TABLES:
        cm = np.asarray(table.counts)
        ov = overall_metrics_fn(cm)
        if abs(ov.accuracy - table.reported_accuracy) > tolerance:
            mismatches.append(CellMismatch(table.name, "accuracy",
                                           table.reported_accuracy, ov.accuracy))
        for ci, name in enumerate(table.class_names):
            row = class_metrics_fn(cm, ci)
            for metric, reported in zip(_METRIC_NAMES, table.reported_rows[ci]):
                recomputed = getattr(row, metric)
                if recomputed is None or abs(recomputed - reported) > tolerance:
                    mismatches.append(CellMismatch(table.name, f"{name}.{metric}",
                                                   reported, recomputed))
        for metric, reported in zip(_METRIC_NAMES, table.reported_overall):
            recomputed = getattr(ov, metric)
            if recomputed is None or abs(recomputed - reported) > tolerance:
                mismatches.append(CellMismatch(table.name, f"Overall.{metric}",
                                               reported, recomputed))
    return mismatches


def reference_tables_ok(mismatches) -> bool:
    """True when exactly the known inconsistent cells (and no others) disagree."""
    seen = {(m.table, m.cell) for m in mismatches}
    expected = {(t, c) for t, cells in KNOWN_INCONSISTENT_CELLS.items() for c in cells}
    return seen == expected


# ---------------------------------------------------------------------------
# suite runner


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def run_all(class_metrics_fn=None, overall_metrics_fn=None, rng_seed=2024) -> list:
    """Run every oracle; returns one CheckResult per check."""
    results = []
    rng = np.random.default_rng(rng_seed)

    worst = 0.0
    for n in (8, 16, 64):
        for _ in range(10):
            x = rng.normal(size=n)
            fast = stockwell(x, 200.0).values
            direct = stockwell_direct(x, 200.0)
            scale = max(np.abs(direct).max(), 1e-30)
            worst = max(worst, float(np.abs(fast - direct).max()) / scale)
    results.append(CheckResult("stockwell-direct-equivalence", worst < ST_TOLERANCE,
                               f"max relative deviation {worst:.3e}"))

    worst = 0.0
    for n in (8, 16, 64):
        x = rng.normal(size=n)
        st = stockwell(x, 200.0).values
        coeffs = dft_coefficients(x)
        marg = st[1:, :].mean(axis=1)
        ref = coeffs[1:n // 2 + 1]
        worst = max(worst, float(np.abs(marg - ref).max() / max(np.abs(ref).max(), 1e-30)))
    results.append(CheckResult("stockwell-time-marginal", worst < ST_TOLERANCE,
                               f"max relative deviation {worst:.3e}"))

    worst_kind, worst = "", 0.0
    for kind in GRAD_CHECK_KINDS + ("softmax-cross-entropy",):
        err = gradient_check(kind, rng)
        if err > worst:
            worst_kind, worst = kind, err
    results.append(CheckResult("gradient-checks", worst < GRAD_TOLERANCE,
                               f"worst layer '{worst_kind}' at {worst:.3e}"))

    ok = True
    for _ in range(20):
        k = int(rng.integers(2, 6))
        cm = rng.integers(0, 40, size=(k, k))
        total = cm.sum()
        for c in range(k):
            tp, fp, fn, tn = evaluation.class_counts(cm, c)
            ok &= tp + fp + fn + tn == total
            row = evaluation.class_metrics(cm, c)
            if row.sensitivity is not None:
                ok &= abs(row.sensitivity - tp / (tp + fn)) < 1e-12
            if row.specificity is not None:
                ok &= abs(row.specificity - tn / (tn + fp)) < 1e-12
            if row.f1 is not None:
                lo = min(row.precision, row.sensitivity)
                hi = max(row.precision, row.sensitivity)
                ok &= lo - 1e-12 <= row.f1 <= hi + 1e-12
    results.append(CheckResult("metric-identities", bool(ok),
                               "count and ratio identities on random matrices"))

    mismatches = recheck_reference_tables(class_metrics_fn, overall_metrics_fn)
    ok = reference_tables_ok(mismatches)
    results.append(CheckResult(
        "reference-tables", ok,
        f"{len(mismatches)} cells differ from their printed values "
        f"({'exactly the known inconsistent set' if ok else 'UNEXPECTED set'})"))
    return results


def format_results(results, mismatches=None) -> str:
    lines = []
    for r in results:
        lines.append(f"[{'PASS' if r.passed else 'FAIL'}] {r.name}: {r.detail}")
    if mismatches:
        lines.append("flagged reference cells (recomputed value prevails):")
        for m in mismatches:
            lines.append(f"  {m.table} / {m.cell}: printed {m.reported} "
                         f"-> recomputed {m.recomputed:.6f}")
    return "\n".join(lines)
