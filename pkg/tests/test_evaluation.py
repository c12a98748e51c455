"""Fold plans, confusion-matrix metrics, and the reference-results cross-check."""

import numpy as np
import pytest

from dipshm import evaluation as ev
from dipshm.errors import ShapeError, StratificationError
from dipshm.reference import REFERENCE_TABLES
from dipshm.verify import (
    KNOWN_INCONSISTENT_CELLS,
    recheck_reference_tables,
    reference_tables_ok,
)


def balanced_labels(per_class, classes):
    return np.repeat(np.arange(classes), per_class)


class TestMakeFolds:
    def test_320_records_four_classes(self):
        labels = balanced_labels(80, 4)
        plan = ev.make_folds(np.arange(320), labels, k=5, seed=0)
        for f in range(5):
            test = plan.test_ids(f)
            assert len(test) == 64
            test_labels = labels[test]
            assert all((test_labels == c).sum() == 16 for c in range(4))
            # 256 train candidates split 208 train / 48 validation
            assert len(plan.validation_ids[f]) == 48
            assert len(plan.train_ids(f)) == 208

    def test_severity_folds(self):
        labels = balanced_labels(20, 4)
        plan = ev.make_folds(np.arange(80), labels, k=5, seed=1)
        for f in range(5):
            assert len(plan.test_ids(f)) == 16
            assert len(plan.validation_ids[f]) == 12
            assert len(plan.train_ids(f)) == 52

    def test_disjoint_and_complete(self):
        rng = np.random.default_rng(2)
        labels = rng.integers(0, 3, size=97)
        labels[:15] = np.arange(15) % 3          # every class >= 5 members
        ids = np.arange(1000, 1097)
        plan = ev.make_folds(ids, labels, k=5, seed=3)
        seen = np.concatenate([plan.test_ids(f) for f in range(5)])
        assert sorted(seen) == sorted(ids)
        for f in range(5):
            train = set(plan.train_ids(f))
            val = set(plan.validation_ids[f])
            test = set(plan.test_ids(f))
            assert not train & val and not train & test and not val & test

    def test_per_class_balance_within_one(self):
        labels = balanced_labels(17, 3)          # 17 does not divide by 5
        plan = ev.make_folds(np.arange(51), labels, k=5, seed=4)
        for c in range(3):
            counts = [int((labels[plan.test_ids(f)] == c).sum()) for f in range(5)]
            assert max(counts) - min(counts) <= 1

    def test_single_fold_rejected(self):
        with pytest.raises(StratificationError):
            ev.make_folds(np.arange(10), balanced_labels(5, 2), k=1)

    def test_small_class_rejected(self):
        labels = np.array([0, 0, 0, 1, 1, 1, 1, 1])
        with pytest.raises(StratificationError):
            ev.make_folds(np.arange(8), labels, k=5)

    def test_deterministic(self):
        labels = balanced_labels(10, 2)
        a = ev.make_folds(np.arange(20), labels, k=5, seed=7)
        b = ev.make_folds(np.arange(20), labels, k=5, seed=7)
        np.testing.assert_array_equal(a.test_fold, b.test_fold)


class TestMetrics:
    def test_perfect_matrix(self):
        cm = np.diag([5, 7, 9])
        for c in range(3):
            row = ev.class_metrics(cm, c)
            assert row.sensitivity == 1.0 and row.precision == 1.0
            assert row.specificity == 1.0 and row.f1 == 1.0
        assert ev.overall_metrics(cm).accuracy == 1.0

    def test_identities_on_random_matrices(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            k = int(rng.integers(2, 6))
            cm = rng.integers(0, 30, size=(k, k))
            total = cm.sum()
            for c in range(k):
                tp, fp, fn, tn = ev.class_counts(cm, c)
                assert tp + fp + fn + tn == total
                row = ev.class_metrics(cm, c)
                if row.sensitivity is not None:
                    assert row.sensitivity == pytest.approx(tp / (tp + fn))
                if row.specificity is not None:
                    assert row.specificity == pytest.approx(tn / (tn + fp))
                if row.f1 is not None:
                    p, s = row.precision, row.sensitivity
                    assert row.f1 == pytest.approx(2 * p * s / (p + s))
                    assert min(p, s) - 1e-12 <= row.f1 <= max(p, s) + 1e-12

    def test_undefined_metrics_reported_as_missing(self):
        cm = np.array([[3, 0], [0, 0]])    # class 1 never occurs nor predicted
        row = ev.class_metrics(cm, 1)
        assert row.sensitivity is None and row.precision is None
        assert row.f1 is None
        ov = ev.overall_metrics(cm)
        assert ov.sensitivity == 1.0       # macro average skips the missing class

    def test_zero_matrix_rejected(self):
        with pytest.raises(ShapeError):
            ev.overall_metrics(np.zeros((2, 2), dtype=int))

    def test_aggregate(self):
        per_fold = [np.full((4, 4), 1, dtype=int) for _ in range(5)]
        agg = ev.aggregate_folds(per_fold)
        assert np.all(agg == 5)
        np.testing.assert_array_equal(ev.aggregate_folds([per_fold[0]]), per_fold[0])
        assert np.all(ev.aggregate_folds([np.zeros((2, 2))] * 3) == 0)
        with pytest.raises(ShapeError):
            ev.aggregate_folds([np.zeros((2, 2)), np.zeros((3, 3))])

    def test_fold_sum_row_totals(self):
        rng = np.random.default_rng(6)
        folds = []
        for _ in range(5):
            actual = balanced_labels(16, 4)
            pred = np.where(rng.random(64) < 0.9, actual, rng.integers(0, 4, 64))
            folds.append(ev.confusion_matrix(actual, pred, 4))
        agg = ev.aggregate_folds(folds)
        np.testing.assert_array_equal(agg.sum(axis=1), [80, 80, 80, 80])

    def test_average_index(self):
        assert ev.average_index(0.95, 0.975) == pytest.approx(0.9625)
        assert ev.average_index(1.0, 1.0) == 1.0
        assert ev.average_index(0.0, 1.0) == 0.5


def hand_metrics(counts, c):
    """Independent metric computation for the cross-check."""
    counts = np.asarray(counts)
    tp = counts[c][c]
    fn = counts[c].sum() - tp
    fp = counts[:, c].sum() - tp
    tn = counts.sum() - tp - fn - fp
    sens = tp / (tp + fn)
    prec = tp / (tp + fp)
    spec = tn / (tn + fp)
    return sens, prec, spec, 2 * prec * sens / (prec + sens)


class TestReferenceTables:
    def test_implementation_matches_independent_computation(self):
        for table in REFERENCE_TABLES:
            cm = np.asarray(table.counts)
            for c in range(len(table.class_names)):
                row = ev.class_metrics(cm, c)
                sens, prec, spec, f1 = hand_metrics(table.counts, c)
                assert row.sensitivity == pytest.approx(sens, abs=1e-12)
                assert row.precision == pytest.approx(prec, abs=1e-12)
                assert row.specificity == pytest.approx(spec, abs=1e-12)
                assert row.f1 == pytest.approx(f1, abs=1e-12)

    def test_printed_cells_match_or_are_known_inconsistent(self):
        mismatches = recheck_reference_tables()
        assert reference_tables_ok(mismatches), \
            sorted((m.table, m.cell) for m in mismatches)

    def test_consistent_tables_have_no_flags(self):
        for name in ("deterioration-severity-scenario-2",
                     "deterioration-severity-scenario-3",
                     "damage-severity-story-3"):
            assert KNOWN_INCONSISTENT_CELLS[name] == set()

    def test_localization_accuracy_flagged_with_recomputed_value(self):
        mm = {(m.table, m.cell): m for m in recheck_reference_tables()}
        flag = mm[("deterioration-localization", "accuracy")]
        assert flag.reported == pytest.approx(0.9470)
        assert flag.recomputed == pytest.approx(304 / 320)

    def test_severity_f1_flag_example(self):
        mm = {(m.table, m.cell): m for m in recheck_reference_tables()}
        flag = mm[("deterioration-severity-scenario-1", "State 2.f1")]
        assert flag.reported == 1.0
        assert flag.recomputed == pytest.approx(2 * (1.0 * 0.95) / 1.95, abs=1e-6)

    def test_tampered_metrics_detected(self):
        # negative control: a wrong precision formula must break the check
        def tampered(cm, c):
            row = ev.class_metrics(cm, c)
            bad = None if row.precision is None else row.precision * 0.98
            return ev.MetricsRow(row.sensitivity, bad, row.specificity, row.f1)

        mismatches = recheck_reference_tables(class_metrics_fn=tampered)
        assert not reference_tables_ok(mismatches)


class TestTables:
    def test_text_table_layout(self):
        cm = np.asarray(REFERENCE_TABLES[0].counts)
        text = ev.metrics_table_text(cm, REFERENCE_TABLES[0].class_names)
        assert text.splitlines()[0] == "Overall accuracy = 0.9500"
        assert "Healthy" in text and "Overall" in text
        assert "Sens" in text and "F1" in text

    def test_csv_table_round_trippable(self):
        cm = np.asarray(REFERENCE_TABLES[-1].counts)
        csv = ev.metrics_table_csv(cm, REFERENCE_TABLES[-1].class_names)
        lines = csv.splitlines()
        assert lines[0].startswith("overall_accuracy,")
        # count rows parse back to the original matrix
        for i, name in enumerate(REFERENCE_TABLES[-1].class_names):
            cells = lines[2 + i].split(",")
            assert cells[0] == name
            assert [int(v) for v in cells[1:3]] == list(cm[i])

    def test_undefined_cells_render_as_na(self):
        cm = np.array([[3, 0], [0, 0]])
        assert "n/a" in ev.metrics_table_text(cm, ("A", "B"))
