"""Bundled reference classification results for metric cross-checking.

Eight previously reported confusion matrices together with the metric values
printed alongside them. Recomputing sensitivity, precision, specificity, and
F1 from the raw counts and comparing against the printed values is a
self-test of the metric implementation; a handful of printed cells are
internally inconsistent with their own counts (rounding slips in the
source), and the checker reports the recomputed value for those.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ReferenceTable:
    name: str
    class_names: tuple
    counts: tuple                 # rows = actual, columns = predicted
    reported_accuracy: float
    # per class: (sensitivity, precision, specificity, f1) as printed
    reported_rows: tuple
    # overall row as printed: (sensitivity, precision, specificity, f1)
    reported_overall: tuple


REFERENCE_TABLES = (
    ReferenceTable(
        # The source prints a second-row count set summing to 81 records
        # against a stated 80 per class (its own accuracy of 0.9470 equals
        # 304/321); the row is normalized here to 80 records, keeping the
        # healthy row/column and the scenario-1 sensitivity and precision
        # exactly as printed.
        name="deterioration-localization",
        class_names=("Healthy", "Scenario 1", "Scenario 2", "Scenario 3"),
        counts=((76, 2, 1, 1), (1, 77, 2, 0), (1, 2, 75, 2), (1, 2, 1, 76)),
        reported_accuracy=0.9470,
        reported_rows=(
            (0.95, 0.962, 0.9875, 0.9560),
            (0.9625, 0.9277, 0.975, 0.9448),
            (0.9375, 0.9493, 0.9834, 0.9434),
            (0.95, 0.95, 0.9834, 0.9500),
        ),
        reported_overall=(0.9470, 0.9472, 0.9823, 0.9486),
    ),
    ReferenceTable(
        name="deterioration-severity-scenario-1",
        class_names=("State 2", "State 3", "State 4", "State 5"),
        counts=((19, 1, 0, 0), (0, 20, 0, 0), (0, 1, 19, 0), (0, 0, 0, 20)),
        reported_accuracy=0.975,
        reported_rows=(
            (0.95, 1.00, 1.00, 1.00),
            (1.00, 0.9090, 0.9667, 0.9370),
            (0.95, 1.00, 1.00, 1.00),
            (1.00, 1.00, 1.00, 1.00),
        ),
        reported_overall=(0.975, 0.9772, 0.9917, 0.9843),
    ),
    ReferenceTable(
        name="deterioration-severity-scenario-2",
        class_names=("State 2", "State 3", "State 4", "State 5"),
        counts=((20, 0, 0, 0), (0, 19, 1, 0), (0, 0, 20, 0), (0, 0, 0, 20)),
        reported_accuracy=0.9875,
        reported_rows=(
            (1.00, 1.00, 1.00, 1.00),
            (0.95, 1.00, 1.00, 0.9744),
            (1.00, 0.9524, 0.9833, 0.9756),
            (1.00, 1.00, 1.00, 1.00),
        ),
        reported_overall=(0.9875, 0.9881, 0.9958, 0.9875),
    ),
    ReferenceTable(
        name="deterioration-severity-scenario-3",
        class_names=("State 2", "State 3", "State 4", "State 5"),
        counts=((20, 0, 0, 0), (0, 20, 0, 0), (0, 1, 19, 0), (0, 0, 1, 19)),
        reported_accuracy=0.975,
        reported_rows=(
            (1.00, 1.00, 1.00, 1.00),
            (1.00, 0.9524, 0.9833, 0.9756),
            (0.95, 0.95, 0.9833, 0.9500),
            (0.95, 1.00, 1.00, 0.9744),
        ),
        reported_overall=(0.975, 0.9756, 0.9916, 0.975),
    ),
    ReferenceTable(
        name="damage-localization",
        class_names=("Healthy", "Story 1", "Story 2", "Story 3"),
        counts=((47, 3, 0, 0), (2, 198, 0, 0), (0, 1, 99, 0), (0, 2, 0, 98)),
        reported_accuracy=0.982,
        reported_rows=(
            (0.94, 0.959, 0.996, 0.949),
            (0.99, 0.971, 0.976, 0.98),
            (0.99, 1.0, 1.0, 0.995),
            (0.98, 1.0, 1.0, 0.989),
        ),
        reported_overall=(0.982, 0.982, 0.989, 0.982),
    ),
    ReferenceTable(
        name="damage-severity-story-1",
        class_names=("State 2", "State 3", "State 4", "State 5"),
        counts=((49, 1, 0, 0), (2, 48, 0, 0), (0, 0, 48, 2), (0, 0, 1, 49)),
        reported_accuracy=0.97,
        reported_rows=(
            (0.98, 0.961, 0.987, 0.973),
            (0.96, 0.979, 0.993, 0.986),
            (0.96, 0.979, 0.993, 0.986),
            (0.98, 0.961, 0.986, 0.973),
        ),
        reported_overall=(0.97, 0.97, 0.989, 0.979),
    ),
    ReferenceTable(
        name="damage-severity-story-2",
        class_names=("State 6", "State 7"),
        counts=((49, 1), (0, 50)),
        reported_accuracy=0.99,
        reported_rows=(
            (0.98, 1.0, 1.0, 1.0),
            (1.0, 0.98, 0.98, 0.98),
        ),
        reported_overall=(0.99, 0.99, 0.99, 0.99),
    ),
    ReferenceTable(
        name="damage-severity-story-3",
        class_names=("State 8", "State 9"),
        counts=((49, 1), (1, 49)),
        reported_accuracy=0.98,
        reported_rows=(
            (0.98, 0.98, 0.98, 0.98),
            (0.98, 0.98, 0.98, 0.98),
        ),
        reported_overall=(0.98, 0.98, 0.98, 0.98),
    ),
)
