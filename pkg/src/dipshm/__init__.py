"""Deterioration and damage identification for instrumented shear buildings.

Pipeline: ambient acceleration records -> Chebyshev low-pass + per-channel
standardization + ZCA whitening -> Stockwell spectrograms -> small CNNs for
story localization and severity grading, judged by stratified 5-fold
cross-validation and confusion-matrix metrics. A 3-DOF shear-building
simulator generates labeled benchmark datasets.
"""

from .config import RunConfig, default_config, load_config, parse_config
from .containers import read_dataset, read_dipw, write_dataset, write_dipw
from .evaluation import (
    aggregate_folds,
    average_index,
    class_metrics,
    confusion_matrix,
    make_folds,
    metrics_table_csv,
    metrics_table_text,
    overall_metrics,
)
from .pipeline import run_pipeline
from .preprocess import (
    FilterSpec,
    WhiteningTransform,
    apply_whitening,
    apply_zero_phase,
    design_lowpass,
    fit_zca,
    standardize,
)
from .stockwell import (
    StMatrix,
    assemble_spectrogram,
    block_downsample,
    crop_magnitude,
    fit_channel_scaling,
    stockwell,
)
from .synth import (
    AmbientExcitation,
    BuildingModel,
    DamageScenario,
    Dataset,
    DeteriorationScenario,
    apply_damage,
    apply_deterioration,
    desk_model,
    deteriorated_stiffness,
    generate_dataset,
    modal_analysis,
    modal_frequencies,
    newmark_response,
    simulate,
)

__version__ = "0.1.0"
