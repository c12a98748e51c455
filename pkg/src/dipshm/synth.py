"""Synthetic vibration data for a 3-story shear building.

Lumped-mass shear model under band-limited ambient base excitation,
integrated with the Newmark average-acceleration scheme. Gradual
deterioration is modeled as an annual stiffness loss rate applied to one
story; discrete damage states combine large stiffness reductions and mass
perturbations. Labeled 1024-sample acceleration records are cut from long
simulations, one independent simulation per class.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .errors import (
    DegenerateScenarioError,
    InsufficientDataError,
    IntegrationError,
    InvalidModelError,
)

N_STORIES = 3
RECORD_SAMPLES = 1024

# Fundamental eigenvalue ratio of the uniform 3-story shear chain:
# omega_1 = 2*sin(pi/14) * sqrt(k/m)
_UNIFORM_OMEGA1 = 2.0 * np.sin(np.pi / 14.0)


@dataclass(frozen=True)
class BuildingModel:
    """Lumped 3-DOF shear building: one lateral DOF per story."""

    story_masses: tuple[float, float, float]
    story_stiffnesses: tuple[float, float, float]
    damping_ratios: tuple[float, ...] = (0.02, 0.02)

    def __post_init__(self):
        if len(self.story_masses) != N_STORIES or len(self.story_stiffnesses) != N_STORIES:
            raise InvalidModelError("model needs exactly 3 story masses and 3 story stiffnesses")
        if any(m <= 0 for m in self.story_masses):
            raise InvalidModelError("story masses must be positive")
        if any(k <= 0 for k in self.story_stiffnesses):
            raise InvalidModelError("story stiffnesses must be positive")
        if len(self.damping_ratios) < 2:
            raise InvalidModelError("need damping ratios for at least the first two modes")
        if any(not 0.0 < z < 1.0 for z in self.damping_ratios):
            raise InvalidModelError("damping ratios must lie in (0, 1)")

    def with_stiffnesses(self, ks) -> "BuildingModel":
        return BuildingModel(self.story_masses, tuple(float(k) for k in ks), self.damping_ratios)

    def with_masses(self, ms) -> "BuildingModel":
        return BuildingModel(tuple(float(m) for m in ms), self.story_stiffnesses, self.damping_ratios)


def mass_matrix(model: BuildingModel) -> np.ndarray:
    return np.diag(np.asarray(model.story_masses, dtype=float))


def stiffness_matrix(model: BuildingModel) -> np.ndarray:
    """Tridiagonal lateral stiffness matrix of the shear chain (fixed base)."""
    k1, k2, k3 = model.story_stiffnesses
    return np.array(
        [
            [k1 + k2, -k2, 0.0],
            [-k2, k2 + k3, -k3],
            [0.0, -k3, k3],
        ]
    )


def modal_analysis(model: BuildingModel):
    """Natural frequencies (Hz, ascending) and mass-normalized mode shapes.

    Solves the symmetric eigenproblem of M^(-1/2) K M^(-1/2); shape columns
    are mapped back to physical coordinates.
    """
    m = np.asarray(model.story_masses, dtype=float)
    k_mat = stiffness_matrix(model)
    m_inv_sqrt = np.diag(1.0 / np.sqrt(m))
    lam, vec = np.linalg.eigh(m_inv_sqrt @ k_mat @ m_inv_sqrt)
    if np.any(lam <= 0):
        raise InvalidModelError("stiffness operator is not positive definite")
    freqs = np.sqrt(lam) / (2.0 * np.pi)
    shapes = m_inv_sqrt @ vec
    return freqs, shapes


def modal_frequencies(model: BuildingModel) -> np.ndarray:
    """The three natural frequencies in Hz, ascending."""
    return modal_analysis(model)[0]


def rayleigh_damping(model: BuildingModel) -> np.ndarray:
    """Damping matrix C = a0*M + a1*K fitted to the first two modal ratios."""
    freqs, _ = modal_analysis(model)
    w1, w2 = 2.0 * np.pi * freqs[0], 2.0 * np.pi * freqs[1]
    z1, z2 = model.damping_ratios[0], model.damping_ratios[1]
    a = np.array([[1.0 / (2.0 * w1), w1 / 2.0], [1.0 / (2.0 * w2), w2 / 2.0]])
    a0, a1 = np.linalg.solve(a, np.array([z1, z2]))
    return a0 * mass_matrix(model) + a1 * stiffness_matrix(model)


def desk_model(fundamental_hz: float = 3.0, story_mass_kg: float = 1000.0,
               damping_ratio: float = 0.02) -> BuildingModel:
    """Uniform model whose first natural frequency equals ``fundamental_hz``."""
    m = story_mass_kg
    k = m * (2.0 * np.pi * fundamental_hz / _UNIFORM_OMEGA1) ** 2
    return BuildingModel((m, m, m), (k, k, k), (damping_ratio, damping_ratio))


# ---------------------------------------------------------------------------
# scenarios


@dataclass(frozen=True)
class DeteriorationScenario:
    """Gradual stiffness loss of one story: annual rate times elapsed years."""

    story: int                 # 1..3
    adr: float                 # annual deterioration rate, 1/year
    duration_years: float
    severity_state: int        # ordinal 2..5

    def __post_init__(self):
        if not 1 <= self.story <= N_STORIES:
            raise DegenerateScenarioError(f"story must be 1..3, got {self.story}")
        if self.adr < 0 or self.duration_years < 0:
            raise DegenerateScenarioError("adr and duration must be non-negative")
        if self.adr * self.duration_years >= 1.0:
            raise DegenerateScenarioError(
                f"adr*years = {self.adr * self.duration_years:.3f} would remove the full stiffness"
            )
        if not 2 <= self.severity_state <= 5:
            raise DegenerateScenarioError(f"severity state must be 2..5, got {self.severity_state}")


def deteriorated_stiffness(base: float, scenario: DeteriorationScenario) -> float:
    """Story stiffness after ``duration_years`` of loss at rate ``adr``.

    The cross-section loss ratio adr*years maps one-to-one onto the story
    stiffness factor: k -> k * (1 - adr*years).
    """
    return base * (1.0 - scenario.adr * scenario.duration_years)


def apply_deterioration(model: BuildingModel, scenario: DeteriorationScenario) -> BuildingModel:
    ks = list(model.story_stiffnesses)
    ks[scenario.story - 1] = deteriorated_stiffness(ks[scenario.story - 1], scenario)
    return model.with_stiffnesses(ks)


@dataclass(frozen=True)
class DamageScenario:
    """One discrete structural state: stiffness cut and/or an added mass."""

    state_label: int                         # 1..9
    stiffness_reduction: float = 0.0         # fraction of the story stiffness removed
    affected_story: int | None = None        # 1..3, None when no stiffness change
    added_mass_kg: float = 0.0
    mass_location: int | None = None         # 0 = base (no dynamic effect), 1..3 = story

    def __post_init__(self):
        if not 0.0 <= self.stiffness_reduction < 1.0:
            raise DegenerateScenarioError("stiffness reduction must lie in [0, 1)")
        if self.stiffness_reduction > 0 and self.affected_story is None:
            raise DegenerateScenarioError("stiffness reduction needs an affected story")


def apply_damage(model: BuildingModel, scenario: DamageScenario) -> BuildingModel:
    out = model
    if scenario.stiffness_reduction > 0:
        ks = list(out.story_stiffnesses)
        ks[scenario.affected_story - 1] *= 1.0 - scenario.stiffness_reduction
        out = out.with_stiffnesses(ks)
    # An added mass at the base does not enter the fixed-base equations of
    # motion; only masses on instrumented stories change the dynamics.
    if scenario.added_mass_kg > 0 and scenario.mass_location not in (None, 0):
        ms = list(out.story_masses)
        ms[scenario.mass_location - 1] += scenario.added_mass_kg
        out = out.with_masses(ms)
    return out


# Benchmark damage catalog: nine states on a small 4-column-per-story frame.
# A single damaged column at 87.5% reduced section takes out 87.5%/4 of the
# story's lateral stiffness; a two-column state takes out twice that.
COLUMN_SECTION_REDUCTION = 0.875
COLUMNS_PER_STORY = 4
ENV_MASS_KG = 1.2


def damage_state_catalog(column_reduction: float = COLUMN_SECTION_REDUCTION,
                         added_mass_kg: float = ENV_MASS_KG) -> list[DamageScenario]:
    one = column_reduction / COLUMNS_PER_STORY
    two = 2.0 * column_reduction / COLUMNS_PER_STORY
    return [
        DamageScenario(1),
        DamageScenario(2, added_mass_kg=added_mass_kg, mass_location=0),
        DamageScenario(3, added_mass_kg=added_mass_kg, mass_location=1),
        DamageScenario(4, stiffness_reduction=one, affected_story=1),
        DamageScenario(5, stiffness_reduction=two, affected_story=1),
        DamageScenario(6, stiffness_reduction=one, affected_story=2),
        DamageScenario(7, stiffness_reduction=two, affected_story=2),
        DamageScenario(8, stiffness_reduction=one, affected_story=3),
        DamageScenario(9, stiffness_reduction=two, affected_story=3),
    ]


# ---------------------------------------------------------------------------
# label conventions shared with the pipeline

HEALTHY_LABEL = 0


def deterioration_label(scenario: int, state: int) -> int:
    """Composite record label: tens digit = scenario (story), ones digit = state."""
    return 10 * scenario + state


def deterioration_location(label: int) -> int:
    """0 = healthy, 1..3 = deteriorated story."""
    return 0 if label == HEALTHY_LABEL else label // 10


def deterioration_state(label: int) -> int:
    if label == HEALTHY_LABEL:
        raise ValueError("healthy records carry no severity state")
    return label % 10


def damage_location(label: int) -> int:
    """Group the nine damage states: healthy, story 1 (incl. mass states), story 2, story 3."""
    if label == 1:
        return 0
    if 2 <= label <= 5:
        return 1
    if label in (6, 7):
        return 2
    if label in (8, 9):
        return 3
    raise ValueError(f"unknown damage state label {label}")


# ---------------------------------------------------------------------------
# time integration


def newmark_response(m_mat, c_mat, k_mat, load, dt,
                     disp0=None, vel0=None):
    """Implicit Newmark average-acceleration integration (gamma=1/2, beta=1/4).

    ``load`` is (n_dof, n_steps); returns (disp, vel, acc) of the same shape.
    Unconditionally stable for linear systems; no algorithmic damping.
    """
    m_mat = np.asarray(m_mat, dtype=float)
    c_mat = np.asarray(c_mat, dtype=float)
    k_mat = np.asarray(k_mat, dtype=float)
    load = np.asarray(load, dtype=float)
    n_dof, n_steps = load.shape

    d = np.zeros(n_dof) if disp0 is None else np.asarray(disp0, dtype=float).copy()
    v = np.zeros(n_dof) if vel0 is None else np.asarray(vel0, dtype=float).copy()
    a = np.linalg.solve(m_mat, load[:, 0] - c_mat @ v - k_mat @ d)

    b0 = 4.0 / dt**2
    b1 = 2.0 / dt
    k_eff_inv = np.linalg.inv(k_mat + b0 * m_mat + b1 * c_mat)

    disp = np.empty((n_dof, n_steps))
    vel = np.empty((n_dof, n_steps))
    acc = np.empty((n_dof, n_steps))
    disp[:, 0], vel[:, 0], acc[:, 0] = d, v, a
    for j in range(1, n_steps):
        rhs = load[:, j] + m_mat @ (b0 * d + 2.0 * b1 * v + a) + c_mat @ (b1 * d + v)
        d_new = k_eff_inv @ rhs
        a_new = b0 * (d_new - d) - 2.0 * b1 * v - a
        v_new = v + (dt / 2.0) * (a + a_new)
        d, v, a = d_new, v_new, a_new
        disp[:, j], vel[:, j], acc[:, j] = d, v, a
    if not (np.isfinite(disp[:, -1]).all() and np.isfinite(acc).all()):
        raise IntegrationError("non-finite response states; integration failed")
    return disp, vel, acc


@dataclass(frozen=True)
class AmbientExcitation:
    """Band-limited Gaussian base acceleration plus additive sensor noise."""

    bandwidth_fraction: float = 0.4   # low-pass corner as a fraction of Nyquist
    snr_db: float = 20.0              # sensor noise level relative to response RMS
    rms: float = 1.0                  # ground acceleration RMS, m/s^2

    def __post_init__(self):
        if not 0.0 < self.bandwidth_fraction < 1.0:
            raise ValueError("bandwidth fraction must lie in (0, 1)")
        if self.rms < 0:
            raise ValueError("excitation rms must be non-negative")


SUPPORTED_RATES = (200.0, 320.0)


def simulate(model: BuildingModel, excitation: AmbientExcitation,
             duration_s: float, sampling_rate_hz: float, seed) -> np.ndarray:
    """Absolute story accelerations (3 x samples) under ambient base excitation.

    Deterministic for a fixed seed: one generator drives the ground motion
    first and the sensor noise second.
    """
    if sampling_rate_hz not in SUPPORTED_RATES:
        raise InvalidModelError(f"sampling rate must be one of {SUPPORTED_RATES}")
    n_steps = int(round(duration_s * sampling_rate_hz))
    if n_steps < RECORD_SAMPLES:
        raise InsufficientDataError("simulation shorter than one record")

    rng = np.random.default_rng(seed)
    ug = rng.standard_normal(n_steps)
    sos = signal.butter(4, excitation.bandwidth_fraction, output="sos")
    ug = signal.sosfiltfilt(sos, ug)
    if excitation.rms > 0:
        ug *= excitation.rms / np.sqrt(np.mean(ug**2))
    else:
        ug = np.zeros(n_steps)

    m_mat = mass_matrix(model)
    c_mat = rayleigh_damping(model)
    k_mat = stiffness_matrix(model)
    load = -m_mat @ np.ones((N_STORIES, 1)) @ ug[None, :]
    _, _, acc_rel = newmark_response(m_mat, c_mat, k_mat, load, 1.0 / sampling_rate_hz)

    acc_abs = acc_rel + ug[None, :]
    rms = np.sqrt(np.mean(acc_abs**2, axis=1, keepdims=True))
    noise = rng.standard_normal(acc_abs.shape) * rms * 10.0 ** (-excitation.snr_db / 20.0)
    return acc_abs + noise


# ---------------------------------------------------------------------------
# dataset generation


@dataclass(frozen=True)
class ClassSpec:
    """One labeled simulation class and how many records to cut from it."""

    label: int
    model: BuildingModel
    records: int


@dataclass
class Dataset:
    """Stacked labeled records: data is (records, channels, samples)."""

    data: np.ndarray
    labels: np.ndarray
    record_ids: np.ndarray
    sampling_rate_hz: float

    def __len__(self):
        return self.data.shape[0]

    def subset(self, mask) -> "Dataset":
        mask = np.asarray(mask)
        return Dataset(self.data[mask], self.labels[mask], self.record_ids[mask],
                       self.sampling_rate_hz)

    def class_histogram(self) -> dict[int, int]:
        values, counts = np.unique(self.labels, return_counts=True)
        return {int(v): int(c) for v, c in zip(values, counts)}


def deterioration_class_specs(base_model: BuildingModel, records_per_class: int,
                              adr: float = 2e-3,
                              state_years=(12.5, 25.0, 37.5, 50.0)) -> list[ClassSpec]:
    """Healthy class plus 3 scenarios x 4 severity states.

    Each localization class holds ``records_per_class`` records; the
    deteriorated classes split them evenly over the four severity states.
    """
    if records_per_class % len(state_years) != 0:
        raise InsufficientDataError(
            f"records per class must divide evenly over {len(state_years)} severity states"
        )
    per_state = records_per_class // len(state_years)
    specs = [ClassSpec(HEALTHY_LABEL, base_model, records_per_class)]
    for story in (1, 2, 3):
        for state, years in enumerate(state_years, start=2):
            scen = DeteriorationScenario(story, adr, years, state)
            specs.append(ClassSpec(deterioration_label(story, state),
                                   apply_deterioration(base_model, scen), per_state))
    return specs


def damage_class_specs(base_model: BuildingModel, records_per_state: int,
                       column_reduction: float = COLUMN_SECTION_REDUCTION,
                       added_mass_kg: float = ENV_MASS_KG) -> list[ClassSpec]:
    """Nine damage states, ``records_per_state`` records each."""
    return [
        ClassSpec(scen.state_label, apply_damage(base_model, scen), records_per_state)
        for scen in damage_state_catalog(column_reduction, added_mass_kg)
    ]


def generate_dataset(class_specs: list[ClassSpec], sampling_rate_hz: float, seed,
                     excitation: AmbientExcitation | None = None,
                     settle_samples: int = 2048) -> Dataset:
    """Cut non-overlapping 1024-sample records from one simulation per class.

    Each class draws from an independent child seed, so classes can be
    regenerated (or parallelized) without disturbing one another. The first
    ``settle_samples`` samples are discarded as start-up transient.
    """
    if excitation is None:
        excitation = AmbientExcitation()
    if any(spec.records < 1 for spec in class_specs):
        raise InsufficientDataError("every class needs at least one record")

    children = np.random.SeedSequence(seed).spawn(len(class_specs))
    blocks, labels = [], []
    for spec, child in zip(class_specs, children):
        n_samples = settle_samples + spec.records * RECORD_SAMPLES
        acc = simulate(spec.model, excitation, n_samples / sampling_rate_hz,
                       sampling_rate_hz, child)
        if acc.shape[1] < n_samples:
            raise InsufficientDataError("simulation too short for requested record count")
        for r in range(spec.records):
            lo = settle_samples + r * RECORD_SAMPLES
            blocks.append(acc[:, lo:lo + RECORD_SAMPLES])
            labels.append(spec.label)

    data = np.stack(blocks)
    return Dataset(data=data, labels=np.asarray(labels, dtype=np.int64),
                   record_ids=np.arange(len(labels), dtype=np.int64),
                   sampling_rate_hz=float(sampling_rate_hz))
