"""Simulator tests: modal analysis against an independent eigensolver,
Newmark integration against closed-form modal vibration, and dataset
generation contracts."""

import numpy as np
import pytest
from scipy import linalg

from dipshm import synth
from dipshm.errors import (
    DegenerateScenarioError,
    InsufficientDataError,
    InvalidModelError,
)

UNIFORM = synth.BuildingModel((1.0, 1.0, 1.0), (1.0, 1.0, 1.0))


def oracle_frequencies(model):
    """Independent route: dense generalized eigenproblem via scipy QZ."""
    m_mat = synth.mass_matrix(model)
    k_mat = synth.stiffness_matrix(model)
    lam = np.sort(linalg.eigvals(k_mat, m_mat).real)
    return np.sqrt(lam) / (2 * np.pi)


def random_model(rng):
    return synth.BuildingModel(
        tuple(rng.uniform(100.0, 5000.0, 3)),
        tuple(10 ** rng.uniform(4.0, 7.0, 3)),
    )


class TestModalFrequencies:
    def test_uniform_model_ratios(self):
        # eigenvalues of the uniform 3-story chain: 2*sin((2i-1)*pi/14)
        freqs = synth.modal_frequencies(UNIFORM)
        expected = 2 * np.sin(np.array([1, 3, 5]) * np.pi / 14) / (2 * np.pi)
        np.testing.assert_allclose(freqs, expected, rtol=1e-12)

    def test_matches_generalized_eigensolver(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            model = random_model(rng)
            got = synth.modal_frequencies(model)
            want = oracle_frequencies(model)
            np.testing.assert_allclose(got, want, rtol=1e-10)

    def test_stiffness_scaling_doubles_frequencies(self):
        rng = np.random.default_rng(3)
        model = random_model(rng)
        scaled = model.with_stiffnesses([4 * k for k in model.story_stiffnesses])
        np.testing.assert_allclose(synth.modal_frequencies(scaled),
                                   2 * synth.modal_frequencies(model), rtol=1e-12)

    def test_big_story1_cut_lowers_every_frequency(self):
        before = synth.modal_frequencies(UNIFORM)
        after = synth.modal_frequencies(UNIFORM.with_stiffnesses((0.125, 1.0, 1.0)))
        assert np.all(after < before)

    def test_monotone_stiffness_reduction_never_raises_frequencies(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            model = random_model(rng)
            story = int(rng.integers(0, 3))
            factor = rng.uniform(0.1, 0.999)
            ks = list(model.story_stiffnesses)
            ks[story] *= factor
            before = synth.modal_frequencies(model)
            after = synth.modal_frequencies(model.with_stiffnesses(ks))
            assert np.all(after <= before * (1 + 1e-12))

    def test_invalid_model_rejected(self):
        with pytest.raises(InvalidModelError):
            synth.BuildingModel((1.0, -1.0, 1.0), (1.0, 1.0, 1.0))
        with pytest.raises(InvalidModelError):
            synth.BuildingModel((1.0, 1.0, 1.0), (1.0, 0.0, 1.0))
        with pytest.raises(InvalidModelError):
            synth.BuildingModel((1.0, 1.0, 1.0), (1.0, 1.0, 1.0), (0.02, 1.5))


class TestDeterioratedStiffness:
    def test_fifty_years_at_2e3(self):
        scen = synth.DeteriorationScenario(1, 2e-3, 50.0, 5)
        assert synth.deteriorated_stiffness(1000.0, scen) == pytest.approx(900.0)

    def test_zero_duration_unchanged(self):
        scen = synth.DeteriorationScenario(2, 2e-3, 0.0, 2)
        assert synth.deteriorated_stiffness(1234.5, scen) == 1234.5

    def test_zero_rate_unchanged(self):
        scen = synth.DeteriorationScenario(3, 0.0, 80.0, 3)
        assert synth.deteriorated_stiffness(777.0, scen) == 777.0

    def test_full_loss_rejected(self):
        with pytest.raises(DegenerateScenarioError):
            synth.DeteriorationScenario(1, 0.02, 50.0, 5)


class TestNewmark:
    def test_zero_load_zero_ic_stays_zero(self):
        m = synth.mass_matrix(UNIFORM)
        k = synth.stiffness_matrix(UNIFORM)
        d, v, a = synth.newmark_response(m, 0 * m, k, np.zeros((3, 200)), 1 / 200)
        assert np.all(d == 0) and np.all(v == 0) and np.all(a == 0)

    def test_free_vibration_matches_closed_form_amplitude(self):
        # mode-1 initial displacement, no damping: d(t) = phi1 * cos(w1 t)
        model = synth.desk_model(fundamental_hz=3.0)
        freqs, shapes = synth.modal_analysis(model)
        phi1 = shapes[:, 0] / np.abs(shapes[:, 0]).max()
        dt = 1 / 200.0
        periods = 10
        n = int(round(periods / freqs[0] / dt)) + 1
        m = synth.mass_matrix(model)
        k = synth.stiffness_matrix(model)
        d, _, _ = synth.newmark_response(m, 0 * m, k, np.zeros((3, n)), dt, disp0=phi1)
        top = d[2] / phi1[2]     # closed form: cos(w1 t), amplitude 1
        steps_per_period = 1 / (freqs[0] * dt)
        for p in range(periods):
            window = top[int(p * steps_per_period): int((p + 1) * steps_per_period) + 1]
            assert abs(np.abs(window).max() - 1.0) < 5e-3

    def test_undamped_energy_conservation(self):
        rng = np.random.default_rng(5)
        model = synth.desk_model()
        m = synth.mass_matrix(model)
        k = synth.stiffness_matrix(model)
        d0 = rng.normal(size=3) * 1e-3
        d, v, _ = synth.newmark_response(m, 0 * m, k, np.zeros((3, 1000)), 1 / 200, disp0=d0)
        energy = 0.5 * np.einsum("it,ij,jt->t", v, m, v) + 0.5 * np.einsum("it,ij,jt->t", d, k, d)
        assert np.abs(energy / energy[0] - 1).max() < 0.01


class TestSimulate:
    def test_deterministic_for_fixed_seed(self):
        model = synth.desk_model()
        exc = synth.AmbientExcitation()
        a = synth.simulate(model, exc, 10.0, 200.0, seed=42)
        b = synth.simulate(model, exc, 10.0, 200.0, seed=42)
        assert a.shape == (3, 2000)
        np.testing.assert_array_equal(a, b)

    def test_different_seed_differs(self):
        model = synth.desk_model()
        exc = synth.AmbientExcitation()
        a = synth.simulate(model, exc, 10.0, 200.0, seed=1)
        b = synth.simulate(model, exc, 10.0, 200.0, seed=2)
        assert np.abs(a - b).max() > 0

    def test_zero_excitation_zero_response(self):
        model = synth.desk_model()
        exc = synth.AmbientExcitation(rms=0.0)
        a = synth.simulate(model, exc, 10.0, 200.0, seed=0)
        assert np.all(a == 0)

    def test_unsupported_rate_rejected(self):
        with pytest.raises(InvalidModelError):
            synth.simulate(synth.desk_model(), synth.AmbientExcitation(), 10.0, 500.0, 0)


class TestGenerateDataset:
    def test_deterioration_set_sizes(self):
        model = synth.desk_model()
        specs = synth.deterioration_class_specs(model, records_per_class=8)
        ds = synth.generate_dataset(specs, 200.0, seed=0, settle_samples=256)
        assert len(ds) == 4 * 8
        hist = ds.class_histogram()
        assert hist[synth.HEALTHY_LABEL] == 8
        # per scenario: 8 records split over 4 severity states
        for story in (1, 2, 3):
            states = [hist[synth.deterioration_label(story, s)] for s in (2, 3, 4, 5)]
            assert states == [2, 2, 2, 2]

    def test_damage_set_sizes(self):
        model = synth.desk_model(20.0, 6.0)
        specs = synth.damage_class_specs(model, records_per_state=5)
        ds = synth.generate_dataset(specs, 320.0, seed=0, settle_samples=256)
        assert len(ds) == 9 * 5
        assert sorted(ds.class_histogram()) == list(range(1, 10))

    def test_single_class_single_record(self):
        spec = [synth.ClassSpec(3, synth.desk_model(), 1)]
        ds = synth.generate_dataset(spec, 200.0, seed=1, settle_samples=128)
        assert len(ds) == 1
        assert ds.labels[0] == 3
        assert ds.data.shape == (1, 3, 1024)

    def test_records_are_consecutive_disjoint_slices(self):
        # records must be the non-overlapping windows of the class simulation
        spec = [synth.ClassSpec(0, synth.desk_model(), 3)]
        settle = 200
        ds = synth.generate_dataset(spec, 200.0, seed=9, settle_samples=settle)
        child = np.random.SeedSequence(9).spawn(1)[0]
        n_samples = settle + 3 * 1024
        full = synth.simulate(synth.desk_model(), synth.AmbientExcitation(),
                              n_samples / 200.0, 200.0, child)
        for r in range(3):
            lo = settle + r * 1024
            np.testing.assert_array_equal(ds.data[r], full[:, lo:lo + 1024])

    def test_deterministic(self):
        model = synth.desk_model()
        specs = synth.deterioration_class_specs(model, records_per_class=4)
        a = synth.generate_dataset(specs, 200.0, seed=5, settle_samples=128)
        b = synth.generate_dataset(specs, 200.0, seed=5, settle_samples=128)
        np.testing.assert_array_equal(a.data, b.data)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_indivisible_records_per_class_rejected(self):
        with pytest.raises(InsufficientDataError):
            synth.deterioration_class_specs(synth.desk_model(), records_per_class=5)


class TestLabels:
    def test_deterioration_grouping(self):
        assert synth.deterioration_location(synth.HEALTHY_LABEL) == 0
        assert synth.deterioration_location(synth.deterioration_label(2, 4)) == 2
        assert synth.deterioration_state(synth.deterioration_label(3, 5)) == 5

    def test_damage_grouping(self):
        assert synth.damage_location(1) == 0
        assert [synth.damage_location(s) for s in (2, 3, 4, 5)] == [1, 1, 1, 1]
        assert [synth.damage_location(s) for s in (6, 7)] == [2, 2]
        assert [synth.damage_location(s) for s in (8, 9)] == [3, 3]

    def test_damage_catalog_is_bijective(self):
        catalog = synth.damage_state_catalog()
        assert [c.state_label for c in catalog] == list(range(1, 10))
        # two-column states remove twice the single-column share
        assert catalog[4].stiffness_reduction == pytest.approx(2 * catalog[3].stiffness_reduction)
