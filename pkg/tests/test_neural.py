"""Layer-level examples, gradient checks, and training-loop contracts."""

import numpy as np
import pytest

from dipshm.errors import ShapeError, TrainingError
from dipshm.neural import (
    BatchNorm,
    Conv2D,
    Dense,
    Dropout,
    LayerSpec,
    MaxPool,
    ModelSpec,
    ReLU,
    Softmax,
    TrainConfig,
    build,
    cross_entropy,
    damage_localization_spec,
    learning_rate_at,
    localization_spec,
    relu,
    severity_spec,
    sgdm_step,
    softmax,
    train,
)
from dipshm.verify import GRAD_CHECK_KINDS, gradient_check


class TestFunctionalOps:
    def test_relu_examples(self):
        np.testing.assert_array_equal(relu(np.array([-2.0, 0.0, 3.0])), [0.0, 0.0, 3.0])
        x = np.array([0.5, 1.0, 7.0])
        np.testing.assert_array_equal(relu(x), x)

    def test_relu_gradient_convention(self):
        layer = ReLU()
        layer.forward(np.array([-1.0, 2.0]))
        np.testing.assert_array_equal(layer.backward(np.array([1.0, 1.0])), [0.0, 1.0])

    def test_softmax_uniform_and_sum(self):
        np.testing.assert_allclose(softmax(np.zeros(4)), [0.25] * 4, atol=1e-15)
        rng = np.random.default_rng(0)
        for _ in range(20):
            p = softmax(rng.normal(size=(3, 7)) * 10)
            np.testing.assert_allclose(p.sum(axis=-1), 1.0, atol=1e-12)

    def test_softmax_shift_invariance(self):
        rng = np.random.default_rng(1)
        z = rng.normal(size=9)
        np.testing.assert_allclose(softmax(z), softmax(z + 123.456), atol=1e-12)

    def test_cross_entropy_examples(self):
        assert cross_entropy(np.array([[0.0, 1.0]]), [1]) == pytest.approx(0.0, abs=1e-12)
        assert cross_entropy(np.array([[0.5, 0.5]]), [0]) == pytest.approx(np.log(2))

    def test_sgdm_hand_iteration(self):
        w, v = sgdm_step(np.array(1.0), np.array(0.0), np.array(0.5), 0.1, 0.9)
        assert v == pytest.approx(-0.05) and w == pytest.approx(0.95)
        w, v = sgdm_step(w, v, np.array(0.5), 0.1, 0.9)
        assert v == pytest.approx(-0.095) and w == pytest.approx(0.855)

    def test_sgdm_fixed_point(self):
        w, v = sgdm_step(np.array([3.0]), np.array([0.0]), np.array([0.0]), 0.1, 0.9)
        assert w[0] == 3.0 and v[0] == 0.0


class TestLayerExamples:
    def test_conv_hand_example(self):
        x = np.arange(1.0, 10.0).reshape(1, 3, 3, 1)
        w = np.array([[1.0, 0.0], [0.0, 1.0]]).reshape(2, 2, 1, 1)
        conv = Conv2D(w, np.zeros(1), stride=(1, 1), padding=(0, 0))
        out = conv.forward(x)[0, :, :, 0]
        np.testing.assert_allclose(out, [[6.0, 8.0], [12.0, 14.0]])

    def test_conv_identity_kernel(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(2, 5, 6, 1))
        conv = Conv2D(np.ones((1, 1, 1, 1)), np.zeros(1), padding=(0, 0))
        np.testing.assert_array_equal(conv.forward(x), x)

    def test_conv_zero_input_gives_bias(self):
        conv = Conv2D(np.ones((3, 3, 2, 4)), np.full(4, 1.5), padding="same")
        out = conv.forward(np.zeros((1, 4, 4, 2)))
        np.testing.assert_allclose(out, 1.5)

    def test_conv_oracle_random(self):
        # independent nested-loop cross-correlation
        rng = np.random.default_rng(3)
        x = rng.normal(size=(2, 5, 7, 3))
        w = rng.normal(size=(3, 2, 3, 4))
        b = rng.normal(size=4)
        conv = Conv2D(w, b, stride=(2, 1), padding=(0, 0))
        got = conv.forward(x)
        oh, ow = (5 - 3) // 2 + 1, 7 - 2 + 1
        want = np.zeros((2, oh, ow, 4))
        for n in range(2):
            for i in range(oh):
                for j in range(ow):
                    for f in range(4):
                        acc = b[f]
                        for ki in range(3):
                            for kj in range(2):
                                for c in range(3):
                                    acc += x[n, 2 * i + ki, j + kj, c] * w[ki, kj, c, f]
                        want[n, i, j, f] = acc
        np.testing.assert_allclose(got, want, rtol=1e-12)

    def test_conv_kernel_too_large(self):
        conv = Conv2D(np.ones((5, 5, 1, 1)), np.zeros(1), padding=(0, 0))
        with pytest.raises(ShapeError):
            conv.forward(np.zeros((1, 3, 3, 1)))

    def test_batchnorm_two_value_example(self):
        bn = BatchNorm(np.ones(1), np.zeros(1), eps=0.0)
        out = bn.forward(np.array([[1.0], [3.0]]), train=True)
        np.testing.assert_allclose(out.ravel(), [-1.0, 1.0])

    def test_batchnorm_fixed_point(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(64, 3))
        x = (x - x.mean(0)) / x.std(0)
        bn = BatchNorm(np.ones(3), np.zeros(3), eps=1e-12)
        out = bn.forward(x, train=True)
        np.testing.assert_allclose(out, x, atol=1e-6)

    def test_batchnorm_infer_never_mutates(self):
        bn = BatchNorm(np.ones(2), np.zeros(2))
        bn.forward(np.random.default_rng(5).normal(size=(8, 2)), train=True)
        mean_before = bn.running_mean.copy()
        var_before = bn.running_var.copy()
        bn.forward(np.random.default_rng(6).normal(size=(8, 2)) + 50.0, train=False)
        np.testing.assert_array_equal(bn.running_mean, mean_before)
        np.testing.assert_array_equal(bn.running_var, var_before)

    def test_batchnorm_batch_of_one_rejected(self):
        bn = BatchNorm(np.ones(2), np.zeros(2))
        with pytest.raises(ShapeError):
            bn.forward(np.zeros((1, 2)), train=True)

    def test_maxpool_examples(self):
        pool = MaxPool((2, 2))
        out = pool.forward(np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(1, 2, 2, 1))
        assert out.reshape(()) == 4.0

        pool = MaxPool((1, 2), stride=(1, 2))
        out = pool.forward(np.array([[1.0, 2.0, 3.0, 4.0]]).reshape(1, 1, 4, 1))
        np.testing.assert_array_equal(out.reshape(2), [2.0, 4.0])

    def test_maxpool_tie_routes_to_first(self):
        pool = MaxPool((2, 2))
        x = np.full((1, 2, 2, 1), 7.0)
        out = pool.forward(x)
        assert out.reshape(()) == 7.0
        dx = pool.backward(np.ones((1, 1, 1, 1)))
        np.testing.assert_array_equal(dx.reshape(2, 2), [[1.0, 0.0], [0.0, 0.0]])

    def test_maxpool_window_larger_than_input(self):
        with pytest.raises(ShapeError):
            MaxPool((4, 4)).forward(np.zeros((1, 2, 2, 1)))

    def test_dropout_infer_is_identity(self):
        x = np.random.default_rng(7).normal(size=(5, 9))
        drop = Dropout(0.5)
        assert drop.forward(x, train=False) is x

    def test_dropout_zeroed_fraction(self):
        rng = np.random.default_rng(8)
        p = 0.3
        n = 100_000
        out = Dropout(p).forward(np.ones(n), train=True, rng=rng)
        frac = float((out == 0).mean())
        assert abs(frac - p) <= 3 * np.sqrt(p * (1 - p) / n)

    def test_dropout_unbiased_expectation(self):
        x = np.arange(1.0, 11.0)
        drop = Dropout(0.4)
        rng = np.random.default_rng(9)
        acc = np.zeros_like(x)
        draws = 10_000
        for _ in range(draws):
            acc += drop.forward(x, train=True, rng=rng)
        np.testing.assert_allclose(acc / draws, x, rtol=0.02)

    def test_dense_flattens(self):
        rng = np.random.default_rng(10)
        x = rng.normal(size=(2, 3, 4, 1))
        dense = Dense(rng.normal(size=(12, 5)), np.zeros(5))
        assert dense.forward(x).shape == (2, 5)


class TestGradientChecks:
    @pytest.mark.parametrize("kind", GRAD_CHECK_KINDS + ("softmax-cross-entropy",))
    def test_layer_gradients(self, kind):
        rng = np.random.default_rng(hash(kind) % 2**31)
        worst = max(gradient_check(kind, rng) for _ in range(20))
        assert worst < 1e-4, f"{kind}: {worst:.3e}"


def tiny_spec(input_shape=(8, 8, 1), classes=2):
    layers = (
        LayerSpec("input"),
        LayerSpec("conv", {"kernel": (3, 3), "filters": 4, "stride": (1, 1), "padding": "same"}),
        LayerSpec("batchnorm"),
        LayerSpec("relu"),
        LayerSpec("maxpool", {"pool": (2, 2)}),
        LayerSpec("fullyconnected", {"width": classes}),
        LayerSpec("softmax"),
        LayerSpec("output"),
    )
    return ModelSpec(layers, input_shape, classes)


def blob_data(rng, n_per_class=4, shape=(8, 8, 1)):
    x0 = rng.normal(size=(n_per_class,) + shape) * 0.3 - 0.5
    x1 = rng.normal(size=(n_per_class,) + shape) * 0.3 + 0.5
    x = np.concatenate([x0, x1]).astype(np.float64)
    y = np.array([0] * n_per_class + [1] * n_per_class)
    return x, y


class TestTraining:
    def test_learning_rate_schedule(self):
        cfg = TrainConfig()
        assert learning_rate_at(1, cfg) == pytest.approx(0.002)
        assert learning_rate_at(20, cfg) == pytest.approx(0.002)
        assert learning_rate_at(21, cfg) == pytest.approx(0.0002)
        assert learning_rate_at(41, cfg) == pytest.approx(0.00002)

    def test_overfit_tiny_model(self):
        rng = np.random.default_rng(11)
        x, y = blob_data(rng)
        cfg = TrainConfig(max_epochs=200, batch_size=8, seed=3)
        result = train(tiny_spec(), (x, y), (x, y), cfg)
        assert result.best_val_accuracy == 1.0
        # epoch-averaged loss non-increasing over consecutive 20-epoch windows
        losses = [float(line.split(", ")[2]) for line in result.log]
        windows = [np.mean(losses[i:i + 20]) for i in range(0, 200, 20)]
        for a, b in zip(windows, windows[1:]):
            assert b <= a + 1e-6

    def test_determinism_bit_exact(self):
        rng = np.random.default_rng(12)
        x, y = blob_data(rng)
        cfg = TrainConfig(max_epochs=5, batch_size=4, seed=9)
        r1 = train(tiny_spec(), (x, y), (x, y), cfg)
        r2 = train(tiny_spec(), (x, y), (x, y), cfg)
        assert r1.log == r2.log
        for key in r1.state:
            np.testing.assert_array_equal(r1.state[key], r2.state[key])

    def test_divergence_raises_with_epoch(self):
        rng = np.random.default_rng(13)
        x, y = blob_data(rng)
        # absurd learning rate: weights overflow within a few epochs
        cfg = TrainConfig(max_epochs=50, batch_size=8, seed=1, learning_rate=1e12)
        with np.errstate(all="ignore"):
            with pytest.raises(TrainingError) as err:
                train(tiny_spec(), (x, y), (x, y), cfg)
        assert err.value.epoch is not None

    def test_dropout_only_in_training_mode(self):
        spec = severity_spec((16, 64, 3), 4)
        net = build(spec, rng=np.random.default_rng(0))
        x = np.random.default_rng(1).normal(size=(2, 16, 64, 3))
        a = net.forward(x, train=False)
        b = net.forward(x, train=False)
        np.testing.assert_array_equal(a, b)


class TestPredict:
    def test_zero_weight_model_uniform(self):
        spec = tiny_spec()
        net = build(spec, rng=np.random.default_rng(0))
        state = net.state_dict()
        for key in state:
            if not key.endswith("running_var"):
                state[key] = np.zeros_like(state[key])
        net.load_state_dict(state)
        pred, probs = net.predict(np.random.default_rng(2).normal(size=(3, 8, 8, 1)))
        np.testing.assert_allclose(probs, 0.5, atol=1e-12)
        assert np.all(pred == 0)

    def test_argmax_tie_breaks_low(self):
        assert int(np.argmax(np.array([0.5, 0.5]))) == 0
        assert int(np.argmax(np.array([0.1, 0.7, 0.1, 0.1]))) == 1


class TestArchitectures:
    def test_layer_counts(self):
        assert localization_spec((256, 1024, 3), 4).layer_count() == 22
        assert severity_spec((256, 1024, 3), 4).layer_count() == 19
        assert damage_localization_spec((256, 1024, 3), 4).layer_count() == 20

    def test_layer_inventories(self):
        def inventory(spec):
            kinds = {}
            for ls in spec.layers:
                kinds[ls.kind] = kinds.get(ls.kind, 0) + 1
            return kinds

        loc = inventory(localization_spec((128, 256, 3), 4))
        assert loc == {"input": 1, "conv": 3, "batchnorm": 3, "relu": 5,
                       "maxpool": 3, "dropout": 2, "fullyconnected": 3,
                       "softmax": 1, "output": 1}
        sev = inventory(severity_spec((128, 256, 3), 4))
        assert sev == {"input": 1, "conv": 3, "batchnorm": 3, "relu": 4,
                       "maxpool": 3, "dropout": 1, "fullyconnected": 2,
                       "softmax": 1, "output": 1}
        dam = inventory(damage_localization_spec((128, 256, 3), 4))
        assert dam == {"input": 1, "conv": 3, "batchnorm": 3, "relu": 4,
                       "maxpool": 3, "dropout": 2, "fullyconnected": 2,
                       "softmax": 1, "output": 1}

    def test_full_resolution_forward_shapes(self):
        x = np.random.default_rng(3).normal(size=(1, 256, 1024, 3)).astype(np.float32)
        for spec in (localization_spec((256, 1024, 3), 4),
                     damage_localization_spec((256, 1024, 3), 4)):
            net = build(spec, rng=np.random.default_rng(0), dtype=np.float32)
            assert net.forward(x).shape == (1, 4)

    def test_severity_class_widths(self):
        x = np.random.default_rng(4).normal(size=(2, 64, 128, 3)).astype(np.float32)
        for classes in (4, 2):
            net = build(severity_spec((64, 128, 3), classes),
                        rng=np.random.default_rng(0), dtype=np.float32)
            assert net.forward(x).shape == (2, classes)

    def test_inconsistent_chain_rejected(self):
        with pytest.raises(ShapeError):
            ModelSpec((LayerSpec("input"),
                       LayerSpec("fullyconnected", {"width": 3}),
                       LayerSpec("softmax")), (4, 4, 1), 2)
