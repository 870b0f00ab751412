import numpy as np
import pytest

from uavad.errors import BadJson, EmptyDataset, ShapeMismatch, VersionMismatch
from uavad.features import NormParams, WindowedDataset
from uavad.neural import (
    AdamState,
    LossKind,
    LstmLayerSpec,
    ModelKind,
    ModelSpec,
    RegKind,
    Regularization,
    adam_step,
    forward,
    gradient_check,
    init_weights,
    load_model,
    loss_and_gradients,
    preset,
    reconstruction_errors,
    reduced_spec,
    save_model,
    train,
    weight_names,
)
from uavad.neural.network import TrainedModel, regularization_loss


def tiny_spec(loss=LossKind.MAE, reg=Regularization(RegKind.NONE), timesteps=6):
    return ModelSpec(
        kind=ModelKind.VIBRATION,
        timesteps=timesteps,
        features=2,
        encoder=(LstmLayerSpec(2, 5, True), LstmLayerSpec(5, 3, False)),
        decoder=(LstmLayerSpec(3, 3, True), LstmLayerSpec(3, 5, True)),
        loss=loss,
        reg=reg,
        learning_rate=0.001,
        batch_size=4,
        normalize=False,
    )


def make_dataset(data, stride=1):
    norm = NormParams(data.reshape(-1, data.shape[2]).min(axis=0),
                      data.reshape(-1, data.shape[2]).max(axis=0))
    prov = [("syn", i * 100, i * 100 + 99) for i in range(data.shape[0])]
    return WindowedDataset(data, norm, prov, data.shape[1], stride)


class TestPresets:
    def test_vibration(self):
        spec = preset(ModelKind.VIBRATION)
        assert spec.timesteps == 200 and spec.features == 3
        assert [(l.input_size, l.hidden_size, l.return_sequences) for l in spec.encoder] \
            == [(3, 100, True), (100, 16, False)]
        assert [(l.input_size, l.hidden_size, l.return_sequences) for l in spec.decoder] \
            == [(16, 16, True), (16, 100, True)]
        assert spec.head_input == 100
        assert spec.loss is LossKind.MAE
        assert spec.reg.kind is RegKind.L2 and spec.reg.factor == 0.001
        assert spec.learning_rate == 0.001 and spec.batch_size == 200

    def test_attitude(self):
        spec = preset(ModelKind.ATTITUDE)
        assert spec.timesteps == 200 and spec.features == 3
        assert [(l.input_size, l.hidden_size) for l in spec.encoder] == [(3, 64)]
        assert [(l.input_size, l.hidden_size) for l in spec.decoder] == [(64, 64)]
        assert spec.loss is LossKind.MAE
        assert spec.reg.kind is RegKind.L1 and spec.reg.factor == 0.00015
        assert spec.learning_rate == 0.001 and spec.batch_size == 200
        assert spec.normalize is False

    def test_compass(self):
        spec = preset(ModelKind.COMPASS)
        assert spec.timesteps == 50 and spec.features == 3
        assert [(l.input_size, l.hidden_size) for l in spec.encoder] == [(3, 8)]
        assert [(l.input_size, l.hidden_size) for l in spec.decoder] == [(8, 16)]
        assert spec.loss is LossKind.MSE
        assert spec.reg.kind is RegKind.NONE
        assert spec.batch_size == 100


class TestForward:
    def test_zero_weights_zero_output(self):
        spec = tiny_spec()
        weights = {name: np.zeros_like(w)
                   for name, w in init_weights(spec, np.random.default_rng(0)).items()}
        batch = np.random.default_rng(1).normal(size=(3, spec.timesteps, spec.features))
        recon, _ = forward(spec, weights, batch)
        assert np.all(recon == 0.0)

    def test_output_shape(self):
        spec = tiny_spec()
        weights = init_weights(spec, np.random.default_rng(0))
        recon, _ = forward(spec, weights, np.zeros((7, spec.timesteps, spec.features)))
        assert recon.shape == (7, spec.timesteps, spec.features)

    def test_batch_row_independence(self):
        spec = tiny_spec()
        weights = init_weights(spec, np.random.default_rng(0))
        batch = np.random.default_rng(2).normal(size=(4, spec.timesteps, spec.features))
        full, _ = forward(spec, weights, batch)
        one, _ = forward(spec, weights, batch[1:2])
        assert np.abs(full[1] - one[0]).max() <= 1e-12

    def test_shape_mismatch(self):
        spec = tiny_spec()
        weights = init_weights(spec, np.random.default_rng(0))
        with pytest.raises(ShapeMismatch):
            forward(spec, weights, np.zeros((2, spec.timesteps + 1, spec.features)))


class TestLoss:
    def test_perfect_reconstruction_zero(self):
        spec = tiny_spec()
        weights = {name: np.zeros_like(w)
                   for name, w in init_weights(spec, np.random.default_rng(0)).items()}
        loss, _ = loss_and_gradients(spec, weights, np.zeros((2, 6, 2)))
        assert loss == 0.0

    def test_zero_model_unit_target_mae(self):
        spec = tiny_spec()
        weights = {name: np.zeros_like(w)
                   for name, w in init_weights(spec, np.random.default_rng(0)).items()}
        loss, _ = loss_and_gradients(spec, weights, np.ones((2, 6, 2)))
        assert loss == pytest.approx(1.0)

    def test_loss_non_negative(self):
        spec = tiny_spec(reg=Regularization(RegKind.L2, 0.001))
        rng = np.random.default_rng(3)
        for _ in range(10):
            weights = init_weights(spec, rng)
            batch = rng.normal(size=(2, 6, 2))
            loss, _ = loss_and_gradients(spec, weights, batch)
            assert loss >= 0.0

    def test_l2_monotonicity(self):
        plain = tiny_spec()
        reg = tiny_spec(reg=Regularization(RegKind.L2, 0.001))
        rng = np.random.default_rng(4)
        weights = init_weights(plain, rng)
        batch = rng.normal(size=(2, 6, 2))
        l0, _ = loss_and_gradients(plain, weights, batch)
        l1, _ = loss_and_gradients(reg, weights, batch)
        assert l1 > l0
        zeros = {name: np.zeros_like(w) for name, w in weights.items()}
        assert regularization_loss(reg, zeros) == 0.0

    def test_reg_excludes_biases(self):
        spec = tiny_spec(reg=Regularization(RegKind.L2, 0.5))
        weights = {name: np.zeros_like(w)
                   for name, w in init_weights(spec, np.random.default_rng(0)).items()}
        for name in weights:
            if name.endswith("_b"):
                weights[name] += 3.0
        assert regularization_loss(spec, weights) == 0.0


class TestAdam:
    def test_first_step_hand_value(self):
        # t=1, g=0.5: m_hat=0.5, v_hat=0.25 -> step = -lr * 0.5/(0.5+eps)
        w = {"p": np.array([1.0])}
        g = {"p": np.array([0.5])}
        new_w, state = adam_step(w, g, AdamState.zeros_like(w), lr=0.001)
        assert state.t == 1
        expected = 1.0 - 0.001 * (0.5 / (0.5 + 1e-8))
        assert new_w["p"][0] == pytest.approx(expected, abs=1e-12)
        assert new_w["p"][0] - 1.0 == pytest.approx(-0.000999998, abs=2e-8)

    def test_zero_gradient_no_move(self):
        w = {"p": np.array([1.0, -2.0])}
        g = {"p": np.zeros(2)}
        new_w, state = adam_step(w, g, AdamState.zeros_like(w), lr=0.001)
        assert np.array_equal(new_w["p"], w["p"])
        assert state.t == 1

    def test_deterministic(self):
        rng = np.random.default_rng(5)
        w = {"p": rng.normal(size=4)}
        g = {"p": rng.normal(size=4)}
        s0 = AdamState.zeros_like(w)
        out1 = adam_step({k: v.copy() for k, v in w.items()}, g, s0, lr=0.01)
        out2 = adam_step({k: v.copy() for k, v in w.items()}, g,
                         AdamState.zeros_like(w), lr=0.01)
        assert np.array_equal(out1[0]["p"], out2[0]["p"])
        assert np.array_equal(out1[1].m["p"], out2[1].m["p"])

    def test_shape_mismatch(self):
        w = {"p": np.zeros(3)}
        g = {"p": np.zeros(4)}
        with pytest.raises(ShapeMismatch):
            adam_step(w, g, AdamState.zeros_like(w), lr=0.01)


class TestGradientCheck:
    def test_presets_within_bound(self):
        for kind in ModelKind:
            assert gradient_check(preset(kind), seed=0, h=1e-5) <= 1e-4

    def test_mse_variant_tighter(self):
        # smooth loss: a small MSE-only net checks an order tighter
        spec = ModelSpec(
            kind=ModelKind.COMPASS,
            timesteps=8,
            features=2,
            encoder=(LstmLayerSpec(2, 6, False),),
            decoder=(LstmLayerSpec(6, 6, True),),
            loss=LossKind.MSE,
            reg=Regularization(RegKind.NONE),
            learning_rate=0.001,
            batch_size=2,
            normalize=True,
        )
        assert gradient_check(spec, seed=0, h=1e-5) <= 1e-6

    def test_larger_h_is_worse(self):
        spec = preset(ModelKind.COMPASS)
        assert gradient_check(spec, seed=1, h=1e-1) > gradient_check(spec, seed=1, h=1e-5)

    def test_h_must_be_positive(self):
        with pytest.raises(ValueError):
            gradient_check(preset(ModelKind.COMPASS), seed=0, h=0.0)


class TestTrain:
    def smooth_windows(self, n, timesteps, features, seed):
        rng = np.random.default_rng(seed)
        t = np.linspace(0, 2 * np.pi, timesteps)
        data = np.empty((n, timesteps, features))
        for i in range(n):
            phase = rng.uniform(0, 2 * np.pi, features)
            amp = rng.uniform(0.3, 0.8, features)
            data[i] = 0.5 + amp * np.sin(t[:, None] + phase)
        return make_dataset(data)

    def test_deterministic_weights(self):
        spec = tiny_spec()
        ds = self.smooth_windows(24, spec.timesteps, spec.features, 7)
        m1 = train(spec, ds, None, epochs=3, seed=11)
        m2 = train(spec, ds, None, epochs=3, seed=11)
        for name in weight_names(spec):
            assert np.array_equal(m1.weights[name], m2.weights[name])
        assert m1.training_history == m2.training_history

    def test_learning_halves_loss(self):
        spec = ModelSpec(
            kind=ModelKind.VIBRATION,
            timesteps=20,
            features=2,
            encoder=(LstmLayerSpec(2, 16, False),),
            decoder=(LstmLayerSpec(16, 16, True),),
            loss=LossKind.MAE,
            reg=Regularization(RegKind.NONE),
            learning_rate=0.001,
            batch_size=32,
            normalize=False,
        )
        ds = self.smooth_windows(500, spec.timesteps, spec.features, 13)
        model = train(spec, ds, None, epochs=30, seed=3)
        first = model.training_history[0][0]
        last = model.training_history[-1][0]
        assert last <= 0.5 * first

    def test_zero_epochs_rejected(self):
        spec = tiny_spec()
        ds = self.smooth_windows(8, spec.timesteps, spec.features, 1)
        with pytest.raises(ValueError):
            train(spec, ds, None, epochs=0, seed=0)

    def test_empty_dataset(self):
        spec = tiny_spec()
        data = np.zeros((0, spec.timesteps, spec.features))
        ds = WindowedDataset(data, NormParams(np.zeros(2), np.ones(2)), [], spec.timesteps, 1)
        with pytest.raises(EmptyDataset):
            train(spec, ds, None, epochs=1, seed=0)

    def test_val_loss_recorded(self):
        spec = tiny_spec()
        tr = self.smooth_windows(16, spec.timesteps, spec.features, 2)
        va = self.smooth_windows(6, spec.timesteps, spec.features, 3)
        model = train(spec, tr, va, epochs=2, seed=0)
        assert len(model.training_history) == 2
        assert all(v is not None for _, v in model.training_history)


class TestSerialization:
    def trained(self):
        spec = tiny_spec(reg=Regularization(RegKind.L2, 0.001))
        rng = np.random.default_rng(21)
        weights = init_weights(spec, rng)
        norm = NormParams(np.array([0.0, -1.0]), np.array([2.0, 5.0]))
        return TrainedModel(spec, weights, norm, threshold=0.125,
                            training_history=[(0.5, 0.6), (0.4, None)])

    def test_round_trip_bit_identical_scores(self):
        model = self.trained()
        back = load_model(save_model(model))
        rng = np.random.default_rng(22)
        windows = rng.normal(size=(10, model.spec.timesteps, model.spec.features))
        a = reconstruction_errors(model.spec, model.weights, windows)
        b = reconstruction_errors(back.spec, back.weights, windows)
        assert np.array_equal(a, b)
        assert back.threshold == model.threshold
        assert back.training_history == model.training_history
        assert np.array_equal(back.norm.minimum, model.norm.minimum)

    def test_truncated_is_bad_json(self):
        text = save_model(self.trained())
        with pytest.raises(BadJson):
            load_model(text[: len(text) // 2])

    def test_version_mismatch(self):
        text = save_model(self.trained()).replace('"version": 1', '"version": "99"')
        with pytest.raises(VersionMismatch):
            load_model(text)

    def test_tampered_shape_rejected(self):
        import json

        doc = json.loads(save_model(self.trained()))
        doc["weights"]["head_b"]["shape"] = [3]
        with pytest.raises(ShapeMismatch):
            load_model(json.dumps(doc))


class TestInit:
    def test_forget_gate_bias_one(self):
        spec = tiny_spec()
        weights = init_weights(spec, np.random.default_rng(0))
        for i, layer in enumerate(spec.encoder):
            b = weights[f"enc{i}_b"]
            h = layer.hidden_size
            assert np.all(b[h : 2 * h] == 1.0)
            assert np.all(b[:h] == 0.0) and np.all(b[2 * h :] == 0.0)

    def test_reduced_spec_halves(self):
        small = reduced_spec(preset(ModelKind.VIBRATION))
        assert small.timesteps == 8
        assert [l.hidden_size for l in small.encoder] == [50, 8]
        assert [l.hidden_size for l in small.decoder] == [8, 50]
