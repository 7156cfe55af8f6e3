import numpy as np
import pytest

from dataeval.loader import load_patch_dataset
from dataeval.manifest import load_manifest
from dataeval.synth import SynthSpec, synth_dataset
from errors import CheckpointError, ConfigurationError, ShapeError
from facegeom.patches import PatchGeometry
from model.mfp import MFPModel, ModelConfig, predict, shape_plan, train_step
from model.trainer import TrainingConfig, fit, load_model, predict_batch, save_model
from numcore.optim import RMSProp
from tests.reference import mfp_reference


def _snapshot(model):
    return {p.name: p.data.copy() for p in model.parameters()}


def _assert_same(before, model):
    for p in model.parameters():
        np.testing.assert_array_equal(p.data, before[p.name])


class TestShapePlan:
    def test_large_patch(self):
        plan = shape_plan(ModelConfig(patch_size=276, num_classes=8))
        assert plan.feature_length == 115320
        assert plan.concat_length == 807240
        assert plan.stage_parameters == (156, 2416, 48120)
        text = plan.to_text()
        assert "115320" in text and "807240" in text

    def test_p68_chain(self):
        plan = shape_plan(ModelConfig(patch_size=68))
        assert plan.feature_length == 3000
        assert plan.concat_length == 21000
        shapes = [row.shape for row in plan.rows if row.layer.startswith("C")]
        assert shapes == [(6, 64, 64), (6, 32, 32), (16, 28, 28), (16, 14, 14), (120, 10, 10), (120, 5, 5)]

    def test_smallest_valid_patch(self):
        assert shape_plan(ModelConfig(patch_size=36)).feature_length == 120

    @pytest.mark.parametrize("size,stage", [(19, "C3"), (35, "C3")])
    def test_too_small_patch_names_failing_stage(self, size, stage):
        with pytest.raises(ConfigurationError, match=stage):
            shape_plan(ModelConfig(patch_size=size))

    def test_frame_lists_every_layer(self):
        frame = shape_plan(ModelConfig(patch_size=36, num_classes=8, dense_width=256)).to_frame()
        assert list(frame.columns) == ["layer", "shape", "elements", "parameters"]
        assert frame.iloc[-1]["parameters"] == 257 * 8


class TestForward:
    @pytest.fixture(scope="class")
    def model(self):
        return MFPModel(ModelConfig(patch_size=36, num_classes=8, seed=5))

    def test_matches_straight_line_reference(self, model, rng):
        patches = rng.uniform(size=(7, 36, 36))
        probs = model.forward(patches).numpy()
        np.testing.assert_allclose(probs, mfp_reference(model, patches), rtol=0, atol=1e-10)

    def test_probabilities(self, model, rng):
        probs = model.forward(rng.uniform(size=(3, 7, 36, 36))).numpy()
        assert probs.shape == (3, 8)
        assert np.all(probs > 0)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)

    def test_inference_is_deterministic(self, model, rng):
        patches = rng.uniform(size=(7, 36, 36))
        np.testing.assert_array_equal(model.forward(patches).numpy(), model.forward(patches).numpy())

    def test_wrong_patch_size(self, model):
        with pytest.raises(ShapeError):
            model.forward(np.zeros((7, 40, 40)))

    def test_parameter_names_unique(self, model):
        names = [p.name for p in model.parameters()]
        assert len(names) == len(set(names)) == 7 * 6 + 4


class TestTrainStep:
    def _tiny(self, **overrides):
        config = dict(patch_size=36, num_classes=3, dense_width=16, dropout=0.0, seed=2)
        config.update(overrides)
        return MFPModel(ModelConfig(**config))

    def test_loss_decreases_on_fixed_batch(self, rng):
        model = self._tiny()
        patches = rng.uniform(size=(3, 7, 36, 36))
        labels = [0, 1, 2]
        optimizer = RMSProp(model.parameters(), learning_rate=1e-4)
        losses = [train_step(model, patches, labels, optimizer) for _ in range(11)]
        assert all(b < a for a, b in zip(losses, losses[1:]))

    def test_zero_learning_rate_changes_nothing(self, rng):
        model = self._tiny(dropout=0.5)
        patches = rng.uniform(size=(2, 7, 36, 36))
        before = _snapshot(model)
        optimizer = RMSProp(model.parameters(), learning_rate=0.0)
        losses = [train_step(model, patches, [0, 2], optimizer, rng=np.random.default_rng(0)) for _ in range(2)]
        _assert_same(before, model)
        assert losses[0] == losses[1]

    def test_default_dropout_masks_advance_between_steps(self, rng):
        patches = rng.uniform(size=(2, 7, 36, 36))
        runs = []
        for _ in range(2):
            model = self._tiny(dropout=0.5)
            optimizer = RMSProp(model.parameters(), learning_rate=0.0)
            runs.append([train_step(model, patches, [0, 2], optimizer) for _ in range(2)])
        assert runs[0] == runs[1]
        assert runs[0][0] != runs[0][1]

    def test_certain_prediction_has_zero_loss_and_gradient(self, rng):
        model = self._tiny()
        bias = np.zeros(3)
        bias[1] = 1e3
        model.dense2_b.assign(bias)
        before = _snapshot(model)
        loss = train_step(model, rng.uniform(size=(1, 7, 36, 36)), [1], RMSProp(model.parameters()))
        assert loss == 0.0
        assert all(not p.grad.any() for p in model.parameters())
        _assert_same(before, model)

    def test_label_out_of_range_rejected_before_update(self, rng):
        model = self._tiny()
        before = _snapshot(model)
        with pytest.raises(ValueError):
            train_step(model, rng.uniform(size=(1, 7, 36, 36)), [3], RMSProp(model.parameters()))
        _assert_same(before, model)


class TestPredict:
    def _constant_model(self, bias):
        model = MFPModel(ModelConfig(patch_size=36, num_classes=len(bias), dense_width=4))
        model.dense2_w.assign(np.zeros(model.dense2_w.shape))
        model.dense2_b.assign(np.asarray(bias, dtype=np.float64))
        return model

    def test_most_probable_class(self):
        model = self._constant_model(np.log([0.1, 0.7, 0.2]))
        label, probs = predict(model, np.zeros((7, 36, 36)))
        assert label == 1
        np.testing.assert_allclose(probs, [0.1, 0.7, 0.2], atol=1e-12)

    def test_tie_goes_to_lowest_index(self):
        bias = np.zeros(8)
        bias[2] = bias[5] = 5.0
        model = self._constant_model(bias)
        assert predict(model, np.zeros((7, 36, 36)))[0] == 2
        classes, _ = predict_batch(model, np.zeros((2, 7, 36, 36)))
        assert classes.tolist() == [2, 2]

    def test_predict_rejects_batches(self):
        model = self._constant_model(np.zeros(2))
        with pytest.raises(ShapeError):
            predict(model, np.zeros((2, 7, 36, 36)))


class TestTrainer:
    def test_fit_is_deterministic(self, rng):
        patches = rng.uniform(size=(4, 7, 36, 36))
        labels = [0, 1, 0, 1]
        config = TrainingConfig(epochs=2, batch_size=2, seed=9)
        runs = []
        for _ in range(2):
            model = MFPModel(ModelConfig(patch_size=36, num_classes=2, dense_width=8, seed=1))
            runs.append((fit(model, patches, labels, config), _snapshot(model)))
        assert runs[0][0] == runs[1][0]
        assert len(runs[0][0]) == 2
        _assert_same(runs[0][1], model)

    def test_zero_epochs_returns_empty_history(self, rng):
        model = MFPModel(ModelConfig(patch_size=36, num_classes=2, dense_width=8))
        before = _snapshot(model)
        assert fit(model, rng.uniform(size=(2, 7, 36, 36)), [0, 1], TrainingConfig(epochs=0)) == []
        _assert_same(before, model)

    def test_save_load_round_trip(self, tmp_path, rng):
        model = MFPModel(ModelConfig(patch_size=36, num_classes=3, dense_width=8, seed=4))
        save_model(tmp_path / "bundle", model, ["neutral", "anger", "contempt"])
        restored, classes = load_model(tmp_path / "bundle")
        assert classes == ["neutral", "anger", "contempt"]
        assert restored.config == model.config
        patches = rng.uniform(size=(7, 36, 36))
        np.testing.assert_array_equal(restored.forward(patches).numpy(), model.forward(patches).numpy())

    def test_save_requires_one_name_per_class(self, tmp_path):
        model = MFPModel(ModelConfig(patch_size=36, num_classes=3, dense_width=8))
        with pytest.raises(ShapeError):
            save_model(tmp_path, model, ["neutral"])

    def test_load_missing_bundle(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_model(tmp_path / "absent")


@pytest.mark.slow
def test_overfits_synthetic_training_set(tmp_path):
    _, path = synth_dataset(SynthSpec(subjects=16, classes=8, per=1, noise=0.01), tmp_path, seed=0)
    data = load_patch_dataset(load_manifest(path), geometry=PatchGeometry(patch_size=36), threads=4)
    model = MFPModel(ModelConfig(patch_size=36, num_classes=8, seed=0))
    history = fit(model, data.patches, data.labels, TrainingConfig(epochs=30, batch_size=16, seed=0))
    assert history[-1]["accuracy"] >= 0.95
