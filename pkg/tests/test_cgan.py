import math

import numpy as np
import pytest

from cgan.losses import (
    CGANConfig,
    GANBatch,
    SubNetworkFeatureDistance,
    discriminator_accuracy,
    discriminator_loss,
    generator_loss,
)
from cgan.networks import Discriminator, Generator, encoder_sides, freeze, label_maps, set_constant_output
from cgan.synthesis import synthesize_expressions, write_synthesized
from cgan.trainer import build_networks, load_cgan, save_cgan, train_cgan
from dataeval.manifest import DEFAULT_CLASSES, SampleRecord
from dataeval.synth import DEFORMATIONS, template_landmarks
from errors import CheckpointError, ConfigurationError, ShapeError
from facegeom.landmarks import LandmarkSet

SMALL = dict(image_size=8, num_labels=3, z_dim=2, channels=(2, 3, 4), batch_size=2)


def _toy_pairs(rng, n=6, side=8, num_labels=3):
    neutral = rng.uniform(0.2, 0.8, size=(n, side, side))
    labels = np.arange(n) % num_labels
    expression = np.clip(neutral + 0.1 * (labels[:, None, None] - 1), 0.0, 1.0)
    return neutral, expression, labels


def _batch(rng, n=2, side=8, z_dim=2):
    x = rng.uniform(size=(n, side, side))
    return GANBatch(x=x, y=rng.uniform(size=(n, side, side)), z=rng.standard_normal((n, z_dim)), labels=np.arange(n) % 3)


def _snapshot(params):
    return [p.data.copy() for p in params]


class TestNetworks:
    def test_encoder_sides(self):
        assert encoder_sides(32) == [32, 16, 8, 4]
        assert encoder_sides(9) == [9, 4, 2, 1]

    def test_encoder_rejects_tiny_images(self):
        with pytest.raises(ConfigurationError):
            encoder_sides(2)

    @pytest.mark.parametrize("side", [32, 9])
    def test_generator_restores_input_size(self, rng, side):
        generator = Generator(side, num_labels=7, z_dim=4, channels=(2, 3, 4), seed=0)
        out = generator.forward(rng.uniform(size=(2, 1, side, side)), rng.standard_normal((2, 4)), [0, 6]).numpy()
        assert out.shape == (2, 1, side, side)
        assert np.all((out > 0) & (out < 1))

    def test_discriminator_outputs_probabilities(self, rng):
        discriminator = Discriminator(8, num_labels=3, channels=(2, 3, 4))
        x = rng.uniform(size=(3, 8, 8))
        out = discriminator.forward(x, x, [0, 1, 2]).numpy()
        assert out.shape == (3,)
        assert np.all((out > 0) & (out < 1))

    def test_label_maps(self):
        maps = label_maps([1, 0], 3, 2).numpy()
        assert maps.shape == (2, 3, 2, 2)
        np.testing.assert_array_equal(maps[0, :, 1, 1], [0, 1, 0])

    def test_label_out_of_range(self):
        with pytest.raises(ValueError):
            label_maps([3], 3, 2)

    def test_wrong_image_size(self, rng):
        generator = Generator(8, num_labels=3, z_dim=2, channels=(2, 3, 4))
        with pytest.raises(ShapeError):
            generator.forward(rng.uniform(size=(1, 1, 9, 9)), np.zeros((1, 2)), [0])

    def test_freeze_toggles_gradients(self):
        discriminator = Discriminator(8, num_labels=3, channels=(2, 3, 4))
        freeze(discriminator.parameters())
        assert not any(p.requires_grad for p in discriminator.parameters())
        freeze(discriminator.parameters(), frozen=False)
        assert all(p.requires_grad for p in discriminator.parameters())


class TestLosses:
    @pytest.fixture
    def nets(self):
        return build_networks(CGANConfig(**SMALL, seed=4))

    def test_perfect_reconstruction_has_zero_mse(self, nets, rng):
        generator, discriminator = nets
        batch = _batch(rng)
        y = generator.forward(batch.x, batch.z, batch.labels).numpy()[:, 0]
        exact = GANBatch(x=batch.x, y=y, z=batch.z, labels=batch.labels)
        losses = generator_loss(exact, generator, discriminator, CGANConfig(**SMALL, beta=0.0))
        assert losses.mse == 0.0

    def test_zero_weights_leave_adversarial_term(self, nets, rng):
        generator, discriminator = nets
        losses = generator_loss(_batch(rng), generator, discriminator, CGANConfig(**SMALL, alpha=0.0, beta=0.0))
        assert losses.total == pytest.approx(losses.adversarial, abs=1e-15)
        assert losses.mse > 0

    def test_constant_half_discriminator(self, nets, rng):
        generator, discriminator = nets
        set_constant_output(discriminator, 0.5)
        batch = _batch(rng)
        losses = generator_loss(batch, generator, discriminator, CGANConfig(**SMALL, alpha=0.0, beta=0.0))
        assert abs(losses.adversarial - math.log(2.0)) < 1e-9
        value = discriminator_loss(batch, generator, discriminator).item()
        assert abs(value - 2 * math.log(0.5)) < 1e-9

    def test_discriminator_value_matches_direct_evaluation(self, nets, rng):
        generator, discriminator = nets
        batch = _batch(rng, n=3)
        real_p = discriminator.forward(batch.y, batch.x, batch.labels).numpy()
        fake = generator.forward(batch.x, batch.z, batch.labels).numpy()
        fake_p = discriminator.forward(fake, batch.x, batch.labels).numpy()
        expected = np.mean(np.log(real_p) + np.log(1.0 - fake_p))
        assert discriminator_loss(batch, generator, discriminator).item() == pytest.approx(expected, abs=1e-12)

    def test_weighted_total(self, nets, rng):
        generator, discriminator = nets
        config = CGANConfig(**SMALL, alpha=3.0, beta=0.5)
        losses = generator_loss(_batch(rng), generator, discriminator, config, SubNetworkFeatureDistance(8, seed=1))
        assert losses.perceptual >= 0
        expected = losses.adversarial + 3.0 * losses.mse + 0.5 * losses.perceptual
        assert losses.total == pytest.approx(expected, rel=1e-12)

    def test_batch_size_mismatch(self, rng):
        with pytest.raises(ShapeError):
            GANBatch(x=np.zeros((2, 8, 8)), y=np.zeros((2, 8, 8)), z=np.zeros((3, 2)), labels=[0, 1])

    def test_noise_dimension_checked(self, nets, rng):
        generator, discriminator = nets
        batch = GANBatch(x=np.zeros((1, 8, 8)), y=np.zeros((1, 8, 8)), z=np.zeros((1, 5)), labels=[0])
        with pytest.raises(ShapeError):
            generator_loss(batch, generator, discriminator, CGANConfig(**SMALL))


class TestTraining:
    def test_zero_learning_rates_change_nothing(self, rng):
        config = CGANConfig(**SMALL, steps=3, g_learning_rate=0.0, d_learning_rate=0.0)
        networks = build_networks(config)
        before = _snapshot(networks[0].parameters() + networks[1].parameters())
        result = train_cgan(*_toy_pairs(rng), config, networks=networks)
        after = result.generator.parameters() + result.discriminator.parameters()
        for old, new in zip(before, after):
            np.testing.assert_array_equal(old, new.data)

    def test_history_is_seeded(self, rng):
        pairs = _toy_pairs(rng)
        config = CGANConfig(**SMALL, steps=4, seed=2)
        first = train_cgan(*pairs, config).history
        second = train_cgan(*pairs, config).history
        assert first == second
        assert [row["step"] for row in first] == [1, 2, 3, 4]
        assert set(first[0]) == {"step", "d_value", "g_total", "g_adversarial", "g_mse", "g_perceptual"}

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            train_cgan(np.zeros((0, 8, 8)), np.zeros((0, 8, 8)), np.zeros(0), CGANConfig(**SMALL))

    def test_image_size_must_match_config(self, rng):
        neutral, expression, labels = _toy_pairs(rng, side=9)
        with pytest.raises(ShapeError):
            train_cgan(neutral, expression, labels, CGANConfig(**SMALL))

    def test_save_load_round_trip(self, tmp_path, rng):
        result = train_cgan(*_toy_pairs(rng), CGANConfig(**SMALL, steps=1))
        restored = load_cgan(save_cgan(tmp_path / "gan", result))
        assert restored.config == result.config
        for a, b in zip(restored.generator.parameters(), result.generator.parameters()):
            np.testing.assert_array_equal(a.data, b.data)

    def test_load_missing(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_cgan(tmp_path)


class TestSynthesis:
    @pytest.fixture
    def generator(self):
        return Generator(8, num_labels=7, z_dim=2, channels=(2, 3, 4), seed=3)

    def test_one_image_per_label(self, generator, rng):
        neutral = rng.uniform(size=(20, 24))
        outputs = synthesize_expressions(generator, neutral)
        assert [label for label, _ in outputs] == list(range(7))
        for _, pixels in outputs:
            assert pixels.shape == (20, 24)
            assert pixels.min() >= 0.0 and pixels.max() <= 1.0

    def test_same_seed_same_images(self, generator, rng):
        neutral = rng.uniform(size=(8, 8))
        a = synthesize_expressions(generator, neutral, labels=[2], z_seed=5)
        b = synthesize_expressions(generator, neutral, labels=[2], z_seed=5)
        np.testing.assert_array_equal(a[0][1], b[0][1])

    def test_written_records_are_valid(self, generator, rng, tmp_path):
        outputs = synthesize_expressions(generator, rng.uniform(size=(16, 16)), labels=[0, 4])
        landmarks = LandmarkSet(template_landmarks(DEFORMATIONS[0]))
        names = list(DEFAULT_CLASSES[1:])
        records = write_synthesized(tmp_path, outputs, landmarks, "s001", names)
        parsed = [SampleRecord.model_validate(r) for r in records]
        assert [r.label for r in parsed] == ["anger", "happy"]
        assert {r.provenance for r in parsed} == {"cgan"}
        assert len({r.key for r in parsed}) == 2
        for r in parsed:
            assert (tmp_path / r.image).is_file()
            assert (tmp_path / r.landmarks).is_file()


@pytest.mark.slow
def test_generator_pixel_error_halves(rng):
    neutral = rng.uniform(0.2, 0.8, size=(16, 8, 8))
    labels = np.arange(16) % 3
    expression = rng.uniform(0.1, 0.9, size=(3, 8, 8))[labels]
    config = CGANConfig(image_size=8, num_labels=3, alpha=100.0, beta=0.0, steps=500, batch_size=8, seed=0)
    history = train_cgan(neutral, expression, labels, config).history
    start = history[0]["g_mse"]
    end = np.mean([row["g_mse"] for row in history[-10:]])
    assert end <= 0.5 * start


@pytest.mark.slow
def test_discriminator_separates_real_from_frozen_generator(rng):
    neutral = rng.uniform(0.0, 0.3, size=(16, 8, 8))
    expression = np.full((16, 8, 8), 0.95)
    labels = np.arange(16) % 3
    config = CGANConfig(image_size=8, num_labels=3, lam=0.0, alpha=0.0, beta=0.0, steps=200,
                        batch_size=8, train_generator=False, seed=1)
    result = train_cgan(neutral, expression, labels, config)
    batch = GANBatch(x=neutral, y=expression, z=np.random.default_rng(9).standard_normal((16, 8)), labels=labels)
    assert discriminator_accuracy(batch, result.generator, result.discriminator) > 0.9
