import numpy as np
import pytest

from augment.expand import expand_dataset
from augment.transforms import (
    DEFAULT_PLAN,
    CircularShift,
    Rotate90,
    Rotate180,
    Translate,
    ZCAWhiten,
    apply_tf,
    parse_tf,
)
from augment.zca import fit_region_zca, fit_zca, renormalize, whiten
from errors import ConfigurationError, ShapeError

SQUARE = np.array([[1.0, 2.0], [3.0, 4.0]])


class TestTransforms:
    def test_quarter_turn(self):
        np.testing.assert_array_equal(apply_tf(SQUARE, Rotate90()), [[2, 4], [1, 3]])

    def test_half_turn(self):
        np.testing.assert_array_equal(apply_tf(SQUARE, Rotate180()), [[4, 3], [2, 1]])

    def test_translate_fills_with_zeros(self):
        np.testing.assert_array_equal(apply_tf(SQUARE, Translate(1, 0)), [[0, 1], [0, 3]])

    def test_translate_beyond_patch_is_empty(self):
        assert not apply_tf(SQUARE, Translate(2, -3)).any()

    def test_circular_shift_wraps(self):
        np.testing.assert_array_equal(apply_tf(SQUARE, CircularShift(1, 0)), [[2, 1], [4, 3]])

    def test_rotation_group(self, rng):
        patch = rng.uniform(size=(5, 5))
        quarter = Rotate90()
        twice = apply_tf(apply_tf(patch, quarter), quarter)
        np.testing.assert_array_equal(twice, apply_tf(patch, Rotate180()))
        np.testing.assert_array_equal(apply_tf(apply_tf(twice, quarter), quarter), patch)

    def test_random_offsets_stay_in_range(self, rng):
        tf = Translate()
        for _ in range(50):
            dx, dy = tf.offsets(36, rng)
            assert -4 <= dx <= 4 and -4 <= dy <= 4

    def test_random_offsets_need_generator(self):
        with pytest.raises(ConfigurationError):
            apply_tf(SQUARE, CircularShift())

    def test_zca_without_statistics(self):
        with pytest.raises(ConfigurationError):
            apply_tf(SQUARE, ZCAWhiten())

    def test_non_square_patch(self):
        with pytest.raises(ShapeError):
            apply_tf(np.zeros((2, 3)), Rotate90())


class TestParsing:
    @pytest.mark.parametrize("text", list(DEFAULT_PLAN) + ["translate:2,-1", "shift:3,0"])
    def test_spec_round_trip(self, text):
        assert parse_tf(text).spec() == text

    def test_fixed_offsets(self):
        tf = parse_tf("Translate:2,-1")
        assert isinstance(tf, Translate)
        assert (tf.dx, tf.dy) == (2, -1)

    @pytest.mark.parametrize("text", ["flip", "rotate90:1,1", "translate:1", "shift:a,b"])
    def test_rejected(self, text):
        with pytest.raises(ConfigurationError):
            parse_tf(text)


class TestZCA:
    def test_identity_covariance_gives_identity(self):
        data = np.vstack([2 * np.eye(4), -2 * np.eye(4)]).reshape(8, 2, 2)
        stats = fit_zca(data, epsilon=1e-8)
        np.testing.assert_allclose(stats.whitening, np.eye(4), atol=1e-6)
        np.testing.assert_allclose(stats.mean, 0.0, atol=1e-15)

    def test_identical_patches_whiten_to_zero(self, rng):
        patch = rng.uniform(size=(3, 3))
        stats = fit_zca(np.stack([patch, patch]))
        whitened = whiten(stats, patch)
        np.testing.assert_allclose(whitened, 0.0, atol=1e-12)
        assert not renormalize(whitened).any()

    def test_hand_eigendecomposition(self):
        eps = 1e-2
        stats = fit_zca(np.array([[2.0, 0.0], [-2.0, 0.0]]), epsilon=eps)
        expected = np.diag([1 / np.sqrt(4 + eps), 1 / np.sqrt(eps)])
        np.testing.assert_allclose(stats.whitening, expected, atol=1e-8)

    def test_whitened_covariance_is_identity(self, rng):
        mixing = rng.standard_normal((9, 9))
        data = rng.standard_normal((400, 9)) @ mixing + 3.0
        stats = fit_zca(data, epsilon=1e-10)
        out = np.stack([whiten(stats, row) for row in data])
        cov = (out - out.mean(axis=0)).T @ (out - out.mean(axis=0)) / out.shape[0]
        np.testing.assert_allclose(cov, np.eye(9), atol=1e-6)

    def test_whitening_matrix_is_symmetric(self, rng):
        stats = fit_zca(rng.uniform(size=(20, 4, 4)))
        np.testing.assert_allclose(stats.whitening, stats.whitening.T, atol=0)

    def test_needs_two_patches(self):
        with pytest.raises(ShapeError):
            fit_zca(np.zeros((1, 3, 3)))

    def test_rejects_non_positive_epsilon(self):
        with pytest.raises(ConfigurationError):
            fit_zca(np.zeros((2, 3, 3)), epsilon=0.0)

    def test_pixel_count_must_match(self, rng):
        stats = fit_zca(rng.uniform(size=(5, 3, 3)))
        with pytest.raises(ShapeError):
            whiten(stats, np.zeros((4, 4)))

    def test_one_statistic_per_region(self, rng):
        stats = fit_region_zca(rng.uniform(size=(6, 7, 4, 4)))
        assert len(stats) == 7
        assert all(s.dim == 16 for s in stats)

    def test_renormalize_range(self, rng):
        out = renormalize(rng.standard_normal((6, 6)))
        assert out.min() == 0.0 and out.max() == 1.0


class TestExpand:
    @pytest.fixture
    def samples(self, rng):
        return rng.uniform(size=(10, 7, 8, 8)), np.arange(10) % 3

    def test_counts_and_labels(self, samples):
        patches, labels = samples
        out = expand_dataset(patches, labels, DEFAULT_PLAN, seed=1)
        assert len(out) == 60
        assert out.patches.shape == (60, 7, 8, 8)
        np.testing.assert_array_equal(out.labels, np.tile(labels, 6))
        np.testing.assert_array_equal(out.patches[:10], patches)
        assert out.tags[:10] == ["original"] * 10
        assert out.tags[10] == "tf:rotate90"
        assert out.tags[-1] == "tf:zca"
        np.testing.assert_array_equal(out.source_index, np.tile(np.arange(10), 6))
        assert len(out.zca_stats) == 7

    def test_without_zca_no_statistics_fitted(self, samples):
        out = expand_dataset(*samples, ["rotate180"])
        assert out.zca_stats is None
        assert len(out) == 20

    def test_supplied_statistics_are_used(self, samples, rng):
        patches, labels = samples
        stats = fit_region_zca(rng.uniform(size=(12, 7, 8, 8)))
        out = expand_dataset(patches, labels, ["zca"], zca_stats=stats)
        assert out.zca_stats is stats
        expected = renormalize(whiten(stats[3], patches[0, 3]))
        np.testing.assert_array_equal(out.patches[10, 3], expected)

    def test_offsets_shared_by_all_regions(self, rng):
        region = rng.uniform(size=(16, 16))
        patches = np.broadcast_to(region, (4, 7, 16, 16)).copy()
        out = expand_dataset(patches, [0, 1, 2, 3], ["translate", "shift"], seed=5)
        for sample in out.patches[4:]:
            for other in sample[1:]:
                np.testing.assert_array_equal(other, sample[0])

    def test_seeded_expansion_is_deterministic(self, samples):
        a = expand_dataset(*samples, ["translate", "shift"], seed=3)
        b = expand_dataset(*samples, ["translate", "shift"], seed=3)
        np.testing.assert_array_equal(a.patches, b.patches)

    def test_empty_plan_rejected(self, samples):
        with pytest.raises(ConfigurationError):
            expand_dataset(*samples, [])

    def test_label_count_must_match(self, samples):
        patches, _ = samples
        with pytest.raises(ShapeError):
            expand_dataset(patches, [0, 1], ["rotate90"])
