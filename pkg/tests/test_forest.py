import dataclasses

import numpy as np
import pytest

from conftest import make_dataset, small_forest
from treesmooth import forest
from treesmooth.cart import TreeConfig, predict_proba_tree, predict_proba_tree_batch
from treesmooth.errors import InvalidInputError, ModelSchemaError
from treesmooth.forest import (
    ForestConfig,
    average_tree_outputs,
    fit_forest,
    labels_from_proba,
    leaf_values,
    load_forest,
    predict_label,
    predict_proba,
    predict_proba_forest,
    route_leaves,
    save_forest,
)
from treesmooth.regularize import RegularizerSpec, apply


class TestFitForest:
    def test_shapes(self, blobs_ds):
        fitted = fit_forest(blobs_ds, small_forest(n_trees=7))
        assert len(fitted.trees) == len(fitted.inbag_indices) == 7
        assert all(len(idx) == blobs_ds.n_samples for idx in fitted.inbag_indices)
        assert fitted.n_features == blobs_ds.n_features

    def test_no_bootstrap_uses_every_row(self, blobs_ds):
        cfg = dataclasses.replace(small_forest(n_trees=2), bootstrap=False)
        fitted = fit_forest(blobs_ds, cfg)
        for idx in fitted.inbag_indices:
            np.testing.assert_array_equal(idx, np.arange(blobs_ds.n_samples))

    def test_deterministic(self, blobs_ds):
        a = fit_forest(blobs_ds, small_forest(seed=4))
        b = fit_forest(blobs_ds, small_forest(seed=4))
        for x, y in zip(a.inbag_indices, b.inbag_indices):
            np.testing.assert_array_equal(x, y)
        np.testing.assert_array_equal(
            predict_proba(a, blobs_ds.features), predict_proba(b, blobs_ds.features)
        )

    def test_seed_changes_the_forest(self, blobs_ds):
        a = fit_forest(blobs_ds, small_forest(seed=1))
        b = fit_forest(blobs_ds, small_forest(seed=2))
        assert any(not np.array_equal(x, y) for x, y in zip(a.inbag_indices, b.inbag_indices))

    def test_single_class_is_rejected(self):
        with pytest.raises(InvalidInputError):
            fit_forest(make_dataset([1, 2, 3], [0, 0, 0]), small_forest())

    def test_separable_points_are_learned(self):
        ds = make_dataset([1, 2, 3, 4], [0, 0, 1, 1])
        fitted = fit_forest(ds, ForestConfig(n_trees=100, seed=0))
        np.testing.assert_array_equal(forest.predict_labels(fitted, ds.features), ds.labels)

    def test_n_trees_must_be_positive(self):
        with pytest.raises(InvalidInputError):
            ForestConfig(n_trees=0)


class TestAveraging:
    def test_two_trees(self):
        assert average_tree_outputs(np.array([[0.2], [0.4]]))[0] == pytest.approx(0.3)

    def test_all_zero(self):
        assert average_tree_outputs(np.zeros((5, 1)))[0] == 0.0

    def test_identical_trees_are_exact(self):
        rng = np.random.default_rng(0)
        values = rng.uniform(size=50)
        per_tree = np.tile(values, (7, 1))
        np.testing.assert_array_equal(average_tree_outputs(per_tree), values)

    def test_within_tree_range(self):
        rng = np.random.default_rng(1)
        per_tree = rng.uniform(size=(9, 200))
        mean = average_tree_outputs(per_tree)
        assert np.all(mean >= per_tree.min(axis=0))
        assert np.all(mean <= per_tree.max(axis=0))

    def test_single_tree_forest_equals_its_tree(self, blobs_ds):
        cfg = ForestConfig(n_trees=1, tree=TreeConfig(), bootstrap=False, seed=3)
        fitted = fit_forest(blobs_ds, cfg)
        X = blobs_ds.features
        np.testing.assert_array_equal(
            predict_proba(fitted, X), predict_proba_tree_batch(fitted.trees[0], X)
        )

    def test_tree_order_does_not_matter(self, blobs_ds):
        fitted = fit_forest(blobs_ds, small_forest(n_trees=9))
        reordered = dataclasses.replace(
            fitted, trees=fitted.trees[::-1], inbag_indices=fitted.inbag_indices[::-1]
        )
        np.testing.assert_allclose(
            predict_proba(fitted, blobs_ds.features),
            predict_proba(reordered, blobs_ds.features),
            rtol=0,
            atol=1e-12,
        )

    def test_scalar_and_batch_agree(self, blobs_ds):
        fitted = fit_forest(blobs_ds, small_forest())
        batch = predict_proba(fitted, blobs_ds.features)
        for x, p in zip(blobs_ds.features[:10], batch[:10]):
            assert predict_proba_forest(fitted, x) == pytest.approx(p, abs=1e-15)


class TestLabels:
    @pytest.mark.parametrize("proba, label", [(0.7, 1), (0.5, 1), (0.49999, 0), (0.0, 0)])
    def test_threshold(self, proba, label):
        assert labels_from_proba(np.array([proba]))[0] == label

    def test_predict_label(self, blobs_ds):
        fitted = fit_forest(blobs_ds, small_forest())
        x = blobs_ds.features[0]
        assert predict_label(fitted, x) == int(predict_proba_forest(fitted, x) >= 0.5)

    def test_width_mismatch(self, blobs_ds):
        fitted = fit_forest(blobs_ds, small_forest())
        with pytest.raises(InvalidInputError):
            predict_proba(fitted, np.zeros((2, blobs_ds.n_features + 1)))
        with pytest.raises(InvalidInputError):
            predict_proba_forest(fitted, np.zeros(blobs_ds.n_features - 1))


class TestLeafRouting:
    def test_cached_routes_follow_recalibration(self, blobs_ds):
        fitted = fit_forest(blobs_ds, small_forest())
        routes = route_leaves(fitted.trees, blobs_ds.features)
        per_tree = leaf_values(routes)
        assert per_tree.shape == (len(fitted.trees), blobs_ds.n_samples)
        for root, row in zip(fitted.trees, per_tree):
            assert row[0] == predict_proba_tree(root, blobs_ds.features[0])


class TestModelFile:
    def test_round_trip_predictions(self, tmp_path, blobs_ds):
        fitted = apply(fit_forest(blobs_ds, small_forest()), RegularizerSpec.beta_prior(10, 30))
        loaded = load_forest(save_forest(fitted, tmp_path / "model.json"))
        assert loaded.calibration == fitted.calibration
        assert loaded.feature_names == blobs_ds.feature_names
        np.testing.assert_array_equal(
            predict_proba(loaded, blobs_ds.features), predict_proba(fitted, blobs_ds.features)
        )

    def test_wrong_schema_version(self, tmp_path, blobs_ds):
        doc = forest.forest_to_dict(fit_forest(blobs_ds, small_forest()))
        doc["schema_version"] = 99
        with pytest.raises(ModelSchemaError):
            forest.forest_from_dict(doc)

    def test_missing_trees(self, blobs_ds):
        doc = forest.forest_to_dict(fit_forest(blobs_ds, small_forest()))
        del doc["trees"]
        with pytest.raises(ModelSchemaError):
            forest.forest_from_dict(doc)

    def test_not_json(self, write_text):
        with pytest.raises(ModelSchemaError):
            load_forest(write_text("{not json", name="model.json"))
