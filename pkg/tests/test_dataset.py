import numpy as np
import pytest

from conftest import blobs, make_dataset, registered_or_skip
from treesmooth.dataset import (
    REGISTRY,
    load_any,
    load_csv,
    load_registered,
    registry_entry,
    stratified_kfold,
    train_test_split,
    validate_against_registry,
    write_csv,
)
from treesmooth.errors import (
    DatasetParseError,
    InfeasibleSplitError,
    UnsupportedDatasetError,
)


def _balanced(n0, n1, n_features=2, seed=0):
    return blobs(n0=n0, n1=n1, n_features=n_features, seed=seed)


class TestLoadCsv:
    def test_three_rows(self, write_text):
        ds = load_csv(write_text("a,b,label\n1.5,2,0\n3,4,1\n5,6,0\n"))
        assert ds.n_samples == 3
        assert ds.n_features == 2
        assert ds.feature_names == ("a", "b")
        np.testing.assert_array_equal(ds.labels, [0, 1, 0])
        np.testing.assert_array_equal(ds.features[:, 0], [1.5, 3.0, 5.0])

    def test_third_label_value_is_unsupported(self, write_text):
        with pytest.raises(UnsupportedDatasetError):
            load_csv(write_text("a,label\n1,0\n2,1\n3,2\n"))

    def test_single_label_value_is_unsupported(self, write_text):
        with pytest.raises(UnsupportedDatasetError):
            load_csv(write_text("a,label\n1,1\n2,1\n"))

    def test_non_numeric_cell_names_row_and_column(self, write_text):
        with pytest.raises(DatasetParseError) as info:
            load_csv(write_text("a,b,label\n1,2,0\n3,x,1\n"))
        assert info.value.row == 3
        assert info.value.column == "b"

    def test_missing_cell_is_rejected(self, write_text):
        with pytest.raises(DatasetParseError) as info:
            load_csv(write_text("a,b,label\n1,,0\n3,4,1\n"))
        assert info.value.row == 2

    def test_short_row_reports_its_line(self, write_text):
        with pytest.raises(DatasetParseError) as info:
            load_csv(write_text("a,b,label\n1,2,0\n3,1\n5,6,1\n"))
        assert info.value.row == 3

    def test_blank_line_before_bad_row(self, write_text):
        with pytest.raises(DatasetParseError) as info:
            load_csv(write_text("a,b,label\n1,2,0\n\n\n3,x,1\n"))
        assert info.value.row == 5

    def test_decimals_parse_to_the_nearest_double(self, write_text):
        rng = np.random.default_rng(9)
        texts = ["0.10490040341234567", *(repr(float(v)) for v in rng.uniform(-1, 1, size=200))]
        body = "".join(f"{t},{i % 2}\n" for i, t in enumerate(texts))
        ds = load_csv(write_text("a,label\n" + body))
        np.testing.assert_array_equal(ds.features[:, 0], [float(t) for t in texts])

    def test_text_labels_map_by_sorted_order(self, write_text):
        ds = load_csv(write_text("a,outcome\n1,yes\n2,no\n3,yes\n"))
        np.testing.assert_array_equal(ds.labels, [1, 0, 1])
        assert ds.label_values == ("no", "yes")
        assert ds.label_name == "outcome"

    def test_numeric_labels_sort_numerically(self, write_text):
        ds = load_csv(write_text("a,label\n1,10\n2,9\n3,10\n"))
        np.testing.assert_array_equal(ds.labels, [1, 0, 1])

    def test_round_trip(self, tmp_path):
        ds = _balanced(12, 9, n_features=3)
        back = load_csv(write_csv(ds, tmp_path / "rt.csv"))
        np.testing.assert_array_equal(back.features, ds.features)
        np.testing.assert_array_equal(back.labels, ds.labels)
        assert back.feature_names == ds.feature_names


class TestDatasetType:
    def test_arrays_are_read_only(self, blobs_ds):
        with pytest.raises(ValueError):
            blobs_ds.features[0, 0] = 1.0

    def test_label_length_mismatch(self):
        with pytest.raises(DatasetParseError):
            make_dataset([[1.0], [2.0]], [0])

    def test_subset_keeps_provenance(self, blobs_ds):
        sub = blobs_ds.subset([5, 2, 9])
        np.testing.assert_array_equal(sub.sample_ids, [5, 2, 9])
        np.testing.assert_array_equal(sub.subset([2]).sample_ids, [9])


class TestRegistry:
    def test_class_counts_never_exceed_the_published_total(self):
        for entry in REGISTRY.values():
            assert entry.class_total <= entry.expected_samples
            assert entry.accepts_sample_count(entry.class_total)

    def test_breast_cancer_without_incomplete_rows_matches(self):
        entry = registry_entry("breast_cancer")
        assert entry.class_total == 277 and entry.expected_samples == 286
        ds = _balanced(196, 81, n_features=9)
        assert validate_against_registry(ds, entry)

    def test_sample_count_off_both_totals(self):
        result = validate_against_registry(_balanced(196, 82, n_features=9), registry_entry("breast_cancer"))
        assert not result
        assert any(m.startswith("samples: expected 277 or 286") for m in result.mismatches)

    def test_alias_and_case(self):
        assert registry_entry("Habermann").name == "haberman"
        assert registry_entry("Breast-Cancer").name == "breast_cancer"

    def test_unknown_name_lists_registry(self):
        with pytest.raises(UnsupportedDatasetError, match="heart"):
            registry_entry("iris")

    def test_heart_with_fourteen_features_is_a_mismatch(self):
        ds = _balanced(150, 120, n_features=14)
        result = validate_against_registry(ds, registry_entry("heart"))
        assert not result
        assert any("features" in m for m in result.mismatches)

    def test_class_counts_compare_as_unordered_pair(self):
        ds = _balanced(120, 150, n_features=15)
        assert validate_against_registry(ds, registry_entry("heart"))

    def test_load_registered_through_manifest(self, isolated_data_dir):
        ds = _balanced(81, 225, n_features=3)
        write_csv(ds, isolated_data_dir / "habermann_export.csv")
        (isolated_data_dir / "manifest.csv").write_text(
            "name,file,samples,features,class0,class1,source\n"
            "haberman,habermann_export.csv,306,3,81,225,pmlb\n",
            encoding="utf-8",
        )
        loaded = load_any("habermann")
        assert loaded.name == "haberman"
        assert validate_against_registry(loaded, registry_entry("haberman"))

    def test_missing_file_is_reported(self, isolated_data_dir):
        with pytest.raises(UnsupportedDatasetError, match="not found"):
            load_registered("diabetes")

    @pytest.mark.parametrize("name", sorted(REGISTRY))
    def test_bundled_files_match(self, name):
        registered_or_skip(name)
        ds = load_registered(name)
        result = validate_against_registry(ds, REGISTRY[name])
        assert result, result.mismatches


class TestStratifiedKFold:
    def test_exact_divisibility(self):
        ds = _balanced(5, 5)
        folds = stratified_kfold(ds, 5, seed=11)
        for f in range(5):
            test = folds.test_indices(f)
            assert sorted(ds.labels[test].tolist()) == [0, 1]

    def test_deterministic(self):
        ds = _balanced(30, 17)
        a = stratified_kfold(ds, 5, seed=3).fold_index_per_sample
        b = stratified_kfold(ds, 5, seed=3).fold_index_per_sample
        np.testing.assert_array_equal(a, b)

    def test_haberman_sized_folds(self):
        ds = _balanced(81, 225)
        folds = stratified_kfold(ds, 5, seed=0)
        sizes = np.bincount(folds.fold_index_per_sample, minlength=5)
        assert set(sizes.tolist()) <= {61, 62}
        class1 = np.bincount(folds.fold_index_per_sample[ds.labels == 1], minlength=5)
        assert np.all(np.abs(class1 - 225 / 5) <= 1)

    @pytest.mark.parametrize("k", [2, 3, 5, 7])
    def test_partition_and_balance(self, k):
        rng = np.random.default_rng(k)
        for seed in range(5):
            n0, n1 = (int(v) for v in rng.integers(k, 40, size=2))
            ds = _balanced(n0, n1, seed=seed)
            folds = stratified_kfold(ds, k, seed=seed)
            seen = np.concatenate([folds.test_indices(f) for f in range(k)])
            np.testing.assert_array_equal(np.sort(seen), np.arange(ds.n_samples))
            sizes = np.bincount(folds.fold_index_per_sample, minlength=k)
            assert sizes.max() - sizes.min() <= 1
            class1 = np.bincount(folds.fold_index_per_sample[ds.labels == 1], minlength=k)
            assert np.all(np.abs(class1 - n1 / k) <= 1)

    def test_train_and_test_are_complementary(self):
        ds = _balanced(10, 10)
        for train, test in stratified_kfold(ds, 4, seed=1).splits():
            assert not set(train) & set(test)
            assert len(train) + len(test) == ds.n_samples

    def test_too_few_of_a_class(self):
        with pytest.raises(InfeasibleSplitError):
            stratified_kfold(_balanced(10, 3), 5, seed=0)

    def test_k_below_two(self):
        with pytest.raises(InfeasibleSplitError):
            stratified_kfold(_balanced(10, 10), 1, seed=0)


class TestTrainTestSplit:
    def test_exact_proportions(self):
        train, test = train_test_split(_balanced(50, 50), 0.3, seed=5)
        assert train.n_samples == 70
        assert test.n_samples == 30
        assert int(test.labels.sum()) == 15

    def test_disjoint_provenance(self):
        train, test = train_test_split(_balanced(40, 25), 0.3, seed=2)
        assert not set(train.sample_ids) & set(test.sample_ids)
        assert train.n_samples + test.n_samples == 65

    def test_fraction_leaving_a_class_empty(self):
        with pytest.raises(InfeasibleSplitError):
            train_test_split(_balanced(5, 5), 0.999, seed=0)

    def test_deterministic(self):
        ds = _balanced(500, 268)
        a = train_test_split(ds, 0.3, seed=9)[1].sample_ids
        b = train_test_split(ds, 0.3, seed=9)[1].sample_ids
        np.testing.assert_array_equal(a, b)
