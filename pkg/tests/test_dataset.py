import numpy as np
import pytest

from evofeat.dataset import (DataError, Dataset, Task, append_feature, erc_range, fingerprint,
                             load_csv, make_folds, split_train_test)

from conftest import DATA_DIR, write_csv


def _iris_like(n=150):
    r = np.random.default_rng(0)
    return Dataset(r.normal(size=(n, 4)), np.repeat([0, 1, 2], n // 3), Task.CLASSIFICATION)


def test_load_named_target(tmp_path):
    p = write_csv(tmp_path / "d.csv", ["a", "b", "label"],
                  [[1, 2, "setosa"], [3, 4, "virginica"], [5, 6, "setosa"]])
    ds = load_csv(p, "label", "classification")
    assert (ds.n, ds.p, ds.n_classes) == (3, 2, 2)
    assert ds.class_labels == ("setosa", "virginica")
    assert ds.target.tolist() == [0, 1, 0]
    assert ds.column_names == ("a", "b")


def test_load_index_target_and_numeric_labels(tmp_path):
    p = write_csv(tmp_path / "d.csv", ["y", "a"], [[10, 0.5], [2, 1.5], [10, 2.5]])
    ds = load_csv(p, 0, "classification")
    assert ds.class_labels == ("2", "10")  # numeric order, not lexical
    assert ds.target.tolist() == [1, 0, 1]


def test_minimal_two_by_two(tmp_path):
    p = write_csv(tmp_path / "d.csv", ["x", "y"], [[1, 2], [3, 4]])
    ds = load_csv(p, -1, "regression")
    assert (ds.n, ds.p) == (2, 1)


def test_missing_rows_dropped(tmp_path):
    p = write_csv(tmp_path / "d.csv", ["x", "z", "y"], [[1, "", 1], [2, 3, 4], ["NA", 1, 1], [5, 6, 7]])
    ds = load_csv(p, "y", "regression")
    assert ds.n == 2
    np.testing.assert_array_equal(ds.features, [[2, 3], [5, 6]])


def test_all_missing_is_empty(tmp_path):
    p = write_csv(tmp_path / "d.csv", ["x", "y"], [["", 1], [2, "NA"]])
    with pytest.raises(DataError, match="empty dataset"):
        load_csv(p, "y", "regression")


def test_unparseable_cell_names_row_and_column(tmp_path):
    p = write_csv(tmp_path / "d.csv", ["x", "w", "y"], [[1, 2, 3], [1, "abc", 3]])
    with pytest.raises(DataError, match=r"row 3.*'w'"):
        load_csv(p, "y", "regression")


def test_unknown_target(tmp_path):
    p = write_csv(tmp_path / "d.csv", ["x", "y"], [[1, 2], [3, 4]])
    with pytest.raises(DataError):
        load_csv(p, "nope", "regression")


def test_split_sizes():
    ds = _iris_like()
    s = split_train_test(ds, 0.2, 3)
    assert (s.test.n, s.train.n) == (30, 120)
    small = Dataset(np.arange(10.0)[:, None], np.arange(10.0), Task.REGRESSION)
    s = split_train_test(small, 0.2, 99)
    assert (s.test.n, s.train.n) == (2, 8)


def test_split_deterministic_and_partitions():
    ds = _iris_like()
    a, b = split_train_test(ds, 0.2, 5), split_train_test(ds, 0.2, 5)
    np.testing.assert_array_equal(a.test_rows, b.test_rows)
    rows = np.concatenate([a.train_rows, a.test_rows])
    assert sorted(rows.tolist()) == list(range(ds.n))
    assert not set(a.train_rows) & set(a.test_rows)


def test_split_empty_part():
    ds = Dataset(np.arange(3.0)[:, None], np.arange(3.0), Task.REGRESSION)
    with pytest.raises(DataError):
        split_train_test(ds, 0.1, 0)


def test_folds_regression_sizes():
    ds = Dataset(np.arange(10.0)[:, None], np.arange(10.0), Task.REGRESSION)
    f = make_folds(ds, 5, 0)
    assert np.bincount(f.fold_of_row).tolist() == [2] * 5


def test_folds_stratified_forced():
    y = np.array([0] * 6 + [1] * 4)
    ds = Dataset(np.arange(10.0)[:, None], y, Task.CLASSIFICATION)
    f = make_folds(ds, 2, 1)
    for c in range(2):
        rows = f.fold_of_row == c
        assert (y[rows] == 0).sum() == 3 and (y[rows] == 1).sum() == 2


def test_folds_errors():
    ds = Dataset(np.arange(4.0)[:, None], np.arange(4.0), Task.REGRESSION)
    with pytest.raises(DataError):
        make_folds(ds, 1, 0)
    with pytest.raises(DataError):
        make_folds(ds, 5, 0)


def test_fold_rows_partition():
    f = make_folds(_iris_like(), 5, 0)
    tr, va = f.fold_rows(2)
    assert len(tr) + len(va) == 150 and not set(tr) & set(va)


def test_append_feature():
    ds = _iris_like()
    d1 = append_feature(ds, np.ones(ds.n), "f1")
    d2 = append_feature(d1, np.zeros(ds.n), "f2")
    assert (ds.p, d1.p, d2.p) == (4, 5, 6)
    assert d2.column_names[-2:] == ("f1", "f2")
    assert d2.n_original == 4
    np.testing.assert_array_equal(d2.constructed_features[:, 0], 1.0)
    with pytest.raises(DataError):
        append_feature(ds, np.ones(ds.n - 1), "bad")


def test_erc_range():
    ds = Dataset(np.array([[0.0, 1.0], [5.0, -2.0]]), [0.0, 1.0], Task.REGRESSION)
    assert erc_range(ds) == (-2.0, 5.0)
    assert erc_range(append_feature(ds, [100.0, -100.0], "c")) == (-2.0, 5.0)
    const = Dataset(np.full((3, 2), 3.0), [0.0, 1.0, 2.0], Task.REGRESSION)
    assert erc_range(const) == (3.0, 3.0)


def test_dataset_is_immutable():
    ds = _iris_like()
    with pytest.raises(ValueError):
        ds.features[0, 0] = 1.0


def test_dataset_validation():
    with pytest.raises(DataError):
        Dataset(np.ones((3, 2)), [0, 1], Task.REGRESSION)
    with pytest.raises(DataError):
        Dataset(np.ones((3, 2)), [0, 1, -1], Task.CLASSIFICATION)


def test_fingerprint_changes_with_content():
    a = _iris_like()
    b = Dataset(a.features + 1, a.target, a.task)
    assert fingerprint(a) == fingerprint(_iris_like())
    assert fingerprint(a) != fingerprint(b)


@pytest.mark.skipif(not (DATA_DIR / "ecoli.csv").exists(), reason="bundled data missing")
def test_bundled_benchmarks_shape():
    ecoli = load_csv(DATA_DIR / "ecoli.csv", "class", "classification")
    assert (ecoli.n, ecoli.p, ecoli.n_classes) == (336, 7, 8)
    concrete = load_csv(DATA_DIR / "concrete.csv", "compressive_strength", "regression")
    assert (concrete.n, concrete.p) == (1030, 8)
