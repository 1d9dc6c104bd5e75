"""Tests for CSV ingestion and the bundled benchmark datasets."""

import numpy as np
import pytest

from skewmix.datasets import (
    DATASET_NAMES,
    DatasetUnavailableError,
    dataset_status,
    load_csv,
    load_dataset,
)


def test_iris_bundled_shape_and_classes():
    ds = load_dataset("iris")
    assert ds.n == 150 and ds.p == 4
    assert ds.label_names == ["setosa", "versicolor", "virginica"]
    np.testing.assert_array_equal(np.bincount(ds.labels), [50, 50, 50])
    assert ds.variable_names == ["sepal_length", "sepal_width",
                                 "petal_length", "petal_width"]
    # Fisher-consistent variant: rows 35 and 38 as in the R copy
    np.testing.assert_allclose(ds.matrix[34], [4.9, 3.1, 1.5, 0.2])
    np.testing.assert_allclose(ds.matrix[37], [4.9, 3.6, 1.4, 0.1])


def test_wine_bundled_shape_and_classes():
    ds = load_dataset("wine")
    assert ds.n == 178 and ds.p == 13
    np.testing.assert_array_equal(np.bincount(ds.labels), [59, 71, 48])
    assert ds.matrix[0, 0] == pytest.approx(14.23)
    assert ds.matrix[0, 12] == pytest.approx(1065.0)


def test_known_names_and_status():
    assert set(DATASET_NAMES) == {"iris", "wine", "bankruptcy", "diabetes",
                                  "ais", "crabs"}
    status = dataset_status()
    assert status["iris"] == "bundled"
    assert status["wine"] == "bundled"


@pytest.mark.parametrize("name", ["bankruptcy", "diabetes", "ais", "crabs"])
def test_unbundled_datasets_raise_with_provenance(name):
    if dataset_status()[name] != "missing":
        pytest.skip(f"{name} has been supplied locally")
    with pytest.raises(DatasetUnavailableError, match="Provenance"):
        load_dataset(name)


def test_unknown_name_rejected():
    with pytest.raises(ValueError, match="unknown dataset"):
        load_dataset("galaxies")


def test_load_csv_roundtrip(tmp_path):
    f = tmp_path / "toy.csv"
    f.write_text("a,b,group\n1.5,2.0,x\n-0.5,3.25,y\n0.0,1.0,x\n")
    ds = load_csv(f, label_column="group")
    assert ds.n == 3 and ds.p == 2
    np.testing.assert_allclose(ds.matrix, [[1.5, 2.0], [-0.5, 3.25],
                                           [0.0, 1.0]])
    np.testing.assert_array_equal(ds.labels, [0, 1, 0])
    assert ds.label_names == ["x", "y"]
    assert ds.variable_names == ["a", "b"]


def test_load_csv_without_labels(tmp_path):
    f = tmp_path / "toy.csv"
    f.write_text("a,b\n1,2\n3,4\n")
    ds = load_csv(f)
    assert ds.labels is None
    assert ds.matrix.shape == (2, 2)


def test_header_only_is_empty_error(tmp_path):
    f = tmp_path / "empty.csv"
    f.write_text("a,b\n")
    with pytest.raises(ValueError, match="no data rows"):
        load_csv(f)


def test_non_numeric_reports_line(tmp_path):
    f = tmp_path / "bad.csv"
    f.write_text("a,b\n1,2\n1,oops\n")
    with pytest.raises(ValueError, match="line 3"):
        load_csv(f)


def test_ragged_row_reports_line(tmp_path):
    f = tmp_path / "ragged.csv"
    f.write_text("a,b\n1,2\n1\n")
    with pytest.raises(ValueError, match="line 3"):
        load_csv(f)


def test_missing_label_column(tmp_path):
    f = tmp_path / "toy.csv"
    f.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError, match="no column named"):
        load_csv(f, label_column="cls")
