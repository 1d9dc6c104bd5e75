"""CSV ingestion and the bundled benchmark datasets.

Each benchmark dataset has a manifest entry recording its shape, label
column, and provenance.  Two (iris, wine) ship with the package; the
remaining four live in R packages and must be exported by the user (the
manifest holds the one-line R export command for each).  A user-supplied
file is schema-checked against the manifest before use so a wrong or
reordered export fails loudly rather than producing silently wrong
benchmark numbers.
"""

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Dataset",
    "DatasetUnavailableError",
    "load_csv",
    "load_dataset",
    "dataset_status",
    "DATASET_NAMES",
]

_DATA_DIR = Path(__file__).parent / "data"

with open(_DATA_DIR / "manifest.json") as _f:
    _MANIFEST = json.load(_f)

DATASET_NAMES = tuple(_MANIFEST)


class DatasetUnavailableError(RuntimeError):
    """Requested bundled dataset is not present in the data directory."""


@dataclass
class Dataset:
    name: str
    matrix: np.ndarray
    labels: np.ndarray | None
    variable_names: list
    provenance: str
    label_names: list | None = None

    @property
    def n(self):
        return self.matrix.shape[0]

    @property
    def p(self):
        return self.matrix.shape[1]


def load_csv(path, label_column=None, name=None, provenance=None):
    """Parse a header-rowed CSV into a Dataset.

    Labels (when `label_column` names a column) are encoded as integers in
    order of first appearance.  Any non-numeric feature value is rejected
    with the offending row number.
    """
    path = Path(path)
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        label_idx = None
        if label_column is not None:
            if label_column not in header:
                raise ValueError(
                    f"{path}: no column named {label_column!r} in header")
            label_idx = header.index(label_column)
        feature_idx = [j for j in range(len(header)) if j != label_idx]
        rows = []
        raw_labels = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise ValueError(
                    f"{path}: row at line {lineno} has {len(rec)} fields, "
                    f"expected {len(header)}")
            try:
                rows.append([float(rec[j]) for j in feature_idx])
            except ValueError:
                raise ValueError(
                    f"{path}: non-numeric feature value at line {lineno}"
                ) from None
            if label_idx is not None:
                raw_labels.append(rec[label_idx].strip())
    if not rows:
        raise ValueError(f"{path}: no data rows")
    matrix = np.asarray(rows, dtype=float)
    labels = None
    label_names = None
    if label_idx is not None:
        label_names = list(dict.fromkeys(raw_labels))
        code = {s: k for k, s in enumerate(label_names)}
        labels = np.array([code[s] for s in raw_labels], dtype=int)
    return Dataset(name=name or path.stem, matrix=matrix, labels=labels,
                   variable_names=[header[j] for j in feature_idx],
                   provenance=provenance or str(path),
                   label_names=label_names)


def dataset_status():
    """Name -> 'bundled' | 'available' | 'missing' for every known dataset."""
    out = {}
    for dsname, entry in _MANIFEST.items():
        present = (_DATA_DIR / entry["file"]).exists()
        bundled = entry["status"] == "bundled"
        out[dsname] = "bundled" if bundled and present else (
            "available" if present else "missing")
    return out


def load_dataset(name):
    """Load a benchmark dataset by name, schema-checked against the manifest."""
    if name not in _MANIFEST:
        raise ValueError(f"unknown dataset {name!r}; known: {DATASET_NAMES}")
    entry = _MANIFEST[name]
    path = _DATA_DIR / entry["file"]
    if not path.exists():
        raise DatasetUnavailableError(
            f"dataset {name!r} is not bundled ({entry['status']}).\n"
            f"Provenance: {entry['source']}")
    ds = load_csv(path, label_column=entry["label_column"], name=name,
                  provenance=entry["source"])
    _check_schema(ds, entry)
    return ds


def _check_schema(ds, entry):
    if ds.n != entry["n"] or ds.p != entry["p"]:
        raise ValueError(
            f"dataset {ds.name!r}: expected {entry['n']}x{entry['p']}, "
            f"got {ds.n}x{ds.p}")
    sizes = np.bincount(ds.labels, minlength=entry["classes"]).tolist()
    if len(ds.label_names) != entry["classes"] or sizes != entry["class_sizes"]:
        raise ValueError(
            f"dataset {ds.name!r}: class sizes {sizes} do not match the "
            f"manifest {entry['class_sizes']}")
    if not np.all(np.isfinite(ds.matrix)):
        raise ValueError(f"dataset {ds.name!r}: non-finite values present")
