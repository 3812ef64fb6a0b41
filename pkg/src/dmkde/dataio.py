"""Dataset loading, stratified splitting, standardization, synthetic data.

CSV datasets are UTF-8 with a header row, comma separators, decimal
points, and a {0,1} label column (named ``label`` in files written by
this package; the loader defaults to the last column).  Non-finite or
non-numeric cells are rejected with the offending row and column named.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    InsufficientClassError,
    InsufficientDataError,
    InvalidArgumentError,
    ParseError,
)
from .rng import DOMAIN_SPLIT, DOMAIN_SYNTHETIC, standard_normal, stream


@dataclass
class LabeledDataset:
    """Feature matrix with {0 normal, 1 anomaly} labels."""

    features: np.ndarray
    labels: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2:
            raise InvalidArgumentError("features must be a 2-D matrix")
        if self.labels.shape != (self.features.shape[0],):
            raise InvalidArgumentError("labels must be a vector aligned with feature rows")
        if not np.all(np.isfinite(self.features)):
            raise InvalidArgumentError("features contain non-finite values")
        if self.labels.size and not np.all((self.labels == 0) | (self.labels == 1)):
            raise InvalidArgumentError("labels must be 0 or 1")

    @property
    def anomaly_rate(self) -> float:
        return float(self.labels.mean()) if self.labels.size else 0.0

    def __len__(self) -> int:
        return self.features.shape[0]


@dataclass
class SplitIndices:
    """Disjoint train/val/test row indices covering a dataset."""

    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    seed: int


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def load_csv(path, label_column: str | None = None) -> LabeledDataset:
    """Parse a labeled CSV dataset.

    ``label_column`` selects the label by header name; by default the
    last column is used.  Rows are reported 1-based counting the header
    as row 1.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(text.splitlines())
    rows = list(reader)
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if label_column is None:
        label_idx = len(header) - 1
    else:
        if label_column not in header:
            raise ParseError(f"{path}: no column named {label_column!r} in header")
        label_idx = header.index(label_column)

    features: list[list[float]] = []
    labels: list[int] = []
    for line_no, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(f"{path}: ragged row has {len(row)} cells, expected {len(header)}",
                             row=line_no)
        feat_row = []
        for col_idx, cell in enumerate(row):
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(f"{path}: non-numeric cell {cell!r}",
                                 row=line_no, column=header[col_idx]) from None
            if not math.isfinite(value):
                raise ParseError(f"{path}: non-finite cell {cell!r}",
                                 row=line_no, column=header[col_idx])
            if col_idx == label_idx:
                if value not in (0.0, 1.0):
                    raise ParseError(f"{path}: label {cell!r} not in {{0, 1}}",
                                     row=line_no, column=header[col_idx])
                labels.append(int(value))
            else:
                feat_row.append(value)
        features.append(feat_row)
    if not features:
        raise ParseError(f"{path}: no data rows")
    return LabeledDataset(np.array(features, dtype=np.float64),
                          np.array(labels, dtype=np.int64),
                          name=path.stem)


def save_csv(ds: LabeledDataset, path) -> None:
    """Write a dataset in the package CSV schema (label column last)."""
    path = Path(path)
    d = ds.features.shape[1]
    lines = [",".join([f"f{i}" for i in range(d)] + ["label"])]
    for row, label in zip(ds.features, ds.labels):
        lines.append(",".join(repr(float(v)) for v in row) + f",{int(label)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def stratified_split(ds: LabeledDataset, test_frac: float = 0.3, val_frac: float = 0.3,
                     seed: int = 0) -> SplitIndices:
    """Split a dataset per class, keeping anomaly proportions in each part.

    Per class: shuffle the class indices, allocate round-half-up
    ``test_frac * count`` to test, then round-half-up ``val_frac`` of the
    remainder to val; the rest is train.  Class 0 is processed before
    class 1 on a single seeded stream, so the result is deterministic.
    """
    if not (0.0 < test_frac < 1.0) or not (0.0 < val_frac < 1.0):
        raise InvalidArgumentError("test_frac and val_frac must lie in (0, 1)")
    rng = stream(seed, DOMAIN_SPLIT)
    parts = {"train": [], "val": [], "test": []}
    for cls in (0, 1):
        idx = np.flatnonzero(ds.labels == cls)
        count = len(idx)
        if count == 0:
            raise InsufficientClassError(cls)
        shuffled = idx[rng.permutation(count)]
        n_test = _round_half_up(test_frac * count)
        n_val = _round_half_up(val_frac * (count - n_test))
        n_train = count - n_test - n_val
        if min(n_test, n_val, n_train) < 1:
            raise InsufficientClassError(cls)
        parts["test"].append(shuffled[:n_test])
        parts["val"].append(shuffled[n_test:n_test + n_val])
        parts["train"].append(shuffled[n_test + n_val:])
    return SplitIndices(
        train=np.sort(np.concatenate(parts["train"])),
        val=np.sort(np.concatenate(parts["val"])),
        test=np.sort(np.concatenate(parts["test"])),
        seed=int(seed),
    )


def fit_standardizer(features: np.ndarray):
    """Per-column mean and standard deviation (constant columns get scale 1)."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 2:
        raise InsufficientDataError("standardization needs at least 2 rows")
    shift = features.mean(axis=0)
    scale = features.std(axis=0)
    scale = np.where(scale == 0.0, 1.0, scale)
    return shift, scale


def apply_standardizer(features: np.ndarray, shift: np.ndarray, scale: np.ndarray) -> np.ndarray:
    return (np.asarray(features, dtype=np.float64) - shift) / scale


@dataclass
class GaussianComponent:
    """One normal-data mixture component: mean plus covariance."""

    mean: np.ndarray
    cov: np.ndarray
    count: int

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=np.float64)
        if self.mean.ndim != 1 or self.mean.size < 1:
            raise InvalidArgumentError("component mean must be a 1-D vector")
        d = self.mean.size
        cov = np.asarray(self.cov, dtype=np.float64)
        if cov.ndim == 0:
            cov = float(cov) * np.eye(d)
        elif cov.ndim == 1:
            if cov.size != d:
                raise InvalidArgumentError("diagonal covariance length must match mean")
            cov = np.diag(cov)
        if cov.shape != (d, d):
            raise InvalidArgumentError("covariance must be scalar, diagonal, or d x d")
        self.cov = cov
        self.count = int(self.count)
        if self.count < 1:
            raise InvalidArgumentError("component count must be >= 1")


@dataclass
class SyntheticSpec:
    """Mixture-of-Gaussians normals plus uniform-box anomalies.

    Anomalies are drawn uniformly in the axis-aligned box and rejected
    while they fall within ``exclusion_radius`` of any component mean.
    """

    components: list[GaussianComponent]
    anomaly_count: int
    box_low: np.ndarray
    box_high: np.ndarray
    exclusion_radius: float = 0.0
    name: str = "synthetic"

    def __post_init__(self):
        if not self.components:
            raise InvalidArgumentError("at least one mixture component is required")
        self.box_low = np.asarray(self.box_low, dtype=np.float64)
        self.box_high = np.asarray(self.box_high, dtype=np.float64)
        d = self.components[0].mean.size
        for comp in self.components:
            if comp.mean.size != d:
                raise InvalidArgumentError("all components must share one dimension")
        if self.box_low.shape != (d,) or self.box_high.shape != (d,):
            raise InvalidArgumentError("box bounds must be vectors of the data dimension")
        if np.any(self.box_high <= self.box_low):
            raise InvalidArgumentError("box_high must exceed box_low in every coordinate")
        self.anomaly_count = int(self.anomaly_count)
        if self.anomaly_count < 0:
            raise InvalidArgumentError("anomaly_count must be >= 0")
        self.exclusion_radius = float(self.exclusion_radius)
        if self.exclusion_radius < 0:
            raise InvalidArgumentError("exclusion_radius must be >= 0")

    @property
    def dim(self) -> int:
        return self.components[0].mean.size

    @classmethod
    def from_dict(cls, doc: dict) -> "SyntheticSpec":
        try:
            components = [
                GaussianComponent(np.asarray(c["mean"], dtype=np.float64),
                                  np.asarray(c.get("cov", 1.0), dtype=np.float64),
                                  int(c["count"]))
                for c in doc["components"]
            ]
            return cls(
                components=components,
                anomaly_count=int(doc["anomaly_count"]),
                box_low=np.asarray(doc["box_low"], dtype=np.float64),
                box_high=np.asarray(doc["box_high"], dtype=np.float64),
                exclusion_radius=float(doc.get("exclusion_radius", 0.0)),
                name=str(doc.get("name", "synthetic")),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidArgumentError(f"malformed synthetic spec: {exc}") from exc


def generate_synthetic(spec: SyntheticSpec, seed: int) -> LabeledDataset:
    """Draw the dataset a spec describes; deterministic given the seed.

    Normal samples come from each component in order (mean + Cholesky
    factor of the covariance applied to Box-Muller normals), then
    anomalies by rejection sampling in the box.
    """
    rng = stream(seed, DOMAIN_SYNTHETIC)
    d = spec.dim
    blocks = []
    for comp in spec.components:
        try:
            chol = np.linalg.cholesky(comp.cov)
        except np.linalg.LinAlgError as exc:
            raise InvalidArgumentError("component covariance is not positive definite") from exc
        z = standard_normal(rng, (comp.count, d))
        blocks.append(comp.mean + z @ chol.T)

    means = np.stack([comp.mean for comp in spec.components])
    anomalies = np.empty((0, d))
    attempts = 0
    while anomalies.shape[0] < spec.anomaly_count:
        attempts += 1
        if attempts > 1000:
            raise InvalidArgumentError(
                "box leaves too little room outside the exclusion radius"
            )
        draw = spec.box_low + rng.random((max(spec.anomaly_count, 64), d)) * (
            spec.box_high - spec.box_low
        )
        if spec.exclusion_radius > 0:
            dist = np.linalg.norm(draw[:, None, :] - means[None, :, :], axis=2)
            draw = draw[np.min(dist, axis=1) > spec.exclusion_radius]
        anomalies = np.vstack([anomalies, draw])
    anomalies = anomalies[: spec.anomaly_count]

    features = np.vstack(blocks + [anomalies])
    labels = np.concatenate([
        np.zeros(sum(c.count for c in spec.components), dtype=np.int64),
        np.ones(spec.anomaly_count, dtype=np.int64),
    ])
    return LabeledDataset(features, labels, name=spec.name)
