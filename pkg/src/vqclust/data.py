"""Datasets: CSV ingestion, synthetic Gaussian blobs, the Iris table, rescaling."""

from __future__ import annotations

import csv
import hashlib
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _iris
from .exceptions import ConfigurationError, IngestionError, UsageError
from .rng import PortableRNG

DEFAULT_LO = -1.9 * math.pi / 2
DEFAULT_HI = 1.9 * math.pi / 2
IRIS_DEFAULT_PAIR = (1, 3)  # sepal width (azimuth), petal width (polar angle)


@dataclass(frozen=True)
class Dataset:
    points: np.ndarray = field(repr=False)
    labels: np.ndarray | None = field(default=None, repr=False)
    feature_names: tuple[str, ...] | None = None
    preprocessing: dict = field(default_factory=dict)

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        if points.ndim != 2 or points.shape[0] == 0 or points.shape[1] == 0:
            raise UsageError(f"points must be a non-empty 2-D array, got shape {points.shape}")
        if not np.all(np.isfinite(points)):
            raise UsageError("points contain NaN or infinite values")
        points.setflags(write=False)
        object.__setattr__(self, "points", points)
        if self.labels is not None:
            labels = np.array(self.labels)
            if labels.shape != (points.shape[0],):
                raise UsageError(f"{labels.shape[0] if labels.ndim else 0} labels for {points.shape[0]} points")
            if not np.issubdtype(labels.dtype, np.integer):
                raise UsageError("labels must be integers")
            labels = labels.astype(np.int64)
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)
        if self.feature_names is not None:
            names = tuple(str(n) for n in self.feature_names)
            if len(names) != points.shape[1]:
                raise UsageError(f"{len(names)} feature names for {points.shape[1]} features")
            object.__setattr__(self, "feature_names", names)

    @property
    def n_points(self):
        return self.points.shape[0]

    @property
    def n_features(self):
        return self.points.shape[1]

    @property
    def n_labels(self):
        return None if self.labels is None else int(len(np.unique(self.labels)))


@dataclass(frozen=True)
class BlobSpec:
    """Isotropic Gaussian blobs.

    Without explicit ``centers`` the centres sit on a regular polygon in the
    first two coordinates (a line when ``dim == 1``) with neighbouring
    centres ``separation * std`` apart.
    """

    n_clusters: int = 3
    points_per_cluster: int = 150
    dim: int = 2
    std: float = 1.0
    seed: int = 0
    centers: tuple | None = None
    separation: float = 10.0

    def __post_init__(self):
        for name in ("n_clusters", "points_per_cluster", "dim"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigurationError(f"{name} must be a positive integer, got {value!r}")
        if not (math.isfinite(self.std) and self.std > 0):
            raise ConfigurationError(f"std must be positive, got {self.std}")
        if not (math.isfinite(self.separation) and self.separation > 0):
            raise ConfigurationError(f"separation must be positive, got {self.separation}")
        if self.centers is not None:
            c = np.asarray(self.centers, dtype=float)
            if c.shape != (self.n_clusters, self.dim):
                raise ConfigurationError(f"centers must have shape ({self.n_clusters}, {self.dim}), got {c.shape}")
            object.__setattr__(self, "centers", tuple(map(tuple, c.tolist())))

    def center_array(self):
        if self.centers is not None:
            return np.asarray(self.centers, dtype=float)
        k, side = self.n_clusters, self.separation * self.std
        out = np.zeros((k, self.dim))
        if k == 1:
            return out
        if self.dim == 1:
            out[:, 0] = side * np.arange(k)
            return out
        radius = side / (2 * math.sin(math.pi / k))
        angles = 2 * math.pi * np.arange(k) / k
        out[:, 0] = radius * np.cos(angles)
        out[:, 1] = radius * np.sin(angles)
        return out


def generate_blobs(spec):
    """Sample ``spec`` deterministically; rows are grouped by generating cluster."""
    rng = PortableRNG(spec.seed)
    centers = spec.center_array()
    noise = rng.normal((spec.n_clusters * spec.points_per_cluster, spec.dim), scale=spec.std)
    points = np.repeat(centers, spec.points_per_cluster, axis=0) + noise
    labels = np.repeat(np.arange(spec.n_clusters), spec.points_per_cluster)
    names = tuple(f"x{i + 1}" for i in range(spec.dim))
    return Dataset(points, labels, names, {"source": "blobs"})


def iris_table():
    """Full ``(150, 4)`` feature array and species labels."""
    rows = np.array(_iris.ROWS)
    return rows[:, :4].astype(float), rows[:, 4].astype(np.int64)


def iris_checksum():
    """SHA-256 of the embedded table serialised as ``%.1f`` CSV rows."""
    text = "\n".join(",".join(f"{v:.1f}" for v in r[:4]) + f",{int(r[4])}" for r in _iris.ROWS)
    return hashlib.sha256(text.encode("ascii")).hexdigest()


def load_iris(feature_pair=IRIS_DEFAULT_PAIR, all_features=False):
    """Iris with two selected features or all four.

    The default pair is sepal width and petal width, in that order, so that
    with the default routing sepal width drives the azimuth and petal width
    the polar angle.
    """
    X, y = iris_table()
    if all_features:
        return Dataset(X, y, _iris.FEATURE_NAMES, {"source": "iris"})
    try:
        i, j = (int(v) for v in feature_pair)
    except (TypeError, ValueError):
        raise UsageError(f"feature_pair must be two indices, got {feature_pair!r}") from None
    if not (0 <= i < 4 and 0 <= j < 4) or i == j:
        raise UsageError(f"feature_pair must hold two distinct indices in [0, 4), got {feature_pair!r}")
    names = (_iris.FEATURE_NAMES[i], _iris.FEATURE_NAMES[j])
    return Dataset(X[:, [i, j]], y, names, {"source": "iris", "feature_pair": [i, j]})


def _is_number(text):
    try:
        return math.isfinite(float(text))
    except ValueError:
        return False


def load_csv(path, has_labels=False):
    """Read a numeric CSV; a non-numeric first row is treated as a header.

    With ``has_labels`` the last column holds integer labels, which are
    re-indexed to ``0..L-1`` in sorted order.
    """
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except FileNotFoundError:
        raise IngestionError(f"no such file: {path}", path=str(path)) from None
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestionError(f"cannot read {path}: {exc}", path=str(path)) from None
    if not rows:
        raise IngestionError(f"{path}: file is empty", path=str(path))
    header = None
    start = 0
    if not all(_is_number(c) for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        start = 1
    body = rows[start:]
    if not body:
        raise IngestionError(f"{path}: no data rows", path=str(path))
    width = len(body[0])
    values = []
    for offset, row in enumerate(body):
        line = start + offset + 1
        if len(row) != width:
            raise IngestionError(f"{path}: row {line} has {len(row)} columns, expected {width}", str(path), line)
        try:
            parsed = [float(c) for c in row]
        except ValueError:
            bad = next(c for c in row if not _is_number(c))
            raise IngestionError(f"{path}: row {line} has non-numeric value {bad!r}", str(path), line) from None
        if not all(math.isfinite(v) for v in parsed):
            raise IngestionError(f"{path}: row {line} has a non-finite value", str(path), line)
        values.append(parsed)
    table = np.array(values)
    labels = None
    names = header
    if has_labels:
        if width < 2:
            raise IngestionError(f"{path}: need at least one feature column besides the label", str(path))
        raw = table[:, -1]
        if not np.all(raw == np.round(raw)):
            line = start + int(np.argmax(raw != np.round(raw))) + 1
            raise IngestionError(f"{path}: row {line} has a non-integer label", str(path), line)
        _, labels = np.unique(raw.astype(np.int64), return_inverse=True)
        table = table[:, :-1]
        names = header[:-1] if header else None
    if names is not None and len(names) != table.shape[1]:
        names = None
    return Dataset(table, labels, tuple(names) if names else None, {"source": str(path)})


def write_csv(dataset, path):
    """Feature columns, then ``label`` when labels are present."""
    names = list(dataset.feature_names or (f"x{i + 1}" for i in range(dataset.n_features)))
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + (["label"] if dataset.labels is not None else []))
        for i, row in enumerate(dataset.points):
            cells = [repr(float(v)) for v in row]
            if dataset.labels is not None:
                cells.append(str(int(dataset.labels[i])))
            w.writerow(cells)


def rescale(dataset, lo=DEFAULT_LO, hi=DEFAULT_HI, zscore=False):
    """Per-feature affine map of ``[min, max]`` onto ``[lo, hi]``.

    Constant features map to the midpoint and are listed under
    ``preprocessing["constant_features"]``.  ``zscore`` standardises first;
    the min-max map is still applied afterwards.
    """
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        raise ConfigurationError(f"need finite lo < hi, got [{lo}, {hi}]")
    X = dataset.points.copy()
    if zscore:
        std = X.std(axis=0)
        X = (X - X.mean(axis=0)) / np.where(std > 0, std, 1.0)
    mins, maxs = X.min(axis=0), X.max(axis=0)
    span = maxs - mins
    constant = span == 0
    t = np.where(constant, 0.5, (X - mins) / np.where(constant, 1.0, span))
    out = np.clip(lo * (1 - t) + hi * t, lo, hi)
    record = {
        "method": "minmax",
        "lo": lo,
        "hi": hi,
        "zscore": bool(zscore),
        "min": mins.tolist(),
        "max": maxs.tolist(),
        "constant_features": np.flatnonzero(constant).tolist(),
    }
    prep = dict(dataset.preprocessing)
    prep["rescale"] = record
    return replace(dataset, points=out, preprocessing=prep)
