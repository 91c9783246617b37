"""Assignment readout, permutation-matched accuracy and result documents."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .exceptions import IngestionError, UsageError

MAX_LABELS = 20
RESULT_FIELDS = ("config", "loss_per_epoch", "assignments", "fidelities", "accuracy", "matching", "truncation_error")


def assign(F):
    """Row-wise argmax of a fidelity matrix; ties go to the lowest cluster index."""
    F = np.asarray(F, dtype=float)
    if F.ndim != 2 or F.size == 0:
        raise UsageError(f"fidelity matrix must be a non-empty 2-D array, got shape {F.shape}")
    return np.argmax(F, axis=1)  # argmax returns the first maximum


def confusion_matrix(pred, truth):
    """``C[p, l]`` counts points in predicted cluster ``p`` with true label ``l``."""
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    C = np.zeros((int(pred.max()) + 1, int(truth.max()) + 1), dtype=np.int64)
    np.add.at(C, (pred, truth), 1)
    return C


def matched_accuracy(pred, truth):
    """Best accuracy over injective maps between predicted clusters and labels.

    The map goes from the smaller side to the larger; points of unmatched
    clusters count as errors.  Returns ``(accuracy, matching)`` with
    ``matching`` a dict ``{cluster: label}``.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise UsageError(f"prediction and truth lengths differ: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise UsageError("cannot score an empty assignment")
    if np.any(pred < 0) or np.any(truth < 0):
        raise UsageError("cluster indices and labels must be non-negative")
    C = confusion_matrix(pred, truth)
    if max(C.shape) > MAX_LABELS:
        raise UsageError(f"at most {MAX_LABELS} clusters and labels are supported")
    rows, cols = linear_sum_assignment(C, maximize=True)
    matching = {int(r): int(c) for r, c in zip(rows, cols)}
    return float(C[rows, cols].sum()) / pred.size, matching


@dataclass
class ClusterResult:
    assignments: np.ndarray
    fidelities: np.ndarray = field(repr=False)
    loss_per_epoch: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    accuracy: float | None = None
    matching: dict | None = None
    truncation_error: float | None = None

    def __post_init__(self):
        self.assignments = np.asarray(self.assignments, dtype=np.int64)
        self.fidelities = np.asarray(self.fidelities, dtype=float)
        if self.fidelities.shape[:1] != self.assignments.shape:
            raise UsageError("one fidelity row per assignment required")

    @classmethod
    def from_report(cls, report, labels=None, config=None):
        acc = matching = None
        if labels is not None:
            acc, matching = matched_accuracy(report.assignments, labels)
        return cls(
            report.assignments, report.fidelity_matrix, list(report.loss_per_epoch), dict(config or {}),
            acc, matching, report.truncation_error,
        )


def to_document(result):
    """Plain-JSON dict; ``accuracy``/``matching`` omitted without labels, ``truncation_error`` when ``None``."""
    doc = {
        "config": result.config,
        "loss_per_epoch": [float(v) for v in result.loss_per_epoch],
        "assignments": [int(a) for a in result.assignments],
        "fidelities": [[float(v) for v in row] for row in result.fidelities],
    }
    if result.accuracy is not None:
        doc["accuracy"] = float(result.accuracy)
        doc["matching"] = {str(k): int(v) for k, v in sorted(result.matching.items())}
    if result.truncation_error is not None:
        doc["truncation_error"] = float(result.truncation_error)
    return doc


def from_document(doc):
    return ClusterResult(
        np.array(doc["assignments"], dtype=np.int64),
        np.array(doc["fidelities"], dtype=float).reshape(len(doc["assignments"]), -1),
        list(doc.get("loss_per_epoch", [])),
        dict(doc.get("config", {})),
        doc.get("accuracy"),
        {int(k): int(v) for k, v in doc["matching"].items()} if "matching" in doc else None,
        doc.get("truncation_error"),
    )


def dumps(result):
    """Deterministic serialisation: sorted keys, shortest round-trip floats."""
    return json.dumps(to_document(result), sort_keys=True, indent=1, allow_nan=False)


def loads(text):
    return from_document(json.loads(text))


def write_result(result, path):
    Path(path).write_text(dumps(result) + "\n", encoding="utf-8")


def read_result(path):
    return loads(Path(path).read_text(encoding="utf-8"))


def write_assignments(assignments, path):
    """CSV ``row,cluster``."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["row", "cluster"])
        for i, a in enumerate(assignments):
            w.writerow([i, int(a)])


def read_labels(path):
    """Integer column from a ``row,cluster`` file, a labeled dataset CSV (last column) or a bare column."""
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except FileNotFoundError:
        raise IngestionError(f"no such file: {path}", path=str(path)) from None
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestionError(f"cannot read {path}: {exc}", path=str(path)) from None
    start = 0
    if rows and not _numeric(rows[0][-1]):
        start = 1
    if len(rows) <= start:
        raise IngestionError(f"{path}: no data rows", path=str(path))
    out = []
    for line, row in enumerate(rows[start:], start=start + 1):
        cell = row[-1].strip()
        if not _numeric(cell) or float(cell) != round(float(cell)):
            raise IngestionError(f"{path}: row {line} has non-integer label {cell!r}", str(path), line)
        out.append(int(round(float(cell))))
    return np.array(out, dtype=np.int64)


def _numeric(text):
    try:
        return math.isfinite(float(text))
    except ValueError:
        return False
