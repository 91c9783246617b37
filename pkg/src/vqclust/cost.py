"""Clustering objective evaluated on a fidelity matrix.

Every variant is a pair weight times a product of per-point factors::

    original              d_ij                         * f_i f_j
    inverse_distance      1 / d_ij                     * (1 - f_i f_j)
    centroid_regularized  (d_ij**alpha + lam * dc_i)   * f_i f_j
    complementary         (d_ij**alpha + lam * dc_i)   * (1 - f_i)(1 - f_j)

where ``f_i = f_i^a`` is the fidelity of point ``i`` with anchor ``a`` and
``dc_i`` the distance of point ``i`` to the centroid of its current
cluster.  The total is half the sum over ordered pairs ``i != j`` and all
anchors, plus ``mu`` times the one-cluster penalty ``(sum_a f_i^a - 1)**2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from .exceptions import ConfigurationError, UsageError

ORIGINAL = "original"
INVERSE_DISTANCE = "inverse_distance"
CENTROID_REGULARIZED = "centroid_regularized"
COMPLEMENTARY = "complementary"
VARIANTS = (ORIGINAL, INVERSE_DISTANCE, CENTROID_REGULARIZED, COMPLEMENTARY)

METRICS = {"euclidean": "euclidean", "squared_euclidean": "sqeuclidean", "manhattan": "cityblock"}

DISTANCE_FLOOR = 1e-9


class CoincidentPointsWarning(UserWarning):
    """Zero pairwise distances were floored for the inverse-distance cost."""


@dataclass(frozen=True)
class CostConfig:
    variant: str = COMPLEMENTARY
    alpha: float = 0.5
    lam: float = 0.0
    mu: float | None = None
    prune_epsilon: float = 0.0
    metric: str = "euclidean"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"unknown cost variant {self.variant!r}; choose from {VARIANTS}")
        if not math.isfinite(self.alpha):
            raise ConfigurationError("alpha must be finite")
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ConfigurationError(f"lambda must be finite and >= 0, got {self.lam}")
        if self.mu is not None and not (math.isfinite(self.mu) and self.mu >= 0):
            raise ConfigurationError(f"mu must be finite and >= 0, got {self.mu}")
        if not (math.isfinite(self.prune_epsilon) and self.prune_epsilon >= 0):
            raise ConfigurationError(f"prune_epsilon must be finite and >= 0, got {self.prune_epsilon}")
        if self.metric not in METRICS:
            raise ConfigurationError(f"unknown metric {self.metric!r}; choose from {tuple(METRICS)}")

    @property
    def uses_centroids(self):
        return self.variant in (CENTROID_REGULARIZED, COMPLEMENTARY) and self.lam > 0

    def resolve_mu(self, anchors):
        """Explicit ``mu``, else 0 for a complete orthonormal anchor basis and 1 otherwise."""
        if self.mu is not None:
            return float(self.mu)
        return 0.0 if anchors.is_orthonormal_basis else 1.0


@dataclass(frozen=True)
class CentroidSet:
    centroids: np.ndarray
    counts: np.ndarray
    empty: np.ndarray

    @property
    def any_empty(self):
        return bool(self.empty.any())


def pairwise_distances(X, metric="euclidean"):
    """Symmetric ``(N, N)`` distance matrix with an exact zero diagonal."""
    if metric not in METRICS:
        raise ConfigurationError(f"unknown metric {metric!r}")
    X = np.asarray(X, dtype=float)
    if X.shape[0] < 2:
        return np.zeros((X.shape[0], X.shape[0]))
    return squareform(pdist(X, METRICS[metric]))


def point_distances(X, Y, metric="euclidean"):
    return cdist(np.asarray(X, dtype=float), np.asarray(Y, dtype=float), METRICS[metric])


def update_centroids(X, assignments, k, previous=None):
    """Mean of each cluster's members; empty clusters keep ``previous`` and are flagged."""
    X = np.asarray(X, dtype=float)
    assignments = np.asarray(assignments)
    if assignments.shape != (X.shape[0],):
        raise UsageError("one assignment per point required")
    if np.any((assignments < 0) | (assignments >= k)):
        raise UsageError(f"assignments must lie in [0, {k})")
    counts = np.bincount(assignments, minlength=k)
    sums = np.zeros((k, X.shape[1]))
    np.add.at(sums, assignments, X)
    empty = counts == 0
    if previous is None:
        previous = np.zeros((k, X.shape[1]))
    previous = previous.centroids if isinstance(previous, CentroidSet) else np.asarray(previous, dtype=float)
    cent = np.where(empty[:, None], previous, sums / np.maximum(counts, 1)[:, None])
    return CentroidSet(cent, counts, empty)


def centroid_distances(X, assignments, centroids, metric="euclidean"):
    """Distance of each point to the centroid of its own cluster."""
    cent = centroids.centroids if isinstance(centroids, CentroidSet) else np.asarray(centroids)
    X = np.asarray(X, dtype=float)
    diff = X - cent[np.asarray(assignments)]
    if metric == "euclidean":
        return np.sqrt(np.sum(diff ** 2, axis=1))
    if metric == "squared_euclidean":
        return np.sum(diff ** 2, axis=1)
    return np.sum(np.abs(diff), axis=1)


def _floor_distance(d):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        warnings.warn("coincident points: distances floored for inverse_distance cost", CoincidentPointsWarning,
                      stacklevel=3)
    return np.maximum(d, DISTANCE_FLOOR)


def pair_weight(d, cent_dist_i, cfg):
    """Distance-derived weight of a term (the factor multiplying the fidelity products)."""
    if cfg.variant == ORIGINAL:
        return d
    if cfg.variant == INVERSE_DISTANCE:
        return 1.0 / _floor_distance(d)
    return np.power(d, cfg.alpha) + cfg.lam * cent_dist_i


def term(i, j, a, F, D, cent_dist_i, cfg):
    """Single cost term for points ``i != j`` and anchor ``a``."""
    if i == j:
        raise UsageError("term is defined for i != j only")
    fi, fj = F[i][a], F[j][a]
    w = pair_weight(D[i][j], cent_dist_i, cfg)
    if cfg.variant in (ORIGINAL, CENTROID_REGULARIZED):
        return float(w * fi * fj)
    if cfg.variant == INVERSE_DISTANCE:
        return float(w * (1.0 - fi * fj))
    return float(w * (1.0 - fi) * (1.0 - fj))


def constraint_penalty(F_row):
    """``(sum_a f^a - 1)**2``."""
    return float((np.sum(F_row) - 1.0) ** 2)


def weight_matrix(D, cfg, cent_dist=None):
    """``W[i, j]`` pair weights with the diagonal zeroed and pruning applied."""
    D = np.asarray(D, dtype=float)
    n = D.shape[0]
    if cent_dist is None:
        cent_dist = np.zeros(n)
    off = ~np.eye(n, dtype=bool)
    W = np.zeros_like(D)
    if cfg.variant == INVERSE_DISTANCE:
        W[off] = 1.0 / _floor_distance(D[off])
    else:
        W = pair_weight(D, np.asarray(cent_dist, dtype=float)[:, None], cfg)
        W = np.where(off, W, 0.0)
    if cfg.prune_epsilon > 0 and n > 1:
        W = np.where(W < cfg.prune_epsilon * W.max(), 0.0, W)
    return W


def _factors(F, variant):
    return 1.0 - F if variant == COMPLEMENTARY else F


def cost_from_weights(F, W, variant, mu=0.0):
    """Total cost given a precomputed weight matrix (diagonal must be zero)."""
    F = np.asarray(F, dtype=float)
    G = _factors(F, variant)
    quad = float(np.sum(G * (W @ G)))
    if variant == INVERSE_DISTANCE:
        pair = F.shape[1] * W.sum() - quad
    else:
        pair = quad
    penalty = np.sum((F.sum(axis=1) - 1.0) ** 2)
    return float(0.5 * pair + mu * penalty)


def cost_gradient(F, W, variant, mu=0.0):
    """``dL/dF`` of :func:`cost_from_weights`, shape ``(N, k)``."""
    F = np.asarray(F, dtype=float)
    Ws = 0.5 * (W + W.T)
    G = _factors(F, variant)
    grad = Ws @ G
    if variant in (COMPLEMENTARY, INVERSE_DISTANCE):
        grad = -grad
    grad = grad + 2.0 * mu * (F.sum(axis=1, keepdims=True) - 1.0)
    return grad


def total_cost(F, D, cfg, cent_dist=None, mu=None):
    """Clustering cost for fidelity matrix ``F`` and distance matrix ``D``.

    ``cent_dist`` holds each point's distance to its cluster centroid (only
    read by the centroid-regularized and complementary variants).  ``mu``
    defaults to ``cfg.mu`` or 0.
    """
    F = np.asarray(F, dtype=float)
    D = np.asarray(D, dtype=float)
    if F.ndim != 2 or D.shape != (F.shape[0], F.shape[0]):
        raise UsageError(f"fidelity matrix {F.shape} and distance matrix {D.shape} are inconsistent")
    if mu is None:
        mu = cfg.mu or 0.0
    return cost_from_weights(F, weight_matrix(D, cfg, cent_dist), cfg.variant, mu)


def hard_cost(assignments, D):
    """Discrete objective: half the summed distance over same-cluster ordered pairs."""
    a = np.asarray(assignments)
    k = int(a.max()) + 1 if a.size else 0
    Q = np.eye(k)[a]
    return float(0.5 * np.sum(Q * (D @ Q)))
