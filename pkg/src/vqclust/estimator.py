"""scikit-learn style front end."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .anchors import make_anchor_set
from .ansatz import CircuitSpec, EncodingSpec
from .backend import make_backend
from .cost import CostConfig, point_distances
from .data import DEFAULT_HI, DEFAULT_LO, Dataset, rescale
from .exceptions import NumericError
from .trainer import PER_POINT, OptimizerConfig, train


class VariationalClustering(ClusterMixin, TransformerMixin, BaseEstimator):
    """Cluster points by training circuits towards non-orthogonal anchor states.

    Each feature is min-max rescaled into ``feature_range`` and encoded as a
    rotation angle.  After :meth:`fit`, ``labels_[i]`` is the anchor with the
    highest fidelity for training point ``i``.

    Parameters
    ----------
    n_clusters : int
        Number of anchors ``k``.
    n_qubits, n_layers : int
        Circuit width and depth.
    backend : {"statevector", "mps"}
    chi : int, optional
        Bond-dimension cap for the MPS backend (exact when omitted).
    cost : str
        One of ``original``, ``inverse_distance``, ``centroid_regularized``,
        ``complementary``.
    random_state : int
        Seeds parameter initialisation, pair batches and readout alignment.

    Attributes
    ----------
    labels_ : ndarray (N,)
    fidelities_ : ndarray (N, k)
    loss_curve_ : list of float
    n_iter_ : int
    train_report_ : TrainReport
    """

    def __init__(self, n_clusters=3, n_qubits=1, n_layers=1, entangler=None, anchor_mode=None,
                 backend="statevector", chi=None, cost="complementary", alpha=0.5, lam=0.0, mu=None,
                 prune_epsilon=0.0, metric="euclidean", learning_rate=0.05, epochs=20, steps_per_epoch=3,
                 batch_size="full", gradient_mode="parameter_shift", param_sharing="per_point",
                 readout="aligned", alignment_candidates=512, feature_range=(DEFAULT_LO, DEFAULT_HI),
                 random_state=0):
        self.n_clusters = n_clusters
        self.n_qubits = n_qubits
        self.n_layers = n_layers
        self.entangler = entangler
        self.anchor_mode = anchor_mode
        self.backend = backend
        self.chi = chi
        self.cost = cost
        self.alpha = alpha
        self.lam = lam
        self.mu = mu
        self.prune_epsilon = prune_epsilon
        self.metric = metric
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.steps_per_epoch = steps_per_epoch
        self.batch_size = batch_size
        self.gradient_mode = gradient_mode
        self.param_sharing = param_sharing
        self.readout = readout
        self.alignment_candidates = alignment_candidates
        self.feature_range = feature_range
        self.random_state = random_state

    def _configs(self):
        cost = CostConfig(self.cost, self.alpha, self.lam, self.mu, self.prune_epsilon, self.metric)
        opt = OptimizerConfig(
            learning_rate=self.learning_rate, epochs=self.epochs, steps_per_epoch=self.steps_per_epoch,
            batch_size=self.batch_size, gradient_mode=self.gradient_mode, seed=self.random_state,
            param_sharing=self.param_sharing, readout=self.readout,
            alignment_candidates=self.alignment_candidates,
        )
        return cost, opt

    def fit(self, X, y=None):
        """Train on ``X``; ``y`` (optional labels) only feeds per-epoch accuracy."""
        X = check_array(X, dtype=float, ensure_min_samples=2)
        cost_cfg, opt_cfg = self._configs()
        lo, hi = self.feature_range
        scaled = rescale(Dataset(X), lo, hi)
        record = scaled.preprocessing["rescale"]
        self.feature_min_ = np.array(record["min"])
        self.feature_max_ = np.array(record["max"])
        self.n_features_in_ = X.shape[1]
        spec = CircuitSpec(self.n_qubits, self.n_layers, self.entangler)
        enc = EncodingSpec.default(X.shape[1], self.n_qubits)
        anchors = make_anchor_set(self.n_qubits, self.n_clusters, self.anchor_mode, seed=self.random_state)
        self._backend = make_backend(self.backend, spec, enc, anchors, self.chi)
        labels = None if y is None else np.asarray(y)
        report = train(scaled.points, self._backend, cost_cfg, opt_cfg, labels=labels)
        if report.error:
            raise NumericError(report.error)
        self.anchors_ = anchors
        self.train_report_ = report
        self.labels_ = report.assignments
        self.fidelities_ = report.fidelity_matrix
        self.loss_curve_ = list(report.loss_per_epoch)
        self.n_iter_ = report.epochs_run
        self._train_points = scaled.points
        return self

    def _scale(self, X):
        span = np.where(self.feature_max_ > self.feature_min_, self.feature_max_ - self.feature_min_, 1.0)
        t = np.where(self.feature_max_ > self.feature_min_, (X - self.feature_min_) / span, 0.5)
        lo, hi = self.feature_range
        return lo * (1 - t) + hi * t

    def transform(self, X):
        """Fidelities ``(N, k)`` of new points with each anchor.

        With per-point parameters a new point borrows the trained circuit of
        its nearest training point, so training points reproduce
        ``fidelities_`` exactly.
        """
        check_is_fitted(self, "labels_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        Z = self._scale(X)
        params = self.train_report_.final_params
        if self.param_sharing == PER_POINT:
            nearest = np.argmin(point_distances(Z, self._train_points, self.metric), axis=1)
            params = params[nearest]
        F, _ = self._backend.fidelities(self._backend.encode(Z), params, self.train_report_.readout)
        return F

    def predict(self, X):
        return np.argmax(self.transform(X), axis=1)
