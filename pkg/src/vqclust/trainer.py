"""Variational training loop: Adam on parameter-shift gradients.

Each epoch recomputes the fidelity matrix, the argmax assignments and (when
the cost needs them) the centroids, freezes the resulting pair weights, and
then takes ``steps_per_epoch`` Adam steps.

Parameters are per datapoint by default: row ``i`` of an ``(N, P)`` array
drives the circuit of point ``i``.  Every row starts from the same seeded
draw, so identical points stay identical.  With ``param_sharing="shared"``
a single ``(P,)`` vector drives all points instead.

Gradients use the chain rule ``dL/dtheta = sum_a dL/dF_a * dF_a/dtheta``.
Each fidelity is a first-order trigonometric polynomial in every rotation
angle, so the two-term shift ``[F(theta + pi/2) - F(theta - pi/2)] / 2`` is
exact for ``dF/dtheta``; the cost itself is quadratic in the fidelities,
where a direct shift on ``L`` would not be exact.

After the last epoch an optional readout alignment picks one fixed Rot3 per
qubit (identity included among the seeded candidates) that minimises the
cost of the resulting hard assignment; the reported fidelities include that
rotation, so ``assignments == argmax(fidelity_matrix)`` always holds.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .backend import rotated_anchor_states
from .cost import (
    CostConfig,
    centroid_distances,
    cost_from_weights,
    cost_gradient,
    pairwise_distances,
    update_centroids,
    weight_matrix,
)
from .exceptions import ConfigurationError, NumericError, UsageError
from .qsim import fidelity_matrix
from .rng import PortableRNG

PARAMETER_SHIFT = "parameter_shift"
CENTRAL_DIFFERENCE = "central_difference"
GRADIENT_MODES = (PARAMETER_SHIFT, CENTRAL_DIFFERENCE)
PER_POINT = "per_point"
SHARED = "shared"
ALIGNED = "aligned"
ARGMAX = "argmax"
MAX_EPOCHS = 10000
SHIFT = math.pi / 2


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    eps_adam: float = 1e-8
    epochs: int = 20
    steps_per_epoch: int = 3
    batch_size: int | str = "full"
    gradient_mode: str = PARAMETER_SHIFT
    fd_step: float = 1e-5
    seed: int = 0
    param_sharing: str = PER_POINT
    readout: str = ALIGNED
    alignment_candidates: int = 512

    def __post_init__(self):
        for name in ("learning_rate", "eps_adam", "fd_step"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ConfigurationError(f"{name} must be finite and > 0, got {value!r}")
        for name in ("beta1", "beta2"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and 0 < value < 1):
                raise ConfigurationError(f"{name} must lie in (0, 1), got {value!r}")
        for name, hi in (("epochs", MAX_EPOCHS), ("steps_per_epoch", 1000), ("alignment_candidates", 100000)):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or not 1 <= value <= hi:
                raise ConfigurationError(f"{name} must be an integer in [1, {hi}], got {value!r}")
        b = self.batch_size
        if b != "full" and (isinstance(b, bool) or not isinstance(b, (int, np.integer)) or b < 1):
            raise ConfigurationError(f"batch_size must be 'full' or a positive integer, got {b!r}")
        if self.gradient_mode not in GRADIENT_MODES:
            raise ConfigurationError(f"gradient_mode must be one of {GRADIENT_MODES}, got {self.gradient_mode!r}")
        if self.param_sharing not in (PER_POINT, SHARED):
            raise ConfigurationError(f"param_sharing must be 'per_point' or 'shared', got {self.param_sharing!r}")
        if self.readout not in (ALIGNED, ARGMAX):
            raise ConfigurationError(f"readout must be 'aligned' or 'argmax', got {self.readout!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ConfigurationError(f"seed must be a non-negative integer, got {self.seed!r}")


@dataclass
class TrainReport:
    loss_per_epoch: list
    final_params: np.ndarray = field(repr=False)
    fidelity_matrix: np.ndarray = field(repr=False)
    assignments: np.ndarray = field(repr=False)
    epochs_run: int
    wall_time: float
    readout: np.ndarray | None = field(default=None, repr=False)
    accuracy_per_epoch: list | None = None
    truncation_error: float = 0.0
    error: str | None = None

    @property
    def ok(self):
        return self.error is None


# -- Adam ---------------------------------------------------------------------


@dataclass(frozen=True)
class AdamMoments:
    m: np.ndarray
    v: np.ndarray

    @classmethod
    def zeros_like(cls, params):
        z = np.zeros_like(np.asarray(params, dtype=float))
        return cls(z, z.copy())


def adam_step(params, grads, moments, t, cfg):
    """One bias-corrected Adam update at step ``t >= 1``; returns ``(params', moments')``."""
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape or moments.m.shape != params.shape:
        raise UsageError(f"shape mismatch: params {params.shape}, grads {grads.shape}, moments {moments.m.shape}")
    if t < 1:
        raise UsageError("Adam step counter starts at 1")
    m = cfg.beta1 * moments.m + (1 - cfg.beta1) * grads
    v = cfg.beta2 * moments.v + (1 - cfg.beta2) * grads * grads
    m_hat = m / (1 - cfg.beta1 ** t)
    v_hat = v / (1 - cfg.beta2 ** t)
    return params - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps_adam), AdamMoments(m, v)


# -- gradients ----------------------------------------------------------------


def gradient(params, objective, mode=PARAMETER_SHIFT, fd_step=1e-5):
    """Gradient of a scalar ``objective`` by per-component shifts.

    ``parameter_shift``: ``[L(theta_t + pi/2) - L(theta_t - pi/2)] / 2``, exact
    when ``L`` is a first-order trigonometric polynomial in each angle (for
    example a single fidelity).  ``central_difference``:
    ``[L(theta_t + h) - L(theta_t - h)] / (2h)``.
    """
    params = np.asarray(params, dtype=float)
    flat = params.reshape(-1)
    if mode == PARAMETER_SHIFT:
        step, scale = SHIFT, 0.5
    elif mode == CENTRAL_DIFFERENCE:
        step, scale = fd_step, 0.5 / fd_step
    else:
        raise ConfigurationError(f"unknown gradient mode {mode!r}")
    base = objective(params)
    if not np.isfinite(base):
        raise NumericError("objective is not finite at the base point", index=None)
    out = np.empty_like(flat)
    for t in range(flat.size):
        e = np.zeros_like(flat)
        e[t] = step
        hi = objective((flat + e).reshape(params.shape))
        lo = objective((flat - e).reshape(params.shape))
        out[t] = scale * (hi - lo)
        if not np.isfinite(out[t]):
            raise NumericError(f"non-finite gradient component {t}", index=t)
    return out.reshape(params.shape)


def fidelity_jacobian(backend, encoded, params, mode=PARAMETER_SHIFT, fd_step=1e-5):
    """``J[t, i, a] = dF[i, a] / d(parameter t of the vector driving point i)``.

    Works for shared ``(P,)`` and per-point ``(N, P)`` parameters alike: a
    column shift moves every row's ``t``-th angle at once, and row ``i``'s
    fidelities only depend on row ``i``'s angles.
    """
    params = np.asarray(params, dtype=float)
    if mode == PARAMETER_SHIFT:
        step, scale = SHIFT, 0.5
    else:
        step, scale = fd_step, 0.5 / fd_step
    cols = []
    for t in range(params.shape[-1]):
        e = np.zeros(params.shape[-1])
        e[t] = step
        hi, _ = backend.fidelities(encoded, params + e)
        lo, _ = backend.fidelities(encoded, params - e)
        col = scale * (hi - lo)
        if not np.all(np.isfinite(col)):
            raise NumericError(f"non-finite fidelity derivative for parameter {t}", index=t)
        cols.append(col)
    return np.stack(cols)


def contract_gradient(dL, J, per_point):
    """Chain rule: per-point ``(N, P)`` or summed over points ``(P,)``."""
    g = np.einsum("ia,tia->it", dL, J)
    return g if per_point else g.sum(axis=0)


class ClusteringObjective:
    """Loss ``L(params)`` with pair weights frozen, plus its chain-rule gradient.

    ``cent_dist`` fixes the centroid distances (as within one epoch).
    """

    def __init__(self, X, backend, cost_cfg=None, mu=None, cent_dist=None):
        self.cost_cfg = cost_cfg or CostConfig()
        self.backend = backend
        self.encoded = backend.encode(np.asarray(X, dtype=float))
        self.W = weight_matrix(pairwise_distances(X, self.cost_cfg.metric), self.cost_cfg, cent_dist)
        self.mu = self.cost_cfg.resolve_mu(backend.anchors) if mu is None else float(mu)

    def __call__(self, params):
        F, _ = self.backend.fidelities(self.encoded, params)
        return cost_from_weights(F, self.W, self.cost_cfg.variant, self.mu)

    def gradient(self, params, mode=PARAMETER_SHIFT, fd_step=1e-5):
        params = np.asarray(params, dtype=float)
        F, _ = self.backend.fidelities(self.encoded, params)
        dL = cost_gradient(F, self.W, self.cost_cfg.variant, self.mu)
        J = fidelity_jacobian(self.backend, self.encoded, params, mode, fd_step)
        return contract_gradient(dL, J, params.ndim == 2)


# -- training -----------------------------------------------------------------


def initial_params(spec, n_points, opt_cfg, rng):
    """Uniform draw in ``[-pi, pi)``; per-point mode copies it to every row."""
    theta = rng.uniform(spec.n_params, -math.pi, math.pi)
    if opt_cfg.param_sharing == PER_POINT:
        return np.tile(theta, (n_points, 1))
    return theta


def _pair_mask(n, batch_size, rng):
    """Symmetric 0/1 mask of ``batch_size`` distinct unordered pairs."""
    iu, ju = np.triu_indices(n, 1)
    pick = rng.permutation(iu.size)[: min(batch_size, iu.size)]
    mask = np.zeros((n, n))
    mask[iu[pick], ju[pick]] = 1.0
    return mask + mask.T


def hard_objective(assignments, W, variant, k):
    """Cost of the one-hot fidelity matrix of ``assignments`` (penalty-free)."""
    return cost_from_weights(np.eye(k)[np.asarray(assignments)], W, variant, 0.0)


def haar_rot3_angles(rng, count):
    """``(count, 3)`` Rot3 angles ``(theta, phi, lam)`` distributed as Haar-random SU(2)."""
    u = rng.uniform((count, 3))
    theta = np.arccos(1.0 - 2.0 * u[:, 0])
    return np.stack([theta, 2 * math.pi * u[:, 1] - math.pi, 2 * math.pi * u[:, 2] - math.pi], axis=1)


def align_readout(amps, anchors, W, variant, n_candidates, rng):
    """Per-qubit Rot3 angles ``(n, 3)`` minimising the hard objective; ties keep the earliest candidate."""
    n = anchors.n_qubits
    best, best_val = np.zeros((n, 3)), None
    cands = haar_rot3_angles(rng, (n_candidates - 1) * n).reshape(n_candidates - 1, n, 3)
    for readout in [np.zeros((n, 3))] + list(cands):
        F = fidelity_matrix(amps, rotated_anchor_states(anchors, readout))
        val = hard_objective(np.argmax(F, axis=1), W, variant, anchors.k)
        if best_val is None or val < best_val:
            best, best_val = readout, val
    return best


def _accuracy(assignments, labels):
    from .evaluation import matched_accuracy

    return matched_accuracy(assignments, labels)[0]


def train(X, backend, cost_cfg=None, opt_cfg=None, labels=None, mu=None, log=None):
    """Optimise circuit parameters for the points ``X`` (already rescaled).

    Parameters
    ----------
    X : array (N, m)
        Preprocessed datapoints.
    backend : StatevectorBackend or MPSBackend
        Carries the circuit, encoding and anchors.
    cost_cfg, opt_cfg : CostConfig, OptimizerConfig
    labels : array (N,), optional
        Only used to record per-epoch matched accuracy.
    mu : float, optional
        Overrides ``cost_cfg.resolve_mu(anchors)``.
    log : callable, optional
        Called as ``log(epoch, loss, accuracy)`` after every epoch.

    Returns
    -------
    TrainReport
        On a numeric failure the report is partial and ``error`` is set.
    """
    cost_cfg = cost_cfg or CostConfig()
    opt_cfg = opt_cfg or OptimizerConfig()
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise UsageError(f"need at least two datapoints as an (N, m) array, got shape {X.shape}")
    if labels is not None and np.shape(labels) != (X.shape[0],):
        raise UsageError("labels must have one entry per datapoint")
    anchors = backend.anchors
    k = anchors.k
    mu = cost_cfg.resolve_mu(anchors) if mu is None else float(mu)
    start = time.perf_counter()
    init_rng, batch_rng, align_rng = PortableRNG(opt_cfg.seed).spawn(3)

    N = X.shape[0]
    D = pairwise_distances(X, cost_cfg.metric)
    encoded = backend.encode(X)
    params = initial_params(backend.spec, N, opt_cfg, init_rng)
    per_point = opt_cfg.param_sharing == PER_POINT
    moments = AdamMoments.zeros_like(params)
    losses, accs = [], [] if labels is not None else None
    t = 0
    centroids = None
    error = None
    W = weight_matrix(D, cost_cfg)

    try:
        F, trunc = backend.fidelities(encoded, params)
        for epoch in range(opt_cfg.epochs):
            assignments = np.argmax(F, axis=1)
            cent_dist = None
            if cost_cfg.uses_centroids:
                centroids = update_centroids(X, assignments, k, centroids)
                cent_dist = centroid_distances(X, assignments, centroids, cost_cfg.metric)
            W = weight_matrix(D, cost_cfg, cent_dist)
            for step in range(opt_cfg.steps_per_epoch):
                if step > 0:
                    F, trunc = backend.fidelities(encoded, params)
                Ws = W if opt_cfg.batch_size == "full" else W * _pair_mask(N, opt_cfg.batch_size, batch_rng)
                dL = cost_gradient(F, Ws, cost_cfg.variant, mu)
                J = fidelity_jacobian(backend, encoded, params, opt_cfg.gradient_mode, opt_cfg.fd_step)
                g = contract_gradient(dL, J, per_point)
                if not np.all(np.isfinite(g)):
                    bad = int(np.flatnonzero(~np.isfinite(g.reshape(-1)))[0])
                    raise NumericError(f"non-finite gradient component {bad}", index=bad)
                t += 1
                params, moments = adam_step(params, g, moments, t, opt_cfg)
            F, trunc = backend.fidelities(encoded, params)
            loss = cost_from_weights(F, W, cost_cfg.variant, mu)
            if not math.isfinite(loss):
                raise NumericError(f"non-finite loss at epoch {epoch}", index=None)
            losses.append(loss)
            acc = None
            if labels is not None:
                acc = _accuracy(np.argmax(F, axis=1), labels)
                accs.append(acc)
            if log is not None:
                log(epoch, loss, acc)
    except NumericError as exc:
        error = f"numeric: {exc}"
        F = np.nan_to_num(F) if "F" in locals() else np.zeros((N, k))
        trunc = locals().get("trunc", 0.0)

    readout = None
    if error is None and opt_cfg.readout == ALIGNED:
        amps = backend.amplitudes(encoded, params)
        readout = align_readout(amps, anchors, W, cost_cfg.variant, opt_cfg.alignment_candidates, align_rng)
        F, trunc = backend.fidelities(encoded, params, readout)
    return TrainReport(
        loss_per_epoch=losses,
        final_params=params,
        fidelity_matrix=F,
        assignments=np.argmax(F, axis=1),
        epochs_run=len(losses),
        wall_time=time.perf_counter() - start,
        readout=readout,
        accuracy_per_epoch=accs,
        truncation_error=float(trunc),
        error=error,
    )


def write_training_log(report, path):
    """CSV ``epoch,loss,accuracy`` (accuracy blank without labels)."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss", "accuracy"])
        for e, loss in enumerate(report.loss_per_epoch):
            acc = "" if report.accuracy_per_epoch is None else repr(float(report.accuracy_per_epoch[e]))
            w.writerow([e, repr(float(loss)), acc])

