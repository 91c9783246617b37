"""Datapoint encoding and the layered rotation/entangler circuit.

A datapoint enters once, through data-dependent initial rotations
(``encode``).  A stack of trainable layers follows: one general rotation
per qubit, then a fixed entangler.  All batched helpers take ``X`` of shape
``(N, m)`` and parameters either shaped ``(P,)`` (one parameter vector for
every row) or ``(N, P)`` (one vector per row).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, UsageError
from .qsim import (
    Gate,
    StateVector,
    apply_controlled_x,
    apply_single_qubit,
    check_n_qubits,
    fidelity_matrix,
    rot3_matrix,
    zero_amplitudes,
)

NONE = "none"
CNOT_CHAIN = "cnot_chain"
CNOT_CHAIN_TOFFOLI = "cnot_chain_plus_toffoli"
ENTANGLERS = (NONE, CNOT_CHAIN, CNOT_CHAIN_TOFFOLI)

# Positions inside a Rot3 angle triple.
THETA, PHI, LAMBDA = 0, 1, 2
# On |0> the trailing Rz(lambda) of the encoding rotation is a global phase,
# so features are only routed to the polar and azimuthal slots.
ENCODING_SLOTS = (PHI, THETA)


@dataclass(frozen=True)
class CircuitSpec:
    n_qubits: int
    n_layers: int = 1
    entangler: str | None = None

    def __post_init__(self):
        check_n_qubits(self.n_qubits)
        if isinstance(self.n_layers, bool) or not isinstance(self.n_layers, (int, np.integer)) or self.n_layers < 1:
            raise ConfigurationError(f"n_layers must be a positive integer, got {self.n_layers!r}")
        entangler = self.entangler
        if entangler is None:
            entangler = NONE if self.n_qubits == 1 else CNOT_CHAIN
            object.__setattr__(self, "entangler", entangler)
        if entangler not in ENTANGLERS:
            raise ConfigurationError(f"unknown entangler {entangler!r}; choose from {ENTANGLERS}")
        if (entangler == NONE) != (self.n_qubits == 1):
            raise ConfigurationError("entangler must be 'none' exactly when n_qubits == 1")

    @property
    def n_params(self):
        return 3 * self.n_qubits * self.n_layers

    def entangler_gates(self):
        n = self.n_qubits
        gates = []
        if self.entangler in (CNOT_CHAIN, CNOT_CHAIN_TOFFOLI):
            gates.extend(Gate.cnot(q, q + 1) for q in range(n - 1))
        if self.entangler == CNOT_CHAIN_TOFFOLI:
            gates.extend(Gate.toffoli(q, q + 1, q + 2) for q in range(n - 2))
        return gates

    def gates(self, params):
        """Trainable part of the circuit as a flat gate list (unbatched params)."""
        angles = self.reshape_params(params)
        gates = []
        for layer in angles:
            gates.extend(Gate.rot3(q, *layer[q]) for q in range(self.n_qubits))
            gates.extend(self.entangler_gates())
        return gates

    def reshape_params(self, params):
        params = np.asarray(params, dtype=float)
        if params.shape[-1] != self.n_params:
            raise UsageError(f"expected {self.n_params} circuit parameters, got {params.shape[-1]}")
        if not np.all(np.isfinite(params)):
            raise UsageError("circuit parameters must be finite")
        return params.reshape(params.shape[:-1] + (self.n_layers, self.n_qubits, 3))


@dataclass(frozen=True)
class EncodingSpec:
    """Which (qubit, angle slot) each feature is added into.

    ``routes[f] = (qubit, slot)`` with ``slot`` indexing the Rot3 triple
    ``(theta, phi, lambda)``.  Features landing on the same slot are summed.
    """

    routes: tuple[tuple[int, int], ...]
    strategy: str = "angle_per_qubit"

    def __post_init__(self):
        if self.strategy != "angle_per_qubit":
            raise ConfigurationError(f"unknown encoding strategy {self.strategy!r}")
        routes = tuple((int(q), int(s)) for q, s in self.routes)
        if not routes:
            raise ConfigurationError("encoding needs at least one feature")
        for q, s in routes:
            if q < 0 or s not in (THETA, PHI, LAMBDA):
                raise ConfigurationError(f"invalid route {(q, s)}")
        object.__setattr__(self, "routes", routes)

    @classmethod
    def default(cls, n_features, n_qubits):
        """Feature ``f`` goes to qubit ``f % n``.

        A qubit carrying a single feature encodes it as the polar angle
        theta.  A qubit carrying several cycles through phi, theta, phi, ...
        so that a feature pair maps to (azimuth, polar angle).
        """
        n_features = int(n_features)
        if n_features < 1:
            raise ConfigurationError("need at least one feature")
        per_qubit = [len(range(q, n_features, n_qubits)) for q in range(n_qubits)]
        routes = []
        for f in range(n_features):
            q = f % n_qubits
            slot = THETA if per_qubit[q] == 1 else ENCODING_SLOTS[(f // n_qubits) % len(ENCODING_SLOTS)]
            routes.append((q, slot))
        return cls(tuple(routes))

    @property
    def n_features(self):
        return len(self.routes)

    def angles(self, X, n_qubits):
        """Per-row encoding angles, shape ``(N, n_qubits, 3)``."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise UsageError(f"encoding expects {self.n_features} features, got shape {X.shape}")
        if max(q for q, _ in self.routes) >= n_qubits:
            raise UsageError(f"encoding routes features to qubits beyond {n_qubits}")
        out = np.zeros((X.shape[0], n_qubits, 3))
        for f, (q, s) in enumerate(self.routes):
            out[:, q, s] += X[:, f]
        return out


def _as_batch(X):
    X = np.asarray(X, dtype=float)
    return X[None, :] if X.ndim == 1 else X


def encode_amplitudes(X, spec, enc):
    """Batched ``prod_q Rot3(angles routed to q) |0...0>``."""
    X = _as_batch(X)
    angles = enc.angles(X, spec.n_qubits)
    amps = zero_amplitudes(spec.n_qubits, X.shape[0])
    for q in range(spec.n_qubits):
        a = angles[:, q]
        amps = apply_single_qubit(amps, rot3_matrix(a[:, 0], a[:, 1], a[:, 2]), q, spec.n_qubits)
    return amps


def apply_layers(amps, params, spec):
    """Apply the trainable layers to a batch of amplitudes.

    ``params`` is ``(P,)`` (shared) or ``(N, P)`` (per row).
    """
    angles = spec.reshape_params(params)
    n = spec.n_qubits
    ent = spec.entangler_gates()
    for layer in range(spec.n_layers):
        for q in range(n):
            a = angles[..., layer, q, :]
            amps = apply_single_qubit(amps, rot3_matrix(a[..., 0], a[..., 1], a[..., 2]), q, n)
        for g in ent:
            amps = apply_controlled_x(amps, g.qubits[:-1], g.qubits[-1], n)
    return amps


def variational_amplitudes(X, params, spec, enc):
    X = _as_batch(X)
    params = np.asarray(params, dtype=float)
    if params.ndim == 2 and params.shape[0] != X.shape[0]:
        raise UsageError(f"{params.shape[0]} parameter rows for {X.shape[0]} datapoints")
    return apply_layers(encode_amplitudes(X, spec, enc), params, spec)


def encode(point, spec, enc):
    """Encoded state of a single datapoint."""
    point = np.asarray(point, dtype=float)
    if point.ndim != 1:
        raise UsageError("encode takes a single feature vector")
    return StateVector(spec.n_qubits, encode_amplitudes(point, spec, enc)[0])


def variational_state(point, params, spec, enc):
    """Encoded state followed by the trainable layers, for one datapoint."""
    point = np.asarray(point, dtype=float)
    params = np.asarray(params, dtype=float)
    if point.ndim != 1 or params.ndim != 1:
        raise UsageError("variational_state takes one feature vector and one parameter vector")
    return StateVector(spec.n_qubits, variational_amplitudes(point, params, spec, enc)[0])


def fidelity_row(point, params, spec, enc, anchors):
    """Fidelities of one datapoint's state with each anchor."""
    if anchors.dim != 2 ** spec.n_qubits:
        raise UsageError(f"anchor dimension {anchors.dim} does not match {spec.n_qubits} qubit(s)")
    state = variational_state(point, params, spec, enc)
    return fidelity_matrix(state.amps, anchors.states)[0]


def statevector_fidelities(X, params, spec, enc, anchors):
    """``(N, k)`` fidelity matrix for a batch of datapoints."""
    if anchors.dim != 2 ** spec.n_qubits:
        raise UsageError(f"anchor dimension {anchors.dim} does not match {spec.n_qubits} qubit(s)")
    return fidelity_matrix(variational_amplitudes(X, params, spec, enc), anchors.states)
