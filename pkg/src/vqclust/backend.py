"""Fidelity backends: dense statevector and bounded-bond-dimension MPS.

Both expose the same three calls used by the trainer::

    encoded = backend.encode(X)                      # data-dependent rotations only
    F, err = backend.fidelities(encoded, params)     # (N, k) fidelities, truncation error
    amps = backend.amplitudes(encoded, params)       # dense (N, 2**n) final states

``params`` is either one shared vector ``(P,)`` or one vector per datapoint
``(N, P)``.  An optional ``readout`` of shape ``(n_qubits, 3)`` appends one
fixed Rot3 per qubit after the trainable layers.
"""

from __future__ import annotations

import numpy as np

from .ansatz import apply_layers, encode_amplitudes
from .exceptions import ConfigurationError, UsageError
from .mps import (
    exact_chi,
    mps_apply_controlled_x,
    mps_apply_matrix,
    mps_fidelity,
    mps_from_dense,
    mps_from_zero,
    mps_to_dense,
)
from .qsim import apply_single_qubit, fidelity_matrix, rot3_matrix

STATEVECTOR = "statevector"
MPS = "mps"
BACKENDS = (STATEVECTOR, MPS)


def readout_matrices(readout):
    readout = np.asarray(readout, dtype=float)
    return rot3_matrix(readout[:, 0], readout[:, 1], readout[:, 2])


def rotated_anchor_states(anchors, readout):
    """``U^dagger |a>`` for the product readout ``U``, so ``|<a|U psi>|^2 = |<U^dagger a|psi>|^2``."""
    out = anchors.states
    n = anchors.n_qubits
    for q, m in enumerate(readout_matrices(readout)):
        out = apply_single_qubit(out, m.conj().T, q, n)
    return out


class StatevectorBackend:
    name = STATEVECTOR

    def __init__(self, spec, enc, anchors):
        if anchors.dim != 2 ** spec.n_qubits:
            raise UsageError(f"anchor dimension {anchors.dim} does not match {spec.n_qubits} qubit(s)")
        self.spec = spec
        self.enc = enc
        self.anchors = anchors

    def encode(self, X):
        return encode_amplitudes(X, self.spec, self.enc)

    def amplitudes(self, encoded, params, readout=None):
        amps = apply_layers(encoded, params, self.spec)
        if readout is not None:
            for q, m in enumerate(readout_matrices(readout)):
                amps = apply_single_qubit(amps, m, q, self.spec.n_qubits)
        return amps

    def fidelities(self, encoded, params, readout=None):
        return fidelity_matrix(self.amplitudes(encoded, params, readout), self.anchors.states), 0.0


class MPSBackend:
    """Every datapoint is an MPS; the batch shares one set of bond dimensions."""

    name = MPS

    def __init__(self, spec, enc, anchors, chi_max=None):
        if anchors.dim != 2 ** spec.n_qubits:
            raise UsageError(f"anchor dimension {anchors.dim} does not match {spec.n_qubits} qubit(s)")
        self.spec = spec
        self.enc = enc
        self.anchors = anchors
        self.chi_max = exact_chi(spec.n_qubits) if chi_max is None else chi_max
        if isinstance(self.chi_max, bool) or not isinstance(self.chi_max, (int, np.integer)) or self.chi_max < 1:
            raise ConfigurationError(f"chi must be a positive integer, got {chi_max!r}")
        self._anchor_mps = [mps_from_dense(a) for a in anchors.states]

    def encode(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        angles = self.enc.angles(X, self.spec.n_qubits)
        state = mps_from_zero(self.spec.n_qubits, self.chi_max, batch=X.shape[0])
        for q in range(self.spec.n_qubits):
            a = angles[:, q]
            state = mps_apply_matrix(state, rot3_matrix(a[:, 0], a[:, 1], a[:, 2]), q)
        return state

    def evolve(self, encoded, params, readout=None):
        spec = self.spec
        angles = spec.reshape_params(params)
        state = encoded
        for layer in range(spec.n_layers):
            for q in range(spec.n_qubits):
                a = angles[..., layer, q, :]
                state = mps_apply_matrix(state, rot3_matrix(a[..., 0], a[..., 1], a[..., 2]), q)
            for g in spec.entangler_gates():
                state = mps_apply_controlled_x(state, g.qubits[:-1], g.qubits[-1])
        if readout is not None:
            for q, m in enumerate(readout_matrices(readout)):
                state = mps_apply_matrix(state, m, q)
        return state

    def amplitudes(self, encoded, params, readout=None):
        return mps_to_dense(self.evolve(encoded, params, readout))

    def fidelities(self, encoded, params, readout=None):
        state = self.evolve(encoded, params, readout)
        F = np.stack([mps_fidelity(a, state) for a in self._anchor_mps], axis=-1)
        err = np.asarray(state.truncation_error)
        return np.atleast_2d(F), float(err.max()) if err.size else 0.0


def make_backend(name, spec, enc, anchors, chi=None):
    if name == STATEVECTOR:
        if chi is not None:
            raise ConfigurationError("chi only applies to the mps backend")
        return StatevectorBackend(spec, enc, anchors)
    if name == MPS:
        return MPSBackend(spec, enc, anchors, chi)
    raise ConfigurationError(f"unknown backend {name!r}; choose from {BACKENDS}")

