"""Dense statevector simulation for a handful of qubits.

Amplitude index convention: qubit 0 is the most significant bit, so for
three qubits ``|q0 q1 q2>`` lives at index ``4*q0 + 2*q1 + q2``.

All functions accept either a single amplitude vector of shape ``(2**n,)``
or a batch of shape ``(B, 2**n)``; single-qubit matrices may likewise be a
single ``(2, 2)`` array or a per-row batch ``(B, 2, 2)``.  The batched
forms are what the clustering code uses to push every datapoint through
the same circuit at once.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .exceptions import ConfigurationError, UsageError

MAX_QUBITS = 12

# Gate kinds.
ROT_Y = "ry"
ROT_Z = "rz"
ROT3 = "rot3"
CNOT = "cnot"
TOFFOLI = "toffoli"

_N_QUBITS = {ROT_Y: 1, ROT_Z: 1, ROT3: 1, CNOT: 2, TOFFOLI: 3}
_N_ANGLES = {ROT_Y: 1, ROT_Z: 1, ROT3: 3, CNOT: 0, TOFFOLI: 0}


def ry_matrix(theta):
    """``exp(-i theta Y / 2)``; broadcasts over array-valued ``theta``."""
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    out = np.empty(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def rz_matrix(theta):
    """``exp(-i theta Z / 2)``; broadcasts over array-valued ``theta``."""
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = np.exp(-0.5j * theta)
    out[..., 1, 1] = np.exp(0.5j * theta)
    return out


def rot3_matrix(theta, phi, lam):
    """General rotation ``Rz(phi) @ Ry(theta) @ Rz(lam)``.

    Each angle enters through a single Pauli-generated factor, which keeps
    the two-term parameter-shift rule exact for every one of them.
    """
    return rz_matrix(phi) @ ry_matrix(theta) @ rz_matrix(lam)


@dataclass(frozen=True)
class Gate:
    """A gate on specific qubits.

    Use the constructors :meth:`ry`, :meth:`rz`, :meth:`rot3`, :meth:`cnot`
    and :meth:`toffoli` rather than filling the fields by hand.
    """

    kind: str
    qubits: tuple[int, ...]
    angles: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in _N_QUBITS:
            raise ConfigurationError(f"unknown gate kind {self.kind!r}")
        if len(self.qubits) != _N_QUBITS[self.kind]:
            raise ConfigurationError(f"{self.kind} acts on {_N_QUBITS[self.kind]} qubit(s), got {self.qubits}")
        if len(self.angles) != _N_ANGLES[self.kind]:
            raise ConfigurationError(f"{self.kind} takes {_N_ANGLES[self.kind]} angle(s), got {self.angles}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ConfigurationError(f"gate qubits must be distinct, got {self.qubits}")
        if any(q < 0 for q in self.qubits):
            raise ConfigurationError(f"negative qubit index in {self.qubits}")
        if not all(np.isfinite(a) for a in self.angles):
            raise ConfigurationError(f"non-finite gate angle in {self.angles}")

    @classmethod
    def ry(cls, qubit, theta):
        return cls(ROT_Y, (qubit,), (float(theta),))

    @classmethod
    def rz(cls, qubit, theta):
        return cls(ROT_Z, (qubit,), (float(theta),))

    @classmethod
    def rot3(cls, qubit, theta, phi, lam):
        return cls(ROT3, (qubit,), (float(theta), float(phi), float(lam)))

    @classmethod
    def cnot(cls, control, target):
        return cls(CNOT, (control, target))

    @classmethod
    def toffoli(cls, control1, control2, target):
        return cls(TOFFOLI, (control1, control2, target))

    @property
    def is_single_qubit(self):
        return _N_QUBITS[self.kind] == 1

    def matrix(self):
        """Unitary on the gate's own qubits (first listed qubit = most significant)."""
        if self.kind == ROT_Y:
            return ry_matrix(self.angles[0])
        if self.kind == ROT_Z:
            return rz_matrix(self.angles[0])
        if self.kind == ROT3:
            return rot3_matrix(*self.angles)
        dim = 2 ** len(self.qubits)
        m = np.eye(dim, dtype=complex)
        m[[dim - 2, dim - 1]] = m[[dim - 1, dim - 2]]
        return m

    def inverse(self):
        if self.kind in (CNOT, TOFFOLI):
            return self
        if self.kind == ROT3:
            theta, phi, lam = self.angles
            return Gate.rot3(self.qubits[0], -theta, -lam, -phi)
        return Gate(self.kind, self.qubits, (-self.angles[0],))


@dataclass(frozen=True)
class StateVector:
    """Immutable normalized pure state on ``n_qubits`` qubits."""

    n_qubits: int
    amps: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amps, dtype=complex).reshape(-1)
        if amps.shape[0] != 2 ** self.n_qubits:
            raise UsageError(f"expected {2 ** self.n_qubits} amplitudes for {self.n_qubits} qubit(s), got {amps.shape[0]}")
        if not np.all(np.isfinite(amps)):
            raise UsageError("amplitudes must be finite")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_amplitudes(cls, amps, normalize=True):
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        n = int(round(np.log2(amps.shape[0]))) if amps.shape[0] else 0
        if amps.shape[0] < 2 or 2 ** n != amps.shape[0]:
            raise UsageError(f"amplitude count {amps.shape[0]} is not a power of two >= 2")
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise UsageError("cannot normalize the zero vector")
            amps = amps / norm
        return cls(n, amps)

    @property
    def norm(self):
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    def __len__(self):
        return self.amps.shape[0]


def check_n_qubits(n_qubits):
    if isinstance(n_qubits, bool) or not isinstance(n_qubits, (int, np.integer)):
        raise ConfigurationError(f"n_qubits must be an integer, got {n_qubits!r}")
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    return int(n_qubits)


def zero_amplitudes(n_qubits, batch=None):
    shape = (2 ** n_qubits,) if batch is None else (batch, 2 ** n_qubits)
    amps = np.zeros(shape, dtype=complex)
    amps[..., 0] = 1.0
    return amps


def init_zero(n_qubits):
    """The all-zeros computational basis state."""
    n_qubits = check_n_qubits(n_qubits)
    return StateVector(n_qubits, zero_amplitudes(n_qubits))


def apply_single_qubit(amps, matrix, qubit, n_qubits):
    """Apply a (possibly per-row) 2x2 matrix to ``qubit``.

    ``amps`` has shape ``(..., 2**n)``; ``matrix`` is ``(2, 2)`` or matches
    the leading batch shape of ``amps`` with two trailing axes.
    """
    amps = np.asarray(amps)
    lead = amps.shape[:-1]
    view = amps.reshape(lead + (2 ** qubit, 2, 2 ** (n_qubits - qubit - 1)))
    matrix = np.asarray(matrix)
    if matrix.ndim == 2:
        out = np.einsum("ij,...ajc->...aic", matrix, view)
    else:
        out = np.einsum("...ij,...ajc->...aic", matrix, view)
    return out.reshape(amps.shape)


@lru_cache(maxsize=None)
def _flip_permutation(n_qubits, controls, target):
    idx = np.arange(2 ** n_qubits)
    mask = np.ones_like(idx, dtype=bool)
    for c in controls:
        mask &= ((idx >> (n_qubits - 1 - c)) & 1).astype(bool)
    perm = np.where(mask, idx ^ (1 << (n_qubits - 1 - target)), idx)
    perm.setflags(write=False)
    return perm


def apply_controlled_x(amps, controls, target, n_qubits):
    """Multi-controlled NOT; a basis permutation, so applied by fancy indexing."""
    perm = _flip_permutation(n_qubits, tuple(controls), target)
    return np.asarray(amps)[..., perm]


def _check_gate_fits(gate, n_qubits):
    if max(gate.qubits) >= n_qubits:
        raise ConfigurationError(f"gate {gate.kind} on qubits {gate.qubits} does not fit {n_qubits} qubit(s)")


def apply_gate_amplitudes(amps, gate, n_qubits):
    """Apply ``gate`` to raw (optionally batched) amplitudes."""
    _check_gate_fits(gate, n_qubits)
    if gate.is_single_qubit:
        return apply_single_qubit(amps, gate.matrix(), gate.qubits[0], n_qubits)
    return apply_controlled_x(amps, gate.qubits[:-1], gate.qubits[-1], n_qubits)


def apply_gate(state, gate):
    """Return ``U|state>`` as a new :class:`StateVector`."""
    return StateVector(state.n_qubits, apply_gate_amplitudes(state.amps, gate, state.n_qubits))


def apply_circuit(state, gates):
    amps = state.amps
    for gate in gates:
        amps = apply_gate_amplitudes(amps, gate, state.n_qubits)
    return StateVector(state.n_qubits, amps)


def overlap(a, b):
    """``<a|b>`` for raw amplitude arrays; reduces over the last axis."""
    return np.sum(np.conj(a) * b, axis=-1)


def fidelity(a, b):
    """``|<a|b>|**2`` clamped into ``[0, 1]``."""
    if a.n_qubits != b.n_qubits:
        raise UsageError(f"fidelity between {a.n_qubits}- and {b.n_qubits}-qubit states")
    ov = overlap(a.amps, b.amps)
    return float(min(1.0, max(0.0, ov.real ** 2 + ov.imag ** 2)))


def fidelity_matrix(states, anchors):
    """Fidelities between each row of ``states`` (N, d) and of ``anchors`` (k, d)."""
    states = np.atleast_2d(states)
    anchors = np.atleast_2d(anchors)
    if states.shape[-1] != anchors.shape[-1]:
        raise UsageError(f"state dimension {states.shape[-1]} != anchor dimension {anchors.shape[-1]}")
    ov = np.conj(states) @ anchors.T
    return np.clip(ov.real ** 2 + ov.imag ** 2, 0.0, 1.0)
