"""Open-boundary matrix product states for circuit simulation.

Tensors are ``(..., left_bond, 2, right_bond)``; the optional leading axes
hold a batch of independent states (one per datapoint) that share bond
dimensions, so a whole dataset runs through a circuit with one SVD call per
gate.  Two-site gates are applied in mixed-canonical form with the
orthogonality centre on the gate's left site, which makes the SVD
truncation there the optimal rank-``chi_max`` approximation and the
discarded weight exactly the norm lost.  That weight is accumulated in
``truncation_error`` (one entry per batch member) and the state is
renormalized after every truncation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError, UsageError
from .qsim import CNOT, MAX_QUBITS, TOFFOLI, Gate

SV_FLOOR = 1e-12

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_T = np.diag([1, np.exp(0.25j * np.pi)])
_TDG = _T.conj()
_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


@dataclass(frozen=True)
class MPSState:
    """A (batch of) matrix product state(s).

    ``truncation_error`` has the batch shape (a float for a single state).
    ``center`` is the orthogonality centre, or ``None`` when unknown.
    """

    n_qubits: int
    tensors: tuple = field(repr=False)
    chi_max: int
    truncation_error: float | np.ndarray = 0.0
    center: int | None = 0

    @property
    def batch_shape(self):
        return self.tensors[0].shape[:-3]

    @property
    def bond_dims(self):
        return [t.shape[-1] for t in self.tensors[:-1]]


def _check_chi(chi_max):
    if isinstance(chi_max, bool) or not isinstance(chi_max, (int, np.integer)) or chi_max < 1:
        raise ConfigurationError(f"chi_max must be a positive integer, got {chi_max!r}")
    return int(chi_max)


def exact_chi(n_qubits):
    """Bond dimension that represents every ``n_qubits`` state without truncation."""
    return 2 ** (int(n_qubits) // 2)


def mps_from_zero(n_qubits, chi_max, batch=None):
    """Product state ``|0...0>`` with all bonds of dimension one."""
    if isinstance(n_qubits, bool) or not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(f"n_qubits must be an integer in [1, {MAX_QUBITS}], got {n_qubits!r}")
    lead = () if batch is None else (int(batch),)
    site = np.zeros(lead + (1, 2, 1), dtype=complex)
    site[..., 0, 0, 0] = 1.0
    err = 0.0 if batch is None else np.zeros(lead)
    return MPSState(int(n_qubits), tuple(site.copy() for _ in range(n_qubits)), _check_chi(chi_max), err, 0)


def mps_from_dense(amps, chi_max=None):
    """MPS of a dense state by successive SVDs (exact when ``chi_max`` is large enough)."""
    amps = np.asarray(amps, dtype=complex).reshape(-1)
    n = int(round(np.log2(amps.shape[0]))) if amps.shape[0] > 0 else 0
    if n < 1 or 2 ** n != amps.shape[0]:
        raise UsageError("amplitude count must be a power of two (at least 2)")
    chi = exact_chi(n) if chi_max is None else _check_chi(chi_max)
    tensors = []
    rest = amps.reshape(1, -1)
    discarded = 0.0
    for _ in range(n - 1):
        left = rest.shape[0]
        u, s, vh = np.linalg.svd(rest.reshape(left * 2, -1), full_matrices=False)
        keep = max(1, min(chi, int(np.sum(s > SV_FLOOR * s[0]))))
        discarded += float(np.sum(s[keep:] ** 2))
        tensors.append(u[:, :keep].reshape(left, 2, keep))
        rest = s[:keep, None] * vh[:keep]
    rest = rest.reshape(rest.shape[0], 2, 1)
    tensors.append(rest / np.linalg.norm(rest))
    return MPSState(n, tuple(tensors), chi, discarded, n - 1)


def mps_to_dense(state):
    """Contract to amplitudes, shape ``batch + (2**n,)``."""
    out = state.tensors[0]
    for t in state.tensors[1:]:
        out = np.einsum("...adi,...ibc->...adbc", out, t)
        out = out.reshape(out.shape[:-4] + (1, -1, out.shape[-1]))
    return out.reshape(state.batch_shape + (-1,))


def _move_center(tensors, center, target):
    """QR sweeps so that ``target`` becomes the orthogonality centre."""
    tensors = list(tensors)
    if center is None:
        center = 0
        # canonicalise from the far end first
        tensors, center = _move_center(tensors, len(tensors) - 1, 0)
    while center < target:
        t = tensors[center]
        lead, (l, d, r) = t.shape[:-3], t.shape[-3:]
        q, rr = np.linalg.qr(t.reshape(lead + (l * d, r)))
        tensors[center] = q.reshape(lead + (l, d, q.shape[-1]))
        tensors[center + 1] = np.einsum("...ij,...jdr->...idr", rr, tensors[center + 1])
        center += 1
    while center > target:
        t = tensors[center]
        lead, (l, d, r) = t.shape[:-3], t.shape[-3:]
        q, rr = np.linalg.qr(np.swapaxes(t.reshape(lead + (l, d * r)), -1, -2))
        tensors[center] = np.swapaxes(q, -1, -2).reshape(lead + (q.shape[-1], d, r))
        tensors[center - 1] = np.einsum("...adl,...kl->...adk", tensors[center - 1], rr)
        center -= 1
    return tensors, center


def _apply_one(state, matrix, site):
    """``matrix`` is ``(2, 2)`` or batched ``batch + (2, 2)``; no truncation needed."""
    tensors = list(state.tensors)
    tensors[site] = np.einsum("...ij,...ljr->...lir", matrix, tensors[site])
    return MPSState(state.n_qubits, tuple(tensors), state.chi_max, state.truncation_error, state.center)


def _apply_two(state, matrix, site):
    """Apply a 4x4 ``matrix`` on sites ``(site, site + 1)`` and truncate to ``chi_max``."""
    tensors, _ = _move_center(state.tensors, state.center, site)
    a, b = tensors[site], tensors[site + 1]
    lead = a.shape[:-3]
    l, r = a.shape[-3], b.shape[-1]
    theta = np.einsum("...lia,...ajr->...lijr", a, b)
    theta = np.einsum("ijkm,...lkmr->...lijr", matrix.reshape(2, 2, 2, 2), theta)
    u, s, vh = np.linalg.svd(theta.reshape(lead + (l * 2, 2 * r)), full_matrices=False)
    total = np.sum(s ** 2, axis=-1)
    top = s[..., :1]
    significant = np.sum(s > SV_FLOOR * np.where(top > 0, top, 1.0), axis=-1)
    keep = max(1, min(int(np.max(significant, initial=1)), state.chi_max))
    kept = np.sum(s[..., :keep] ** 2, axis=-1)
    s_keep = s[..., :keep] / np.sqrt(kept)[..., None]
    tensors[site] = u[..., :, :keep].reshape(lead + (l, 2, keep))
    tensors[site + 1] = (s_keep[..., :, None] * vh[..., :keep, :]).reshape(lead + (keep, 2, r))
    lost = np.maximum(0.0, (total - kept) / total)
    error = state.truncation_error + (float(lost) if np.ndim(lost) == 0 else lost)
    return MPSState(state.n_qubits, tuple(tensors), state.chi_max, error, site + 1)


def _apply_two_qubit(state, matrix, q0, q1):
    """``matrix`` acts on ``(q0, q1)`` with ``q0`` the more significant index; swaps route it adjacent."""
    if q0 > q1:
        matrix = _SWAP @ matrix @ _SWAP
        q0, q1 = q1, q0
    # walk q1 down next to q0, apply, walk it back
    for s in range(q1 - 1, q0, -1):
        state = _apply_two(state, _SWAP, s)
    state = _apply_two(state, matrix, q0)
    for s in range(q0 + 1, q1):
        state = _apply_two(state, _SWAP, s)
    return state


def _toffoli(state, c1, c2, t):
    """Standard six-CNOT decomposition of the Toffoli gate."""
    ops = [
        (_H, t), ((c2, t),), (_TDG, t), ((c1, t),), (_T, t), ((c2, t),),
        (_TDG, t), ((c1, t),), (_T, c2), (_T, t), (_H, t), ((c1, c2),),
        (_T, c1), (_TDG, c2), ((c1, c2),),
    ]
    for op in ops:
        if len(op) == 2:
            state = _apply_one(state, op[0], op[1])
        else:
            state = _apply_two_qubit(state, _CNOT, *op[0])
    return state


def mps_apply_gate(state, gate):
    """Apply ``gate`` to every state in the batch; returns a new :class:`MPSState`."""
    if max(gate.qubits) >= state.n_qubits:
        raise ConfigurationError(f"gate {gate.kind} on qubits {gate.qubits} does not fit {state.n_qubits} qubit(s)")
    if gate.is_single_qubit:
        return _apply_one(state, gate.matrix(), gate.qubits[0])
    if gate.kind == CNOT:
        return _apply_two_qubit(state, _CNOT, *gate.qubits)
    if gate.kind == TOFFOLI:
        return _toffoli(state, *gate.qubits)
    raise ConfigurationError(f"unsupported gate {gate.kind!r}")


def mps_apply_matrix(state, matrix, site):
    """Apply a 2x2 matrix (or a per-member batch of them) on one site."""
    if not 0 <= site < state.n_qubits:
        raise ConfigurationError(f"site {site} outside a {state.n_qubits}-site state")
    return _apply_one(state, np.asarray(matrix, dtype=complex), site)


def mps_apply_controlled_x(state, controls, target):
    """CNOT (one control) or Toffoli (two controls) on the batch."""
    if len(controls) == 1:
        return _apply_two_qubit(state, _CNOT, controls[0], target)
    if len(controls) == 2:
        return _toffoli(state, controls[0], controls[1], target)
    raise ConfigurationError("only one or two controls are supported")


def mps_apply_circuit(state, gates):
    for gate in gates:
        state = mps_apply_gate(state, gate)
    return state


def mps_overlap(a, b):
    """``<a|b>`` by left-to-right transfer-matrix contraction (broadcasts over batches)."""
    if a.n_qubits != b.n_qubits:
        raise UsageError(f"overlap between {a.n_qubits}- and {b.n_qubits}-site states")
    env = np.ones((1, 1), dtype=complex)
    for ta, tb in zip(a.tensors, b.tensors):
        env = np.einsum("...ab,...asc,...bsd->...cd", env, ta.conj(), tb)
    out = env[..., 0, 0]
    return complex(out) if out.ndim == 0 else out


def mps_fidelity(a, b):
    """``|<a|b>|**2`` clamped to ``[0, 1]``; cost linear in the number of sites."""
    ov = np.asarray(mps_overlap(a, b))
    f = np.clip(ov.real ** 2 + ov.imag ** 2, 0.0, 1.0)
    return float(f) if f.ndim == 0 else f


def mps_norm(state):
    n = np.sqrt(np.abs(np.asarray(mps_overlap(state, state))))
    return float(n) if n.ndim == 0 else n


def bell_circuit():
    """``Ry(pi/2)`` on qubit 0 then CNOT; prepares ``(|00> + |11>)/sqrt(2)``."""
    return [Gate.ry(0, np.pi / 2), Gate.cnot(0, 1)]
