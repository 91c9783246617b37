import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vqclust.exceptions import ConfigurationError, UsageError
from vqclust.qsim import (
    Gate,
    StateVector,
    apply_circuit,
    apply_gate,
    apply_single_qubit,
    fidelity,
    fidelity_matrix,
    init_zero,
    rot3_matrix,
    ry_matrix,
    rz_matrix,
)

angles = st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0 + 0j, -1.0])
I2 = np.eye(2, dtype=complex)


def expm_pauli(P, theta):
    # exp(-i theta P / 2) for a Pauli P, via the spectral identity
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * P


def dense_operator(gate, n):
    """Full 2**n unitary by Kronecker products (qubit 0 leftmost factor)."""
    if gate.is_single_qubit:
        ops = [I2] * n
        ops[gate.qubits[0]] = gate.matrix()
        out = ops[0]
        for op in ops[1:]:
            out = np.kron(out, op)
        return out
    # controlled-X from projector decomposition
    dim = 2 ** n
    out = np.zeros((dim, dim), dtype=complex)
    for idx in range(dim):
        bits = [(idx >> (n - 1 - q)) & 1 for q in range(n)]
        if all(bits[c] for c in gate.qubits[:-1]):
            bits[gate.qubits[-1]] ^= 1
        j = sum(b << (n - 1 - q) for q, b in enumerate(bits))
        out[j, idx] = 1
    return out


def random_state(n, rng):
    z = rng.normal(size=2 ** n) + 1j * rng.normal(size=2 ** n)
    return StateVector.from_amplitudes(z)


def test_init_zero_is_first_basis_state():
    assert np.array_equal(init_zero(3).amps, np.eye(8)[0])


@pytest.mark.parametrize("bad", [0, 13, -1, 1.5, True])
def test_qubit_count_is_validated(bad):
    with pytest.raises(ConfigurationError):
        init_zero(bad)


def test_ry_pi_flips_zero_to_one():
    out = apply_gate(init_zero(1), Gate.ry(0, np.pi))
    assert np.allclose(out.amps, [0, 1], atol=1e-15)


def test_cnot_truth_table_msb_convention():
    # |10> -> |11>, |01> unchanged
    for src, dst in [(0, 0), (1, 1), (2, 3), (3, 2)]:
        s = StateVector(2, np.eye(4)[src])
        assert np.array_equal(apply_gate(s, Gate.cnot(0, 1)).amps, np.eye(4)[dst])


def test_toffoli_flips_only_when_both_controls_set():
    for idx in range(8):
        s = StateVector(3, np.eye(8)[idx])
        expected = idx ^ 1 if idx >= 6 else idx
        assert np.array_equal(apply_gate(s, Gate.toffoli(0, 1, 2)).amps, np.eye(8)[expected])


@given(angles)
def test_rotation_matrices_match_pauli_exponentials(theta):
    assert np.allclose(ry_matrix(theta), expm_pauli(Y, theta), atol=1e-12)
    assert np.allclose(rz_matrix(theta), expm_pauli(Z, theta), atol=1e-12)


@given(angles, angles, angles)
def test_rot3_is_unitary_and_composed_in_order(t, p, l):
    m = rot3_matrix(t, p, l)
    assert np.allclose(m @ m.conj().T, I2, atol=1e-12)
    assert np.allclose(m, expm_pauli(Z, p) @ expm_pauli(Y, t) @ expm_pauli(Z, l), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2 ** 31 - 1))
def test_circuits_agree_with_dense_kronecker_oracle(n, seed):
    rng = np.random.default_rng(seed)
    gates = []
    for _ in range(6):
        q = int(rng.integers(n))
        gates.append(Gate.rot3(q, *rng.uniform(-np.pi, np.pi, 3)))
        if n >= 2:
            c, t = rng.choice(n, 2, replace=False)
            gates.append(Gate.cnot(int(c), int(t)))
        if n >= 3:
            a, b, t = rng.choice(n, 3, replace=False)
            gates.append(Gate.toffoli(int(a), int(b), int(t)))
    psi = random_state(n, rng)
    expected = psi.amps
    for g in gates:
        expected = dense_operator(g, n) @ expected
    out = apply_circuit(psi, gates)
    assert np.allclose(out.amps, expected, atol=1e-12)
    assert abs(out.norm - 1) < 1e-12


def test_batched_rows_match_individual_application():
    rng = np.random.default_rng(1)
    amps = np.stack([random_state(3, rng).amps for _ in range(5)])
    mats = rot3_matrix(*rng.uniform(-3, 3, (3, 5)))
    batched = apply_single_qubit(amps, mats, 1, 3)
    for i in range(5):
        assert np.allclose(batched[i], apply_single_qubit(amps[i], mats[i], 1, 3))


def test_gate_inverse_undoes_gate():
    rng = np.random.default_rng(2)
    psi = random_state(3, rng)
    for g in [Gate.rot3(2, 0.3, -1.2, 2.5), Gate.ry(0, 0.7), Gate.rz(1, -2.0), Gate.cnot(2, 0), Gate.toffoli(1, 2, 0)]:
        back = apply_gate(apply_gate(psi, g), g.inverse())
        assert np.allclose(back.amps, psi.amps, atol=1e-12)


def test_fidelity_identical_orthogonal_symmetric():
    rng = np.random.default_rng(3)
    a, b = random_state(2, rng), random_state(2, rng)
    assert fidelity(a, a) == pytest.approx(1.0, abs=1e-12)
    assert fidelity(init_zero(2), StateVector(2, np.eye(4)[3])) == 0.0
    assert fidelity(a, b) == fidelity(b, a)
    assert 0.0 <= fidelity(a, b) <= 1.0


def test_fidelity_dimension_mismatch():
    with pytest.raises(UsageError):
        fidelity(init_zero(1), init_zero(2))


def test_gate_validation():
    with pytest.raises(ConfigurationError):
        Gate.cnot(1, 1)
    with pytest.raises(ConfigurationError):
        Gate("swap", (0, 1))
    with pytest.raises(ConfigurationError):
        Gate.ry(0, np.nan)
    with pytest.raises(ConfigurationError):
        apply_gate(init_zero(2), Gate.cnot(0, 2))


def test_fidelity_matrix_is_clamped():
    s = np.array([[1.0, 0.0]]) * (1 + 1e-12)
    assert fidelity_matrix(s, s).max() <= 1.0


def test_statevector_is_immutable():
    s = init_zero(1)
    with pytest.raises(ValueError):
        s.amps[0] = 0
