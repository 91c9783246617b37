import itertools

import numpy as np
import pytest

from vqclust.anchors import (
    amplitudes_to_bloch,
    bloch_to_amplitudes,
    gram_matrix,
    make_anchor_set,
    max_offdiag,
    min_pairwise_angle,
    multi_qubit_anchor_set,
    single_qubit_anchor_set,
)
from vqclust.exceptions import ConfigurationError


def offdiag(g):
    return g[~np.eye(len(g), dtype=bool)]


def anneal_min_angle(k, seed=0, sweeps=4000):
    """Independent oracle: simulated annealing on the smallest pairwise angle."""
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(k, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    best = cur = min_pairwise_angle(pts)
    temp, step = 0.05, 0.3
    for s in range(sweeps):
        i = rng.integers(k)
        trial = pts.copy()
        trial[i] += step * rng.normal(size=3)
        trial[i] /= np.linalg.norm(trial[i])
        val = min_pairwise_angle(trial)
        if val > cur or rng.random() < np.exp((val - cur) / temp):
            pts, cur = trial, val
            best = max(best, cur)
        temp *= 0.999
        step = max(0.01, step * 0.999)
    return best


@pytest.mark.parametrize("k,expected", [(2, [0.0]), (3, [0.25]), (4, [1 / 3]), (6, [0.0, 0.5])])
def test_closed_form_gram_values(k, expected):
    g = single_qubit_anchor_set(k).gram
    vals = offdiag(g)
    assert np.allclose(np.diag(g), 1.0)
    # every off-diagonal entry equals one of the expected values
    assert np.all(np.min(np.abs(vals[:, None] - np.array(expected)[None]), axis=1) < 1e-9)


def test_trine_lies_on_a_great_circle_with_120_degree_spacing():
    a = single_qubit_anchor_set(3)
    assert min_pairwise_angle(a.bloch) == pytest.approx(2 * np.pi / 3, abs=1e-12)
    assert np.allclose(a.bloch[:, 1], 0.0)


@pytest.mark.parametrize("k", [2, 3, 4, 5, 6, 7, 8, 12])
def test_orientation_convention(k):
    v = single_qubit_anchor_set(k).bloch
    assert np.allclose(v[0], [0, 0, 1], atol=1e-12)
    assert abs(v[1, 1]) < 1e-12 and v[1, 0] >= 0


def test_bloch_round_trip():
    rng = np.random.default_rng(0)
    v = rng.normal(size=(20, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    assert np.allclose(amplitudes_to_bloch(bloch_to_amplitudes(v)), v, atol=1e-12)


def test_fidelity_equals_bloch_formula():
    # single-qubit fidelity = (1 + u.v) / 2
    a = single_qubit_anchor_set(7)
    dots = a.bloch @ a.bloch.T
    assert np.allclose(a.gram, (1 + dots) / 2, atol=1e-12)


def test_tammes_k5_beats_annealing_oracle():
    ours = min_pairwise_angle(single_qubit_anchor_set(5).bloch)
    oracle = anneal_min_angle(5)
    assert ours >= oracle - 1e-6
    assert ours == pytest.approx(np.pi / 2, abs=1e-6)


def test_tammes_k7_matches_known_optimum():
    # best known 7-point Tammes angle is about 77.87 degrees
    assert np.degrees(min_pairwise_angle(single_qubit_anchor_set(7).bloch)) == pytest.approx(77.87, abs=0.01)


def test_single_qubit_seed_determinism():
    assert np.array_equal(single_qubit_anchor_set(9, seed=3).states, single_qubit_anchor_set(9, seed=3).states)


@pytest.mark.parametrize("k", [1, 21, 0])
def test_single_qubit_k_range(k):
    with pytest.raises(ConfigurationError):
        single_qubit_anchor_set(k)


def test_basis_mode_is_orthonormal():
    a = make_anchor_set(2, 4)
    assert a.is_orthonormal_basis
    assert np.allclose(a.gram, np.eye(4))


def test_optimized_four_states_in_two_qubits_become_orthogonal():
    a = multi_qubit_anchor_set(2, 4, mode="optimized")
    assert max_offdiag(a.gram) < 1e-9
    assert np.allclose(np.linalg.norm(a.states, axis=1), 1.0)


def test_optimized_beats_random_search_baseline():
    rng = np.random.default_rng(5)
    k, n = 6, 2
    baseline = np.inf
    for _ in range(2000):
        z = rng.normal(size=(k, 4)) + 1j * rng.normal(size=(k, 4))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        baseline = min(baseline, max_offdiag(gram_matrix(z)))
    ours = max_offdiag(multi_qubit_anchor_set(n, k).gram)
    assert ours < baseline
    # Welch bound for k unit vectors in C^d: max |<a|b>|^2 >= (k - d) / (d (k - 1))
    assert ours >= (k - 4) / (4 * (k - 1)) - 1e-9


def test_make_anchor_set_rejects_mode_for_one_qubit():
    with pytest.raises(ConfigurationError):
        make_anchor_set(1, 3, mode="basis")
    with pytest.raises(ConfigurationError):
        multi_qubit_anchor_set(2, 17)


def test_gram_is_symmetric_with_unit_diagonal():
    for n, k in itertools.product([2, 3], [3, 5]):
        g = make_anchor_set(n, k, mode="optimized").gram
        assert np.array_equal(g, g.T)
        assert np.all(np.diag(g) == 1.0)
