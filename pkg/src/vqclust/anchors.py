"""Cluster anchor states.

Single-qubit anchors are points on the Bloch sphere spread as far apart as
possible: closed-form polyhedra where they exist and a numerical max-min
angle (Tammes) solution otherwise.  Multi-qubit anchors are either the
first ``k`` computational basis states or a seeded numerical spread of
``k`` unit vectors in ``C^(2**n)``.

Every constellation is put in a fixed orientation: first anchor at ``+z``
(state ``|0>``), second anchor in the x-z half-plane with ``x >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .exceptions import ConfigurationError, UsageError
from .qsim import MAX_QUBITS, StateVector, fidelity_matrix

MAX_SINGLE_QUBIT_K = 20
CLOSED_FORM_K = (2, 3, 4, 6, 8, 12, 20)

BASIS = "basis"
OPTIMIZED = "optimized"
BLOCH = "bloch"

_GOLDEN = (1 + np.sqrt(5)) / 2


@dataclass(frozen=True)
class AnchorSet:
    """``k`` reference states, one per cluster, with their pairwise fidelities."""

    n_qubits: int
    states: np.ndarray = field(repr=False)
    gram: np.ndarray = field(repr=False)
    mode: str = BLOCH
    bloch: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        for name in ("states", "gram", "bloch"):
            value = getattr(self, name)
            if value is not None:
                value = np.array(value)
                value.setflags(write=False)
                object.__setattr__(self, name, value)

    @property
    def k(self):
        return self.states.shape[0]

    @property
    def dim(self):
        return self.states.shape[1]

    def state(self, a):
        return StateVector(self.n_qubits, self.states[a])

    def state_vectors(self):
        return [self.state(a) for a in range(self.k)]

    @property
    def is_orthonormal_basis(self):
        """True when the anchors are orthonormal and span the whole space."""
        return self.k == self.dim and np.allclose(self.gram, np.eye(self.k), atol=1e-10)


def gram_matrix(states):
    """Pairwise fidelity matrix of a list of states (or a ``(k, d)`` array)."""
    if isinstance(states, np.ndarray):
        amps = np.atleast_2d(states)
    else:
        states = list(states)
        if not states:
            raise UsageError("gram_matrix needs at least one state")
        dims = {len(s.amps) for s in states}
        if len(dims) != 1:
            raise UsageError(f"states have mismatched dimensions {sorted(dims)}")
        amps = np.stack([s.amps for s in states])
    if amps.shape[0] == 0:
        raise UsageError("gram_matrix needs at least one state")
    g = fidelity_matrix(amps, amps)
    # symmetrise against round-off and pin the diagonal
    g = 0.5 * (g + g.T)
    np.fill_diagonal(g, 1.0)
    return g


def bloch_to_amplitudes(vectors):
    """``cos(T/2)|0> + exp(iP) sin(T/2)|1>`` for each Bloch vector row."""
    v = np.atleast_2d(np.asarray(vectors, dtype=float))
    v = v / np.linalg.norm(v, axis=1, keepdims=True)
    polar = np.arccos(np.clip(v[:, 2], -1.0, 1.0))
    azimuth = np.arctan2(v[:, 1], v[:, 0])
    return np.stack([np.cos(polar / 2), np.exp(1j * azimuth) * np.sin(polar / 2)], axis=1)


def amplitudes_to_bloch(amps):
    amps = np.atleast_2d(amps)
    a, b = amps[:, 0], amps[:, 1]
    x = 2 * np.real(np.conj(a) * b)
    y = 2 * np.imag(np.conj(a) * b)
    z = np.abs(a) ** 2 - np.abs(b) ** 2
    return np.stack([x, y, z], axis=1)


def orient(vectors):
    """Rigidly rotate so vector 0 is ``+z`` and vector 1 lies in the x-z plane, ``x >= 0``."""
    v = np.asarray(vectors, dtype=float)
    v = v / np.linalg.norm(v, axis=1, keepdims=True)
    e3 = v[0]
    rest = v[1] - np.dot(v[1], e3) * e3
    if np.linalg.norm(rest) < 1e-12:
        # antipodal second vector: any frame with e3 fixed will do
        trial = np.array([1.0, 0.0, 0.0]) if abs(e3[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        rest = trial - np.dot(trial, e3) * e3
    e1 = rest / np.linalg.norm(rest)
    e2 = np.cross(e3, e1)
    out = v @ np.stack([e1, e2, e3]).T
    out[np.abs(out) < 1e-15] = 0.0
    return out


def _cyclic(triples):
    out = []
    for x, y, z in triples:
        out.extend([(x, y, z), (z, x, y), (y, z, x)])
    return out


def _signs(point):
    x, y, z = point
    sx = (1, -1) if x else (1,)
    sy = (1, -1) if y else (1,)
    sz = (1, -1) if z else (1,)
    return [(a * x, b * y, c * z) for a in sx for b in sy for c in sz]


def _polyhedron(k):
    if k == 2:
        return np.array([[0, 0, 1], [0, 0, -1]], dtype=float)
    if k == 3:
        s = np.sqrt(3) / 2
        return np.array([[0, 0, 1], [s, 0, -0.5], [-s, 0, -0.5]])
    if k == 4:
        return np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    if k == 6:
        return np.array([[0, 0, 1], [1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0], [0, 0, -1]], dtype=float)
    if k == 8:
        return np.array(_signs((1, 1, 1)), dtype=float)
    if k == 12:
        pts = []
        for p in _cyclic([(0, 1, _GOLDEN)]):
            pts.extend(_signs(p))
        return np.array(pts)
    if k == 20:
        pts = list(_signs((1, 1, 1)))
        for p in _cyclic([(0, 1 / _GOLDEN, _GOLDEN)]):
            pts.extend(_signs(p))
        return np.array(pts, dtype=float)
    raise ConfigurationError(f"no closed-form constellation for k={k}")


def _unit(x):
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def min_pairwise_angle(vectors):
    """Smallest angle (radians) between any two rows."""
    v = _unit(np.asarray(vectors, dtype=float))
    c = v @ v.T
    np.fill_diagonal(c, -1.0)
    return float(np.arccos(np.clip(c.max(), -1.0, 1.0)))


def _spherical(angles):
    polar, azimuth = angles[0::2], angles[1::2]
    return np.stack([np.sin(polar) * np.cos(azimuth), np.sin(polar) * np.sin(azimuth), np.cos(polar)], axis=1)


def _repel(points, exponent, iterations=400, step=0.05):
    for _ in range(iterations):
        diff = points[:, None, :] - points[None, :, :]
        dist = np.linalg.norm(diff, axis=-1)
        np.fill_diagonal(dist, np.inf)
        force = (diff / dist[..., None] ** (exponent + 2)).sum(axis=1)
        force -= np.sum(force * points, axis=1, keepdims=True) * points
        scale = np.max(np.linalg.norm(force, axis=1))
        if scale == 0:
            break
        points = _unit(points + step * force / scale)
    return points


def _polish_tammes(points):
    """Maximise the smallest pairwise chord with SLSQP, starting from ``points``."""
    k = len(points)
    iu = np.triu_indices(k, 1)
    polar = np.arccos(np.clip(points[:, 2], -1, 1))
    azimuth = np.arctan2(points[:, 1], points[:, 0])
    x0 = np.empty(2 * k + 1)
    x0[0:2 * k:2] = polar
    x0[1:2 * k:2] = azimuth
    p = _spherical(x0[:-1])
    x0[-1] = np.min(np.sum((p[:, None] - p[None]) ** 2, axis=-1)[iu])

    def cons(x):
        q = _spherical(x[:-1])
        d2 = np.sum((q[:, None] - q[None]) ** 2, axis=-1)[iu]
        return d2 - x[-1]

    res = minimize(lambda x: -x[-1], x0, method="SLSQP", constraints=[{"type": "ineq", "fun": cons}],
                   options={"maxiter": 500, "ftol": 1e-14})
    q = _spherical(res.x[:-1])
    return q if min_pairwise_angle(q) >= min_pairwise_angle(points) else points


def tammes_points(k, seed=0, restarts=8):
    """Numerical max-min-angle arrangement of ``k`` points on the unit sphere."""
    rng = np.random.default_rng(seed)
    best, best_angle = None, -1.0
    for _ in range(restarts):
        pts = _unit(rng.normal(size=(k, 3)))
        for exponent in (1, 4, 12):
            pts = _repel(pts, exponent)
        pts = _polish_tammes(pts)
        angle = min_pairwise_angle(pts)
        if angle > best_angle + 1e-12:
            best, best_angle = pts, angle
    return best


def _from_bloch(vectors, mode=BLOCH):
    vectors = orient(vectors)
    states = bloch_to_amplitudes(vectors)
    return AnchorSet(1, states, gram_matrix(states), mode, vectors)


def single_qubit_anchor_set(k, seed=0):
    """Maximally spread single-qubit anchors.

    Closed form for ``k`` in ``(2, 3, 4, 6, 8, 12, 20)`` (antipodes, equatorial
    trine, then the platonic solids); otherwise a numerical Tammes solution
    that is deterministic in ``seed``.
    """
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or not 2 <= k <= MAX_SINGLE_QUBIT_K:
        raise ConfigurationError(f"single-qubit anchor sets need 2 <= k <= {MAX_SINGLE_QUBIT_K}, got {k!r}")
    k = int(k)
    vectors = _polyhedron(k) if k in CLOSED_FORM_K else tammes_points(k, seed=seed)
    return _from_bloch(vectors)


def basis_anchor_set(n_qubits, k):
    """First ``k`` computational basis states (orthonormal)."""
    dim = 2 ** n_qubits
    if not 2 <= k <= dim:
        raise ConfigurationError(f"basis anchors need 2 <= k <= {dim}, got {k}")
    states = np.eye(dim, dtype=complex)[:k]
    return AnchorSet(n_qubits, states, gram_matrix(states), BASIS)


def max_offdiag(gram):
    g = np.array(gram, dtype=float)
    np.fill_diagonal(g, -np.inf)
    return float(g.max())


def random_states(k, dim, rng):
    z = rng.normal(size=(k, dim)) + 1j * rng.normal(size=(k, dim))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def spread_states(k, dim, seed=0, steps=300, powers=(2, 4, 8, 16, 32, 64)):
    """Seeded projected gradient descent pushing ``k`` unit vectors in ``C^dim`` apart.

    Minimises the frame potential ``sum_{a<b} F_ab**p`` for increasing ``p``,
    which approaches minimising the largest pairwise fidelity.  Returns the
    iterate with the smallest maximum off-diagonal fidelity seen.
    """
    rng = np.random.default_rng(seed)
    u = random_states(k, dim, rng)
    best, best_val = u, max_offdiag(fidelity_matrix(u, u))
    for p in powers:
        lr = 0.1
        for _ in range(steps):
            ov = np.conj(u) @ u.T           # ov[a, b] = <u_a|u_b>
            f = np.abs(ov) ** 2
            np.fill_diagonal(f, 0.0)
            w = p * f ** (p - 1)
            grad = (w * np.conj(ov)) @ u    # d/d conj(u_a) of sum_{a<b} f_ab^p
            grad -= np.sum(np.conj(u) * grad, axis=1, keepdims=True) * u
            norm = np.max(np.linalg.norm(grad, axis=1))
            if norm < 1e-15:
                break
            u = u - lr * grad / norm
            u = u / np.linalg.norm(u, axis=1, keepdims=True)
            val = max_offdiag(fidelity_matrix(u, u))
            if val < best_val:
                best, best_val = u, val
            lr *= 0.99
        u = best
    return best


def multi_qubit_anchor_set(n_qubits, k, seed=0, mode=OPTIMIZED):
    """Anchors for ``n_qubits >= 2``: ``mode='basis'`` or seeded ``'optimized'`` spread."""
    if isinstance(n_qubits, bool) or not isinstance(n_qubits, (int, np.integer)) or not 2 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(f"multi-qubit anchors need 2 <= n_qubits <= {MAX_QUBITS}, got {n_qubits!r}")
    dim = 2 ** n_qubits
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)) or not 2 <= k <= 4 * dim:
        raise ConfigurationError(f"k must be in [2, {4 * dim}] for {n_qubits} qubits, got {k!r}")
    if mode == BASIS:
        return basis_anchor_set(n_qubits, int(k))
    if mode != OPTIMIZED:
        raise ConfigurationError(f"unknown anchor mode {mode!r}")
    states = spread_states(int(k), dim, seed=seed)
    return AnchorSet(n_qubits, states, gram_matrix(states), OPTIMIZED)


def make_anchor_set(n_qubits, k, mode=None, seed=0):
    """Dispatch on qubit count; ``mode`` only matters for two or more qubits."""
    if n_qubits == 1:
        if mode not in (None, BLOCH):
            raise ConfigurationError(f"anchor mode {mode!r} is only available for two or more qubits")
        return single_qubit_anchor_set(k, seed=seed)
    return multi_qubit_anchor_set(n_qubits, k, seed=seed, mode=mode or BASIS)
