"""Acceptance criteria, one printed PASS/FAIL line each.

Each check compares against an independent reference: explicit loops,
closed-form values, the dense statevector simulator (itself checked against
Kronecker products in ``test_qsim``) or repeated runs.
"""

import json
import time

import numpy as np
import pytest

from vqclust.anchors import make_anchor_set
from vqclust.ansatz import CNOT_CHAIN, CNOT_CHAIN_TOFFOLI, CircuitSpec, EncodingSpec
from vqclust.backend import make_backend
from vqclust.cli import main
from vqclust.cost import CostConfig, total_cost
from vqclust.data import BlobSpec, generate_blobs, load_iris, rescale
from vqclust.evaluation import ClusterResult, dumps, matched_accuracy
from vqclust.trainer import ClusteringObjective, OptimizerConfig, gradient, train

VARIANTS = ("original", "inverse_distance", "centroid_regularized", "complementary")


@pytest.fixture
def report(capsys):
    def emit(number, name, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'}  {name}: {detail}")
        assert ok, detail

    return emit


def seed_accuracies(ds, n_qubits, k, seeds=range(10), **opt):
    backend = make_backend("statevector", CircuitSpec(n_qubits), EncodingSpec.default(ds.n_features, n_qubits),
                           make_anchor_set(n_qubits, k))
    out = []
    for s in seeds:
        r = train(ds.points, backend, CostConfig("complementary"), OptimizerConfig(seed=s, epochs=20, **opt))
        assert r.epochs_run <= 20
        out.append(matched_accuracy(r.assignments, ds.labels)[0])
    return np.array(out)


def nearest_center_is_label(spec, ds):
    centers = spec.center_array()
    raw = generate_blobs(spec).points
    d = ((raw[:, None, :] - centers[None]) ** 2).sum(-1)
    return np.array_equal(np.argmin(d, axis=1), ds.labels)


def test_1_iris_single_qubit_trine(report):
    ds = rescale(load_iris())
    assert ds.feature_names == ("sepal_width", "petal_width")
    assert np.allclose([ds.points.min(), ds.points.max()], [-1.9 * np.pi / 2, 1.9 * np.pi / 2])
    t0 = time.perf_counter()
    acc = seed_accuracies(ds, 1, 3)
    elapsed = time.perf_counter() - t0
    report(1, "iris best-of-10 >= 0.90 in < 60 s", acc.max() >= 0.90 and elapsed < 60,
           f"best={acc.max():.4f} median={np.median(acc):.4f} time={elapsed:.1f}s")


def test_2_three_blobs_single_qubit(report):
    spec = BlobSpec(n_clusters=3, points_per_cluster=150)
    assert spec.separation >= 8
    ds = rescale(generate_blobs(spec))
    assert nearest_center_is_label(spec, ds), "precondition: layout must be separable"
    acc = seed_accuracies(ds, 1, 3)
    perfect = int(np.sum(acc == 1.0))
    report(2, "blobs best-of-10 = 1.00 and >= 8/10 perfect", acc.max() == 1.0 and perfect >= 8,
           f"best={acc.max():.4f} perfect={perfect}/10")


def test_3_multi_qubit_blobs(report):
    details, ok = [], True
    for n, k in ((2, 2), (3, 3)):
        spec = BlobSpec(n_clusters=k, points_per_cluster=150)
        ds = rescale(generate_blobs(spec))
        assert nearest_center_is_label(spec, ds)
        acc = seed_accuracies(ds, n, k, steps_per_epoch=6)
        ok &= acc.max() == 1.0
        details.append(f"{n}q/{k} blobs best={acc.max():.4f}")
    report(3, "multi-qubit best-of-10 = 1.00", ok, "; ".join(details))


def brute_force_cost(F, X, variant, alpha, lam, mu, assign):
    N, k = F.shape
    dist = lambda a, b: float(np.sqrt(sum((a[t] - b[t]) ** 2 for t in range(len(a)))))
    dc = []
    for i in range(N):
        members = [X[j] for j in range(N) if assign[j] == assign[i]]
        c = [sum(m[t] for m in members) / len(members) for t in range(X.shape[1])]
        dc.append(dist(X[i], c))
    total = 0.0
    for i in range(N):
        for j in range(N):
            if i == j:
                continue
            d = dist(X[i], X[j])
            for a in range(k):
                fi, fj = F[i, a], F[j, a]
                if variant == "original":
                    total += d * fi * fj
                elif variant == "inverse_distance":
                    total += (1 - fi * fj) / d
                elif variant == "centroid_regularized":
                    total += (d ** alpha + lam * dc[i]) * fi * fj
                else:
                    total += (d ** alpha + lam * dc[i]) * (1 - fi) * (1 - fj)
    return 0.5 * total + mu * sum((sum(F[i]) - 1) ** 2 for i in range(N))


def test_4_total_cost_matches_triple_loop(report):
    rng = np.random.default_rng(4)
    worst = 0.0
    for inst in range(50):
        N, k = int(rng.integers(2, 13)), int(rng.integers(2, 5))
        variant = VARIANTS[inst % 4]
        X = rng.normal(size=(N, 2)) * 3
        F = rng.uniform(0, 1, (N, k))
        assign = rng.integers(0, k, N)
        alpha, lam, mu = rng.uniform(0.3, 2.0), rng.uniform(0, 1), rng.uniform(0, 2)
        D = np.sqrt(((X[:, None] - X[None]) ** 2).sum(-1))
        cent = np.array([np.linalg.norm(X[i] - X[assign == assign[i]].mean(0)) for i in range(N)])
        got = total_cost(F, D, CostConfig(variant, alpha, lam, mu), cent_dist=cent, mu=mu)
        want = brute_force_cost(F, X, variant, alpha, lam, mu, assign)
        worst = max(worst, abs(got - want) / abs(want))
    report(4, "total_cost vs triple loop (50 instances, rel 1e-9)", worst <= 1e-9, f"worst rel err={worst:.2e}")


def test_5_parameter_shift_vs_central_difference(report):
    rng = np.random.default_rng(5)
    worst = 0.0
    for draw in range(100):
        n = 1 + draw % 3
        N = int(rng.integers(2, 6))
        k = int(rng.integers(2, 4))
        spec = CircuitSpec(n, 1 + draw % 2, CNOT_CHAIN if n > 1 else None)
        anchors = make_anchor_set(n, k, None if n == 1 else "optimized", seed=draw)
        backend = make_backend("statevector", spec, EncodingSpec.default(2, n), anchors)
        X = rng.uniform(-3, 3, (N, 2))
        obj = ClusteringObjective(X, backend, CostConfig(VARIANTS[draw % 4], rng.uniform(0.5, 2), 0.3), mu=0.7,
                                  cent_dist=rng.uniform(0, 1, N))
        p = rng.uniform(-np.pi, np.pi, (N, spec.n_params) if draw % 2 else (spec.n_params,))
        g_ps = obj.gradient(p)
        g_cd = gradient(p, obj, "central_difference", 1e-5)
        worst = max(worst, np.linalg.norm(g_ps - g_cd) / np.linalg.norm(g_cd))
    report(5, "parameter shift vs central difference (100 draws, rel 1e-5)", worst <= 1e-5, f"worst rel err={worst:.2e}")


def test_6_anchor_gram_values(report):
    expected = {2: {0.0}, 3: {0.25}, 4: {1 / 3}, 6: {0.0, 0.5}}
    ok, details = True, []
    for k, values in expected.items():
        states = make_anchor_set(1, k).states
        off = [abs(np.vdot(states[a], states[b])) ** 2 for a in range(k) for b in range(k) if a != b]
        hit = all(min(abs(v - e) for e in values) <= 1e-9 for v in off)
        covered = all(any(abs(v - e) <= 1e-9 for v in off) for e in values)
        ok &= hit and covered
        details.append(f"k={k}: {sorted({round(float(v), 12) for v in off})}")
    report(6, "single-qubit anchor off-diagonal fidelities", ok, "; ".join(details))


def test_7_mps_matches_statevector(report):
    rng = np.random.default_rng(7)
    worst = 0.0
    for n in range(1, 7):
        ent = None if n == 1 else (CNOT_CHAIN if n % 2 == 0 else CNOT_CHAIN_TOFFOLI)
        spec = CircuitSpec(n, 2, ent)
        enc = EncodingSpec.default(2, n)
        anchors = make_anchor_set(n, 3, None if n == 1 else "optimized")
        sv = make_backend("statevector", spec, enc, anchors)
        mps = make_backend("mps", spec, enc, anchors, 2 ** (n // 2))
        X = rng.uniform(-3, 3, (4, 2))
        p = rng.uniform(-np.pi, np.pi, (4, spec.n_params))
        f_sv, _ = sv.fidelities(sv.encode(X), p)
        f_mps, _ = mps.fidelities(mps.encode(X), p)
        worst = max(worst, float(np.abs(f_sv - f_mps).max()))
    same = []
    for n, per, epochs in ((2, 40, 5), (3, 40, 5), (4, 40, 5), (6, 10, 2)):
        ds = rescale(generate_blobs(BlobSpec(points_per_cluster=per)))
        spec = CircuitSpec(n, 1, CNOT_CHAIN)
        enc = EncodingSpec.default(2, n)
        anchors = make_anchor_set(n, 3)
        runs = [train(ds.points, make_backend(name, spec, enc, anchors, chi), CostConfig(),
                      OptimizerConfig(seed=11, epochs=epochs)).assignments
                for name, chi in (("statevector", None), ("mps", 2 ** (n // 2)))]
        same.append(bool(np.array_equal(*runs)))
    report(7, "MPS (chi = 2^floor(n/2)) vs statevector, n <= 6", worst <= 1e-9 and all(same),
           f"max fidelity diff={worst:.2e}; identical assignments n=2,3,4,6: {same}")


def test_8_antipodal_pair_sums_to_one(report):
    anchors = make_anchor_set(1, 2).states
    rng = np.random.default_rng(8)
    z = rng.normal(size=(1000, 2)) + 1j * rng.normal(size=(1000, 2))
    psi = z / np.linalg.norm(z, axis=1, keepdims=True)
    total = (np.abs(psi @ anchors.conj().T) ** 2).sum(axis=1)
    worst = float(np.abs(total - 1).max())
    report(8, "k=2 single-qubit fidelities sum to 1 (1000 states)", worst <= 1e-10, f"max |sum f - 1|={worst:.2e}")


def test_9_identical_runs_give_identical_documents(report, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    args = ["cluster", "--data", "iris", "--k", "3", "--qubits", "1", "--seed", "5", "-o", "out.json"]
    blobs_args = ["cluster", "--data", "blobs", "--qubits", "2", "--backend", "mps", "--epochs", "3", "--seed", "5",
                  "-o", "out.json"]
    same = []
    for a in (args, blobs_args):
        assert main(a) == 0
        first = (tmp_path / "out.json").read_bytes()
        assert main(a) == 0
        same.append(first == (tmp_path / "out.json").read_bytes())
    json.loads(first)
    ds = rescale(generate_blobs(BlobSpec(points_per_cluster=20)))
    b = make_backend("statevector", CircuitSpec(1), EncodingSpec.default(2, 1), make_anchor_set(1, 3))
    texts = [dumps(ClusterResult.from_report(train(ds.points, b, opt_cfg=OptimizerConfig(seed=9)), ds.labels))
             for _ in range(2)]
    same.append(texts[0] == texts[1])
    report(9, "same config and seed give byte-identical result documents", all(same), f"cli iris/mps, api: {same}")
