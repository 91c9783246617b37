import numpy as np
import pytest

from vqclust.anchors import make_anchor_set
from vqclust.ansatz import CircuitSpec, EncodingSpec
from vqclust.backend import MPSBackend, StatevectorBackend
from vqclust.cost import CostConfig
from vqclust.data import BlobSpec, generate_blobs, rescale
from vqclust.evaluation import matched_accuracy
from vqclust.exceptions import ConfigurationError, NumericError, UsageError
from vqclust.qsim import Gate, apply_circuit, init_zero
from vqclust.rng import PortableRNG
from vqclust.trainer import (
    AdamMoments,
    ClusteringObjective,
    OptimizerConfig,
    adam_step,
    gradient,
    initial_params,
    train,
    write_training_log,
)


def backend_for(n_qubits, k, n_features=2, **kw):
    spec = CircuitSpec(n_qubits)
    mode = None if n_qubits == 1 else "optimized"
    return StatevectorBackend(spec, EncodingSpec.default(n_features, n_qubits), make_anchor_set(n_qubits, k, mode), **kw)


# -- Adam ---------------------------------------------------------------------


def test_adam_zero_gradient_keeps_params():
    p = np.array([0.3, -1.0])
    out, _ = adam_step(p, np.zeros(2), AdamMoments.zeros_like(p), 1, OptimizerConfig())
    assert np.array_equal(out, p)


def test_adam_unit_gradient_step_tends_to_learning_rate():
    cfg = OptimizerConfig(learning_rate=0.05)
    p, mom = np.zeros(1), AdamMoments.zeros_like(np.zeros(1))
    steps = []
    for t in range(1, 200):
        new, mom = adam_step(p, np.ones(1), mom, t, cfg)
        steps.append(abs(new[0] - p[0]))
        p = new
    assert steps[-1] == pytest.approx(0.05, rel=1e-6)


def test_adam_matches_hand_computation():
    cfg = OptimizerConfig(learning_rate=0.1)
    g = np.array([2.0])
    p1, m1 = adam_step(np.zeros(1), g, AdamMoments.zeros_like(g), 1, cfg)
    # bias-corrected first step is lr * g / (|g| + eps)
    assert p1[0] == pytest.approx(-0.1 * 2 / (2 + 1e-8))
    p2, _ = adam_step(p1, -g, m1, 2, cfg)
    m = 0.9 * 0.2 + 0.1 * -2
    v = 0.999 * 0.004 + 0.001 * 4
    expected = p1[0] - 0.1 * (m / (1 - 0.81)) / (np.sqrt(v / (1 - 0.999 ** 2)) + 1e-8)
    assert p2[0] == pytest.approx(expected, rel=1e-12)


def test_adam_moments_stay_finite():
    rng = np.random.default_rng(0)
    p = rng.normal(size=5)
    mom = AdamMoments.zeros_like(p)
    for t in range(1, 50):
        p, mom = adam_step(p, rng.normal(size=5) * 1e3, mom, t, OptimizerConfig())
    assert np.all(np.isfinite(mom.m)) and np.all(np.isfinite(mom.v)) and np.all(np.isfinite(p))


def test_adam_shape_mismatch():
    with pytest.raises(UsageError):
        adam_step(np.zeros(2), np.zeros(3), AdamMoments.zeros_like(np.zeros(2)), 1, OptimizerConfig())


# -- gradients ----------------------------------------------------------------


def test_constant_objective_has_zero_gradient():
    assert np.array_equal(gradient(np.array([0.1, 2.0]), lambda p: 3.0), np.zeros(2))


@pytest.mark.parametrize("mode", ["parameter_shift", "central_difference"])
def test_single_fidelity_derivative(mode):
    def f(p):
        psi = apply_circuit(init_zero(1), [Gate.ry(0, p[0])]).amps
        return abs(psi[0]) ** 2

    g = gradient(np.array([np.pi / 2]), f, mode)
    assert g[0] == pytest.approx(-0.5, abs=1e-9)


def test_non_finite_objective_reports_component():
    def f(p):
        return np.nan if p[1] > 1.0 else 0.0

    with pytest.raises(NumericError) as info:
        gradient(np.array([0.0, 0.0, 0.0]), f)
    assert info.value.index == 1


@pytest.mark.parametrize("shared", [False, True])
def test_parameter_shift_agrees_with_central_difference(shared):
    rng = np.random.default_rng(int(shared))
    worst = 0.0
    for draw in range(50):
        n = 1 + draw % 2
        N = int(rng.integers(2, 7))
        b = backend_for(n, int(rng.integers(2, 4)))
        X = rng.uniform(-3, 3, (N, 2))
        variant = ["original", "inverse_distance", "centroid_regularized", "complementary"][draw % 4]
        obj = ClusteringObjective(X, b, CostConfig(variant, rng.uniform(0.5, 2), 0.3), mu=0.5,
                                  cent_dist=rng.uniform(0, 1, N))
        shape = (b.spec.n_params,) if shared else (N, b.spec.n_params)
        p = rng.uniform(-np.pi, np.pi, shape)
        g_ps = obj.gradient(p)
        g_cd = gradient(p, obj, "central_difference", 1e-5)
        worst = max(worst, np.linalg.norm(g_ps - g_cd) / np.linalg.norm(g_cd))
    assert worst < 1e-5


# -- training -----------------------------------------------------------------


def test_zero_gradient_for_degenerate_data_leaves_params_unchanged():
    X = np.zeros((4, 2))  # all distances zero, antipodal anchors make the penalty flat
    b = backend_for(1, 2)
    cfg = OptimizerConfig(epochs=1, seed=3, readout="argmax")
    report = train(X, b, CostConfig("complementary"), cfg)
    init = initial_params(b.spec, 4, cfg, PortableRNG(3).spawn(3)[0])
    assert np.array_equal(report.final_params, init)


def test_two_point_toy_loss_does_not_increase_and_grid_confirms_descent_exists():
    X = np.array([[-1.0, 0.5], [1.2, -0.4]])
    b = backend_for(1, 2)
    cost = CostConfig("original")
    cfg = OptimizerConfig(epochs=10, seed=1, param_sharing="shared", readout="argmax")
    obj = ClusteringObjective(X, b, cost)
    init = initial_params(b.spec, 2, cfg, PortableRNG(1).spawn(3)[0])
    start = obj(init)
    grid = np.linspace(-np.pi, np.pi, 25)
    best = min(obj(np.array([t, p, q])) for t in grid for p in grid for q in grid)
    assert best < start
    report = train(X, b, cost, cfg)
    assert report.loss_per_epoch[-1] <= start


def test_training_is_deterministic_and_does_not_mutate_inputs():
    ds = rescale(generate_blobs(BlobSpec(points_per_cluster=20, seed=4)))
    X = ds.points.copy()
    b = backend_for(1, 3)
    r1 = train(X, b, CostConfig(), OptimizerConfig(seed=5, epochs=5), labels=ds.labels)
    r2 = train(X, b, CostConfig(), OptimizerConfig(seed=5, epochs=5), labels=ds.labels)
    assert np.array_equal(X, ds.points)
    assert r1.loss_per_epoch == r2.loss_per_epoch
    assert np.array_equal(r1.final_params, r2.final_params)
    assert np.array_equal(r1.fidelity_matrix, r2.fidelity_matrix)
    assert len(r1.loss_per_epoch) == r1.epochs_run == 5
    assert np.array_equal(r1.assignments, np.argmax(r1.fidelity_matrix, axis=1))


def test_three_blobs_reach_full_accuracy():
    ds = rescale(generate_blobs(BlobSpec(seed=0)))
    b = backend_for(1, 3)
    report = train(ds.points, b, CostConfig(), OptimizerConfig(seed=0))
    assert matched_accuracy(report.assignments, ds.labels)[0] == 1.0
    assert not np.any(np.isnan(report.loss_per_epoch))


def test_pair_minibatches_and_shared_mode_run():
    ds = rescale(generate_blobs(BlobSpec(points_per_cluster=15, seed=1)))
    b = backend_for(1, 3)
    r = train(ds.points, b, CostConfig(), OptimizerConfig(seed=2, epochs=3, batch_size=50))
    assert r.ok and r.final_params.shape == (45, 3)
    r = train(ds.points, b, CostConfig(), OptimizerConfig(seed=2, epochs=3, param_sharing="shared"))
    assert r.ok and r.final_params.shape == (3,)


def test_centroid_terms_are_used():
    ds = rescale(generate_blobs(BlobSpec(points_per_cluster=10, seed=1)))
    b = backend_for(1, 3)
    r0 = train(ds.points, b, CostConfig(lam=0.0), OptimizerConfig(seed=2, epochs=2))
    r1 = train(ds.points, b, CostConfig(lam=1.0), OptimizerConfig(seed=2, epochs=2))
    assert r0.loss_per_epoch != r1.loss_per_epoch


class NaNAfter:
    """Backend wrapper whose fidelities turn NaN after a number of calls."""

    def __init__(self, inner, calls):
        self.inner, self.calls = inner, calls
        self.spec, self.anchors = inner.spec, inner.anchors

    def encode(self, X):
        return self.inner.encode(X)

    def amplitudes(self, *a, **kw):
        return self.inner.amplitudes(*a, **kw)

    def fidelities(self, *a, **kw):
        self.calls -= 1
        F, err = self.inner.fidelities(*a, **kw)
        return (F * np.nan if self.calls < 0 else F), err


def test_numeric_failure_returns_partial_report():
    ds = rescale(generate_blobs(BlobSpec(points_per_cluster=5, seed=1)))
    b = NaNAfter(backend_for(1, 3), 40)
    r = train(ds.points, b, CostConfig(), OptimizerConfig(seed=0, epochs=10))
    assert r.error is not None and r.error.startswith("numeric")
    assert 0 < r.epochs_run < 10
    assert np.all(np.isfinite(r.loss_per_epoch))


def test_mps_and_statevector_training_agree():
    ds = rescale(generate_blobs(BlobSpec(n_clusters=2, points_per_cluster=15, seed=2)))
    spec, enc = CircuitSpec(2), EncodingSpec.default(2, 2)
    anchors = make_anchor_set(2, 2)
    cfg = OptimizerConfig(seed=1, epochs=4)
    r_sv = train(ds.points, StatevectorBackend(spec, enc, anchors), CostConfig(), cfg)
    r_mps = train(ds.points, MPSBackend(spec, enc, anchors), CostConfig(), cfg)
    assert np.array_equal(r_sv.assignments, r_mps.assignments)
    assert np.allclose(r_sv.fidelity_matrix, r_mps.fidelity_matrix, atol=1e-9)
    assert r_mps.truncation_error < 1e-12


def test_training_log(tmp_path):
    ds = rescale(generate_blobs(BlobSpec(points_per_cluster=5, seed=1)))
    r = train(ds.points, backend_for(1, 3), CostConfig(), OptimizerConfig(epochs=3), labels=ds.labels)
    path = tmp_path / "log.csv"
    write_training_log(r, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "epoch,loss,accuracy" and len(lines) == 4
    assert float(lines[1].split(",")[1]) == r.loss_per_epoch[0]


@pytest.mark.parametrize("kw", [{"learning_rate": 0}, {"beta1": 1.0}, {"epochs": 0}, {"epochs": 10001},
                                {"batch_size": 0}, {"gradient_mode": "spsa"}, {"param_sharing": "x"},
                                {"readout": "x"}, {"seed": -1}, {"steps_per_epoch": 0}])
def test_optimizer_config_validation(kw):
    with pytest.raises(ConfigurationError):
        OptimizerConfig(**kw)


def test_train_shape_checks():
    b = backend_for(1, 3)
    with pytest.raises(UsageError):
        train(np.zeros((1, 2)), b)
    with pytest.raises(UsageError):
        train(np.zeros((3, 2)), b, labels=np.zeros(2, dtype=int))
