import numpy as np
import pytest

from blockselect import (
    AttributedNetwork,
    BlockModel,
    DegenerateStepError,
    FeatureScores,
    InsufficientSupportError,
)
from blockselect.solver import (
    SolverConfig,
    combined_gradient,
    load_scores,
    optimize,
    pgd_step,
    save_scores,
    top_d_features,
)
from conftest import random_symmetric


def small_instance(rng, n=10, m=6, k=2):
    A = random_symmetric(rng, n)
    Y = rng.random((n, m))
    net = AttributedNetwork(A, Y)
    ids = np.sort(rng.integers(0, k, n - k).tolist() + list(range(k)))
    F = np.zeros((n, k))
    F[np.arange(n), ids] = 1.0
    return net, BlockModel.from_allocation(A, F)


# ---------------------------------------------------------------------------
# SolverConfig


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(beta_bar=1.5)
    with pytest.raises(ValueError):
        SolverConfig(eta=0.0)
    with pytest.raises(ValueError):
        SolverConfig(max_iterations=0)
    with pytest.raises(ValueError):
        SolverConfig(gradient_mode="autodiff")


# ---------------------------------------------------------------------------
# combined_gradient


def test_combined_gradient_beta_zero_endpoint():
    gb = np.array([3.0, 4.0, 0.0])
    gm = np.array([1.0, 1.0, 1.0])
    cfg = SolverConfig(beta_bar=0.0, gamma=0.5)
    out = combined_gradient(gb, gm, cfg)
    expected = gb / 5.0 + 0.5 / np.sqrt(3)
    assert np.abs(out - expected).max() <= 1e-15


def test_combined_gradient_beta_one_unit_norm(rng):
    gm = rng.standard_normal(8)
    cfg = SolverConfig(beta_bar=1.0, gamma=0.0)
    out = combined_gradient(rng.standard_normal(8), gm, cfg)
    assert np.abs(out - gm / np.linalg.norm(gm)).max() <= 1e-15
    assert abs(np.linalg.norm(out) - 1.0) <= 1e-12


def test_combined_gradient_hand_example():
    gb = np.array([3.0, 4.0, 0.0])
    gm = np.array([0.0, 0.0, 2.0])
    out = combined_gradient(gb, gm, SolverConfig(beta_bar=0.5, gamma=0.0))
    assert np.abs(out - np.array([0.3, 0.4, 0.5])).max() <= 1e-15


def test_combined_gradient_drops_vanished_terms():
    gm = np.array([0.0, 2.0])
    cfg = SolverConfig(beta_bar=0.5, gamma=0.0)
    out = combined_gradient(np.zeros(2), gm, cfg)
    assert np.array_equal(out, np.array([0.0, 0.5]))
    out = combined_gradient(gm, np.zeros(2), cfg)
    assert np.array_equal(out, np.array([0.0, 0.5]))


# ---------------------------------------------------------------------------
# pgd_step


def test_pgd_step_zero_gradient_is_identity():
    r = FeatureScores.uniform(4)
    out = pgd_step(r, np.zeros(4), eta=0.1)
    assert np.abs(out.values - r.values).max() <= 1e-15


def test_pgd_step_hand_example():
    out = pgd_step(np.array([0.6, 0.8]), np.array([1.0, 0.0]), eta=0.6)
    assert np.abs(out.values - np.array([0.0, 1.0])).max() <= 1e-15


def test_pgd_step_postconditions(rng):
    for _ in range(20):
        r = rng.random(7)
        r /= np.linalg.norm(r)
        out = pgd_step(r, rng.standard_normal(7), eta=0.05)
        assert out.values.min() >= 0.0
        assert abs(out.norm() - 1.0) <= 1e-12


def test_pgd_step_degenerate_error():
    with pytest.raises(DegenerateStepError, match="eta"):
        pgd_step(np.array([0.6, 0.8]), np.array([1.0, 1.0]), eta=10.0)


# ---------------------------------------------------------------------------
# optimize


def test_optimize_single_iteration_two_records(rng):
    net, bm = small_instance(rng)
    _, trace = optimize(net, bm, SolverConfig(max_iterations=1))
    assert len(trace) == 2
    assert [rec.iteration for rec in trace.records] == [0, 1]
    assert trace.stop_reason == "max_iterations"
    assert not trace.converged


def test_optimize_deterministic(rng):
    net, bm = small_instance(rng)
    cfg = SolverConfig(beta_bar=0.6, eta=1e-2, max_iterations=40)
    s1, t1 = optimize(net, bm, cfg)
    s2, t2 = optimize(net, bm, cfg)
    assert np.array_equal(s1.values, s2.values)
    assert all(
        a == b for ra, rb in zip(t1.records, t2.records)
        for a, b in zip(ra.__dict__.values(), rb.__dict__.values())
    )


def test_optimize_constraints_every_iterate(rng):
    net, bm = small_instance(rng)
    seen = []

    def check(t, r):
        seen.append(t)
        assert r.min() >= 0.0
        assert abs(np.linalg.norm(r) - 1.0) <= 1e-12

    _, trace = optimize(net, bm, SolverConfig(max_iterations=60), callback=check)
    assert seen == [rec.iteration for rec in trace.records]
    assert np.isfinite(
        [[rec.loss_b, rec.loss_m, rec.grad_norm] for rec in trace.records]
    ).all()


def test_optimize_descent_sanity_each_endpoint(rng):
    net, bm = small_instance(rng)
    for beta, attr in ((0.0, "loss_b"), (1.0, "loss_m")):
        cfg = SolverConfig(beta_bar=beta, gamma=0.0, eta=1e-3, max_iterations=55)
        _, trace = optimize(net, bm, cfg)
        vals = [getattr(rec, attr) for rec in trace.records[:51]]
        assert (np.diff(vals) <= 1e-8).all()


def test_optimize_converges_on_planted_instance(planted_net, planted_blockmodel):
    cfg = SolverConfig(beta_bar=0.6, gamma=0.0, eta=0.2, max_iterations=500)
    scores, trace = optimize(planted_net, planted_blockmodel, cfg)
    assert trace.converged and trace.stop_reason == "tolerance"
    assert trace.final.iteration <= 200
    lm = [rec.loss_m for rec in trace.records]
    assert (np.diff(lm[20:]) <= 1e-8).all()  # monotone after burn-in
    assert abs(scores.norm() - 1.0) <= 1e-12


def test_optimize_nnz_non_increasing_in_gamma(planted_net, planted_blockmodel):
    finals = []
    for gamma in (0.0, 1.0, 2.0):
        cfg = SolverConfig(beta_bar=0.6, gamma=gamma, eta=0.2, max_iterations=150)
        _, trace = optimize(planted_net, planted_blockmodel, cfg)
        finals.append(trace.final.nnz)
    assert finals[0] >= finals[1] >= finals[2]


def test_optimize_records_vanished_gradient_warning(rng):
    # a single block makes the image-matching gradient identically zero
    net, _ = small_instance(rng, k=2)
    bm = BlockModel.from_allocation(net.adjacency, np.ones((net.n, 1)))
    _, trace = optimize(net, bm, SolverConfig(beta_bar=0.5, max_iterations=3))
    assert any("image-matching" in w for w in trace.warnings)


# ---------------------------------------------------------------------------
# top_d_features


def test_top_d_basic_ordering():
    assert top_d_features(np.array([0.9, 0.1, 0.4]), 2).tolist() == [0, 2]


def test_top_d_tie_breaks_by_index():
    assert top_d_features(np.array([0.5, 0.5, 0.7]), 2).tolist() == [2, 0]


def test_top_d_insufficient_support():
    r = np.zeros(30)
    r[:10] = np.linspace(1.0, 0.1, 10)
    with pytest.raises(InsufficientSupportError) as exc:
        top_d_features(r, 16)
    assert exc.value.nnz == 10


# ---------------------------------------------------------------------------
# serialization


def test_trace_csv_format(tmp_path, rng):
    net, bm = small_instance(rng)
    _, trace = optimize(net, bm, SolverConfig(max_iterations=5))
    path = tmp_path / "trace.csv"
    trace.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "iteration,loss_b,loss_m,loss_total,grad_norm,nnz"
    assert len(lines) == len(trace) + 1


def test_scores_json_round_trip(tmp_path, rng):
    net, bm = small_instance(rng)
    scores, _ = optimize(net, bm, SolverConfig(max_iterations=10))
    path = tmp_path / "scores.json"
    save_scores(path, scores)
    loaded = load_scores(path)
    assert np.array_equal(loaded.values, scores.values)
