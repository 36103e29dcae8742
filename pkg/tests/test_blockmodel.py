import numpy as np
import pytest
import scipy.sparse as sp

from blockselect import BlockModel, EmptyBlockError, image_matrix_closed_form, rre
from blockselect.blockmodel import (
    Candidate,
    CandidateSet,
    OnmtfConfig,
    binarize_allocation,
    fit_onmtf,
    generate_candidates,
    load_blockmodel,
    perturb_allocation,
    save_blockmodel,
    select_best_rre,
)
from conftest import random_one_hot


def two_cliques(size=5):
    """Block-diagonal union of two disjoint cliques (no self-loops)."""
    block = np.ones((size, size)) - np.eye(size)
    A = np.zeros((2 * size, 2 * size))
    A[:size, :size] = block
    A[size:, size:] = block
    return A


def planted_graph(rng, n=60, k=3, intra=0.6, inter=0.05):
    ids = np.repeat(np.arange(k), n // k)
    probs = np.where(ids[:, None] == ids[None, :], intra, inter)
    upper = rng.random((n, n)) < probs
    A = np.triu(upper, 1).astype(float)
    return A + A.T, ids


def adjusted_rand(a, b):
    from sklearn.metrics import adjusted_rand_score

    return adjusted_rand_score(a, b)


# ---------------------------------------------------------------------------
# fit_onmtf


def test_fit_onmtf_separates_two_cliques():
    A = two_cliques()
    F_cont, _, trace = fit_onmtf(A, OnmtfConfig(k=2, seed=0))
    F = binarize_allocation(F_cont)
    ids = F.argmax(axis=1)
    assert len(set(ids[:5])) == 1 and len(set(ids[5:])) == 1
    assert ids[0] != ids[5]
    assert trace[-1] < trace[0]


def test_fit_onmtf_identity_with_k_equals_n():
    # an exact factorization exists (each node its own block)
    A = np.eye(6)
    _, _, trace = fit_onmtf(A, OnmtfConfig(k=6, iterations=300, seed=3))
    assert trace[-1] <= 1e-8


def test_fit_onmtf_deterministic_per_seed():
    A = two_cliques(4)
    out1 = fit_onmtf(A, OnmtfConfig(k=2, seed=11))
    out2 = fit_onmtf(A, OnmtfConfig(k=2, seed=11))
    for a, b in zip(out1, out2):
        assert np.array_equal(a, b)


def test_fit_onmtf_objective_trace_sane(rng):
    A, _ = planted_graph(rng)
    _, _, trace = fit_onmtf(A, OnmtfConfig(k=3, seed=5))
    assert np.isfinite(trace).all()
    assert trace[-1] <= trace[0]
    assert len(trace) == 101


def test_fit_onmtf_rejects_zero_adjacency():
    with pytest.raises(ValueError, match="zero"):
        fit_onmtf(np.zeros((4, 4)), OnmtfConfig(k=2))


def test_fit_onmtf_sparse_matches_dense(rng):
    A, _ = planted_graph(rng, n=30)
    cfg = OnmtfConfig(k=3, iterations=20, seed=2)
    F_d, M_d, tr_d = fit_onmtf(A, cfg)
    F_s, M_s, tr_s = fit_onmtf(sp.csr_matrix(A), cfg)
    assert np.abs(F_d - F_s).max() <= 1e-10
    assert np.abs(tr_d - tr_s).max() <= 1e-10


# ---------------------------------------------------------------------------
# binarize_allocation


def test_binarize_row_argmax():
    F = binarize_allocation(np.array([[0.1, 0.7, 0.2], [0.3, 0.1, 0.5], [0.9, 0.05, 0.05]]))
    assert np.array_equal(F.argmax(axis=1), [1, 2, 0])


def test_binarize_tie_breaks_to_lowest_index():
    F = binarize_allocation(np.array([[0.5, 0.5], [0.2, 0.6]]))
    assert np.array_equal(F[0], [1.0, 0.0])


def test_binarize_repairs_empty_block(rng):
    # every row argmax lands in columns 0/1; column 2 starts empty
    F_cont = rng.uniform(0.5, 1.0, size=(20, 3))
    F_cont[:, 2] = rng.uniform(0.0, 0.4, size=20)
    F = binarize_allocation(F_cont)
    counts = F.sum(axis=0)
    assert (counts > 0).all()
    # the node moved into block 2 is the one with the largest column-2 value
    moved = int(np.flatnonzero(F[:, 2])[0])
    assert moved == int(np.argmax(F_cont[:, 2]))


def test_binarize_idempotent_on_binary(rng):
    F = random_one_hot(rng, 12, 3)
    assert np.array_equal(binarize_allocation(F), F)


def test_binarize_rejects_more_blocks_than_nodes():
    with pytest.raises(EmptyBlockError):
        binarize_allocation(np.ones((2, 3)))


# ---------------------------------------------------------------------------
# generate_candidates / select_best_rre


def test_generate_candidates_protocol(rng):
    A, _ = planted_graph(rng)
    cs = generate_candidates(A, k=3, count=10, base_seed=100, iterations=30)
    assert len(cs) == 10
    assert [c.seed for c in cs] == list(range(100, 110))
    for c in cs:
        assert (c.model.block_sizes > 0).all()
        assert np.isfinite(c.rre)


def test_generate_candidates_singleton(rng):
    A, _ = planted_graph(rng, n=30)
    cs = generate_candidates(A, k=3, count=1, base_seed=0, iterations=20)
    assert len(cs) == 1
    assert select_best_rre(cs) is cs[0].model


def test_generate_candidates_recovers_planted_partition():
    from blockselect.data import PlantedSpec, generate_planted

    net = generate_planted(
        PlantedSpec(n=90, k=3, d_informative=2, d_noise=2,
                    intra_p=0.7, inter_p=0.02, signal_strength=1.0, seed=0)
    )
    cs = generate_candidates(net.adjacency, k=3, count=5, base_seed=42)
    best = select_best_rre(cs)
    assert adjusted_rand(best.block_ids, net.labels) == 1.0


def test_generate_candidates_deterministic(rng):
    A, _ = planted_graph(rng, n=30)
    cs1 = generate_candidates(A, k=3, count=3, base_seed=9, iterations=15)
    cs2 = generate_candidates(A, k=3, count=3, base_seed=9, iterations=15)
    for c1, c2 in zip(cs1, cs2):
        assert np.array_equal(c1.model.allocation, c2.model.allocation)
        assert c1.rre == c2.rre
        assert np.array_equal(c1.objective_trace, c2.objective_trace)


def test_select_best_rre_minimum_and_ties(rng):
    def cand(r):
        F = random_one_hot(rng, 6, 2)
        return Candidate(model=BlockModel(F, np.ones((2, 2))), rre=r, seed=0)

    cs = CandidateSet([cand(0.8), cand(0.3), cand(0.5)])
    assert cs.best_index == 1
    cs = CandidateSet([cand(0.4), cand(0.4), cand(0.4)])
    assert cs.best_index == 0
    with pytest.raises(ValueError, match="empty"):
        CandidateSet([]).best_index


# ---------------------------------------------------------------------------
# perturb_allocation


def test_perturb_fraction_zero_is_identity(rng):
    F = random_one_hot(rng, 10, 3)
    bm = BlockModel(F, np.ones((3, 3)))
    out = perturb_allocation(bm, None, fraction=0.0, mode="keep_M", seed=1)
    assert np.array_equal(out.allocation, bm.allocation)
    assert np.array_equal(out.image, bm.image)


def test_perturb_moves_exact_floor_count():
    n = 5196
    rng = np.random.default_rng(0)
    ids = rng.integers(0, 6, size=n)
    F = np.zeros((n, 6))
    F[np.arange(n), ids] = 1.0
    bm = BlockModel(F, np.ones((6, 6)))
    out = perturb_allocation(bm, None, fraction=0.05, mode="keep_M", seed=4)
    changed = (out.block_ids != bm.block_ids).sum()
    assert changed == 259  # floor(0.05 * 5196)


def test_perturb_hamming_distance_property(rng):
    F = random_one_hot(rng, 40, 4)
    bm = BlockModel(F, np.ones((4, 4)))
    for frac in (0.1, 0.25, 0.5):
        out = perturb_allocation(bm, None, fraction=frac, mode="keep_M", seed=8)
        assert (out.block_ids != bm.block_ids).sum() == int(np.floor(frac * 40))


def test_perturb_mode_contracts(rng):
    A = np.abs(rng.random((12, 12)))
    A = (A + A.T) / 2.0
    F = random_one_hot(rng, 12, 3)
    bm = BlockModel.from_allocation(A, F)
    kept = perturb_allocation(bm, A, fraction=0.25, mode="keep_M", seed=3)
    assert np.array_equal(kept.image, bm.image)
    recomputed = perturb_allocation(bm, A, fraction=0.0, mode="recompute_M", seed=3)
    assert np.abs(recomputed.image - image_matrix_closed_form(A, F)).max() == 0.0


def test_perturb_rejects_unknown_mode(rng):
    bm = BlockModel(random_one_hot(rng, 6, 2), np.ones((2, 2)))
    with pytest.raises(ValueError, match="mode"):
        perturb_allocation(bm, None, 0.1, "both", seed=0)


def test_perturb_errors_when_block_must_empty():
    # two nodes, two blocks: moving one node always empties its block
    F = np.eye(2)
    bm = BlockModel(F, np.ones((2, 2)))
    with pytest.raises(EmptyBlockError):
        perturb_allocation(bm, None, fraction=0.5, mode="keep_M", seed=0, max_retries=5)


# ---------------------------------------------------------------------------
# serialization


def test_blockmodel_json_round_trip(tmp_path, rng):
    A, _ = planted_graph(rng, n=30)
    cs = generate_candidates(A, k=3, count=1, base_seed=5, iterations=15)
    path = tmp_path / "bm.json"
    save_blockmodel(path, cs[0])
    loaded = load_blockmodel(path)
    assert np.array_equal(loaded.model.allocation, cs[0].model.allocation)
    assert np.array_equal(loaded.model.image, cs[0].model.image)
    assert loaded.rre == cs[0].rre
    assert loaded.seed == cs[0].seed
