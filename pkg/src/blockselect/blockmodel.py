"""Block-model fitting on the structural graph.

Candidate block models come from orthogonal nonnegative matrix
tri-factorization (``A ~ F M F^T`` with ``F^T F ~ I``) run from several
random initializations.  Continuous allocations are binarized row-wise,
the image matrix is recomputed in closed form on the binary allocation,
and candidates are ranked by relative reconstruction error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import BlockModel, image_matrix_closed_form, rre
from .errors import EmptyBlockError, NonFiniteError

__all__ = [
    "OnmtfConfig",
    "Candidate",
    "CandidateSet",
    "fit_onmtf",
    "binarize_allocation",
    "generate_candidates",
    "select_best_rre",
    "perturb_allocation",
    "save_blockmodel",
    "load_blockmodel",
]


@dataclass
class OnmtfConfig:
    """Settings for one tri-factorization run."""

    k: int
    iterations: int = 100
    seed: int = 0
    epsilon: float = 1e-12

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclass
class Candidate:
    """One fitted block model with its selection metadata."""

    model: BlockModel
    rre: float
    seed: int
    objective_trace: np.ndarray | None = None


@dataclass
class CandidateSet:
    """Candidates in generation order; all share the same n and k."""

    candidates: list

    def __post_init__(self):
        if self.candidates:
            n, k = self.candidates[0].model.n, self.candidates[0].model.k
            for c in self.candidates:
                if c.model.n != n or c.model.k != k:
                    raise ValueError("candidates must share the same n and k")

    def __len__(self):
        return len(self.candidates)

    def __getitem__(self, i):
        return self.candidates[i]

    @property
    def best_index(self) -> int:
        """Index of the lowest-RRE candidate (earliest wins ties)."""
        if not self.candidates:
            raise ValueError("candidate set is empty")
        return int(np.argmin([c.rre for c in self.candidates]))


def _frobenius_objective(A, F, M, a_sq):
    """``||A - F M F^T||_F`` without materializing the n x n reconstruction."""
    if sp.issparse(A):
        FtAF = F.T @ (A @ F)
    else:
        FtAF = F.T @ A @ F
    FtF = F.T @ F
    val = a_sq - 2.0 * float(np.sum(FtAF * M)) + float(np.sum((FtF @ M @ FtF) * M))
    return float(np.sqrt(max(val, 0.0)))


def fit_onmtf(adjacency, cfg: OnmtfConfig):
    """Multiplicative-update tri-factorization ``A ~ F M F^T``, ``F^T F ~ I``.

    Returns ``(F_cont, M, trace)`` where ``F_cont`` is the continuous
    nonnegative allocation, ``M`` the continuous image matrix, and ``trace``
    the Frobenius objective at initialization and after each iteration.

    The updates interleave
    ``M <- M * (F'AF) / (F'F M F'F)`` and
    ``F <- F * sqrt((AFM) / (F F'AFM))``
    with an epsilon guard on every denominator entry.  ``F`` starts from
    uniform(0, 1) entries (column-rescaled to unit norm) under the run's
    seed, and ``M`` from the least-squares optimal image matrix for that
    soft allocation, which keeps both factors on the scale of ``A``.
    """
    A = adjacency
    if not sp.issparse(A):
        A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    a_sq = float(A.multiply(A).sum()) if sp.issparse(A) else float(np.sum(A * A))
    if a_sq == 0.0:
        raise ValueError("adjacency is identically zero; nothing to factor")

    rng = np.random.default_rng(cfg.seed)
    F = rng.uniform(0.0, 1.0, size=(n, cfg.k))
    F /= np.linalg.norm(F, axis=0)
    # least-squares optimal M for the soft allocation, clipped to stay
    # nonnegative; F'F is not diagonal here, so solve the normal equations
    gram_inv = np.linalg.pinv(F.T @ F)
    M = np.maximum(gram_inv @ (F.T @ (A @ F)) @ gram_inv, 0.0)

    eps = cfg.epsilon
    trace = np.empty(cfg.iterations + 1)
    trace[0] = _frobenius_objective(A, F, M, a_sq)
    for it in range(1, cfg.iterations + 1):
        AF = A @ F
        FtF = F.T @ F
        M *= (F.T @ AF) / (FtF @ M @ FtF + eps)
        AFM = AF @ M
        F *= np.sqrt(AFM / (F @ (F.T @ AFM) + eps))
        if not (np.isfinite(F).all() and np.isfinite(M).all()):
            raise NonFiniteError(
                f"non-finite factor entries at iteration {it} "
                f"(seed={cfg.seed}, k={cfg.k})"
            )
        trace[it] = _frobenius_objective(A, F, M, a_sq)
    return F, M, trace


def binarize_allocation(F_cont) -> np.ndarray:
    """One-hot allocation from a continuous one: row argmax, then repair.

    Ties go to the lowest block index.  If a block ends up empty, the node
    with the largest continuous membership for that block (among nodes whose
    current block keeps at least 2 members) is moved in; this repeats until
    every block is populated, so the result is always a valid allocation.
    """
    F_cont = np.asarray(F_cont, dtype=np.float64)
    if F_cont.ndim != 2 or F_cont.min() < 0:
        raise ValueError("continuous allocation must be a nonnegative n x k matrix")
    n, k = F_cont.shape
    if n < k:
        raise EmptyBlockError(f"cannot fill {k} blocks with {n} nodes")
    ids = F_cont.argmax(axis=1)
    counts = np.bincount(ids, minlength=k)
    while (counts == 0).any():
        c = int(np.flatnonzero(counts == 0)[0])
        movable = counts[ids] >= 2
        if not movable.any():
            raise EmptyBlockError(f"no movable node available to fill block {c}")
        scores = np.where(movable, F_cont[:, c], -np.inf)
        node = int(np.argmax(scores))
        counts[ids[node]] -= 1
        counts[c] += 1
        ids[node] = c
    F = np.zeros((n, k))
    F[np.arange(n), ids] = 1.0
    return F


def generate_candidates(adjacency, k, count, base_seed, iterations=100,
                        epsilon=1e-12) -> CandidateSet:
    """Harvest ``count`` candidate block models from seeds ``base_seed..+count-1``.

    Each run is binarized, gets its image matrix recomputed in closed form on
    the binary allocation, and is tagged with its RRE.
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    out = []
    for i in range(count):
        cfg = OnmtfConfig(k=k, iterations=iterations, seed=base_seed + i,
                          epsilon=epsilon)
        F_cont, _, trace = fit_onmtf(adjacency, cfg)
        F = binarize_allocation(F_cont)
        model = BlockModel(F, image_matrix_closed_form(adjacency, F))
        out.append(Candidate(model=model, rre=rre(adjacency, model),
                             seed=cfg.seed, objective_trace=trace))
    return CandidateSet(out)


def select_best_rre(cs: CandidateSet) -> BlockModel:
    """The candidate with the lowest RRE; ties break to the earliest one."""
    return cs[cs.best_index].model


def perturb_allocation(bm: BlockModel, adjacency, fraction, mode, seed,
                       max_retries=100) -> BlockModel:
    """Randomly re-allocate ``floor(fraction * n)`` nodes to different blocks.

    ``mode`` is ``"keep_M"`` (return the original image matrix untouched) or
    ``"recompute_M"`` (recompute it on ``adjacency`` for the perturbed
    allocation).  Draws that would empty a block are resampled up to
    ``max_retries`` times.
    """
    if mode not in ("keep_M", "recompute_M"):
        raise ValueError(f"unknown mode {mode!r}")
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must be in [0, 1]")
    n, k = bm.n, bm.k
    n_move = int(np.floor(fraction * n))
    rng = np.random.default_rng(seed)
    ids = bm.block_ids.copy()
    if n_move > 0:
        if k < 2:
            raise ValueError("cannot re-allocate nodes with a single block")
        for _ in range(max_retries):
            new_ids = ids.copy()
            nodes = rng.choice(n, size=n_move, replace=False)
            # offset in 1..k-1 lands uniformly on any *other* block
            new_ids[nodes] = (ids[nodes] + rng.integers(1, k, size=n_move)) % k
            if (np.bincount(new_ids, minlength=k) > 0).all():
                ids = new_ids
                break
        else:
            raise EmptyBlockError(
                f"perturbation kept emptying a block after {max_retries} draws"
            )
    F = np.zeros((n, k))
    F[np.arange(n), ids] = 1.0
    if mode == "keep_M":
        return BlockModel(F, bm.image.copy())
    return BlockModel(F, image_matrix_closed_form(adjacency, F))


def save_blockmodel(path, cand: Candidate):
    """Write a candidate to JSON: k, n, per-node block ids, row-major image, rre, seed."""
    payload = {
        "k": cand.model.k,
        "n": cand.model.n,
        "allocation": cand.model.block_ids.tolist(),
        "image": cand.model.image.reshape(-1).tolist(),
        "rre": cand.rre,
        "seed": cand.seed,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_blockmodel(path) -> Candidate:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    n, k = payload["n"], payload["k"]
    ids = np.asarray(payload["allocation"], dtype=np.int64)
    if ids.shape != (n,):
        raise ValueError(f"allocation must list {n} block ids")
    F = np.zeros((n, k))
    F[np.arange(n), ids] = 1.0
    image = np.asarray(payload["image"], dtype=np.float64).reshape(k, k)
    model = BlockModel(F, image)
    return Candidate(model=model, rre=float(payload["rre"]),
                     seed=int(payload["seed"]))
