"""Domain types and closed-form block-model algebra.

A network carries a symmetric nonnegative adjacency ``A`` (n x n) and a
nonnegative feature matrix ``Y`` (n x m).  A block model is a one-hot
allocation ``F`` (n x k) plus a nonnegative image matrix ``M`` (k x k)
summarizing block-to-block connectivity.  Weighting features by a
nonnegative score vector ``r`` induces the similarity graph
``A_hat = Y diag(r) Y^T``; this module provides that product, the
least-squares optimal image matrix for a fixed allocation, and the
relative reconstruction error used to rank block models.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from .errors import EmptyBlockError

__all__ = [
    "AttributedNetwork",
    "BlockModel",
    "FeatureScores",
    "induced_adjacency",
    "induced_adjacency_operator",
    "image_matrix_closed_form",
    "mhat_of_r",
    "block_mean_features",
    "rre",
    "cosine_distance",
]


def _is_sparse(x) -> bool:
    return sp.issparse(x)


def _frobenius_sq(x) -> float:
    if _is_sparse(x):
        return float(x.multiply(x).sum())
    return float(np.sum(np.asarray(x) ** 2))


def _min_entry(x) -> float:
    if _is_sparse(x):
        return float(x.data.min()) if x.nnz else 0.0
    x = np.asarray(x)
    return float(x.min()) if x.size else 0.0


def scores_vector(scores) -> np.ndarray:
    """Accept either a FeatureScores or a plain array and return a 1-D float64 vector."""
    if isinstance(scores, FeatureScores):
        return scores.values
    r = np.asarray(scores, dtype=np.float64)
    if r.ndim != 1:
        raise ValueError(f"score vector must be 1-D, got shape {r.shape}")
    return r


@dataclass
class AttributedNetwork:
    """A graph with node features: adjacency ``A``, features ``Y``, optional labels.

    ``adjacency`` must be exactly symmetric and entrywise nonnegative;
    ``features`` must be entrywise nonnegative (negative features would break
    the nonnegativity of induced image matrices, so they are rejected here
    rather than silently shifted).  Both accept dense arrays or scipy sparse
    matrices.  ``labels``, when given, must be length-n class ids that are
    contiguous from 0.
    """

    adjacency: object
    features: object
    labels: np.ndarray | None = None

    def __post_init__(self):
        A, Y = self.adjacency, self.features
        if not _is_sparse(A):
            A = np.asarray(A, dtype=np.float64)
            self.adjacency = A
        if not _is_sparse(Y):
            Y = np.asarray(Y, dtype=np.float64)
            self.features = Y
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {A.shape}")
        if Y.ndim != 2 or Y.shape[0] != A.shape[0]:
            raise ValueError(
                f"features must have one row per node: {Y.shape[0]} rows for "
                f"{A.shape[0]} nodes"
            )
        if _is_sparse(A):
            if (A - A.T).count_nonzero() != 0:
                raise ValueError("adjacency is not exactly symmetric")
        elif not np.array_equal(A, A.T):
            raise ValueError("adjacency is not exactly symmetric")
        if _min_entry(A) < 0:
            raise ValueError("adjacency has negative entries")
        if _min_entry(Y) < 0:
            raise ValueError(
                "features have negative entries; nonnegative features are "
                "required for block-level similarity matching"
            )
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=np.int64)
            if labels.shape != (self.n,):
                raise ValueError(
                    f"expected {self.n} labels, got {labels.shape}"
                )
            classes = np.unique(labels)
            if not np.array_equal(classes, np.arange(classes.size)):
                raise ValueError("class ids must be contiguous from 0")
            self.labels = labels

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def m(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        if self.labels is None:
            raise ValueError("network has no labels")
        return int(self.labels.max()) + 1


@dataclass
class BlockModel:
    """One-hot allocation ``F`` (n x k) plus nonnegative image matrix ``M`` (k x k).

    ``block_sizes`` is the diagonal of ``F^T F``; every block must be
    non-empty so that the closed-form image matrix is defined.
    """

    allocation: np.ndarray
    image: np.ndarray
    block_sizes: np.ndarray = field(default=None)

    def __post_init__(self):
        F = np.asarray(self.allocation)
        if F.ndim != 2:
            raise ValueError("allocation must be 2-D")
        if not np.isin(F, (0, 1)).all():
            raise ValueError("allocation entries must be 0 or 1")
        if not (F.sum(axis=1) == 1).all():
            raise ValueError("every allocation row must have exactly one 1")
        sizes = F.sum(axis=0).astype(np.int64)
        if (sizes == 0).any():
            raise EmptyBlockError(
                f"blocks {np.flatnonzero(sizes == 0).tolist()} are empty"
            )
        self.allocation = F.astype(np.float64)
        M = np.asarray(self.image, dtype=np.float64)
        if M.shape != (F.shape[1], F.shape[1]):
            raise ValueError(
                f"image must be {F.shape[1]} x {F.shape[1]}, got {M.shape}"
            )
        if M.min() < 0:
            raise ValueError("image matrix has negative entries")
        self.image = M
        if self.block_sizes is None:
            self.block_sizes = sizes
        else:
            self.block_sizes = np.asarray(self.block_sizes, dtype=np.int64)
            if not np.array_equal(self.block_sizes, sizes):
                raise ValueError("block_sizes disagree with allocation")

    @classmethod
    def from_allocation(cls, adjacency, allocation) -> "BlockModel":
        """Build a block model with the least-squares optimal image matrix."""
        M = image_matrix_closed_form(adjacency, allocation)
        return cls(allocation=allocation, image=M)

    @property
    def n(self) -> int:
        return self.allocation.shape[0]

    @property
    def k(self) -> int:
        return self.allocation.shape[1]

    @property
    def block_ids(self) -> np.ndarray:
        """Per-node block index (argmax of each one-hot row)."""
        return self.allocation.argmax(axis=1)


@dataclass
class FeatureScores:
    """Nonnegative per-feature importance scores.

    The solver emits scores with unit Euclidean norm; the type itself only
    requires nonnegativity so that rescaled copies remain valid.
    """

    values: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.values, dtype=np.float64)
        if r.ndim != 1:
            raise ValueError("scores must be a 1-D vector")
        if not np.isfinite(r).all():
            raise ValueError("scores contain non-finite values")
        if r.size and r.min() < 0:
            raise ValueError("scores must be entrywise nonnegative")
        self.values = r

    @classmethod
    def uniform(cls, m: int) -> "FeatureScores":
        """The all-ones vector scaled to unit norm (the solver's start point)."""
        return cls(np.full(m, 1.0 / np.sqrt(m)))

    def __len__(self) -> int:
        return self.values.size

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.values))

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))


def induced_adjacency(net: AttributedNetwork, scores) -> np.ndarray:
    """Materialize the feature-induced similarity graph ``Y diag(r) Y^T``.

    Returns a dense n x n array; intended for moderate n (tests and datasets
    up to a few thousand nodes).  Use :func:`induced_adjacency_operator` when
    materializing is too expensive.
    """
    r = scores_vector(scores)
    Y = net.features
    if r.size != net.m:
        raise ValueError(f"expected {net.m} scores, got {r.size}")
    if _is_sparse(Y):
        out = np.asarray(Y.multiply(r).dot(Y.T).todense())
    else:
        out = (Y * r) @ Y.T
    # matmul round-off can break exact symmetry at the 1e-17 level
    return (out + out.T) * 0.5


def induced_adjacency_operator(net: AttributedNetwork, scores) -> LinearOperator:
    """The induced graph as an implicit operator ``v -> Y (diag(r) (Y^T v))``."""
    r = scores_vector(scores)
    Y = net.features
    if r.size != net.m:
        raise ValueError(f"expected {net.m} scores, got {r.size}")

    def matvec(v):
        v = np.asarray(v).ravel()
        return Y @ (r * (Y.T @ v))

    return LinearOperator(
        shape=(net.n, net.n), matvec=matvec, rmatvec=matvec, dtype=np.float64
    )


def _check_one_hot(F: np.ndarray) -> np.ndarray:
    F = np.asarray(F, dtype=np.float64)
    if F.ndim != 2 or not np.isin(F, (0.0, 1.0)).all() or not (F.sum(axis=1) == 1).all():
        raise ValueError("allocation must be a one-hot binary n x k matrix")
    sizes = F.sum(axis=0)
    if (sizes == 0).any():
        raise EmptyBlockError(
            f"blocks {np.flatnonzero(sizes == 0).tolist()} are empty; the "
            "closed-form image matrix requires every block to be non-empty"
        )
    return F


def image_matrix_closed_form(adjacency, allocation) -> np.ndarray:
    """Least-squares optimal image matrix ``D^-1 F^T A F D^-1`` for fixed ``F``.

    With ``D = F^T F`` (diagonal, positive by the non-empty-block
    precondition) this is the unique minimizer of ``||A - F X F^T||_F``
    over ``X``.
    """
    F = _check_one_hot(allocation)
    counts = F.sum(axis=0)
    if _is_sparse(adjacency):
        FAF = F.T @ (adjacency @ F)
    else:
        FAF = F.T @ np.asarray(adjacency, dtype=np.float64) @ F
    return FAF / counts[:, None] / counts[None, :]


def block_mean_features(allocation, features) -> np.ndarray:
    """Block-mean feature matrix ``D^-1 F^T Y`` (k x m, dense)."""
    F = _check_one_hot(allocation)
    counts = F.sum(axis=0)
    if _is_sparse(features):
        FY = np.asarray(features.T @ F).T
    else:
        FY = F.T @ np.asarray(features, dtype=np.float64)
    return FY / counts[:, None]


def mhat_of_r(net: AttributedNetwork, allocation, scores) -> np.ndarray:
    """Image matrix of the induced graph as a direct function of ``r``.

    Equals ``D_bar diag(r) D_bar^T`` with ``D_bar = D^-1 F^T Y``, which is
    the closed-form image matrix of ``Y diag(r) Y^T`` under allocation ``F``.
    """
    r = scores_vector(scores)
    if r.size != net.m:
        raise ValueError(f"expected {net.m} scores, got {r.size}")
    if isinstance(allocation, BlockModel):
        allocation = allocation.allocation
    dbar = block_mean_features(allocation, net.features)
    return (dbar * r) @ dbar.T


def rre(adjacency, bm: BlockModel) -> float:
    """Relative reconstruction error ``||A - F M F^T||_F / ||A||_F``.

    ``(F M F^T)[i, j]`` is just ``M[z_i, z_j]`` for block ids ``z``, so the
    numerator is accumulated per entry (over nonzeros plus a closed-form
    remainder for sparse input) rather than by expanding the square, which
    would cancel catastrophically when the reconstruction is near exact.
    """
    a_sq = _frobenius_sq(adjacency)
    if a_sq == 0.0:
        raise ValueError("adjacency is identically zero; RRE is undefined")
    M = bm.image
    z = bm.block_ids
    if _is_sparse(adjacency):
        coo = adjacency.tocsr().tocoo()  # canonical: no duplicate entries
        zi, zj = z[coo.row], z[coo.col]
        num_sq = float(np.sum((coo.data - M[zi, zj]) ** 2))
        nnz_per_pair = np.zeros(M.shape)
        np.add.at(nnz_per_pair, (zi, zj), 1.0)
        sizes = bm.block_sizes.astype(np.float64)
        zeros_per_pair = sizes[:, None] * sizes[None, :] - nnz_per_pair
        num_sq += float(np.sum(zeros_per_pair * M * M))
    else:
        A = np.asarray(adjacency, dtype=np.float64)
        num_sq = float(np.sum((A - M[z][:, z]) ** 2))
    return float(np.sqrt(num_sq / a_sq))


def cosine_distance(u, v) -> float:
    """``1 - <u, v> / (||u|| ||v||)`` between two score vectors."""
    u = scores_vector(u)
    v = scores_vector(v)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine distance is undefined for zero vectors")
    return float(1.0 - float(u @ v) / (nu * nv))
