"""The two loss terms steering feature scores toward a block model.

``loss_b`` measures how badly the fixed allocation violates structural
equivalence on the induced graph (relative reconstruction error of
``Y diag(r) Y^T``); ``loss_m`` measures, row-wise, the KL divergence
between the induced image matrix's conditional connection probabilities
and the structural graph's.

Everything evaluated per iteration runs on two m x m Gram matrices
(``G1 = Y'Y`` and ``G2 = Y'F D^-1 F'Y``), so the per-step cost is
independent of the node count; ``G2`` has rank at most k and is kept in
factored form ``E'E`` with ``E = D^(1/2) D_bar`` so it is never
materialized.  The ``*_reference`` functions are the slow definitional
forms kept for the test-suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import BlockModel, block_mean_features, scores_vector

__all__ = [
    "ObjectiveContext",
    "build_context",
    "loss_b",
    "loss_m",
    "grad_b",
    "grad_m",
    "evaluate",
    "loss_b_reference",
    "grad_b_reference",
    "grad_m_reference",
    "dq_dr",
]

GRADIENT_MODES = ("analytic", "paper_literal")


@dataclass
class ObjectiveContext:
    """Precomputed quantities shared by all loss/gradient evaluations.

    Immutable after construction; safe to share across workers.
    """

    gram_full: object          # G1 = Y'Y (m x m, dense or sparse CSR)
    gram_full_sq: object       # G1 entrywise squared, same storage
    block_means: np.ndarray    # D_bar = D^-1 F'Y (k x m)
    scaled_means: np.ndarray   # E = D^(1/2) D_bar, so G2 = E'E
    target_probs: np.ndarray   # P (k x k, row-stochastic, entries > 0)
    delta: float

    @property
    def m(self) -> int:
        return self.block_means.shape[1]

    @property
    def k(self) -> int:
        return self.block_means.shape[0]

    @property
    def gram_block(self) -> np.ndarray:
        """Materialized ``G2 = Y'F D^-1 F'Y`` (m x m); small instances only."""
        return self.scaled_means.T @ self.scaled_means


def build_context(net, bm: BlockModel, delta: float = 1e-6) -> ObjectiveContext:
    """Precompute Grams, block means, and the target probability matrix.

    ``delta`` is added entrywise to the image matrix (and later to every
    induced image matrix) before row normalization, so the probability rows
    stay strictly positive.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    m_shift = bm.image + delta
    row_sums = m_shift.sum(axis=1, keepdims=True)
    if (row_sums <= 0).any():
        raise ValueError(
            "image matrix has an all-zero row and delta is zero; conditional "
            "connection probabilities are undefined"
        )
    P = m_shift / row_sums
    dbar = block_mean_features(bm.allocation, net.features)
    E = np.sqrt(bm.block_sizes.astype(np.float64))[:, None] * dbar
    Y = net.features
    if sp.issparse(Y):
        G1 = (Y.T @ Y).tocsr()
        G1_sq = G1.multiply(G1).tocsr()
    else:
        G1 = Y.T @ Y
        G1_sq = G1 * G1
    return ObjectiveContext(
        gram_full=G1,
        gram_full_sq=G1_sq,
        block_means=dbar,
        scaled_means=E,
        target_probs=P,
        delta=float(delta),
    )


def _denominator(ctx: ObjectiveContext, r: np.ndarray) -> float:
    """``||Y diag(r) Y^T||_F^2 = r' (G1 . G1) r``; must be positive."""
    den = float(r @ (ctx.gram_full_sq @ r))
    if den <= 0.0:
        raise ValueError(
            "||Y diag(r) Y^T||_F is zero (r vanishes on every informative "
            "feature); the relative reconstruction loss is undefined"
        )
    return den


def loss_b(ctx: ObjectiveContext, scores) -> float:
    """Relative reconstruction error of the induced graph under the allocation.

    ``1 - r'(G2 . G2)r / r'(G1 . G1)r``, algebraically equal to
    ``||A_hat - F Mhat(r) F'||_F^2 / ||A_hat||_F^2``.
    """
    r = scores_vector(scores)
    den = _denominator(ctx, r)
    W = (ctx.scaled_means * r) @ ctx.scaled_means.T
    return 1.0 - float(np.sum(W * W)) / den


def grad_b(ctx: ObjectiveContext, scores) -> np.ndarray:
    """Gradient of :func:`loss_b`: ``2[(1 - L_b)(G1.G1)r - (G2.G2)r] / r'(G1.G1)r``."""
    r = scores_vector(scores)
    den = _denominator(ctx, r)
    E = ctx.scaled_means
    W = (E * r) @ E.T
    cr = np.asarray(ctx.gram_full_sq @ r).ravel()
    br = ((W @ E) * E).sum(axis=0)
    lb = 1.0 - float(np.sum(W * W)) / den
    return 2.0 * (cr - br - lb * cr) / den


def _induced_probs(ctx: ObjectiveContext, r: np.ndarray):
    """Row-normalized ``Mhat(r) + delta``; returns (Q, row_sums)."""
    mhat = (ctx.block_means * r) @ ctx.block_means.T + ctx.delta
    s = mhat.sum(axis=1)
    if (s <= 0).any():
        raise ValueError(
            "a row of the induced image matrix sums to zero after the delta "
            "shift; increase delta or check the score vector"
        )
    return mhat / s[:, None], s


def loss_m(ctx: ObjectiveContext, scores) -> float:
    """Sum over blocks of KL(q_i || p_i) between induced and target rows.

    Uses the ``0 log 0 = 0`` convention; a positive q against a zero p is
    genuinely infinite (cannot happen for positive delta).
    """
    r = scores_vector(scores)
    Q, _ = _induced_probs(ctx, r)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = Q * (np.log(Q) - np.log(ctx.target_probs))
    return float(np.where(Q > 0, terms, 0.0).sum())


def grad_m(ctx: ObjectiveContext, scores, mode: str = "analytic") -> np.ndarray:
    """Gradient of :func:`loss_m` via ``tr(G' dQ/dr_l)`` per coordinate.

    ``mode="analytic"`` uses ``G = log(Q/P) + 1``, the calculus derivative
    of the KL sum (the constant contributes nothing since every row of
    ``dQ/dr_l`` sums to zero).  ``mode="paper_literal"`` uses
    ``G = log(Q/P) + P`` instead, reproducing the published update
    exactly; it is not the exact derivative, so only the analytic mode
    passes finite-difference checks.
    """
    if mode not in GRADIENT_MODES:
        raise ValueError(f"mode must be one of {GRADIENT_MODES}, got {mode!r}")
    r = scores_vector(scores)
    Q, s = _induced_probs(ctx, r)
    P = ctx.target_probs
    G = np.log(Q / P) + (P if mode == "paper_literal" else 1.0)
    H = G / s[:, None]
    dbar = ctx.block_means
    quad = ((H @ dbar) * dbar).sum(axis=0)          # d_l' H d_l per feature
    w = (H * Q).sum(axis=1)                          # row sums of H . Q
    col = dbar.sum(axis=0)                           # 1' d_l per feature
    return quad - col * (dbar.T @ w)


def evaluate(ctx: ObjectiveContext, scores, mode: str = "analytic"):
    """Both losses and both gradients, sharing intermediates.

    Returns ``(loss_b, loss_m, grad_b, grad_m)``; equivalent to calling the
    four functions separately but roughly halves per-iteration work, which
    matters in the solver's inner loop.
    """
    if mode not in GRADIENT_MODES:
        raise ValueError(f"mode must be one of {GRADIENT_MODES}, got {mode!r}")
    r = scores_vector(scores)
    den = _denominator(ctx, r)
    E = ctx.scaled_means
    W = (E * r) @ E.T
    cr = np.asarray(ctx.gram_full_sq @ r).ravel()
    br = ((W @ E) * E).sum(axis=0)
    lb = 1.0 - float(np.sum(W * W)) / den
    gb = 2.0 * (cr - br - lb * cr) / den

    Q, s = _induced_probs(ctx, r)
    P = ctx.target_probs
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = Q * (np.log(Q) - np.log(P))
    lm = float(np.where(Q > 0, terms, 0.0).sum())
    G = np.log(Q / P) + (P if mode == "paper_literal" else 1.0)
    H = G / s[:, None]
    dbar = ctx.block_means
    quad = ((H @ dbar) * dbar).sum(axis=0)
    w = (H * Q).sum(axis=1)
    gm = quad - dbar.sum(axis=0) * (dbar.T @ w)
    return lb, lm, gb, gm


def dq_dr(ctx: ObjectiveContext, scores, l: int) -> np.ndarray:
    """``dQ/dr_l`` as an explicit k x k matrix (reference form).

    ``diag(1/s) [ d_l d_l' - (1'd_l) diag(d_l) Q ]`` where ``d_l`` is column
    ``l`` of the block means and ``s`` the delta-shifted row sums.
    """
    r = scores_vector(scores)
    Q, s = _induced_probs(ctx, r)
    d = ctx.block_means[:, l]
    outer = np.outer(d, d) - d.sum() * (d[:, None] * Q)
    return outer / s[:, None]


def grad_m_reference(ctx: ObjectiveContext, scores, mode: str = "analytic") -> np.ndarray:
    """Coordinate-by-coordinate loop over ``tr(G' dQ/dr_l)``; tests only."""
    if mode not in GRADIENT_MODES:
        raise ValueError(f"mode must be one of {GRADIENT_MODES}, got {mode!r}")
    r = scores_vector(scores)
    Q, _ = _induced_probs(ctx, r)
    P = ctx.target_probs
    G = np.log(Q / P) + (P if mode == "paper_literal" else 1.0)
    return np.array([float(np.sum(G * dq_dr(ctx, scores, l))) for l in range(ctx.m)])


def _dense_parts(features, allocation):
    Y = np.asarray(features.todense()) if sp.issparse(features) else np.asarray(features)
    F = np.asarray(allocation, dtype=np.float64)
    proj = F @ np.diag(1.0 / F.sum(axis=0)) @ F.T
    return Y, proj


def loss_b_reference(features, allocation, scores) -> float:
    """Definitional ``||A_hat - F Mhat F'||^2 / ||A_hat||^2``; materializes n x n."""
    r = scores_vector(scores)
    Y, proj = _dense_parts(features, allocation)
    a_hat = (Y * r) @ Y.T
    den = float(np.sum(a_hat * a_hat))
    if den <= 0.0:
        raise ValueError("induced graph is identically zero")
    resid = a_hat - proj @ a_hat @ proj
    return float(np.sum(resid * resid)) / den


def grad_b_reference(features, allocation, scores) -> np.ndarray:
    """The literal published gradient of the reconstruction loss; tests only.

    ``2 diag(Y'YRY'Y + Yh'Yh R Yh'Yh - 2 Yh'Y R Y'Yh) / ||YRY'||_F^2
    - 2 L_b diag(Y'Y R Y'Y) / ||YRY'||_F^2`` with ``Yh = F D^-1 F'Y``.
    """
    r = scores_vector(scores)
    Y, proj = _dense_parts(features, allocation)
    Yh = proj @ Y
    YtY = Y.T @ Y
    YhtYh = Yh.T @ Yh
    YhtY = Yh.T @ Y
    a_hat = (Y * r) @ Y.T
    den = float(np.sum(a_hat * a_hat))
    if den <= 0.0:
        raise ValueError("induced graph is identically zero")
    lb = loss_b_reference(features, allocation, r)
    first = np.diag(YtY @ (r[:, None] * YtY))
    second = np.diag(YhtYh @ (r[:, None] * YhtYh))
    third = np.diag(YhtY @ (r[:, None] * YhtY.T))
    return (2.0 * (first + second - 2.0 * third) - 2.0 * lb * first) / den
