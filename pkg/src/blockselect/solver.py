"""Projected gradient descent over feature scores.

Starting from the uniform unit vector, each iteration composes the two
unit-normalized loss gradients with ratio ``beta_bar``, adds a sparsity
push ``gamma`` along the normalized all-ones direction, takes a constant
step, clamps at zero, and rescales back to the unit sphere.  The run
terminates at the iteration cap or once the total loss change stays below
``tolerance`` for 10 consecutive iterations.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .core import BlockModel, FeatureScores, scores_vector
from .errors import DegenerateStepError, InsufficientSupportError, NonFiniteError
from .objective import GRADIENT_MODES, ObjectiveContext, build_context, evaluate

__all__ = [
    "SolverConfig",
    "TraceRecord",
    "ObjectiveTrace",
    "combined_gradient",
    "pgd_step",
    "optimize",
    "top_d_features",
    "save_scores",
    "load_scores",
]

CONSECUTIVE_SMALL_DELTAS = 10


@dataclass
class SolverConfig:
    """Hyperparameters of one optimization run.

    ``beta_bar`` mixes the two normalized gradients (0 = reconstruction
    only, 1 = image-matching only); ``gamma`` weighs the sparsity push;
    ``eta`` is the constant step size.  ``seed`` keys nothing in the
    deterministic core loop but is echoed into run artifacts.
    """

    beta_bar: float = 0.6
    gamma: float = 0.0
    eta: float = 1e-2
    max_iterations: int = 500
    tolerance: float = 1e-6
    gradient_mode: str = "analytic"
    delta: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.beta_bar <= 1.0:
            raise ValueError("beta_bar must be in [0, 1]")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.eta <= 0:
            raise ValueError("eta must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.gradient_mode not in GRADIENT_MODES:
            raise ValueError(f"gradient_mode must be one of {GRADIENT_MODES}")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")


@dataclass
class TraceRecord:
    iteration: int
    loss_b: float
    loss_m: float
    loss_total: float
    grad_norm: float
    nnz: int


@dataclass
class ObjectiveTrace:
    """Per-iterate loss records plus how the run stopped."""

    records: list = field(default_factory=list)
    converged: bool = False
    stop_reason: str = ""
    warnings: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    @property
    def totals(self) -> np.ndarray:
        return np.array([rec.loss_total for rec in self.records])

    @property
    def final(self) -> TraceRecord:
        return self.records[-1]

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["iteration", "loss_b", "loss_m", "loss_total",
                             "grad_norm", "nnz"])
            for rec in self.records:
                writer.writerow([rec.iteration, repr(rec.loss_b), repr(rec.loss_m),
                                 repr(rec.loss_total), repr(rec.grad_norm), rec.nnz])


def combined_gradient(gb, gm, cfg: SolverConfig) -> np.ndarray:
    """``(1-b) gb/||gb|| + b gm/||gm|| + gamma 1/||1||``; vanished terms drop out."""
    gb = np.asarray(gb, dtype=np.float64)
    gm = np.asarray(gm, dtype=np.float64)
    if gb.shape != gm.shape:
        raise ValueError("gradient vectors must have equal length")
    out = np.zeros_like(gb)
    nb = np.linalg.norm(gb)
    nm = np.linalg.norm(gm)
    if nb > 0.0:
        out += (1.0 - cfg.beta_bar) / nb * gb
    if nm > 0.0:
        out += cfg.beta_bar / nm * gm
    if cfg.gamma != 0.0:
        out += cfg.gamma / np.sqrt(gb.size)
    return out


def pgd_step(r, grad, eta) -> FeatureScores:
    """One projected step: ``r - eta*grad``, clamp at 0, rescale to unit norm."""
    r = scores_vector(r)
    grad = np.asarray(grad, dtype=np.float64)
    clamped = np.maximum(r - eta * grad, 0.0)
    norm = np.linalg.norm(clamped)
    if norm == 0.0:
        raise DegenerateStepError(
            "projected step clamped every coordinate to zero (step size eta "
            "is too large for the current gradient scale)"
        )
    return FeatureScores(clamped / norm)


def optimize(net, bm: BlockModel, cfg: SolverConfig,
             ctx: ObjectiveContext | None = None, callback=None):
    """Run the full selection loop; returns ``(FeatureScores, ObjectiveTrace)``.

    ``ctx`` may be passed to reuse precomputed Grams across runs on the same
    (network, block model) pair.  ``callback(iteration, r)`` is invoked at
    every recorded iterate.
    """
    if ctx is None:
        ctx = build_context(net, bm, delta=cfg.delta)
    r = np.full(ctx.m, 1.0 / np.sqrt(ctx.m))
    trace = ObjectiveTrace()
    consecutive = 0
    prev_total = None
    t = 0
    while True:
        lb, lm, gb, gm = evaluate(ctx, r, mode=cfg.gradient_mode)
        nb, nm = np.linalg.norm(gb), np.linalg.norm(gm)
        if nb == 0.0:
            trace.warnings.append(
                f"iteration {t}: reconstruction gradient vanished; its term "
                "was dropped from the composition"
            )
        if nm == 0.0:
            trace.warnings.append(
                f"iteration {t}: image-matching gradient vanished; its term "
                "was dropped from the composition"
            )
        g = combined_gradient(gb, gm, cfg)
        total = lb + lm
        trace.records.append(TraceRecord(
            iteration=t, loss_b=lb, loss_m=lm, loss_total=total,
            grad_norm=float(np.linalg.norm(g)),
            nnz=int(np.count_nonzero(r)),
        ))
        if not np.isfinite([lb, lm]).all() or not np.isfinite(g).all():
            raise NonFiniteError(
                f"non-finite loss or gradient at iteration {t}", trace=trace
            )
        if callback is not None:
            callback(t, r.copy())
        if prev_total is not None and abs(total - prev_total) < cfg.tolerance:
            consecutive += 1
        else:
            consecutive = 0
        prev_total = total
        if consecutive >= CONSECUTIVE_SMALL_DELTAS:
            trace.converged = True
            trace.stop_reason = "tolerance"
            break
        if t >= cfg.max_iterations:
            trace.stop_reason = "max_iterations"
            break
        try:
            r = pgd_step(r, g, cfg.eta).values
        except DegenerateStepError as exc:
            exc.trace = trace
            raise
        t += 1
    return FeatureScores(r), trace


def top_d_features(scores, d: int) -> np.ndarray:
    """Indices of the ``d`` largest scores, descending; ties break upward.

    Zero entries carry no ranking information, so a score vector with fewer
    than ``d`` nonzeros is rejected (the error carries the nonzero count).
    """
    r = scores_vector(scores)
    if d < 1:
        raise ValueError("d must be at least 1")
    nnz = int(np.count_nonzero(r))
    if nnz < d:
        raise InsufficientSupportError(nnz, d)
    order = np.lexsort((np.arange(r.size), -r))
    return order[:d]


def save_scores(path, scores):
    """Serialize a score vector as a JSON array."""
    import json

    with open(path, "w", encoding="utf-8") as fh:
        json.dump([float(v) for v in scores_vector(scores)], fh)
        fh.write("\n")


def load_scores(path) -> FeatureScores:
    import json

    with open(path, encoding="utf-8") as fh:
        return FeatureScores(np.asarray(json.load(fh), dtype=np.float64))
