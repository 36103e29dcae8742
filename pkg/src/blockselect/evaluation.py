"""Clustering-based quality measurement for selected features.

Selected feature columns are row-normalized and clustered with K-means
(scikit-learn's implementation, one init per seeded run); predictions are
scored against ground-truth labels with matched accuracy (maximum-weight
assignment between clusters and classes) and normalized mutual
information (mutual information over the larger of the two entropies).
Repeated runs under consecutive seeds compensate for K-means
initialization randomness.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linear_sum_assignment
from sklearn.cluster import KMeans

from .core import AttributedNetwork, scores_vector
from .solver import top_d_features

__all__ = [
    "EvaluationReport",
    "normalize_rows",
    "kmeans_cluster",
    "accuracy",
    "nmi",
    "evaluate_selection",
    "save_report",
]


def normalize_rows(X):
    """Scale every nonzero row to unit Euclidean norm; zero rows stay zero."""
    if sp.issparse(X):
        X = X.tocsr()
        norms = np.sqrt(np.asarray(X.multiply(X).sum(axis=1)).ravel())
        scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
        return sp.diags(scale) @ X
    X = np.asarray(X, dtype=np.float64)
    norms = np.linalg.norm(X, axis=1)
    scale = np.where(norms > 0, norms, 1.0)
    return X / scale[:, None]


def kmeans_cluster(X, k, seed, max_iters=300) -> np.ndarray:
    """Lloyd's K-means with k-means++ seeding; deterministic per seed."""
    n = X.shape[0]
    if k > n:
        raise ValueError(f"cannot form {k} clusters from {n} points")
    model = KMeans(
        n_clusters=k, init="k-means++", n_init=1, max_iter=max_iters,
        random_state=seed, algorithm="lloyd",
    )
    return model.fit_predict(X)


def _contingency(pred, truth):
    pred = np.asarray(pred, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ValueError(
            f"label sequences must have equal length, got {pred.shape} "
            f"and {truth.shape}"
        )
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    table = np.zeros((pi.max() + 1, ti.max() + 1))
    np.add.at(table, (pi, ti), 1.0)
    return table


def accuracy(pred, truth) -> float:
    """Fraction of points matched after the best cluster-to-class assignment."""
    table = _contingency(pred, truth)
    rows, cols = linear_sum_assignment(table, maximize=True)
    return float(table[rows, cols].sum() / table.sum())


def nmi(pred, truth) -> float:
    """Mutual information normalized by the larger marginal entropy.

    Both partitions being single clusters makes the denominator zero; the
    value is defined as 0 there so the metric stays total.
    """
    table = _contingency(pred, truth)
    n = table.sum()
    joint = table / n
    p_pred = joint.sum(axis=1)
    p_truth = joint.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = joint / np.outer(p_pred, p_truth)
        mi_terms = joint * np.log(ratio)
    mi = float(np.where(joint > 0, mi_terms, 0.0).sum())
    h_pred = float(-np.sum(p_pred[p_pred > 0] * np.log(p_pred[p_pred > 0])))
    h_truth = float(-np.sum(p_truth[p_truth > 0] * np.log(p_truth[p_truth > 0])))
    denom = max(h_pred, h_truth)
    if denom == 0.0:
        return 0.0
    return mi / denom


@dataclass
class EvaluationReport:
    """ACC/NMI statistics over repeated K-means runs at one value of d."""

    d: int
    runs: int
    acc_mean: float
    acc_std: float
    nmi_mean: float
    nmi_std: float
    per_run: list  # (seed, acc, nmi) triples

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "runs": self.runs,
            "acc_mean": self.acc_mean,
            "acc_std": self.acc_std,
            "nmi_mean": self.nmi_mean,
            "nmi_std": self.nmi_std,
            "per_run": [
                {"seed": s, "acc": a, "nmi": m} for s, a, m in self.per_run
            ],
        }


def save_report(path, report: EvaluationReport):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")


def evaluate_selection(net: AttributedNetwork, scores, d, runs=20,
                       base_seed=0) -> EvaluationReport:
    """Cluster the top-``d`` features ``runs`` times and aggregate ACC/NMI.

    K-means uses ``k`` equal to the label class count and seeds
    ``base_seed .. base_seed + runs - 1``.
    """
    if net.labels is None:
        raise ValueError("evaluation requires ground-truth labels")
    r = scores_vector(scores)
    selected = top_d_features(r, d)
    X = normalize_rows(net.features[:, selected])
    k = net.n_classes
    per_run = []
    for i in range(runs):
        seed = base_seed + i
        pred = kmeans_cluster(X, k, seed)
        per_run.append((seed, accuracy(pred, net.labels), nmi(pred, net.labels)))
    accs = np.array([a for _, a, _ in per_run])
    nmis = np.array([m for _, _, m in per_run])
    return EvaluationReport(
        d=int(d), runs=int(runs),
        acc_mean=float(accs.mean()), acc_std=float(accs.std()),
        nmi_mean=float(nmis.mean()), nmi_std=float(nmis.std()),
        per_run=per_run,
    )
