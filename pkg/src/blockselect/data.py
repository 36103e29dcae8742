"""Dataset loading, on-disk formats, and synthetic planted instances.

On-disk layout for a dataset (all UTF-8 text):

* edge list: one ``u v`` pair per line, ``#`` starts a comment line;
* features: either a dense CSV (one row per node) or ``row col value``
  triplets;
* labels: one integer per line, aligned to node index;
* manifest: JSON naming the three files plus ``directed``,
  ``feature_format`` and ``zero_indexed`` flags.

The feature/label files define the node universe ``0..n-1``.  Edge
endpoints beyond that range are nodes without an attribute row; they are
dropped together with their incident edges (citation corpora ship a few
such nodes).  Negative ids are rejected.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .core import AttributedNetwork

__all__ = [
    "DatasetManifest",
    "PlantedSpec",
    "load_manifest",
    "load_dataset",
    "load_features",
    "load_labels",
    "save_dataset",
    "generate_planted",
    "undirected_edge_count",
]

FEATURE_FORMATS = ("dense_csv", "sparse_triplet")


@dataclass
class DatasetManifest:
    name: str
    edges_path: str
    features_path: str
    labels_path: str | None
    directed: bool
    feature_format: str
    zero_indexed: bool = True

    def __post_init__(self):
        if self.feature_format not in FEATURE_FORMATS:
            raise ValueError(
                f"feature_format must be one of {FEATURE_FORMATS}, "
                f"got {self.feature_format!r}"
            )


def load_manifest(path) -> DatasetManifest:
    """Read a manifest JSON; relative paths resolve against its directory."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    manifest = DatasetManifest(**raw)
    base = os.path.dirname(os.path.abspath(path))
    for attr in ("edges_path", "features_path", "labels_path"):
        value = getattr(manifest, attr)
        if value is not None and not os.path.isabs(value):
            setattr(manifest, attr, os.path.join(base, value))
    return manifest


def _data_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            yield lineno, stripped


def load_labels(path) -> np.ndarray:
    labels = []
    for lineno, line in _data_lines(path):
        try:
            labels.append(int(line))
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed label {line!r}") from None
    return np.asarray(labels, dtype=np.int64)


def load_features(path, feature_format, n=None, m=None):
    """Parse a feature file into an n x m nonnegative matrix.

    ``dense_csv`` returns a dense array; ``sparse_triplet`` a CSR matrix.
    Dimensions are taken from the file when not declared.  Negative values
    are rejected with their coordinates.
    """
    if feature_format == "dense_csv":
        rows = []
        for lineno, line in enumerate(open(path, encoding="utf-8"), start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(v) for v in line.split(",")])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed CSV row") from None
        Y = np.asarray(rows, dtype=np.float64)
        if Y.ndim != 2:
            raise ValueError(f"{path}: rows have inconsistent lengths")
        if n is not None and Y.shape[0] != n:
            raise ValueError(f"{path}: expected {n} rows, found {Y.shape[0]}")
        if m is not None and Y.shape[1] != m:
            raise ValueError(f"{path}: expected {m} columns, found {Y.shape[1]}")
        if (Y < 0).any():
            i, j = np.argwhere(Y < 0)[0]
            raise ValueError(f"{path}: negative feature value at row {i}, col {j}")
        return Y

    if feature_format != "sparse_triplet":
        raise ValueError(f"unknown feature format {feature_format!r}")
    rows, cols, vals = [], [], []
    for lineno, line in _data_lines(path):
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 'row col value'")
        try:
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed triplet") from None
        if i < 0 or j < 0:
            raise ValueError(f"{path}:{lineno}: negative index ({i}, {j})")
        if v < 0:
            raise ValueError(f"{path}: negative feature value at row {i}, col {j}")
        rows.append(i)
        cols.append(j)
        vals.append(v)
    if n is None:
        n = max(rows) + 1 if rows else 0
    if m is None:
        m = max(cols) + 1 if cols else 0
    if rows and (max(rows) >= n or max(cols) >= m):
        bad = next((r, c) for r, c in zip(rows, cols) if r >= n or c >= m)
        raise ValueError(f"{path}: triplet {bad} exceeds declared shape ({n}, {m})")
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, m))


def _load_edges(path, zero_indexed):
    pairs = []
    for lineno, line in _data_lines(path):
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'u v'")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed edge") from None
        if not zero_indexed:
            u, v = u - 1, v - 1
        if u < 0 or v < 0:
            raise ValueError(f"{path}:{lineno}: node id out of range ({u}, {v})")
        pairs.append((u, v))
    return pairs


def load_dataset(manifest: DatasetManifest) -> AttributedNetwork:
    """Load and preprocess a dataset described by ``manifest``.

    Edges are symmetrized (directed input gets both directions), duplicates
    collapse to weight 1, endpoints without a feature row are dropped with
    their incident edges, and labels are aligned to the kept nodes.
    """
    labels = load_labels(manifest.labels_path) if manifest.labels_path else None
    n = labels.size if labels is not None else None
    Y = load_features(manifest.features_path, manifest.feature_format, n=n)
    n = Y.shape[0]
    if labels is not None and labels.size != n:
        raise ValueError(
            f"{manifest.name}: {labels.size} labels for {n} feature rows"
        )
    pairs = _load_edges(manifest.edges_path, manifest.zero_indexed)
    kept = [(u, v) for u, v in pairs if u < n and v < n]
    rows, cols = [], []
    for u, v in kept:
        rows.append(u)
        cols.append(v)
        rows.append(v)
        cols.append(u)
    A = sp.csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(n, n), dtype=np.float64
    )
    A.data[:] = 1.0  # duplicate edges (and both directions) collapse to weight 1
    if labels is not None:
        # relabel to contiguous ids in first-appearance-sorted order
        uniq = np.unique(labels)
        remap = {c: i for i, c in enumerate(uniq)}
        labels = np.asarray([remap[c] for c in labels], dtype=np.int64)
    return AttributedNetwork(A, Y, labels=labels)


def undirected_edge_count(adjacency) -> int:
    """Number of unordered node pairs with an edge (self-loops count once)."""
    if sp.issparse(adjacency):
        nnz = adjacency.count_nonzero()
        diag = int(np.count_nonzero(adjacency.diagonal()))
    else:
        nnz = int(np.count_nonzero(adjacency))
        diag = int(np.count_nonzero(np.diag(adjacency)))
    return (nnz + diag) // 2


def save_dataset(net: AttributedNetwork, out_dir, name="dataset",
                 feature_format="dense_csv") -> str:
    """Write a network in the loader's formats; returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    edges_path = os.path.join(out_dir, "edges.txt")
    A = net.adjacency if sp.issparse(net.adjacency) else sp.csr_matrix(net.adjacency)
    coo = sp.triu(A).tocoo()
    with open(edges_path, "w", encoding="utf-8") as fh:
        for u, v in zip(coo.row, coo.col):
            fh.write(f"{u} {v}\n")

    if feature_format == "dense_csv":
        features_path = os.path.join(out_dir, "features.csv")
        Y = net.features
        Y = np.asarray(Y.todense()) if sp.issparse(Y) else Y
        with open(features_path, "w", encoding="utf-8") as fh:
            for row in Y:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
    elif feature_format == "sparse_triplet":
        features_path = os.path.join(out_dir, "features.txt")
        Yc = sp.coo_matrix(net.features)
        with open(features_path, "w", encoding="utf-8") as fh:
            for i, j, v in zip(Yc.row, Yc.col, Yc.data):
                fh.write(f"{i} {j} {float(v)!r}\n")
    else:
        raise ValueError(f"unknown feature format {feature_format!r}")

    labels_path = None
    if net.labels is not None:
        labels_path = os.path.join(out_dir, "labels.txt")
        with open(labels_path, "w", encoding="utf-8") as fh:
            fh.writelines(f"{c}\n" for c in net.labels)

    manifest = {
        "name": name,
        "edges_path": os.path.basename(edges_path),
        "features_path": os.path.basename(features_path),
        "labels_path": os.path.basename(labels_path) if labels_path else None,
        "directed": False,
        "feature_format": feature_format,
        "zero_indexed": True,
    }
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest_path


@dataclass
class PlantedSpec:
    """Parameters for a synthetic planted-partition instance."""

    n: int
    k: int
    d_informative: int
    d_noise: int
    intra_p: float
    inter_p: float
    signal_strength: float
    seed: int = 0

    def __post_init__(self):
        for field in ("n", "k", "d_informative", "d_noise"):
            if getattr(self, field) < 1:
                raise ValueError(f"{field} must be positive")
        if not self.intra_p > self.inter_p:
            raise ValueError("intra_p must exceed inter_p")
        for field in ("intra_p", "inter_p"):
            if not 0.0 <= getattr(self, field) <= 1.0:
                raise ValueError(f"{field} must be a probability")
        if self.signal_strength < 0:
            raise ValueError("signal_strength must be nonnegative")


def generate_planted(spec: PlantedSpec) -> AttributedNetwork:
    """Sample a planted-partition network with informative + noise features.

    Nodes split into ``k`` (near-)equal blocks; edges appear independently
    with probability ``intra_p`` inside a block and ``inter_p`` across.
    Every feature starts as uniform(0, 1) noise; informative feature ``j``
    additionally shifts its associated block (``j % k``) up by
    ``signal_strength``, so at zero signal the informative columns are
    indistinguishable from the noise columns.  Block ids double as
    ground-truth labels.
    """
    rng = np.random.default_rng(spec.seed)
    n, k = spec.n, spec.k
    sizes = np.full(k, n // k)
    sizes[: n % k] += 1
    ids = np.repeat(np.arange(k), sizes)

    probs = np.where(ids[:, None] == ids[None, :], spec.intra_p, spec.inter_p)
    upper = np.triu(rng.random((n, n)) < probs, 1).astype(np.float64)
    A = upper + upper.T

    m = spec.d_informative + spec.d_noise
    Y = rng.uniform(0.0, 1.0, size=(n, m))
    for j in range(spec.d_informative):
        Y[ids == j % k, j] += spec.signal_strength
    return AttributedNetwork(A, Y, labels=ids)
