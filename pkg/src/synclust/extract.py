"""Turn a converged configuration into cluster labels and isolates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import InvalidInputError
from .geometry import format_float, write_rows

ISOLATE = -1


@dataclass(frozen=True)
class ClusteringResult:
    labels: np.ndarray
    cluster_count: int
    isolate_count: int
    final_positions: np.ndarray

    @property
    def isolates(self) -> np.ndarray:
        return self.labels == ISOLATE

    def clusters(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.labels == c) for c in range(self.cluster_count)]


def extract_clusters(final_positions, epsilon: float) -> ClusteringResult:
    """Connected components of the graph joining points within ``epsilon``.

    Singleton components become isolates (label -1). Cluster ids are
    0-based and ordered by each cluster's smallest point id.
    """
    X = np.ascontiguousarray(final_positions, dtype=np.float64)
    if X.ndim != 2:
        raise InvalidInputError("positions must be an (n, d) array")
    if not (np.isfinite(epsilon) and epsilon > 0):
        raise InvalidInputError("epsilon must be positive")
    if not np.isfinite(X).all():
        raise InvalidInputError("positions must be finite")
    n = X.shape[0]
    if n == 0:
        return ClusteringResult(np.zeros(0, dtype=np.int64), 0, 0, X)

    # exact duplicates are common after synchronization; pair them up for free
    uniq, inverse = np.unique(X, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    pairs = cKDTree(uniq).query_pairs(float(epsilon), output_type="ndarray")
    m = uniq.shape[0]
    graph = coo_matrix((np.ones(len(pairs), dtype=np.int8), (pairs[:, 0], pairs[:, 1])), shape=(m, m))
    _, comp = connected_components(graph, directed=False)
    comp = comp[inverse]

    sizes = np.bincount(comp)
    labels = np.full(n, ISOLATE, dtype=np.int64)
    remap = {}
    for i, c in enumerate(comp.tolist()):
        if sizes[c] < 2:
            continue
        if c not in remap:
            remap[c] = len(remap)
        labels[i] = remap[c]
    isolates = int(np.count_nonzero(labels == ISOLATE))
    return ClusteringResult(labels, len(remap), isolates, X)


def write_result(result: ClusteringResult, point_labels, path) -> None:
    """One row per point: label, cluster id (-1 for isolates), final coordinates."""
    d = result.final_positions.shape[1]
    header = ["label", "cluster"] + [f"x{k + 1}" for k in range(d)]
    rows = ([int(lab), int(c)] + [format_float(v) for v in row]
            for lab, c, row in zip(point_labels, result.labels, result.final_positions))
    write_rows(path, header, rows)
