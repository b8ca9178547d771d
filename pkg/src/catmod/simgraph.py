"""Cosine similarity matrices and k-nearest-neighbor graphs."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from os import PathLike
from typing import Union

import numpy as np

from .errors import GraphError


class ZeroVectorWarning(UserWarning):
    pass


def cosine_similarity(u, v) -> float:
    """Cosine of the angle between ``u`` and ``v``; 0.0 if either is zero."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape} vs {v.shape}")
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        warnings.warn("cosine similarity with a zero vector is taken as 0", ZeroVectorWarning, stacklevel=2)
        return 0.0
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


@dataclass(frozen=True)
class SimilarityMatrix:
    values: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]


def similarity_matrix(ws) -> SimilarityMatrix:
    """Pairwise cosine similarities of the rows of ``ws``.

    ``ws`` is a :class:`~catmod.vecstore.ResolvedWordSet` or an N x d array.
    The upper triangle is mirrored so the result is exactly symmetric.
    """
    vectors = np.asarray(getattr(ws, "vectors", ws), dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] < 2:
        raise GraphError("need an N x d matrix with N >= 2")
    norms = np.linalg.norm(vectors, axis=1)
    zero = norms == 0.0
    if zero.any():
        warnings.warn(f"{int(zero.sum())} zero vectors; their similarities are taken as 0",
                      ZeroVectorWarning, stacklevel=2)
    unit = vectors / np.where(zero, 1.0, norms)[:, None]
    gram = unit @ unit.T
    upper = np.triu(gram, 1)
    values = upper + upper.T
    np.fill_diagonal(values, np.where(zero, 0.0, 1.0))
    np.clip(values, -1.0, 1.0, out=values)
    values.setflags(write=False)
    return SimilarityMatrix(values)


@dataclass(frozen=True)
class KnnGraph:
    """Directed k-NN graph; row i of ``adjacency`` marks the k neighbors of i."""

    adjacency: np.ndarray
    k: int

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def m(self) -> int:
        """Number of directed edges (N * k)."""
        return int(self.adjacency.sum())

    @property
    def sym_weights(self) -> np.ndarray:
        """B = A + A^T, entries in {0, 1, 2}."""
        a = self.adjacency.astype(np.int64)
        return a + a.T

    @property
    def union(self) -> np.ndarray:
        """Undirected simple graph A OR A^T as a 0/1 matrix."""
        a = self.adjacency.astype(bool)
        return (a | a.T).astype(np.int64)

    def edges(self) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(self.adjacency)
        return list(zip(rows.tolist(), cols.tolist()))


def knn_graph(sim, k: int) -> KnnGraph:
    """Select, for each row, the k most similar other words.

    Ties are broken in favor of the smaller column index; a word is never
    its own neighbor.
    """
    values = np.asarray(getattr(sim, "values", sim), dtype=np.float64)
    n = values.shape[0]
    if not isinstance(k, (int, np.integer)) or not 1 <= k <= n - 1:
        raise GraphError(f"k must be an integer in [1, {n - 1}], got {k!r}")
    adjacency = np.zeros((n, n), dtype=np.int8)
    for i in range(n):
        row = -values[i].copy()
        row[i] = np.inf
        # stable sort on negated similarity keeps ascending index among ties
        nearest = np.argsort(row, kind="stable")[:k]
        adjacency[i, nearest] = 1
    adjacency.setflags(write=False)
    return KnnGraph(adjacency, int(k))


def write_edge_list(g: KnnGraph, path: Union[str, PathLike]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, j in g.edges():
            fh.write(f"{i}\t{j}\n")
