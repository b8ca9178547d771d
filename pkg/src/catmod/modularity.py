"""Categorical modularity of a k-NN graph.

For category c with expected edge-end fraction a_c and observed
intra-category edge fraction e_c::

    Q      = sum_c (e_c - a_c**2)
    Q_max  = 1 - sum_c a_c**2
    Q_norm = Q / Q_max
    Q_c    = (e_c - a_c**2) / Q_max

The k-NN adjacency A is generally asymmetric. Two readings of the
undirected formulas are supported:

``multigraph-sum``
    Use B = A + A^T as a multigraph: mutual neighbors contribute two edges.
    m = N * k, degrees are row sums of B.
``union-simple``
    Use the simple graph A OR A^T: mutual neighbors contribute one edge.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import DegenerateInputError, GraphError
from .lexicon import CategoryAssignment
from .simgraph import KnnGraph

MODES = ("multigraph-sum", "union-simple")
DEFAULT_MODE = "multigraph-sum"
_QMAX_EPS = 1e-12


def edge_weights(g, mode: str = DEFAULT_MODE) -> np.ndarray:
    """Symmetric weight matrix W for ``mode``; sum(W) equals 2m."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    a = np.asarray(getattr(g, "adjacency", g))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise GraphError("adjacency must be square")
    a = (a != 0).astype(np.int64)
    np.fill_diagonal(a, 0)
    if mode == "multigraph-sum":
        return a + a.T
    return ((a + a.T) > 0).astype(np.int64)


def _one_hot(assign: CategoryAssignment, n: int) -> np.ndarray:
    if assign.n != n:
        raise ValueError(f"assignment covers {assign.n} words but the graph has {n} nodes")
    h = np.zeros((n, assign.num_categories))
    h[np.arange(n), assign.category_of] = 1.0
    return h


def _fractions(w: np.ndarray, assign: CategoryAssignment) -> tuple[np.ndarray, np.ndarray]:
    two_m = float(w.sum())
    if two_m == 0:
        raise DegenerateInputError("graph has no edges")
    h = _one_hot(assign, w.shape[0])
    degrees = w.sum(axis=1).astype(np.float64)
    a = (h.T @ degrees) / two_m
    e = np.sum(h * (w.astype(np.float64) @ h), axis=0) / two_m
    return a, e


def expected_fractions(g, assign: CategoryAssignment, mode: str = DEFAULT_MODE) -> np.ndarray:
    """a_c: fraction of edge ends attached to category c."""
    return _fractions(edge_weights(g, mode), assign)[0]


def observed_fractions(g, assign: CategoryAssignment, mode: str = DEFAULT_MODE) -> np.ndarray:
    """e_c: fraction of edges with both ends in category c."""
    return _fractions(edge_weights(g, mode), assign)[1]


@dataclass(frozen=True)
class ModularityReport:
    level: Union[int, str]
    k: Optional[int]
    mode: str
    labels: tuple[str, ...]
    a: np.ndarray
    e: np.ndarray
    Q: float
    Q_max: float
    Q_norm: float
    Q_c: np.ndarray

    def category_scores(self) -> dict[str, float]:
        return dict(zip(self.labels, self.Q_c.tolist()))

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "k": self.k,
            "mode": self.mode,
            "Q": self.Q,
            "Q_max": self.Q_max,
            "Q_norm": self.Q_norm,
            "categories": list(self.labels),
            "a": self.a.tolist(),
            "e": self.e.tolist(),
            "Q_c": self.Q_c.tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ModularityReport":
        return cls(
            level=d["level"], k=d["k"], mode=d["mode"], labels=tuple(d["categories"]),
            a=np.array(d["a"], dtype=np.float64), e=np.array(d["e"], dtype=np.float64),
            Q=d["Q"], Q_max=d["Q_max"], Q_norm=d["Q_norm"], Q_c=np.array(d["Q_c"], dtype=np.float64),
        )


def modularity_report(g, assign: CategoryAssignment, mode: str = DEFAULT_MODE) -> ModularityReport:
    w = edge_weights(g, mode)
    a, e = _fractions(w, assign)
    contrib = e - a ** 2
    q = float(contrib.sum())
    q_max = float(1.0 - np.sum(a ** 2))
    if q_max <= _QMAX_EPS:
        raise DegenerateInputError(
            "degenerate input: Q_max is 0, all edge ends fall in a single category, so normalized modularity is undefined"
        )
    k = g.k if isinstance(g, KnnGraph) else None
    return ModularityReport(
        level=assign.level, k=k, mode=mode, labels=tuple(assign.labels),
        a=a, e=e, Q=q, Q_max=q_max, Q_norm=q / q_max, Q_c=contrib / q_max,
    )


def modularity(g, assign: CategoryAssignment, mode: str = DEFAULT_MODE) -> float:
    """Unnormalized Q; unlike the report it is defined for one category."""
    a, e = _fractions(edge_weights(g, mode), assign)
    return float(np.sum(e - a ** 2))
