"""Greedy modularity maximization (Clauset, Newman & Moore, 2004).

Clusters found here serve as the unsupervised control against which the
lexicon's categories are compared.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass

import numpy as np

from .lexicon import CategoryAssignment
from .modularity import edge_weights


@dataclass(frozen=True)
class Partition:
    community_of: np.ndarray
    Q_trace: tuple[float, ...]

    @property
    def num_communities(self) -> int:
        return int(self.community_of.max()) + 1 if self.community_of.size else 0

    @property
    def n(self) -> int:
        return int(self.community_of.size)

    def communities(self) -> list[list[int]]:
        groups: list[list[int]] = [[] for _ in range(self.num_communities)]
        for node, c in enumerate(self.community_of.tolist()):
            groups[c].append(node)
        return groups

    @property
    def Q(self) -> float:
        return self.Q_trace[-1]

    def to_dict(self) -> dict:
        return {"communities": self.communities(), "Q_trace": list(self.Q_trace)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def greedy_modularity_communities(g) -> Partition:
    """Agglomerate communities by the largest modularity gain.

    ``g`` is a :class:`~catmod.simgraph.KnnGraph` or a 0/1 adjacency
    matrix; the undirected union graph A OR A^T is clustered. Only
    communities joined by at least one edge are merge candidates. Equal
    gains are resolved toward the lexicographically smallest
    (community, community) pair, and merging stops once no pair has a
    positive gain.

    Returns a :class:`Partition` whose ``Q_trace`` holds the modularity of
    the singleton start followed by the value after every merge.
    """
    w = edge_weights(g, "union-simple")
    n = w.shape[0]
    two_m = float(w.sum())
    degrees = w.sum(axis=1).astype(np.float64)
    a = (degrees / two_m).tolist()

    # dq[i][j] = 2 (e_ij - a_i a_j) for adjacent communities i, j
    dq: list[dict[int, float]] = [dict() for _ in range(n)]
    rows, cols = np.nonzero(w)
    for i, j in zip(rows.tolist(), cols.tolist()):
        dq[i][j] = 2.0 * (1.0 / two_m - a[i] * a[j])

    heap = [(-v, i, j) for i in range(n) for j, v in dq[i].items() if i < j]
    heapq.heapify(heap)

    q = -sum(x * x for x in a)
    trace = [q]
    alive = [True] * n
    members = [[i] for i in range(n)]

    while heap:
        neg, i, j = heapq.heappop(heap)
        if not (alive[i] and alive[j]) or dq[i].get(j) != -neg:
            continue  # stale entry
        gain = -neg
        if gain <= 0.0:
            break
        # merge j into i (i < j), updating gains to every neighbor of either
        ni, nj = dq[i], dq[j]
        merged: dict[int, float] = {}
        for c in set(ni) | set(nj):
            if c in (i, j):
                continue
            if c in ni and c in nj:
                val = ni[c] + nj[c]
            elif c in ni:
                val = ni[c] - 2.0 * a[j] * a[c]
            else:
                val = nj[c] - 2.0 * a[i] * a[c]
            merged[c] = val
        for c in ni:
            if c != j:
                del dq[c][i]
        for c in nj:
            if c != i:
                del dq[c][j]
        dq[j] = {}
        alive[j] = False
        dq[i] = merged
        for c, val in merged.items():
            dq[c][i] = val
            heapq.heappush(heap, (-val, min(i, c), max(i, c)))
        a[i] += a[j]
        a[j] = 0.0
        members[i].extend(members[j])
        members[j] = []
        q += gain
        trace.append(q)

    community_of = np.empty(n, dtype=np.int64)
    next_id = 0
    seen: dict[int, int] = {}
    root_of = {}
    for root, nodes in enumerate(members):
        for node in nodes:
            root_of[node] = root
    for node in range(n):
        root = root_of[node]
        if root not in seen:
            seen[root] = next_id
            next_id += 1
        community_of[node] = seen[root]
    community_of.setflags(write=False)
    return Partition(community_of, tuple(trace))


def partition_as_assignment(p: Partition) -> CategoryAssignment:
    labels = tuple(f"community-{c}" for c in range(p.num_communities))
    return CategoryAssignment("custom", p.community_of, labels)
