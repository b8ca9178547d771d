"""Independent oracles and synthetic-data generators for the test suite.

Nothing here imports the code under test's numerical paths; oracles are
literal loops over the definitions.
"""

import itertools
import math

import numpy as np


# -- data generators --------------------------------------------------------


def clustered_vectors(n_clusters, per_cluster, dim, noise, rng, spread=1.0):
    """Gaussian blobs around mutually orthogonal cluster centers."""
    assert dim >= n_clusters
    centers = np.linalg.qr(rng.normal(size=(dim, dim)))[0][:n_clusters] * spread
    labels = np.repeat(np.arange(n_clusters), per_cluster)
    X = centers[labels] + noise * rng.normal(size=(labels.size, dim))
    return X, labels


def cross_square_vectors(n_groups, radius=0.1, axis_len=1.0):
    """Groups of four words on a small square; opposite corners share a category.

    Each word's two nearest neighbors are the adjacent corners, which always
    belong to the other category, so every k=2 edge crosses categories.
    """
    dim = n_groups + 2
    X, labels = [], []
    for g in range(n_groups):
        for corner in range(4):
            v = np.zeros(dim)
            v[g] = axis_len
            theta = corner * math.pi / 2
            v[n_groups] = radius * math.cos(theta)
            v[n_groups + 1] = radius * math.sin(theta)
            X.append(v)
            labels.append(corner % 2)
    return np.array(X), np.array(labels)


def planted_partition(n_groups, size, p_in, p_out, rng):
    n = n_groups * size
    truth = np.repeat(np.arange(n_groups), size)
    A = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            p = p_in if truth[i] == truth[j] else p_out
            if rng.random() < p:
                A[i, j] = A[j, i] = 1
    return A, truth


def random_knn_adjacency(n, k, rng):
    """Random directed graph where every node picks k distinct others."""
    A = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        others = [j for j in range(n) if j != i]
        for j in rng.choice(others, size=k, replace=False):
            A[i, j] = 1
    return A


# -- oracles ----------------------------------------------------------------


def naive_cosine_matrix(X):
    n = len(X)
    M = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            dot = sum(float(a) * float(b) for a, b in zip(X[i], X[j]))
            ni = math.sqrt(sum(float(a) ** 2 for a in X[i]))
            nj = math.sqrt(sum(float(b) ** 2 for b in X[j]))
            M[i][j] = dot / (ni * nj)
    return np.array(M)


def sort_knn_oracle(M, k):
    """Per row: sort all other columns by (-similarity, index), take k."""
    n = len(M)
    A = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        cand = sorted((j for j in range(n) if j != i), key=lambda j: (-M[i][j], j))
        for j in cand[:k]:
            A[i][j] = 1
    return A


def literal_modularity(A, cats, mode):
    """Eqs. for a_c, e_c, Q, Q_max, Q_norm, Q_c evaluated with plain loops.

    ``mode`` picks the weight matrix: multigraph-sum uses A + A^T, union-simple
    uses A OR A^T.
    """
    n = len(A)
    W = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if mode == "multigraph-sum":
                W[i][j] = int(A[i][j]) + int(A[j][i])
            else:
                W[i][j] = 1 if (A[i][j] or A[j][i]) else 0
    two_m = sum(sum(row) for row in W)
    d = [sum(W[i]) for i in range(n)]
    categories = sorted(set(int(c) for c in cats))
    ncat = max(categories) + 1
    a = [0.0] * ncat
    e = [0.0] * ncat
    for c in range(ncat):
        a[c] = sum(d[i] for i in range(n) if cats[i] == c) / two_m
        e[c] = sum(W[i][j] for i in range(n) for j in range(n) if cats[i] == c and cats[j] == c) / two_m
    Q = sum(e[c] - a[c] ** 2 for c in range(ncat))
    Q_max = 1 - sum(a[c] ** 2 for c in range(ncat))
    return {
        "a": a, "e": e, "Q": Q, "Q_max": Q_max, "Q_norm": Q / Q_max,
        "Q_c": [(e[c] - a[c] ** 2) / Q_max for c in range(ncat)],
    }


def naive_ranks(values):
    """Average ranks by scanning: rank = #less + (#equal + 1) / 2."""
    out = []
    for v in values:
        less = sum(1 for u in values if u < v)
        equal = sum(1 for u in values if u == v)
        out.append(less + (equal + 1) / 2.0)
    return out


def pearson_oracle(x, y):
    n = len(x)
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    sxy = math.fsum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = math.fsum((a - mx) ** 2 for a in x)
    syy = math.fsum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)


def spearman_oracle(x, y):
    return pearson_oracle(naive_ranks(list(x)), naive_ranks(list(y)))


def ari_bruteforce(labels_a, labels_b):
    """Adjusted Rand index from exhaustive pair counting."""
    n11 = n10 = n01 = n00 = 0
    for i, j in itertools.combinations(range(len(labels_a)), 2):
        same_a = labels_a[i] == labels_a[j]
        same_b = labels_b[i] == labels_b[j]
        if same_a and same_b:
            n11 += 1
        elif same_a:
            n10 += 1
        elif same_b:
            n01 += 1
        else:
            n00 += 1
    denom = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11)
    if denom == 0:
        return 1.0
    return 2.0 * (n00 * n11 - n01 * n10) / denom


# -- file writers -----------------------------------------------------------


def write_vec(path, words, vectors):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(words)} {len(vectors[0])}\n")
        for w, v in zip(words, vectors):
            fh.write(w + " " + " ".join(repr(float(x)) for x in v) + "\n")


def write_lexicon_rows(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write("\t".join(row) + "\n")
