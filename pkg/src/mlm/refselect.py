"""Reference point selection.

Every selector works on input points only and returns row indices; the
caller takes the outputs at the same rows. Ties are broken towards the
lowest index throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import pairwise_distances

METHODS = ("random", "rs_kmeanspp", "rs_kmedoidspp", "rs_upgma", "rs_maximin")
DETERMINISTIC_METHODS = ("rs_upgma", "rs_maximin")

UPGMA_MAX_N = 20_000
LLOYD_TOL = 1e-10
LLOYD_MAX_ITER = 300


@dataclass
class SelectionConfig:
    method: str
    k: int
    seed: int | None = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown selection method {self.method!r}; choose from {METHODS}")
        if self.k < 1:
            raise ValueError("k must be at least 1")


def _points(points) -> np.ndarray:
    X = np.asarray(points, dtype=np.float64)
    return X.reshape(-1, 1) if X.ndim == 1 else X


def _check_k(k: int, n: int) -> None:
    if not 1 <= k <= n:
        raise ValueError(f"K must be in [1, N]; got K={k}, N={n}")


def _sq_dist_to(X: np.ndarray, c: np.ndarray) -> np.ndarray:
    diff = X - c
    return np.einsum("ij,ij->i", diff, diff)


def select_random(points, k: int, seed=None) -> np.ndarray:
    X = _points(points)
    _check_k(k, X.shape[0])
    return np.random.default_rng(seed).choice(X.shape[0], size=k, replace=False)


def kmeanspp_init(points, k: int, seed=None) -> np.ndarray:
    """K-means++ seeding: returns ``k`` distinct row indices.

    The first index is uniform; each further index is drawn with probability
    proportional to the squared distance to the nearest index chosen so far.
    If every remaining point coincides with a chosen one, the draw falls back
    to uniform over the unchosen rows.
    """
    X = _points(points)
    n = X.shape[0]
    _check_k(k, n)
    rng = np.random.default_rng(seed)
    chosen = np.empty(k, dtype=np.intp)
    taken = np.zeros(n, dtype=bool)
    chosen[0] = rng.integers(n)
    taken[chosen[0]] = True
    d2 = _sq_dist_to(X, X[chosen[0]])
    for t in range(1, k):
        w = np.where(taken, 0.0, d2)
        total = w.sum()
        if total > 0:
            idx = rng.choice(n, p=w / total)
        else:
            idx = rng.choice(np.flatnonzero(~taken))
        chosen[t] = idx
        taken[idx] = True
        d2 = np.minimum(d2, _sq_dist_to(X, X[idx]))
    return chosen


@dataclass
class LloydResult:
    centroids: np.ndarray
    assignment: np.ndarray
    sse_history: list
    n_iter: int


def _assign(X: np.ndarray, C: np.ndarray):
    D2 = pairwise_distances(X, C) ** 2
    a = np.argmin(D2, axis=1)
    return a, D2[np.arange(X.shape[0]), a]


def lloyd(points, initial_centroids, max_iter: int = LLOYD_MAX_ITER, tol: float = LLOYD_TOL) -> LloydResult:
    """Lloyd's k-means iterations from given centroids.

    Stops when the assignment no longer changes, the SSE improves by less
    than ``tol``, or after ``max_iter`` rounds. A centroid that loses all its
    points is moved onto the point lying farthest from its own centroid.
    """
    X = _points(points)
    C = _points(initial_centroids).copy()
    k = C.shape[0]
    if k < 1:
        raise ValueError("need at least one centroid")
    assign, d2 = _assign(X, C)
    history = [float(d2.sum())]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        counts = np.bincount(assign, minlength=k)
        for j in range(k):
            if counts[j] > 0:
                C[j] = X[assign == j].mean(axis=0)
        for j in np.flatnonzero(counts == 0):
            far = int(np.argmax(d2))
            C[j] = X[far]
            d2[far] = 0.0
        new_assign, d2 = _assign(X, C)
        history.append(float(d2.sum()))
        stable = np.array_equal(new_assign, assign)
        assign = new_assign
        if stable or history[-2] - history[-1] < tol:
            break
    return LloydResult(C, assign, history, n_iter)


def _nearest_distinct(X: np.ndarray, prototypes: np.ndarray) -> np.ndarray:
    """For each prototype in order, the nearest not-yet-claimed row of ``X``."""
    D = pairwise_distances(prototypes, X)
    claimed = np.zeros(X.shape[0], dtype=bool)
    out = np.empty(prototypes.shape[0], dtype=np.intp)
    for j in range(prototypes.shape[0]):
        idx = int(np.argmin(np.where(claimed, np.inf, D[j])))
        out[j] = idx
        claimed[idx] = True
    return out


def select_rs_kmeanspp(points, k: int, seed=None) -> np.ndarray:
    return kmeanspp_init(points, k, seed)


def select_rs_kmedoidspp(points, k: int, seed=None) -> np.ndarray:
    """K-means++ seeding, Lloyd refinement, then the closest row to each centroid."""
    X = _points(points)
    _check_k(k, X.shape[0])
    init = kmeanspp_init(X, k, seed)
    res = lloyd(X, X[init])
    return _nearest_distinct(X, res.centroids)


def upgma_linkage(points, max_n: int = UPGMA_MAX_N) -> np.ndarray:
    """Full average-linkage merge sequence.

    Returns an (N-1) x 3 array of ``(i, j, distance)`` rows. Clusters are
    identified by the smallest original row index they contain; at each step
    the closest pair is merged into the lower id ``i``. Among equal
    distances the lexicographically smallest ``(i, j)`` wins.
    """
    X = _points(points)
    n = X.shape[0]
    if n > max_n:
        raise ValueError(f"UPGMA needs O(N^2) memory; N={n} exceeds the cap of {max_n}")
    D = pairwise_distances(X, X)
    np.fill_diagonal(D, np.inf)
    size = np.ones(n)
    merges = np.empty((max(n - 1, 0), 3))
    for step in range(n - 1):
        flat = int(np.argmin(D))
        i, j = divmod(flat, n)
        if i > j:
            i, j = j, i
        merges[step] = (i, j, D[i, j])
        # average-linkage update of the merged cluster's row
        row = (size[i] * D[i] + size[j] * D[j]) / (size[i] + size[j])
        D[i, :] = row
        D[:, i] = row
        D[i, i] = np.inf
        D[j, :] = np.inf
        D[:, j] = np.inf
        size[i] += size[j]
    return merges


def cut_linkage(merges: np.ndarray, n: int, k: int) -> np.ndarray:
    """Replay the first ``n - k`` merges; labels are 0..k-1 ordered by cluster id."""
    _check_k(k, n)
    parent = np.arange(n)
    for i, j, _ in merges[: n - k]:
        parent[parent == int(j)] = int(i)
    _, labels = np.unique(parent, return_inverse=True)
    return labels


def upgma(points, k: int) -> np.ndarray:
    """Average-linkage agglomerative clustering into ``k`` clusters."""
    X = _points(points)
    return cut_linkage(upgma_linkage(X), X.shape[0], k)


def prototype_rows(X: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Per cluster (in label order), the member closest to the cluster mean."""
    k = int(labels.max()) + 1
    out = np.empty(k, dtype=np.intp)
    for c in range(k):
        members = np.flatnonzero(labels == c)
        mean = X[members].mean(axis=0)
        out[c] = members[int(np.argmin(_sq_dist_to(X[members], mean)))]
    return out


def select_rs_upgma(points, k: int, linkage: np.ndarray | None = None) -> np.ndarray:
    """UPGMA into ``k`` clusters, then the member nearest each cluster mean.

    A precomputed ``linkage`` from :func:`upgma_linkage` may be passed to
    reuse one dendrogram for several ``k``.
    """
    X = _points(points)
    _check_k(k, X.shape[0])
    if linkage is None:
        linkage = upgma_linkage(X)
    return prototype_rows(X, cut_linkage(linkage, X.shape[0], k))


def select_rs_maximin(points, k: int) -> np.ndarray:
    """Deterministic farthest-point selection started at the row nearest the mean."""
    X = _points(points)
    n = X.shape[0]
    _check_k(k, n)
    chosen = np.empty(k, dtype=np.intp)
    chosen[0] = int(np.argmin(_sq_dist_to(X, X.mean(axis=0))))
    mind = np.sqrt(_sq_dist_to(X, X[chosen[0]]))
    taken = np.zeros(n, dtype=bool)
    taken[chosen[0]] = True
    for t in range(1, k):
        idx = int(np.argmax(np.where(taken, -np.inf, mind)))
        chosen[t] = idx
        taken[idx] = True
        mind = np.minimum(mind, np.sqrt(_sq_dist_to(X, X[idx])))
    return chosen


def select(points, cfg: SelectionConfig) -> np.ndarray:
    """Dispatch to the selector named by ``cfg.method``."""
    X = _points(points)
    _check_k(cfg.k, X.shape[0])
    if cfg.method == "random":
        return select_random(X, cfg.k, cfg.seed)
    if cfg.method == "rs_kmeanspp":
        return select_rs_kmeanspp(X, cfg.k, cfg.seed)
    if cfg.method == "rs_kmedoidspp":
        return select_rs_kmedoidspp(X, cfg.k, cfg.seed)
    if cfg.method == "rs_upgma":
        return select_rs_upgma(X, cfg.k)
    return select_rs_maximin(X, cfg.k)


def pairwise_separation_profile(points, indices, m: int) -> np.ndarray:
    """The ``m`` smallest pairwise distances among the selected rows, ascending."""
    X = _points(points)[np.asarray(indices, dtype=np.intp)]
    K = X.shape[0]
    if m < 0 or m > K * (K - 1) // 2:
        raise ValueError(f"m must be in [0, {K * (K - 1) // 2}]")
    if m == 0:
        return np.empty(0)
    iu = np.triu_indices(K, k=1)
    d = pairwise_distances(X, X)[iu]
    return np.sort(d)[:m]
