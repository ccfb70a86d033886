"""Domain types and Euclidean distance primitives shared by both MLM steps."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _as_matrix(a, name: str) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass
class Dataset:
    """N input rows (P features) paired with N output rows (L targets).

    One-dimensional arrays are promoted to single-column matrices.
    """

    inputs: np.ndarray
    outputs: np.ndarray

    def __post_init__(self):
        self.inputs = _as_matrix(self.inputs, "inputs")
        self.outputs = _as_matrix(self.outputs, "outputs")
        if self.inputs.shape[0] != self.outputs.shape[0]:
            raise ValueError(
                f"inputs have {self.inputs.shape[0]} rows but outputs have "
                f"{self.outputs.shape[0]}"
            )
        if self.inputs.shape[0] < 1 or self.inputs.shape[1] < 1 or self.outputs.shape[1] < 1:
            raise ValueError("dataset needs N >= 1, P >= 1 and L >= 1")

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def p(self) -> int:
        return self.inputs.shape[1]

    @property
    def l(self) -> int:
        return self.outputs.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.intp)
        return Dataset(self.inputs[rows], self.outputs[rows])


@dataclass
class ReferenceSet:
    """K training rows used as reference points.

    ``R`` holds the input-space points and ``T`` the matching outputs; both
    are copies of the indexed rows.
    """

    indices: np.ndarray
    R: np.ndarray
    T: np.ndarray

    @classmethod
    def from_indices(cls, data: Dataset, indices) -> "ReferenceSet":
        idx = np.asarray(indices, dtype=np.intp).ravel()
        if idx.size < 1:
            raise ValueError("a reference set needs at least one index")
        if idx.min() < 0 or idx.max() >= data.n:
            raise ValueError(f"reference indices must lie in [0, {data.n})")
        if np.unique(idx).size != idx.size:
            raise ValueError("reference indices must be distinct")
        return cls(idx, data.inputs[idx].copy(), data.outputs[idx].copy())

    @property
    def k(self) -> int:
        return self.indices.size


@dataclass
class DistancePair:
    """Input- and output-space distance matrices, both N x K."""

    Dx: np.ndarray
    Dy: np.ndarray

    @classmethod
    def compute(cls, data: Dataset, refs: ReferenceSet) -> "DistancePair":
        return cls(
            pairwise_distances(data.inputs, refs.R),
            pairwise_distances(data.outputs, refs.T),
        )


def pairwise_distances(A, C) -> np.ndarray:
    """Euclidean distances between the rows of ``A`` (m x P) and ``C`` (k x P).

    Computed from explicit differences rather than the ``|a|^2 + |c|^2 - 2ac``
    expansion, so that coincident rows give exactly zero.
    """
    A = _as_matrix(A, "A")
    C = _as_matrix(C, "C")
    if A.shape[1] != C.shape[1]:
        raise ValueError(
            f"column count mismatch: {A.shape[1]} vs {C.shape[1]}"
        )
    out = np.empty((A.shape[0], C.shape[0]))
    # Chunk over rows of A to bound the m x k x P temporary.
    step = max(1, int(2_000_000 // max(1, C.shape[0] * C.shape[1])))
    for start in range(0, A.shape[0], step):
        diff = A[start:start + step, None, :] - C[None, :, :]
        out[start:start + step] = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    return out


def distance_matrix_det_sign(points, max_n: int = 12) -> int:
    """Sign of the determinant of the self-distance matrix of ``points``.

    For distinct points the sign is +1 when the number of points is odd and
    -1 when it is even.

    Raises
    ------
    ValueError
        If there are fewer than 2 or more than ``max_n`` points, or if any
        two rows coincide.
    """
    X = _as_matrix(points, "points")
    n = X.shape[0]
    if n < 2 or n > max_n:
        raise ValueError(f"need 2 <= n <= {max_n} points, got {n}")
    D = pairwise_distances(X, X)
    off = D[~np.eye(n, dtype=bool)]
    if np.any(off == 0.0):
        raise ValueError("points must be pairwise distinct")
    sign, _ = np.linalg.slogdet(D)
    if sign == 0:
        raise ValueError("distance matrix is numerically singular")
    return int(sign)


def has_duplicate_rows(X) -> bool:
    X = np.asarray(X)
    return np.unique(X, axis=0).shape[0] < X.shape[0]
