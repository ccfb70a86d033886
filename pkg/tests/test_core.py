import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from mlm.core import Dataset, ReferenceSet, distance_matrix_det_sign, pairwise_distances


def leibniz_det(M):
    """Determinant by the permutation expansion; independent of LAPACK."""
    n = len(M)
    total = 0.0
    for perm in itertools.permutations(range(n)):
        inversions = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        prod = 1.0
        for i in range(n):
            prod *= M[i][perm[i]]
        total += -prod if inversions % 2 else prod
    return total


def naive_distances(A, C):
    return [[math.sqrt(sum((a - c) ** 2 for a, c in zip(ra, rc))) for rc in C] for ra in A]


@pytest.mark.parametrize(
    "A, C, expected",
    [
        ([[0], [3]], [[0], [3]], [[0, 3], [3, 0]]),
        ([[1, 2]], [[1, 2]], [[0]]),
        ([[0, 0]], [[3, 4]], [[5]]),
    ],
)
def test_pairwise_distances_examples(A, C, expected):
    np.testing.assert_array_equal(pairwise_distances(A, C), expected)


def test_pairwise_distances_matches_naive_loop():
    rng = np.random.default_rng(3)
    A, C = rng.normal(size=(7, 4)), rng.normal(size=(5, 4))
    np.testing.assert_allclose(pairwise_distances(A, C), naive_distances(A, C), rtol=1e-14)


def test_pairwise_distances_errors():
    with pytest.raises(ValueError):
        pairwise_distances([[0, 1]], [[0, 1, 2]])
    with pytest.raises(ValueError):
        pairwise_distances([[np.nan, 1]], [[0, 1]])
    with pytest.raises(ValueError):
        pairwise_distances([[np.inf]], [[0]])


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


@given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 5)), elements=finite))
@settings(max_examples=100, deadline=None)
def test_self_distances_symmetric_zero_diagonal(A):
    D = pairwise_distances(A, A)
    np.testing.assert_array_equal(D, D.T)
    np.testing.assert_array_equal(np.diag(D), 0.0)
    assert np.all(D >= 0)


@given(arrays(np.float64, st.tuples(st.just(3), st.integers(1, 5)), elements=finite))
@settings(max_examples=200, deadline=None)
def test_triangle_inequality(A):
    D = pairwise_distances(A, A)
    assert D[0, 2] <= D[0, 1] + D[1, 2] + 1e-9 * (1 + D.max())


def test_det_sign_examples():
    assert distance_matrix_det_sign([[0], [1]]) == -1
    # cofactor expansion of [[0,1,3],[1,0,2],[3,2,0]] gives +12
    assert leibniz_det([[0, 1, 3], [1, 0, 2], [3, 2, 0]]) == 12
    assert distance_matrix_det_sign([[0], [1], [3]]) == 1
    rng = np.random.default_rng(0)
    for _ in range(20):
        P = rng.random((4, 2))
        assert np.sign(leibniz_det(pairwise_distances(P, P).tolist())) == -1
        assert distance_matrix_det_sign(P) == -1


@pytest.mark.parametrize("n", range(2, 7))
def test_det_sign_agrees_with_leibniz(n):
    rng = np.random.default_rng(n)
    for _ in range(10):
        P = rng.normal(size=(n, rng.integers(1, 4)))
        ref = np.sign(leibniz_det(pairwise_distances(P, P).tolist()))
        assert distance_matrix_det_sign(P) == ref == (-1) ** (n - 1)


def test_det_sign_rejects_duplicates_and_bad_sizes():
    with pytest.raises(ValueError):
        distance_matrix_det_sign([[0, 0], [1, 1], [0, 0]])
    with pytest.raises(ValueError):
        distance_matrix_det_sign([[0]])
    with pytest.raises(ValueError):
        distance_matrix_det_sign(np.arange(13.0).reshape(-1, 1))


def test_dataset_validation():
    d = Dataset([1.0, 2.0, 3.0], [[1, 2], [3, 4], [5, 6]])
    assert (d.n, d.p, d.l) == (3, 1, 2)
    with pytest.raises(ValueError):
        Dataset([[1.0], [2.0]], [[1.0]])
    with pytest.raises(ValueError):
        Dataset([[np.nan]], [[1.0]])


def test_reference_set_copies_rows():
    d = Dataset(np.arange(10.0).reshape(5, 2), np.arange(5.0))
    refs = ReferenceSet.from_indices(d, [4, 1])
    np.testing.assert_array_equal(refs.R, [[8, 9], [2, 3]])
    np.testing.assert_array_equal(refs.T, [[4], [1]])
    refs.R[0, 0] = -1
    assert d.inputs[4, 0] == 8
    with pytest.raises(ValueError):
        ReferenceSet.from_indices(d, [1, 1])
    with pytest.raises(ValueError):
        ReferenceSet.from_indices(d, [5])
