import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mlm.core import Dataset, ReferenceSet, pairwise_distances
from mlm.prediction import (
    DegenerateSystemWarning,
    LlsSystem,
    best_conditioned_ban,
    build_lls,
    lls_diagnostics,
    multilateration_cost,
    predict,
    predict_from_distances,
    solve_lls,
)
from mlm.training import fit


def exact_setup(rng, L, K=None):
    K = L + 1 if K is None else K
    T = rng.normal(size=(K, L))
    y = rng.normal(size=L)
    return T, y, np.linalg.norm(T - y, axis=1)


def test_build_lls_1d_midpoint():
    sys = build_lls([[0.0], [2.0]], [1.0, 1.0], ban_index=0)
    np.testing.assert_array_equal(sys.A, [[2.0]])
    np.testing.assert_array_equal(sys.b, [2.0])
    y, rank = solve_lls(sys)
    np.testing.assert_allclose(y, [1.0])
    assert rank == 1


def test_build_lls_2d_exact_recovery():
    T = [[0, 0], [1, 0], [0, 1]]
    delta = [0.5, np.sqrt(0.65), np.sqrt(0.45)]
    y, _ = solve_lls(build_lls(T, delta, ban_index=0))
    np.testing.assert_allclose(y, [0.3, 0.4], atol=1e-14)


def test_query_at_anchor_gives_zero_theta():
    rng = np.random.default_rng(0)
    T = rng.normal(size=(5, 2))
    delta = np.linalg.norm(T - T[2], axis=1)
    sys = build_lls(T, delta, ban_index=2)
    np.testing.assert_allclose(sys.b, 0.5 * (np.sum((T[2] - np.delete(T, 2, 0)) ** 2, 1)
                                             - np.delete(delta, 2) ** 2), atol=1e-15)
    y, _ = solve_lls(sys)
    np.testing.assert_allclose(y - T[2], 0.0, atol=1e-12)


def test_build_lls_errors():
    with pytest.raises(ValueError):
        build_lls([[0.0]], [1.0])
    with pytest.raises(ValueError):
        build_lls([[0.0], [1.0]], [1.0, 1.0], ban_index=2)
    with pytest.raises(ValueError):
        build_lls([[0.0], [1.0]], [1.0])


def test_chained_1d_example():
    d = Dataset([[0.0], [1.0]], [[0.0], [2.0]])
    model = fit(d, ReferenceSet.from_indices(d, [0, 1]))
    np.testing.assert_allclose(predict(model, [0.5]), [1.0], atol=1e-12)


@pytest.mark.parametrize(
    "y, T, delta, expected",
    [
        ([0.3, 0.4], [[0, 0], [1, 0], [0, 1]], [0.5, np.sqrt(0.65), np.sqrt(0.45)], 0.0),
        ([0.0], [[0.0], [2.0]], [1.0, 1.0], 10.0),
    ],
)
def test_multilateration_cost_examples(y, T, delta, expected):
    assert multilateration_cost(y, T, delta) == pytest.approx(expected, abs=1e-12)


def test_multilateration_cost_clamps_negative_distances():
    assert multilateration_cost([1.0], [[0.0]], [-3.0]) == multilateration_cost([1.0], [[0.0]], [0.0])


def test_lls_diagnostics_examples():
    sys = LlsSystem(A=np.array([[2.0]]), b=np.array([1.0]), ban_index=0,
                    t_star=np.zeros(1), delta_star=0.0)
    diag = lls_diagnostics(sys)
    assert diag.psi == pytest.approx(1.0)
    assert diag.beta is None and diag.bound_u == diag.psi

    Q, _ = np.linalg.qr(np.random.default_rng(1).normal(size=(4, 2)))
    sys = LlsSystem(A=Q, b=np.ones(4), ban_index=0, t_star=np.zeros(2), delta_star=0.0)
    assert lls_diagnostics(sys).psi == pytest.approx(1.0)

    betas = [lls_diagnostics(sys, np.full(4, eps)).beta for eps in (1e-1, 1e-3, 1e-6)]
    assert betas[0] > betas[1] > betas[2] > 0
    assert betas[2] < 1e-5
    assert lls_diagnostics(sys, np.zeros(4)).bound_u == pytest.approx(1.0)


def test_lls_diagnostics_psi_matches_pinv_norms():
    rng = np.random.default_rng(2)
    A = rng.normal(size=(9, 3))
    sys = LlsSystem(A=A, b=rng.normal(size=9), ban_index=0, t_star=np.zeros(3), delta_star=0.0)
    expected = np.linalg.norm(np.linalg.pinv(A), 2) * np.linalg.norm(A, 2)
    assert lls_diagnostics(sys).psi == pytest.approx(expected, rel=1e-10)
    assert lls_diagnostics(sys).psi >= 1.0


def test_lls_diagnostics_rejects_zero_matrix():
    sys = LlsSystem(A=np.zeros((2, 1)), b=np.zeros(2), ban_index=0, t_star=np.zeros(1), delta_star=0.0)
    with pytest.raises(ValueError):
        lls_diagnostics(sys)


@pytest.mark.parametrize("L", [1, 2, 3])
def test_exact_recovery_with_minimal_anchors(L):
    rng = np.random.default_rng(L)
    for _ in range(100):
        T, y, delta = exact_setup(rng, L)
        for ban in range(L + 1):
            np.testing.assert_allclose(predict_from_distances(T, delta, ban=ban), y, atol=1e-8)


@given(st.integers(1, 3), st.integers(0, 2**31), st.floats(-50, 50))
@settings(max_examples=60, deadline=None)
def test_translation_equivariance(L, seed, shift):
    rng = np.random.default_rng(seed)
    T, y, delta = exact_setup(rng, L, K=L + 3)
    c = np.full(L, shift)
    sys1, sys2 = build_lls(T, delta, ban_index=1), build_lls(T + c, delta, ban_index=1)
    np.testing.assert_allclose(sys1.A, sys2.A, atol=1e-9 * (1 + abs(shift)))
    y1, y2 = solve_lls(sys1), solve_lls(sys2)
    np.testing.assert_allclose(y2[0] - c, y1[0], atol=1e-7 * (1 + abs(shift)))


def test_ban_policies_agree_under_exact_distances():
    rng = np.random.default_rng(9)
    T, y, delta = exact_setup(rng, 2, K=8)
    fixed = predict_from_distances(T, delta, ban=3)
    rand = predict_from_distances(T, delta, ban="random", rng=1)
    best = predict_from_distances(T, delta, ban="best_conditioned")
    np.testing.assert_allclose(fixed, y, atol=1e-8)
    np.testing.assert_allclose(rand, y, atol=1e-8)
    np.testing.assert_allclose(best, y, atol=1e-8)


def test_best_conditioned_ban_prefers_well_spread_anchor():
    T = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [5.0, 0.2]])
    idx = best_conditioned_ban(T)
    psis = []
    for i in range(len(T)):
        A = np.delete(T, i, 0) - T[i]
        s = np.linalg.svd(A, compute_uv=False)
        psis.append(s[0] / s[-1])
    assert idx == int(np.argmin(psis))


def test_lls_minimizes_cost_against_perturbations():
    rng = np.random.default_rng(11)
    for L in (1, 2, 3):
        T, y, delta = exact_setup(rng, L, K=L + 4)
        yhat = predict_from_distances(T, delta)
        c0 = multilateration_cost(yhat, T, delta)
        for _ in range(100):
            assert c0 <= multilateration_cost(yhat + rng.normal(scale=0.01, size=L), T, delta)


def test_degenerate_anchor_set_warns():
    T = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])  # collinear in 2-D
    with pytest.warns(DegenerateSystemWarning):
        y = predict_from_distances(T, [1.0, 1.0, 2.0])
    assert np.all(np.isfinite(y))


def test_predict_needs_two_references():
    d = Dataset([[0.0], [1.0]], [[0.0], [2.0]])
    model = fit(d, ReferenceSet.from_indices(d, [0]))
    with pytest.raises(ValueError):
        predict(model, [0.5])


@given(st.integers(1, 4), st.integers(0, 2**31))
@settings(max_examples=100, deadline=None)
def test_anchor_difference_identity(S, seed):
    """d_i^2 - d_r^2 - d_ir^2 == -2 (w - r).(z_i - r) for arbitrary points."""
    rng = np.random.default_rng(seed)
    w, r, z = rng.normal(size=(3, S))
    lhs = np.sum((w - z) ** 2) - np.sum((w - r) ** 2) - np.sum((z - r) ** 2)
    rhs = -2 * np.dot(w - r, z - r)
    assert lhs == pytest.approx(rhs, abs=1e-12 * (1 + np.sum(np.abs([w, r, z])) ** 2))


def test_batch_and_single_prediction_agree():
    rng = np.random.default_rng(12)
    d = Dataset(rng.random((30, 3)), rng.random((30, 2)))
    model = fit(d, ReferenceSet.from_indices(d, np.arange(0, 30, 2)))
    Xq = rng.random((6, 3))
    batch = predict(model, Xq)
    for i in range(6):
        np.testing.assert_allclose(predict(model, Xq[i]), batch[i], atol=1e-13)


def test_full_k_model_interpolates_training_outputs():
    rng = np.random.default_rng(13)
    X, Y = rng.random((40, 4)), rng.random((40, 2))
    d = Dataset(X, Y)
    model = fit(d, ReferenceSet.from_indices(d, np.arange(40)))
    np.testing.assert_allclose(predict(model, X), Y, atol=1e-6)
    # exact distances bypass B entirely
    np.testing.assert_allclose(predict_from_distances(Y, pairwise_distances(Y, Y)), Y, atol=1e-10)
