"""Output recovery by multilateration through the localization linear system.

With anchors ``t_i``, a benchmark anchor ``t*`` and (estimated) distances
``delta_i`` from the unknown output ``y`` to each anchor, expanding
``||y - t_i||^2 = delta_i^2`` around ``t*`` gives the linear system

    (t_i - t*)^T theta = 1/2 (delta*^2 + ||t* - t_i||^2 - delta_i^2),

with ``y = theta + t*``. The right-hand side uses the predicted
output-space distances ``delta_i``; using input-space distances there would
break exact recovery.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .training import MlmModel, predict_output_distances


class DegenerateSystemWarning(UserWarning):
    """The anchor-difference matrix lacks full column rank."""


@dataclass
class LlsSystem:
    A: np.ndarray
    b: np.ndarray
    ban_index: int
    t_star: np.ndarray
    delta_star: float


@dataclass
class LlsDiagnostics:
    psi: float
    beta: float | None
    bound_u: float


def build_lls(refs_T, delta, input_distances=None, ban_index: int = 0) -> LlsSystem:
    """Assemble ``A theta = b`` with ``refs_T[ban_index]`` as the anchor node.

    ``input_distances`` is accepted for interface parity but does not enter
    the system.
    """
    T = np.asarray(refs_T, dtype=np.float64)
    if T.ndim == 1:
        T = T.reshape(-1, 1)
    delta = np.asarray(delta, dtype=np.float64).ravel()
    K = T.shape[0]
    if K < 2:
        raise ValueError("multilateration needs at least 2 reference points")
    if delta.size != K:
        raise ValueError(f"expected {K} distances, got {delta.size}")
    if not 0 <= ban_index < K:
        raise ValueError(f"ban_index {ban_index} outside [0, {K})")
    keep = np.arange(K) != ban_index
    t_star = T[ban_index]
    A = T[keep] - t_star
    d_star = float(delta[ban_index])
    b = 0.5 * (d_star ** 2 + np.sum(A * A, axis=1) - delta[keep] ** 2)
    return LlsSystem(A=A, b=b, ban_index=ban_index, t_star=t_star.copy(), delta_star=d_star)


def solve_lls(system: LlsSystem) -> tuple[np.ndarray, int]:
    """Least-squares ``theta`` mapped back to ``y = theta + t*``; also returns rank(A)."""
    theta, _, rank, _ = scipy.linalg.lstsq(system.A, system.b, lapack_driver="gelsd")
    return theta + system.t_star, int(rank)


def multilateration_cost(y, T, delta) -> float:
    """Sum over anchors of ``(||y - t_k||^2 - delta_k^2)^2``.

    Negative ``delta`` entries are clamped to zero first.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    T = np.asarray(T, dtype=np.float64)
    if T.ndim == 1:
        T = T.reshape(-1, 1)
    delta = np.asarray(delta, dtype=np.float64).ravel()
    if T.shape[1] != y.size or T.shape[0] != delta.size:
        raise ValueError("dimension mismatch between y, T and delta")
    sq = np.sum((T - y) ** 2, axis=1)
    d = np.maximum(delta, 0.0)
    return float(np.sum((sq - d ** 2) ** 2))


def lls_diagnostics(system: LlsSystem, delta_b_estimate=None) -> LlsDiagnostics:
    """Conditioning ``psi = ||A^+|| ||A||`` and the output-ratio bound.

    With an estimate of the right-hand-side error, ``beta = 1 / | ||b|| /
    ||db|| - 1 |`` and the bound is ``psi (1 + beta)``; otherwise the bound
    is ``psi`` (the zero-noise limit). Anchor positions are exact, so no
    coefficient-matrix error term appears.
    """
    A = np.asarray(system.A, dtype=np.float64)
    s = np.linalg.svd(A, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        raise ValueError("A is the zero matrix")
    tol = s[0] * max(A.shape) * np.finfo(float).eps
    psi = float(s[0] / s[s > tol][-1])
    if delta_b_estimate is None:
        return LlsDiagnostics(psi=psi, beta=None, bound_u=psi)
    db = np.asarray(delta_b_estimate, dtype=np.float64).ravel()
    if db.size != system.b.size:
        raise ValueError(f"expected {system.b.size} entries in delta_b_estimate")
    nb = np.linalg.norm(system.b)
    ndb = np.linalg.norm(db)
    if ndb == 0:
        beta = 0.0
    else:
        gap = abs(nb / ndb - 1.0)
        if gap == 0:
            raise ValueError("beta is unbounded when ||b|| equals ||delta_b||")
        beta = 1.0 / gap
    return LlsDiagnostics(psi=psi, beta=beta, bound_u=psi * (1.0 + beta))


def best_conditioned_ban(T) -> int:
    """Anchor index whose removal gives the smallest ``psi``; ties go to the lowest index."""
    T = np.asarray(T, dtype=np.float64)
    best, best_psi = 0, np.inf
    for i in range(T.shape[0]):
        A = np.delete(T, i, axis=0) - T[i]
        s = np.linalg.svd(A, compute_uv=False)
        if s[0] == 0:
            continue
        psi = s[0] / s[-1] if s[-1] > 0 else np.inf
        if psi < best_psi:
            best, best_psi = i, psi
    return best


def _resolve_ban(ban, K: int, T, rng, n: int) -> np.ndarray:
    if isinstance(ban, str):
        if ban == "random":
            gen = np.random.default_rng(rng)
            return gen.integers(0, K, size=n)
        if ban == "best_conditioned":
            return np.full(n, best_conditioned_ban(T))
        raise ValueError(f"unknown ban policy {ban!r}")
    idx = int(ban)
    if not 0 <= idx < K:
        raise ValueError(f"ban index {idx} outside [0, {K})")
    return np.full(n, idx)


def predict_from_distances(T, delta, ban=0, rng=None) -> np.ndarray:
    """Multilaterate outputs from predicted distances ``delta`` (m x K or K)."""
    T = np.asarray(T, dtype=np.float64)
    if T.ndim == 1:
        T = T.reshape(-1, 1)
    delta = np.asarray(delta, dtype=np.float64)
    single = delta.ndim == 1
    D = delta.reshape(1, -1) if single else delta
    K, L = T.shape
    if K < 2:
        raise ValueError("multilateration needs at least 2 reference points")
    if D.shape[1] != K:
        raise ValueError(f"expected {K} distances per row, got {D.shape[1]}")
    bans = _resolve_ban(ban, K, T, rng, D.shape[0])
    out = np.empty((D.shape[0], L))
    degenerate = False
    for ban_idx in np.unique(bans):
        rows = np.flatnonzero(bans == ban_idx)
        keep = np.arange(K) != ban_idx
        t_star = T[ban_idx]
        A = T[keep] - t_star
        # one right-hand side per query row, all sharing A
        rhs = 0.5 * (D[rows, ban_idx][None, :] ** 2
                     + np.sum(A * A, axis=1)[:, None]
                     - D[rows][:, keep].T ** 2)
        theta, _, rank, _ = scipy.linalg.lstsq(A, rhs, lapack_driver="gelsd")
        degenerate |= rank < L
        out[rows] = theta.T + t_star
    if degenerate:
        warnings.warn(
            "anchor differences do not span the output space; "
            "returning the minimum-norm solution",
            DegenerateSystemWarning,
            stacklevel=2,
        )
    return out[0] if single else out


def predict_scaled(model: MlmModel, X, ban=0, rng=None) -> np.ndarray:
    """Predict in the model's scaled input/output space."""
    if model.k < 2:
        raise ValueError("prediction needs K >= 2 reference points")
    delta = predict_output_distances(model, X)
    return predict_from_distances(model.refs.T, delta, ban=ban, rng=rng)


def predict(model: MlmModel, x, ban=0, rng=None) -> np.ndarray:
    """Predict outputs for raw (unscaled) inputs ``x``.

    Parameters
    ----------
    model : MlmModel
    x : array_like, shape (P,) or (m, P)
    ban : int or {"random", "best_conditioned"}
        Benchmark anchor policy. An integer fixes the anchor by position in
        the reference set; ``"random"`` draws one per query from ``rng``.
    rng : int, Generator or None
        Seed or generator for the random policy.

    Returns
    -------
    ndarray, shape (L,) or (m, L), in original output units.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x.reshape(1, -1) if single else x
    if X.shape[1] != model.p:
        raise ValueError(f"expected {model.p} input features, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("inputs contain non-finite entries")
    Y = predict_scaled(model, model.scaler.transform(X), ban=ban, rng=rng)
    Y = model.output_scaler.inverse_transform(Y)
    return Y[0] if single else Y

