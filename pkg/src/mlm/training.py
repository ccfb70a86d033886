"""Distance regression: the linear map between input and output distance matrices."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg

from .core import Dataset, DistancePair, ReferenceSet, has_duplicate_rows, pairwise_distances
from .scaling import MinMaxScaler

MODEL_FORMAT = "mlm-model"
MODEL_VERSION = 1


class DuplicateReferenceWarning(UserWarning):
    """Two reference inputs coincide, so the input distance matrix is singular."""


@dataclass
class MlmModel:
    """A fitted distance-regression model.

    Attributes
    ----------
    B : ndarray, shape (K, K)
        Coefficients mapping input-space distances to output-space distances.
    refs : ReferenceSet
        Reference points, stored in the scaled space the model was fit in.
    scaler : MinMaxScaler
        Input scaling applied before computing distances.
    output_scaler : MinMaxScaler
        Output scaling; predictions are made in the scaled space and mapped
        back with ``output_scaler.inverse_transform``.
    fit_residual_norm : float
        Frobenius norm of ``Dx @ B - Dy`` on the training rows.
    rank_deficient : bool
        True when ``Dx`` did not have full column rank and a minimum-norm
        solution was used.
    """

    B: np.ndarray
    refs: ReferenceSet
    scaler: MinMaxScaler
    output_scaler: MinMaxScaler
    fit_residual_norm: float
    rank_deficient: bool = False
    rank: int | None = None
    meta: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.refs.k

    @property
    def p(self) -> int:
        return self.refs.R.shape[1]

    @property
    def l(self) -> int:
        return self.refs.T.shape[1]

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "K": self.k,
            "P": self.p,
            "L": self.l,
            "B": self.B.tolist(),
            "reference_indices": self.refs.indices.tolist(),
            "R": self.refs.R.tolist(),
            "T": self.refs.T.tolist(),
            "input_scaler": self.scaler.to_dict(),
            "output_scaler": self.output_scaler.to_dict(),
            "fit": {
                "residual_norm": self.fit_residual_norm,
                "rank_deficient": self.rank_deficient,
                "rank": self.rank,
            },
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MlmModel":
        if d.get("format") != MODEL_FORMAT:
            raise ValueError(f"not an MLM model document (format={d.get('format')!r})")
        if d.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {d.get('version')!r}")
        refs = ReferenceSet(
            np.asarray(d["reference_indices"], dtype=np.intp),
            np.asarray(d["R"], dtype=np.float64).reshape(d["K"], d["P"]),
            np.asarray(d["T"], dtype=np.float64).reshape(d["K"], d["L"]),
        )
        fit = d["fit"]
        return cls(
            B=np.asarray(d["B"], dtype=np.float64).reshape(d["K"], d["K"]),
            refs=refs,
            scaler=MinMaxScaler.from_dict(d["input_scaler"]),
            output_scaler=MinMaxScaler.from_dict(d["output_scaler"]),
            fit_residual_norm=float(fit["residual_norm"]),
            rank_deficient=bool(fit["rank_deficient"]),
            rank=fit.get("rank"),
            meta=d.get("meta", {}),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "MlmModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def solve_distance_regression(Dx: np.ndarray, Dy: np.ndarray, ridge: float = 0.0):
    """Least-squares solution of ``Dx @ B = Dy``.

    Uses an SVD-based solver instead of forming ``(Dx^T Dx)^-1``. Returns
    ``(B, rank)``; for rank-deficient ``Dx`` the minimum-norm solution is
    returned.
    """
    K = Dx.shape[1]
    if ridge > 0:
        G = Dx.T @ Dx + ridge * np.eye(K)
        return scipy.linalg.solve(G, Dx.T @ Dy, assume_a="pos"), K
    B, _, rank, _ = scipy.linalg.lstsq(Dx, Dy, lapack_driver="gelsd")
    return B, int(rank)


def fit(
    data: Dataset,
    refs: ReferenceSet,
    *,
    scaler: MinMaxScaler | None = None,
    output_scaler: MinMaxScaler | None = None,
    ridge: float = 0.0,
    meta: dict | None = None,
) -> MlmModel:
    """Estimate ``B`` minimizing ``||Dx B - Dy||_F``.

    ``data`` and ``refs`` are taken as already scaled; the scalers are only
    recorded on the model (identity when omitted).
    """
    if refs.k > data.n:
        raise ValueError(f"K={refs.k} exceeds N={data.n}")
    if refs.R.shape[1] != data.p or refs.T.shape[1] != data.l:
        raise ValueError("reference set dimensions do not match the dataset")
    if has_duplicate_rows(refs.R):
        warnings.warn(
            "duplicate reference inputs make the input distance matrix singular; "
            "falling back to a minimum-norm least-squares fit",
            DuplicateReferenceWarning,
            stacklevel=2,
        )
    pair = DistancePair.compute(data, refs)
    B, rank = solve_distance_regression(pair.Dx, pair.Dy, ridge)
    residual = float(np.linalg.norm(pair.Dx @ B - pair.Dy))
    return MlmModel(
        B=B,
        refs=refs,
        scaler=scaler if scaler is not None else MinMaxScaler.identity(data.p),
        output_scaler=output_scaler if output_scaler is not None else MinMaxScaler.identity(data.l),
        fit_residual_norm=residual,
        rank_deficient=rank < refs.k,
        rank=rank,
        meta=dict(meta or {}),
    )


def predict_output_distances(model: MlmModel, x) -> np.ndarray:
    """Predicted output-space distances from ``x`` to every reference output.

    ``x`` is a single P-vector (returns a K-vector) or an m x P matrix
    (returns m x K). Inputs are expected in the model's scaled space. The
    entries can be negative; nothing here clamps them.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x.reshape(1, -1) if single else x
    if X.shape[1] != model.p:
        raise ValueError(f"expected {model.p} input features, got {X.shape[1]}")
    delta = pairwise_distances(X, model.refs.R) @ model.B
    return delta[0] if single else delta
