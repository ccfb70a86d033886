"""Per-feature min-max scaling to [0, 1]."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class MinMaxScaler:
    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        self.mins = np.asarray(self.mins, dtype=np.float64).ravel()
        self.maxs = np.asarray(self.maxs, dtype=np.float64).ravel()
        if self.mins.shape != self.maxs.shape:
            raise ValueError("mins and maxs must have the same length")

    @classmethod
    def identity(cls, n_features: int) -> "MinMaxScaler":
        return cls(np.zeros(n_features), np.ones(n_features))

    @property
    def n_features(self) -> int:
        return self.mins.size

    def _span(self) -> np.ndarray:
        span = self.maxs - self.mins
        # constant features map to 0 and back to their constant value
        return np.where(span > 0, span, 1.0)

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.n_features and not (X.ndim == 1 and self.n_features == 1):
            raise ValueError(
                f"expected {self.n_features} columns, got {X.shape[-1]}"
            )
        if X.ndim == 1 and self.n_features == 1:
            X = X.reshape(-1, 1)
        out = (X - self.mins) / self._span()
        return np.where(self.maxs > self.mins, out, 0.0)

    def inverse_transform(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=np.float64)
        out = Z * self._span() + self.mins
        return np.where(self.maxs > self.mins, out, self.mins)

    def to_dict(self) -> dict:
        return {"min": self.mins.tolist(), "max": self.maxs.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "MinMaxScaler":
        return cls(d["min"], d["max"])


def minmax_fit(X) -> MinMaxScaler:
    """Learn per-column minima and maxima from the training rows ``X``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.shape[0] == 0:
        raise ValueError("cannot fit a scaler on zero rows")
    return MinMaxScaler(X.min(axis=0), X.max(axis=0))


def minmax_apply(scaler: MinMaxScaler, X) -> np.ndarray:
    return scaler.transform(X)
