"""End-to-end regressor: scale, select references, fit, predict."""

from __future__ import annotations

import numpy as np

from .core import Dataset, ReferenceSet
from .prediction import predict
from .refselect import SelectionConfig, select
from .scaling import minmax_fit
from .training import MlmModel, fit


def krel_to_k(krel: float, n: int) -> int:
    """Reference count from a percentage of the training size.

    ``round(krel * n / 100)`` with halves rounded up, clamped to [1, n].
    """
    k = int(np.floor(krel * n / 100.0 + 0.5))
    return min(max(k, 1), n)


class MLMRegressor:
    """Minimal Learning Machine regressor working in [0, 1]-scaled space.

    Parameters
    ----------
    method : str
        Reference selection method (see ``refselect.METHODS``).
    k : int, optional
        Number of reference points. Mutually exclusive with ``krel``.
    krel : float, optional
        Reference count as a percentage of the training rows.
    seed : int, optional
        Seed for the nondeterministic selectors.
    ban : int or str
        Benchmark anchor policy passed on to prediction.
    """

    def __init__(self, method="rs_maximin", k=None, krel=None, seed=0, ban=0):
        if (k is None) == (krel is None):
            raise ValueError("give exactly one of k and krel")
        self.method = method
        self.k = k
        self.krel = krel
        self.seed = seed
        self.ban = ban
        self.model_: MlmModel | None = None

    def resolve_k(self, n: int) -> int:
        if self.k is not None:
            if not 1 <= self.k <= n:
                raise ValueError(f"K must be in [1, N]; got K={self.k}, N={n}")
            return int(self.k)
        return krel_to_k(self.krel, n)

    def fit(self, X, Y, indices=None):
        """Fit on raw ``X`` (N x P) and ``Y`` (N x L).

        ``indices`` overrides the selector with a precomputed reference set.
        """
        raw = Dataset(X, Y)
        xs, ys = minmax_fit(raw.inputs), minmax_fit(raw.outputs)
        data = Dataset(xs.transform(raw.inputs), ys.transform(raw.outputs))
        K = self.resolve_k(data.n)
        if indices is None:
            indices = select(data.inputs, SelectionConfig(self.method, K, self.seed))
        refs = ReferenceSet.from_indices(data, indices)
        meta = {"method": self.method, "K": refs.k, "K_rel": 100.0 * refs.k / data.n,
                "N": data.n, "seed": self.seed}
        self.model_ = fit(data, refs, scaler=xs, output_scaler=ys, meta=meta)
        return self

    def predict(self, X) -> np.ndarray:
        if self.model_ is None:
            raise RuntimeError("call fit() first")
        return predict(self.model_, np.asarray(X, dtype=np.float64), ban=self.ban)
