"""Nested cross-validation benchmark protocol for reference selection methods.

Outer k-fold DOB-SCV splits the data into train/test; an inner DOB-SCV on
each training part gives train/validation pairs. Every (inner train,
method, K_rel) cell is fitted on [0, 1]-scaled inner-train rows and scored
by RMSE on the validation and test rows, scaled with the same statistics.
The K_rel with the smallest mean validation RMSE is chosen per outer split.
"""

from __future__ import annotations

import csv
import io
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import Dataset, ReferenceSet
from .estimator import krel_to_k
from .prediction import predict_scaled
from .refselect import (
    METHODS,
    SelectionConfig,
    select,
    select_rs_maximin,
    select_rs_upgma,
    upgma_linkage,
)
from .scaling import MinMaxScaler, minmax_apply, minmax_fit
from .training import fit

__all__ = [
    "FoldAssignment",
    "BenchmarkReport",
    "dobscv_partition",
    "minmax_fit",
    "minmax_apply",
    "MinMaxScaler",
    "rmse",
    "krel_to_k",
    "run_protocol",
    "gen_s1_synthetic",
    "s1_function",
    "DEFAULT_KREL_GRID",
]

DEFAULT_KREL_GRID = tuple(range(5, 101, 5))

SEED_DERIVATION = (
    "numpy SeedSequence entropy: outer partition [root, 0]; "
    "inner partition [root, 1, outer]; "
    "selection [root, 2, outer, inner, method_index, round(K_rel * 1000)]"
)

CSV_COLUMNS = [
    "dataset", "outer", "inner", "method", "K_rel", "K", "n_train", "n_val", "n_test",
    "val_rmse", "test_rmse", "train_rmse", "fit_residual_norm", "rank_deficient",
    "seed_entropy", "error",
]


@dataclass
class FoldAssignment:
    folds: np.ndarray
    k_folds: int

    def indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.folds == fold)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.folds, minlength=self.k_folds)


def dobscv_partition(inputs, k_folds: int, seed=None) -> FoldAssignment:
    """Distribution-balanced fold assignment without class labels.

    Repeatedly picks a random unassigned point and its ``k_folds - 1``
    nearest unassigned neighbours; the picked point goes to fold 0 and its
    j-th nearest neighbour to fold j. A final group smaller than
    ``k_folds`` is spread over randomly chosen distinct folds.
    """
    X = np.asarray(inputs, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    n = X.shape[0]
    if not 1 <= k_folds <= n:
        raise ValueError(f"k_folds must be in [1, N]; got {k_folds} with N={n}")
    rng = np.random.default_rng(seed)
    folds = np.full(n, -1, dtype=np.intp)
    free = np.ones(n, dtype=bool)
    while free.any():
        cand = np.flatnonzero(free)
        e = int(rng.choice(cand))
        others = cand[cand != e]
        diff = X[others] - X[e]
        d = np.einsum("ij,ij->i", diff, diff)
        order = others[np.lexsort((others, d))]
        group = np.concatenate(([e], order[: k_folds - 1]))
        if group.size == k_folds:
            targets = np.arange(k_folds)
        else:
            targets = rng.permutation(k_folds)[: group.size]
        folds[group] = targets
        free[group] = False
    return FoldAssignment(folds, k_folds)


def rmse(pred, actual) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    if pred.shape != actual.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {actual.shape}")
    if pred.size == 0:
        raise ValueError("rmse of an empty set")
    return float(np.sqrt(np.mean((pred - actual) ** 2)))


def s1_function(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return (np.sin(2 * np.pi * X[:, 0]) + np.sin(2 * np.pi * X[:, 1])).reshape(-1, 1)


def gen_s1_synthetic(n: int = 1000, seed=0, source="uniform") -> Dataset:
    """Two-input sine-sum regression data.

    ``source="uniform"`` draws inputs uniformly from the unit square;
    otherwise ``source`` is a path to a whitespace- or comma-separated file
    of 2-D points, from which ``n`` rows are sampled without replacement
    and min-max scaled to [0, 1].
    """
    rng = np.random.default_rng(seed)
    if isinstance(source, str) and source == "uniform":
        X = rng.random((n, 2))
    else:
        text = Path(source).read_text().replace(",", " ")
        pts = np.loadtxt(io.StringIO(text), ndmin=2)
        if pts.shape[1] != 2:
            raise ValueError(f"expected 2 columns in {source}, got {pts.shape[1]}")
        if n > pts.shape[0]:
            raise ValueError(f"requested n={n} but {source} has {pts.shape[0]} points")
        X = pts[rng.choice(pts.shape[0], size=n, replace=False)]
        X = minmax_fit(X).transform(X)
    return Dataset(X, s1_function(X))


def _threads_cap(workers: int) -> int:
    cap = os.environ.get("MLM_THREADS")
    if cap:
        workers = min(workers, max(1, int(cap)))
    return max(1, workers)


def _disjoint(*parts) -> bool:
    seen = np.concatenate(parts)
    return np.unique(seen).size == seen.size


def _run_inner(job):
    """All (method, K_rel) cells of one inner-train / validation pair."""
    (data_in, data_out, it_idx, val_idx, test_idx, outer, inner,
     methods, k_grid, root, dataset_id, ban, train_rmse) = job
    xs = minmax_fit(data_in[it_idx])
    ys = minmax_fit(data_out[it_idx])
    train = Dataset(xs.transform(data_in[it_idx]), ys.transform(data_out[it_idx]))
    Xv, Yv = xs.transform(data_in[val_idx]), ys.transform(data_out[val_idx])
    Xt, Yt = xs.transform(data_in[test_idx]), ys.transform(data_out[test_idx])
    n = train.n
    Ks = {krel: krel_to_k(krel, n) for krel in k_grid}
    cells, checks, violations = [], 0, 0
    for mi, method in enumerate(methods):
        maximin_order = linkage = None
        for krel in k_grid:
            K = Ks[krel]
            entropy = [int(root), 2, outer, inner, mi, int(round(krel * 1000))]
            cell = {
                "dataset": dataset_id, "outer": outer, "inner": inner,
                "method": method, "K_rel": float(krel), "K": K,
                "n_train": n, "n_val": int(val_idx.size), "n_test": int(test_idx.size),
                "val_rmse": None, "test_rmse": None, "train_rmse": None,
                "fit_residual_norm": None, "rank_deficient": None,
                "seed_entropy": entropy, "error": None,
            }
            checks += 1
            leak = not _disjoint(it_idx, val_idx, test_idx)
            try:
                if leak:
                    raise AssertionError("train/validation/test partitions overlap")
                if method == "rs_maximin":
                    if maximin_order is None:
                        # greedy order: the K-prefix is the K-point selection
                        maximin_order = select_rs_maximin(train.inputs, max(Ks.values()))
                    idx = maximin_order[:K]
                elif method == "rs_upgma":
                    if linkage is None:
                        linkage = upgma_linkage(train.inputs)
                    idx = select_rs_upgma(train.inputs, K, linkage=linkage)
                else:
                    idx = select(train.inputs, SelectionConfig(method, K, entropy))
                idx = np.asarray(idx)
                if not (_disjoint(idx) and np.all((idx >= 0) & (idx < n))):
                    leak = True
                    raise AssertionError("reference indices outside the inner-train rows")
                refs = ReferenceSet.from_indices(train, idx)
                model = fit(train, refs, scaler=xs, output_scaler=ys)
                cell["fit_residual_norm"] = model.fit_residual_norm
                cell["rank_deficient"] = model.rank_deficient
                cell["val_rmse"] = rmse(predict_scaled(model, Xv, ban=ban), Yv)
                cell["test_rmse"] = rmse(predict_scaled(model, Xt, ban=ban), Yt)
                if train_rmse:
                    cell["train_rmse"] = rmse(predict_scaled(model, train.inputs, ban=ban), train.outputs)
            except Exception as exc:  # recorded per cell; the run continues
                cell["error"] = f"{type(exc).__name__}: {exc}"
            violations += int(leak)
            cells.append(cell)
    return cells, checks, violations


@dataclass
class BenchmarkReport:
    dataset: str
    config: dict
    cells: list
    hygiene: dict
    timing: dict = field(default_factory=dict)

    def _grid(self):
        return self.config["methods"], [float(k) for k in self.config["k_grid"]]

    def cell_values(self, method, krel, key, outer=None) -> list:
        return [c[key] for c in self.cells
                if c["method"] == method and c["K_rel"] == float(krel)
                and (outer is None or c["outer"] == outer) and c[key] is not None]

    def test_rmses(self, method, krel) -> list:
        return self.cell_values(method, krel, "test_rmse")

    def mean_test_rmse(self, method, krel) -> float:
        v = self.test_rmses(method, krel)
        return float(np.mean(v)) if v else float("nan")

    def chosen_krel(self) -> dict:
        """Per method, the K_rel with the smallest mean validation RMSE in each outer split."""
        methods, grid = self._grid()
        out = {}
        for m in methods:
            picks = []
            for o in range(self.config["outer_folds"]):
                best, best_v = None, np.inf
                for krel in grid:
                    v = self.cell_values(m, krel, "val_rmse", outer=o)
                    if v and np.mean(v) < best_v:
                        best, best_v = krel, float(np.mean(v))
                picks.append(best)
            out[m] = picks
        return out

    def summary(self) -> dict:
        methods, grid = self._grid()
        chosen = self.chosen_krel()
        per_cell = {}
        for m in methods:
            per_cell[m] = {}
            for krel in grid:
                val = self.cell_values(m, krel, "val_rmse")
                test = self.test_rmses(m, krel)
                per_cell[m][repr(krel)] = {
                    "val_rmse_mean": float(np.mean(val)) if val else None,
                    "test_rmse": test,
                    "test_rmse_mean": float(np.mean(test)) if test else None,
                    "test_rmse_median": float(np.median(test)) if test else None,
                    "failures": sum(1 for c in self.cells if c["method"] == m
                                    and c["K_rel"] == krel and c["error"] is not None),
                }
        optimal = {}
        for m in methods:
            test = []
            for o, krel in enumerate(chosen[m]):
                if krel is not None:
                    test += self.cell_values(m, krel, "test_rmse", outer=o)
            optimal[m] = {
                "chosen_K_rel": chosen[m],
                "test_rmse": test,
                "test_rmse_median": float(np.median(test)) if test else None,
            }
        return {"per_k_rel": per_cell, "optimal": optimal}

    def to_dict(self, include_timing: bool = True) -> dict:
        d = {
            "format": "mlm-benchmark-report",
            "version": 1,
            "dataset": self.dataset,
            "config": self.config,
            "seed_derivation": SEED_DERIVATION,
            "hygiene": self.hygiene,
            "summary": self.summary(),
            "cells": self.cells,
        }
        if include_timing:
            d["timing"] = self.timing
        return d

    def to_json(self, include_timing: bool = True) -> str:
        return json.dumps(self.to_dict(include_timing), indent=1, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for c in self.cells:
            row = []
            for col in CSV_COLUMNS:
                v = c[col]
                if col == "seed_entropy":
                    v = " ".join(str(e) for e in v)
                row.append("" if v is None else repr(v) if isinstance(v, float) else v)
            w.writerow(row)
        return buf.getvalue()


def run_protocol(
    data: Dataset,
    methods=METHODS,
    k_grid=DEFAULT_KREL_GRID,
    seed: int = 0,
    *,
    outer_folds: int = 3,
    inner_folds: int = 10,
    dataset_id: str = "dataset",
    ban=0,
    workers: int = 1,
    train_rmse: bool = True,
) -> BenchmarkReport:
    """Run the nested DOB-SCV benchmark.

    Returns a report holding one cell per (outer, inner, method, K_rel),
    i.e. ``outer_folds * inner_folds`` test RMSEs per (method, K_rel).
    Cells are independent; ``workers > 1`` fans the inner splits out over
    processes (capped by the ``MLM_THREADS`` environment variable) without
    changing any result.
    """
    methods = list(methods)
    k_grid = [float(k) for k in k_grid]
    if not k_grid:
        raise ValueError("K_rel grid must be nonempty")
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    t0 = time.perf_counter()
    # partition on scaled inputs so no single feature dominates the neighbourhoods
    outer = dobscv_partition(minmax_fit(data.inputs).transform(data.inputs), outer_folds, [int(seed), 0])
    jobs = []
    for o in range(outer_folds):
        test_idx = outer.indices(o)
        train_idx = np.flatnonzero(outer.folds != o)
        Xtr = data.inputs[train_idx]
        inner = dobscv_partition(minmax_fit(Xtr).transform(Xtr), inner_folds, [int(seed), 1, o])
        for v in range(inner_folds):
            jobs.append((
                data.inputs, data.outputs,
                train_idx[inner.folds != v], train_idx[inner.folds == v], test_idx,
                o, v, methods, k_grid, int(seed), dataset_id, ban, train_rmse,
            ))
    n_workers = _threads_cap(workers)
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as ex:
            results = list(ex.map(_run_inner, jobs))
    else:
        results = [_run_inner(j) for j in jobs]
    cells = [c for r in results for c in r[0]]
    hygiene = {
        "cells": len(cells),
        "checks": sum(r[1] for r in results),
        "violations": sum(r[2] for r in results),
    }
    config = {
        "methods": methods, "k_grid": k_grid, "seed": int(seed),
        "outer_folds": outer_folds, "inner_folds": inner_folds,
        "ban": ban, "n": data.n, "p": data.p, "l": data.l,
    }
    timing = {"wall_seconds": time.perf_counter() - t0, "workers": n_workers}
    return BenchmarkReport(dataset_id, config, cells, hygiene, timing)
