"""Command-line interface.

Exit codes: 0 success, 2 usage or validation error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from .estimator import MLMRegressor
from .evaluation import DEFAULT_KREL_GRID, gen_s1_synthetic, run_protocol
from .core import Dataset
from .prediction import predict
from .refselect import METHODS, SelectionConfig, pairwise_separation_profile, select
from .scaling import minmax_fit
from .training import MlmModel


class UsageError(Exception):
    """Invalid input or arguments; maps to exit code 2."""


def read_csv(path):
    """Read a headed, comma-separated numeric table. Returns ``(header, matrix)``.

    A zero-byte file gives ``([], None)``; a header-only file gives an
    empty 0 x ncol matrix.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    rows = list(csv.reader(text.splitlines()))
    rows = [r for r in rows if r]
    if not rows:
        return [], None
    header, body = [h.strip() for h in rows[0]], rows[1:]
    data = np.empty((len(body), len(header)))
    for i, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise UsageError(f"{path}:{i}: expected {len(header)} cells, got {len(r)}")
        try:
            data[i - 2] = [float(c) for c in r]
        except ValueError:
            raise UsageError(f"{path}:{i}: non-numeric cell") from None
    if not np.all(np.isfinite(data)):
        raise UsageError(f"{path}: non-finite values are not allowed")
    return header, data


def write_csv(path, header, data) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for row in np.asarray(data, dtype=np.float64).reshape(-1, len(header)):
            w.writerow([repr(float(v)) for v in row])


def _split_targets(header, data, targets: int):
    if not 1 <= targets < len(header):
        raise UsageError(f"--targets must leave at least one input column (got {targets} of {len(header)})")
    return header[:-targets], header[-targets:], data[:, :-targets], data[:, -targets:]


def _load_training(path, targets):
    header, data = read_csv(path)
    if data is None or data.shape[0] == 0:
        raise UsageError(f"{path} has no data rows")
    return _split_targets(header, data, targets)


def cmd_fit(args) -> int:
    in_cols, out_cols, X, Y = _load_training(args.data, args.targets)
    n = X.shape[0]
    if args.k is not None and not 1 <= args.k <= n:
        raise UsageError(f"K must be in [1, N] (got K={args.k}, N={n})")
    if args.krel is not None and not 0 < args.krel <= 100:
        raise UsageError("--krel must be in (0, 100]")
    reg = MLMRegressor(args.method, k=args.k, krel=args.krel, seed=args.seed)
    reg.fit(X, Y)
    model = reg.model_
    model.meta.update({"input_columns": in_cols, "target_columns": out_cols})
    model.save(args.out)
    print(f"K={model.k} K_rel={100.0 * model.k / n:.4g} fit_residual={model.fit_residual_norm:.6g}")
    if model.rank_deficient:
        print("warning: input distance matrix is rank deficient", file=sys.stderr)
    return 0


def _parse_ban(value: str):
    if value in ("random", "best_conditioned"):
        return value
    try:
        return int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid BAN policy {value!r}") from None


def cmd_predict(args) -> int:
    try:
        model = MlmModel.load(args.model)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot load model {args.model}: {exc}") from exc
    out_cols = model.meta.get("target_columns") or [f"y{i}" for i in range(model.l)]
    header, data = read_csv(args.inputs)
    if data is None:
        Path(args.out).write_text("")
        return 0
    in_cols = model.meta.get("input_columns")
    if in_cols and set(in_cols) <= set(header) and len(header) != model.p:
        X = data[:, [header.index(c) for c in in_cols]]
    elif len(header) == model.p:
        X = data
    else:
        raise UsageError(f"inputs have {len(header)} columns but the model expects P={model.p}")
    Y = predict(model, X, ban=args.ban, rng=args.seed) if X.shape[0] else np.empty((0, model.l))
    write_csv(args.out, out_cols, Y)
    return 0


def cmd_select_refs(args) -> int:
    if args.method not in METHODS:
        raise UsageError(f"unknown method {args.method!r}; choose from {', '.join(METHODS)}")
    header, data = read_csv(args.data)
    if data is None or data.shape[0] == 0:
        raise UsageError(f"{args.data} has no data rows")
    X = data[:, :-args.targets] if args.targets else data
    n = X.shape[0]
    if not 1 <= args.k <= n:
        raise UsageError(f"K must be in [1, N] (got K={args.k}, N={n})")
    Xs = minmax_fit(X).transform(X)
    idx = select(Xs, SelectionConfig(args.method, args.k, args.seed))
    result = {"method": args.method, "k": args.k, "seed": args.seed, "indices": [int(i) for i in idx]}
    if args.profile is not None:
        max_m = args.k * (args.k - 1) // 2
        if not 0 <= args.profile <= max_m:
            raise UsageError(f"--profile must be in [0, {max_m}]")
        result["profile"] = pairwise_separation_profile(Xs, idx, args.profile).tolist()
    print(json.dumps(result))
    return 0


CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["schema_version", "datasets", "methods"],
    "properties": {
        "schema_version": {"const": 1},
        "seed": {"type": "integer", "minimum": 0},
        "methods": {"type": "array", "minItems": 1, "items": {"enum": list(METHODS)}},
        "k_grid": {"type": "array", "minItems": 1,
                   "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 100}},
        "outer_folds": {"type": "integer", "minimum": 2},
        "inner_folds": {"type": "integer", "minimum": 2},
        "workers": {"type": "integer", "minimum": 1},
        "ban": {"oneOf": [{"type": "integer", "minimum": 0},
                          {"enum": ["random", "best_conditioned"]}]},
        "output_dir": {"type": "string"},
        "datasets": {
            "type": "array", "minItems": 1,
            "items": {
                "type": "object",
                "additionalProperties": False,
                "required": ["name"],
                "properties": {
                    "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
                    "csv": {"type": "string"},
                    "targets": {"type": "integer", "minimum": 1},
                    "gen_s1": {
                        "type": "object",
                        "additionalProperties": False,
                        "properties": {
                            "n": {"type": "integer", "minimum": 2},
                            "seed": {"type": "integer", "minimum": 0},
                            "points_file": {"type": "string"},
                        },
                    },
                },
                "oneOf": [{"required": ["csv"]}, {"required": ["gen_s1"]}],
            },
        },
    },
}


def load_config(path) -> dict:
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    errors = sorted(jsonschema.Draft202012Validator(CONFIG_SCHEMA).iter_errors(cfg),
                    key=lambda e: list(e.path))
    if errors:
        e = errors[0]
        raise UsageError(f"config error at {e.json_path}: {e.message}")
    return cfg


def _config_dataset(entry, base: Path) -> Dataset:
    if "gen_s1" in entry:
        g = entry["gen_s1"]
        source = g.get("points_file", "uniform")
        if source != "uniform":
            source = str(base / source)
        return gen_s1_synthetic(g.get("n", 1000), g.get("seed", 0), source)
    _, _, X, Y = _load_training(base / entry["csv"], entry.get("targets", 1))
    return Dataset(X, Y)


def cmd_benchmark(args) -> int:
    cfg = load_config(args.config)
    base = Path(args.config).resolve().parent
    out_dir = Path(args.out_dir or cfg.get("output_dir", "reports"))
    if not out_dir.is_absolute() and args.out_dir is None:
        out_dir = base / out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    for entry in cfg["datasets"]:
        data = _config_dataset(entry, base)
        report = run_protocol(
            data, cfg["methods"], cfg.get("k_grid", DEFAULT_KREL_GRID), cfg.get("seed", 0),
            outer_folds=cfg.get("outer_folds", 3), inner_folds=cfg.get("inner_folds", 10),
            dataset_id=entry["name"], ban=cfg.get("ban", 0), workers=cfg.get("workers", 1),
        )
        (out_dir / f"{entry['name']}.json").write_text(report.to_json())
        (out_dir / f"{entry['name']}.csv").write_text(report.to_csv())
        h = report.hygiene
        print(f"{entry['name']}: {h['cells']} cells, {h['violations']} hygiene violations, "
              f"{report.timing['wall_seconds']:.1f}s -> {out_dir}")
    return 0


def cmd_gen_s1(args) -> int:
    if args.n < 1:
        raise UsageError("--n must be positive")
    d = gen_s1_synthetic(args.n, args.seed, args.points_file or "uniform")
    write_csv(args.out, ["x1", "x2", "y"], np.hstack([d.inputs, d.outputs]))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mlm", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", help="select references and fit a model")
    f.add_argument("data")
    f.add_argument("--method", default="rs_maximin", choices=METHODS)
    size = f.add_mutually_exclusive_group(required=True)
    size.add_argument("--krel", type=float, help="reference count as a percentage of N")
    size.add_argument("--k", type=int, help="absolute reference count")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--targets", type=int, default=1, help="number of rightmost target columns")
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    pr = sub.add_parser("predict", help="predict targets for a CSV of inputs")
    pr.add_argument("model")
    pr.add_argument("inputs")
    pr.add_argument("--out", required=True)
    pr.add_argument("--ban", type=_parse_ban, default=0,
                    help="anchor index, 'random' or 'best_conditioned'")
    pr.add_argument("--seed", type=int, default=0, help="seed for --ban random")
    pr.set_defaults(func=cmd_predict)

    s = sub.add_parser("select-refs", help="print selected reference indices as JSON")
    s.add_argument("data")
    s.add_argument("--method", required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--targets", type=int, default=1,
                   help="rightmost columns to ignore (0 if the file has inputs only)")
    s.add_argument("--profile", type=int, metavar="M",
                   help="also print the M smallest pairwise distances among the references")
    s.set_defaults(func=cmd_select_refs)

    b = sub.add_parser("benchmark", help="run the nested cross-validation protocol")
    b.add_argument("config")
    b.add_argument("--out-dir")
    b.set_defaults(func=cmd_benchmark)

    g = sub.add_parser("gen-s1", help="write the sine-sum synthetic dataset")
    g.add_argument("--n", type=int, default=1000)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--points-file")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_s1)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mlm: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"mlm: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
