"""Command-line front end.

    evofeat run --data ecoli.csv --target class --task classification \\
        --learner gnb --search gomea-rt,rs --height 2 --k 2 --repeats 11 --out runs/

Comma-separated ``--search``, ``--learner`` and ``--height`` values form a
configuration matrix; each configuration is repeated with seeds
``seed, seed+1, ...``.  Every output except ``manifest.json`` is a pure
function of the configuration and data, so reruns are byte-identical.
"""
from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__, kernels, learners
from .dataset import DataError, Dataset, Task, fingerprint, load_csv
from .fcs import FCSConfig, FCSResult, baseline_scores, construct_features
from .learners import LearnerKind, LearnerSpec
from .search import Algorithm, SearchConfig

LT_POPULATION_HINT = 1000
GRID_MARGIN = 0.05


class GridError(ValueError):
    pass


@dataclass
class GridExport:
    axis1: tuple[float, float, int]
    axis2: tuple[float, float, int]
    cells: np.ndarray  # (resolution, resolution), cells[i, j] at (axis1[i], axis2[j])
    points: list  # (f1, f2, target, split)

    def axis_values(self, which: int) -> np.ndarray:
        lo, hi, res = self.axis1 if which == 1 else self.axis2
        return np.linspace(lo, hi, res)


def _axis(values: np.ndarray, resolution: int) -> tuple[float, float, int]:
    finite = values[np.isfinite(values)]
    if len(finite) == 0:
        raise GridError("constructed feature has no finite values")
    lo, hi = float(finite.min()), float(finite.max())
    pad = GRID_MARGIN * (hi - lo) if hi > lo else GRID_MARGIN * max(abs(lo), 1.0)
    return lo - pad, hi + pad, resolution


def export_grid(result: FCSResult, learner: LearnerSpec, resolution: int) -> GridExport:
    """Predictions of the learner over the plane of the first two constructed features."""
    if result.K < 2:
        raise GridError("grid export requires two constructed features")
    if resolution < 2:
        raise GridError("grid resolution must be at least 2")
    tr, te = result.train_values[:, :2], result.test_values[:, :2]
    both = np.vstack([tr, te])
    a1, a2 = _axis(both[:, 0], resolution), _axis(both[:, 1], resolution)
    model = learners.fit_arrays(learner, tr, result.train_target, result.task, result.n_classes)
    g1, g2 = np.linspace(*a1), np.linspace(*a2)
    mesh = np.column_stack([np.repeat(g1, resolution), np.tile(g2, resolution)])
    with np.errstate(all="ignore"):
        cells = model.predict(mesh).reshape(resolution, resolution)
    points = [(f1, f2, t, "train") for (f1, f2), t in zip(tr, result.train_target)]
    points += [(f1, f2, t, "test") for (f1, f2), t in zip(te, result.test_target)]
    return GridExport(a1, a2, cells, points)


def write_grid(grid: GridExport, grid_path: Path, points_path: Path):
    g1, g2 = grid.axis_values(1), grid.axis_values(2)
    with open(grid_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["axis1", "axis2", "prediction"])
        for i, x in enumerate(g1):
            for j, y in enumerate(g2):
                w.writerow([_num(x), _num(y), _num(grid.cells[i, j])])
    with open(points_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["f1", "f2", "target", "split"])
        for f1, f2, t, split in grid.points:
            w.writerow([_num(f1), _num(f2), _num(t), split])


# ----------------------------------------------------------------- serialization

def _num(x):
    if isinstance(x, (np.integer, int)) and not isinstance(x, bool):
        return int(x)
    x = float(x)
    return repr(x) if math.isfinite(x) else ""


def _clean(obj):
    """JSON-safe copy: non-finite floats become null, numpy scalars become Python."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if hasattr(obj, "value") and not isinstance(obj, (int, float, str)):
        return obj.value
    return obj


def _dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


# ----------------------------------------------------------------- batch execution

@dataclass
class RunOutcome:
    config_id: int
    repeat: int
    seed: int
    payload: dict
    result: FCSResult | None
    wall_seconds: float
    round_seconds: list


def _execute(job):
    config_id, repeat, ds, cfg = job
    t0 = time.perf_counter()
    marks = []
    try:
        result = construct_features(ds, cfg, progress=lambda _r: marks.append(time.perf_counter()))
        result.baseline = baseline_scores(ds, cfg)
        payload = {"status": "ok", **result.to_dict()}
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        result = None
        payload = {"status": "error", "error": f"{type(exc).__name__}: {exc}", "config": cfg.to_dict()}
    payload.update(config_id=config_id, repeat=repeat, seed=cfg.seed)
    rounds = [b - a for a, b in zip([t0] + marks, marks)]
    return RunOutcome(config_id, repeat, cfg.seed, payload, result,
                      time.perf_counter() - t0, rounds)


def emit_batch(ds: Dataset, configs: list[FCSConfig], repeats: int, out: Path, jobs: int = 1,
               export_resolution: int | None = None, data_info: dict | None = None) -> list[RunOutcome]:
    """Run every config ``repeats`` times and write all output files into ``out``."""
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    out.mkdir(parents=True, exist_ok=True)
    jobs_list = [
        (cid, r, ds, _with_seed(cfg, cfg.seed + r))
        for cid, cfg in enumerate(configs) for r in range(repeats)
    ]
    outcomes = []
    results_path, expr_path = out / "results.jsonl", out / "expressions.txt"
    with open(results_path, "w") as res_fh, open(expr_path, "w") as expr_fh:
        if jobs > 1:
            pool = ProcessPoolExecutor(max_workers=jobs)
            stream = pool.map(_execute, jobs_list)
        else:
            pool = None
            stream = map(_execute, jobs_list)
        try:
            for oc in stream:
                res_fh.write(_dumps(oc.payload) + "\n")
                res_fh.flush()
                _write_expressions(expr_fh, oc)
                outcomes.append(oc)
        finally:
            if pool is not None:
                pool.shutdown()

    _write_summary(out / "summary.csv", configs, outcomes)
    grids = []
    if export_resolution is not None:
        for cid, cfg in enumerate(configs):
            oc = _median_run([o for o in outcomes if o.config_id == cid and o.result is not None])
            if oc is None:
                continue
            suffix = "" if len(configs) == 1 else f"_{cid}"
            write_grid(export_grid(oc.result, replace(cfg.learner, seed=oc.seed), export_resolution),
                       out / f"grid{suffix}.csv", out / f"points{suffix}.csv")
            grids.append({"config_id": cid, "seed": oc.seed, "resolution": export_resolution})

    manifest = {
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "dataset": data_info or {},
        "repeats": repeats,
        "jobs": jobs,
        "configs": [c.to_dict() for c in configs],
        "runs": [
            {"config_id": o.config_id, "repeat": o.repeat, "seed": o.seed,
             "status": o.payload["status"], "wall_seconds": o.wall_seconds,
             "round_wall_seconds": o.round_seconds}
            for o in outcomes
        ],
        "grids": grids,
    }
    (out / "manifest.json").write_text(json.dumps(_clean(manifest), indent=2, sort_keys=True) + "\n")
    return outcomes


def _with_seed(cfg: FCSConfig, seed: int) -> FCSConfig:
    return replace(cfg, seed=seed, search=replace(cfg.search, seed=seed),
                   learner=replace(cfg.learner, seed=seed))


def _write_expressions(fh, oc: RunOutcome):
    fh.write(f"# config {oc.config_id} repeat {oc.repeat} seed {oc.seed}\n")
    if oc.result is None:
        fh.write(f"error: {oc.payload['error']}\n")
        return
    for r in oc.result.rounds:
        flag = "" if r.valid else "\tno-valid-candidate"
        fh.write(f"round {r.k}: {r.expression}\tsize={r.feature_size}\theight={r.feature_height}{flag}\n")


def _final_score(oc: RunOutcome) -> float:
    s = oc.result.rounds[-1].test_score
    return s if math.isfinite(s) else -math.inf


def _median_run(runs: list[RunOutcome]) -> RunOutcome | None:
    """Run with the (lower) median final test score; ties by seed."""
    if not runs:
        return None
    ordered = sorted(runs, key=lambda o: (_final_score(o), o.seed))
    return ordered[(len(ordered) - 1) // 2]


def _write_summary(path: Path, configs: list[FCSConfig], outcomes: list[RunOutcome]):
    K = max(c.K for c in configs)
    score_cols = [f"test_score_k{k}" for k in range(1, K + 1)]
    cv_cols = [f"train_cv_error_k{k}" for k in range(1, K + 1)]
    size_cols = [f"feature_size_k{k}" for k in range(1, K + 1)]
    numeric = ["baseline_test_score", "baseline_train_cv_error"] + score_cols + cv_cols + size_cols
    header = ["row", "config_id", "search", "learner", "height", "K", "seed", "status"] + numeric
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for cid, cfg in enumerate(configs):
            rows = []
            for oc in (o for o in outcomes if o.config_id == cid):
                vals = dict.fromkeys(numeric, math.nan)
                if oc.result is not None:
                    vals["baseline_test_score"] = oc.result.baseline["test_score"]
                    vals["baseline_train_cv_error"] = oc.result.baseline["train_cv_error"]
                    for r in oc.result.rounds:
                        vals[f"test_score_k{r.k}"] = r.test_score
                        vals[f"train_cv_error_k{r.k}"] = r.train_cv_error
                        vals[f"feature_size_k{r.k}"] = r.feature_size
                rows.append(vals)
                w.writerow(["run", cid, cfg.search.algorithm.value, cfg.learner.kind.value,
                            cfg.search.h, cfg.K, oc.seed, oc.payload["status"]]
                           + [_num(vals[c]) for c in numeric])
            med = []
            for c in numeric:
                col = np.array([r[c] for r in rows], dtype=np.float64)
                col = col[~np.isnan(col)]
                med.append(_num(np.median(col)) if len(col) else "")
            w.writerow(["median", cid, cfg.search.algorithm.value, cfg.learner.kind.value,
                        cfg.search.h, cfg.K, "", ""] + med)


# ----------------------------------------------------------------- argument parsing

def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _choices_list(kind):
    allowed = [m.value for m in kind]

    def parse(text):
        items = [t.strip() for t in text.split(",") if t.strip()]
        bad = [t for t in items if t not in allowed]
        if not items or bad:
            raise argparse.ArgumentTypeError(f"invalid choice {','.join(bad) or text!r}; choose from {', '.join(allowed)}")
        return items
    return parse


def _int_list(text):
    try:
        items = [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None
    if any(i < 1 for i in items):
        raise argparse.ArgumentTypeError("heights must be positive")
    return items


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="evofeat", description="Evolutionary feature construction")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="construct features and score them")
    run.add_argument("--data", required=True, type=Path, help="CSV file with a header row")
    run.add_argument("--target", default="-1", help="target column name or index (default: last)")
    run.add_argument("--task", required=True, choices=[t.value for t in Task])
    run.add_argument("--learner", type=_choices_list(LearnerKind), default=None,
                     help="gnb, ols, cart, rf; comma list allowed (default gnb / ols by task)")
    run.add_argument("--search", type=_choices_list(Algorithm), default=["gomea-rt"],
                     help="rs, sgp, sgpb, gomea-rt, gomea-lt; comma list allowed")
    run.add_argument("--height", type=_int_list, default=[2], help="template / tree height h")
    run.add_argument("--k", type=_positive, default=5, help="features to construct")
    run.add_argument("--pop", type=_positive, default=100, help="population size")
    run.add_argument("--budget", type=_positive, default=10_000, help="learner evaluations per round")
    run.add_argument("--folds", type=_positive, default=5, help="cross-validation folds")
    run.add_argument("--test-fraction", type=float, default=0.2)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--repeats", type=_positive, default=1)
    run.add_argument("--jobs", type=_positive, default=1)
    run.add_argument("--augment", action="store_true",
                     help="score constructed features together with the original ones")
    run.add_argument("--count-skipped-evals", action="store_true",
                     help="charge the budget for candidates rejected without running the learner")
    run.add_argument("--out", type=Path, default=Path("evofeat-out"))
    run.add_argument("--export-grid", type=int, default=None, metavar="RESOLUTION",
                     help="write grid.csv and points.csv for the median run")
    return parser


def configs_from_args(args) -> list[FCSConfig]:
    learners_ = args.learner or ["gnb" if args.task == "classification" else "ols"]
    out = []
    for learner, alg, h in itertools.product(learners_, args.search, args.height):
        search = SearchConfig(algorithm=alg, population_size=args.pop, eval_budget=args.budget, h=h,
                              count_skipped_evals=args.count_skipped_evals, seed=args.seed)
        out.append(FCSConfig(K=args.k, search=search, learner=LearnerSpec(learner, seed=args.seed),
                             folds_C=args.folds, test_fraction=args.test_fraction,
                             seed=args.seed, augment=args.augment))
    return out


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not 0.0 < args.test_fraction < 1.0:
        parser.error("--test-fraction must lie in (0, 1)")
    if args.export_grid is not None:
        if args.export_grid < 2:
            parser.error("--export-grid resolution must be at least 2")
        if args.k < 2:
            parser.error("grid export requires two constructed features")
    if args.folds < 2:
        parser.error("--folds must be at least 2")

    try:
        configs = configs_from_args(args)
        for cfg in configs:
            cfg.learner.check_task(args.task)
    except ValueError as exc:
        parser.error(str(exc))
    if "gomea-lt" in args.search and args.pop < LT_POPULATION_HINT:
        warnings.warn(f"gomea-lt with population {args.pop}: linkage learning on small populations "
                      f"may do worse than gomea-rt; consider --pop {LT_POPULATION_HINT} or more",
                      stacklevel=1)

    try:
        ds = load_csv(args.data, args.target, args.task)
    except (OSError, DataError) as exc:
        print(f"evofeat: error: {exc}", file=sys.stderr)
        return 1
    info = {"path": os.fspath(args.data), "rows": ds.n, "columns": ds.p,
            "n_classes": ds.n_classes, "sha256": fingerprint(ds)}
    try:
        outcomes = emit_batch(ds, configs, args.repeats, args.out, args.jobs, args.export_grid, info)
    except (DataError, GridError) as exc:
        print(f"evofeat: error: {exc}", file=sys.stderr)
        return 1
    failed = sum(o.payload["status"] != "ok" for o in outcomes)
    print(f"{len(outcomes) - failed}/{len(outcomes)} runs completed; results in {args.out}")
    return 0 if failed == 0 else 1


def main(argv=None):
    warnings.simplefilter("default")
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
