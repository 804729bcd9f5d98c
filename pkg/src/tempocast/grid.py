"""Experiment-grid orchestration: trains every requested (variant, lookback)
cell, fuses the linear-regression variants on the validation block, evaluates
on the test block, and emits the report files."""

from __future__ import annotations

import hashlib
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig, config_to_text
from .errors import ParameterError, TempocastError, TrainingError
from .ingest import TimeSeriesFrame, impute_gaps, read_frame
from .metrics import ResultsTable, improvement, metrics_grid
from .nn.backend import lstm_backend_name
from .nn.model import (
    TrainedModel,
    branch_variants,
    fuse_branches,
    load,
    parse_variant,
    predict,
    save,
    train_single,
)
from .preprocess import WS10_COL, WindowedDataset, make_windows, split_chronological
from .synthetic import gen_synthetic

log = logging.getLogger(__name__)


def cell_seed(global_seed: int, variant: str, lookback: int) -> int:
    """Stable per-cell seed so cells are reproducible in any execution order."""
    digest = hashlib.sha256(f"{global_seed}|{variant}|{lookback}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def persistence_baseline(ds: WindowedDataset) -> np.ndarray:
    """Predict the wind speed observed at the forecast origin for every horizon."""
    last = ds.retro[:, -1, WS10_COL]
    return np.tile(last, (ds.horizons, 1))


def load_grid_frame(cfg: ExperimentConfig) -> TimeSeriesFrame:
    if cfg.data == "synthetic":
        frame = gen_synthetic(cfg.synthetic, cfg.seed)
    else:
        frame = read_frame(cfg.data)
    return impute_gaps(frame, cfg.gap_policy)


def _limit_blas_threads():
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(1)
    except ImportError:
        pass


def _base_variants(cfg: ExperimentConfig) -> list[str]:
    need = []
    for tag in cfg.variants:
        fused, _, _ = parse_variant(tag)
        for base in branch_variants(tag) if fused else (tag,):
            if base not in need:
                need.append(base)
    return need


def _splits(frame: TimeSeriesFrame, cfg: ExperimentConfig, lookback: int):
    ds = make_windows(frame, lookback, cfg.horizons, cfg.retro)
    return split_chronological(ds, cfg.fractions)


def _train_task(args):
    cfg, frame, variant, lookback = args
    _limit_blas_threads()
    train_ds, val_ds, _ = _splits(frame, cfg, lookback)
    tc = replace(cfg.train, seed=cell_seed(cfg.seed, variant, lookback))
    _, _, regressor = parse_variant(variant)
    try:
        model = train_single(
            variant, train_ds, val_ds, tc,
            arch=cfg.arch.for_regressor(regressor),
            smoothing=cfg.smoothing,
        )
        return variant, lookback, save(model), None
    except TrainingError as err:
        return variant, lookback, None, str(err)


@dataclass
class GridRun:
    config: ExperimentConfig
    table: ResultsTable
    predictions: dict  # (variant, lookback) -> (H, n_test) m/s
    truth: np.ndarray  # (n_test, H) m/s
    origin_times: np.ndarray
    models: dict  # (variant, lookback) -> serialized TrainedModel bytes
    failures: dict  # (variant, lookback) -> reason

    @property
    def ok(self) -> bool:
        return not self.failures


def run_grid(cfg: ExperimentConfig, frame: TimeSeriesFrame | None = None) -> GridRun:
    """Train/evaluate every (variant, lookback) cell; failed cells are recorded
    and skipped rather than aborting the grid."""
    if frame is None:
        frame = load_grid_frame(cfg)

    tasks = [
        (cfg, frame, variant, lookback)
        for variant in _base_variants(cfg)
        for lookback in cfg.lookbacks
    ]
    results = []
    if cfg.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_train_task, tasks))
    else:
        _limit_blas_threads()
        results = [_train_task(t) for t in tasks]

    base_models: dict = {}
    failures: dict = {}
    for variant, lookback, blob, err in results:
        if err is None:
            base_models[(variant, lookback)] = blob
        else:
            log.warning("cell (%s, lookback %d) failed: %s", variant, lookback, err)
            failures[(variant, lookback)] = err

    predictions: dict = {}
    models: dict = {}
    truth = None
    origin_times = None
    for lookback in cfg.lookbacks:
        _, val_ds, test_ds = _splits(frame, cfg, lookback)
        if truth is None:
            truth = test_ds.targets
            origin_times = test_ds.origin_times
        loaded = {
            (v, lb): load(blob)
            for (v, lb), blob in base_models.items()
            if lb == lookback
        }
        for variant in cfg.variants:
            fused, _, _ = parse_variant(variant)
            if fused:
                b_fft, b_rp = branch_variants(variant)
                missing = [b for b in (b_fft, b_rp) if (b, lookback) in failures]
                if missing:
                    failures[(variant, lookback)] = (
                        f"branch training failed: {', '.join(missing)}"
                    )
                    continue
                model = fuse_branches(
                    variant, loaded[(b_fft, lookback)], loaded[(b_rp, lookback)], val_ds
                )
            else:
                if (variant, lookback) in failures:
                    continue
                model = loaded[(variant, lookback)]
            predictions[(variant, lookback)] = predict(model, test_ds)
            models[(variant, lookback)] = save(model)

    table = metrics_grid(predictions, truth, require_complete=False) if predictions else ResultsTable(
        variants=tuple(cfg.variants),
        lookbacks=tuple(cfg.lookbacks),
        horizons=tuple(range(1, cfg.horizons + 1)),
        cells={},
        failed={},
    )
    # keep the requested variant order in the table even when cells failed
    table.variants = tuple(v for v in cfg.variants if any(k[0] == v for k in predictions))
    table.failed = dict(failures)
    return GridRun(
        config=cfg,
        table=table,
        predictions=predictions,
        truth=truth,
        origin_times=origin_times,
        models=models,
        failures=failures,
    )


def _improvement_csv(table: ResultsTable, metric: str) -> str:
    """Per-variant improvement over the MLP baseline at the matching lookback,
    rounded to 0.1 (undefined entries print NA)."""
    import csv as _csv
    import io

    out = io.StringIO()
    w = _csv.writer(out, lineterminator="\n")
    w.writerow(["variant", "forecast"] + [str(lb) for lb in table.lookbacks])
    higher_is_better = metric == "r"
    for variant in table.variants:
        if variant == "MLP":
            continue
        for h in table.horizons:
            row = [variant, h]
            for lb in table.lookbacks:
                base_cell = table.cells.get(("MLP", lb, h))
                cell = table.cells.get((variant, lb, h))
                if base_cell is None:
                    raise ParameterError(
                        f"MLP baseline cell missing for lookback {lb}, horizon {h}"
                    )
                base = getattr(base_cell, metric)
                val = getattr(cell, metric) if cell else None
                if base is None or val is None or base <= 0:
                    row.append("NA")
                else:
                    row.append(f"{improvement(base, val, higher_is_better):.1f}")
            w.writerow(row)
    return out.getvalue()


def emit_report(run: GridRun, out_dir, improvements: bool | None = None) -> list:
    """Write table.csv, results.json, raw predictions, improvement files and
    the run manifest; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    table_path = out_dir / "table.csv"
    table_path.write_text(run.table.to_csv(), encoding="utf-8")
    written.append(table_path)

    results_path = out_dir / "results.json"
    results_path.write_text(run.table.to_json(), encoding="utf-8")
    written.append(results_path)

    if run.truth is not None:
        npz_path = out_dir / "raw_predictions.npz"
        arrays = {"truth": run.truth, "origin_times": run.origin_times.astype("int64")}
        for (variant, lb), pred in run.predictions.items():
            arrays[f"pred|{variant}|{lb}"] = pred
        np.savez(npz_path, **arrays)
        written.append(npz_path)

    models_dir = out_dir / "models"
    models_dir.mkdir(exist_ok=True)
    for (variant, lb), blob in run.models.items():
        path = models_dir / f"{variant}_lb{lb}.tpcm"
        path.write_bytes(blob)
        written.append(path)

    if improvements is None:
        improvements = "MLP" in run.table.variants
    if improvements:
        if "MLP" not in run.table.variants:
            raise ParameterError("improvement files need the MLP baseline in the variant set")
        for metric in ("mae", "rmse", "r"):
            path = out_dir / f"improvement_{metric}.csv"
            path.write_text(_improvement_csv(run.table, metric), encoding="utf-8")
            written.append(path)

    manifest = config_to_text(run.config)
    manifest += (
        f"meta.package_version = {__version__}\n"
        f"meta.numpy_version = {np.__version__}\n"
        f"meta.python_version = {sys.version.split()[0]}\n"
        f"meta.lstm_backend = {lstm_backend_name()}\n"
    )
    if run.failures:
        for (variant, lb), reason in sorted(run.failures.items()):
            manifest += f"meta.failed_cell = {variant},{lb}: {reason}\n"
    manifest_path = out_dir / "run_manifest.txt"
    manifest_path.write_text(manifest, encoding="utf-8")
    written.append(manifest_path)
    return written
