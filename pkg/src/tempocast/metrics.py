"""Forecast quality metrics and the (variant, lookback, horizon) results table."""

from __future__ import annotations

import io
import json
import csv
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ShapeError

METRIC_NAMES = ("mae", "rmse", "r")


def _pair(pred, truth):
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if len(pred) == 0:
        raise ParameterError("empty series")
    if pred.shape != truth.shape:
        raise ShapeError(f"length mismatch: {pred.shape} vs {truth.shape}")
    return pred, truth


def mae(pred, truth) -> float:
    pred, truth = _pair(pred, truth)
    return float(np.mean(np.abs(pred - truth)))


def rmse(pred, truth) -> float:
    pred, truth = _pair(pred, truth)
    return float(np.sqrt(np.mean((pred - truth) ** 2)))


def pearson_r(pred, truth) -> float | None:
    """Correlation coefficient, or None when either series has zero variance."""
    pred, truth = _pair(pred, truth)
    dp = pred - pred.mean()
    dt = truth - truth.mean()
    sp = np.sqrt(np.mean(dp * dp))
    st = np.sqrt(np.mean(dt * dt))
    if sp == 0.0 or st == 0.0:
        return None
    return float(np.mean(dp * dt) / (sp * st))


def improvement(baseline_value: float, model_value: float, higher_is_better: bool = False) -> float:
    """Percent improvement over a baseline.

    Error metrics improve downward: 100*(baseline-model)/baseline. Metrics
    where larger is better (correlation) use 100*(model-baseline)/baseline.
    """
    if baseline_value <= 0:
        raise ParameterError(f"baseline must be positive, got {baseline_value}")
    if higher_is_better:
        return 100.0 * (model_value - baseline_value) / baseline_value
    return 100.0 * (baseline_value - model_value) / baseline_value


@dataclass(frozen=True)
class MetricsCell:
    variant: str
    lookback: int
    horizon: int
    mae: float
    rmse: float
    r: float | None


@dataclass
class ResultsTable:
    """Metric cells keyed by (variant, lookback, horizon), plus failed cells."""

    variants: tuple
    lookbacks: tuple
    horizons: tuple
    cells: dict
    failed: dict  # (variant, lookback) -> reason

    def cell(self, variant: str, lookback: int, horizon: int) -> MetricsCell:
        return self.cells[(variant, lookback, horizon)]

    def to_csv(self) -> str:
        """Wide layout: one row per (variant, forecast step), metric-major
        column groups (mae | rmse | r), lookbacks inside each group."""
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        header = ["variant", "forecast"]
        for m in METRIC_NAMES:
            header += [f"{m}_{lb}" for lb in self.lookbacks]
        w.writerow(header)
        for variant in self.variants:
            for h in self.horizons:
                row = [variant, h]
                for m in METRIC_NAMES:
                    for lb in self.lookbacks:
                        key = (variant, lb, h)
                        if key not in self.cells:
                            row.append("FAILED")
                            continue
                        v = getattr(self.cells[key], m)
                        row.append("NA" if v is None else f"{v:.12g}")
                w.writerow(row)
        return out.getvalue()

    def to_json(self) -> str:
        payload = {
            "variants": list(self.variants),
            "lookbacks": list(self.lookbacks),
            "horizons": list(self.horizons),
            "cells": [
                {
                    "variant": c.variant,
                    "lookback": c.lookback,
                    "horizon": c.horizon,
                    "mae": c.mae,
                    "rmse": c.rmse,
                    "r": c.r,
                }
                for c in (self.cells[k] for k in sorted(self.cells))
            ],
            "failed": [
                {"variant": v, "lookback": lb, "reason": reason}
                for (v, lb), reason in sorted(self.failed.items())
            ],
        }
        return json.dumps(payload, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "ResultsTable":
        payload = json.loads(text)
        cells = {
            (c["variant"], c["lookback"], c["horizon"]): MetricsCell(
                variant=c["variant"],
                lookback=c["lookback"],
                horizon=c["horizon"],
                mae=c["mae"],
                rmse=c["rmse"],
                r=c["r"],
            )
            for c in payload["cells"]
        }
        failed = {(f["variant"], f["lookback"]): f["reason"] for f in payload["failed"]}
        return cls(
            variants=tuple(payload["variants"]),
            lookbacks=tuple(payload["lookbacks"]),
            horizons=tuple(payload["horizons"]),
            cells=cells,
            failed=failed,
        )


def metrics_grid(predictions: dict, truth: np.ndarray, require_complete: bool = True) -> ResultsTable:
    """Build the results table from (variant, lookback) -> (H, n) predictions
    against a shared (n, H) truth matrix (metrics in m/s).

    With require_complete, a missing (variant, lookback) combination raises;
    otherwise the combination is simply absent (failed-cell handling).
    """
    truth = np.asarray(truth, dtype=np.float64)
    if truth.ndim != 2:
        raise ShapeError(f"truth must be (n, horizons), got {truth.shape}")
    variants = tuple(dict.fromkeys(v for v, _ in predictions))
    lookbacks = tuple(sorted({lb for _, lb in predictions}))
    horizons = tuple(range(1, truth.shape[1] + 1))
    cells = {}
    for variant in variants:
        for lb in lookbacks:
            if (variant, lb) not in predictions:
                if require_complete:
                    raise ParameterError(f"missing predictions for cell ({variant}, lookback {lb})")
                continue
            pred = np.asarray(predictions[(variant, lb)], dtype=np.float64)
            if pred.shape != (truth.shape[1], truth.shape[0]):
                raise ShapeError(
                    f"cell ({variant}, {lb}) has shape {pred.shape}, "
                    f"expected {(truth.shape[1], truth.shape[0])}"
                )
            for h in horizons:
                cells[(variant, lb, h)] = MetricsCell(
                    variant=variant,
                    lookback=lb,
                    horizon=h,
                    mae=mae(pred[h - 1], truth[:, h - 1]),
                    rmse=rmse(pred[h - 1], truth[:, h - 1]),
                    r=pearson_r(pred[h - 1], truth[:, h - 1]),
                )
    return ResultsTable(
        variants=variants, lookbacks=lookbacks, horizons=horizons, cells=cells, failed={}
    )
