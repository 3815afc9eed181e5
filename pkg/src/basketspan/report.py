"""Error metrics, ensemble confidence intervals, run reports and file exports."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

SCHEMA_VERSION = 1
CI_METHOD = "normal approximation: mean +/- 1.96 * s / sqrt(n), s unbiased"


def _residuals(dataset, predictor: Callable) -> np.ndarray:
    if dataset.m == 0:
        raise ValueError("empty dataset")
    pred = np.asarray(predictor(dataset.points), dtype=float).reshape(-1)
    return pred - dataset.require_targets()


def mae(dataset, predictor: Callable) -> float:
    return float(np.mean(np.abs(_residuals(dataset, predictor))))


def mse(dataset, predictor: Callable) -> float:
    r = _residuals(dataset, predictor)
    return float(np.mean(r * r))


def ci95(values) -> tuple[float, float]:
    """(mean, half-width) of a normal-approximation 95% interval."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        raise ValueError("need at least two values for a confidence interval")
    return float(v.mean()), float(1.96 * v.std(ddof=1) / np.sqrt(v.size))


@dataclass
class LossHistory:
    epoch: np.ndarray
    loss: np.ndarray
    lr: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "loss", "lr"])
        for e, l, r in zip(self.epoch, self.loss, self.lr):
            w.writerow([int(e), repr(float(l)), repr(float(r))])
        return buf.getvalue()


@dataclass
class HedgeReport:
    strategy: str
    payoff_id: str
    d: int
    l: int
    mse: float
    mae: float
    seed: int
    portfolio: object = None  # network.Portfolio
    params: object = None  # network.SpanParams
    history: LossHistory | None = None
    diagnostics: dict = field(default_factory=dict)
    wall_clock_seconds: float = 0.0

    def __post_init__(self):
        if not (self.mse >= 0 and self.mae >= 0):
            raise ValueError("errors must be nonnegative")
        if self.mae > np.sqrt(self.mse) * (1 + 1e-12) + 1e-300:
            raise ValueError("MAE exceeds RMSE, which is impossible")

    def to_dict(self, include_metadata: bool = True) -> dict:
        out = {
            "schema": SCHEMA_VERSION,
            "strategy": self.strategy,
            "payoff_id": self.payoff_id,
            "d": self.d,
            "l": self.l,
            "seed": self.seed,
            "mse": self.mse,
            "mae": self.mae,
            "diagnostics": self.diagnostics,
            "portfolio": None if self.portfolio is None else self.portfolio.to_dict(),
            "params": None if self.params is None else self.params.to_dict(),
            "loss_history_epochs": 0 if self.history is None else len(self.history.epoch),
        }
        if include_metadata:
            out["metadata"] = {"wall_clock_seconds": self.wall_clock_seconds}
        return out


def ensemble_summary(reports: list[HedgeReport]) -> dict:
    maes = [r.mae for r in reports]
    summary = {"runs": len(reports), "mae_mean": float(np.mean(maes)),
               "mae_min": float(np.min(maes)), "ci_method": CI_METHOD}
    if len(reports) >= 2:
        _, half = ci95(maes)
        summary["mae_ci95_half_width"] = half
    return summary


def export_error_grid(spec, predictor: Callable, grid) -> str:
    """CSV rows x_1..x_d, target, prediction, abs_error on the points of ``grid``."""
    from .payoff import payoff_values

    target = payoff_values(spec, grid.points)
    pred = np.asarray(predictor(grid.points), dtype=float).reshape(-1)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x_{j + 1}" for j in range(grid.dim)] + ["target", "prediction", "abs_error"])
    for x, t, p in zip(grid.points, target, pred):
        w.writerow([repr(float(v)) for v in x] + [repr(float(t)), repr(float(p)), repr(abs(float(t - p)))])
    return buf.getvalue()


def atomic_write_text(path, text: str) -> Path:
    """Write via a temporary file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _finite_or_null(obj):
    if isinstance(obj, float):
        return obj if np.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _finite_or_null(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_or_null(v) for v in obj]
    return obj


def dumps_json(obj) -> str:
    """Deterministic JSON text; non-finite numbers become null."""
    return json.dumps(_finite_or_null(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"
