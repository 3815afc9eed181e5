"""Datasets of asset-performance vectors and their mini-batch partition.

Random draws use numpy's Philox generator (64-bit counter-based), so a
dataset is fully determined by ``(box, m, seed)``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .payoff import PayoffSpec, payoff_values

MAX_GRID_POINTS = 10**8


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Dataset:
    points: np.ndarray
    targets: np.ndarray | None
    lo: np.ndarray
    hi: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        pts = _frozen(self.points)
        if pts.ndim != 2 or len(pts) < 1:
            raise ValueError("points must be a non-empty (m, d) array")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "lo", _frozen(self.lo))
        object.__setattr__(self, "hi", _frozen(self.hi))
        if self.targets is not None:
            t = _frozen(self.targets)
            if t.shape != (len(pts),):
                raise ValueError(f"targets shape {t.shape} does not match {len(pts)} points")
            object.__setattr__(self, "targets", t)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def require_targets(self) -> np.ndarray:
        if self.targets is None:
            raise ValueError("dataset targets have not been filled")
        return self.targets


def normalize_box(lo, hi, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Broadcast scalar or per-coordinate bounds to ``dim`` and validate them."""
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (dim,)).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (dim,)).copy()
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("box bounds must be finite")
    if np.any(lo >= hi):
        raise ValueError(f"degenerate box: lo={lo.tolist()} hi={hi.tolist()}")
    return lo, hi


def sample_uniform(lo, hi, m: int, seed: int, dim: int | None = None) -> Dataset:
    if dim is None:
        dim = np.size(lo)
    lo, hi = normalize_box(lo, hi, dim)
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = make_rng(seed)
    pts = lo + (hi - lo) * rng.random((m, dim))
    return Dataset(points=pts, targets=None, lo=lo, hi=hi, seed=seed)


def sample_grid(lo, hi, points_per_dim: int, dim: int | None = None) -> Dataset:
    """Full tensor grid with endpoints, first coordinate varying slowest."""
    if dim is None:
        dim = np.size(lo)
    lo, hi = normalize_box(lo, hi, dim)
    if points_per_dim < 2:
        raise ValueError("points_per_dim must be >= 2")
    if dim * np.log10(points_per_dim) > np.log10(MAX_GRID_POINTS):
        raise ValueError(f"grid of {points_per_dim}^{dim} points exceeds {MAX_GRID_POINTS}")
    axes = [np.linspace(lo[j], hi[j], points_per_dim) for j in range(dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.reshape(-1) for g in mesh], axis=1)
    return Dataset(points=pts, targets=None, lo=lo, hi=hi, seed=None)


def fill_targets(dataset: Dataset, spec: PayoffSpec) -> Dataset:
    if dataset.dim != spec.dim:
        raise ValueError(f"dataset dimension {dataset.dim} != payoff dimension {spec.dim}")
    return replace(dataset, targets=payoff_values(spec, dataset.points))


def partition_batches(m: int, n_batches: int, seed) -> list[np.ndarray]:
    """Seeded permutation of ``range(m)`` cut into near-equal contiguous slices.

    ``seed`` is an integer or an existing Generator to draw the permutation from.
    """
    if n_batches < 1 or n_batches > m:
        raise ValueError(f"need 1 <= n_batches <= m, got n_batches={n_batches}, m={m}")
    rng = seed if isinstance(seed, np.random.Generator) else make_rng(seed)
    perm = rng.permutation(m)
    return [np.sort(b) for b in np.array_split(perm, n_batches)]


def dataset_to_csv(dataset: Dataset) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x_{j + 1}" for j in range(dataset.dim)] + ["target"])
    targets = dataset.targets
    for i, row in enumerate(dataset.points):
        t = "" if targets is None else repr(float(targets[i]))
        w.writerow([repr(float(v)) for v in row] + [t])
    return buf.getvalue()


def dataset_from_csv(text_or_path) -> Dataset:
    if isinstance(text_or_path, Path) or (isinstance(text_or_path, str) and "\n" not in text_or_path):
        text = Path(text_or_path).read_text(encoding="utf-8")
    else:
        text = text_or_path
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    d = len(header) - 1
    pts = np.array([[float(v) for v in r[:d]] for r in body])
    raw = [r[d] for r in body]
    targets = None if any(v == "" for v in raw) else np.array([float(v) for v in raw])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    return Dataset(points=pts, targets=targets, lo=lo, hi=hi, seed=None)
