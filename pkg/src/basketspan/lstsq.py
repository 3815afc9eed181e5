"""Least-squares spanning on predetermined basket weights.

With unit strikes and call selectors the network is linear in (alpha, mu, nu),
so the coefficients solve an ordinary regression of F(x) on
z = [x, (w_1.x - 1)^+, ..., (w_l.x - 1)^+].
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .network import Restriction, SpanParams
from .sampling import Dataset, make_rng
from .trainer import TrainConfig, TrainResult, train


class GridMode(str, enum.Enum):
    REGULAR = "RegularGrid"
    UNIFORM = "UniformRandom"


def grid_points_per_dim(d: int, l: int) -> int:
    """Coarsest n >= 2 with n**d >= l."""
    n = max(2, math.ceil(l ** (1.0 / d)))
    while n > 2 and (n - 1) ** d >= l:
        n -= 1
    while n ** d < l:
        n += 1
    return n


def weight_grid(d: int, l: int, mode=GridMode.REGULAR, box=(-1.0, 1.0), seed: int = 0) -> np.ndarray:
    """``l`` basket weight vectors, either grid nodes in lexicographic order or uniform draws."""
    if l < 1 or d < 1:
        raise ValueError("need l >= 1 and d >= 1")
    lo, hi = float(box[0]), float(box[1])
    if not lo < hi:
        raise ValueError("degenerate weight box")
    mode = GridMode(mode)
    if mode is GridMode.UNIFORM:
        return make_rng(seed).uniform(lo, hi, size=(l, d))
    axis = np.linspace(lo, hi, grid_points_per_dim(d, l))
    nodes = itertools.islice(itertools.product(axis, repeat=d), l)
    return np.array(list(nodes), dtype=float).reshape(l, d)


def design_matrix(X: np.ndarray, W: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.hstack([X, np.maximum(X @ np.asarray(W, dtype=float).T - 1.0, 0.0)])


@dataclass
class LSResult:
    alpha: float
    mu: np.ndarray
    nu: np.ndarray
    W: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def predict(self, X) -> np.ndarray:
        return self.alpha + design_matrix(X, self.W) @ np.concatenate([self.mu, self.nu])

    def to_params(self) -> SpanParams:
        l = len(self.W)
        return SpanParams.from_blocks(self.W, self.mu, np.ones(l), self.alpha, self.nu, np.ones(l))


def solve_ls(dataset: Dataset, W, truncate: bool = True, rcond: float | None = None) -> LSResult:
    """Regression coefficients beta = Var(z)^+ Cov(z, F) and alpha = E[F] - beta.E[z].

    With ``truncate`` the pseudo-inverse comes from an SVD of the centered
    design, dropping singular values below rcond * s_max (default rcond is
    machine epsilon times max(m, d + l)).  Without it the normal equations are
    solved directly, which raises ``LinAlgError`` on an exactly singular design.
    """
    W = np.atleast_2d(np.asarray(W, dtype=float))
    y = dataset.require_targets()
    Z = design_matrix(dataset.points, W)
    if not np.any(Z):
        raise ValueError("design matrix is identically zero")
    m, p = Z.shape
    zbar, ybar = Z.mean(axis=0), y.mean()
    Zc, yc = Z - zbar, y - ybar

    U, s, Vt = np.linalg.svd(Zc, full_matrices=False)
    if rcond is None:
        rcond = np.finfo(float).eps * max(m, p)
    keep = s > rcond * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
    cond = float(s[0] / s[-1]) if s[-1] > 0 else float("inf")
    if truncate:
        beta = Vt[keep].T @ ((U[:, keep].T @ yc) / s[keep])
    else:
        beta = np.linalg.solve(Zc.T @ Zc / m, Zc.T @ yc / m)
    alpha = float(ybar - beta @ zbar)
    diagnostics = {
        "condition_number": cond,
        "rank": int(keep.sum()),
        "n_truncated": int(p - keep.sum()) if truncate else 0,
        "truncated": bool(truncate),
        "coef_norm": float(np.linalg.norm(beta)),
        "rcond": float(rcond),
    }
    return LSResult(alpha, beta[:W.shape[1]].copy(), beta[W.shape[1]:].copy(), W, diagnostics)


def ls_gd(dataset: Dataset, W, cfg: TrainConfig) -> TrainResult:
    """Same regression fitted by Adam: frozen weights, unit strikes, eta fixed at +1."""
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if cfg.n_options != len(W):
        raise ValueError(f"cfg.n_options={cfg.n_options} but {len(W)} weight vectors given")
    restriction = Restriction.predetermined(W, np.ones(len(W)), freeze_eta=True)
    return train(None, dataset, restriction, cfg)
