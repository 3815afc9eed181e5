"""Adam training of spanning networks on a fixed mini-batch partition."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Callable

import numpy as np

from .network import (REG_FORMS, STRIKE_FLOOR, Restriction, RestrictionKind, SpanParams,
                      as_restriction, forward, loss_and_grad_arrays, regularization,
                      renormalize_strikes)
from .payoff import PayoffSpec
from .report import HedgeReport, LossHistory
from .sampling import Dataset, fill_targets, make_rng, partition_batches


@dataclass(frozen=True)
class InitSpec:
    """Initial parameter distribution."""

    w_low: float = -1.0
    w_high: float = 1.0
    strike: float = 1.0
    nu_scale: float = 0.1
    eta: str = "alternating"  # or "calls"

    def __post_init__(self):
        if not self.w_low < self.w_high:
            raise ValueError("w_low must be below w_high")
        if self.strike < STRIKE_FLOOR:
            raise ValueError("initial strike below the strike floor")
        if self.nu_scale < 0:
            raise ValueError("nu_scale must be >= 0")
        if self.eta not in ("alternating", "calls"):
            raise ValueError(f"unknown eta init {self.eta!r}")


@dataclass(frozen=True)
class TrainConfig:
    n_options: int
    n_batches: int = 10
    epochs: int = 1000
    lr0: float = 0.01
    lr_decay: float = 0.8
    lr_decay_every: int = 300
    weight_decay: float = 1e-3
    reg_form: str = "norm"
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    init: InitSpec = field(default_factory=InitSpec)

    def __post_init__(self):
        if isinstance(self.init, dict):
            object.__setattr__(self, "init", InitSpec(**self.init))
        if self.n_options < 1:
            raise ValueError("n_options must be >= 1")
        if self.n_batches < 1:
            raise ValueError("n_batches must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.lr0 > 0:
            raise ValueError("lr0 must be positive")
        if not 0 < self.lr_decay <= 1:
            raise ValueError("lr_decay must lie in (0, 1]")
        if self.lr_decay_every < 1:
            raise ValueError("lr_decay_every must be >= 1")
        if self.weight_decay < 0:
            raise ValueError("weight_decay must be >= 0")
        if self.reg_form not in REG_FORMS:
            raise ValueError(f"reg_form must be one of {REG_FORMS}")
        for name in ("adam_beta1", "adam_beta2"):
            if not 0 <= getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in [0, 1)")
        if not self.adam_eps > 0:
            raise ValueError("adam_eps must be positive")

    def lr_after_epoch(self, epoch: int) -> float:
        return self.lr0 * self.lr_decay ** (epoch // self.lr_decay_every)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown train fields: {sorted(unknown)}")
        return cls(**data)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros_like(cls, theta: np.ndarray) -> "AdamState":
        return cls(np.zeros_like(theta), np.zeros_like(theta), 0)

    def copy(self) -> "AdamState":
        return AdamState(self.m.copy(), self.v.copy(), self.t)


class NonFiniteGradient(FloatingPointError):
    pass


def _adam_inplace(theta, grad, state: AdamState, lr, beta1, beta2, eps):
    state.t += 1
    state.m *= beta1
    state.m += (1.0 - beta1) * grad
    state.v *= beta2
    state.v += (1.0 - beta2) * grad * grad
    m_hat = state.m / (1.0 - beta1 ** state.t)
    v_hat = state.v / (1.0 - beta2 ** state.t)
    theta -= lr * m_hat / (np.sqrt(v_hat) + eps)


def _check_grad(params, grad: np.ndarray):
    if not np.all(np.isfinite(grad)):
        where = params.offending_block(grad) if isinstance(params, SpanParams) else "theta"
        raise NonFiniteGradient(f"non-finite gradient in parameter block {where!r}")


def adam_step(params, grad, state: AdamState, lr: float, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8):
    """One bias-corrected Adam update; returns new ``(params, state)``.

    ``params`` may be a SpanParams (strikes are then projected onto the floor)
    or a plain array.
    """
    g = grad.theta if isinstance(grad, SpanParams) else np.asarray(grad, dtype=float)
    _check_grad(params, g)
    state = state.copy()
    if isinstance(params, SpanParams):
        new = params.copy()
        _adam_inplace(new.theta, g, state, lr, beta1, beta2, eps)
        new.project_strikes()
        return new, state
    theta = np.array(params, dtype=float)
    _adam_inplace(theta, g, state, lr, beta1, beta2, eps)
    return theta, state


def init_params(l: int, d: int, restriction: Restriction, init: InitSpec,
                rng: np.random.Generator) -> SpanParams:
    W = rng.uniform(init.w_low, init.w_high, size=(l, d))
    nu = rng.uniform(-init.nu_scale, init.nu_scale, size=l)
    strikes = np.full(l, init.strike)
    if restriction.kind is RestrictionKind.PREDETERMINED:
        W, strikes = restriction.frozen_W, restriction.frozen_strikes
        if W.shape != (l, d):
            raise ValueError(f"frozen weights have shape {W.shape}, expected {(l, d)}")
    if init.eta == "calls" or restriction.freeze_eta:
        eta = np.ones(l)
    else:
        eta = np.where(np.arange(l) % 2 == 0, 1.0, -1.0)
    return SpanParams.from_blocks(W, np.zeros(d), strikes, 0.0, nu, eta)


@dataclass
class TrainResult:
    params: SpanParams
    history: LossHistory
    steps: int
    restriction: Restriction


def _objective(params, restriction, X, y, cfg: TrainConfig) -> float:
    r = forward(params, restriction, X) - y
    pen = regularization(params.theta, cfg.weight_decay, cfg.reg_form)[0] if cfg.weight_decay else 0.0
    return float(r @ r) / len(y) + pen


def train(spec: PayoffSpec | None, dataset: Dataset, kind, cfg: TrainConfig,
          params: SpanParams | None = None) -> TrainResult:
    """Run ``cfg.epochs`` passes of Adam over a fixed seeded batch partition.

    The learning rate during epoch e (1-based) is lr0 * decay^floor((e-1)/every),
    so the rate after epoch e is lr0 * decay^floor(e/every).  The full-dataset
    objective is recorded once per epoch.
    """
    restriction = as_restriction(kind)
    if dataset.targets is None:
        if spec is None:
            raise ValueError("dataset has no targets and no payoff was given")
        dataset = fill_targets(dataset, spec)
    elif spec is not None and spec.dim != dataset.dim:
        raise ValueError(f"payoff dimension {spec.dim} != dataset dimension {dataset.dim}")
    X, y = dataset.points, dataset.targets
    rng = make_rng(cfg.seed)
    if params is None:
        params = init_params(cfg.n_options, dataset.dim, restriction, cfg.init, rng)
    else:
        params = params.copy()
    batches = partition_batches(dataset.m, cfg.n_batches, rng)
    batch_data = [(np.ascontiguousarray(X[b]), y[b].copy()) for b in batches]

    state = AdamState.zeros_like(params.theta)
    grad = np.empty_like(params.theta)
    b1, b2, eps = cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps
    epochs = np.arange(1, cfg.epochs + 1)
    losses = np.empty(cfg.epochs)
    lrs = np.empty(cfg.epochs)
    lr = cfg.lr0
    for e in epochs:
        for xb, yb in batch_data:
            loss_and_grad_arrays(params, restriction, xb, yb, cfg.weight_decay,
                                 cfg.reg_form, out=grad)
            _check_grad(params, grad)
            _adam_inplace(params.theta, grad, state, lr, b1, b2, eps)
            params.project_strikes()
        losses[e - 1] = _objective(params, restriction, X, y, cfg)
        if e % cfg.lr_decay_every == 0:
            lr *= cfg.lr_decay
        lrs[e - 1] = lr
    steps = cfg.epochs * len(batch_data)
    assert state.t == steps
    return TrainResult(params, LossHistory(epochs, losses, lrs), steps, restriction)


def evaluate(params: SpanParams, restriction, dataset: Dataset) -> tuple[float, float]:
    r = forward(params, restriction, dataset.points) - dataset.require_targets()
    return float(np.mean(r * r)), float(np.mean(np.abs(r)))


def _run_one(args):
    spec, dataset, restriction, cfg, strategy, common_k = args
    t0 = time.perf_counter()
    result = train(spec, dataset, restriction, cfg)
    mse_v, mae_v = evaluate(result.params, restriction, dataset)
    return HedgeReport(
        strategy=strategy,
        payoff_id=spec.payoff_id if spec is not None else "custom",
        d=dataset.dim,
        l=cfg.n_options,
        mse=mse_v,
        mae=mae_v,
        seed=cfg.seed,
        portfolio=renormalize_strikes(result.params, restriction, common_k),
        params=result.params,
        history=result.history,
        diagnostics={"steps": result.steps},
        wall_clock_seconds=time.perf_counter() - t0,
    )


def train_ensemble(spec: PayoffSpec, data: Dataset | Callable[[int], Dataset], kind,
                   cfg: TrainConfig, runs: int, jobs: int = 1, strategy: str = "nn",
                   common_k: float | None = None) -> list[HedgeReport]:
    """Independent trainings with seeds ``cfg.seed + r``, r = 0..runs-1.

    ``data`` is either a fixed dataset or a callable mapping a run seed to a
    dataset.  A Predetermined restriction keeps its frozen weights in every run.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    restriction = as_restriction(kind)
    if common_k is None:
        common_k = abs(spec.strike) if spec is not None and spec.strike != 0 else 1.0
    tasks = []
    for r in range(runs):
        run_cfg = TrainConfig(**{**{f.name: getattr(cfg, f.name) for f in fields(cfg)},
                                 "seed": cfg.seed + r})
        ds = data(run_cfg.seed) if callable(data) else data
        if ds.targets is None:
            ds = fill_targets(ds, spec)
        tasks.append((spec, ds, restriction, run_cfg, strategy, common_k))
    if jobs <= 1 or runs == 1:
        return [_run_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, runs)) as pool:
        return list(pool.map(_run_one, tasks))
