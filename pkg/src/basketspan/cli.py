"""Command-line harness: train | compare | verify | export-grid.

Exit codes: 0 success, 1 tolerance or expectation failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import re
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import analytic, weakform
from .lstsq import GridMode, solve_ls, weight_grid
from .network import (Restriction, RestrictionKind, SpanParams, apply_psi, forward, loss_and_grad_arrays,
                      renormalize_strikes)
from .payoff import PayoffSpec, payoff_values
from .report import (CI_METHOD, HedgeReport, atomic_write_text, ci95, dumps_json, ensemble_summary,
                     export_error_grid)
from .sampling import Dataset, fill_targets, sample_grid, sample_uniform
from .trainer import InitSpec, TrainConfig, evaluate, train_ensemble

STRATEGIES = ("nn", "single_asset", "long_only", "ls_gd", "ls_svd_regular", "ls_svd_uniform")
_NN_KINDS = {
    "nn": RestrictionKind.UNRESTRICTED,
    "single_asset": RestrictionKind.SINGLE_ASSET,
    "long_only": RestrictionKind.LONG_ONLY,
}

EXIT_OK, EXIT_TOLERANCE, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    def __init__(self, message: str, field_path: str | None = None, line: int | None = None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if field_path:
            loc.append(f"field '{field_path}'")
        super().__init__(f"{', '.join(loc)}: {message}" if loc else message)
        self.field_path = field_path
        self.line = line


@dataclass(frozen=True)
class SamplingConfig:
    lo: object = 0.0
    hi: object = 2.0
    m: int = 10_000
    mode: str = "uniform"
    seed: int = 0
    points_per_dim: int = 101


@dataclass(frozen=True)
class WeightGridConfig:
    mode: str = "RegularGrid"
    box: tuple = (-1.0, 1.0)
    seed: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    payoff: PayoffSpec
    sampling: SamplingConfig
    strategy: str
    train: TrainConfig
    runs: int = 1
    weight_grid: WeightGridConfig = field(default_factory=WeightGridConfig)
    truncate: bool = True
    compare: tuple = ()
    expect_lowest: str | None = None
    grid_points_per_dim: int = 101
    common_strike: float | None = None


_TOP_FIELDS = {"name", "payoff", "sampling", "strategy", "train", "runs", "weight_grid",
               "truncate", "compare", "expect_lowest", "export_grid", "common_strike"}


def _line_of(text: str, key: str) -> int | None:
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _section(data: dict, name: str, cls, text: str, required: bool = False):
    raw = data.get(name, None)
    if raw is None:
        if required:
            raise ConfigError("missing required section", name, None)
        return cls()
    if not isinstance(raw, dict):
        raise ConfigError("must be an object", name, _line_of(text, name))
    known = set(cls.__dataclass_fields__)
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown field (expected one of {sorted(known)})", f"{name}.{key}",
                              _line_of(text, key))
    try:
        return cls(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), name, _line_of(text, name)) from exc


def parse_config(text: str) -> ExperimentConfig:
    """Validate a JSON experiment description; errors name the line and field."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON ({exc.msg}), column {exc.colno}", None, exc.lineno) from exc
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object", None, 1)
    for key in data:
        if key not in _TOP_FIELDS:
            raise ConfigError(f"unknown field (expected one of {sorted(_TOP_FIELDS)})", key,
                              _line_of(text, key))

    if "payoff" not in data:
        raise ConfigError("missing required section", "payoff")
    try:
        payoff = PayoffSpec.from_dict(data["payoff"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "payoff", _line_of(text, "payoff")) from exc

    sampling = _section(data, "sampling", SamplingConfig, text)
    if sampling.mode not in ("uniform", "grid"):
        raise ConfigError("must be 'uniform' or 'grid'", "sampling.mode", _line_of(text, "mode"))
    if not (isinstance(sampling.m, int) and sampling.m >= 1):
        raise ConfigError("must be a positive integer", "sampling.m", _line_of(text, "m"))

    train_raw = data.get("train")
    if not isinstance(train_raw, dict):
        raise ConfigError("missing or non-object section", "train", _line_of(text, "train"))
    train_raw = dict(train_raw)
    known = set(TrainConfig.__dataclass_fields__)
    for key in train_raw:
        if key not in known:
            raise ConfigError(f"unknown field (expected one of {sorted(known)})", f"train.{key}",
                              _line_of(text, key))
    try:
        if isinstance(train_raw.get("init"), dict):
            train_raw["init"] = InitSpec(**train_raw["init"])
        train = TrainConfig(**train_raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), "train", _line_of(text, "train")) from exc

    strategy = data.get("strategy", "nn")
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}", "strategy",
                          _line_of(text, "strategy"))
    compare = tuple(data.get("compare", ()))
    for s in compare:
        if s not in STRATEGIES:
            raise ConfigError(f"unknown strategy {s!r}", "compare", _line_of(text, "compare"))
    expect = data.get("expect_lowest")
    if expect is not None and expect not in compare:
        raise ConfigError("must name one of the compared strategies", "expect_lowest",
                          _line_of(text, "expect_lowest"))
    runs = data.get("runs", 1)
    if not (isinstance(runs, int) and runs >= 1):
        raise ConfigError("must be a positive integer", "runs", _line_of(text, "runs"))

    wg = _section(data, "weight_grid", WeightGridConfig, text)
    try:
        GridMode(wg.mode)
    except ValueError as exc:
        raise ConfigError(str(exc), "weight_grid.mode", _line_of(text, "weight_grid")) from exc

    grid_ppd = 101
    if "export_grid" in data:
        eg = data["export_grid"]
        if not (isinstance(eg, dict) and set(eg) <= {"points_per_dim"}):
            raise ConfigError("expected {\"points_per_dim\": n}", "export_grid",
                              _line_of(text, "export_grid"))
        grid_ppd = eg.get("points_per_dim", 101)
        if not (isinstance(grid_ppd, int) and grid_ppd >= 2):
            raise ConfigError("must be an integer >= 2", "export_grid.points_per_dim",
                              _line_of(text, "points_per_dim"))
    common = data.get("common_strike")
    if common is not None and not (isinstance(common, (int, float)) and common > 0):
        raise ConfigError("must be a positive number", "common_strike", _line_of(text, "common_strike"))

    return ExperimentConfig(
        name=str(data.get("name", "experiment")),
        payoff=payoff,
        sampling=sampling,
        strategy=strategy,
        train=train,
        runs=runs,
        weight_grid=wg,
        truncate=bool(data.get("truncate", True)),
        compare=compare,
        expect_lowest=expect,
        grid_points_per_dim=grid_ppd,
        common_strike=None if common is None else float(common),
    )


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(text)


def build_dataset(cfg: ExperimentConfig) -> Dataset:
    s = cfg.sampling
    d = cfg.payoff.dim
    try:
        if s.mode == "grid":
            ds = sample_grid(s.lo, s.hi, s.points_per_dim, dim=d)
        else:
            ds = sample_uniform(s.lo, s.hi, s.m, s.seed, dim=d)
    except ValueError as exc:
        raise ConfigError(str(exc), "sampling") from exc
    return fill_targets(ds, cfg.payoff)


def _common_k(cfg: ExperimentConfig) -> float:
    if cfg.common_strike is not None:
        return cfg.common_strike
    k = abs(cfg.payoff.strike)
    return k if k > 0 else 1.0


def _ls_report(cfg, dataset, W, seed, truncate) -> HedgeReport:
    t0 = time.perf_counter()
    try:
        res = solve_ls(dataset, W, truncate=truncate)
    except np.linalg.LinAlgError as exc:
        return HedgeReport(strategy="ls_svd", payoff_id=cfg.payoff.payoff_id, d=dataset.dim,
                           l=len(W), mse=math.inf, mae=math.inf, seed=seed,
                           diagnostics={"failed": str(exc), "truncated": truncate},
                           wall_clock_seconds=time.perf_counter() - t0)
    params = res.to_params()
    mse_v, mae_v = evaluate(params, RestrictionKind.UNRESTRICTED, dataset)
    return HedgeReport(strategy="ls_svd", payoff_id=cfg.payoff.payoff_id, d=dataset.dim, l=len(W),
                       mse=mse_v, mae=mae_v, seed=seed,
                       portfolio=renormalize_strikes(params, RestrictionKind.UNRESTRICTED, _common_k(cfg)),
                       params=params, diagnostics=res.diagnostics,
                       wall_clock_seconds=time.perf_counter() - t0)


def run_strategy(cfg: ExperimentConfig, strategy: str, dataset: Dataset, jobs: int = 1) -> list[HedgeReport]:
    """Ensemble of ``cfg.runs`` fits of one strategy on a fixed dataset."""
    l, d = cfg.train.n_options, dataset.dim
    wg = cfg.weight_grid
    if strategy in _NN_KINDS:
        reports = train_ensemble(cfg.payoff, dataset, _NN_KINDS[strategy], cfg.train, cfg.runs,
                                 jobs=jobs, strategy=strategy, common_k=_common_k(cfg))
    elif strategy == "ls_gd":
        W = weight_grid(d, l, GridMode.REGULAR, wg.box)
        restriction = Restriction.predetermined(W, np.ones(l), freeze_eta=True)
        reports = train_ensemble(cfg.payoff, dataset, restriction, cfg.train, cfg.runs, jobs=jobs,
                                 strategy=strategy, common_k=_common_k(cfg))
    elif strategy == "ls_svd_regular":
        W = weight_grid(d, l, GridMode.REGULAR, wg.box)
        one = _ls_report(cfg, dataset, W, cfg.train.seed, cfg.truncate)
        reports = [replace(one, seed=cfg.train.seed + r) for r in range(cfg.runs)]
    elif strategy == "ls_svd_uniform":
        reports = [_ls_report(cfg, dataset, weight_grid(d, l, GridMode.UNIFORM, wg.box, wg.seed + r),
                              cfg.train.seed + r, cfg.truncate) for r in range(cfg.runs)]
    else:
        raise ConfigError(f"unknown strategy {strategy!r}", "strategy")
    for r in reports:
        r.strategy = strategy
    return reports


def _report_document(cfg: ExperimentConfig, reports: list[HedgeReport], extra: dict | None = None) -> dict:
    doc = {
        "schema": 1,
        "experiment": cfg.name,
        "payoff": cfg.payoff.to_dict(),
        "train": cfg.train.to_dict(),
        "runs": [r.to_dict(include_metadata=False) for r in reports],
        "summary": ensemble_summary(reports),
        "metadata": {
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "wall_clock_seconds": [r.wall_clock_seconds for r in reports],
        },
    }
    if extra:
        doc.update(extra)
    return doc


def _out_dir(args, cfg: ExperimentConfig) -> Path:
    return Path(args.out) if args.out else Path("results") / cfg.name


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if getattr(args, "seed_override", None) is not None:
        cfg = replace(cfg, train=replace(cfg.train, seed=args.seed_override))
    return cfg


def cmd_train(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    dataset = build_dataset(cfg)
    reports = run_strategy(cfg, cfg.strategy, dataset, jobs=args.jobs)
    out = _out_dir(args, cfg)
    for i, r in enumerate(reports):
        if r.history is not None:
            atomic_write_text(out / f"loss_run{i}.csv", r.history.to_csv())
        if r.portfolio is not None:
            atomic_write_text(out / f"portfolio_run{i}.csv", r.portfolio.to_csv())
    atomic_write_text(out / "report.json", dumps_json(_report_document(cfg, reports)))
    s = ensemble_summary(reports)
    print(f"{cfg.name}: {cfg.strategy} runs={len(reports)} mean MAE={s['mae_mean']:.6g} "
          f"best MAE={s['mae_min']:.6g} -> {out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    strategies = cfg.compare or (cfg.strategy,)
    dataset = build_dataset(cfg)
    rows, by_strategy = [], {}
    for s in strategies:
        reports = run_strategy(cfg, s, dataset, jobs=args.jobs)
        maes = [r.mae for r in reports]
        mean, half = ci95(maes) if len(maes) >= 2 else (float(maes[0]), 0.0)
        rows.append((s, mean, half, len(maes)))
        by_strategy[s] = {"mae": maes, "mean": mean, "ci95_half_width": half,
                          "diagnostics": [r.diagnostics for r in reports]}
        print(f"{cfg.name}: {s:16s} mean MAE={mean:.6g} +/- {half:.3g}")
    out = _out_dir(args, cfg)
    lines = ["strategy,mean_mae,ci95_half_width,runs"]
    lines += [f"{s},{m!r},{h!r},{n}" for s, m, h, n in rows]
    atomic_write_text(out / "compare.csv", "\n".join(lines) + "\n")
    doc = {"schema": 1, "experiment": cfg.name, "payoff": cfg.payoff.to_dict(),
           "train": cfg.train.to_dict(), "ci_method": CI_METHOD, "strategies": by_strategy,
           "metadata": {"timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat()}}
    atomic_write_text(out / "compare.json", dumps_json(doc))
    if cfg.expect_lowest is not None:
        best = min(rows, key=lambda r: r[1])[0]
        if best != cfg.expect_lowest:
            print(f"expected {cfg.expect_lowest} to have the lowest mean MAE, got {best}", file=sys.stderr)
            return EXIT_TOLERANCE
    return EXIT_OK


def cmd_export_grid(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    if cfg.payoff.dim != 2:
        raise ConfigError("grid export is defined for two-dimensional payoffs", "payoff.dim")
    dataset = build_dataset(cfg)
    cfg1 = replace(cfg, runs=1)
    report = run_strategy(cfg1, cfg.strategy, dataset, jobs=1)[0]
    s = cfg.sampling
    grid = sample_grid(s.lo, s.hi, cfg.grid_points_per_dim, dim=2)
    params = report.params
    kind = _NN_KINDS.get(cfg.strategy, RestrictionKind.UNRESTRICTED)
    if cfg.strategy == "ls_gd":
        kind = Restriction.predetermined(params.W, params.strikes, freeze_eta=True)
    out = _out_dir(args, cfg)
    atomic_write_text(out / "error_grid.csv",
                      export_error_grid(cfg.payoff, lambda X: forward(params, kind, X), grid))
    atomic_write_text(out / "report.json", dumps_json(_report_document(cfg1, [report])))
    print(f"{cfg.name}: training MAE={report.mae:.6g}; grid of {grid.m} points -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------- verification suites


def _check(name: str, value: float, reference: float, tol: float) -> dict:
    gap = abs(float(value) - float(reference))
    return {"name": name, "value": float(value), "reference": float(reference), "gap": gap,
            "tol": tol, "passed": bool(gap <= tol)}


def analytic_suite(q: analytic.QuadratureSpec = analytic.QuadratureSpec()) -> list[dict]:
    checks = []
    rng = np.random.Generator(np.random.Philox(2024))
    g1_cases = [(x, k) for x, k in zip(np.linspace(-3.0, 3.0, 20), rng.uniform(-1.5, 1.5, 20))]
    spec1 = PayoffSpec("GaussianExample", 1)
    for x, k in g1_cases:
        val = analytic.span_quadrature_gaussian(1, [x], k, q)
        ref = payoff_values(spec1, np.array([[x]]), strike=k)[0]
        checks.append(_check(f"G1 spanning x={x:.4f} k={k:.4f}", val, ref, 1e-6))
    spec2 = PayoffSpec("GaussianExample", 2)
    pts2 = [(1.0, 0.5, 0.7)] + [tuple(v) for v in rng.uniform(-2, 2, (9, 3))]
    for x1, x2, k in pts2:
        val = analytic.span_quadrature_gaussian(2, [x1, x2], k, q)
        ref = payoff_values(spec2, np.array([[x1, x2]]), strike=k)[0]
        checks.append(_check(f"G2 spanning x=({x1:.4f},{x2:.4f}) k={k:.4f}", val, ref, 1e-4))
    checks.append(_check("integral of g1", analytic.adaptive_quad(analytic.g1, -q.T, q.T, q), 0.0, 1e-10))
    for c in (1.3, -0.4, 2.5):
        checks.append(_check(f"basket call FT integral c={c}", analytic.basket_call_ft_integral(c, q),
                             2 * math.pi * abs(c), 1e-6))
    checks.append(_check("Carr-Madan G1(1.2, 1)", analytic.carr_madan_integral(1.2, 1.0, q),
                         1.2 * math.exp(-1.0 / 1.44), 1e-6))
    return checks


def weakform_suite(q: analytic.QuadratureSpec = analytic.QuadratureSpec()) -> list[dict]:
    from scipy.special import dawsn

    checks = []
    for a in (1.0, 2.0, 0.5):
        phi = weakform.gaussian(a)
        r = weakform.verify_tnbis_d1(phi, q)
        checks.append(_check(f"d=1 cosine identity {phi.name}", r.lhs, r.rhs, 1e-8))
    for a, b in ((1.0, 1.0), (1.0, 2.0), (0.5, 2.0)):
        p1, p2 = weakform.gaussian(a), weakform.gaussian(b)
        r = weakform.verify_tnbis_d2(p1, p2, q)
        checks.append(_check(f"d=2 cosine identity {p1.name} x {p2.name}", r.lhs, r.rhs, 1e-4))
        checks.append(_check(f"d=2 weak integral {p1.name} x {p2.name}", r.weak_rhs,
                             r.rhs - p1(0.0) * p2(0.0), 1e-4))
    battery = [weakform.gaussian(1.0), weakform.gaussian(2.0), weakform.gaussian(1.0, 3.0),
               weakform.shifted_gaussian(0.5), weakform.shifted_gaussian(-1.2, 2.0),
               weakform.poly_gaussian(1), weakform.poly_gaussian(2), weakform.poly_gaussian(3, 0.5)]
    for phi in battery:
        for c in (-2.0, -1.0, 0.0, 0.5, 3.0):
            checks.append(_check(f"pv {phi.name} c={c}", weakform.cpv(phi, c, q),
                                 weakform.eps_limit_oracle(phi, c, T=q.T), 1e-8))
    for c in (-1.0, 0.5, 3.0):
        checks.append(_check(f"pv exp(-w^2) c={c} vs Dawson closed form", weakform.cpv(battery[0], c, q),
                             -2 * math.sqrt(math.pi) * dawsn(c), 1e-8))
    for p1, p2 in ((battery[3], battery[4]), (battery[3], battery[5])):
        checks.append(_check(f"pv order exchange {p1.name} x {p2.name}", weakform.iterated_cpv(p1, p2, q),
                             -weakform.iterated_cpv(p2, p1, q), 1e-8))
    for n in (1, 10, 100):
        for d in (1, 2):
            checks.append(_check(f"mollifier mass n={n} d={d}",
                                 weakform.mollifier_mass(weakform.MollifierSpec(n, d)), 1.0, 1e-10))
    checks.append(_check("mollifier Dirac limit n=100 cos",
                         weakform.mollifier_action(weakform.MollifierSpec(100, 1), math.cos), 1.0, 1e-3))
    checks.append(_check("bump integral I0", weakform.bump_integral(), 0.443994, 1e-6))
    return checks


FD_STEP = 1e-6
FD_REL_TOL = 1e-5
FD_FLOOR = 1e-4
MIN_MARGIN = 1e-3


def _draw_gradient_case(rng, kind: RestrictionKind):
    """Random parameters and batch with every kink at least MIN_MARGIN away."""
    while True:
        l, d, n = int(rng.integers(1, 6)), int(rng.integers(1, 5)), int(rng.integers(1, 8))
        W = rng.uniform(-1.5, 1.5, (l, d))
        restriction = (Restriction.predetermined(W, rng.uniform(0.2, 1.5, l), freeze_eta=bool(rng.integers(2)))
                       if kind is RestrictionKind.PREDETERMINED else Restriction(kind))
        strikes = (restriction.frozen_strikes if kind is RestrictionKind.PREDETERMINED
                   else rng.uniform(0.2, 1.5, l))
        params = SpanParams.from_blocks(W, rng.normal(size=d), strikes, rng.normal(),
                                        rng.normal(size=l), rng.uniform(-1.5, 1.5, l))
        X = rng.uniform(-2, 2, (n, d))
        # residuals of order one keep the loss, and hence difference roundoff, small
        y = forward(params, kind, X) + rng.normal(scale=0.5, size=n)
        if kind is RestrictionKind.LONG_ONLY and np.min(np.abs(W)) < MIN_MARGIN:
            continue
        if kind is RestrictionKind.SINGLE_ASSET and d > 1:
            srt = np.sort(W, axis=1)
            if np.min(srt[:, -1] - srt[:, -2]) < MIN_MARGIN:
                continue
        z = params.eta * (X @ apply_psi(kind, W).T - params.strikes)
        if np.min(np.abs(z)) < MIN_MARGIN:
            continue
        return params, restriction, X, y


def gradient_suite(draws: int = 100, seed: int = 7) -> list[dict]:
    """Analytic gradients against central differences for every restriction kind."""
    rng = np.random.Generator(np.random.Philox(seed))
    checks = []
    for kind in RestrictionKind:
        worst, zero_ok = 0.0, True
        for i in range(draws):
            params, restriction, X, y = _draw_gradient_case(rng, kind)
            zeta = 0.0 if i % 3 == 0 else 1e-3
            reg_form = "squared" if i % 2 else "norm"
            _, grad = loss_and_grad_arrays(params, restriction, X, y, zeta, reg_form)
            frozen = np.zeros(params.theta.size, dtype=bool)
            if kind is RestrictionKind.PREDETERMINED:
                frozen[params._slices["W"]] = True
                frozen[params._slices["strikes"]] = True
                if restriction.freeze_eta:
                    frozen[params._slices["eta"]] = True
                zero_ok &= bool(np.all(grad[frozen] == 0.0))
            for j in np.flatnonzero(~frozen):
                tp, tm = params.copy(), params.copy()
                tp.theta[j] += FD_STEP
                tm.theta[j] -= FD_STEP
                fp = loss_and_grad_arrays(tp, restriction, X, y, zeta, reg_form)[0]
                fm = loss_and_grad_arrays(tm, restriction, X, y, zeta, reg_form)[0]
                fd = (fp - fm) / (2 * FD_STEP)
                rel = abs(grad[j] - fd) / max(abs(grad[j]), abs(fd), FD_FLOOR)
                worst = max(worst, rel)
        checks.append({"name": f"finite differences {kind.value} ({draws} draws)", "value": worst,
                       "reference": 0.0, "gap": worst, "tol": FD_REL_TOL,
                       "passed": bool(worst <= FD_REL_TOL and zero_ok)})
    return checks


SUITES = {"analytic": analytic_suite, "weakform": weakform_suite, "gradients": gradient_suite}


def cmd_verify(args) -> int:
    names = args.suite or list(SUITES)
    all_checks = []
    for name in names:
        t0 = time.perf_counter()
        checks = SUITES[name]()
        for c in checks:
            c["suite"] = name
            print(f"[{'PASS' if c['passed'] else 'FAIL'}] {name}: {c['name']} gap={c['gap']:.3g} tol={c['tol']:g}")
        print(f"{name}: {sum(c['passed'] for c in checks)}/{len(checks)} passed in "
              f"{time.perf_counter() - t0:.1f}s")
        all_checks.extend(checks)
    if args.out:
        atomic_write_text(Path(args.out) / "verify.json", weakform.verification_report(all_checks))
    return EXIT_OK if all(c["passed"] for c in all_checks) else EXIT_TOLERANCE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="basketspan", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="JSON experiment file")
        p.add_argument("--jobs", type=int, default=1, help="parallel ensemble runs")
        p.add_argument("--seed-override", type=int, default=None, help="replace train.seed")
        p.add_argument("--out", default=None, help="output directory")

    common(sub.add_parser("train", help="train an ensemble and write reports"))
    common(sub.add_parser("compare", help="compare spanning strategies on one payoff"))
    common(sub.add_parser("export-grid", help="train once and export a 2D error grid"))
    pv = sub.add_parser("verify", help="run the analytic, weak-form and gradient oracles")
    common(pv, needs_config=False)
    pv.add_argument("--suite", action="append", choices=sorted(SUITES),
                    help="suite to run (repeatable); default all")
    return parser


COMMANDS = {"train": cmd_train, "compare": cmd_compare, "verify": cmd_verify,
            "export-grid": cmd_export_grid}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
