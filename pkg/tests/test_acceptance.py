"""End-to-end acceptance checks on the shipped configs.

Each criterion prints one PASS/FAIL line; the lines are repeated in the
terminal summary.  The d=20 and d=50 ordering checks are opt-in through
BASKETSPAN_SLOW=1 because they take hours on one core.
"""

import json
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from basketspan import cli
from basketspan.lstsq import solve_ls, weight_grid

from conftest import ACCEPTANCE_LINES

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
_CACHE = {}


def verdict(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def load(name):
    return cli.load_config(CONFIGS / f"{name}.json")


def ensemble(cfg, strategy):
    """Reports for one strategy, shared between criteria that train the same ensemble."""
    key = (json.dumps(cfg.payoff.to_dict(), sort_keys=True), repr(cfg.sampling),
           json.dumps(cfg.train.to_dict(), sort_keys=True), cfg.runs, strategy)
    if strategy not in ("nn", "single_asset", "long_only"):
        key += (repr(cfg.weight_grid), cfg.truncate)
    if key not in _CACHE:
        _CACHE[key] = cli.run_strategy(cfg, strategy, cli.build_dataset(cfg))
    return _CACHE[key]


def mean_mae(reports):
    return float(np.mean([r.mae for r in reports]))


FIG2 = [("fig2_dc", 0.05), ("fig2_boc", 0.02), ("fig2_woc", 0.015), ("fig2_bobc", 0.09), ("fig2_wobc", 0.06)]


def test_criterion_1_two_asset_best_run():
    parts, ok = [], True
    for name, bound in FIG2:
        reports = ensemble(load(name), "nn")
        best = min(r.mae for r in reports)
        slowest = max(r.wall_clock_seconds for r in reports)
        ok &= len(reports) == 10 and best <= bound and slowest <= 120
        parts.append(f"{name} best={best:.4f}<={bound} max_run={slowest:.1f}s")
    verdict(1, "two-asset payoffs, best-of-10 MAE", ok, "; ".join(parts))


def test_criterion_2_nn_beats_single_asset():
    parts, ok = [], True
    for d in (2, 3, 4, 5):
        cfg = load(f"fig3_d{d}")
        nn, sa = mean_mae(ensemble(cfg, "nn")), mean_mae(ensemble(cfg, "single_asset"))
        ok &= nn < sa
        parts.append(f"d={d} nn={nn:.4f} single_asset={sa:.4f}")
    verdict(2, "NN beats single-asset on best-of call", ok, "; ".join(parts))


def test_criterion_3_regular_grid_least_squares():
    raw_cfg = load("fig4_d3_untruncated")
    ds = cli.build_dataset(raw_cfg)
    W = weight_grid(3, raw_cfg.train.n_options, raw_cfg.weight_grid.mode, raw_cfg.weight_grid.box)
    try:
        raw = solve_ls(ds, W, truncate=False)
        exploded, raw_detail = raw.diagnostics["coef_norm"] >= 1e6, f"coef_norm={raw.diagnostics['coef_norm']:.3g}"
    except np.linalg.LinAlgError as exc:
        exploded, raw_detail = True, f"normal equations failed: {exc}"

    cfg = load("fig4_d3")
    svd = ensemble(cfg, "ls_svd_regular")[0]
    bounded = (svd.diagnostics["coef_norm"] <= 1e3 and math.isfinite(svd.mae)
               and bool(np.all(np.isfinite(svd.params.theta))))
    nn = mean_mae(ensemble(cfg, "nn"))
    ok = exploded and bounded and nn < svd.mae
    verdict(3, "regular-grid least squares on d=3 best-of call", ok,
            f"untruncated: {raw_detail}; truncated coef_norm={svd.diagnostics['coef_norm']:.3g} "
            f"mae={svd.mae:.4f}; nn mean={nn:.4f}")


def _ordering(name):
    cfg = load(name)
    means = {s: mean_mae(ensemble(cfg, s)) for s in cfg.compare}
    best = min(means, key=means.get)
    detail = ", ".join(f"{s}={m:.4f}" for s, m in means.items())
    return best == "nn", detail


def test_criterion_4_dispersion_d5():
    ok, detail = _ordering("fig5_d5_l78")
    verdict(4, "NN lowest mean MAE on dispersion call d=5", ok, detail)


@pytest.mark.skipif(os.environ.get("BASKETSPAN_SLOW") != "1", reason="opt-in: set BASKETSPAN_SLOW=1")
@pytest.mark.parametrize("name", ["fig5_d20_l410", "fig5_d50_l808"])
def test_criterion_4_dispersion_high_dimension(name):
    ok, detail = _ordering(name)
    verdict(4, f"NN lowest mean MAE ({name})", ok, detail)


def test_criterion_5_d1_weight_concentration():
    cfg = load("fig6_d1")
    good, parts = 0, []
    for r in ensemble(cfg, "nn"):
        port = r.portfolio
        active = np.abs(port.nu_prime) > 0.05
        w = np.abs(port.w_prime[active, 0])
        hit = bool(np.all((w >= 0.8) & (w <= 1.2)))
        good += hit
        parts.append(f"{int(active.sum())}{'' if hit else '!'}")
    verdict(5, "d=1 dispersion weights concentrate at +-1", good >= 8,
            f"{good}/10 runs; active units per run {' '.join(parts)}")


def test_criterion_6_gradient_oracle():
    t0 = time.perf_counter()
    checks = cli.gradient_suite(draws=100)
    worst = max(c["gap"] for c in checks)
    verdict(6, "analytic gradients vs central differences", all(c["passed"] for c in checks),
            f"worst relative error {worst:.2e} over 4 kinds x 100 draws in {time.perf_counter() - t0:.1f}s")


def test_criterion_7_analytic_identities():
    checks = cli.analytic_suite()
    failed = [c["name"] for c in checks if not c["passed"]]
    verdict(7, "analytic identities", not failed,
            f"{len(checks) - len(failed)}/{len(checks)} checks" + (f"; failed {failed}" if failed else ""))


def test_criterion_8_weak_form_identities():
    t0 = time.perf_counter()
    checks = cli.weakform_suite()
    elapsed = time.perf_counter() - t0
    failed = [c["name"] for c in checks if not c["passed"]]
    verdict(8, "weak-form identities", not failed and elapsed <= 60,
            f"{len(checks) - len(failed)}/{len(checks)} checks in {elapsed:.1f}s"
            + (f"; failed {failed}" if failed else ""))


def test_criterion_9_reproducible_reports(tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"run{i}"
        assert cli.main(["train", "--config", str(CONFIGS / "smoke.json"), "--out", str(out)]) == 0
        outs.append(out)
    docs = []
    for out in outs:
        doc = json.loads((out / "report.json").read_text())
        doc.pop("metadata")
        docs.append(json.dumps(doc, sort_keys=True))
    same_csv = all((outs[0] / n).read_bytes() == (outs[1] / n).read_bytes()
                   for n in ("loss_run0.csv", "portfolio_run0.csv"))
    verdict(9, "repeated training gives identical reports", docs[0] == docs[1] and same_csv,
            "report.json equal outside metadata; CSV files byte-identical" if same_csv else "files differ")
