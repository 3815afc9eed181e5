import numpy as np
import pytest

from basketspan.network import Restriction, SpanParams
from basketspan.payoff import PayoffSpec
from basketspan.sampling import Dataset, fill_targets, sample_grid, sample_uniform
from basketspan.trainer import (AdamState, InitSpec, NonFiniteGradient, TrainConfig, adam_step,
                                evaluate, init_params, train, train_ensemble)


def relu_dataset(n=101):
    ds = sample_grid(0, 2, n, dim=1)
    return Dataset(ds.points, np.maximum(ds.points[:, 0] - 1.0, 0.0), ds.lo, ds.hi)


class TestAdam:
    def test_first_step_is_minus_lr(self):
        theta, state = adam_step(np.array([0.0]), np.array([1.0]), AdamState.zeros_like(np.zeros(1)), 0.01)
        assert theta[0] == pytest.approx(-0.01, rel=1e-6)
        assert state.t == 1

    def test_first_step_sign_only(self):
        g = np.array([1e-3, -50.0])
        theta, _ = adam_step(np.zeros(2), g, AdamState.zeros_like(g), 0.01)
        np.testing.assert_allclose(theta, [-0.01, 0.01], rtol=1e-4)

    def test_zero_gradient(self):
        p = SpanParams.from_blocks([[0.3, -0.2]], [0.1, 0.2], [1.0], 0.5, [0.7], [1.0])
        new, state = adam_step(p, np.zeros_like(p.theta), AdamState.zeros_like(p.theta), 0.01)
        assert new == p and state.t == 1

    def test_convex_scalar(self):
        theta, state = np.array([0.0]), AdamState.zeros_like(np.zeros(1))
        for _ in range(200):
            theta, state = adam_step(theta, 2 * (theta - 3.0), state, 0.1)
        assert abs(theta[0] - 3.0) <= 0.05

    def test_state_not_mutated(self):
        s0 = AdamState.zeros_like(np.zeros(3))
        adam_step(np.zeros(3), np.ones(3), s0, 0.01)
        assert s0.t == 0 and not np.any(s0.m)

    def test_strike_projection(self):
        p = SpanParams.from_blocks([[1.0]], [0.0], [1e-6], 0.0, [1.0], [1.0])
        g = np.zeros_like(p.theta)
        g[2] = 1.0
        new, _ = adam_step(p, g, AdamState.zeros_like(p.theta), 0.5)
        assert new.strikes[0] == 1e-6

    @pytest.mark.parametrize("block, index", [("W", 0), ("strikes", 2), ("nu", 4), ("eta", 5)])
    def test_non_finite_names_block(self, block, index):
        p = SpanParams.from_blocks([[1.0]], [0.0], [1.0], 0.0, [1.0], [1.0])
        g = np.zeros_like(p.theta)
        g[index] = np.nan
        with pytest.raises(NonFiniteGradient, match=block):
            adam_step(p, g, AdamState.zeros_like(p.theta), 0.01)


class TestConfig:
    def test_lr_schedule(self):
        cfg = TrainConfig(n_options=2)
        assert cfg.lr_after_epoch(299) == 0.01
        assert cfg.lr_after_epoch(300) == pytest.approx(0.008)
        assert cfg.lr_after_epoch(900) == pytest.approx(0.01 * 0.8**3)

    @pytest.mark.parametrize("bad", [dict(lr0=0.0), dict(lr_decay=0.0), dict(lr_decay=1.5),
                                     dict(adam_beta1=1.0), dict(epochs=0), dict(reg_form="l1"),
                                     dict(weight_decay=-1.0)])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            TrainConfig(n_options=2, **bad)

    def test_dict_roundtrip(self):
        cfg = TrainConfig(n_options=7, epochs=3, init=InitSpec(eta="calls"))
        assert TrainConfig.from_dict(cfg.to_dict()) == cfg

    def test_unknown_field(self):
        with pytest.raises(ValueError):
            TrainConfig.from_dict({"n_options": 2, "momentum": 0.9})


class TestInit:
    def test_defaults(self):
        p = init_params(6, 3, Restriction("Unrestricted"), InitSpec(), np.random.default_rng(0))
        assert np.all(np.abs(p.W) <= 1) and np.all(p.strikes == 1) and np.all(np.abs(p.nu) <= 0.1)
        np.testing.assert_array_equal(p.eta, [1, -1, 1, -1, 1, -1])
        assert p.alpha == 0 and not np.any(p.mu)

    def test_predetermined_keeps_weights(self):
        W = np.arange(6.0).reshape(3, 2)
        p = init_params(3, 2, Restriction.predetermined(W, freeze_eta=True), InitSpec(),
                        np.random.default_rng(0))
        np.testing.assert_array_equal(p.W, W)
        assert np.all(p.eta == 1)


class TestTrain:
    def test_schedule_and_steps(self):
        ds = fill_targets(sample_uniform(0, 2, 50, seed=0, dim=2), PayoffSpec("BestOfCall", 2))
        cfg = TrainConfig(n_options=3, epochs=7, lr_decay_every=3)
        res = train(None, ds, "Unrestricted", cfg)
        assert res.steps == 70
        np.testing.assert_allclose(res.history.lr, [cfg.lr_after_epoch(e) for e in range(1, 8)])
        assert res.history.to_csv().splitlines()[0] == "epoch,loss,lr"

    def test_zero_target(self):
        ds = sample_uniform(0, 2, 40, seed=0, dim=2)
        ds = Dataset(ds.points, np.zeros(40), ds.lo, ds.hi)
        res = train(None, ds, "Unrestricted", TrainConfig(n_options=4, epochs=5),
                    params=SpanParams.zeros(4, 2))
        assert evaluate(res.params, res.restriction, ds) == (0.0, 0.0)
        assert np.all(res.params.W == 0) and np.all(res.params.nu == 0)
        # only the strike floor survives, so the objective is the penalty on it
        np.testing.assert_array_equal(res.params.strikes, 1e-6)
        assert res.history.loss[-1] == pytest.approx(1e-3 * 1e-6 * 2)

    def test_representable_relu(self):
        # a live unit started near the solution; no penalty so the exact fit is the minimizer
        p0 = SpanParams.from_blocks([[0.8]], [0.0], [1.0], 0.0, [0.1], [1.0])
        ds = relu_dataset()
        res = train(None, ds, "Unrestricted", TrainConfig(n_options=1, weight_decay=0.0), params=p0)
        assert evaluate(res.params, res.restriction, ds)[1] <= 1e-3

    def test_deterministic(self):
        ds = fill_targets(sample_uniform(0, 2, 60, seed=1, dim=2), PayoffSpec("WorstOfCall", 2))
        cfg = TrainConfig(n_options=5, epochs=20, seed=4)
        a, b = train(None, ds, "LongOnly", cfg), train(None, ds, "LongOnly", cfg)
        assert a.params == b.params
        np.testing.assert_array_equal(a.history.loss, b.history.loss)

    def test_dimension_mismatch(self):
        ds = sample_uniform(0, 2, 20, seed=0, dim=3)
        with pytest.raises(ValueError):
            train(PayoffSpec("BestOfCall", 2), ds, "Unrestricted", TrainConfig(n_options=2, epochs=1))


class TestEnsemble:
    def test_single_run_equals_train(self):
        spec = PayoffSpec("BestOfCall", 2)
        ds = fill_targets(sample_uniform(0, 2, 60, seed=1, dim=2), spec)
        cfg = TrainConfig(n_options=4, epochs=10, seed=3)
        (rep,) = train_ensemble(spec, ds, "Unrestricted", cfg, runs=1)
        res = train(spec, ds, "Unrestricted", cfg)
        assert rep.params == res.params and rep.seed == 3
        assert rep.mae == pytest.approx(evaluate(res.params, res.restriction, ds)[1], rel=0, abs=0)

    def test_seeds_and_repeatability(self):
        spec = PayoffSpec("BestOfCall", 2)
        ds = fill_targets(sample_uniform(0, 2, 60, seed=1, dim=2), spec)
        cfg = TrainConfig(n_options=4, epochs=5, seed=10)
        a = train_ensemble(spec, ds, "Unrestricted", cfg, runs=3)
        b = train_ensemble(spec, ds, "Unrestricted", cfg, runs=3)
        assert [r.seed for r in a] == [10, 11, 12]
        assert [r.to_dict(False) for r in a] == [r.to_dict(False) for r in b]
        assert a[0].params != a[1].params

    def test_predetermined_shares_weights(self):
        spec = PayoffSpec("BestOfCall", 2)
        ds = fill_targets(sample_uniform(0, 2, 60, seed=1, dim=2), spec)
        W = np.random.default_rng(0).uniform(-1, 1, (4, 2))
        reps = train_ensemble(spec, ds, Restriction.predetermined(W), TrainConfig(n_options=4, epochs=3),
                              runs=2)
        for r in reps:
            np.testing.assert_array_equal(r.params.W, W)

    def test_runs_positive(self):
        with pytest.raises(ValueError):
            train_ensemble(PayoffSpec("BestOfCall", 2), sample_uniform(0, 2, 10, seed=0, dim=2),
                           "Unrestricted", TrainConfig(n_options=2), runs=0)
