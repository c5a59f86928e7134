import math

import numpy as np
import pytest

from fixtures import (bb_market, bs_market, ls_market, semeraro_market, vg_market, vg_model,
                      vgpp_market, vgpp_model)
from levy_exchange.errors import DomainError
from levy_exchange.mc_engine import (BLOCK_SIZE, SimPlan, block_rng, price_exchange_mc,
                                     simulate_increments, worker_count)
from levy_exchange.models import CommonSubordinatorModel
from levy_exchange.pricing_closed import ExchangeContract, price_exchange_closed
from levy_exchange.pricing_fourier import price_exchange_fourier

ALL_MODELS = [bs_market, vg_market, vgpp_market, semeraro_market, ls_market, bb_market]


def test_plan_validation_and_blocks():
    with pytest.raises(DomainError):
        SimPlan(1)
    with pytest.raises(DomainError):
        SimPlan(11, antithetic=True)
    with pytest.raises(DomainError):
        SimPlan(10, n_steps=0)
    plan = SimPlan(150_000, antithetic=False)
    blocks = plan.blocks()
    assert [b for b, _ in blocks] == [0, 1, 2]
    assert sum(n for _, n in blocks) == 150_000
    assert blocks[0][1] == BLOCK_SIZE


def test_block_streams_independent_of_order():
    a = block_rng(5, 3).standard_normal(4)
    block_rng(5, 2).standard_normal(10)
    assert np.array_equal(block_rng(5, 3).standard_normal(4), a)
    assert not np.array_equal(block_rng(5, 2).standard_normal(4), a)


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("LEVY_EXCHANGE_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("LEVY_EXCHANGE_THREADS", "many")
    with pytest.raises(DomainError):
        worker_count()


@pytest.mark.parametrize("build", [vgpp_market, ls_market, bb_market])
def test_thread_count_does_not_change_results(build, monkeypatch):
    spec = build()
    c = ExchangeContract(100.0, 100.0, 1.0)
    plan = SimPlan(300_000, seed=9)
    out = []
    for threads in ("1", "4"):
        monkeypatch.setenv("LEVY_EXCHANGE_THREADS", threads)
        rep = price_exchange_mc(c, spec, plan)
        out.append((rep.price, rep.std_error))
    assert out[0] == out[1]
    monkeypatch.setenv("LEVY_EXCHANGE_THREADS", "1")
    y1 = simulate_increments(spec, [0.5, 1.0], SimPlan(140_000, seed=2))
    monkeypatch.setenv("LEVY_EXCHANGE_THREADS", "3")
    y3 = simulate_increments(spec, [0.5, 1.0], SimPlan(140_000, seed=2))
    assert np.array_equal(y1, y3)


def test_seed_changes_paths():
    spec = vg_model()
    a = simulate_increments(spec, [1.0], SimPlan(1000, seed=1))
    b = simulate_increments(spec, [1.0], SimPlan(1000, seed=2))
    assert a.shape == (1000, 1, 2)
    assert not np.array_equal(a, b)


@pytest.mark.parametrize("build", ALL_MODELS)
def test_martingale(build):
    # E[exp(Y_j(T) + omega_j T)] = 1 for each asset
    spec = build()
    T = 0.5
    y = simulate_increments(spec, [T], SimPlan(400_000, seed=3, antithetic=False))[:, 0, :]
    om = spec.drift_correctors()
    x = np.exp(y + om * T)
    se = x.std(axis=0) / math.sqrt(len(x))
    assert np.all(np.abs(x.mean(axis=0) - 1.0) <= 4.0 * se)


@pytest.mark.parametrize("build", ALL_MODELS)
def test_increment_covariance(build):
    spec = build()
    y = simulate_increments(spec, [0.25, 1.0], SimPlan(400_000, seed=4, antithetic=False))
    steps = [0.25, 0.75]
    for k, dt in enumerate(steps):
        emp = np.cov(y[:, k, :].T)
        model = spec.covariance(dt)
        # loose: heavy-tailed models have noisy second moments
        assert np.allclose(emp, model, rtol=0.05, atol=0.05 * np.abs(model).max())
    # increments over disjoint steps are uncorrelated
    assert abs(np.corrcoef(y[:, 0, 0], y[:, 1, 0])[0, 1]) < 0.01


def test_antithetic_pairs():
    spec = vg_model()
    y = simulate_increments(spec, [1.0], SimPlan(1000, seed=8, block_size=1000))[:, 0, :]
    # pairs share the clock and flip the Brownian part: y_i + y_{i+m} = 2 theta g
    s = y[:500] + y[500:]
    g = s / (2.0 * np.asarray(spec.theta))
    assert np.allclose(g[:, 0], g[:, 1], rtol=1e-10)
    assert np.all(g >= 0.0)


def test_bad_time_grid():
    with pytest.raises(DomainError):
        simulate_increments(vg_model(), [0.5, 0.5], SimPlan(10))
    with pytest.raises(DomainError):
        simulate_increments(vg_model(), [], SimPlan(10))


def test_zero_volatility_has_zero_error():
    spec = CommonSubordinatorModel.bs(0.02, [0.0, 0.0], [0.0, 0.0], 0.0)
    c = ExchangeContract(100.0, 103.0, 2.0)
    rep = price_exchange_mc(c, spec, SimPlan(200_000, seed=1))
    assert rep.std_error == 0.0
    assert rep.price == pytest.approx(3.0, rel=1e-12)


@pytest.mark.parametrize("build", [vg_model, lambda: vgpp_model(0.3), bs_market])
def test_mc_matches_closed(build):
    spec = build()
    c = ExchangeContract(100.0, 105.0, 1.0)
    closed = price_exchange_closed(c, spec).price
    rep = price_exchange_mc(c, spec, SimPlan(400_000, seed=12))
    assert abs(rep.price - closed) <= 4.0 * rep.std_error
    assert rep.diagnostics["n_paths"] == 400_000


def test_mc_error_shrinks_with_paths():
    spec = vgpp_model(0.3)
    c = ExchangeContract(100.0, 105.0, 1.0)
    se_small = price_exchange_mc(c, spec, SimPlan(50_000, seed=1)).std_error
    se_large = price_exchange_mc(c, spec, SimPlan(800_000, seed=1)).std_error
    assert se_large == pytest.approx(se_small / 4.0, rel=0.15)


def test_multistep_same_law():
    spec = vgpp_model(0.3)
    c = ExchangeContract(100.0, 105.0, 1.0)
    closed = price_exchange_closed(c, spec).price
    rep = price_exchange_mc(c, spec, SimPlan(400_000, seed=6, n_steps=4))
    assert abs(rep.price - closed) <= 4.0 * rep.std_error


def test_positive_strike_above_fourier_bound():
    spec = vg_model()
    c = ExchangeContract(100.0, 110.0, 1.0, 5.0)
    mc = price_exchange_mc(c, spec, SimPlan(400_000, seed=3))
    bound = price_exchange_fourier(c, spec).price
    assert bound <= mc.price + 4.0 * mc.std_error
    assert mc.price - bound < 0.02 * mc.price


def test_three_assets_rejected_for_pricing():
    three = CommonSubordinatorModel.bs(0.0, [0, 0, 0], [0.1, 0.1, 0.1], np.eye(3))
    with pytest.raises(DomainError):
        price_exchange_mc(ExchangeContract(1.0, 1.0, 1.0), three, SimPlan(10))
    assert simulate_increments(three, [1.0], SimPlan(10)).shape == (10, 1, 3)
