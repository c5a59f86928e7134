import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, stats

from fixtures import RATE, bs_market, vg_model, vgpp_model
from levy_exchange import gammapp
from levy_exchange.errors import DomainError, NumericalError, NumericalStabilityWarning
from levy_exchange.models import CommonSubordinatorModel
from levy_exchange.pricing_closed import (ExchangeContract, margrabe, price_exchange_closed,
                                          price_margrabe_bs, price_vg_exchange_closed,
                                          price_vg_exchange_quadrature,
                                          price_vgpp_exchange_closed)


def swapped(spec):
    """The same model with the two assets relabelled."""
    d = spec.to_dict()
    d["theta"] = d["theta"][::-1]
    d["sigma"] = d["sigma"][::-1]
    return spec.replace(**d)


def clock_oracle(contract, spec):
    """E over the clock G of the conditional Margrabe value, by direct quadrature."""
    T, r = contract.maturity_T, spec.rate
    th, sig = np.array(spec.theta), np.array(spec.sigma)
    kap = th + 0.5 * sig ** 2
    sub = spec.sub
    a, al, b = sub.a, sub.alpha, sub.beta
    om = -al * (np.log(b - a * kap) - np.log(b - kap))
    sb = math.sqrt(sig[0] ** 2 + sig[1] ** 2 - 2 * spec.rho[0, 1] * sig[0] * sig[1])

    def h(g):
        f1 = contract.s1_0 * math.exp(om[0] * T + kap[0] * g)
        f2 = contract.s2_0 * math.exp(om[1] * T + kap[1] * g)
        if g == 0.0 or sb == 0.0:
            return max(f2 - f1, 0.0)
        sd = sb * math.sqrt(g)
        d1 = (math.log(f2 / f1) + 0.5 * sd * sd) / sd
        return f2 * stats.norm.cdf(d1) - f1 * stats.norm.cdf(d1 - sd)

    law = gammapp.GammaPPParams(a, al * T, b)
    atom, _ = gammapp.density(law, 1.0)
    hi = stats.gamma.isf(1e-16, al * T, scale=1.0 / (b - kap.max()))
    body = integrate.quad(lambda g: h(g) * gammapp.density(law, g)[1], 0.0, hi, limit=500,
                          epsabs=1e-12, epsrel=1e-12)[0]
    return atom * h(0.0) + body


def test_margrabe_formula():
    # e^{-rT} S2 e^{rT} N(d1) - ...: martingale case
    s1, s2, T, sb = 100.0, 105.0, 1.0, 0.25
    d1 = (math.log(s2 / s1) + 0.5 * sb * sb * T) / (sb * math.sqrt(T))
    ref = s2 * stats.norm.cdf(d1) - s1 * stats.norm.cdf(d1 - sb * math.sqrt(T))
    assert margrabe(s1, s2, T, 0.03, 0.03, 0.03, sb) == pytest.approx(ref, rel=1e-14)
    assert margrabe(s1, s2, T, 0.03, 0.03, 0.03, 0.0) == 5.0


def test_bs_pricer():
    spec = bs_market()
    c = ExchangeContract(100.0, 100.0, 1.0)
    sb = math.sqrt(0.84 ** 2 + 0.91 ** 2 - 2 * 0.96 * 0.84 * 0.91)
    ref = 100.0 * (2.0 * stats.norm.cdf(0.5 * sb) - 1.0)
    assert price_margrabe_bs(c, spec).price == pytest.approx(ref, rel=1e-13)
    assert price_exchange_closed(c, spec).price == pytest.approx(ref, rel=1e-13)
    # drifts other than r enter through the forwards
    rep = price_margrabe_bs(c, spec, mu=[0.015, 0.05])
    assert rep.price == pytest.approx(margrabe(100, 100, 1.0, 0.015, 0.015, 0.05, sb), rel=1e-14)


@pytest.mark.parametrize("s2", [80.0, 100.0, 125.0])
def test_vg_closed_vs_clock_oracle(s2):
    c = ExchangeContract(100.0, s2, 1.0)
    spec = vg_model(alpha=2.0, beta=2.0)
    ref = clock_oracle(c, spec)
    assert price_vg_exchange_closed(c, spec).price == pytest.approx(ref, rel=1e-9)
    assert price_vg_exchange_quadrature(c, spec).price == pytest.approx(ref, rel=1e-9)


@pytest.mark.parametrize("a", [0.05, 0.3, 0.8])
def test_vgpp_series_vs_clock_oracle(a):
    c = ExchangeContract(100.0, 105.0, 1.0)
    spec = vgpp_model(a)
    ref = clock_oracle(c, spec)
    assert price_vgpp_exchange_closed(c, spec).price == pytest.approx(ref, rel=1e-8)


def test_vgpp_psi_methods_agree():
    c = ExchangeContract(100.0, 105.0, 1.0)
    spec = vgpp_model(0.5)
    rec = price_vgpp_exchange_closed(c, spec).price
    bes = price_vgpp_exchange_closed(c, spec, psi_method="bessel").price
    assert rec == pytest.approx(bes, rel=1e-10)
    with pytest.raises(ValueError):
        price_vgpp_exchange_closed(c, spec, psi_method="nope")


@given(st.floats(60.0, 160.0), st.floats(0.25, 3.0), st.floats(0.5, 4.0))
def test_vg_closed_matches_quadrature(s2, T, alpha):
    c = ExchangeContract(100.0, s2, T)
    spec = vg_model(alpha=alpha, beta=alpha)
    closed = price_vg_exchange_closed(c, spec).price
    quad = price_vg_exchange_quadrature(c, spec).price
    assert closed == pytest.approx(quad, rel=1e-6)


@given(st.floats(60.0, 160.0), st.floats(0.05, 0.95))
def test_vgpp_exchange_parity(s2, a):
    # (S2 - S1)^+ - (S1 - S2)^+ = S2 - S1 after discounting under a martingale measure
    c = ExchangeContract(100.0, s2, 1.0)
    spec = vgpp_model(a)
    call = price_vgpp_exchange_closed(c, spec).price
    put = price_vgpp_exchange_closed(ExchangeContract(s2, 100.0, 1.0), swapped(spec)).price
    assert call - put == pytest.approx(s2 - 100.0, abs=1e-8 * s2)


@given(st.floats(60.0, 160.0), st.floats(0.2, 3.0))
def test_vg_parity_and_bounds(s2, T):
    c = ExchangeContract(100.0, s2, T)
    spec = vg_model()
    call = price_vg_exchange_closed(c, spec).price
    put = price_vg_exchange_closed(ExchangeContract(s2, 100.0, T), swapped(spec)).price
    assert call - put == pytest.approx(s2 - 100.0, abs=1e-8 * s2)
    assert max(s2 - 100.0, 0.0) - 1e-9 <= call <= s2


@given(st.floats(0.1, 10.0))
def test_homogeneity(lam):
    spec = vgpp_model(0.4)
    base = price_vgpp_exchange_closed(ExchangeContract(100.0, 105.0, 1.0), spec).price
    scaled = price_vgpp_exchange_closed(ExchangeContract(100.0 * lam, 105.0 * lam, 1.0), spec).price
    assert scaled == pytest.approx(lam * base, rel=1e-10)


def test_vgpp_tail_bound_reported():
    rep = price_vgpp_exchange_closed(ExchangeContract(100.0, 105.0, 1.0), vgpp_model(0.3))
    assert rep.diagnostics["tail_bound"] <= 1e-9
    assert rep.diagnostics["atom_probability"] == pytest.approx(0.09)
    assert rep.diagnostics["series_terms"] > 10


def test_small_a_warning_and_cap():
    c = ExchangeContract(100.0, 105.0, 1.0)
    with pytest.warns(NumericalStabilityWarning):
        price_vgpp_exchange_closed(c, vgpp_model(0.005))
    with warnings.catch_warnings():
        warnings.simplefilter("error", NumericalStabilityWarning)
        price_vgpp_exchange_closed(c, vgpp_model(0.05))
    with pytest.raises(NumericalError) as info, pytest.warns(NumericalStabilityWarning):
        price_vgpp_exchange_closed(c, vgpp_model(0.001), max_terms=1000)
    assert info.value.nodes == 1000
    assert info.value.partial is not None


def test_zero_relative_volatility():
    # rho = 1 with equal sigma: the ratio S2/S1 only moves through the clock drift
    spec = CommonSubordinatorModel.vgpp(RATE, [-0.2, -0.1], [0.25, 0.25], 0.3, 2.0, 1.4, 1.0)
    c = ExchangeContract(100.0, 98.0, 1.0)
    ref = clock_oracle(c, spec)
    assert price_vgpp_exchange_closed(c, spec).price == pytest.approx(ref, rel=1e-8)
    vg = CommonSubordinatorModel.vg(RATE, [-0.2, -0.1], [0.25, 0.25], 2.0, 2.0, 1.0)
    rep = price_vg_exchange_closed(c, vg)
    assert rep.price == pytest.approx(clock_oracle(c, vg), rel=1e-8)
    assert "delegated" in rep.diagnostics


def test_input_checks():
    with pytest.raises(DomainError):
        ExchangeContract(0.0, 1.0, 1.0)
    with pytest.raises(DomainError):
        ExchangeContract(1.0, 1.0, 0.0)
    with pytest.raises(DomainError):
        ExchangeContract(1.0, 1.0, 1.0, -1.0)
    c = ExchangeContract(100.0, 100.0, 1.0, 5.0)
    with pytest.raises(DomainError, match="strike_K = 0"):
        price_vg_exchange_closed(c, vg_model())
    with pytest.raises(DomainError):
        price_vg_exchange_closed(ExchangeContract(100.0, 100.0, 1.0), vgpp_model(0.3))
    with pytest.raises(DomainError):
        price_exchange_closed(ExchangeContract(100.0, 100.0, 1.0),
                              CommonSubordinatorModel.bs(0.0, [0, 0, 0], [0.1, 0.1, 0.1], np.eye(3)))
