"""Closed-form exchange option pricers (payoff (S2(T) - S1(T))^+).

Conditionally on the common clock G = g the two log-prices are jointly
Gaussian, so the option is worth a Margrabe price with variance sigma_bar^2 g.
Integrating over g gives

* BS: the Margrabe formula itself (G = T);
* VG: two Psi(., .; alpha T) kernels after an exponential tilt of the gamma
  density (``price_vg_exchange_closed``), or a direct quadrature over g
  (``price_vg_exchange_quadrature``);
* VG++: an atom term plus a series of Psi(., .; n) over the Erlang mixture
  (``price_vgpp_exchange_closed``).

Writing L = log(S2/S1) + (omega2 - omega1) T and k = kappa2 - kappa1 with
kappa_i = theta_i + sigma_i^2/2,

    d1(g) = (L + k g + sigma_bar^2 g / 2) / (sigma_bar sqrt(g)),   d2(g) = d1(g) - sigma_bar sqrt(g).
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, special, stats

from . import gammapp
from .errors import DomainError, NumericalError, NumericalStabilityWarning
from .models import CommonSubordinatorModel, ModelSpec
from .specfun import normal_cdf, psi_integer_sequence, psi_kernel

DEFAULT_MAX_TERMS = 1_000_000
SMALL_A_WARNING = 0.01


@dataclass(frozen=True)
class ExchangeContract:
    """Option to receive asset 2 and deliver asset 1 (plus strike K) at maturity."""

    s1_0: float
    s2_0: float
    maturity_T: float
    strike_K: float = 0.0

    def __post_init__(self):
        if not (self.s1_0 > 0.0 and self.s2_0 > 0.0):
            raise DomainError("initial prices must be positive")
        if not self.maturity_T > 0.0:
            raise DomainError("maturity must be positive")
        if not self.strike_K >= 0.0:
            raise DomainError("strike must be nonnegative")


@dataclass
class PriceReport:
    price: float
    method: str
    std_error: float | None = None
    runtime: float = 0.0
    diagnostics: dict = field(default_factory=dict)


def _require_zero_strike(contract: ExchangeContract):
    if contract.strike_K != 0.0:
        raise DomainError("closed-form pricers need strike_K = 0; use the Fourier or MC pricer")


def _require_kind(spec: ModelSpec, kinds):
    if not isinstance(spec, CommonSubordinatorModel) or spec.kind not in kinds:
        raise DomainError(f"expected a {'/'.join(kinds)} model, got {spec.kind}")
    if spec.n_assets != 2:
        raise DomainError("exchange pricing needs exactly two assets")


@dataclass(frozen=True)
class _Legs:
    log_m: float        # L
    k: float            # kappa2 - kappa1
    sigma_bar: float
    omega: np.ndarray
    kappa: np.ndarray


def _legs(contract: ExchangeContract, spec: CommonSubordinatorModel) -> _Legs:
    T = contract.maturity_T
    omega = spec.drift_correctors()
    kappa = np.array([spec.marginal(j).kappa for j in range(2)])
    s1, s2 = spec.sigma
    var = s1 * s1 + s2 * s2 - 2.0 * spec.rho[0, 1] * s1 * s2
    sigma_bar = math.sqrt(max(var, 0.0))
    log_m = math.log(contract.s2_0 / contract.s1_0) + (omega[1] - omega[0]) * T
    return _Legs(log_m, float(kappa[1] - kappa[0]), sigma_bar, omega, kappa)


def margrabe(s1_0, s2_0, T, rate, mu1, mu2, sigma_bar):
    """e^{(mu2-r)T} S2 N(d1) - e^{(mu1-r)T} S1 N(d2) for assets with drifts mu_i."""
    f1 = s1_0 * math.exp((mu1 - rate) * T)
    f2 = s2_0 * math.exp((mu2 - rate) * T)
    if sigma_bar == 0.0:
        return max(0.0, f2 - f1)
    sd = sigma_bar * math.sqrt(T)
    d1 = (math.log(f2 / f1) + 0.5 * sd * sd) / sd
    return f2 * normal_cdf(d1) - f1 * normal_cdf(d1 - sd)


def price_margrabe_bs(contract: ExchangeContract, spec: ModelSpec, mu=None) -> PriceReport:
    """Margrabe price under BS dynamics.

    ``mu`` overrides the asset drifts; by default mu_i = r + omega_i + theta_i +
    sigma_i^2/2 = r (martingale case).
    """
    start = time.perf_counter()
    _require_zero_strike(contract)
    _require_kind(spec, ("BS",))
    legs = _legs(contract, spec)
    r, T = spec.rate, contract.maturity_T
    if mu is None:
        mu = r + legs.omega + legs.kappa
    price = margrabe(contract.s1_0, contract.s2_0, T, r, mu[0], mu[1], legs.sigma_bar)
    return PriceReport(price, "closed", runtime=time.perf_counter() - start,
                       diagnostics={"sigma_bar": legs.sigma_bar})


def _conditional_value(g, contract, legs):
    """Margrabe value given the clock g (already discounted)."""
    T = contract.maturity_T
    f2 = contract.s2_0 * math.exp(legs.omega[1] * T + legs.kappa[1] * g)
    f1 = contract.s1_0 * math.exp(legs.omega[0] * T + legs.kappa[0] * g)
    if legs.sigma_bar == 0.0 or g == 0.0:
        return max(0.0, f2 - f1)
    sd = legs.sigma_bar * math.sqrt(g)
    d1 = (legs.log_m + legs.k * g + 0.5 * sd * sd) / sd
    return f2 * float(special.ndtr(d1)) - f1 * float(special.ndtr(d1 - sd))


def price_vg_exchange_quadrature(contract: ExchangeContract, spec: ModelSpec,
                                 tol: float = 1e-10) -> PriceReport:
    """Integrate the conditional Margrabe price against the Gamma(alpha T, beta) clock."""
    start = time.perf_counter()
    _require_zero_strike(contract)
    _require_kind(spec, ("VG",))
    legs = _legs(contract, spec)
    shape = spec.sub.alpha * contract.maturity_T
    beta = spec.sub.beta
    log_norm = shape * math.log(beta) - special.gammaln(shape)

    # at g = 0 the conditional value is the intrinsic max(F2 - F1, 0)
    def f(g):
        return _conditional_value(max(g, 0.0), contract, legs) * math.exp(log_norm - beta * g)

    # near 0 the conditional value behaves like sqrt(g); with g = w^2 the
    # integrand is 2 w^(2 shape - 1) f(w^2), smooth in w apart from the weight
    a_min = min(beta - legs.kappa[0], beta - legs.kappa[1])
    g_hi = float(stats.gamma.isf(1e-17, shape, scale=1.0 / a_min))
    g_mid = max(shape / beta, 1.0 / beta)
    w_mid = math.sqrt(g_mid)
    w_star = abs(legs.log_m) / legs.sigma_bar if legs.sigma_bar > 0.0 else 0.0
    head = [0.0, w_mid]
    if 0.0 < w_star < w_mid:
        head = [0.0, w_star, w_mid]
    pieces = []
    for i, (lo, hi) in enumerate(zip(head[:-1], head[1:])):
        fw = lambda w: 2.0 * f(w * w)
        if i == 0:
            pieces.append(integrate.quad(fw, lo, hi, weight="alg", wvar=(2.0 * shape - 1.0, 0.0),
                                         epsabs=0.0, epsrel=tol, limit=200, full_output=1))
        else:
            pieces.append(integrate.quad(lambda w: fw(w) * w ** (2.0 * shape - 1.0), lo, hi,
                                         epsabs=0.0, epsrel=tol, limit=200, full_output=1))
    pieces.append(integrate.quad(lambda g: f(g) * g ** (shape - 1.0), g_mid, max(g_hi, 2.0 * g_mid),
                                 epsabs=0.0, epsrel=tol, limit=200, full_output=1))
    nodes = 0
    total = 0.0
    err_total = 0.0
    for res in pieces:
        # a fourth element (warning text) appears when quad is unhappy; the error check covers it
        val, err, info = res[:3]
        total += val
        err_total += err
        nodes += info["neval"]
    if err_total > max(10.0 * tol * abs(total), 1e-12):
        raise NumericalError(
            f"quadrature did not reach the tolerance (error estimate {err_total:.2e})",
            partial=total, nodes=nodes,
        )
    return PriceReport(max(total, 0.0), "quadrature", runtime=time.perf_counter() - start,
                       diagnostics={"quadrature_nodes": nodes, "error_estimate": err_total})


def _psi_args(legs: _Legs, rate_leg: float, upper: bool):
    """Arguments (a, b) of Psi after substituting g = x / rate_leg."""
    sb = legs.sigma_bar
    sq = math.sqrt(rate_leg)
    a_arg = legs.log_m * sq / sb
    half = 0.5 * sb if upper else -0.5 * sb
    b_arg = (legs.k / sb + half) / sq
    return a_arg, b_arg


def price_vg_exchange_closed(contract: ExchangeContract, spec: ModelSpec) -> PriceReport:
    """Closed VG price S2 e^{omega2 T}(beta/A)^{aT} Psi(a~, b~; aT) - S1 e^{omega1 T}(beta/C)^{aT} Psi(c~, d~; aT).

    A = beta - kappa2 and C = beta - kappa1 are the rates of the exponentially
    tilted gamma clocks. The Psi kernel at non-integer order is integrated
    numerically.
    """
    start = time.perf_counter()
    _require_zero_strike(contract)
    _require_kind(spec, ("VG",))
    legs = _legs(contract, spec)
    if legs.sigma_bar == 0.0:
        rep = price_vg_exchange_quadrature(contract, spec)
        rep.method = "closed"
        rep.diagnostics["delegated"] = "quadrature (sigma_bar = 0)"
        return rep
    T = contract.maturity_T
    shape = spec.sub.alpha * T
    beta = spec.sub.beta
    rate2 = beta - legs.kappa[1]
    rate1 = beta - legs.kappa[0]
    log_pref2 = legs.omega[1] * T + shape * (math.log(beta) - math.log(rate2))
    log_pref1 = legs.omega[0] * T + shape * (math.log(beta) - math.log(rate1))
    a2, b2 = _psi_args(legs, rate2, upper=True)
    a1, b1 = _psi_args(legs, rate1, upper=False)
    p2 = psi_kernel(a2, b2, shape)
    p1 = psi_kernel(a1, b1, shape)
    price = contract.s2_0 * math.exp(log_pref2) * p2 - contract.s1_0 * math.exp(log_pref1) * p1
    return PriceReport(max(price, 0.0), "closed", runtime=time.perf_counter() - start,
                       diagnostics={"psi": (p1, p2), "gamma": shape})


def _nb_leg(shape, a, beta, kappa):
    """Remainder parameter of the tilted count law: C(shape+n-1,n) a'^shape (1-a')^n."""
    return a * (beta - kappa) / (beta - a * kappa)


def _psi_sequence_zero_vol(legs, rate_leg, n_max):
    """P(L + k g > 0) for g ~ Gamma(n, rate_leg), n = 0..n_max (sigma_bar = 0)."""
    n = np.arange(n_max + 1, dtype=float)
    out = np.empty(n_max + 1)
    out[0] = 1.0 if legs.log_m > 0.0 else 0.0
    if legs.k == 0.0:
        out[1:] = out[0]
        return out
    g_star = -legs.log_m / legs.k
    cdf = special.gammainc(n[1:], rate_leg * max(g_star, 0.0)) if g_star > 0 else np.zeros(n_max)
    out[1:] = (1.0 - cdf) if legs.k > 0.0 else cdf
    if legs.k < 0.0 and g_star <= 0.0:
        out[1:] = 0.0
    return out


def _psi_bessel_terms(a_arg, b_arg, n_max):
    out = np.empty(n_max + 1)
    out[0] = 1.0 if a_arg > 0.0 else 0.0
    for k in range(1, n_max + 1):
        out[k] = psi_kernel(a_arg, b_arg, k, method="bessel")
    return out


def price_vgpp_exchange_closed(contract: ExchangeContract, spec: ModelSpec,
                               series_tol: float = 1e-12,
                               max_terms: int = DEFAULT_MAX_TERMS,
                               psi_method: str = "recurrence") -> PriceReport:
    """VG++ exchange price as an atom term plus a negative-binomial series of Psi kernels.

    After tilting, leg i reads S_i sum_{n>=0} p_i(n) Psi(a_i, b_i; n) where p_i is
    the negative-binomial law with shape alpha T and remainder parameter
    a (beta - kappa_i)/(beta - a kappa_i), and Psi(.; 0) is the indicator
    of a positive log-moneyness (the clock-at-zero atom). The series is cut
    where both tilted tails fall below ``series_tol``, so the truncation error
    is at most S2 tail2 + S1 tail1 (reported as ``tail_bound``).

    ``psi_method="recurrence"`` (default) generates Psi(.; n) for all n with the
    Bessel recurrence; ``"bessel"`` evaluates each term from the
    Bessel/Humbert representation (slow, for cross-checks).
    """
    start = time.perf_counter()
    _require_zero_strike(contract)
    _require_kind(spec, ("VGPP",))
    legs = _legs(contract, spec)
    T = contract.maturity_T
    sub = spec.sub
    a, shape, beta = sub.a, sub.alpha * T, sub.beta
    diagnostics = {}
    if a < SMALL_A_WARNING:
        msg = (f"a = {a:g} < {SMALL_A_WARNING}: the series converges slowly and may lose "
               "accuracy; prefer the Fourier or Monte Carlo pricer")
        warnings.warn(msg, NumericalStabilityWarning, stacklevel=2)
        diagnostics["warning"] = msg
    lam = beta / a
    rate2 = lam - legs.kappa[1]
    rate1 = lam - legs.kappa[0]
    q2 = _nb_leg(shape, a, beta, legs.kappa[1])
    q1 = _nb_leg(shape, a, beta, legs.kappa[0])
    n_need = int(max(stats.nbinom.isf(series_tol, shape, q) for q in (q1, q2))) + 1
    n_terms = min(n_need, int(max_terms))
    n = np.arange(n_terms + 1)
    p2 = np.exp(gammapp.nb_log_weights(shape, q2, n))
    p1 = np.exp(gammapp.nb_log_weights(shape, q1, n))
    if legs.sigma_bar == 0.0:
        psi2 = _psi_sequence_zero_vol(legs, rate2, n_terms)
        psi1 = _psi_sequence_zero_vol(legs, rate1, n_terms)
    else:
        a2, b2 = _psi_args(legs, rate2, upper=True)
        a1, b1 = _psi_args(legs, rate1, upper=False)
        if psi_method == "recurrence":
            psi2 = psi_integer_sequence(a2, b2, n_terms)
            psi1 = psi_integer_sequence(a1, b1, n_terms)
        elif psi_method == "bessel":
            psi2 = _psi_bessel_terms(a2, b2, n_terms)
            psi1 = _psi_bessel_terms(a1, b1, n_terms)
        else:
            raise ValueError(f"unknown psi_method {psi_method!r}")
    leg2 = contract.s2_0 * float(p2 @ psi2)
    leg1 = contract.s1_0 * float(p1 @ psi1)
    tail2 = float(stats.nbinom.sf(n_terms, shape, q2))
    tail1 = float(stats.nbinom.sf(n_terms, shape, q1))
    tail_bound = contract.s2_0 * tail2 + contract.s1_0 * tail1
    price = leg2 - leg1
    diagnostics.update(series_terms=n_terms, tail_bound=tail_bound,
                       atom_probability=gammapp.atom_mass(sub.at_time(T)))
    if n_need > max_terms:
        raise NumericalError(
            f"series needs {n_need} terms to reach tail {series_tol:g}, above the cap {max_terms}",
            partial=price, nodes=n_terms,
        )
    return PriceReport(max(price, 0.0), "closed", runtime=time.perf_counter() - start,
                       diagnostics=diagnostics)


def price_exchange_closed(contract: ExchangeContract, spec: ModelSpec, **kwargs) -> PriceReport:
    """Dispatch to the closed-form pricer matching the model kind."""
    if spec.kind == "BS":
        return price_margrabe_bs(contract, spec)
    if spec.kind == "VG":
        return price_vg_exchange_closed(contract, spec)
    if spec.kind == "VGPP":
        return price_vgpp_exchange_closed(contract, spec, **kwargs)
    raise DomainError(f"no closed-form exchange price for {spec.kind}")
