"""Transform pricers: damped-transform vanilla options and single-inversion spreads.

Vanillas use the damped call transform

    C(k) = e^{-d k} / pi int_0^inf Re[e^{-iuk} psi(u)] du,
    psi(u) = e^{-rT} phi(u - (d+1)i) / (d^2 + d - u^2 + i(2d+1)u),

with phi the CF of log S(T) and damping d > 0 (call) or d < -1 (put).

Spreads (payoff (S2 - S1 - K)^+) restrict the exercise region to the
half-plane {log S2 - delta log S1 >= kappa}, which is exact for K = 0 and a
lower bound otherwise. With W = log S2 - delta log S1 and z = xi - i eta,

    E[(S2 - S1 - K) 1{W >= kappa}]
        = e^{-eta kappa}/pi int_0^inf Re[e^{-i xi kappa} G(z)] d xi,
    G(z) = [Phi(-delta z, z - i) - Phi(-delta z - i, z) - K Phi(-delta z, z)] / (iz),

where Phi is the joint CF of (log S1, log S2). A point mass of the law (all
clocks at zero) is removed from the transform and added back exactly.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError
from .models import MarginalVGppParams, ModelSpec, drift_corrector
from .pricing_closed import ExchangeContract, PriceReport


@dataclass(frozen=True)
class FourierGrid:
    """Frequency grid: n_points nodes spaced by eta, plus the damping parameter."""

    n_points: int = 4096
    eta: float = 0.05
    damping: float = 0.75

    def __post_init__(self):
        n = int(self.n_points)
        if n < 256 or n & (n - 1):
            raise DomainError(f"n_points must be a power of two >= 256, got {self.n_points}")
        if not self.eta > 0.0:
            raise DomainError("eta must be positive")

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_points) * self.eta

    @property
    def weights(self) -> np.ndarray:
        return simpson_weights(self.n_points, self.eta)


VANILLA_GRID = FourierGrid(4096, 0.05, 0.75)
SPREAD_GRID = FourierGrid(16384, 0.05, 0.5)
_MAX_SPREAD_POINTS = 1 << 22


def simpson_weights(n: int, h: float) -> np.ndarray:
    """Composite Simpson weights h/3 (1, 4, 2, 4, ..., 2, 4) on n nodes."""
    w = np.where(np.arange(n) % 2 == 1, 4.0, 2.0)
    w[0] = 1.0
    return w * h / 3.0


def _marginal_mgf_ok(marginal: MarginalVGppParams, s: float) -> bool:
    if marginal.sub is None:
        return True
    return marginal.theta * s + 0.5 * marginal.sigma ** 2 * s * s < marginal.sub.beta


def _check_damping(marginal, damping):
    if -1.0 <= damping <= 0.0:
        raise DomainError(f"damping {damping} lies in [-1, 0]; use d > 0 for calls or d < -1 for puts")
    if not _marginal_mgf_ok(marginal, damping + 1.0):
        raise DomainError(f"E[S^(1+d)] is infinite at damping d={damping}")


def _vanilla_transform(marginal, rate, s0, T, u, damping):
    """psi(u) of the continuous part, and the atom mass p0 with log-forward m."""
    omega = drift_corrector(marginal)
    m = math.log(s0) + (rate + omega) * T
    p0 = 0.0
    if marginal.sub is not None and marginal.sub.a > 0.0:
        p0 = marginal.sub.a ** (marginal.sub.alpha * T)
    v = u - (damping + 1.0) * 1j
    phi = np.exp(marginal.log_cf(T, v)) - p0
    phi = phi * np.exp(1j * v * m)
    d = damping
    denom = d * d + d - u * u + 1j * (2.0 * d + 1.0) * u
    return math.exp(-rate * T) * phi / denom, p0, m


def _vanilla(marginal, rate, s0, strikes, T, grid, put):
    _check_damping(marginal, grid.damping)
    strikes = np.atleast_1d(np.asarray(strikes, dtype=float))
    if np.any(strikes <= 0.0):
        raise DomainError("strikes must be positive")
    u = grid.nodes
    psi, p0, m = _vanilla_transform(marginal, rate, s0, T, u, grid.damping)
    k = np.log(strikes)[:, None]
    integral = (np.real(np.exp(-1j * u[None, :] * k) * psi[None, :]) * grid.weights).sum(axis=1)
    price = np.exp(-grid.damping * k[:, 0]) / math.pi * integral
    if p0 > 0.0:
        fwd = math.exp(m)
        intrinsic = np.maximum(strikes - fwd, 0.0) if put else np.maximum(fwd - strikes, 0.0)
        price = price + p0 * math.exp(-rate * T) * intrinsic
    return price


def price_vanilla_call(marginal: MarginalVGppParams, rate: float, s0: float, strike, T: float,
                       grid: FourierGrid = VANILLA_GRID):
    """European call(s) on S(T) = s0 exp((r + omega) T + X(T)); vectorized over strikes."""
    if grid.damping <= 0.0:
        raise DomainError("call pricing needs positive damping")
    out = _vanilla(marginal, rate, s0, strike, T, grid, put=False)
    return float(out[0]) if np.ndim(strike) == 0 else out


def price_vanilla_put(marginal: MarginalVGppParams, rate: float, s0: float, strike, T: float,
                      grid: FourierGrid | None = None):
    """European put(s) from the same transform with damping below -1."""
    grid = grid or FourierGrid(VANILLA_GRID.n_points, VANILLA_GRID.eta, -1.75)
    if grid.damping >= -1.0:
        raise DomainError("put pricing needs damping < -1")
    out = _vanilla(marginal, rate, s0, strike, T, grid, put=True)
    return float(out[0]) if np.ndim(strike) == 0 else out


def vanilla_call_fft(marginal: MarginalVGppParams, rate: float, s0: float, T: float,
                     grid: FourierGrid = VANILLA_GRID):
    """Calls on the FFT log-strike grid centred at log s0: returns (strikes, prices)."""
    if grid.damping <= 0.0:
        raise DomainError("call pricing needs positive damping")
    _check_damping(marginal, grid.damping)
    n, h = grid.n_points, grid.eta
    lam = 2.0 * math.pi / (n * h)
    k0 = math.log(s0) - 0.5 * n * lam
    u = grid.nodes
    psi, p0, m = _vanilla_transform(marginal, rate, s0, T, u, grid.damping)
    x = np.exp(-1j * u * k0) * psi * grid.weights
    k = k0 + lam * np.arange(n)
    prices = np.exp(-grid.damping * k) / math.pi * np.real(np.fft.fft(x))
    strikes = np.exp(k)
    if p0 > 0.0:
        prices = prices + p0 * math.exp(-rate * T) * np.maximum(math.exp(m) - strikes, 0.0)
    return strikes, prices


def _boundary(contract: ExchangeContract, log_f1: float):
    """(delta, kappa): the log-linear exercise boundary, exact at K = 0."""
    K = contract.strike_K
    if K == 0.0:
        return 1.0, 0.0
    f1 = math.exp(log_f1)
    delta = f1 / (f1 + K)
    return delta, math.log(f1 + K) - delta * log_f1


def _spread_integrand(spec, T, xi, eta, delta, log_f, K, p0):
    z = xi - 1j * eta
    u_a = np.stack([-delta * z, z - 1j], axis=-1)
    u_b = np.stack([-delta * z - 1j, z], axis=-1)
    u_c = np.stack([-delta * z, z], axis=-1)

    def phi(u):
        # joint CF of the log-prices without the point mass at the forwards
        return (np.exp(spec.log_cf(T, u)) - p0) * np.exp(1j * (u @ log_f))

    return (phi(u_a) - phi(u_b) - K * phi(u_c)) / (1j * z)


def _check_spread_strip(spec: ModelSpec, eta: float, delta: float):
    for s in ((-delta * eta, 1.0 + eta), (1.0 - delta * eta, eta), (-delta * eta, eta)):
        try:
            spec.log_mgf(1.0, np.array(s))
        except DomainError as exc:
            raise DomainError(
                f"joint transform is not analytic at damping eta={eta}: {exc}"
            ) from None


def price_exchange_fourier(contract: ExchangeContract, spec: ModelSpec,
                           grid: FourierGrid = SPREAD_GRID, tol: float | None = None,
                           refine: bool = True) -> PriceReport:
    """Spread/exchange price by one Fourier inversion of the joint CF.

    The grid residual max(|P(N) - P(N/2 nodes)|, |P(N) - P(every other node)|)
    estimates truncation and discretization error. With ``refine`` the
    frequency range is doubled until the residual is below ``tol`` (default
    1e-7 (s1_0 + s2_0)).
    """
    start = time.perf_counter()
    if spec.n_assets != 2:
        raise DomainError("spread pricing needs exactly two assets")
    T, r = contract.maturity_T, spec.rate
    eta = grid.damping
    if not eta > 0.0:
        raise DomainError("spread damping must be positive")
    omega = spec.drift_correctors()
    log_f = np.log([contract.s1_0, contract.s2_0]) + (r + omega) * T
    delta, kappa = _boundary(contract, log_f[0])
    _check_spread_strip(spec, eta, delta)
    p0 = spec.atom_probability(T)
    K = contract.strike_K
    if tol is None:
        tol = 1e-7 * (contract.s1_0 + contract.s2_0)

    def integrate_grid(n, h):
        xi = np.arange(n) * h
        vals = np.real(np.exp(-1j * xi * kappa) * _spread_integrand(spec, T, xi, eta, delta, log_f, K, p0))
        full = vals @ simpson_weights(n, h)
        half_range = vals[: n // 2] @ simpson_weights(n // 2, h)
        coarse = vals[::2] @ simpson_weights(n // 2, 2.0 * h)
        scale = math.exp(-r * T - eta * kappa) / math.pi
        residual = max(abs(full - half_range), abs(full - coarse)) * scale
        return float(full * scale), float(residual)

    n = grid.n_points
    value, residual = integrate_grid(n, grid.eta)
    while refine and residual > tol and 2 * n <= _MAX_SPREAD_POINTS:
        n *= 2
        value, residual = integrate_grid(n, grid.eta)
    # the point mass: both log-prices sit at their forwards
    w0 = log_f[1] - delta * log_f[0]
    atom = 0.0
    if p0 > 0.0 and w0 >= kappa:
        atom = p0 * math.exp(-r * T) * (math.exp(log_f[1]) - math.exp(log_f[0]) - K)
    price = value + atom
    diagnostics = {"n_points": n, "eta": grid.eta, "damping": eta, "residual": residual,
                   "atom_probability": p0, "lower_bound": K != 0.0}
    if residual > tol:
        diagnostics["warning"] = (f"grid residual {residual:.3e} above tolerance {tol:.3e}; "
                                  "the transform decays slowly for this model")
    if not math.isfinite(price):
        raise NumericalError("Fourier price is not finite", partial=price, nodes=n)
    return PriceReport(max(price, 0.0), "fourier", runtime=time.perf_counter() - start,
                       diagnostics=diagnostics)
