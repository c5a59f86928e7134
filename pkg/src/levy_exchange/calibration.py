"""Two-step calibration: marginals to vanilla prices, then dependence to correlation.

Step 1 fits each asset's (theta, sigma, alpha[, a]) by unweighted least
squares on call prices, with the subordinator rate tied to the unit-mean
convention (beta = alpha for VG, beta = alpha (1-a) for VG++). Step 2 keeps
the marginals fixed and matches the model's linear correlation to the
empirical Pearson correlation of log-returns.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.stats import qmc

from . import gammapp
from .errors import DomainError
from .gammapp import GammaPPParams
from .mc_engine import worker_count
from .models import (BBModel, CommonSubordinatorModel, LSModel, MarginalVGppParams, ModelSpec,
                     SemeraroModel, linear_correlation)
from .pricing_fourier import FourierGrid, VANILLA_GRID, _vanilla_transform, price_vanilla_call

MONEYNESS_BAND = 15.0
_ADMISSIBLE_MARGIN = 1e-6


@dataclass
class MarketSnapshot:
    """Forwards, call quotes (strike, maturity, mid) and aligned log-returns per asset."""

    forwards: np.ndarray
    quotes: list
    returns: np.ndarray | None = None
    rate: float = 0.0
    as_of: str = ""
    band: float = MONEYNESS_BAND

    def __post_init__(self):
        self.forwards = np.atleast_1d(np.asarray(self.forwards, dtype=float))
        if np.any(self.forwards <= 0.0):
            raise DomainError("forward prices must be positive")
        if len(self.quotes) != len(self.forwards):
            raise DomainError("need one quote list per asset")
        kept = []
        for f, qs in zip(self.forwards, self.quotes):
            arr = np.asarray(qs, dtype=float).reshape(-1, 3)
            arr = arr[np.abs(arr[:, 0] - f) <= self.band + 1e-12]
            kept.append(arr)
        self.quotes = kept
        if self.returns is not None:
            r = np.asarray(self.returns, dtype=float)
            if r.ndim != 2 or r.shape[1] != len(self.forwards):
                raise DomainError("returns must be an (observations, assets) array")
            self.returns = r

    @property
    def n_assets(self) -> int:
        return len(self.forwards)

    def empirical_correlation(self, i: int = 0, j: int = 1) -> float:
        """Pearson correlation over rows where both returns are present."""
        if self.returns is None:
            raise DomainError("snapshot has no return series")
        x, y = self.returns[:, i], self.returns[:, j]
        ok = np.isfinite(x) & np.isfinite(y)
        return float(np.corrcoef(x[ok], y[ok])[0, 1])


@dataclass
class MarginalFit:
    params: MarginalVGppParams
    objective: float
    converged: bool
    nfev: int


@dataclass
class CalibrationResult:
    marginal_params: list
    dependence_params: dict
    objective_value: float
    correlation_residual: float
    iterations: int
    converged: bool = True
    model: ModelSpec | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "marginal_params": [
                {"theta": m.theta, "sigma": m.sigma,
                 **({} if m.sub is None else {"a": m.sub.a, "alpha": m.sub.alpha, "beta": m.sub.beta})}
                for m in self.marginal_params
            ],
            "dependence_params": self.dependence_params,
            "objective_value": self.objective_value,
            "correlation_residual": self.correlation_residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "model": None if self.model is None else self.model.to_dict(),
        }


# -- step 1 ----------------------------------------------------------------

_BOUNDS = {
    "BS": (np.array([0.01]), np.array([3.0])),
    "VG": (np.array([-2.0, 0.01, 0.1]), np.array([2.0, 3.0, 30.0])),
    "VGPP": (np.array([-2.0, 0.01, 0.1, 0.001]), np.array([2.0, 3.0, 30.0, 0.99])),
}


def marginal_from_vector(kind: str, x) -> MarginalVGppParams:
    """Map optimizer coordinates to an admissible marginal.

    theta is projected below beta - sigma^2/2 so every trial point has a
    finite exponential moment.
    """
    if kind == "BS":
        return MarginalVGppParams(0.0, float(x[0]), None)
    theta, sigma, alpha = float(x[0]), float(x[1]), float(x[2])
    a = float(x[3]) if kind == "VGPP" else 0.0
    beta = gammapp.unit_mean_beta(a, alpha)
    theta = min(theta, beta * (1.0 - _ADMISSIBLE_MARGIN) - 0.5 * sigma * sigma)
    return MarginalVGppParams(theta, sigma, GammaPPParams(a, alpha, beta))


def vector_from_marginal(kind: str, m: MarginalVGppParams) -> np.ndarray:
    if kind == "BS":
        return np.array([m.sigma])
    v = [m.theta, m.sigma, m.sub.alpha]
    if kind == "VGPP":
        v.append(m.sub.a)
    return np.array(v)


def call_damping(m: MarginalVGppParams, preferred: float = VANILLA_GRID.damping) -> float:
    """Damping inside the strip where E[S^(1+d)] is finite."""
    if m.sub is None or m.sigma == 0.0:
        return preferred
    th, s2, b = m.theta, m.sigma ** 2, m.sub.beta
    s_max = (-th + math.sqrt(th * th + 2.0 * s2 * b)) / s2
    return min(preferred, 0.5 * (s_max - 1.0))


def model_call_prices(m: MarginalVGppParams, rate: float, forward: float, quotes: np.ndarray,
                      grid: FourierGrid = VANILLA_GRID) -> np.ndarray:
    """Call prices at each (strike, maturity) row of ``quotes``."""
    out = np.empty(len(quotes))
    g = FourierGrid(grid.n_points, grid.eta, call_damping(m, grid.damping))
    for T in np.unique(quotes[:, 1]):
        sel = quotes[:, 1] == T
        out[sel] = price_vanilla_call(m, rate, forward, quotes[sel, 0], float(T), g)
    return out


class QuotePricer:
    """Call prices on a fixed quote set; the strike kernels are built once.

    Same numbers as ``model_call_prices`` but each evaluation costs one CF
    evaluation and a matrix-vector product per maturity.
    """

    def __init__(self, rate: float, forward: float, quotes: np.ndarray,
                 grid: FourierGrid = VANILLA_GRID):
        self.rate, self.forward, self.grid = rate, forward, grid
        self.quotes = quotes
        u = grid.nodes
        self._groups = []
        for T in np.unique(quotes[:, 1]):
            sel = np.flatnonzero(quotes[:, 1] == T)
            k = np.log(quotes[sel, 0])
            kernel = np.exp(-1j * np.outer(k, u)) * grid.weights
            self._groups.append((float(T), sel, k, kernel))

    def __call__(self, m: MarginalVGppParams) -> np.ndarray:
        d = call_damping(m, self.grid.damping)
        out = np.empty(len(self.quotes))
        u = self.grid.nodes
        for T, sel, k, kernel in self._groups:
            psi, p0, mlog = _vanilla_transform(m, self.rate, self.forward, T, u, d)
            price = np.exp(-d * k) / math.pi * np.real(kernel @ psi)
            if p0 > 0.0:
                price += p0 * math.exp(-self.rate * T) * np.maximum(math.exp(mlog) - np.exp(k), 0.0)
            out[sel] = price
        return out


def _latin_starts(lo, hi, n, seed):
    sampler = qmc.LatinHypercube(d=len(lo), seed=seed)
    return qmc.scale(sampler.random(n), lo, hi)


def _fit_asset(kind, rate, forward, quotes, x0, n_starts, seed, max_nfev):
    lo, hi = _BOUNDS[kind]
    mids = quotes[:, 2]
    pricer = QuotePricer(rate, forward, quotes)

    def resid(x):
        return pricer(marginal_from_vector(kind, x)) - mids

    starts = list(_latin_starts(lo, hi, n_starts, seed))
    if x0 is not None:
        starts.insert(0, np.clip(np.asarray(x0, dtype=float), lo, hi))

    def run(x_start):
        return optimize.least_squares(resid, x_start, bounds=(lo, hi), method="trf",
                                      x_scale="jac", xtol=1e-14, ftol=1e-14, gtol=1e-14,
                                      max_nfev=max_nfev)

    workers = min(worker_count(), len(starts))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            fits = list(pool.map(run, starts))
    else:
        fits = [run(s) for s in starts]
    # ties go to the lowest start index
    best = min(range(len(fits)), key=lambda i: (2.0 * fits[i].cost, i))
    fit = fits[best]
    nfev = sum(f.nfev for f in fits)
    return MarginalFit(marginal_from_vector(kind, fit.x), 2.0 * fit.cost, bool(fit.status > 0), nfev)


def calibrate_marginals(snapshot: MarketSnapshot, kind: str, initial_guess=None,
                        options: dict | None = None) -> list:
    """Least-squares fit of each asset's marginal to its call quotes.

    ``kind`` is BS, VG or VGPP. ``initial_guess`` is an optional list of
    MarginalVGppParams added as an extra start. ``options``: n_starts (8),
    seed (0), max_nfev (400).
    """
    if kind not in _BOUNDS:
        raise DomainError(f"marginal kind must be one of {', '.join(_BOUNDS)}, got {kind!r}")
    opts = {"n_starts": 8, "seed": 0, "max_nfev": 400}
    opts.update(options or {})
    fits = []
    for j in range(snapshot.n_assets):
        quotes = snapshot.quotes[j]
        n_par = len(_BOUNDS[kind][0])
        if len(quotes) < max(4, n_par):
            raise DomainError(f"asset {j} has {len(quotes)} usable quotes; at least 4 are needed")
        x0 = None if initial_guess is None else vector_from_marginal(kind, initial_guess[j])
        fits.append(_fit_asset(kind, snapshot.rate, snapshot.forwards[j], quotes, x0,
                               opts["n_starts"], opts["seed"] + j, opts["max_nfev"]))
    return fits


# -- step 2 ----------------------------------------------------------------

def common_rho_for_target(marginals, target: float, t: float = 1.0):
    """rho giving corr(Y1, Y2) = target under a shared clock, clipped to [-1, 1].

    Returns (rho, residual).
    """
    m1, m2 = marginals
    if m1.sub is None:
        eg, vg = t, 0.0
    else:
        eg, vg = gammapp.moments(m1.sub.at_time(t))
    v1 = m1.theta ** 2 * vg + m1.sigma ** 2 * eg
    v2 = m2.theta ** 2 * vg + m2.sigma ** 2 * eg
    denom = m1.sigma * m2.sigma * eg
    rho = (target * math.sqrt(v1 * v2) - m1.theta * m2.theta * vg) / denom
    rho_c = float(np.clip(rho, -1.0, 1.0))
    achieved = (m1.theta * m2.theta * vg + rho_c * denom) / math.sqrt(v1 * v2)
    return rho_c, abs(target - achieved)


def _bounded_fit(build, x0, lo, hi, target):
    def resid(x):
        return np.array([linear_correlation(build(x), 1.0, 0, 1) - target])

    fit = optimize.least_squares(resid, x0, bounds=(lo, hi), method="trf",
                                 xtol=1e-15, ftol=1e-15, gtol=1e-15)
    return fit


def calibrate_dependence(snapshot: MarketSnapshot | None, kind: str, marginal_params,
                         rate: float | None = None, target: float | None = None,
                         template: ModelSpec | None = None, free=None) -> CalibrationResult:
    """Fit the dependence block to the target correlation with marginals held fixed.

    ``target`` defaults to the snapshot's empirical correlation. ``template``
    supplies the non-dependence parameters of Semeraro/LS/BB models. ``free``
    selects the fitted block for LS ("A", "rho") or ("rho",).
    """
    if target is None:
        if snapshot is None:
            raise DomainError("need a snapshot or an explicit target correlation")
        target = snapshot.empirical_correlation()
    if rate is None:
        source = snapshot if snapshot is not None else template
        if source is None:
            raise DomainError("need a snapshot, a template model or an explicit rate")
        rate = source.rate
    ms = list(marginal_params)
    if len(ms) != 2:
        raise DomainError("dependence calibration is implemented for two assets")

    if kind in ("BS", "VG", "VGPP"):
        if kind != "BS" and ms[0].sub != ms[1].sub:
            raise DomainError("a common clock needs identical subordinator parameters for both assets")
        rho, residual = common_rho_for_target(ms, target)
        model = CommonSubordinatorModel(kind, rate, [m.theta for m in ms], [m.sigma for m in ms],
                                        rho, ms[0].sub)
        return CalibrationResult(ms, {"rho": rho}, 0.0, residual, 0, True, model)

    if kind in ("SemeraroVGPP", "LSVGPP"):
        a = ms[0].sub.a
        if any(m.sub.a != a for m in ms):
            raise DomainError("Semeraro/LS need a shared remainder parameter a")
        # marginal j fixes A_j + A and B / alpha_j; B itself is a free scale
        shape = np.array([m.sub.alpha for m in ms])
        rates = np.array([m.sub.beta for m in ms])
        if template is not None:
            B = template.B
        else:
            B = float(rates[0])
        alpha_j = B / rates
        theta = [m.theta for m in ms]
        sigma = [m.sigma for m in ms]
        a_hi = float(shape.min()) * (1.0 - 1e-9)

        def build(A, rho=0.0):
            A = float(np.clip(A, 1e-12, a_hi))
            if kind == "LSVGPP":
                return LSModel(rate, theta, sigma, alpha_j, shape - A, A, B, a, rho=float(rho))
            return SemeraroModel(rate, theta, sigma, alpha_j, shape - A, A, B, a)

        A0 = template.A if template is not None else 0.5 * a_hi
        if kind == "SemeraroVGPP":
            fit = _bounded_fit(lambda x: build(x[0]), [min(A0, a_hi)], [1e-12], [a_hi], target)
            model = build(fit.x[0])
            dep = {"A": model.A, "A_j": list(model.A_j), "B": B, "alpha_j": list(alpha_j)}
        else:
            free = tuple(free or ("A", "rho"))
            rho0 = float(template.rho[0, 1]) if template is not None else 0.5
            if free == ("rho",):
                fit = _bounded_fit(lambda x: build(A0, x[0]), [rho0], [-1.0], [1.0], target)
                model = build(A0, fit.x[0])
            elif set(free) == {"A", "rho"}:
                fit = _bounded_fit(lambda x: build(x[0], x[1]), [min(A0, a_hi), rho0],
                                   [1e-12, -1.0], [a_hi, 1.0], target)
                model = build(fit.x[0], fit.x[1])
            else:
                raise DomainError(f"unsupported free block {free}")
            dep = {"A": model.A, "A_j": list(model.A_j), "B": B, "alpha_j": list(alpha_j),
                   "rho": float(model.rho[0, 1])}
        residual = abs(target - linear_correlation(model, 1.0, 0, 1))
        return CalibrationResult(ms, dep, 0.0, residual, int(fit.nfev), bool(fit.status > 0), model)

    if kind == "BBVGPP":
        if not isinstance(template, BBModel):
            raise DomainError("BB dependence calibration needs a BB template model")
        a_y = np.array([m.sub.alpha for m in ms])
        a_hi = float(a_y.min()) * (1.0 - 1e-9)

        def build_bb(x):
            A_z = float(np.clip(x[0], 1e-12, a_hi))
            return BBModel(rate, template.a, template.beta_x, template.gamma_x, a_y - A_z,
                           template.B_x, template.a_j, template.beta_z, template.gamma_z,
                           A_z, template.B_z)

        fit = _bounded_fit(build_bb, [min(template.A_z, a_hi)], [1e-12], [a_hi], target)
        model = build_bb(fit.x)
        residual = abs(target - linear_correlation(model, 1.0, 0, 1))
        return CalibrationResult(ms, {"A_z": model.A_z, "A_x": list(model.A_x)}, 0.0, residual,
                                 int(fit.nfev), bool(fit.status > 0), model)

    raise DomainError(f"unknown model kind {kind!r}")


def calibrate(snapshot: MarketSnapshot, marginal_kind: str, dependence_kind: str | None = None,
              initial_guess=None, options=None, **dependence_kwargs) -> CalibrationResult:
    """Both steps; the objective reported is the summed step-1 objective."""
    fits = calibrate_marginals(snapshot, marginal_kind, initial_guess, options)
    ms = [f.params for f in fits]
    dep_kind = dependence_kind or marginal_kind
    if dep_kind in ("VG", "VGPP") and ms[0].sub != ms[1].sub:
        # a shared clock needs one subordinator; average the fitted ones
        alpha = float(np.mean([m.sub.alpha for m in ms]))
        a = float(np.mean([m.sub.a for m in ms]))
        sub = GammaPPParams(a, alpha, gammapp.unit_mean_beta(a, alpha))
        ms = [MarginalVGppParams(m.theta, m.sigma, sub) for m in ms]
    res = calibrate_dependence(snapshot, dep_kind, ms, **dependence_kwargs)
    res.objective_value = float(sum(f.objective for f in fits))
    res.iterations += int(sum(f.nfev for f in fits))
    res.converged = res.converged and all(f.converged for f in fits)
    res.diagnostics["marginal_objectives"] = [f.objective for f in fits]
    return res


def synthetic_snapshot(marginals, rate: float, forwards, maturities=(0.25, 0.5, 1.0),
                       offsets=(-15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0),
                       returns: np.ndarray | None = None) -> MarketSnapshot:
    """Noise-free call quotes from the given marginals on a strike/maturity grid."""
    quotes = []
    for m, f in zip(marginals, forwards):
        rows = np.array([[f + k, T, 0.0] for T in maturities for k in offsets if f + k > 0.0])
        rows[:, 2] = model_call_prices(m, rate, f, rows)
        quotes.append(rows)
    return MarketSnapshot(np.asarray(forwards, dtype=float), quotes, returns, rate)
