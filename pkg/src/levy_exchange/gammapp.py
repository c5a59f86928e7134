"""The Gamma++ law: the a-remainder of a gamma distribution.

If X ~ Gamma(alpha, beta) and 0 < a < 1, then X = aX' + Z_a in law with X'
an independent copy of X, and Z_a ~ Gamma++(a, alpha, beta) has

    phi(u) = ((beta - i u a) / (beta - i u))^alpha.

Z_a is a negative-binomial mixture of Erlang(n, beta/a) laws with an atom of
mass a^alpha at zero. a = 0 is accepted and gives back Gamma(alpha, beta).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from . import _backend
from .errors import DomainError

_CDF_TARGET = 1.0 - 1e-12


@dataclass(frozen=True)
class GammaPPParams:
    """Gamma++(a, alpha, beta): remainder parameter a in [0, 1), shape alpha, rate beta."""

    a: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not (0.0 <= self.a < 1.0):
            raise DomainError(f"a must lie in [0, 1), got {self.a}")
        if not (self.alpha > 0.0 and math.isfinite(self.alpha)):
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if not (self.beta > 0.0 and math.isfinite(self.beta)):
            raise DomainError(f"beta must be positive, got {self.beta}")

    def at_time(self, t: float) -> "GammaPPParams":
        """Law of the subordinator increment over a horizon t (shape alpha * t)."""
        if not t > 0.0:
            raise DomainError(f"t must be positive, got {t}")
        return GammaPPParams(self.a, self.alpha * t, self.beta)


@dataclass(frozen=True)
class GammaPPSample:
    value: float
    atom_hit: bool

    def __post_init__(self):
        if self.atom_hit and self.value != 0.0:
            raise ValueError("an atom draw must have value 0")


def log_cf(params: GammaPPParams, w):
    """log phi(w); ``w`` may be complex (analytic continuation for Im w > -beta).

    Written as alpha [Log(beta - i a w) - Log(beta - i w)] so the branch stays
    continuous wherever both arguments keep a positive real part.
    """
    w = np.asarray(w, dtype=complex)
    b = params.beta
    return params.alpha * (np.log(b - 1j * params.a * w) - np.log(b - 1j * w))


def cf(params: GammaPPParams, u):
    """Characteristic function ((beta - iua)/(beta - iu))^alpha at real or complex u."""
    out = np.exp(log_cf(params, u))
    return complex(out) if out.ndim == 0 else out


def log_mgf(params: GammaPPParams, s: float) -> float:
    """log E[e^{sZ}], finite for s < beta."""
    if not s < params.beta:
        raise DomainError(f"moment generating function diverges at s={s} >= beta={params.beta}")
    b, a = params.beta, params.a
    return params.alpha * (math.log(b - a * s) - math.log(b - s))


def moments(params: GammaPPParams) -> tuple[float, float]:
    """Mean alpha(1-a)/beta and variance alpha(1-a^2)/beta^2."""
    a, al, b = params.a, params.alpha, params.beta
    return al * (1.0 - a) / b, al * (1.0 - a * a) / (b * b)


def atom_mass(params: GammaPPParams) -> float:
    """P(Z = 0) = a^alpha (0 for the gamma case)."""
    return 0.0 if params.a == 0.0 else params.a ** params.alpha


def nb_log_weights(shape: float, a: float, n) -> np.ndarray:
    """log of C(shape+n-1, n) a^shape (1-a)^n, the negative-binomial count weights."""
    n = np.asarray(n, dtype=float)
    return (
        special.gammaln(shape + n) - special.gammaln(shape) - special.gammaln(n + 1.0)
        + shape * math.log(a) + n * math.log1p(-a)
    )


def nb_cdf_table(shape: float, a: float, target: float = _CDF_TARGET):
    """CDF of the count S accumulated term by term until it reaches ``target``.

    Returns (cdf, w_last) where ``w_last`` is the last weight, from which a
    sampler can continue the recursion if a uniform lands beyond the table.
    """
    if not 0.0 < a < 1.0:
        raise DomainError(f"count law needs 0 < a < 1, got {a}")
    # generous upper end; the quantile itself is only used to size the table
    n_hi = int(stats.nbinom.ppf(1.0 - 1e-15, shape, a))
    n_hi = max(n_hi, 1) + 16
    if n_hi > 100_000_000:
        raise DomainError("count distribution too spread out to tabulate")
    w = np.exp(nb_log_weights(shape, a, np.arange(n_hi + 1)))
    cdf = np.cumsum(w)
    # cut where the target is reached; rounding may keep the sum just below it
    stop = int(np.searchsorted(cdf, target, side="left"))
    stop = min(stop, n_hi)
    return cdf[: stop + 1].copy(), float(w[stop])


def density(params: GammaPPParams, x, series_tol: float = 1e-12):
    """(atom_mass, continuous density at x).

    The continuous part is sum_{n>=1} w_n f_{n, beta/a}(x) with Erlang densities
    f and negative-binomial weights w_n, truncated once the remaining weight is
    below ``series_tol``. For a = 0 the gamma density is returned (infinite at
    x = 0 when alpha < 1; this is reported as ``inf``, not raised).
    """
    x_arr = np.asarray(x, dtype=float)
    if np.any(x_arr < 0.0):
        raise DomainError("density needs x >= 0")
    a, al, b = params.a, params.alpha, params.beta
    if a == 0.0:
        with np.errstate(divide="ignore"):
            dens = stats.gamma.pdf(x_arr, al, scale=1.0 / b)
        dens = np.where((x_arr == 0.0) & (al < 1.0), np.inf, dens)
        return 0.0, (float(dens) if dens.ndim == 0 else dens)
    cdf, _ = nb_cdf_table(al, a, 1.0 - series_tol)
    n = np.arange(1, len(cdf))
    log_w = nb_log_weights(al, a, n)
    rate = b / a
    xs = np.atleast_1d(x_arr)
    out = np.zeros(xs.shape)
    pos = xs > 0.0
    if np.any(pos):
        xp = xs[pos][:, None]
        log_f = n * math.log(rate) + (n - 1) * np.log(xp) - rate * xp - special.gammaln(n)
        out[pos] = np.exp(special.logsumexp(log_w[None, :] + log_f, axis=1))
    # Erlang(1) is the only component with mass at the origin
    if np.any(~pos) and len(n):
        out[~pos] = math.exp(log_w[0]) * rate
    dens = out.reshape(x_arr.shape)
    return atom_mass(params), (float(dens) if dens.ndim == 0 else dens)


class GammaPPSampler:
    """Vectorized exact sampler for Gamma++(a, alpha t, beta) increments.

    Counts S are drawn by inverting the tabulated negative-binomial CDF; given
    S = s > 0 the value is Gamma(s, beta/a). The table is built once per
    (a, shape) so repeated draws are cheap.
    """

    def __init__(self, params: GammaPPParams, t: float = 1.0):
        self.law = params.at_time(t)
        if self.law.a > 0.0:
            self._cdf, self._w_last = nb_cdf_table(self.law.alpha, self.law.a)
        else:
            self._cdf, self._w_last = np.zeros(1), 0.0

    def draw(self, rng: np.random.Generator, n: int):
        """Return (values, atom_hit) arrays of length n."""
        law = self.law
        return _backend.sample_gammapp(
            rng, law.a, law.alpha, law.beta, int(n), self._cdf, self._w_last
        )


def sample(params: GammaPPParams, t: float, rng_stream: np.random.Generator,
           size: int | None = None):
    """Draw Gamma++(a, alpha t, beta) variates from ``rng_stream``.

    With ``size=None`` returns a single GammaPPSample, otherwise
    (values, atom_hit) arrays.
    """
    sampler = GammaPPSampler(params, t)
    values, atom = sampler.draw(rng_stream, 1 if size is None else size)
    if size is None:
        return GammaPPSample(float(values[0]), bool(atom[0]))
    return values, atom


def scale(params: GammaPPParams, c: float) -> GammaPPParams:
    """Law of cZ: Gamma++(a, alpha, beta/c)."""
    if not c > 0.0:
        raise DomainError(f"scale factor must be positive, got {c}")
    return GammaPPParams(params.a, params.alpha, params.beta / c)


def convolve(p1: GammaPPParams, p2: GammaPPParams, tol: float = 1e-12) -> GammaPPParams:
    """Law of Z1 + Z2 for independent Z1, Z2 sharing a and beta."""
    if abs(p1.a - p2.a) > tol or abs(p1.beta - p2.beta) > tol * max(1.0, p1.beta):
        raise DomainError(
            f"convolution needs shared a and beta, got a=({p1.a}, {p2.a}), "
            f"beta=({p1.beta}, {p2.beta})"
        )
    return GammaPPParams(p1.a, p1.alpha + p2.alpha, p1.beta)


def unit_mean_beta(a: float, alpha: float) -> float:
    """Rate giving E[Z(1)] = 1: beta = alpha (1 - a)."""
    return alpha * (1.0 - a)
