"""Special functions behind the exchange-option formulas.

Standard normal CDF, modified Bessel K at half-integer order, the Humbert
confluent hypergeometric function of two variables and the kernel

    Psi(a, b; gamma) = int_0^inf N(a / sqrt(u) + b sqrt(u)) u^(gamma-1) e^(-u) / Gamma(gamma) du.

For integer ``gamma`` Psi has an integral-free representation in terms of
K_{gamma +- 1/2} and Phi(gamma, 1-gamma, 1+gamma; x, y); non-integer orders are
integrated numerically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from . import _backend
from .errors import DomainError, NumericalError, SeriesOverflowError

_EPS = np.finfo(float).eps
_LOG_MAX = 709.0
# relative condition number above which the alternating closed form is
# abandoned for the positive-term series
_MAX_CONDITION = 1e3
_SMALL_Y = 1e-6


def normal_cdf(x):
    """Standard normal CDF; accepts scalars or arrays of finite values."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("normal_cdf requires finite input")
    out = special.ndtr(arr)
    return float(out) if out.ndim == 0 else out


def log_bessel_k_half_integer(n: int, x: float) -> float:
    """log K_{n+1/2}(x) from the terminating series, summed in log space."""
    if not x > 0.0:
        raise DomainError(f"Bessel K needs x > 0, got {x}")
    n = int(n)
    if n < 0:
        raise DomainError(f"order index must be nonnegative, got {n}")
    k = np.arange(n + 1)
    log_terms = (
        special.gammaln(n + k + 1.0)
        - special.gammaln(k + 1.0)
        - special.gammaln(n - k + 1.0)
        - k * math.log(2.0 * x)
    )
    return 0.5 * math.log(math.pi / (2.0 * x)) - x + special.logsumexp(log_terms)


def bessel_k_half_integer(n: int, x: float) -> float:
    """K_{n+1/2}(x) as the finite sum sqrt(pi/2x) e^-x sum_k (n+k)!/(k!(n-k)!) (2x)^-k.

    Raises SeriesOverflowError when the result is not representable; the
    error carries the index of the dominant term.
    """
    log_value = log_bessel_k_half_integer(n, x)
    if log_value > _LOG_MAX:
        k = np.arange(int(n) + 1)
        log_terms = (
            special.gammaln(n + k + 1.0)
            - special.gammaln(k + 1.0)
            - special.gammaln(n - k + 1.0)
            - k * math.log(2.0 * x)
        )
        idx = int(np.argmax(log_terms))
        raise SeriesOverflowError(
            f"K_{{{n}+1/2}}({x}) overflows double precision (term k={idx})", idx
        )
    return math.exp(log_value)


def bessel_k_half_integer_lower(n: int, x: float) -> float:
    """K_{n-1/2}(x) = K_{(n-1)+1/2}(x); for n = 0 uses K_{-1/2} = K_{1/2}."""
    n = int(n)
    return bessel_k_half_integer(0 if n == 0 else n - 1, x)


def _log_binom(q, k):
    return special.gammaln(q + 1.0) - special.gammaln(k + 1.0) - special.gammaln(q - k + 1.0)


def _monomial_exp_integral(m: np.ndarray, y: float):
    """int_0^1 u^m e^(uy) du from the antiderivative e^(uy) sum_j (-1)^j m!/(m-j)! u^(m-j)/y^(j+1).

    Returns the values and the sum of absolute contributions, used to judge
    cancellation.
    """
    values = np.empty(m.shape)
    magnitude = np.empty(m.shape)
    ey = math.exp(y)
    for idx, mm in enumerate(m):
        j = np.arange(mm + 1)
        log_fall = special.gammaln(mm + 1.0) - special.gammaln(mm - j + 1.0)
        sign = np.where(j % 2 == 0, 1.0, -1.0)
        log_mag = log_fall - (j + 1) * math.log(abs(y))
        terms = sign * np.exp(log_mag) * np.sign(y) ** (j + 1)
        upper = ey * terms.sum()
        # lower limit u = 0 only keeps the j = m term
        lower = terms[-1]
        values[idx] = upper - lower
        magnitude[idx] = ey * np.abs(terms).sum() + abs(lower)
    return values, magnitude


def _poly_exp_closed(p: int, q: int, x: float, y: float):
    """Binomial expansion of (u - u^2 x)^q-type integrand, each monomial integrated exactly."""
    k = np.arange(q + 1)
    j_vals, j_mag = _monomial_exp_integral(p + k, y)
    coef = np.exp(_log_binom(q, k)) * (-x) ** k
    terms = coef * j_vals
    value = terms.sum()
    magnitude = np.abs(coef * j_mag).sum()
    return value, magnitude


def _series_terms_needed(y: float, base: float) -> int:
    # positive series in |y|^m / (m! ...) ; stop well past the peak
    return int(abs(y) * 2.0 + 60.0 + math.sqrt(abs(y) + base) * 10.0)


def _beta_series(p: int, k: np.ndarray, y: float) -> np.ndarray:
    """int_0^1 u^p (1-u)^k e^(uy) du for each k, by term-wise integration of the exponential.

    For y >= 0 the expansion is sum_m y^m/m! B(p+m+1, k+1). For y < 0 the
    reflection u -> 1-u gives e^y sum_m |y|^m/m! B(k+m+1, p+1). Both series have
    nonnegative terms.
    """
    m_terms = _series_terms_needed(y, p + k.max())
    m = np.arange(m_terms)[:, None]
    kk = k[None, :].astype(float)
    ay = abs(y)
    log_pow = m * math.log(ay) - special.gammaln(m + 1.0) if ay > 0 else np.where(m == 0, 0.0, -np.inf)
    if y >= 0:
        log_beta = special.betaln(p + m + 1.0, kk + 1.0)
        log_terms = log_pow + log_beta
        return np.exp(special.logsumexp(log_terms, axis=0))
    log_beta = special.betaln(kk + m + 1.0, p + 1.0)
    log_terms = log_pow + log_beta
    return np.exp(y + special.logsumexp(log_terms, axis=0))


def _poly_exp_series(p: int, q: int, x: float, y: float) -> float:
    """Positive-term evaluation of int_0^1 u^p (1-ux)^q e^(uy) du for x < 1."""
    k = np.arange(q + 1)
    if x <= 0.0:
        # (1 - ux)^q = sum_k C(q,k) |x|^k u^k, all terms nonnegative
        log_coef = _log_binom(q, k) + (k * math.log(-x) if x < 0 else np.where(k == 0, 0.0, -np.inf))
        inner = np.array([_beta_series(p + int(kk), np.zeros(1, dtype=int), y)[0] for kk in k])
        return float(np.sum(np.exp(log_coef) * inner))
    # 1 - ux = (1 - x) + x (1 - u), both parts nonnegative on [0, 1]
    log_coef = _log_binom(q, k) + k * math.log(x)
    if x < 1.0:
        log_coef = log_coef + (q - k) * math.log1p(-x)
    else:
        log_coef = np.where(k == q, log_coef, -np.inf)
    inner = _beta_series(p, k, y)
    return float(np.sum(np.exp(log_coef) * inner))


def poly_exp_integral(p: int, q: int, x: float, y: float, method: str = "auto") -> float:
    """int_0^1 u^p (1 - ux)^q e^(uy) du for nonnegative integers p, q.

    ``method="closed"`` uses the binomial expansion with exact monomial
    antiderivatives; ``"series"`` expands the exponential into Beta integrals;
    ``"auto"`` uses the closed form unless |y| is tiny or the alternating sum
    loses more than three digits to cancellation.
    """
    if method not in ("auto", "closed", "series"):
        raise ValueError(f"unknown method {method!r}")
    if not (math.isfinite(x) and math.isfinite(y)):
        raise DomainError("x and y must be finite")
    if method == "series" or (method == "auto" and abs(y) < _SMALL_Y):
        if x > 1.0:
            raise DomainError("series form needs x <= 1")
        return _poly_exp_series(p, q, x, y)
    if y == 0.0:
        if method == "closed":
            raise DomainError("closed form needs y != 0")
        return _poly_exp_series(p, q, x, y)
    with np.errstate(over="ignore", invalid="ignore"):
        value, magnitude = _poly_exp_closed(p, q, x, y)
    if method == "closed" or x > 1.0:
        return float(value)
    if not (np.isfinite(magnitude) and magnitude <= _MAX_CONDITION * abs(value)):
        return _poly_exp_series(p, q, x, y)
    return float(value)


def humbert_phi_integer(n: int, x: float, y: float, method: str = "auto") -> float:
    """Phi(n, 1-n, 1+n; x, y) = n int_0^1 u^(n-1) (1-ux)^(n-1) e^(uy) du, integral free."""
    n = int(n)
    if n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    return n * poly_exp_integral(n - 1, n - 1, x, y, method)


def humbert_phi_integer_shifted(n: int, x: float, y: float, method: str = "auto") -> float:
    """Phi(1+n, 1-n, 2+n; x, y) = (n+1) int_0^1 u^n (1-ux)^(n-1) e^(uy) du."""
    n = int(n)
    if n < 1:
        raise DomainError(f"n must be a positive integer, got {n}")
    return (n + 1) * poly_exp_integral(n, n - 1, x, y, method)


def humbert_phi_general(alpha: float, beta: float, gamma_p: float, x: float, y: float,
                        rtol: float = 1e-10) -> float:
    """Humbert Phi(alpha, beta, gamma; x, y) by adaptive quadrature of its integral form.

    The endpoint factors u^(alpha-1) (1-u)^(gamma-alpha-1) are handled as an
    algebraic weight so that weak singularities cost nothing.
    """
    if not (gamma_p > alpha > 0.0):
        raise DomainError(f"need gamma > alpha > 0, got alpha={alpha}, gamma={gamma_p}")
    if not x < 1.0:
        raise DomainError(f"need x < 1 so that 1 - ux stays positive, got x={x}")
    log_norm = special.gammaln(gamma_p) - special.gammaln(alpha) - special.gammaln(gamma_p - alpha)
    # factor e^(max(y,0)) out to keep the integrand O(1)
    shift = max(y, 0.0)

    def f(u):
        return (1.0 - u * x) ** (-beta) * math.exp(u * y - shift)

    value, abserr, info = _quad(
        f, 0.0, 1.0, weight="alg", wvar=(alpha - 1.0, gamma_p - alpha - 1.0), epsrel=rtol
    )
    if abserr > max(rtol * abs(value), 1e-14):
        raise NumericalError(
            f"Humbert quadrature did not converge (error estimate {abserr:.2e})",
            partial=value, nodes=info,
        )
    return math.exp(log_norm + shift) * value


def _quad(f, lo, hi, **kwargs):
    out = integrate.quad(f, lo, hi, limit=200, epsabs=0.0, full_output=1, **kwargs)
    value, abserr, infodict = out[0], out[1], out[2]
    nodes = infodict.get("neval", None)
    return value, abserr, nodes


@dataclass(frozen=True)
class PsiKernelArgs:
    """Arguments of Psi(a, b; gamma) and the derived c, u and sign."""

    a_arg: float
    b_arg: float
    gamma: float

    def __post_init__(self):
        if not self.gamma > 0.0:
            raise DomainError(f"gamma must be positive, got {self.gamma}")
        if not (math.isfinite(self.a_arg) and math.isfinite(self.b_arg)):
            raise DomainError("Psi arguments must be finite")

    @property
    def c(self) -> float:
        return abs(self.a_arg) * math.sqrt(2.0 + self.b_arg ** 2)

    @property
    def u(self) -> float:
        return self.b_arg / math.sqrt(2.0 + self.b_arg ** 2)

    @property
    def sign(self) -> float:
        # sign(0) := +1; the a = 0 limit is continuous
        return -1.0 if self.a_arg < 0 else 1.0

    @property
    def is_integer(self) -> bool:
        return float(self.gamma).is_integer()


def _psi_bessel_humbert(args: PsiKernelArgs, method: str = "auto") -> float:
    """Three-term Bessel/Humbert representation for integer gamma."""
    g = int(args.gamma)
    c, u, s = args.c, args.u, args.sign
    x = 0.5 * (1.0 + u)
    y = -s * c * (1.0 + u)
    log_norm = -0.5 * math.log(2.0 * math.pi) - special.gammaln(g)
    phi_a = humbert_phi_integer(g, x, y, method)
    if c == 0.0:
        # c^(g+1/2) K_{g+1/2}(c) -> Gamma(g+1/2) 2^(g-1/2); the K_{g-1/2} terms vanish
        log_front = special.gammaln(g + 0.5) + (g - 0.5) * math.log(2.0)
        return math.exp(log_norm + log_front + g * math.log1p(u)) / g * phi_a
    phi_b = humbert_phi_integer_shifted(g, x, y, method)
    log_cpow = (g + 0.5) * math.log(c) + s * c
    k_plus = math.exp(log_cpow + log_bessel_k_half_integer(g, c) + log_norm)
    k_minus = math.exp(log_cpow + log_bessel_k_half_integer(g - 1, c) + log_norm)
    w = (1.0 + u) ** g
    t1 = k_plus * w / g * phi_a
    t2 = -s * k_minus * w * (1.0 + u) / (1.0 + g) * phi_b
    t3 = s * k_minus * w / g * phi_a
    return t1 + t2 + t3


def _psi_quadrature(args: PsiKernelArgs, rtol: float = 1e-12) -> float:
    """Direct quadrature of the defining integral.

    [0, 1] carries u^(g-1) as an algebraic weight; the tail is split at the
    density mode so large shapes keep their mass inside one panel.
    """
    a, b, g = args.a_arg, args.b_arg, args.gamma
    lg = special.gammaln(g)

    def cdf(u):
        return float(special.ndtr(a / math.sqrt(u) + b * math.sqrt(u)))

    # Clenshaw-Curtis panels evaluate the endpoint, so use the u -> 0 limit there
    limit0 = 1.0 if a > 0.0 else (0.0 if a < 0.0 else 0.5)

    def head(u):
        return (limit0 if u <= 0.0 else cdf(u)) * math.exp(-u - lg)

    def tail(u):
        return cdf(u) * math.exp((g - 1.0) * math.log(u) - u - lg)

    if a == 0.0 or abs(a) >= 1.0:
        pieces = [_quad(head, 0.0, 1.0, weight="alg", wvar=(g - 1.0, 0.0), epsrel=rtol)]
    else:
        # N(a/sqrt(u) + ...) moves on the scale u ~ a^2, so work in v = log u.
        # Below v1 the CDF equals its u -> 0 limit to double precision.
        la = 2.0 * math.log(abs(a))
        v1 = la - 40.0
        if v1 > -700.0:
            mass = float(special.gammainc(g, math.exp(v1)))
        else:
            mass = math.exp(g * v1 - special.gammaln(g + 1.0))
        pieces = [(limit0 * mass, 0.0, 0)]

        def mid(v):
            # arguments built from logs: exp(v) underflows for very small |a|
            x = math.copysign(math.exp(0.5 * (la - v)), a) + b * math.exp(0.5 * v)
            return float(special.ndtr(x)) * math.exp(g * v - math.exp(v) - lg)

        pieces.append(_quad(mid, v1, 0.0, points=[la], epsrel=rtol))
    lo = 1.0
    if g > 2.0:
        for hi in (g - 1.0, g - 1.0 + 12.0 * math.sqrt(g)):
            pieces.append(_quad(tail, lo, hi, epsrel=rtol))
            lo = hi
    pieces.append(_quad(tail, lo, np.inf, epsrel=rtol))
    value = sum(p[0] for p in pieces)
    abserr = sum(p[1] for p in pieces)
    nodes = sum(p[2] or 0 for p in pieces)
    if abserr > max(10.0 * rtol * abs(value), 1e-13):
        raise NumericalError(
            f"Psi quadrature did not converge (error estimate {abserr:.2e})",
            partial=value, nodes=nodes,
        )
    return value


def psi_kernel(args, b_arg: float | None = None, gamma: float | None = None,
               method: str = "auto") -> float:
    """Psi(a, b; gamma), the gamma-weighted average of a normal CDF.

    Call as ``psi_kernel(PsiKernelArgs(a, b, gamma))`` or ``psi_kernel(a, b, gamma)``.

    ``method``: ``"auto"`` picks the Bessel/Humbert form for integer gamma
    and quadrature otherwise; ``"bessel"`` (integer gamma only), ``"recurrence"``
    (integer gamma only, O(gamma) Bessel recurrence) and ``"quadrature"`` force
    a path.
    """
    if not isinstance(args, PsiKernelArgs):
        args = PsiKernelArgs(float(args), float(b_arg), float(gamma))
    if method == "auto":
        if not args.is_integer:
            method = "quadrature"
        elif args.c * (1.0 + abs(args.u)) > 600.0 or args.gamma > 60:
            # e^{+-c} factors or the Humbert sums leave double range
            method = "recurrence"
        else:
            method = "bessel"
    if method in ("bessel", "recurrence") and not args.is_integer:
        raise DomainError(f"method {method!r} needs integer gamma, got {args.gamma}")
    if method == "bessel":
        value = _psi_bessel_humbert(args)
    elif method == "recurrence":
        value = float(psi_integer_sequence(args.a_arg, args.b_arg, int(args.gamma))[-1])
    elif method == "quadrature":
        value = _psi_quadrature(args)
    else:
        raise ValueError(f"unknown method {method!r}")
    # rounding can push an expectation of a CDF a few ulps outside [0, 1]
    return min(max(value, 0.0), 1.0)


def psi_integer_sequence(a_arg: float, b_arg: float, n_max: int) -> np.ndarray:
    """Psi(a, b; n) for n = 0, ..., n_max (n = 0 is the indicator of a > 0)."""
    if n_max < 0:
        raise DomainError("n_max must be nonnegative")
    if not (math.isfinite(a_arg) and math.isfinite(b_arg)):
        raise DomainError("Psi arguments must be finite")
    return _backend.psi_integer_sequence(float(a_arg), float(b_arg), int(n_max))
