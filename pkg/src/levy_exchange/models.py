"""Model parameterizations, joint characteristic functions and correlations.

Every model describes the de-drifted log-return vector Y(t) = log S(t)/S(0) -
(r + omega) t. Characteristic functions accept complex arguments so that the
same code serves drift correctors (u = -i e_j) and damped Fourier pricing.

Kinds
-----
BS, VG, VGPP
    One common clock G for all assets (deterministic for BS), with
    Y_j = theta_j G + sigma_j W_j(G) and corr(W_i, W_j) = rho_ij.
SemeraroVGPP
    G_j = I_j + alpha_j Z with I_j ~ Gamma++(a, A_j, B/alpha_j), Z ~ Gamma++(a, A, B)
    and independent Brownian motions.
LSVGPP
    As Semeraro, but the Brownian motions driven by the common clock are
    correlated.
BBVGPP
    Y_j = X_j + a_j Z with independent subordinated Brownian motions X_j and a
    common factor Z, all on Gamma++ clocks sharing the remainder parameter a.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import gammapp
from .errors import ConstraintError, DomainError
from .gammapp import GammaPPParams

KINDS = ("BS", "VG", "VGPP", "SemeraroVGPP", "LSVGPP", "BBVGPP")
_PSD_FLOOR = -1e-12


def _as_tuple(x, n=None, name="value"):
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if n is not None and arr.shape != (n,):
        raise DomainError(f"{name} must have length {n}, got shape {arr.shape}")
    return tuple(float(v) for v in arr)


def _check_corr(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DomainError("correlation matrix must be square")
    if not np.allclose(rho, rho.T, atol=1e-14):
        raise DomainError("correlation matrix must be symmetric")
    if not np.allclose(np.diag(rho), 1.0, atol=1e-14):
        raise DomainError("correlation matrix must have unit diagonal")
    if np.any(np.abs(rho) > 1.0):
        raise DomainError("correlations must lie in [-1, 1]")
    eig = np.linalg.eigvalsh(rho)
    if eig.min() < _PSD_FLOOR:
        raise DomainError(f"correlation matrix is not positive semidefinite (min eigenvalue {eig.min():.3e})")
    return rho


def _corr_from(rho, n: int) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if rho.ndim == 0:
        if n != 2:
            raise DomainError("a scalar rho needs exactly two assets")
        rho = np.array([[1.0, float(rho)], [float(rho), 1.0]])
    return _check_corr(rho)


def _u_array(u, n: int) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape[-1:] != (n,):
        raise DomainError(f"argument must have trailing dimension {n}, got shape {u.shape}")
    return u


@dataclass(frozen=True)
class MarginalVGppParams:
    """theta Z(t) + sigma W(Z(t)) with Z a Gamma++ subordinator (None: Z(t) = t)."""

    theta: float
    sigma: float
    sub: GammaPPParams | None = None

    def __post_init__(self):
        if not self.sigma >= 0.0:
            raise DomainError(f"sigma must be nonnegative, got {self.sigma}")
        if self.sub is not None:
            k = self.kappa
            b, a = self.sub.beta, self.sub.a
            if not k < b:
                bound = "beta - (theta + sigma^2/2) > 0"
                if a > 0.0:
                    bound += f" (and hence beta/a - (theta + sigma^2/2) > 0)"
                raise DomainError(
                    f"exponential moment diverges: {bound} violated with beta={b}, "
                    f"theta + sigma^2/2={k}"
                )

    @property
    def kappa(self) -> float:
        return self.theta + 0.5 * self.sigma ** 2

    def log_cf(self, t: float, u):
        u = np.asarray(u, dtype=complex)
        w = self.theta * u + 0.5j * self.sigma ** 2 * u * u
        if self.sub is None:
            return 1j * w * t
        return gammapp.log_cf(self.sub.at_time(t), w)

    def moments(self, t: float) -> tuple[float, float]:
        """Mean and variance of theta Z(t) + sigma W(Z(t))."""
        if self.sub is None:
            return self.theta * t, self.sigma ** 2 * t
        m, v = gammapp.moments(self.sub.at_time(t))
        return self.theta * m, self.theta ** 2 * v + self.sigma ** 2 * m


def drift_corrector(marginal: MarginalVGppParams) -> float:
    """omega with E[exp(omega + theta Z(1) + sigma W(Z(1)))] = 1."""
    if marginal.sub is None:
        return -marginal.kappa
    return -gammapp.log_mgf(marginal.sub, marginal.kappa)


class ModelSpec:
    """Base class for model parameterizations. Instances are immutable."""

    kind: str
    rate: float

    @property
    def n_assets(self) -> int:
        raise NotImplementedError

    def log_cf(self, t: float, u) -> np.ndarray:
        """log E[exp(i u . Y(t))] for u of shape (..., n_assets), complex allowed."""
        raise NotImplementedError

    def cf(self, t: float, u):
        out = np.exp(self.log_cf(t, u))
        return complex(out) if out.ndim == 0 else out

    def marginal(self, j: int) -> MarginalVGppParams:
        """Per-asset law as a single subordinated Brownian motion."""
        raise NotImplementedError

    def log_mgf(self, t: float, s) -> float:
        """log E[exp(s . Y(t))] for real s, DomainError where infinite."""
        s = np.asarray(s, dtype=float)
        self._check_mgf(s)
        return float(np.real(self.log_cf(t, -1j * s)))

    def _check_mgf(self, s: np.ndarray) -> None:
        raise NotImplementedError

    def drift_correctors(self) -> np.ndarray:
        """omega_j = -log E[exp(Y_j(1))] from the model's own CF at u = -i e_j."""
        n = self.n_assets
        return np.array([-self.log_mgf(1.0, np.eye(n)[j]) for j in range(n)])

    def atom_probability(self, t: float) -> float:
        """P(every clock is still at zero at time t), i.e. Y(t) = 0 exactly."""
        return 0.0

    def covariance(self, t: float) -> np.ndarray:
        raise NotImplementedError

    def correlation_matrix(self, t: float = 1.0) -> np.ndarray:
        cov = self.covariance(t)
        d = np.sqrt(np.diag(cov))
        with np.errstate(invalid="ignore", divide="ignore"):
            out = cov / np.outer(d, d)
        return np.clip(out, -1.0, 1.0)

    def to_dict(self) -> dict:
        raise NotImplementedError

    def replace(self, **changes) -> "ModelSpec":
        d = self.to_dict()
        d.update(changes)
        return model_from_dict(d)


@dataclass(frozen=True)
class CommonSubordinatorModel(ModelSpec):
    """BS, VG or VGPP: all assets share one clock (deterministic for BS)."""

    kind: str
    rate: float
    theta: tuple
    sigma: tuple
    rho: np.ndarray = field(compare=False)
    sub: GammaPPParams | None = None

    def __post_init__(self):
        if self.kind not in ("BS", "VG", "VGPP"):
            raise DomainError(f"unknown common-subordinator kind {self.kind!r}")
        n = len(self.theta)
        object.__setattr__(self, "theta", _as_tuple(self.theta, None, "theta"))
        object.__setattr__(self, "sigma", _as_tuple(self.sigma, n, "sigma"))
        object.__setattr__(self, "rho", _corr_from(self.rho, n))
        if self.kind == "BS" and self.sub is not None:
            raise DomainError("BS has no subordinator")
        if self.kind == "VG" and (self.sub is None or self.sub.a != 0.0):
            raise DomainError("VG needs a gamma subordinator (a = 0)")
        if self.kind == "VGPP" and (self.sub is None or not self.sub.a > 0.0):
            raise DomainError("VGPP needs a Gamma++ subordinator with a > 0")
        for j in range(n):
            self.marginal(j)  # admissibility

    @classmethod
    def bs(cls, rate, theta, sigma, rho):
        return cls("BS", float(rate), theta, sigma, rho, None)

    @classmethod
    def vg(cls, rate, theta, sigma, alpha, beta, rho):
        return cls("VG", float(rate), theta, sigma, rho, GammaPPParams(0.0, alpha, beta))

    @classmethod
    def vgpp(cls, rate, theta, sigma, a, alpha, beta, rho):
        return cls("VGPP", float(rate), theta, sigma, rho, GammaPPParams(a, alpha, beta))

    @property
    def n_assets(self) -> int:
        return len(self.theta)

    @property
    def brownian_cov(self) -> np.ndarray:
        s = np.asarray(self.sigma)
        return self.rho * np.outer(s, s)

    def log_cf(self, t, u):
        u = _u_array(u, self.n_assets)
        th = np.asarray(self.theta)
        w = u @ th + 0.5j * np.einsum("...i,ij,...j->...", u, self.brownian_cov, u)
        if self.sub is None:
            return 1j * w * t
        return gammapp.log_cf(self.sub.at_time(t), w)

    def _check_mgf(self, s):
        if self.sub is None:
            return
        k = s @ np.asarray(self.theta) + 0.5 * s @ self.brownian_cov @ s
        if not k < self.sub.beta:
            raise DomainError(f"exponential moment diverges: {k} >= beta={self.sub.beta}")

    def marginal(self, j):
        return MarginalVGppParams(self.theta[j], self.sigma[j], self.sub)

    def atom_probability(self, t):
        return 0.0 if self.sub is None else gammapp.atom_mass(self.sub.at_time(t))

    def clock_moments(self, t):
        if self.sub is None:
            return float(t), 0.0
        return gammapp.moments(self.sub.at_time(t))

    def covariance(self, t):
        eg, vg = self.clock_moments(t)
        th = np.asarray(self.theta)
        return np.outer(th, th) * vg + self.brownian_cov * eg

    def to_dict(self):
        d = {"kind": self.kind, "rate": self.rate, "theta": list(self.theta),
             "sigma": list(self.sigma), "rho": _rho_out(self.rho)}
        if self.sub is not None:
            d.update(alpha=self.sub.alpha, beta=self.sub.beta)
            if self.kind == "VGPP":
                d["a"] = self.sub.a
        return d


def _rho_out(rho: np.ndarray):
    if rho.shape == (2, 2):
        return float(rho[0, 1])
    return rho.tolist()


@dataclass(frozen=True)
class SemeraroModel(ModelSpec):
    """G_j = I_j + alpha_j Z; asset j is theta_j G_j + sigma_j W_j(G_j)."""

    rate: float
    theta: tuple
    sigma: tuple
    alpha_j: tuple
    A_j: tuple
    A: float
    B: float
    a: float
    kind: str = "SemeraroVGPP"

    def __post_init__(self):
        n = len(np.atleast_1d(self.theta))
        object.__setattr__(self, "theta", _as_tuple(self.theta, None, "theta"))
        for name in ("sigma", "alpha_j", "A_j"):
            object.__setattr__(self, name, _as_tuple(getattr(self, name), n, name))
        if min(self.alpha_j) <= 0.0:
            raise DomainError("alpha_j must be positive (the common clock is scaled by B/alpha_j)")
        if min(self.A_j) <= 0.0 or not self.A > 0.0 or not self.B > 0.0:
            raise DomainError("A_j, A and B must be positive")
        GammaPPParams(self.a, self.A, self.B)
        for j in range(n):
            self.marginal(j)

    @property
    def n_assets(self):
        return len(self.theta)

    @property
    def common(self) -> GammaPPParams:
        return GammaPPParams(self.a, self.A, self.B)

    def idio(self, j) -> GammaPPParams:
        return GammaPPParams(self.a, self.A_j[j], self.B / self.alpha_j[j])

    def marginal(self, j):
        # alpha_j Z ~ Gamma++(a, A, B/alpha_j) shares a and rate with I_j
        g = gammapp.convolve(self.idio(j), gammapp.scale(self.common, self.alpha_j[j]))
        return MarginalVGppParams(self.theta[j], self.sigma[j], g)

    def _leg_args(self, u):
        th = np.asarray(self.theta)
        s2 = np.asarray(self.sigma) ** 2
        return u * th + 0.5j * s2 * u * u

    def _common_arg(self, u):
        al = np.asarray(self.alpha_j)
        return self._leg_args(u) @ al

    def log_cf(self, t, u):
        u = _u_array(u, self.n_assets)
        w = self._leg_args(u)
        out = gammapp.log_cf(self.common.at_time(t), self._common_arg(u))
        for j in range(self.n_assets):
            out = out + gammapp.log_cf(self.idio(j).at_time(t), w[..., j])
        return out

    def _common_real_arg(self, s):
        th = np.asarray(self.theta)
        s2 = np.asarray(self.sigma) ** 2
        return float(np.asarray(self.alpha_j) @ (s * th + 0.5 * s2 * s * s))

    def _check_mgf(self, s):
        th = np.asarray(self.theta)
        s2 = np.asarray(self.sigma) ** 2
        k = s * th + 0.5 * s2 * s * s
        for j in range(self.n_assets):
            if not k[j] < self.idio(j).beta:
                raise DomainError(f"exponential moment of I_{j} diverges")
        if not self._common_real_arg(s) < self.B:
            raise DomainError("exponential moment of the common clock diverges")

    def atom_probability(self, t):
        shape = (self.A + sum(self.A_j)) * t
        return self.a ** shape if self.a > 0.0 else 0.0

    def _common_cov(self, t):
        mz, vz = gammapp.moments(self.common.at_time(t))
        th = np.asarray(self.theta)
        al = np.asarray(self.alpha_j)
        return np.outer(th * al, th * al) * vz, mz

    def covariance(self, t):
        cov, _ = self._common_cov(t)
        for j in range(self.n_assets):
            cov[j, j] = self.marginal(j).moments(t)[1]
        return cov

    def _base_dict(self):
        return {"kind": self.kind, "rate": self.rate, "theta": list(self.theta),
                "sigma": list(self.sigma), "alpha_j": list(self.alpha_j),
                "A_j": list(self.A_j), "A": self.A, "B": self.B, "a": self.a}

    def to_dict(self):
        return self._base_dict()

    @staticmethod
    def unit_mean_A_j(a, A, B, alpha_j):
        """Idiosyncratic shapes giving E[G_j(1)] = 1: (A_j + A)(1-a) alpha_j / B = 1."""
        al = np.atleast_1d(np.asarray(alpha_j, dtype=float))
        return B / ((1.0 - a) * al) - A


@dataclass(frozen=True)
class LSModel(SemeraroModel):
    """Semeraro clocks with correlated Brownian motions on the common clock."""

    rho: np.ndarray = field(default=None, compare=False)
    kind: str = "LSVGPP"

    def __post_init__(self):
        super().__post_init__()
        object.__setattr__(self, "rho", _corr_from(self.rho, self.n_assets))

    @property
    def common_cov(self) -> np.ndarray:
        v = np.sqrt(np.asarray(self.alpha_j)) * np.asarray(self.sigma)
        return self.rho * np.outer(v, v)

    def _common_arg(self, u):
        drift = u @ (np.asarray(self.alpha_j) * np.asarray(self.theta))
        return drift + 0.5j * np.einsum("...i,ij,...j->...", u, self.common_cov, u)

    def _common_real_arg(self, s):
        drift = s @ (np.asarray(self.alpha_j) * np.asarray(self.theta))
        return float(drift + 0.5 * s @ self.common_cov @ s)

    def covariance(self, t):
        cov, mz = self._common_cov(t)
        cov = cov + self.common_cov * mz
        for j in range(self.n_assets):
            cov[j, j] = self.marginal(j).moments(t)[1]
        return cov

    def to_dict(self):
        d = self._base_dict()
        d["rho"] = _rho_out(self.rho)
        return d


@dataclass(frozen=True)
class BBModel(ModelSpec):
    """Y_j = X_j + a_j Z with X_j = beta_x_j G_xj + gamma_x_j W_j(G_xj), Z = beta_z G_z + gamma_z W(G_z)."""

    rate: float
    a: float
    beta_x: tuple
    gamma_x: tuple
    A_x: tuple
    B_x: tuple
    a_j: tuple
    beta_z: float
    gamma_z: float
    A_z: float
    B_z: float
    kind: str = "BBVGPP"

    def __post_init__(self):
        n = len(np.atleast_1d(self.beta_x))
        object.__setattr__(self, "beta_x", _as_tuple(self.beta_x, None, "beta_x"))
        for name in ("gamma_x", "A_x", "B_x", "a_j"):
            object.__setattr__(self, name, _as_tuple(getattr(self, name), n, name))
        if min(self.gamma_x) < 0.0 or self.gamma_z < 0.0:
            raise DomainError("Brownian volatilities must be nonnegative")
        for j in range(n):
            self.x_leg(j)
        self.z_leg()

    @classmethod
    def consistent(cls, rate, a, A_x, B_x, a_j, beta_z, gamma_z, A_z, B_z):
        """Idiosyncratic legs chosen so every Y_j is again a VG++ process.

        beta_x_j / B_x_j = a_j beta_z / B_z and gamma_x_j^2 / B_x_j = a_j^2 gamma_z^2 / B_z.
        """
        B_x = np.atleast_1d(np.asarray(B_x, dtype=float))
        aj = np.atleast_1d(np.asarray(a_j, dtype=float))
        beta_x = B_x * aj * beta_z / B_z
        gamma_x = np.sqrt(B_x / B_z) * np.abs(aj) * gamma_z
        return cls(rate, a, beta_x, gamma_x, A_x, B_x, aj, beta_z, gamma_z, A_z, B_z)

    @property
    def n_assets(self):
        return len(self.beta_x)

    def x_clock(self, j) -> GammaPPParams:
        return GammaPPParams(self.a, self.A_x[j], self.B_x[j])

    def z_clock(self) -> GammaPPParams:
        return GammaPPParams(self.a, self.A_z, self.B_z)

    def x_leg(self, j) -> MarginalVGppParams:
        return MarginalVGppParams(self.beta_x[j], self.gamma_x[j], self.x_clock(j))

    def z_leg(self) -> MarginalVGppParams:
        return MarginalVGppParams(self.beta_z, self.gamma_z, self.z_clock())

    def marginal(self, j):
        """The VG++ law of Y_j; ConstraintError when the legs do not convolve."""
        sol = bb_solve_convolution(
            self.A_x[j], self.B_x[j], self.A_z, self.B_z, self.a_j[j], self.beta_z,
            self.gamma_z, a=self.a, beta_x=self.beta_x[j], gamma_x=self.gamma_x[j],
        )
        return MarginalVGppParams(sol.theta_y, sol.sigma_y, GammaPPParams(self.a, sol.A_y, sol.B_y))

    def log_cf(self, t, u):
        u = _u_array(u, self.n_assets)
        aj = np.asarray(self.a_j)
        v = u @ aj
        out = gammapp.log_cf(
            self.z_clock().at_time(t), self.beta_z * v + 0.5j * self.gamma_z ** 2 * v * v
        )
        for j in range(self.n_assets):
            uj = u[..., j]
            w = self.beta_x[j] * uj + 0.5j * self.gamma_x[j] ** 2 * uj * uj
            out = out + gammapp.log_cf(self.x_clock(j).at_time(t), w)
        return out

    def _check_mgf(self, s):
        for j in range(self.n_assets):
            k = self.beta_x[j] * s[j] + 0.5 * self.gamma_x[j] ** 2 * s[j] ** 2
            if not k < self.B_x[j]:
                raise DomainError(f"exponential moment of X_{j} diverges")
        v = float(s @ np.asarray(self.a_j))
        if not self.beta_z * v + 0.5 * self.gamma_z ** 2 * v * v < self.B_z:
            raise DomainError("exponential moment of the common factor diverges")

    def atom_probability(self, t):
        shape = (self.A_z + sum(self.A_x)) * t
        return self.a ** shape if self.a > 0.0 else 0.0

    def covariance(self, t):
        _, vz = self.z_leg().moments(t)
        aj = np.asarray(self.a_j)
        cov = np.outer(aj, aj) * vz
        for j in range(self.n_assets):
            cov[j, j] += self.x_leg(j).moments(t)[1]
        return cov

    def to_dict(self):
        return {"kind": self.kind, "rate": self.rate, "a": self.a,
                "beta_x": list(self.beta_x), "gamma_x": list(self.gamma_x),
                "A_x": list(self.A_x), "B_x": list(self.B_x), "a_j": list(self.a_j),
                "beta_z": self.beta_z, "gamma_z": self.gamma_z, "A_z": self.A_z, "B_z": self.B_z}


@dataclass(frozen=True)
class BBConvolutionSolution:
    """VG++ parameters (theta, sigma, A_y, B_y) of X + a1 Z; ``degenerate`` when a1 = 0."""

    theta_y: float
    sigma_y: float
    A_y: float
    B_y: float
    degenerate: bool = False
    residual: float = 0.0


def bb_solve_convolution(A_x, B_x, A_z, B_z, a1, beta_z, gamma_z, *, a=0.0,
                         beta_x=None, gamma_x=None, B_y=None, tol=1e-8):
    """Match the exponent of theta G_Y + sigma W(G_Y) to that of X + a1 Z.

    The Gamma++ exponent depends on its argument only through w/B, so the
    product of the two leg CFs is a single Gamma++ CF with shape A_x + A_z when

        beta_x / B_x = a1 beta_z / B_z  and  gamma_x^2 / B_x = a1^2 gamma_z^2 / B_z,

    and then theta / B_y = beta_x / B_x, sigma^2 / B_y = gamma_x^2 / B_x. B_y is a
    free scale; by default it is fixed by E[G_Y(1)] = 1, i.e. B_y = (1-a) A_y.

    ``beta_x``/``gamma_x`` default to the values implied by the conditions; if
    given they are checked and a ConstraintError carrying the relative
    residual is raised when inconsistent. With a1 = 0 the common factor drops
    out: Y = X, A_y = A_x and the solution is flagged degenerate.
    """
    for name, v in (("A_x", A_x), ("B_x", B_x), ("A_z", A_z), ("B_z", B_z)):
        if not v > 0.0:
            raise DomainError(f"{name} must be positive, got {v}")
    if a1 == 0.0:
        if beta_x is None or gamma_x is None:
            raise DomainError("a1 = 0 leaves the idiosyncratic leg undetermined; pass beta_x and gamma_x")
        A_y = A_x
        B_y = (1.0 - a) * A_y if B_y is None else B_y
        return BBConvolutionSolution(
            beta_x * B_y / B_x, abs(gamma_x) * math.sqrt(B_y / B_x), A_y, B_y, degenerate=True
        )
    drift_ratio = a1 * beta_z / B_z
    var_ratio = a1 * a1 * gamma_z * gamma_z / B_z
    residual = 0.0
    if beta_x is not None:
        scale_b = max(abs(drift_ratio), abs(beta_x / B_x), 1e-300)
        residual = max(residual, abs(beta_x / B_x - drift_ratio) / scale_b)
    if gamma_x is not None:
        scale_g = max(var_ratio, gamma_x ** 2 / B_x, 1e-300)
        residual = max(residual, abs(gamma_x ** 2 / B_x - var_ratio) / scale_g)
    if residual > tol:
        raise ConstraintError(
            "idiosyncratic and common legs do not convolve to a single VG++ law "
            f"(relative mismatch {residual:.3e})",
            residual,
        )
    A_y = A_x + A_z
    if B_y is None:
        B_y = (1.0 - a) * A_y
    if not B_y > 0.0:
        raise DomainError(f"B_y must be positive, got {B_y}")
    return BBConvolutionSolution(B_y * drift_ratio, math.sqrt(B_y * var_ratio), A_y, B_y,
                                 residual=residual)


def cf_joint(spec: ModelSpec, t: float, u):
    """Joint characteristic function of the de-drifted log-returns Y(t)."""
    if not t > 0.0:
        raise DomainError("t must be positive")
    return spec.cf(t, u)


def linear_correlation(spec: ModelSpec, t: float, i: int, j: int) -> float:
    """corr(Y_i(t), Y_j(t)) from subordinator cumulants."""
    if spec.n_assets < 2:
        raise DomainError("correlation needs a multivariate model")
    if i == j:
        raise DomainError("i and j must differ")
    return float(spec.correlation_matrix(t)[i, j])


def model_from_dict(d: dict) -> ModelSpec:
    """Inverse of ModelSpec.to_dict."""
    d = dict(d)
    try:
        kind = d.pop("kind")
        rate = float(d.pop("rate"))
        if kind == "BS":
            return CommonSubordinatorModel.bs(rate, d["theta"], d["sigma"], d["rho"])
        if kind == "VG":
            return CommonSubordinatorModel.vg(rate, d["theta"], d["sigma"], d["alpha"], d["beta"], d["rho"])
        if kind == "VGPP":
            return CommonSubordinatorModel.vgpp(
                rate, d["theta"], d["sigma"], d["a"], d["alpha"], d["beta"], d["rho"]
            )
        if kind == "SemeraroVGPP":
            return SemeraroModel(rate, d["theta"], d["sigma"], d["alpha_j"], d["A_j"],
                                 d["A"], d["B"], d["a"])
        if kind == "LSVGPP":
            return LSModel(rate, d["theta"], d["sigma"], d["alpha_j"], d["A_j"], d["A"],
                           d["B"], d["a"], rho=d["rho"])
        if kind == "BBVGPP":
            return BBModel(rate, d["a"], d["beta_x"], d["gamma_x"], d["A_x"], d["B_x"],
                           d["a_j"], d["beta_z"], d["gamma_z"], d["A_z"], d["B_z"])
    except KeyError as exc:
        raise DomainError(f"model document is missing field {exc.args[0]!r}") from None
    raise DomainError(f"unknown model kind {kind!r}; expected one of {', '.join(KINDS)}")
