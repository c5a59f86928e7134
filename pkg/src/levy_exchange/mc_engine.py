"""Monte Carlo simulation of every model kind and MC exchange pricing.

Paths are split into fixed-size blocks. Block b draws from its own stream
seeded by SeedSequence(seed, spawn_key=(b,)), so estimates do not depend on
how many worker threads run the blocks. Per-block statistics are merged in
block order.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .gammapp import GammaPPParams, GammaPPSampler
from .models import BBModel, CommonSubordinatorModel, LSModel, ModelSpec, SemeraroModel
from .pricing_closed import ExchangeContract, PriceReport

BLOCK_SIZE = 1 << 16


@dataclass(frozen=True)
class SimPlan:
    n_paths: int
    seed: int = 0
    antithetic: bool = True
    n_steps: int = 1
    block_size: int = BLOCK_SIZE

    def __post_init__(self):
        if int(self.n_paths) < 2:
            raise DomainError("n_paths must be at least 2")
        if self.antithetic and (self.n_paths % 2 or self.block_size % 2):
            raise DomainError("antithetic sampling needs an even number of paths and block size")
        if self.n_steps < 1:
            raise DomainError("n_steps must be positive")

    def blocks(self):
        """(block_id, n_paths_in_block) pairs covering n_paths."""
        out = []
        done = 0
        b = 0
        while done < self.n_paths:
            n = min(self.block_size, self.n_paths - done)
            out.append((b, n))
            done += n
            b += 1
        return out


def worker_count() -> int:
    env = os.environ.get("LEVY_EXCHANGE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"LEVY_EXCHANGE_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def block_rng(seed: int, block_id: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(block_id),))))


def _sqrt_factor(corr: np.ndarray) -> np.ndarray:
    """A with A A^T = corr; works for singular PSD matrices (e.g. rho = 1)."""
    vals, vecs = np.linalg.eigh(corr)
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


class _Clock:
    """Cached samplers for one Gamma++ law at each distinct step length."""

    def __init__(self, params: GammaPPParams, dts):
        # built up front so worker threads only read
        self._samplers = {dt: GammaPPSampler(params, dt) for dt in set(dts)}

    def draw(self, rng, dt, n):
        return self._samplers[dt].draw(rng, n)[0]


class _Simulator:
    """Draws increments of Y over steps ``dts`` for one model."""

    def __init__(self, spec: ModelSpec, dts):
        self.spec = spec
        self.dts = [float(d) for d in dts]
        d = spec.n_assets
        if isinstance(spec, CommonSubordinatorModel):
            self.clock = None if spec.sub is None else _Clock(spec.sub, self.dts)
            self.factor = _sqrt_factor(spec.rho)
        elif isinstance(spec, SemeraroModel):
            self.idio = [_Clock(spec.idio(j), self.dts) for j in range(d)]
            self.common = _Clock(spec.common, self.dts)
            rho = spec.rho if isinstance(spec, LSModel) else np.eye(d)
            self.factor = _sqrt_factor(rho)
        elif isinstance(spec, BBModel):
            self.x = [_Clock(spec.x_clock(j), self.dts) for j in range(d)]
            self.z = _Clock(spec.z_clock(), self.dts)
        else:
            raise DomainError(f"no simulator for model kind {spec.kind}")

    def draw_clocks(self, rng, dt, n):
        spec = self.spec
        if isinstance(spec, CommonSubordinatorModel):
            return (np.full(n, dt) if self.clock is None else self.clock.draw(rng, dt, n),)
        if isinstance(spec, SemeraroModel):
            idio = np.stack([c.draw(rng, dt, n) for c in self.idio], axis=1)
            return idio, self.common.draw(rng, dt, n)
        x = np.stack([c.draw(rng, dt, n) for c in self.x], axis=1)
        return x, self.z.draw(rng, dt, n)

    def draw_normals(self, rng, n):
        spec = self.spec
        d = spec.n_assets
        if isinstance(spec, CommonSubordinatorModel):
            return (rng.standard_normal((n, d)) @ self.factor.T,)
        if isinstance(spec, LSModel):
            return rng.standard_normal((n, d)), rng.standard_normal((n, d)) @ self.factor.T
        if isinstance(spec, SemeraroModel):
            return (rng.standard_normal((n, d)),)
        return rng.standard_normal((n, d)), rng.standard_normal(n)

    def assemble(self, clocks, normals):
        spec = self.spec
        if isinstance(spec, CommonSubordinatorModel):
            (g,) = clocks
            (eps,) = normals
            th = np.asarray(spec.theta)
            sig = np.asarray(spec.sigma)
            return g[:, None] * th + np.sqrt(g)[:, None] * sig * eps
        if isinstance(spec, LSModel):
            idio, z = clocks
            eps, eta = normals
            th, sig, al = np.asarray(spec.theta), np.asarray(spec.sigma), np.asarray(spec.alpha_j)
            zj = z[:, None] * al
            return th * (idio + zj) + sig * (np.sqrt(idio) * eps + np.sqrt(zj) * eta)
        if isinstance(spec, SemeraroModel):
            idio, z = clocks
            (eps,) = normals
            th, sig, al = np.asarray(spec.theta), np.asarray(spec.sigma), np.asarray(spec.alpha_j)
            g = idio + z[:, None] * al
            return th * g + sig * np.sqrt(g) * eps
        gx, gz = clocks
        eps, eps_z = normals
        bx, gmx = np.asarray(spec.beta_x), np.asarray(spec.gamma_x)
        zpart = spec.beta_z * gz + spec.gamma_z * np.sqrt(gz) * eps_z
        return bx * gx + gmx * np.sqrt(gx) * eps + np.asarray(spec.a_j) * zpart[:, None]

    def block(self, rng, n, antithetic):
        """Increments of shape (n, steps, d); antithetic pairs are rows i and i + n/2."""
        d = self.spec.n_assets
        out = np.empty((n, len(self.dts), d))
        m = n // 2 if antithetic else n
        for k, dt in enumerate(self.dts):
            clocks = self.draw_clocks(rng, dt, m)
            normals = self.draw_normals(rng, m)
            out[:m, k] = self.assemble(clocks, normals)
            if antithetic:
                out[m:, k] = self.assemble(clocks, tuple(-z for z in normals))
        return out


def _steps(t_grid) -> list:
    t = np.asarray(t_grid, dtype=float).ravel()
    if t.size == 0 or t[0] <= 0.0 or np.any(np.diff(t) <= 0.0):
        raise DomainError("t_grid must be strictly increasing and start after 0")
    return list(np.diff(np.concatenate([[0.0], t])))


def _run_blocks(fn, plan: SimPlan):
    blocks = plan.blocks()
    workers = min(worker_count(), len(blocks))
    if workers <= 1:
        return [fn(b, n) for b, n in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda bn: fn(*bn), blocks))


def simulate_increments(spec: ModelSpec, t_grid, plan: SimPlan) -> np.ndarray:
    """Log-return increments of shape (n_paths, len(t_grid), n_assets), before drift correction."""
    sim = _Simulator(spec, _steps(t_grid))
    parts = _run_blocks(lambda b, n: sim.block(block_rng(plan.seed, b), n, plan.antithetic), plan)
    return np.concatenate(parts, axis=0)


def _merge(stats):
    """Chan's pairwise merge of (count, mean, M2), in the given order."""
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in stats:
        tot = n + nb
        delta = mb - mean
        mean = mean + delta * nb / tot
        m2 = m2 + m2b + delta * delta * n * nb / tot
        n = tot
    return n, mean, m2


def price_exchange_mc(contract: ExchangeContract, spec: ModelSpec, plan: SimPlan) -> PriceReport:
    """e^{-rT} E[(S2(T) - S1(T) - K)^+] with S_i(T) = S_i(0) exp((r + omega_i) T + Y_i(T)).

    With antithetic sampling the standard error is computed from pair averages.
    """
    start = time.perf_counter()
    if spec.n_assets != 2:
        raise DomainError("exchange pricing needs exactly two assets")
    T, r = contract.maturity_T, spec.rate
    omega = spec.drift_correctors()
    log_f = np.log([contract.s1_0, contract.s2_0]) + (r + omega) * T
    disc = math.exp(-r * T)
    dts = [T / plan.n_steps] * plan.n_steps
    sim = _Simulator(spec, dts)

    def run(b, n):
        y = sim.block(block_rng(plan.seed, b), n, plan.antithetic).sum(axis=1)
        s = np.exp(log_f + y)
        pay = disc * np.maximum(s[:, 1] - s[:, 0] - contract.strike_K, 0.0)
        if plan.antithetic:
            m = n // 2
            pay = 0.5 * (pay[:m] + pay[m:])
        if pay.min() == pay.max():
            # deterministic payoff: report it exactly, with zero spread
            return pay.size, float(pay[0]), 0.0
        mean = float(pay.mean())
        return pay.size, mean, float(((pay - mean) ** 2).sum())

    count, mean, m2 = _merge(_run_blocks(run, plan))
    se = math.sqrt(m2 / (count - 1) / count) if count > 1 else 0.0
    return PriceReport(mean, "mc", std_error=se, runtime=time.perf_counter() - start,
                       diagnostics={"n_paths": plan.n_paths, "antithetic": plan.antithetic,
                                    "blocks": len(plan.blocks())})
