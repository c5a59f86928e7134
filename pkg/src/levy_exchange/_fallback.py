"""Pure Python/numpy implementations of the hot kernels.

Used when the compiled ``_kernels`` extension is unavailable, or when
``LEVY_EXCHANGE_PURE_PYTHON=1`` is set. Signatures mirror ``_kernels.pyx``.
"""

import math

import numpy as np

_RESCALE = 1e150
_LOG_RESCALE = math.log(_RESCALE)
_SQRT_HALF_PI = math.sqrt(math.pi / 2.0)
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def psi_integer_sequence(a, b, n_max):
    """Psi(a, b; n) for n = 0..n_max via the half-integer Bessel recurrence.

    Psi(n + 1) - Psi(n) is an integral of phi(h) h' against the Gamma(n + 1)
    density, which reduces to K_{n -+ 1/2}(c). ``E[n]`` holds the scaled
    quantity rho^(n+1/2) K_{n+1/2}(c) e^c / n!, which obeys a recurrence with
    positive coefficients (upward stable).
    """
    a = float(a)
    b = float(b)
    n_max = int(n_max)
    out = np.empty(n_max + 1)
    q = 2.0 + b * b
    sq = math.sqrt(q)
    if a == 0.0:
        rho = 0.0
        log_pref = -_LOG_SQRT_2PI
        out[0] = 0.5
    else:
        c = abs(a) * sq
        rho = abs(a) / sq
        log_pref = -a * b - c - _LOG_SQRT_2PI
        out[0] = 1.0 if a > 0.0 else 0.0
    if n_max == 0:
        return out
    scale = 0.0
    pref = math.exp(log_pref)
    e_prev = _SQRT_HALF_PI / sq  # E[0]
    e_cur = e_prev * (rho + 1.0 / q)  # E[1]
    if a == 0.0:
        d = pref * b * e_prev
    else:
        d = pref * (-math.copysign(_SQRT_HALF_PI, a) + b * e_prev)
    acc = out[0] + d
    out[1] = acc
    rho2 = rho * rho
    for n in range(1, n_max):
        # here e_prev = E[n-1], e_cur = E[n]
        d = pref * (b * e_cur - a * e_prev / n)
        acc += d
        out[n + 1] = acc
        e_next = rho2 * e_prev / (n * (n + 1.0)) + (2.0 * n + 1.0) / (q * (n + 1.0)) * e_cur
        e_prev = e_cur
        e_cur = e_next
        if e_cur > _RESCALE:
            e_prev /= _RESCALE
            e_cur /= _RESCALE
            scale += _LOG_RESCALE
            pref = math.exp(log_pref + scale)
        elif e_cur < e_prev and pref * e_prev < 1e-300:
            # remaining increments are below the double-precision floor
            out[n + 2:] = acc
            break
    return out


def _invert_table(u, cdf, a, shape, w_last):
    s = np.searchsorted(cdf, u, side="right")
    last = len(cdf) - 1
    for i in np.flatnonzero(s > last):
        n = last
        acc = cdf[last]
        w = w_last
        while u[i] >= acc and w > 0.0:
            w *= (shape + n) / (n + 1.0) * (1.0 - a)
            n += 1
            acc += w
        s[i] = n
    return s


def _standard_gamma(rng, shape):
    """Marsaglia-Tsang acceptance-rejection without the squeeze test."""
    shape = np.asarray(shape, dtype=float)
    out = np.empty(shape.shape)
    small = shape < 1.0
    d_all = np.where(small, shape + 1.0, shape) - 1.0 / 3.0
    c_all = 1.0 / np.sqrt(9.0 * d_all)
    todo = np.arange(shape.size)
    while todo.size:
        d = d_all[todo]
        c = c_all[todo]
        x = rng.standard_normal(todo.size)
        v = 1.0 + c * x
        u = rng.random(todo.size)
        ok = v > 0.0
        v3 = np.where(ok, v, 1.0) ** 3
        ok &= np.log(u) < 0.5 * x * x + d - d * v3 + d * np.log(v3)
        out[todo[ok]] = (d * v3)[ok]
        todo = todo[~ok]
    if small.any():
        idx = np.flatnonzero(small)
        out[idx] *= rng.random(idx.size) ** (1.0 / shape[idx])
    return out


def sample_gammapp(rng, a, shape, rate, n, cdf, w_last):
    """Draw ``n`` Gamma++(a, shape, rate) variates.

    The count S is obtained by inverting the negative-binomial CDF table
    ``cdf`` (continued past its end from ``w_last`` if a uniform lands in the
    tail); given S > 0 the value is Gamma(S, rate / a).
    """
    n = int(n)
    if a == 0.0:
        values = _standard_gamma(rng, np.full(n, float(shape))) / rate
        return values, np.zeros(n, dtype=bool)
    u = rng.random(n)
    counts = _invert_table(u, cdf, a, shape, w_last)
    values = np.zeros(n)
    pos = np.flatnonzero(counts > 0)
    if pos.size:
        values[pos] = _standard_gamma(rng, counts[pos].astype(float)) * (a / rate)
    return values, counts == 0
