# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Signatures mirror ``_fallback.py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt, fabs, copysign, pow
from cpython.pycapsule cimport PyCapsule_IsValid, PyCapsule_GetPointer
from numpy.random cimport bitgen_t
from numpy.random.c_distributions cimport random_standard_normal

cnp.import_array()

cdef double _RESCALE = 1e150
cdef double _LOG_RESCALE = log(1e150)
cdef double _SQRT_HALF_PI = sqrt(3.141592653589793 / 2.0)
cdef double _LOG_SQRT_2PI = 0.5 * log(2.0 * 3.141592653589793)


def psi_integer_sequence(double a, double b, Py_ssize_t n_max):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out_arr = np.empty(n_max + 1)
    cdef double[::1] out = out_arr
    cdef double q = 2.0 + b * b
    cdef double sq = sqrt(q)
    cdef double rho, c, log_pref, pref, scale = 0.0
    cdef double e_prev, e_cur, e_next, d, acc, rho2
    cdef Py_ssize_t n
    if a == 0.0:
        rho = 0.0
        log_pref = -_LOG_SQRT_2PI
        out[0] = 0.5
    else:
        c = fabs(a) * sq
        rho = fabs(a) / sq
        log_pref = -a * b - c - _LOG_SQRT_2PI
        out[0] = 1.0 if a > 0.0 else 0.0
    if n_max == 0:
        return out_arr
    with nogil:
        pref = exp(log_pref)
        e_prev = _SQRT_HALF_PI / sq
        e_cur = e_prev * (rho + 1.0 / q)
        if a == 0.0:
            d = pref * b * e_prev
        else:
            d = pref * (-copysign(_SQRT_HALF_PI, a) + b * e_prev)
        acc = out[0] + d
        out[1] = acc
        rho2 = rho * rho
        for n in range(1, n_max):
            d = pref * (b * e_cur - a * e_prev / <double>n)
            acc = acc + d
            out[n + 1] = acc
            e_next = (rho2 * e_prev / (<double>n * (n + 1.0))
                      + (2.0 * n + 1.0) / (q * (n + 1.0)) * e_cur)
            e_prev = e_cur
            e_cur = e_next
            if e_cur > _RESCALE:
                e_prev = e_prev / _RESCALE
                e_cur = e_cur / _RESCALE
                scale = scale + _LOG_RESCALE
                pref = exp(log_pref + scale)
            elif e_cur < e_prev and pref * e_prev < 1e-300:
                # remaining increments are below the double-precision floor
                for n in range(n + 2, n_max + 1):
                    out[n] = acc
                break
    return out_arr


cdef inline double _gamma_mt(bitgen_t *rng, double shape) noexcept nogil:
    # Marsaglia-Tsang acceptance-rejection without the squeeze test.
    cdef double d, c, x, v, u, boost = 1.0
    if shape < 1.0:
        boost = pow(rng.next_double(rng.state), 1.0 / shape)
        shape = shape + 1.0
    d = shape - 1.0 / 3.0
    c = 1.0 / sqrt(9.0 * d)
    while True:
        x = random_standard_normal(rng)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = rng.next_double(rng.state)
        if log(u) < 0.5 * x * x + d - d * v + d * log(v):
            return d * v * boost


cdef inline Py_ssize_t _invert(double u, const double[::1] cdf, double a,
                               double shape, double w_last) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = cdf.shape[0], mid, n
    cdef double acc, w
    # first index with cdf[idx] > u
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] > u:
            hi = mid
        else:
            lo = mid + 1
    if lo < cdf.shape[0]:
        return lo
    n = cdf.shape[0] - 1
    acc = cdf[n]
    w = w_last
    while u >= acc and w > 0.0:
        w = w * (shape + n) / (n + 1.0) * (1.0 - a)
        n += 1
        acc = acc + w
    return n


def sample_gammapp(rng, double a, double shape, double rate, Py_ssize_t n,
                   const double[::1] cdf, double w_last):
    cdef bitgen_t *bg
    cdef const char *capsule_name = "BitGenerator"
    bit_gen = rng.bit_generator
    capsule = bit_gen.capsule
    if not PyCapsule_IsValid(capsule, capsule_name):
        raise ValueError("invalid bit generator capsule")
    bg = <bitgen_t *> PyCapsule_GetPointer(capsule, capsule_name)
    values_arr = np.zeros(n)
    atom_arr = np.zeros(n, dtype=np.uint8)
    cdef double[::1] values = values_arr
    cdef unsigned char[::1] atom = atom_arr
    cdef Py_ssize_t i, s
    cdef double scale = a / rate
    with bit_gen.lock, nogil:
        if a == 0.0:
            for i in range(n):
                values[i] = _gamma_mt(bg, shape) / rate
        else:
            for i in range(n):
                s = _invert(bg.next_double(bg.state), cdf, a, shape, w_last)
                if s == 0:
                    atom[i] = 1
                else:
                    values[i] = _gamma_mt(bg, <double>s) * scale
    return values_arr, atom_arr.view(bool)
