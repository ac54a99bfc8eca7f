# cython: language_level=3
"""Compiled twins of the hot kernels in py_kernels.py (same contracts)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, fabs, log, sin, tanh

cnp.import_array()

BACKEND_NAME = "compiled"


def walk_const(
    double[::1] x,
    cnp.uint8_t[::1] frozen,
    double[:, ::1] u,
    double p_base,
    double p_slope,
    double eps0,
    double eps1,
    double x_max,
    double[:, ::1] x_out=None,
    cnp.int8_t[:, ::1] oc_out=None,
):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t n_steps = u.shape[1]
    cdef Py_ssize_t i, k
    cdef double p0
    cdef cnp.int8_t oc
    for k in range(n_steps):
        for i in range(n):
            if frozen[i]:
                oc = -1
            else:
                p0 = p_base + p_slope * tanh(x[i])
                if u[i, k] >= p0:
                    oc = 1
                    x[i] += eps1
                else:
                    oc = 0
                    x[i] += eps0
                if fabs(x[i]) > x_max:
                    frozen[i] = 1
            if x_out is not None:
                x_out[k, i] = x[i]
            if oc_out is not None:
                oc_out[k, i] = oc


def walk_localized(
    double[::1] x,
    cnp.uint8_t[::1] frozen,
    double[:, ::1] u,
    double alpha,
    double delta_scale,
    double pi_lock,
    double band,
    long sustain,
    long[::1] counters,
    cnp.uint8_t[::1] latched,
    double x_max,
    double[:, ::1] x_out=None,
    cnp.int8_t[:, ::1] oc_out=None,
):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t n_steps = u.shape[1]
    cdef Py_ssize_t i, k
    cdef double ca = cos(alpha) ** 2
    cdef double sa = sin(alpha) ** 2
    cdef double pi, g, dn, cd, sd, p0
    cdef double max_x = -1e308
    cdef cnp.int8_t oc
    for i in range(n):
        if x[i] > max_x:
            max_x = x[i]
    for k in range(n_steps):
        for i in range(n):
            if frozen[i]:
                oc = -1
            else:
                pi = 1.0 / (1.0 + exp(-2.0 * x[i]))
                if pi < pi_lock:
                    g = (pi_lock - pi) / (1.0 - pi)
                else:
                    g = (pi - pi_lock) / pi
                dn = delta_scale * g
                cd = cos(alpha + dn) ** 2
                sd = sin(alpha + dn) ** 2
                p0 = pi * cd + (1.0 - pi) * ca
                if u[i, k] >= p0:
                    oc = 1
                    x[i] += 0.5 * log(sd / sa)
                else:
                    oc = 0
                    x[i] += 0.5 * log(cd / ca)
                if fabs(x[i]) > x_max:
                    frozen[i] = 1
                pi = 1.0 / (1.0 + exp(-2.0 * x[i]))
                if fabs(pi - pi_lock) < band:
                    counters[i] += 1
                    if counters[i] >= sustain:
                        latched[i] = 1
                else:
                    counters[i] = 0
                if x[i] > max_x:
                    max_x = x[i]
            if x_out is not None:
                x_out[k, i] = x[i]
            if oc_out is not None:
                oc_out[k, i] = oc
    return max_x


cdef void _rhs(
    double* p,
    double* a_lo,
    double* a_hi,
    double dx,
    Py_ssize_t n,
    bint periodic,
    double* j,
    double* out,
) noexcept nogil:
    cdef Py_ssize_t f
    if periodic:
        j[0] = a_lo[0] * p[n - 1] - a_hi[0] * p[0]
        for f in range(1, n):
            j[f] = a_lo[f] * p[f - 1] - a_hi[f] * p[f]
        for f in range(n - 1):
            out[f] = -(j[f + 1] - j[f]) / dx
        out[n - 1] = -(j[0] - j[n - 1]) / dx
    else:
        j[0] = 0.0
        j[n] = 0.0
        for f in range(1, n):
            j[f] = a_lo[f] * p[f - 1] - a_hi[f] * p[f]
        for f in range(n):
            out[f] = -(j[f + 1] - j[f]) / dx


def face_flux(double[::1] p, double[::1] a_lo, double[::1] a_hi, bint periodic):
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t f
    cdef cnp.ndarray out
    cdef double[::1] j
    if periodic:
        out = np.empty(n)
        j = out
        j[0] = a_lo[0] * p[n - 1] - a_hi[0] * p[0]
        for f in range(1, n):
            j[f] = a_lo[f] * p[f - 1] - a_hi[f] * p[f]
    else:
        out = np.empty(n + 1)
        j = out
        j[0] = 0.0
        j[n] = 0.0
        for f in range(1, n):
            j[f] = a_lo[f] * p[f - 1] - a_hi[f] * p[f]
    return out


def fv_sweep(
    double[::1] p,
    double[::1] a_lo,
    double[::1] a_hi,
    double dx,
    double dt,
    long n_steps,
    bint periodic,
    double[::1] cur_out=None,
    long cur_stride=0,
    double clip_tol=1e-12,
):
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t i, k
    cdef long written = 0
    cdef double min_p = 1e308
    cdef double clipped = 0.0
    cdef double cur, m
    cdef cnp.ndarray buf = np.empty(3 * n + (0 if periodic else 1))
    cdef double[::1] work = buf
    cdef double* stage = &work[0]
    cdef double* dp = &work[n]
    cdef double* j = &work[2 * n]
    for i in range(n):
        if p[i] < min_p:
            min_p = p[i]
    for k in range(n_steps):
        if cur_out is not None and cur_stride > 0 and k % cur_stride == 0:
            if periodic:
                cur = a_lo[0] * p[n - 1] - a_hi[0] * p[0]
                for i in range(1, n):
                    cur += a_lo[i] * p[i - 1] - a_hi[i] * p[i]
            else:
                cur = 0.0
                for i in range(1, n):
                    cur += a_lo[i] * p[i - 1] - a_hi[i] * p[i]
            cur_out[written] = cur * dx
            written += 1
        _rhs(&p[0], &a_lo[0], &a_hi[0], dx, n, periodic, j, dp)
        for i in range(n):
            stage[i] = p[i] + dt * dp[i]
        _rhs(stage, &a_lo[0], &a_hi[0], dx, n, periodic, j, dp)
        for i in range(n):
            stage[i] = stage[i] + dt * dp[i]
            p[i] = 0.5 * (p[i] + stage[i])
        m = 1e308
        for i in range(n):
            if p[i] < m:
                m = p[i]
        if m < min_p:
            min_p = m
        if m < 0.0:
            for i in range(n):
                if p[i] < 0.0:
                    clipped += -p[i] * dx
                    p[i] = 0.0
    return written, min_p, clipped
