# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled pointwise kernels; see ``_kernels_py`` for the reference semantics."""
import numpy as np

from libc.math cimport exp, expm1, log1p, sqrt, cos, sin, fabs

cdef double CONFLUENT_THRESHOLD = 1e-6


def reaction_flow(psi_in, double dt, double kappa, double eps):
    psi_arr = np.ascontiguousarray(psi_in, dtype=np.complex128)
    shape = psi_arr.shape
    cdef const double[::1] src = psi_arr.reshape(-1).view(np.float64)
    out_arr = np.empty(psi_arr.size, dtype=np.complex128)
    cdef double[::1] dst = out_arr.view(np.float64)
    cdef Py_ssize_t n = psi_arr.size
    cdef Py_ssize_t i
    cdef double re, im, m0, lr, amp, ph, c, s
    cdef double em = expm1(-2.0 * kappa * dt / (eps * eps))
    cdef double half_over_kappa = 0.5 / kappa
    cdef double min_m0 = 1e308
    cdef double max_dev = 0.0
    for i in range(n):
        re = src[2 * i]
        im = src[2 * i + 1]
        m0 = re * re + im * im
        if m0 < min_m0:
            min_m0 = m0
        if fabs(m0 - 1.0) > max_dev:
            max_dev = fabs(m0 - 1.0)
        lr = -log1p((1.0 - m0) * em)
        amp = exp(0.5 * lr)
        ph = lr * half_over_kappa
        c = amp * cos(ph)
        s = amp * sin(ph)
        dst[2 * i] = re * c - im * s
        dst[2 * i + 1] = re * s + im * c
    return out_arr.reshape(shape), min_m0, max_dev


def semigroup(p, q, r, t):
    pb, qb, rb, tb = np.broadcast_arrays(
        *(np.asarray(a, dtype=np.float64) for a in (p, q, r, t)))
    shape = pb.shape
    cdef const double[::1] P = np.ascontiguousarray(pb).reshape(-1)
    cdef const double[::1] Q = np.ascontiguousarray(qb).reshape(-1)
    cdef const double[::1] R = np.ascontiguousarray(rb).reshape(-1)
    cdef const double[::1] T = np.ascontiguousarray(tb).reshape(-1)
    cdef Py_ssize_t n = P.shape[0]
    e00_a = np.empty(n)
    e01_a = np.empty(n)
    e10_a = np.empty(n)
    e11_a = np.empty(n)
    cdef double[::1] e00 = e00_a
    cdef double[::1] e01 = e01_a
    cdef double[::1] e10 = e10_a
    cdef double[::1] e11 = e11_a
    cdef Py_ssize_t i
    cdef double m, h, qq, tt, disc, x2, ch, sh, decay, sd, slow, w
    for i in range(n):
        m = 0.5 * (P[i] + R[i])
        h = 0.5 * (P[i] - R[i])
        qq = Q[i]
        tt = T[i]
        disc = h * h - qq * qq
        x2 = disc * tt * tt
        if fabs(x2) < CONFLUENT_THRESHOLD:
            decay = exp(-m * tt)
            ch = decay * (1.0 + x2 / 2.0)
            sh = decay * tt * (1.0 + x2 / 6.0)
        elif disc > 0:
            sd = sqrt(disc)
            slow = exp(-(m - sd) * tt)
            ch = 0.5 * slow * (1.0 + exp(-2.0 * sd * tt))
            sh = slow * (-expm1(-2.0 * sd * tt)) / (2.0 * sd)
        else:
            w = sqrt(-disc)
            decay = exp(-m * tt)
            ch = decay * cos(w * tt)
            sh = decay * sin(w * tt) / w
        e00[i] = ch - sh * h
        e01[i] = -sh * qq
        e10[i] = sh * qq
        e11[i] = ch + sh * h
    return (e00_a.reshape(shape), e01_a.reshape(shape),
            e10_a.reshape(shape), e11_a.reshape(shape))
