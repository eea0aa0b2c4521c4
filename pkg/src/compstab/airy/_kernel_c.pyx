# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Airy kernel; same algorithm and constants as ``_kernel_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, M_PI, ceil, INFINITY

cdef extern from "complex.h" nogil:
    double complex cexp(double complex)
    double complex csqrt(double complex)
    double complex cpow(double complex, double complex)
    double cabs(double complex)
    double carg(double complex)
    double creal(double complex)

from ._kernel_py import (AI0, AIP0, R_SERIES, R_ASYMP, H_STEP, TINY,
                         COEF_P, COEF_PV, COEF_Q, COEF_R)

cdef double c_AI0 = AI0
cdef double c_AIP0 = AIP0
cdef double c_RS = R_SERIES
cdef double c_RA = R_ASYMP
cdef double c_H = H_STEP
cdef double c_TINY = TINY
cdef int NCOEF = COEF_P.shape[0]
cdef double[::1] cP = np.ascontiguousarray(COEF_P)
cdef double[::1] cPV = np.ascontiguousarray(COEF_PV)
cdef double[::1] cQ = np.ascontiguousarray(COEF_Q)
cdef double[::1] cR = np.ascontiguousarray(COEF_R)
cdef double complex OMEGA = cexp(2j * M_PI / 3.0)
cdef double complex OMEGA2 = OMEGA * OMEGA
cdef double C0 = 0.5 / sqrt(M_PI)


cdef inline double complex _zeta(double complex z) nogil:
    return (2.0 / 3.0) * z * csqrt(z)


cdef double complex _series_sum(double[::1] coef, double complex iz) nogil:
    cdef double complex total = 0, t, pw = 1
    cdef double prev = INFINITY, at
    cdef int k
    for k in range(NCOEF):
        t = coef[k] * pw
        at = cabs(t)
        if at > prev:
            break
        total = total + t
        if at <= c_TINY * cabs(total):
            break
        prev = at
        pw = pw * iz
    return total


cdef void _asym_direct(double complex z, double complex* out) nogil:
    cdef double complex iz = 1.0 / _zeta(z)
    cdef double complex q4 = cpow(z, -0.25)
    out[0] = C0 * q4 * _series_sum(cP, iz)
    out[1] = -C0 / q4 * _series_sum(cPV, iz)
    out[2] = -C0 * q4 * q4 * q4 * _series_sum(cQ, iz)
    out[3] = C0 * q4 * q4 * q4 * q4 * q4 * _series_sum(cR, iz)


cdef void _asym_scaled(double complex z, double complex* out) nogil:
    cdef double complex b1[4]
    cdef double complex b2[4]
    cdef double complex zz, z1, z2, f1, f2, ez
    if fabs(carg(z)) <= 2.0 * M_PI / 3.0:
        _asym_direct(z, out)
        return
    zz = _zeta(z)
    z1 = OMEGA * z
    z2 = OMEGA2 * z
    f1 = cexp(zz - _zeta(z1))
    f2 = cexp(zz - _zeta(z2))
    _asym_direct(z1, b1)
    _asym_direct(z2, b2)
    ez = cexp(zz)
    out[0] = -OMEGA * b1[0] * f1 - OMEGA2 * b2[0] * f2
    out[1] = -OMEGA2 * b1[1] * f1 - OMEGA * b2[1] * f2
    out[2] = -ez - b1[2] * f1 - b2[2] * f2
    out[3] = -z * ez - OMEGA2 * b1[3] * f1 - OMEGA * b2[3] * f2


cdef void _taylor_step(double complex zc, double complex* v, double complex h) nogil:
    cdef double complex ai = v[0], aip = v[1], a1 = v[2], a2 = v[3]
    cdef double complex s_ai = ai + aip * h
    cdef double complex s_aip = aip
    cdef double complex s_a1 = a1 + ai * h + aip * h * h / 2.0
    cdef double complex s_a2 = a2 + a1 * h + ai * h * h / 2.0 + aip * h * h * h / 6.0
    cdef double complex c3 = 0, c2 = ai, c1 = aip, hp = h, an, t, d_aip
    cdef int n = 2, small = 0
    cdef double scale
    while n < 300:
        an = (zc * c2 + c3) / (n * (n - 1.0))
        d_aip = n * an * hp
        hp = hp * h
        t = an * hp
        s_ai = s_ai + t
        s_aip = s_aip + d_aip
        s_a1 = s_a1 + t * h / (n + 1.0)
        s_a2 = s_a2 + t * h * h / ((n + 1.0) * (n + 2.0))
        scale = cabs(s_ai) + cabs(s_aip)
        if cabs(t) <= c_TINY * scale and cabs(d_aip) <= c_TINY * scale:
            small += 1
            if small >= 3:
                break
        else:
            small = 0
        c3 = c2
        c2 = c1
        c1 = an
        n += 1
    v[0] = s_ai
    v[1] = s_aip
    v[2] = s_a1
    v[3] = s_a2


cdef void _continue(double complex z0, double complex* v, double complex z1) nogil:
    cdef double complex d = z1 - z0
    cdef int nstep = <int>ceil(cabs(d) / c_H)
    cdef int i
    cdef double complex h, zc = z0
    if nstep < 1:
        nstep = 1
    h = d / nstep
    for i in range(nstep):
        _taylor_step(zc, v, h)
        zc = zc + h


cdef void _maclaurin(double complex z, double complex* v) nogil:
    v[0] = c_AI0
    v[1] = c_AIP0
    v[2] = -1.0 / 3.0
    v[3] = -c_AIP0
    _taylor_step(0, v, z)


cdef void _scaled(double complex z, int mode, double complex* v) nogil:
    cdef double r = cabs(z)
    cdef double complex zz = _zeta(z), s, za, zs
    cdef int i
    if mode == 1:
        _maclaurin(z, v)
    elif r >= c_RA:
        _asym_scaled(z, v)
        return
    elif mode == 2 or (r > c_RS and creal(zz) > 0.0):
        za = z * (c_RA / r)
        _asym_scaled(za, v)
        s = cexp(-_zeta(za))
        for i in range(4):
            v[i] = v[i] * s
        _continue(za, v, z)
    elif r <= c_RS:
        _maclaurin(z, v)
    else:
        zs = z * (c_RS / r)
        _maclaurin(zs, v)
        _continue(zs, v, z)
    s = cexp(zz)
    for i in range(4):
        v[i] = v[i] * s


def airy_scaled_array(z, int mode=0):
    cdef cnp.ndarray[cnp.complex128_t, ndim=1] zin = np.ascontiguousarray(
        np.asarray(z, dtype=np.complex128).ravel())
    cdef Py_ssize_t n = zin.shape[0], i
    out = np.empty((4, n), dtype=np.complex128)
    cdef double complex[:, ::1] ov = out
    cdef double complex v[4]
    with nogil:
        for i in range(n):
            _scaled(zin[i], mode, v)
            ov[0, i] = v[0]
            ov[1, i] = v[1]
            ov[2, i] = v[2]
            ov[3, i] = v[3]
    return out
