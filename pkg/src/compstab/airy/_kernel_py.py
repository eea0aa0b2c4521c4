"""Pure-Python Airy kernel.

Evaluates Ai, Ai', and the iterated primitives Ai(1,z), Ai(2,z) (normalised
to vanish along the ray arg z = pi/6) for complex z. All four values are
returned multiplied by exp(zeta), zeta = (2/3) z^(3/2) on the principal
branch, so that magnitudes stay finite for |z| far beyond the overflow
threshold of the unscaled functions.

Evaluation regions:

* ``|z| <= R_SERIES``: Maclaurin series (Taylor recurrence centred at 0).
* ``|z| >= R_ASYMP``: exponential asymptotic expansion, with the three-term
  connection formula when ``|arg z| > 2 pi / 3``. The primitive expansions
  are only accurate to about exp(-|zeta|) relative (the constant solution of
  the primitive ODE sits one Borel unit away), hence the large radius.
* in between: Taylor continuation of the ODE ``Ai'' = z Ai`` along the ray
  through z, started from whichever end makes the target solution dominant
  (inward from the asymptotic radius where Ai decays outward, outward from
  the series radius elsewhere).

The Cython module ``_kernel_c`` implements the same algorithm.
"""

import cmath
import math

import numpy as np

AI0 = 0.355028053887817239260063186004
AIP0 = -0.258819403792806798405183560189
R_SERIES = 3.0
R_ASYMP = 14.0
H_STEP = 1.0
K_ASYMP = 60
TINY = 1e-17

_OMEGA = cmath.exp(2j * math.pi / 3)
_OMEGA2 = _OMEGA * _OMEGA
_C0 = 0.5 / math.sqrt(math.pi)


def _asymptotic_coefficients(kmax=K_ASYMP):
    u = np.empty(kmax + 1)
    u[0] = 1.0
    for k in range(1, kmax + 1):
        u[k] = u[k - 1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216.0 * k)
    sgn = (-1.0) ** np.arange(kmax + 1)
    p = sgn * u
    v = u.copy()
    v[1:] = -(6 * np.arange(1, kmax + 1) + 1) / (6 * np.arange(1, kmax + 1) - 1) * u[1:]
    pv = sgn * v
    q = np.empty(kmax + 1)
    r = np.empty(kmax + 1)
    q[0] = r[0] = 1.0
    for k in range(1, kmax + 1):
        q[k] = p[k] - (k - 0.5) * q[k - 1]
        r[k] = q[k] - (k - 1.0 / 6.0) * r[k - 1]
    return p, pv, q, r


COEF_P, COEF_PV, COEF_Q, COEF_R = _asymptotic_coefficients()


def zeta(z):
    return (2.0 / 3.0) * z * cmath.sqrt(z)


def _series_sum(coef, iz):
    # Sum coef[k] * iz**k, stopping at the smallest term (optimal truncation).
    total = 0j
    term_pow = 1.0 + 0j
    prev = math.inf
    for k in range(coef.shape[0]):
        t = coef[k] * term_pow
        at = abs(t)
        if at > prev:
            break
        total += t
        if at <= TINY * abs(total):
            break
        prev = at
        term_pow *= iz
    return total


def _asymptotic_direct(z):
    """Scaled (Ai, Ai', A1, A2) from the expansion; valid for |arg z| <= 2pi/3."""
    iz = 1.0 / zeta(z)
    q4 = z ** -0.25
    P = _series_sum(COEF_P, iz)
    PV = _series_sum(COEF_PV, iz)
    Q = _series_sum(COEF_Q, iz)
    R = _series_sum(COEF_R, iz)
    ai = _C0 * q4 * P
    aip = -_C0 / q4 * PV
    a1 = -_C0 * q4 ** 3 * Q
    a2 = _C0 * q4 ** 5 * R
    return ai, aip, a1, a2


def asymptotic_scaled(z):
    """Scaled values from the asymptotic expansion on the whole plane."""
    if abs(cmath.phase(z)) <= 2.0 * math.pi / 3.0:
        return _asymptotic_direct(z)
    zz = zeta(z)
    z1 = _OMEGA * z
    z2 = _OMEGA2 * z
    f1 = cmath.exp(zz - zeta(z1))
    f2 = cmath.exp(zz - zeta(z2))
    b1 = _asymptotic_direct(z1)
    b2 = _asymptotic_direct(z2)
    ai = -_OMEGA * b1[0] * f1 - _OMEGA2 * b2[0] * f2
    aip = -_OMEGA2 * b1[1] * f1 - _OMEGA * b2[1] * f2
    a1 = -cmath.exp(zz) - b1[2] * f1 - b2[2] * f2
    a2 = -z * cmath.exp(zz) - _OMEGA2 * b1[3] * f1 - _OMEGA * b2[3] * f2
    return ai, aip, a1, a2


def taylor_step(zc, ai, aip, a1, a2, h):
    """Advance (Ai, Ai', A1, A2) from zc to zc + h with the ODE Taylor series.

    Coefficients obey a_n = (zc a_{n-2} + a_{n-3}) / (n (n-1)).
    """
    s_ai = ai + aip * h
    s_aip = aip + 0j
    s_a1 = a1 + ai * h + aip * h * h / 2.0
    s_a2 = a2 + a1 * h + ai * h * h / 2.0 + aip * h * h * h / 6.0
    c3 = 0j      # a_{n-3}
    c2 = ai      # a_{n-2}
    c1 = aip     # a_{n-1}
    hp = h       # h**(n-1)
    small = 0
    n = 2
    while n < 300:
        an = (zc * c2 + c3) / (n * (n - 1))
        d_aip = n * an * hp
        hp = hp * h
        t = an * hp
        s_ai += t
        s_aip += d_aip
        s_a1 += t * h / (n + 1)
        s_a2 += t * h * h / ((n + 1) * (n + 2))
        scale = abs(s_ai) + abs(s_aip)
        if abs(t) <= TINY * scale and abs(d_aip) <= TINY * scale:
            small += 1
            if small >= 3:
                break
        else:
            small = 0
        c3, c2, c1 = c2, c1, an
        n += 1
    return s_ai, s_aip, s_a1, s_a2


def continue_along(z_start, vals, z_end):
    d = z_end - z_start
    nstep = max(1, int(math.ceil(abs(d) / H_STEP)))
    h = d / nstep
    zc = z_start
    ai, aip, a1, a2 = vals
    for _ in range(nstep):
        ai, aip, a1, a2 = taylor_step(zc, ai, aip, a1, a2, h)
        zc = zc + h
    return ai, aip, a1, a2


def maclaurin(z):
    """Unscaled values from the series about the origin."""
    return taylor_step(0j, AI0 + 0j, AIP0 + 0j, -1.0 / 3.0 + 0j, -AIP0 + 0j, z)


def airy_scaled_scalar(z, mode=0):
    """Scaled (Ai, Ai', A1, A2) at a complex point.

    ``mode`` selects the branch: 0 automatic, 1 raw Maclaurin sum at z,
    2 asymptotic branch (expansion, continued inward below R_ASYMP).
    """
    z = complex(z)
    r = abs(z)
    zz = zeta(z)
    if mode == 1:
        s = cmath.exp(zz)
        return tuple(v * s for v in maclaurin(z))
    if mode == 2 or r >= R_ASYMP:
        if r >= R_ASYMP:
            return asymptotic_scaled(z)
        za = z * (R_ASYMP / r)
        sa = cmath.exp(-zeta(za))
        vals = continue_along(za, tuple(v * sa for v in asymptotic_scaled(za)), z)
        s = cmath.exp(zz)
        return tuple(v * s for v in vals)
    if r <= R_SERIES:
        vals = maclaurin(z)
    elif zz.real > 0.0:
        za = z * (R_ASYMP / r)
        sa = cmath.exp(-zeta(za))
        vals = continue_along(za, tuple(v * sa for v in asymptotic_scaled(za)), z)
    else:
        zs = z * (R_SERIES / r)
        vals = continue_along(zs, maclaurin(zs), z)
    s = cmath.exp(zz)
    return tuple(v * s for v in vals)


def airy_scaled_array(z, mode=0):
    z = np.asarray(z, dtype=complex).ravel()
    out = np.empty((4, z.size), dtype=complex)
    for i in range(z.size):
        out[:, i] = airy_scaled_scalar(z[i], mode)
    return out
