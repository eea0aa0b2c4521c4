"""Viscous boundary-layer (fast) modes built from Airy primitives.

At the bottom wall the fast variable is z = (1 + y)/delta and

    v = i k delta Ai(2, z + z0)/Ai(2, z0),   u = -Ai(1, z + z0)/Ai(2, z0),

with delta = e^{-i pi/6} [U'(-1) n]^{-1/3} and z0 = -c/(U'(-1) delta). The top
layer is the mirror construction in z~ = (1 - y)/delta~ with u of the
opposite sign. Both have rho = 0 and are divergence free.
"""

from dataclasses import dataclass

import numpy as np

from .airy import airy_scaled, zeta
from .errors import DivisionByZeroNear
from .jets import Jet
from .slow_modes import lns_jets
from .spectral import ModeBundle, PanelMesh

BOTTOM = -1
TOP = 1
A2_GUARD = 1e-300


def _side(side):
    if side in (BOTTOM, "bottom", "-", "minus"):
        return BOTTOM
    if side in (TOP, "top", "+", "plus"):
        return TOP
    raise ValueError(f"unknown side {side!r}")


@dataclass(frozen=True)
class LayerScales:
    """Layer thickness ``delta`` (arg = -pi/6) and shifted origin ``z0``."""

    delta: complex
    z0: complex
    side: int
    slope: float

    @property
    def wall(self):
        return float(self.side)

    def fast_variable(self, y):
        """(1 -+ y)/delta; the distance is measured from the layer's wall."""
        return (1.0 - self.side * np.asarray(y, dtype=float)) / self.delta


def bl_scales(side, params, flow, c):
    side = _side(side)
    s = float(np.asarray(flow.profile(np.array([float(side)]))[1])[0])
    if s == 0.0:
        raise ValueError("wall slope vanishes")
    a = abs(s)
    delta = np.exp(-1j * np.pi / 6.0) / (a * params.n) ** (1.0 / 3.0)
    # z0 = -c/(U'(-1) delta) at the bottom, c/(U'(1) delta~) at the top
    z0 = -complex(c) / (a * delta)
    return LayerScales(complex(delta), complex(z0), side, s)


def _airy_derivs(w, order):
    """Ai^(j)(w) for j <= order, scaled by exp(zeta(w)), via Ai'' = w Ai."""
    s = airy_scaled(w)
    a = [s[0], s[1]]
    for n in range(2, order + 1):
        t = w * a[n - 2]
        if n >= 3:
            t = t + (n - 2) * a[n - 3]
        a.append(t)
    return s, a


def layer_profiles(scales, z, order=4):
    """z-derivatives of the normalized layer profile F(z) = Ai(2, z+z0)/Ai(2, z0).

    Returns an array of shape (order + 2, len(z)) holding F, F', ..., F^(order+1).
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    w = z + scales.z0
    s0 = airy_scaled(np.array([scales.z0]))[:, 0]
    if abs(s0[3]) < A2_GUARD:
        raise DivisionByZeroNear(f"|Ai(2, z0)| scaled value {abs(s0[3]):.3g} below guard")
    s, a = _airy_derivs(w, max(order - 1, 0))
    with np.errstate(under="ignore", over="ignore", invalid="ignore"):
        factor = np.exp(zeta(scales.z0) - zeta(w)) / s0[3]
    factor = np.where(np.isfinite(factor), factor, 0.0)
    rows = [s[3], s[2]] + a[: order]
    return np.array(rows[: order + 2]) * factor


def layer_jets(scales, y, k, order=4):
    """Jets (pi, u, v) of the layer mode in the physical variable y."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    F = layer_profiles(scales, scales.fast_variable(y), order)
    dz = -scales.side / scales.delta
    pw = dz ** np.arange(order + 2)
    v = Jet((1j * k * scales.delta) * F[: order + 1] * pw[: order + 1, None])
    u = Jet(scales.side * F[1: order + 2] * pw[: order + 1, None])
    pi = Jet(np.zeros_like(v.d))
    return pi, u, v


def bl_fields(side, grid, params, flow, c):
    """Layer mode (rho, u, v) = (0, u, v) sampled on the grid nodes."""
    sc = bl_scales(side, params, flow, c)
    _, u, v = layer_jets(sc, grid.nodes, params.k, order=0)
    label = "fast-" if sc.side == BOTTOM else "fast+"
    return ModeBundle(grid.nodes, np.zeros(grid.n_modes, dtype=complex), u.val, v.val, label)


def reduced_continuity(scales, z, h=1e-3):
    """u_layer -+ dF/dz with the derivative taken by a 5-point central stencil.

    u_layer = -F' at the bottom and +F' at the top, so this is O(h^4).
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    u_layer = scales.side * layer_profiles(scales, z, order=0)[1]

    def F(d):
        return layer_profiles(scales, z + d, order=0)[0]

    dF = (8 * (F(h) - F(-h)) - (F(2 * h) - F(-2 * h))) / (12 * h)
    return u_layer - scales.side * dF


def layer_ode_residual(scales, z):
    """-F'''' + (z + z0) F'' evaluated from the Airy recurrence."""
    F = layer_profiles(scales, z, order=4)
    return -F[4] + (np.asarray(z) + scales.z0) * F[2]


def _profile_jets(flow, y, order):
    return Jet(flow.profile.jet(y, order))


def fast_error_jets(scales, params, flow, c, y, order=3):
    """L applied to the layer mode (three jets of order ``order - 2``)."""
    pi, u, v = layer_jets(scales, y, params.k, order)
    U = _profile_jets(flow, y, order)
    return lns_jets(pi, u, v, U, params.k, params.eps, params.mach, params.lam, c)


def fast_error_closed(scales, params, flow, c, y):
    """Closed form of the layer error after the Airy balance.

    Second component: eps k^2 u + i k [U - U'(w)(y - w)] u + (U' - U'(w)) v,
    third: -eps (v'' - k^2 v) + i k (U - c) v, with w the layer's wall.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float))
    k, eps = params.k, params.eps
    _, u, v = layer_jets(scales, y, k, order=2)
    U, U1, _ = (np.asarray(a, dtype=float) for a in flow.profile(y))
    w = scales.wall
    taylor = U - scales.slope * (y - w)
    e2 = eps * k * k * u.val + 1j * k * taylor * u.val + (U1 - scales.slope) * v.val
    e3 = -eps * (v[2] - k * k * v.val) + 1j * k * (U - c) * v.val
    return np.zeros_like(e2), e2, e3


def fast_error_field(params, flow, c, side, grid):
    """E = L(Xi^f) on the grid nodes as a ModeBundle (rho slot holds row one)."""
    sc = bl_scales(side, params, flow, c)
    e = fast_error_jets(sc, params, flow, c, grid.nodes, order=2)
    return ModeBundle(grid.nodes, e[0].val, e[1].val, e[2].val, "error")


def layer_mesh(scales, p=24, panels_per_octave=1):
    """Panels graded geometrically away from the layer's wall."""
    d = abs(scales.delta)
    widths = [0.0]
    h = 0.25 * d
    while widths[-1] + h < 2.0:
        widths.append(widths[-1] + h)
        h *= 2.0 ** (1.0 / panels_per_octave)
    widths.append(2.0)
    dist = np.array(widths)
    br = scales.wall - scales.side * dist
    return PanelMesh(np.sort(br), p)


def fast_error_norms(params, flow, c, side, p=24):
    """L2 norms of the layer error, its derivative and the layer mode itself."""
    sc = bl_scales(side, params, flow, c)
    mesh = layer_mesh(sc, p)
    x = mesh.flat
    e = fast_error_jets(sc, params, flow, c, x, order=3)
    _, u, v = layer_jets(sc, x, params.k, order=0)

    def nrm(*fs):
        return float(np.sqrt(sum(np.real(mesh.integral(np.abs(f) ** 2)) for f in fs)))

    return {
        "total": nrm(e[0].val, e[1].val, e[2].val),
        "d_total": nrm(e[0][1], e[1][1], e[2][1]),
        "mode": nrm(u.val, v.val),
    }


def decay_rate(params, flow, c, side, npts=40, span=(2.0, 12.0)):
    """Fitted tau_1 in |v(y)| ~ exp(-tau_1 n^{1/3} (1 -+ y)).

    The fit uses ``npts`` points with fast-variable modulus in ``span``.
    """
    sc = bl_scales(side, params, flow, c)
    d = abs(sc.delta)
    dist = np.linspace(span[0], span[1], npts) * d
    y = sc.wall - sc.side * dist
    _, _, v = layer_jets(sc, y, params.k, order=0)
    s = params.n ** (1.0 / 3.0) * dist
    slope = np.polyfit(s, np.log(np.abs(v.val)), 1)[0]
    return float(-slope)
