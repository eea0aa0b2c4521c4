"""Inviscid (slow) approximate modes.

phi_+ = U - c and phi_- = (U - c) J - m^2 (U - c) y, with
J(y) = int_0^y (U - c)^{-2}, solve the compressible Rayleigh (Lees-Lin)
equation at k = 0. The k^2 correctors use the explicit quadratures

    phi_+^s = phi_+ - k^2 [phi_+ int_{-1}^y phi_+ phi_- + phi_- int_y^1 phi_+^2]
    phi_-^s = phi_- - k^2 [phi_+ int_{-1}^y phi_-^2 + phi_- int_y^1 phi_+ phi_-]

All y-integrals are computed on an adaptive piecewise-Chebyshev mesh that
resolves the near-real pole of (U - c)^{-2}; derivatives come from exact
jet arithmetic on the closed forms.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NearRealAxis
from .jets import Jet
from .spectral import ModeBundle, PanelMesh

IM_C_MIN = 1e-12
JET_ORDER = 5


class SlowBuilder:
    """Quadrature tables for phi_+-, J and the corrector integrals at one c."""

    def __init__(self, profile, c, m, p=24, tol=1e-13):
        c = complex(c)
        if c.imag < IM_C_MIN:
            raise NearRealAxis(f"Im c = {c.imag:.3g} < {IM_C_MIN:g}")
        self.profile = profile
        self.c = c
        self.m = float(m)

        def g(x):
            return (profile(x)[0] - c) ** -2.0

        self.mesh = PanelMesh.adaptive(g, breaks=(-1.0, 0.0, 1.0), p=p, tol=tol)
        x = self.mesh.flat
        U = np.asarray(profile(x)[0], dtype=float)
        J = self.mesh.cumulative(g(x), anchor=0.0)
        pp = U - c
        pm = pp * J - self.m ** 2 * pp * x
        self._J = J
        mesh = self.mesh
        pppm = pp * pm
        self._I1 = mesh.cumulative(pppm)
        self._I4 = mesh.integral(pppm) - self._I1
        self._I3 = mesh.cumulative(pm * pm)
        pp2 = pp * pp
        self._I2 = mesh.integral(pp2) - mesh.cumulative(pp2)

    def _at(self, table, y):
        return self.mesh.interp(table, y)

    def base_jets(self, y, order=JET_ORDER):
        """Jets of U, phi_+ and phi_- at points y."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        Uj = Jet(self.profile.jet(y, order))
        pp = Uj - self.c
        g = pp.truncate(order - 1).reciprocal() ** 2
        J = Jet.antiderivative(self._at(self._J, y), g)
        yj = Jet.identity(y, order)
        pm = pp * J - (self.m ** 2) * (pp * yj)
        return Uj, pp, pm

    def jets(self, y, k, order=JET_ORDER):
        """Dictionary of jets: U, phi_plus, phi_minus and corrected pieces."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        Uj, pp, pm = self.base_jets(y, order)
        lo = order - 1
        ppl, pml = pp.truncate(lo), pm.truncate(lo)
        I1 = Jet.antiderivative(self._at(self._I1, y), ppl * pml)
        I2 = Jet.antiderivative(self._at(self._I2, y), ppl * ppl, sign=-1.0)
        I3 = Jet.antiderivative(self._at(self._I3, y), pml * pml)
        I4 = Jet.antiderivative(self._at(self._I4, y), ppl * pml, sign=-1.0)
        pk = -(pp * I1 + pm * I2)
        mk = -(pp * I3 + pm * I4)
        k2 = k * k
        return {
            "U": Uj, "phi_plus": pp, "phi_minus": pm,
            "phi_plus_k": pk, "phi_minus_k": mk,
            "phi_plus_s": pp + k2 * pk, "phi_minus_s": pm + k2 * mk,
        }


@dataclass(frozen=True)
class SlowModePair:
    """phi_+- (and, once corrected, phi_+-^s) as jets on a set of nodes."""

    y: np.ndarray
    c: complex
    m: float
    k: float
    builder: SlowBuilder
    U: Jet
    phi_plus: Jet
    phi_minus: Jet
    phi_plus_s: Jet = None
    phi_minus_s: Jet = None
    phi_plus_k: Jet = None
    phi_minus_k: Jet = None


def phi_pair(grid, flow, c, m):
    """Uncorrected Lees-Lin pair on the grid nodes (jets to order 5)."""
    b = SlowBuilder(flow.profile, c, m)
    y = grid.nodes
    Uj, pp, pm = b.base_jets(y)
    return SlowModePair(y, complex(c), float(m), 0.0, b, Uj, pp, pm)


def corrected_phi(pair, grid, c, k):
    """Attach the k^2-corrected pair phi_+-^s to ``pair``."""
    j = pair.builder.jets(grid.nodes, k)
    return SlowModePair(grid.nodes, pair.c, pair.m, float(k), pair.builder, j["U"],
                        j["phi_plus"], j["phi_minus"], j["phi_plus_s"], j["phi_minus_s"],
                        j["phi_plus_k"], j["phi_minus_k"])


def first_integral(phi, U, c, m):
    """A^{-1} [(U - c) phi' - U' phi] (values)."""
    A = 1.0 - m * m * (U.val - c) ** 2
    return ((U.val - c) * phi[1] - U[1] * phi.val) / A


def _bracket(phi, U, c, m):
    lo = min(phi.order, U.order) - 1
    Ul = U.truncate(lo + 1)
    Um = Ul - c
    ainv = (1.0 - (m * m) * (Um * Um)).reciprocal().truncate(lo)
    B = Um.truncate(lo) * phi.deriv().truncate(lo) - Ul.deriv().truncate(lo) * phi.truncate(lo)
    return ainv * B


def rayleigh_residual(phi_s, c, k, flow_jet, m):
    """Ray(phi) = d/dy{A^{-1}[(U - c) phi' - U' phi]} - k^2 (U - c) phi.

    ``phi_s`` is a Jet (needs two derivatives); ``flow_jet`` the Jet of U.
    Returns nodal values.
    """
    br = _bracket(phi_s, flow_jet, c, m)
    return br[1] - k * k * (flow_jet.val - c) * phi_s.val


def inviscid_jets(phi_s, c, k, m, U):
    """Jets (pi, rho, u, v) of the inviscid fields induced by phi^s; pi = rho/m^2."""
    pi = -_bracket(phi_s, U, c, m)
    lo = pi.order
    Um = (U - c).truncate(lo)
    v = (-1j * k) * phi_s.truncate(lo)
    u = phi_s.deriv().truncate(lo) - (m * m) * (Um * pi)
    return {"pi": pi, "rho": (m * m) * pi, "u": u, "v": v}


def inviscid_fields(phi_s, c, k, m, U, y, label="slow"):
    j = inviscid_jets(phi_s, c, k, m, U)
    return ModeBundle(np.asarray(y), j["rho"].val, j["u"].val, j["v"].val, label)


def lns_jets(pi, u, v, U, k, eps, m, lam, c):
    """The linearized operator applied to jet fields; returns three jets."""
    lo = min(pi.order, u.order, v.order) - 2
    ik = 1j * k
    Ut = U.truncate(lo + 2)
    Um = Ut - c
    div = ik * u.truncate(lo + 1) + v.deriv().truncate(lo + 1)
    e1 = ik * (m * m) * (Um.truncate(lo + 1) * pi.truncate(lo + 1)) + div
    lap_u = u.deriv().deriv().truncate(lo) - (k * k) * u.truncate(lo)
    lap_v = v.deriv().deriv().truncate(lo) - (k * k) * v.truncate(lo)
    U2 = Ut.deriv().deriv().truncate(lo)
    U1 = Ut.deriv().truncate(lo)
    Uml = Um.truncate(lo)
    e2 = (-eps) * lap_u - (lam * eps * ik) * div.truncate(lo) + ik * (Uml * u.truncate(lo)) \
        + ik * pi.truncate(lo) + (eps * m * m) * (U2 * pi.truncate(lo)) + U1 * v.truncate(lo)
    e3 = (-eps) * lap_v - (lam * eps) * div.deriv().truncate(lo) + ik * (Uml * v.truncate(lo)) \
        + pi.deriv().truncate(lo)
    return e1.truncate(lo), e2, e3


@dataclass(frozen=True)
class SlowError:
    total: ModeBundle
    part1: ModeBundle
    part2: ModeBundle
    jets: tuple


def _slow_error_jets(jets, sign, params, c):
    k, eps, m, lam = params.k, params.eps, params.mach, params.lam
    phi = jets["phi_plus_s" if sign > 0 else "phi_minus_s"]
    f = inviscid_jets(phi, c, k, m, jets["U"])
    e = lns_jets(f["pi"], f["u"], f["v"], jets["U"], k, eps, m, lam, c)
    phik = jets["phi_plus_k" if sign > 0 else "phi_minus_k"]
    lo = e[2].order
    e3_inv = (k ** 4) * ((jets["U"] - c).truncate(lo) * phik.truncate(lo))
    return e, e3_inv


def slow_error_field(pair, params, sign=+1):
    """E = L(Xi^s) for the slow mode of the given sign, on the pair's nodes.

    ``part2`` is the inviscid remainder (0, 0, k^4 (U - c) phi_k) and
    ``part1 = total - part2`` carries the viscous terms (for sign = +1 this
    is the split used to route the two pieces through different resolvent
    branches; for sign = -1 both parts are reported the same way).
    """
    c = pair.c
    jets = pair.builder.jets(pair.y, params.k)
    e, e3_inv = _slow_error_jets(jets, sign, params, c)
    y = pair.y
    z = np.zeros_like(e[0].val)
    total = ModeBundle(y, e[0].val, e[1].val, e[2].val, "error")
    part2 = ModeBundle(y, z, z, e3_inv.val, "error")
    part1 = ModeBundle(y, e[0].val, e[1].val, e[2].val - e3_inv.val, "error")
    return SlowError(total, part1, part2, e)


def slow_error_norms(builder, params, sign=+1):
    """L2 norms of E, its split pieces and dE/dy on the adaptive mesh."""
    x = builder.mesh.flat
    jets = builder.jets(x, params.k)
    e, e3_inv = _slow_error_jets(jets, sign, params, builder.c)
    mesh = builder.mesh

    def nrm(*fs):
        return float(np.sqrt(sum(np.real(mesh.integral(np.abs(f) ** 2)) for f in fs)))

    return {
        "total": nrm(e[0].val, e[1].val, e[2].val),
        "part1": nrm(e[0].val, e[1].val, e[2].val - e3_inv.val),
        "part2": nrm(e3_inv.val),
        "d_total": nrm(e[0][1], e[1][1], e[2][1]),
        "continuity": nrm(e[0].val),
    }
