"""Problem parameters, base-flow profiles and shared coefficient fields."""

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import NearSonic, ParameterError, SubsonicViolation
from .spectral import ChebGrid, cheb_grid

MACH_MAX = 1.0 / math.sqrt(3.0)
SONIC_GUARD = 0.1
CONCAVITY_TOL = 1e-8


@dataclass(frozen=True)
class Params:
    """Physical parameters of one stability problem.

    ``k`` and ``n`` are derived: k = t0 * eps**(1/7), n = k / eps.
    ``mach = 0`` is accepted as the incompressible limit.
    """

    eps: float
    mach: float
    lam: float = 0.0
    t0: float = 10.0

    def __post_init__(self):
        for name in ("eps", "mach", "lam", "t0"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ParameterError(f"{name} must be a finite real number")
        if not 0.0 < self.eps < 1.0:
            raise ParameterError("eps must satisfy 0 < eps < 1")
        if self.mach < 0.0:
            raise ParameterError("Mach must be >= 0")
        if self.mach >= MACH_MAX:
            raise ParameterError(f"Mach must be < {MACH_MAX:.4f}")
        if self.lam < 0.0:
            raise ParameterError("lambda must be >= 0")
        if self.t0 < 1.0:
            raise ParameterError("t0 must be >= 1")

    @property
    def k(self):
        return self.t0 * self.eps ** (1.0 / 7.0)

    @property
    def n(self):
        return self.k / self.eps

    def default_grid_n(self):
        return 256 if self.eps >= 1e-6 else 384


class Profile:
    """Analytic shear profile on [-1, 1].

    ``func(y)`` returns (U, U', U''). Derivatives of order 3 and above, when
    not supplied through ``higher``, are obtained by spectral differentiation
    of U'' on a fixed 96-point Chebyshev interpolant.
    """

    def __init__(self, func, name="custom", higher=None):
        self.func = func
        self.name = name
        self._higher = higher
        self._d34 = None

    def _spectral_higher(self, y, count):
        if self._d34 is None:
            g = cheb_grid(96)
            u2 = np.asarray(self.func(g.nodes)[2], dtype=float)
            ders = []
            d = u2
            for _ in range(4):
                d = g.d1 @ d
                ders.append(d)
            self._d34 = (g, ders)
        g, ders = self._d34
        return [g.interp(ders[j], y) if j < len(ders) else np.zeros_like(y) for j in range(count)]

    def jet(self, y, order=4):
        """Array of shape (order+1, len(y)) with U and its derivatives.

        Orders above two come from ``higher(y, count)`` when supplied.
        """
        y = np.atleast_1d(np.asarray(y, dtype=float))
        u, u1, u2 = (np.broadcast_to(np.asarray(a, dtype=float), y.shape) for a in self.func(y))
        out = np.zeros((order + 1,) + y.shape)
        base = [u, u1, u2]
        for j in range(min(order, 2) + 1):
            out[j] = base[j]
        if order >= 3:
            if self._higher is not None:
                hi = self._higher(y, order - 2)
            else:
                hi = self._spectral_higher(y, order - 2)
            for j in range(3, order + 1):
                out[j] = hi[j - 3]
        return out

    def __call__(self, y):
        return self.func(y)


def poiseuille_profile():
    def f(y):
        y = np.asarray(y, dtype=float)
        return 1.0 - y * y, -2.0 * y, -2.0 * np.ones_like(y)

    def hi(y, count):
        return [np.zeros_like(np.asarray(y, dtype=float)) for _ in range(count)]
    return Profile(f, name="poiseuille", higher=hi)


@dataclass(frozen=True)
class BaseFlow:
    """Profile samples on a grid plus the derived constants tau and beta."""

    profile: Profile
    grid: ChebGrid
    u_s: np.ndarray
    u_s1: np.ndarray
    u_s2: np.ndarray
    tau: float
    beta: float
    slope_bottom: float
    slope_top: float

    def on_grid(self, grid):
        return base_flow(self.profile, grid)

    def jet(self, y=None, order=4):
        return self.profile.jet(self.grid.nodes if y is None else y, order)


def base_flow(profile, grid):
    y = grid.nodes
    u, u1, u2 = (np.broadcast_to(np.asarray(a, dtype=float), y.shape).copy() for a in profile(y))
    wall = profile(np.array([-1.0, 1.0]))
    s_bot = float(np.asarray(wall[1])[0])
    s_top = float(np.asarray(wall[1])[1])
    tau = float(grid.integrate(u * u).real) / s_bot if s_bot != 0 else math.nan
    beta = s_bot / abs(s_top) if s_top != 0 else math.nan
    for a in (u, u1, u2):
        a.setflags(write=False)
    return BaseFlow(profile, grid, u, u1, u2, tau, beta, s_bot, s_top)


def make_poiseuille(grid):
    """Plane Poiseuille flow U = 1 - y^2 sampled on ``grid``."""
    return base_flow(poiseuille_profile(), grid)


@dataclass
class ValidationReport:
    checks: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(ok for ok, _ in self.checks.values())

    def failures(self):
        return [k for k, (ok, _) in self.checks.items() if not ok]

    def lines(self):
        return [f"{'PASS' if ok else 'FAIL'} {name}: {msg}" for name, (ok, msg) in self.checks.items()]


def validate_profile(flow, tol=CONCAVITY_TOL):
    """Check the structural hypotheses on the base flow."""
    rep = ValidationReport()
    wall = flow.profile(np.array([-1.0, 1.0]))
    uw = np.asarray(wall[0], dtype=float)
    scale = max(1.0, float(np.max(np.abs(flow.u_s))))
    rep.checks["wall_values"] = (bool(np.all(np.abs(uw) <= 1e-10 * scale)),
                                 f"U(-1)={uw[0]:.3e}, U(1)={uw[1]:.3e}")
    rep.checks["slope_bottom"] = (flow.slope_bottom > 0, f"U'(-1)={flow.slope_bottom:.6g}")
    rep.checks["slope_top"] = (flow.slope_top < 0, f"U'(1)={flow.slope_top:.6g}")
    y = flow.grid.nodes
    interior = np.abs(y) < 1.0 - 1e-14
    worst = float(np.max(flow.u_s2[interior])) if np.any(interior) else -math.inf
    rep.checks["strict_concavity"] = (worst <= -tol, f"max U'' on interior nodes = {worst:.3e}")
    rep.checks["beta_positive"] = (bool(flow.beta > 0), f"beta={flow.beta:.6g}")
    rep.checks["tau_positive"] = (bool(flow.tau > 0), f"tau={flow.tau:.6g}")
    return rep


def sound_factor(flow, c, m, guard=SONIC_GUARD):
    """A(y) = 1 - m^2 (U - c)^2 on the grid nodes."""
    a = 1.0 - m * m * (flow.u_s - c) ** 2
    a = a.astype(complex)
    amin = float(np.min(np.abs(a)))
    if amin <= guard:
        raise NearSonic(f"min |A| = {amin:.3g} <= {guard}")
    return a


@dataclass(frozen=True)
class CoeffFields:
    a_vals: np.ndarray
    w_vals: np.ndarray
    script_w: np.ndarray
    w0: np.ndarray
    w1: np.ndarray
    min_script_w: float
    min_re_w0_uw1: float


def weight_functions(flow, c, m):
    """w = -[d/dy (A^{-1} U')]^{-1} and its expansion w = w0 + c w1 + O(c^2)."""
    u, u1, u2 = flow.u_s, flow.u_s1, flow.u_s2
    a = 1.0 - m * m * (u - c) ** 2
    s0 = 1.0 - m * m * u * u
    script_w = -s0 * u2 - 2.0 * m * m * u * u1 * u1
    min_w = float(np.min(script_w))
    if min_w <= 0.0:
        raise SubsonicViolation(f"min script W = {min_w:.4g} <= 0")
    w0 = s0 ** 2 / script_w
    w1 = 4.0 * m * m * u * s0 / script_w - 2.0 * m * m * s0 ** 2 * (u1 * u1 - u * u2) / script_w ** 2
    min_re = float(np.min(np.real(w0 - u * w1)))
    if min_re <= 0.0:
        raise SubsonicViolation(f"min Re(w0 - U w1) = {min_re:.4g} <= 0")
    amin = float(np.min(np.abs(a)))
    if amin <= SONIC_GUARD:
        raise NearSonic(f"min |A| = {amin:.3g} <= {SONIC_GUARD}")
    dterm = u2 / a + 2.0 * m * m * (u - c) * u1 * u1 / a ** 2
    w = -1.0 / dterm
    return CoeffFields(a.astype(complex), w, script_w, w0, w1, min_w, min_re)
