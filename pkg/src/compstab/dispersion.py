"""Exact modes, boundary matching and the dispersion function I(c) = u(1; c).

Each approximate mode (two slow, two boundary layers) is corrected by a
remainder solve so that it satisfies the linearized equations on the grid;
three of the four wall conditions then fix the combination coefficients
and the remaining one, u(1), is the dispersion function. Its zero inside
the disk |c - c0| <= T0^-2 eps^(2/7) is certified by a winding number and
refined by Newton iteration.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .airy import airy_ratio
from .errors import (ModeConstructionFailure, NewtonDivergence, NoRootInDisk,
                     NonContraction, SingularMatching)
from .fast_modes import BOTTOM, TOP, bl_scales, fast_error_jets, layer_jets
from .resolvent import ResolventOperators, resolvent_solve
from .slow_modes import SlowBuilder, _slow_error_jets, inviscid_jets
from .spectral import ModeBundle

DET_GUARD = 1e-300
N_CONTOUR = 64
MAX_NEWTON = 50
ARG_STEP_MAX = np.pi / 4
STEP_FLOOR = 1e-8
MAX_BISECT = 8


@dataclass(frozen=True)
class ExactModes:
    """The four corrected modes, keyed slow+, slow-, fast-, fast+."""

    slow_plus: ModeBundle
    slow_minus: ModeBundle
    fast_minus: ModeBundle
    fast_plus: ModeBundle
    approx: dict
    traces: dict
    c: complex

    def as_list(self):
        return [self.slow_plus, self.slow_minus, self.fast_minus, self.fast_plus]


@dataclass(frozen=True)
class MatchState:
    m_matrix: np.ndarray
    alpha: np.ndarray
    det_m: complex
    rhs: np.ndarray
    residuals: np.ndarray
    alpha_asymptotic: np.ndarray = None


@dataclass(frozen=True)
class PredictedRoot:
    """Zero c0 of the linear model I_lin(c) = const + slope * X(c).

    X(c) = (1 + beta) beta^(-1/3) c - tau beta^(2/3) k^2.
    """

    c0: complex
    tau: float
    beta: float
    const: complex
    slope: complex
    radius: float
    consistent: bool = False

    def i_lin(self, c, k):
        X = (1 + self.beta) * self.beta ** (-1 / 3) * c - self.tau * self.beta ** (2 / 3) * k * k
        return self.const + self.slope * X


@dataclass
class DispersionResult:
    c_star: complex
    c0: complex
    winding: int
    residual: float
    in_disk: bool
    growth_rate: float
    radius: float
    k: float
    newton_iterations: int = 0
    contour_points: int = 0
    history: list = field(default_factory=list)


def _wall_slopes(flow):
    s = np.asarray(flow.profile(np.array([-1.0, 1.0]))[1], dtype=float)
    return float(s[0]), float(s[1])


def predicted_root(params, flow, consistent=False):
    """c0 and the coefficients of I_lin.

    With ``consistent=False`` the closed formula for c0 is used. With
    ``consistent=True`` the layer origin at the top wall is taken as
    -c/(|U'(1)| delta~) throughout, which changes the modulus of z~0 by the
    factor 1/|U'(1)| and the constant term to U'(1) - U'(-1) beta.
    """
    t0, eps, k = params.t0, params.eps, params.k
    s_bot, s_top = _wall_slopes(flow)
    tau, beta = float(flow.tau), float(flow.beta)
    a_top = abs(s_top)
    e27 = eps ** (2.0 / 7.0)
    radius = t0 ** -2 * e27
    if not consistent:
        c0 = (tau * beta * t0 ** 2 / (1 + beta)) * e27 \
            + t0 ** -1.5 * np.exp(0.25j * np.pi) * a_top ** 0.5 * (1 + beta ** 1.5) \
            / (tau ** 0.5 * beta ** 0.5 * (1 + beta) ** 0.5) * e27
        const = s_top - s_bot * beta ** 0.5
        slope = np.exp(-0.25j * np.pi) * tau ** 0.5 * a_top ** 0.5 * beta ** (5 / 6) \
            / (1 + beta) ** 0.5 * t0 ** 1.5 * eps ** (-2.0 / 7.0)
    else:
        n = params.n
        c_r = tau * beta / (1 + beta) * t0 ** 2 * e27
        zt = c_r * (a_top * n) ** (1 / 3) / a_top
        slope = np.exp(-0.25j * np.pi) * (s_bot * n) ** (1 / 3) * zt ** 0.5
        const = s_top - s_bot * beta
        X = -const / slope
        c0 = (X + tau * beta ** (2 / 3) * k * k) / ((1 + beta) * beta ** (-1 / 3))
    return PredictedRoot(complex(c0), tau, beta, complex(const), complex(slope), radius,
                         consistent)


def i_lin(c, params, flow, consistent=False):
    return predicted_root(params, flow, consistent).i_lin(c, params.k)


def dispersion_leading(c, params, flow):
    """Leading-order I(c) from the Airy ratios at z0 and z~0 (no remainders)."""
    k = params.k
    s_bot, s_top = _wall_slopes(flow)
    tau, beta = float(flow.tau), float(flow.beta)
    sb = bl_scales(BOTTOM, params, flow, c)
    st = bl_scales(TOP, params, flow, c)
    r0 = 1.0 / airy_ratio(np.array([sb.z0]))[0]
    rt = airy_ratio(np.array([st.z0]))[0]
    X = (1 + beta) * beta ** (-1 / 3) * c - tau * beta ** (2 / 3) * k * k
    return s_top - s_bot * beta ** (2 / 3) * r0 * rt - X / sb.delta * rt


def _bundle(y, pi, u, v, m, label):
    return ModeBundle(y, m * m * pi, u, v, label, pi)


def _approximate_modes(c, params, flow, grid):
    """Approximate modes and their analytic error fields on the grid nodes."""
    y = grid.nodes
    m, k = params.mach, params.k
    builder = SlowBuilder(flow.profile, c, m)
    jets = builder.jets(y, k)
    out = {}
    for sign, key in ((1, "slow+"), (-1, "slow-")):
        phi = jets["phi_plus_s" if sign > 0 else "phi_minus_s"]
        f = inviscid_jets(phi, c, k, m, jets["U"])
        e, e3_inv = _slow_error_jets(jets, sign, params, c)
        out[key] = (_bundle(y, f["pi"].val, f["u"].val, f["v"].val, m, key),
                    (e[0].val, e[1].val, e[2].val), e3_inv.val)
    for side, key in ((BOTTOM, "fast-"), (TOP, "fast+")):
        sc = bl_scales(side, params, flow, c)
        pi, u, v = layer_jets(sc, y, k, order=2)
        e = fast_error_jets(sc, params, flow, c, y, order=2)
        out[key] = (_bundle(y, pi.val, u.val, v.val, m, key), (e[0].val, e[1].val, e[2].val), None)
    return out


def exact_modes(c, params, flow, grid, source="discrete", tol=1e-11, max_iter=60, ops=None):
    """Approximate modes plus remainders solving L(Xi_r) = -E with v_r(+-1) = 0.

    ``source="discrete"`` takes E as the collocation operator applied to the
    sampled approximate mode, so the corrected mode solves the discrete
    equations; ``source="analytic"`` uses the closed-form errors. The slow+
    error is split into the viscous part (L2 branch) and the inviscid
    remainder (0, 0, k^4 (U - c) phi_k) (smooth branch); slow- uses the smooth
    branch and the layers the L2 branch.
    """
    if source not in ("discrete", "analytic"):
        raise ValueError("source must be 'discrete' or 'analytic'")
    c = complex(c)
    if flow.grid.n_modes != grid.n_modes:
        flow = flow.on_grid(grid)
    if ops is None:
        ops = ResolventOperators(params, flow, grid, c, warn=False)
    approx = _approximate_modes(c, params, flow, grid)
    z = np.zeros(grid.n_modes, dtype=complex)
    corrected = {}
    traces = {}

    def solve(E, smooth, key):
        try:
            r, tr = resolvent_solve(-E[1], -E[2], c, params, flow, grid, tol=tol,
                                    max_iter=max_iter, smooth=smooth, ops=ops, f_c=-E[0])
        except NonContraction as exc:
            raise ModeConstructionFailure(f"{key}: {exc}") from exc
        traces.setdefault(key, []).append(tr)
        return r

    for key, (mode, e_an, e_split) in approx.items():
        if source == "discrete":
            E = ops.apply_L(mode.pi, mode.u, mode.v)
        else:
            E = e_an
        if key == "slow+":
            e2 = (z, z, e_split)
            e1 = tuple(a - b for a, b in zip(E, e2))
            rem = solve(e1, False, key) + solve(e2, True, key)
        elif key == "slow-":
            rem = solve(E, True, key)
        else:
            rem = solve(E, False, key)
        corrected[key] = ModeBundle(mode.y, mode.rho + rem.rho, mode.u + rem.u, mode.v + rem.v,
                                    key, mode.pi + rem.pi)
    return ExactModes(corrected["slow+"], corrected["slow-"], corrected["fast-"],
                      corrected["fast+"], {k_: v[0] for k_, v in approx.items()}, traces, c)


def _bvals(mode):
    b = mode.boundary
    return b["bottom"][2], b["bottom"][1], b["top"][2], b["top"][1]


def matching_coeffs(modes, c=None, params=None, flow=None):
    """Solve M alpha = -(v+(-1), u+(-1), v+(1)) for the three coefficients."""
    vp_b, up_b, vp_t, _ = _bvals(modes.slow_plus)
    cols = [_bvals(mo) for mo in (modes.slow_minus, modes.fast_minus, modes.fast_plus)]
    M = np.array([[col[0] for col in cols], [col[1] for col in cols], [col[2] for col in cols]],
                 dtype=complex)
    rhs = -np.array([vp_b, up_b, vp_t], dtype=complex)
    det = complex(np.linalg.det(M))
    if not np.isfinite(det) or abs(det) < DET_GUARD:
        raise SingularMatching(f"|det M| = {abs(det):.3g}")
    alpha = np.linalg.solve(M, rhs)
    res = M @ alpha - rhs
    alpha_asym = None
    if params is not None and flow is not None:
        alpha_asym = asymptotic_alpha(c if c is not None else modes.c, params, flow)
    return MatchState(M, alpha, det, rhs, res, alpha_asym)


def asymptotic_alpha(c, params, flow):
    """Leading-order coefficients alpha_1, alpha_2, alpha_3."""
    k = params.k
    s_bot, _ = _wall_slopes(flow)
    tau, beta = float(flow.tau), float(flow.beta)
    sb = bl_scales(BOTTOM, params, flow, c)
    r21 = 1.0 / airy_ratio(np.array([sb.z0]))[0]
    d = sb.delta
    a1 = -d * s_bot ** 2 * r21 - s_bot * (c - tau * k * k)
    a2 = s_bot * r21
    a3 = -((1 + beta) * beta ** (-1 / 3) * c - tau * beta ** (2 / 3) * k * k) / d \
        - s_bot * beta ** (2 / 3) * r21
    return np.array([a1, a2, a3], dtype=complex)


def combined_mode(modes, match):
    a1, a2, a3 = match.alpha
    out = modes.slow_plus + modes.slow_minus.scaled(a1) + modes.fast_minus.scaled(a2) \
        + modes.fast_plus.scaled(a3)
    return ModeBundle(out.y, out.rho, out.u, out.v, "exact", out.pi)


def dispersion_value(c, params, flow, grid, source="discrete", return_state=False, **kw):
    """I(c) = u(1) of the combination satisfying v(-1) = u(-1) = v(1) = 0."""
    modes = exact_modes(c, params, flow, grid, source=source, **kw)
    match = matching_coeffs(modes, c)
    mode = combined_mode(modes, match)
    val = complex(mode.boundary["top"][1])
    if return_state:
        return val, modes, match, mode
    return val


def winding_number(func, center, radius, n=N_CONTOUR, max_bisect=MAX_BISECT):
    """Winding number of func around 0 on the circle |c - center| = radius.

    Principal argument increments between consecutive samples are summed;
    any arc whose increment exceeds pi/4 is bisected (up to ``max_bisect``
    levels). Returns (winding, number of evaluations, samples).
    """
    th = np.linspace(0.0, 2 * np.pi, n + 1)
    cache = {}

    def f(t):
        key = float(t % (2 * np.pi))
        if key not in cache:
            cache[key] = func(center + radius * np.exp(1j * t))
        return cache[key]

    total = 0.0
    stack = [(th[i], th[i + 1], 0) for i in range(n)][::-1]
    while stack:
        a, b, lev = stack.pop()
        fa, fb = f(a), f(b)
        if fa == 0 or fb == 0:
            raise NoRootInDisk("dispersion function vanishes on the contour")
        d = np.angle(fb / fa)
        if abs(d) > ARG_STEP_MAX and lev < max_bisect:
            mid = 0.5 * (a + b)
            stack.append((mid, b, lev + 1))
            stack.append((a, mid, lev + 1))
            continue
        total += d
    w = int(round(total / (2 * np.pi)))
    return w, len(cache), cache


def newton(func, c_start, h, tol, max_iter=MAX_NEWTON, center=None, radius=None):
    """Newton iteration with a central-difference derivative of step h.

    Stops when |func(c)| < tol, when the step falls below 1e-12 |c|, or when
    a step below 1e-8 |c| no longer decreases |func| (rounding floor). Raises
    NewtonDivergence when leaving the disk (if given) or after max_iter steps.
    """
    c = complex(c_start)
    fc = func(c)
    hist = [(c, fc)]
    for it in range(max_iter + 1):
        if abs(fc) < tol:
            return c, fc, it, hist
        if it == max_iter:
            break
        d = (func(c + h) - func(c - h)) / (2 * h)
        if d == 0:
            raise NewtonDivergence("zero derivative estimate")
        step = fc / d
        c = c - step
        if center is not None and abs(c - center) > radius:
            raise NewtonDivergence(f"iterate {c:.6g} left the disk |c - {center:.6g}| <= {radius:.3g}")
        f_prev, fc = fc, func(c)
        hist.append((c, fc))
        small = abs(step) < STEP_FLOOR * max(abs(c), 1e-300)
        if abs(step) < 1e-12 * max(abs(c), 1e-300) or (small and abs(fc) >= abs(f_prev)):
            # converged to the rounding floor of func
            return c, fc, it + 1, hist
    raise NewtonDivergence(f"no convergence in {max_iter} iterations (|I| = {abs(fc):.3g})")


def find_root(params, flow, grid, tol=1e-8, n_contour=N_CONTOUR, consistent=False,
              source="discrete", check_winding=True, **kw):
    """Winding-number certificate on the disk D, then Newton from c0."""
    pred = predicted_root(params, flow, consistent)
    c0, r = pred.c0, pred.radius
    if flow.grid.n_modes != grid.n_modes:
        flow = flow.on_grid(grid)

    def I(c):
        return dispersion_value(c, params, flow, grid, source=source, **kw)

    winding, npts = 1, 0
    if check_winding:
        winding, npts, _ = winding_number(I, c0, r, n=n_contour)
    res = DispersionResult(c0, c0, winding, float("nan"), False, float("nan"), r, params.k,
                           contour_points=npts)
    if winding != 1:
        exc = NoRootInDisk(f"winding number {winding} on |c - c0| = {r:.3g}")
        exc.result = res
        raise exc
    h = 1e-3 * abs(c0) * params.t0 ** -2
    c, fc, its, hist = newton(I, c0, h, tol, center=c0, radius=r)
    res.c_star = complex(c)
    res.residual = float(abs(fc))
    res.in_disk = bool(abs(c - c0) <= r)
    res.growth_rate = float(params.k * c.imag)
    res.newton_iterations = its
    res.history = hist
    return res


def newton_root(params, flow, grid, c_start, tol=1e-8, h=None, source="discrete", **kw):
    """Newton refinement of I(c) = 0 from an arbitrary start, without a disk."""
    if flow.grid.n_modes != grid.n_modes:
        flow = flow.on_grid(grid)
    if h is None:
        h = 1e-3 * abs(c_start) * params.t0 ** -2

    def I(c):
        return dispersion_value(c, params, flow, grid, source=source, **kw)

    c, fc, its, hist = newton(I, c_start, h, tol)
    return complex(c), float(abs(fc)), its


def loglog_slope(x, y, level=0.95):
    """Least-squares slope of log y against log x and its confidence half-width."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    fit = stats.linregress(lx, ly)
    dof = len(lx) - 2
    half = float(stats.t.ppf(0.5 + level / 2, dof) * fit.stderr) if dof > 0 else float("nan")
    return float(fit.slope), half
