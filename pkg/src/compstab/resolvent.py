"""Solvers for the remainder system L(rho, u, v) = (0, f_u, f_v), v(+-1) = 0.

The remainder is built by alternating two simpler solves:

* the quasi-compressible operator Q, reduced through the effective stream
  function Phi (v = -i k Phi, Phi' = u + (U - c) rho) to the fourth-order
  equation OS(Phi) = Omega(s1, s2) with Phi = Lambda(Phi) = 0 at the walls;
* the Stokes operator S, which is L without the stretching term v U', with
  dU/dy = V = 0 at the walls.

Each Q solve leaves the error E_Q = L - Q, which the next Stokes solve
removes, and each Stokes solve leaves (0, V U', 0) for the next Q solve.
The monolithic solver computes the fixed point of this alternation in one
block solve and serves as an oracle.

All fields use the pressure-like variable pi = rho/m^2; the density is
rho = m^2 pi, so m = 0 is the incompressible limit. Collocation rows next to
the walls are replaced by boundary conditions, so residuals are measured on
the nodes at least two positions away from either wall.
"""

from dataclasses import dataclass, field

import numpy as np

from .core import sound_factor
from .errors import NonContraction, ParameterError
from .spectral import BVPSystem, ModeBundle, lns_blocks

NONCONTRACT_STEPS = 3


@dataclass(frozen=True)
class QCState:
    """Quasi-compressible solution; ``varrho = m^2 pi``."""

    pi: np.ndarray
    varrho: np.ndarray
    frak_u: np.ndarray
    frak_v: np.ndarray
    phi: np.ndarray
    lambda_phi: np.ndarray

    @property
    def fields(self):
        return self.pi, self.frak_u, self.frak_v


@dataclass(frozen=True)
class StokesState:
    """Stokes solution; ``cal_p = m^2 pi``."""

    pi: np.ndarray
    cal_p: np.ndarray
    cal_u: np.ndarray
    cal_v: np.ndarray

    @property
    def fields(self):
        return self.pi, self.cal_u, self.cal_v


@dataclass
class IterationTrace:
    e_norms: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    final_residual: float = 0.0
    iterations: int = 0
    branch: str = "l2"


def _near(grid):
    """Indices of the wall nodes and their inner neighbours."""
    b, t = grid.bottom, grid.top
    nb = b + 1 if b == 0 else b - 1
    nt = t + 1 if t == 0 else t - 1
    return b, t, nb, nt


def interior_mask(grid, skip=2):
    """True on nodes at least ``skip`` positions from either wall."""
    mask = np.zeros(grid.n_modes, dtype=bool)
    mask[skip: grid.n_modes - skip] = True
    return mask


class ResolventOperators:
    """Collocation operators at one (params, c), with factorizations cached."""

    def __init__(self, params, flow, grid, c, warn=True):
        if flow.grid is not grid and flow.grid.n_modes != grid.n_modes:
            flow = flow.on_grid(grid)
        self.params = params
        self.flow = flow
        self.grid = grid
        self.c = complex(c)
        self.k = params.k
        self.eps = params.eps
        self.m = params.mach
        self.lam = params.lam
        self.warn = warn
        self.A = sound_factor(flow, self.c, self.m)
        self.Ainv = 1.0 / self.A
        self.Um = flow.u_s - self.c
        n = grid.n_modes
        self.I = np.eye(n)
        self._os = None
        self._stokes = None

    # ---- operator matrices -------------------------------------------------
    def omega(self, f_u, f_v):
        """Omega(f_u, f_v) = -f_v + (1/ik) d/dy (A^{-1} f_u)."""
        return -np.asarray(f_v) + (self.grid.d1 @ (self.Ainv * f_u)) / (1j * self.k)

    def lambda_matrix(self):
        D = self.grid.d1
        return D @ (self.Ainv[:, None] * D) - self.k ** 2 * self.I

    def _bracket_matrix(self):
        """Matrix of (i/n)(D3 - k^2 D) Phi + (U - c) D Phi - U' Phi."""
        g = self.grid
        n_ = self.params.n
        return (1j / n_) * (g.d3 - self.k ** 2 * g.d1) + self.Um[:, None] * g.d1 \
            - np.diag(self.flow.u_s1)

    def os_matrix(self):
        g = self.grid
        k = self.k
        lap = g.d2 - k * k * self.I
        return (-1j * self.eps * k) * lap - k * k * np.diag(self.Um) \
            + g.d1 @ (self.Ainv[:, None] * self._bracket_matrix())

    @property
    def os_system(self):
        if self._os is None:
            b, t, nb, nt = _near(self.grid)
            L = self.lambda_matrix()
            rows = [(b, self.I[b]), (t, self.I[t]), (nb, L[b]), (nt, L[t])]
            self._os = BVPSystem(self.os_matrix(), rows, warn=self.warn)
        return self._os

    def stokes_blocks(self):
        B = lns_blocks(self.grid, self.flow, self.k, self.eps, self.m, self.lam, self.c)
        B[1][2] = B[1][2] - np.diag(self.flow.u_s1)
        return B

    @property
    def stokes_system(self):
        if self._stokes is None:
            n = self.grid.n_modes
            b, t = self.grid.bottom, self.grid.top
            M = np.block(self.stokes_blocks())
            D = self.grid.d1
            rows = []
            for w in (b, t):
                r = np.zeros(3 * n, dtype=complex)
                r[n:2 * n] = D[w]
                rows.append((n + w, r))
                r = np.zeros(3 * n, dtype=complex)
                r[2 * n + w] = 1.0
                rows.append((2 * n + w, r))
            self._stokes = BVPSystem(M, rows, warn=self.warn)
        return self._stokes

    # ---- operator application ---------------------------------------------
    def apply_L(self, pi, u, v):
        B = lns_blocks(self.grid, self.flow, self.k, self.eps, self.m, self.lam, self.c)
        x = (pi, u, v)
        return tuple(sum(B[r][j] @ x[j] for j in range(3)) for r in range(3))

    def apply_S(self, pi, u, v):
        B = self.stokes_blocks()
        x = (pi, u, v)
        return tuple(sum(B[r][j] @ x[j] for j in range(3)) for r in range(3))

    def apply_Q(self, pi, u, v):
        g, k, eps, m2 = self.grid, self.k, self.eps, self.m ** 2
        ik = 1j * k
        lap = g.d2 - k * k * self.I
        r0 = ik * m2 * self.Um * pi + ik * u + g.d1 @ v
        r1 = -eps * (lap @ (u + m2 * self.Um * pi)) + ik * self.Um * u + self.flow.u_s1 * v + ik * pi
        r2 = -eps * (lap @ v) + ik * self.Um * v + g.d1 @ pi
        return r0, r1, r2

    def e_q(self, pi, u, v):
        """L - Q applied to a field triple, from the closed formula."""
        g, k, eps, lam, m2 = self.grid, self.k, self.eps, self.lam, self.m ** 2
        ik = 1j * k
        lap = g.d2 - k * k * self.I
        varrho = m2 * pi
        div = ik * u + g.d1 @ v
        e1 = eps * (lap @ (self.Um * varrho)) - lam * eps * ik * div + eps * self.flow.u_s2 * varrho
        e2 = -eps * lam * (g.d1 @ div)
        return np.zeros_like(e1), e1, e2

    def e_q_state(self, st):
        """E_Q for a quasi-compressible state, using div = -ik (U - c) varrho."""
        g, k, eps, lam = self.grid, self.k, self.eps, self.lam
        lap = g.d2 - k * k * self.I
        w = self.Um * st.varrho
        e1 = eps * (lap @ w) - lam * eps * k * k * w + eps * self.flow.u_s2 * st.varrho
        e2 = lam * eps * 1j * k * (g.d1 @ w)
        return np.zeros_like(e1), e1, e2

    def e_s(self, st):
        z = np.zeros_like(st.cal_v)
        return z, self.flow.u_s1 * st.cal_v, z

    # ---- solves ------------------------------------------------------------
    def os_solve(self, h):
        return self.os_system.solve(h)

    def quasi_solve(self, s1, s2):
        s1 = np.asarray(s1, dtype=complex)
        s2 = np.asarray(s2, dtype=complex)
        phi = self.os_solve(self.omega(s1, s2))
        pi = self.Ainv * (-(self._bracket_matrix() @ phi) + s1 / (1j * self.k))
        m2 = self.m ** 2
        u = self.grid.d1 @ phi - m2 * self.Um * pi
        v = -1j * self.k * phi
        lam_phi = self.lambda_matrix() @ phi
        return QCState(pi, m2 * pi, u, v, phi, lam_phi)

    def stokes_solve(self, q0, q1, q2):
        n = self.grid.n_modes
        x = self.stokes_system.solve(np.concatenate([q0, q1, q2]).astype(complex))
        pi, u, v = x[:n], x[n:2 * n], x[2 * n:]
        return StokesState(pi, self.m ** 2 * pi, u, v)

    # ---- norms -------------------------------------------------------------
    def weighted_norm(self, pi, u, v):
        """||(m^{-1} rho, u, v)||_L2 with rho = m^2 pi."""
        g = self.grid
        return float(np.sqrt(g.norm(self.m * pi) ** 2 + g.norm(u) ** 2 + g.norm(v) ** 2))

    def residual(self, pi, u, v, f_u, f_v, f_c=0.0):
        """Relative interior L2 residual of L(pi, u, v) = (f_c, f_u, f_v), with v(+-1)."""
        r = self.apply_L(pi, u, v)
        mask = interior_mask(self.grid)
        g = self.grid
        w = g.cc_weights * mask
        num = sum(float(np.real(np.sum(w * np.abs(ri - fi) ** 2)))
                  for ri, fi in zip(r, (f_c, f_u, f_v)))
        den = float(np.real(np.sum(w * (np.abs(f_c) ** 2 + np.abs(f_u) ** 2 + np.abs(f_v) ** 2))))
        bnd = abs(v[g.bottom]) ** 2 + abs(v[g.top]) ** 2
        scale = max(np.sqrt(den), 1e-300)
        return float(np.sqrt(num + bnd)) / scale


def _as_ops(c, params, flow, grid, ops):
    if ops is not None:
        return ops
    return ResolventOperators(params, flow, grid, c)


def omega_op(f_u, f_v, c, k, flow, m):
    """Omega(f_u, f_v) = -f_v + (1/ik) d/dy (A^{-1} f_u) on the flow's grid."""
    A = 1.0 - m * m * (flow.u_s - c) ** 2
    return -np.asarray(f_v) + (flow.grid.d1 @ (np.asarray(f_u) / A)) / (1j * k)


def os_solve(h, c, params, flow, grid, ops=None):
    """Solve OS(Phi) = h with Phi = Lambda(Phi) = 0 at y = +-1.

    Returns (Phi, Lambda(Phi)).
    """
    ops = _as_ops(c, params, flow, grid, ops)
    phi = ops.os_solve(np.asarray(h, dtype=complex))
    return phi, ops.lambda_matrix() @ phi


def quasi_solve(s1, s2, c, params, flow, grid, ops=None):
    return _as_ops(c, params, flow, grid, ops).quasi_solve(s1, s2)


def stokes_solve(q0, q1, q2, c, params, flow, grid, ops=None):
    return _as_ops(c, params, flow, grid, ops).stokes_solve(q0, q1, q2)


def _bundle(ops, pi, u, v, label="remainder"):
    m2 = ops.m ** 2
    return ModeBundle(ops.grid.nodes, m2 * pi, u, v, label, pi)


def resolvent_solve(f_u, f_v, c, params, flow, grid, tol=1e-10, max_iter=60,
                    smooth=False, ops=None, f_c=None):
    """Alternating quasi-compressible/Stokes solve of L(Xi) = (f_c, f_u, f_v).

    ``f_c`` (continuity source) defaults to zero. With ``smooth=False`` the
    zeroth step is a Stokes solve; with ``smooth=True`` it is a
    quasi-compressible solve whose E_Q error is then treated by the L2
    iteration. Stops when E_N < tol * E_0.
    Returns (ModeBundle, IterationTrace).
    """
    if tol <= 0 or max_iter < 1:
        raise ParameterError("tol must be > 0 and max_iter >= 1")
    ops = _as_ops(c, params, flow, grid, ops)
    n = ops.grid.n_modes
    f_u = np.asarray(f_u, dtype=complex)
    f_v = np.asarray(f_v, dtype=complex)
    z = np.zeros(n, dtype=complex)
    f_c = z if f_c is None else np.asarray(f_c, dtype=complex)
    trace = IterationTrace(branch="h1" if smooth else "l2")
    if not (np.any(f_u) or np.any(f_v) or np.any(f_c)):
        return _bundle(ops, z, z.copy(), z.copy()), trace

    total = [z.copy(), z.copy(), z.copy()]
    if smooth:
        q = ops.quasi_solve(f_u, f_v)
        for j, a in enumerate(q.fields):
            total[j] += a
        eq = ops.e_q_state(q)
        src = (f_c - eq[0], -eq[1], -eq[2])
    else:
        src = (f_c, f_u, f_v)
    st = ops.stokes_solve(*src)
    for j, a in enumerate(st.fields):
        total[j] += a
    e0 = ops.weighted_norm(*st.fields)
    trace.e_norms.append(e0)
    bad = 0
    e_prev = e0
    for it in range(1, max_iter + 1):
        if e_prev <= tol * e0 or e_prev == 0.0:
            break
        q = ops.quasi_solve(-ops.flow.u_s1 * st.cal_v, z)
        eq = ops.e_q_state(q)
        st = ops.stokes_solve(-eq[0], -eq[1], -eq[2])
        for j in range(3):
            total[j] += q.fields[j] + st.fields[j]
        e = ops.weighted_norm(*st.fields)
        trace.e_norms.append(e)
        trace.ratios.append(e / e_prev if e_prev > 0 else 0.0)
        trace.iterations = it
        bad = bad + 1 if e >= e_prev else 0
        if bad >= NONCONTRACT_STEPS:
            raise NonContraction(
                f"E_N grew for {bad} consecutive steps (last ratio {trace.ratios[-1]:.3g})")
        e_prev = e
    trace.final_residual = ops.residual(*total, f_u, f_v, f_c)
    return _bundle(ops, *total), trace


def monolithic_solve(f_u, f_v, c, params, flow, grid, ops=None):
    """Fixed point of the L2 alternation as one block system.

    Unknowns (Phi, pi_S, U_S, V_S): the Stokes part solves
    S(Xi_S) = (0, f_u, f_v) - E_Q(Xi_Q) and the quasi-compressible part solves
    Q(Xi_Q) = -(0, V_S U', 0), so Xi_Q + Xi_S solves L = (0, f_u, f_v).
    """
    ops = _as_ops(c, params, flow, grid, ops)
    g = ops.grid
    n = g.n_modes
    k, eps, lam, m2 = ops.k, ops.eps, ops.lam, ops.m ** 2
    f_u = np.asarray(f_u, dtype=complex)
    f_v = np.asarray(f_v, dtype=complex)
    Ainv = np.diag(ops.Ainv)
    dU = np.diag(ops.flow.u_s1)
    Br = ops._bracket_matrix()
    # Xi_Q as linear maps of (Phi, V_S) with s1 = -U' V_S, s2 = 0
    P_phi = -Ainv @ Br
    P_v = Ainv @ (-dU) / (1j * k)
    Um = np.diag(ops.Um)
    lap = g.d2 - k * k * ops.I
    # E_Q second and third rows in terms of pi_Q
    E1 = eps * (lap @ (m2 * Um)) - lam * eps * k * k * m2 * Um + eps * m2 * np.diag(ops.flow.u_s2)
    E2 = lam * eps * 1j * k * (g.d1 @ (m2 * Um))
    S = ops.stokes_blocks()
    Z = np.zeros((n, n), dtype=complex)
    # OS row block: OS Phi - Omega(-U' V_S, 0) = 0
    om_v = g.d1 @ Ainv @ (-dU) / (1j * k)
    rows_os = [ops.os_matrix(), Z, Z, -om_v]
    rows_s0 = [Z, S[0][0], S[0][1], S[0][2]]
    rows_s1 = [E1 @ P_phi, S[1][0], S[1][1], S[1][2] + E1 @ P_v]
    rows_s2 = [E2 @ P_phi, S[2][0], S[2][1], S[2][2] + E2 @ P_v]
    M = np.block([rows_os, rows_s0, rows_s1, rows_s2])
    rhs = np.concatenate([np.zeros(n), np.zeros(n), f_u, f_v]).astype(complex)
    b, t, nb, nt = _near(g)
    L = ops.lambda_matrix()
    bc = []

    def row(block, vec):
        r = np.zeros(4 * n, dtype=complex)
        r[block * n:(block + 1) * n] = vec
        return r

    bc += [(b, row(0, ops.I[b])), (t, row(0, ops.I[t])), (nb, row(0, L[b])), (nt, row(0, L[t]))]
    for w in (b, t):
        bc.append((2 * n + w, row(2, g.d1[w])))
        bc.append((3 * n + w, row(3, ops.I[w])))
    x = BVPSystem(M, bc, warn=ops.warn).solve(rhs)
    phi, pis, us, vs = x[:n], x[n:2 * n], x[2 * n:3 * n], x[3 * n:]
    piq = P_phi @ phi + P_v @ vs
    uq = g.d1 @ phi - m2 * ops.Um * piq
    vq = -1j * k * phi
    return _bundle(ops, piq + pis, uq + us, vq + vs)
