"""Chebyshev collocation, quadrature, dense solves and the direct eigensolver."""

from collections import deque
from dataclasses import dataclass
from functools import cached_property
import warnings

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .errors import (IllConditioned, NoEigenvalueInWindow, QuadratureFailure, ResolutionFailure,
                     SingularSystem)

COND_WARN = 1e12


def _cheb_d1(N):
    # Trefethen's construction with trigonometric node differences.
    j = np.arange(N + 1)
    x = np.cos(np.pi * j / N)
    c = np.ones(N + 1)
    c[0] = c[-1] = 2.0
    c = c * (-1.0) ** j
    ii, jj = np.meshgrid(j, j, indexing="ij")
    dx = 2.0 * np.sin(np.pi * (ii + jj) / (2 * N)) * np.sin(np.pi * (jj - ii) / (2 * N))
    np.fill_diagonal(dx, 1.0)
    D = np.outer(c, 1.0 / c) / dx
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return x, D


def _clenshaw_curtis(N):
    theta = np.pi * np.arange(N + 1) / N
    w = np.zeros(N + 1)
    ii = np.arange(1, N)
    v = np.ones(N - 1)
    if N % 2 == 0:
        w[0] = w[N] = 1.0 / (N * N - 1)
        for kk in range(1, N // 2):
            v -= 2.0 * np.cos(2 * kk * theta[ii]) / (4 * kk * kk - 1)
        v -= np.cos(N * theta[ii]) / (N * N - 1)
    else:
        w[0] = w[N] = 1.0 / (N * N)
        for kk in range(1, (N - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * kk * theta[ii]) / (4 * kk * kk - 1)
    w[ii] = 2.0 * v / N
    return w


def _values_to_coeffs(N):
    # Chebyshev coefficients from values at cos(j pi / N), j = 0..N.
    j = np.arange(N + 1)
    h = np.ones(N + 1)
    h[0] = h[-1] = 0.5
    C = (2.0 / N) * np.cos(np.pi * np.outer(j, j) / N) * h[None, :] * h[:, None]
    return C


class ChebGrid:
    """Chebyshev-Gauss-Lobatto grid y_j = cos(j pi / N), j = 0..N."""

    def __init__(self, N, ascending=False):
        if N < 2:
            raise ValueError("grid needs N >= 2")
        self.N = int(N)
        self.ascending = bool(ascending)
        x, D = _cheb_d1(self.N)
        w = _clenshaw_curtis(self.N)
        if ascending:
            x, D, w = x[::-1].copy(), D[::-1, ::-1].copy(), w[::-1].copy()
        self.nodes = x
        self.d1 = D
        self.cc_weights = w
        for a in (self.nodes, self.d1, self.cc_weights):
            a.setflags(write=False)

    @property
    def n_modes(self):
        return self.N + 1

    @cached_property
    def d2(self):
        return self.d1 @ self.d1

    @cached_property
    def d3(self):
        return self.d2 @ self.d1

    @cached_property
    def d4(self):
        return self.d2 @ self.d2

    @cached_property
    def bottom(self):
        return int(np.argmin(self.nodes))

    @cached_property
    def top(self):
        return int(np.argmax(self.nodes))

    def reversed(self):
        return ChebGrid(self.N, ascending=not self.ascending)

    def integrate(self, f):
        return np.dot(self.cc_weights, f)

    def inner(self, f, g):
        return np.dot(self.cc_weights, np.conj(f) * g)

    def norm(self, f):
        return float(np.sqrt(max(np.real(self.inner(f, f)), 0.0)))

    def h1_norm(self, f):
        return float(np.sqrt(self.norm(f) ** 2 + self.norm(self.d1 @ f) ** 2))

    @cached_property
    def coeff_matrix(self):
        C = _values_to_coeffs(self.N)
        return C[:, ::-1] if self.ascending else C

    def coeffs(self, f):
        return self.coeff_matrix @ f

    @cached_property
    def cumulative_matrix(self):
        """Q with (Q f)_i = int_{-1}^{y_i} f, exact for degree-N interpolants."""
        N = self.N
        ci = np.polynomial.chebyshev.chebint(np.eye(N + 1), lbnd=-1.0, axis=0)
        V = np.polynomial.chebyshev.chebvander(self.nodes, N + 1)
        return V @ ci @ self.coeff_matrix

    def cumulative(self, f, anchor=-1.0):
        """Spectral antiderivative int_anchor^y f on the nodes."""
        F = self.cumulative_matrix @ f
        if anchor != -1.0:
            F = F - self.interp(F, np.array([anchor]))[0]
        return F

    @cached_property
    def _bary(self):
        w = (-1.0) ** np.arange(self.N + 1)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    def interp(self, f, y):
        """Barycentric interpolation of nodal values to points y."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        x = self.nodes
        d = y[:, None] - x[None, :]
        exact = np.isclose(d, 0.0, atol=1e-15, rtol=0.0)
        d[exact] = 1.0
        t = self._bary[None, :] / d
        out = (t @ f) / t.sum(axis=1)
        hit = exact.any(axis=1)
        if np.any(hit):
            out = np.asarray(out, dtype=np.result_type(f, float)).copy()
            out[hit] = np.asarray(f)[np.argmax(exact[hit], axis=1)]
        return out


def cheb_grid(n):
    """Grid with n + 1 Lobatto nodes (n intervals)."""
    return ChebGrid(n)


def integrate(grid, f):
    return grid.integrate(f)


class PanelMesh:
    """Piecewise Chebyshev representation on [a, b] with adaptive panels.

    Used for integrands with near-real poles (critical layers), which a
    single global Chebyshev grid cannot resolve at moderate N.
    """

    def __init__(self, breaks, p=24):
        self.breaks = np.asarray(breaks, dtype=float)
        self.p = int(p)
        t = -np.cos(np.pi * np.arange(p + 1) / p)
        self._t = t
        a = self.breaks[:-1, None]
        b = self.breaks[1:, None]
        self.points = 0.5 * (a + b) + 0.5 * (b - a) * t[None, :]
        self.half = 0.5 * (self.breaks[1:] - self.breaks[:-1])
        ref = ChebGrid(p, ascending=True)
        self._qref = ref.cumulative_matrix
        self._wref = ref.cc_weights
        self._cref = ref.coeff_matrix
        bw = (-1.0) ** np.arange(p + 1)
        bw[0] *= 0.5
        bw[-1] *= 0.5
        self._bw = bw

    @classmethod
    def adaptive(cls, func, breaks=(-1.0, 0.0, 1.0), p=24, tol=1e-13,
                 max_panels=20000, min_width=1e-14, noise_tol=1e-6):
        """Bisect panels until the trailing Chebyshev coefficients fall below tol.

        A panel whose relative tail is already below ``noise_tol`` and did not
        shrink by 10x when its parent was halved is taken to sit at the
        rounding floor of ``func`` and is accepted as well.
        """
        t = -np.cos(np.pi * np.arange(p + 1) / p)
        C = ChebGrid(p, ascending=True).coeff_matrix
        todo = deque((breaks[i], breaks[i + 1], np.inf) for i in range(len(breaks) - 1))
        done = []
        while todo:
            if len(done) + len(todo) > max_panels:
                raise QuadratureFailure(f"adaptive mesh exceeded {max_panels} panels")
            a, b, parent = todo.popleft()
            x = 0.5 * (a + b) + 0.5 * (b - a) * t
            fx = np.asarray(func(x))
            if fx.ndim == 1:
                fx = fx[None, :]
            co = np.abs(fx @ C.T)
            if not np.all(np.isfinite(co)):
                raise QuadratureFailure("non-finite integrand on adaptive mesh")
            scale = np.maximum(co.max(axis=1), 1e-300)
            rel = float(np.max(co[:, -3:].max(axis=1) / scale))
            stalled = rel < noise_tol and rel > 0.1 * parent
            if rel <= tol or stalled or (b - a) < min_width:
                done.append((a, b))
            else:
                m = 0.5 * (a + b)
                todo.append((a, m, rel))
                todo.append((m, b, rel))
        done.sort()
        br = [done[0][0]] + [d[1] for d in done]
        return cls(br, p)

    @property
    def flat(self):
        return self.points.ravel()

    def reshape(self, v):
        v = np.asarray(v)
        return v.reshape(v.shape[:-1] + self.points.shape)

    def cumulative(self, f, anchor=None):
        """int_a^x f (or int_anchor^x f if anchor is a breakpoint) at all points."""
        f = self.reshape(f)
        loc = (f @ self._qref.T) * self.half[:, None]
        tot = loc[..., -1]
        off = np.concatenate([np.zeros(tot.shape[:-1] + (1,)), np.cumsum(tot, axis=-1)[..., :-1]], axis=-1)
        F = loc + off[..., None]
        if anchor is not None:
            i = int(np.argmin(np.abs(self.breaks - anchor)))
            if abs(self.breaks[i] - anchor) > 1e-14:
                raise ValueError("anchor must be a panel breakpoint")
            val = F[..., i, 0] if i < len(self.half) else F[..., -1, -1]
            F = F - val[..., None, None]
        return F.reshape(F.shape[:-2] + (-1,))

    def integral(self, f):
        f = self.reshape(f)
        return np.sum((f @ self._wref) * self.half, axis=-1)

    def interp(self, f, y):
        """Evaluate the piecewise interpolant of point values f at y."""
        f = self.reshape(f)
        y = np.atleast_1d(np.asarray(y, dtype=float))
        idx = np.clip(np.searchsorted(self.breaks, y, side="right") - 1, 0, len(self.half) - 1)
        tloc = (y - 0.5 * (self.breaks[idx] + self.breaks[idx + 1])) / self.half[idx]
        d = tloc[:, None] - self._t[None, :]
        exact = np.abs(d) < 1e-15
        d[exact] = 1.0
        w = self._bw[None, :] / d
        vals = f[..., idx, :]
        out = np.sum(w * vals, axis=-1) / w.sum(axis=1)
        if np.any(exact):
            r, cidx = np.nonzero(exact)
            out[..., r] = vals[..., r, cidx]
        return out


class BVPSystem:
    """Collocation matrix with boundary rows replaced, factorized once."""

    def __init__(self, matrix, bc_rows, warn=True):
        M = np.array(matrix, dtype=complex, copy=True)
        self.bc_index = []
        for idx, row in bc_rows:
            M[idx, :] = row
            self.bc_index.append(idx)
        self.matrix = M
        anorm = np.linalg.norm(M, 1)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", sla.LinAlgWarning)
                self.lu = sla.lu_factor(M, check_finite=True)
        except (sla.LinAlgWarning, ValueError, np.linalg.LinAlgError) as exc:
            raise SingularSystem(str(exc)) from exc
        if np.any(np.diag(self.lu[0]) == 0):
            raise SingularSystem("zero pivot in LU factorization")
        rcond, _ = lapack.zgecon(self.lu[0], anorm)
        self.rcond = float(rcond)
        if warn and self.rcond * COND_WARN < 1.0:
            warnings.warn(f"condition estimate {1.0 / max(self.rcond, 1e-300):.2e} exceeds "
                          f"{COND_WARN:.0e}", IllConditioned, stacklevel=3)

    def solve(self, rhs, bc_values=None):
        b = np.array(rhs, dtype=complex, copy=True)
        if bc_values is None:
            bc_values = np.zeros(len(self.bc_index))
        for idx, val in zip(self.bc_index, bc_values):
            b[idx] = val
        return sla.lu_solve(self.lu, b)


def bvp_solve(operator_matrix, rhs, bc_rows, warn=True):
    """Solve the collocation system after boundary-row replacement.

    ``bc_rows`` is a sequence of (row_index, row_vector, value).
    """
    sys_ = BVPSystem(operator_matrix, [(i, r) for i, r, _ in bc_rows], warn=warn)
    return sys_.solve(rhs, [v for _, _, v in bc_rows])


def lns_blocks(grid, flow, k, eps, m, lam, c=0.0):
    """Collocation blocks of the linearized operator on (pi, u, v), pi = rho/m^2.

    Rows: continuity, x-momentum, y-momentum. Returns a 3x3 nested list.
    """
    ik = 1j * k
    I = np.eye(grid.n_modes)
    D, D2 = grid.d1, grid.d2
    U = np.diag(flow.u_s - c)
    dU = np.diag(flow.u_s1)
    d2U = np.diag(flow.u_s2)
    m2 = m * m
    lap = D2 - k * k * I
    return [
        [ik * m2 * U, ik * I, D],
        [ik * I + eps * m2 * d2U, -eps * lap + lam * eps * k * k * I + ik * U, dU - lam * eps * ik * D],
        [D, -lam * eps * ik * D, -eps * lap - lam * eps * D2 + ik * U],
    ]


def apply_lns(grid, flow, k, eps, m, lam, c, pi, u, v):
    """Apply the linearized operator to nodal fields (pi, u, v)."""
    B = lns_blocks(grid, flow, k, eps, m, lam, c)
    x = (pi, u, v)
    return tuple(sum(B[r][j] @ x[j] for j in range(3)) for r in range(3))


@dataclass(frozen=True)
class ModeBundle:
    """Fields (rho, u, v) on the grid nodes.

    ``pi`` optionally carries the pressure-like variable rho/m^2, which stays
    meaningful in the incompressible limit m = 0.
    """

    y: np.ndarray
    rho: np.ndarray
    u: np.ndarray
    v: np.ndarray
    label: str = "exact"
    pi: np.ndarray = None

    @property
    def boundary(self):
        ib = int(np.argmin(self.y))
        it = int(np.argmax(self.y))
        return {
            "bottom": (self.rho[ib], self.u[ib], self.v[ib]),
            "top": (self.rho[it], self.u[it], self.v[it]),
        }

    def scaled(self, s):
        pi = None if self.pi is None else self.pi * s
        return ModeBundle(self.y, self.rho * s, self.u * s, self.v * s, self.label, pi)

    def __add__(self, other):
        pi = None
        if self.pi is not None and other.pi is not None:
            pi = self.pi + other.pi
        return ModeBundle(self.y, self.rho + other.rho, self.u + other.u, self.v + other.v,
                          self.label, pi)


@dataclass(frozen=True)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: list
    resolution_flags: np.ndarray

    def physical(self):
        return self.eigenvalues[self.resolution_flags]


def _reduced_operator(grid, flow, k, eps, m, lam):
    B = lns_blocks(grid, flow, k, eps, m, lam, 0.0)
    n = grid.n_modes
    A = np.block(B)
    walls = [grid.bottom, grid.top]
    drop = [n + w for w in walls] + [2 * n + w for w in walls]
    keep = np.setdiff1d(np.arange(3 * n), drop)
    A = A[np.ix_(keep, keep)]
    mass = np.concatenate([np.full(n, 1j * k * m * m), np.full(2 * n, 1j * k)])[keep]
    return A, mass, keep


def _eig(grid, flow, k, eps, m, lam, vectors):
    A, mass, keep = _reduced_operator(grid, flow, k, eps, m, lam)
    if m > 0:
        A = A / mass[:, None]
        if vectors:
            w, V = sla.eig(A, check_finite=False)
        else:
            w, V = sla.eigvals(A, check_finite=False), None
    else:
        Bm = np.diag(mass)
        if vectors:
            w, V = sla.eig(A, Bm, check_finite=False)
        else:
            w, V = sla.eigvals(A, Bm, check_finite=False), None
        fin = np.isfinite(w)
        w = w[fin]
        if V is not None:
            V = V[:, fin]
    return w, V, keep


def direct_spectrum(params, flow, grid, window_center, window_radius, refine=1.5,
                    match_tol=1e-6):
    """Eigenvalues c of the linearized system with no-slip walls.

    The four wall unknowns u(+-1), v(+-1) are eliminated together with the
    wall momentum rows, leaving a standard eigenproblem for m > 0. Each
    eigenvalue in the window is flagged physical when a match within
    ``match_tol * (1 + |c|)`` exists on a grid refined by ``refine``.
    """
    k, eps, m, lam = params.k, params.eps, params.mach, params.lam
    w, V, keep = _eig(grid, flow, k, eps, m, lam, vectors=True)
    inside = np.abs(w - window_center) <= window_radius
    if not np.any(inside):
        raise NoEigenvalueInWindow(
            f"no eigenvalue within {window_radius:g} of {complex(window_center):.6g}")
    grid2 = ChebGrid(int(round(refine * grid.N)), ascending=grid.ascending)
    w2, _, _ = _eig(grid2, flow.on_grid(grid2), k, eps, m, lam, vectors=False)
    idx = np.nonzero(inside)[0]
    idx = idx[np.argsort(-w[idx].imag)]
    vals, vecs, flags = [], [], []
    n = grid.n_modes
    for i in idx:
        c = w[i]
        ok = bool(np.min(np.abs(w2 - c)) < match_tol * (1.0 + abs(c)))
        full = np.zeros(3 * n, dtype=complex)
        full[keep] = V[:, i]
        pi, u, v = full[:n], full[n:2 * n], full[2 * n:]
        vals.append(c)
        flags.append(ok)
        vecs.append(ModeBundle(grid.nodes, m * m * pi, u, v, "exact", pi))
    flags = np.array(flags, dtype=bool)
    if not flags.any():
        raise ResolutionFailure("no eigenvalue in the window survived grid refinement")
    return Spectrum(np.array(vals), vecs, flags)
