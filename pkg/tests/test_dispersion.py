import functools

import numpy as np
import pytest

import compstab.dispersion as D
from compstab.airy import airy_ratio
from compstab.core import Params
from compstab.dispersion import (dispersion_leading, dispersion_value, exact_modes, find_root,
                                 loglog_slope, matching_coeffs, newton, newton_root,
                                 predicted_root, winding_number)
from compstab.errors import NewtonDivergence, NoRootInDisk
from compstab.fast_modes import bl_scales
from compstab.resolvent import ResolventOperators, interior_mask
from compstab.spectral import direct_spectrum

from conftest import TS_PARAMS, c0_poiseuille, grid, poiseuille

M = 0.3
TS_C = 0.13993002950 + 0.00789929275j


def state(p, n=None):
    n = n or p.default_grid_n()
    c = predicted_root(p, poiseuille(n)).c0
    return dispersion_value(c, p, poiseuille(n), grid(n), return_state=True)


@functools.lru_cache(maxsize=None)
def seq_states():
    return [(p, state(p)) for p in (Params(e, M, 0.0, 4.0) for e in (1e-5, 1e-6, 1e-7))]


@functools.lru_cache(maxsize=None)
def ts_root():
    return newton_root(TS_PARAMS, poiseuille(256), grid(256), predicted_root(
        TS_PARAMS, poiseuille(256)).c0, tol=1e-8)


# ---- predicted root ----------------------------------------------------------

@pytest.mark.parametrize("eps,t0", [(1e-5, 10.0), (1e-7, 4.0), (1e-3, 20.0)])
def test_c0_closed_form(eps, t0):
    p = Params(eps, M, 0.0, t0)
    pr = predicted_root(p, poiseuille(64))
    assert abs(pr.c0 - c0_poiseuille(p)) < 1e-13 * abs(pr.c0)
    e27 = eps ** (2 / 7)
    assert abs(pr.c0.imag - np.sqrt(7.5) * np.sin(np.pi / 4) * t0 ** -1.5 * e27) < 1e-14
    assert abs(np.sqrt(7.5) * np.sin(np.pi / 4) - 1.9365) < 1e-4
    assert pr.c0.imag > 0
    assert abs(pr.radius - t0 ** -2 * e27) < 1e-16


@pytest.mark.parametrize("consistent", [False, True])
def test_ilin_vanishes_at_c0(consistent):
    p = Params(1e-6, M, 0.0, 10.0)
    pr = predicted_root(p, poiseuille(64), consistent)
    assert abs(pr.i_lin(pr.c0, p.k)) < 1e-12 * abs(pr.slope * pr.c0)


def test_leading_dispersion_at_both_predictions():
    # the leading Airy form of I nearly vanishes at the self-consistent c0 (the
    # remainder is the large-z truncation of the Airy ratios, fixed by T0), while
    # the closed-form c0 leaves an eps-independent offset
    for eps in (1e-8, 1e-10):
        p = Params(eps, M, 0.0, 10.0)
        cons = predicted_root(p, poiseuille(64), consistent=True)
        closed = predicted_root(p, poiseuille(64))
        lead_c = dispersion_leading(cons.c0, p, poiseuille(64))
        lead_p = dispersion_leading(closed.c0, p, poiseuille(64))
        assert abs(lead_c) < 5e-3 * abs(cons.const)
        assert abs(lead_p.real + 1.18) < 0.01


# ---- exact modes and matching -------------------------------------------------

def test_matching_residuals_and_combined_bcs():
    p, (val, modes, match, mode) = seq_states()[0]
    scale = np.max(np.abs(match.m_matrix)) * np.max(np.abs(match.alpha)) + np.max(np.abs(match.rhs))
    assert np.max(np.abs(match.residuals)) < 1e-10 * scale
    b = mode.boundary
    assert abs(b["bottom"][2]) < 1e-10 * scale and abs(b["bottom"][1]) < 1e-10 * scale
    assert abs(b["top"][2]) < 1e-10 * scale
    assert val == b["top"][1]


def test_exact_layer_wall_values():
    p, (_, modes, _, _) = seq_states()[1]
    c = modes.c
    sb = bl_scales("bottom", p, poiseuille(256), c)
    fm = modes.fast_minus.boundary
    assert abs(fm["bottom"][2] - 1j * p.k * sb.delta) < 1e-13 * abs(p.k * sb.delta)
    assert abs(fm["top"][2]) < 1e-10


def test_slow_plus_wall_values_improve():
    du, dv = [], []
    for p, (_, modes, _, _) in seq_states():
        c, k = modes.c, p.k
        b = modes.slow_plus.boundary
        du.append(max(abs(b["bottom"][1] - 2), abs(b["top"][1] + 2)))
        dv.append(abs(b["bottom"][2] - 1j * k * (c - 8 / 15 * k * k)) / abs(k * c))
    assert du[0] > du[1] > du[2]
    assert dv[0] > dv[1] > dv[2]


def test_determinant_asymptotics():
    # det M ~ k^2 delta~ (Ai(1, z0)/Ai(2, z0)) / U'(-1)
    errs = []
    for p, (_, modes, match, _) in seq_states():
        sb = bl_scales("bottom", p, poiseuille(64), modes.c)
        st = bl_scales("top", p, poiseuille(64), modes.c)
        r = airy_ratio(np.array([sb.z0]))[0]
        errs.append(abs(match.det_m / (p.k ** 2 * st.delta * r / 2.0) - 1))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 0.1


def test_alpha2_asymptotics_improve():
    errs = []
    for p, (_, modes, _, _) in seq_states():
        m = matching_coeffs(modes, modes.c, p, poiseuille(64))
        errs.append(abs(m.alpha[1] / m.alpha_asymptotic[1] - 1))
    assert errs[0] > errs[1] > errs[2]


def test_dispersion_approaches_linear_model():
    # I(c0) - I_lin(c0) = I(c0) shrinks along the eps-sequence at fixed T0
    vals = [abs(v) for _, (v, _, _, _) in seq_states()]
    assert vals[0] > vals[1] > vals[2]


def test_dispersion_grid_convergence():
    p = Params(1e-6, M, 0.0, 4.0)
    a = state(p, 256)[0]
    b = state(p, 384)[0]
    assert abs(a - b) < 1e-2 * abs(b)


def test_source_option_validated():
    with pytest.raises(ValueError):
        exact_modes(0.1 + 0.01j, TS_PARAMS, poiseuille(64), grid(64), source="other")


# ---- root finding ------------------------------------------------------------

def test_newton_root_matches_direct_eigenvalue():
    c, res, its = ts_root()
    assert res < 1e-7
    s = direct_spectrum(TS_PARAMS, poiseuille(256), grid(256), c, 0.01)
    phys = s.eigenvalues[s.resolution_flags]
    assert np.min(np.abs(phys - c)) < 1e-6 * abs(c)
    assert abs(c - TS_C) < 1e-7
    assert c.imag > 0


def test_analytic_source_converges_to_discrete_root():
    c_disc = ts_root()[0]
    c_an, _, _ = newton_root(TS_PARAMS, poiseuille(384), grid(384), c_disc, tol=1e-8,
                             source="analytic")
    assert abs(c_an - c_disc) < 1e-3 * abs(c_disc)


def test_assembled_eigenfunction_at_root():
    c = ts_root()[0]
    val, modes, match, mode = dispersion_value(c, TS_PARAMS, poiseuille(256), grid(256),
                                               return_state=True)
    g = grid(256)
    scale = np.max(np.abs(mode.u))
    for w in (g.bottom, g.top):
        assert abs(mode.u[w]) < 1e-7 * scale and abs(mode.v[w]) < 1e-7 * scale
    ops = ResolventOperators(TS_PARAMS, poiseuille(256), g, c, warn=False)
    r = ops.apply_L(mode.pi, mode.u, mode.v)
    inner = interior_mask(g)
    lscale = np.max(np.abs(ops.apply_L(0 * mode.pi, mode.u, 0 * mode.v)[1]))
    # near-wall rows carry a rounding floor of a few 1e-7 at N = 256
    assert max(np.max(np.abs(ri[inner])) for ri in r) < 1e-5 * lscale


def test_winding_certificate_around_root():
    c = ts_root()[0]
    g, f = grid(256), poiseuille(256)

    @functools.lru_cache(maxsize=None)
    def I(cc):
        return dispersion_value(cc, TS_PARAMS, f, g)

    r = 0.3 * c.imag
    w64 = winding_number(I, c, r, n=64)[0]
    w128 = winding_number(I, c, r, n=128)[0]
    assert w64 == w128 == 1
    assert winding_number(I, c + 3 * r, r, n=64)[0] == 0


def test_find_root_with_linear_model(monkeypatch):
    # with I replaced by its linear model the certificate and Newton must return c0
    p = Params(1e-6, M, 0.0, 10.0)
    pr = predicted_root(p, poiseuille(64))
    monkeypatch.setattr(D, "dispersion_value", lambda c, *a, **kw: pr.i_lin(c, p.k))
    res = find_root(p, poiseuille(64), grid(64), tol=1e-12)
    assert res.winding == 1 and res.in_disk
    assert abs(res.c_star - pr.c0) < 1e-12 * abs(pr.c0)
    assert res.growth_rate == p.k * res.c_star.imag
    assert res.residual < 1e-12


def test_find_root_reports_winding_zero(monkeypatch):
    p = Params(1e-6, M, 0.0, 10.0)
    pr = predicted_root(p, poiseuille(64))
    monkeypatch.setattr(D, "dispersion_value", lambda c, *a, **kw: 1.0 + 0.0 * c)
    with pytest.raises(NoRootInDisk) as ei:
        find_root(p, poiseuille(64), grid(64))
    assert ei.value.result.winding == 0 and ei.value.result.c0 == pr.c0


def test_find_root_at_small_disk_leaves_disk():
    # T0 = 4: the true root lies outside |c - c0| <= T0^-2 eps^(2/7)
    with pytest.raises(NewtonDivergence):
        find_root(TS_PARAMS, poiseuille(256), grid(256), check_winding=False)


def test_winding_synthetic():
    a = 0.3 + 0.1j
    assert winding_number(lambda c: c - a, a, 0.1)[0] == 1
    assert winding_number(lambda c: (c - a) ** 2, a, 0.1)[0] == 2
    assert winding_number(lambda c: 1 / (c - a), a, 0.1)[0] == -1
    assert winding_number(lambda c: c - a, a + 1, 0.1)[0] == 0
    # arcs turning by more than pi/4 are bisected
    w, nev, _ = winding_number(lambda c: (c - a) ** 12, a, 0.1, n=64)
    assert w == 12 and nev > 64


def test_newton_synthetic():
    c, fc, its, _ = newton(lambda z: z * z - 2, 1.0 + 0.1j, 1e-6, 1e-13)
    assert abs(c - np.sqrt(2)) < 1e-12 and its < 10
    with pytest.raises(NewtonDivergence):
        newton(lambda z: z * z - 2, 1.0 + 0.1j, 1e-6, 1e-13, center=1.0, radius=0.01)


def test_incompressible_root():
    p = Params(1e-5, 0.0, 0.0, 4.0)
    c, res, _ = newton_root(p, poiseuille(256), grid(256), TS_C, tol=1e-8)
    assert res < 1e-7 and c.imag > 0
    s = direct_spectrum(p, poiseuille(256), grid(256), c, 0.01)
    assert np.min(np.abs(s.eigenvalues[s.resolution_flags] - c)) < 1e-6 * abs(c)


def test_loglog_slope_exact_power_law():
    x = np.logspace(-6, -3, 7)
    s, half = loglog_slope(x, 3.0 * x ** (2 / 7))
    assert abs(s - 2 / 7) < 1e-12 and half < 1e-10
