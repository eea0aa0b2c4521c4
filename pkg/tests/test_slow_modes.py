from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from compstab.core import Params, Profile
from compstab.dispersion import loglog_slope, predicted_root
from compstab.errors import NearRealAxis
from compstab.slow_modes import (SlowBuilder, corrected_phi, first_integral, inviscid_jets,
                                 lns_jets, phi_pair, rayleigh_residual, slow_error_field,
                                 slow_error_norms)

from conftest import grid, poiseuille

TAU = 8 / 15
M = 0.3
C_SEQ = [s * (1 + 1j) for s in (1e-2, 1e-3, 1e-4, 1e-5)]


def builder(c, m=M):
    return SlowBuilder(poiseuille(64).profile, c, m)


def c_log(c):
    return abs(c * np.log(c.imag))


def test_phi_plus_is_u_minus_c():
    g = grid(128)
    c = 0.05 + 0.01j
    pair = phi_pair(g, poiseuille(128), c, M)
    assert np.max(np.abs(pair.phi_plus.val - (poiseuille(128).u_s - c))) < 1e-15
    assert pair.phi_plus.val[g.bottom] == -c and pair.phi_plus.val[g.top] == -c


def test_phi_minus_wall_value_example():
    c = 1e-3 * (1 + 1j)
    j = builder(c).jets(np.array([-1.0, 1.0]), 0.0)
    assert abs(j["phi_minus"].val[0] + 0.5) < 0.02
    assert abs(j["phi_minus"].val[1] - 0.5) < 0.02


def test_phi_minus_wall_value_rate():
    # |phi_-(-1) + 1/U'(-1)| tracks |c log Im c| with a stable ratio
    ratios = []
    for c in C_SEQ:
        j = builder(c).jets(np.array([-1.0]), 0.0)
        ratios.append(abs(j["phi_minus"].val[0] + 0.5) / c_log(c))
    assert max(ratios) < 1.0
    assert max(ratios) / min(ratios) < 1.5


@pytest.mark.parametrize("c", [0.1 + 0.01j, 1e-3 * (1 + 1j), 0.05 + 1e-6j])
def test_first_integral_random_nodes(c, rng):
    y = rng.uniform(-1, 1, 20)
    b = builder(c)
    U, pp, pm = b.base_jets(y)
    assert np.max(np.abs(first_integral(pm, U, c, M) - 1.0)) < 1e-8
    assert np.max(np.abs(first_integral(pp, U, c, M))) < 1e-14


@given(cr=st.floats(0.0, 0.6), ci=st.floats(1e-6, 0.2), m=st.floats(0.0, 0.55))
@settings(max_examples=25, deadline=None)
def test_first_integral_property(cr, ci, m):
    c = complex(cr, ci)
    b = builder(c, m)
    y = np.linspace(-0.98, 0.98, 9)
    U, pp, pm = b.base_jets(y)
    assert np.max(np.abs(first_integral(pm, U, c, m) - 1.0)) < 1e-8
    assert np.max(np.abs(first_integral(pp, U, c, m))) < 1e-12


def test_near_real_axis_rejected():
    with pytest.raises(NearRealAxis):
        builder(0.1 + 1e-13j)


def test_k_zero_corrector_is_identity():
    g = grid(64)
    pair = corrected_phi(phi_pair(g, poiseuille(64), 0.05 + 0.02j, M), g, 0.05 + 0.02j, 0.0)
    assert np.array_equal(pair.phi_plus_s.d, pair.phi_plus.d)
    assert np.array_equal(pair.phi_minus_s.d, pair.phi_minus.d)


def test_corrector_wall_value_rate():
    # phi_+k(-1) -> int U^2 / U'(-1) = tau, remainder tracking |c log Im c|
    ratios = []
    for c in C_SEQ:
        j = builder(c).jets(np.array([-1.0]), 1.0)
        ratios.append(abs(j["phi_plus_k"].val[0] - TAU) / c_log(c))
    assert max(ratios) < 1.0
    assert all(b < a for a, b in zip(ratios, ratios[1:]))


@pytest.mark.parametrize("eps,t0", [(1e-5, 4.0), (1e-8, 10.0), (1e-10, 10.0)])
def test_corrected_wall_values_in_regime(eps, t0):
    p = Params(eps, M, 0.0, t0)
    c = predicted_root(p, poiseuille(64)).c0
    k = p.k
    j = builder(c).jets(np.array([-1.0, 1.0]), k)
    ps = j["phi_plus_s"].val
    assert abs(ps[1] + c) <= 2 * k * k * abs(c)
    assert abs(ps[0] + c - k * k * TAU) <= k * k * c_log(c)


def test_rayleigh_residual_phi_plus_k_zero():
    g = grid(256)
    b = builder(0.1 + 0.02j)
    U, pp, pm = b.base_jets(g.nodes)
    assert np.max(np.abs(rayleigh_residual(pp, 0.1 + 0.02j, 0.0, U, M))) < 1e-9


def test_rayleigh_residual_phi_minus_graded():
    g = grid(256)
    c = 0.1 + 0.02j
    U, pp, pm = builder(c).base_jets(g.nodes)
    r = np.abs(rayleigh_residual(pm, c, 0.0, U, M))
    near = np.abs(g.nodes) > 0.95
    assert np.max(r[~near]) < 1e-8
    assert np.max(r[near]) < 1e-8 / c.imag


@pytest.mark.parametrize("c,k", [(0.1 + 0.02j, 0.7), (1e-3 * (1 + 1j), 0.3), (0.3 + 1e-4j, 1.2)])
def test_corrector_identity(c, k):
    g = grid(256)
    j = builder(c).jets(g.nodes, k)
    for s in ("plus", "minus"):
        phik = j[f"phi_{s}_k"]
        r = rayleigh_residual(j[f"phi_{s}_s"], c, k, j["U"], M) + k ** 4 * (j["U"].val - c) * phik.val
        assert np.max(np.abs(r)) < 1e-6 * np.max(np.abs(phik.val))


def test_inviscid_continuity_exact():
    c, k = 0.1 + 0.02j, 0.7
    g = grid(128)
    j = builder(c).jets(g.nodes, k)
    for s in ("plus", "minus"):
        f = inviscid_jets(j[f"phi_{s}_s"], c, k, M, j["U"])
        e = lns_jets(f["pi"], f["u"], f["v"], j["U"], k, 1e-5, M, 0.0, c)
        assert np.max(np.abs(e[0].val)) < 1e-8 * np.max(np.abs(f["u"].val))
        # v = -ik phi^s
        assert np.max(np.abs(f["v"].val + 1j * k * j[f"phi_{s}_s"].val)) < 1e-15


def test_inviscid_wall_values_trend():
    # u_+(-1) -> U'(-1) = 2 and v_-(-1) -> ik/U'(-1) as |c| + k^2 -> 0
    du, dv = [], []
    for c in C_SEQ:
        k = np.sqrt(abs(c))
        j = builder(c).jets(np.array([-1.0]), k)
        up = inviscid_jets(j["phi_plus_s"], c, k, M, j["U"])["u"].val[0]
        vm = inviscid_jets(j["phi_minus_s"], c, k, M, j["U"])["v"].val[0]
        scale = (abs(c) + k * k) * abs(np.log(c.imag))
        du.append(abs(up - 2.0) / scale)
        dv.append(abs(vm - 0.5j * k) / (k * scale))
    assert max(du) < 1.0 and max(dv) < 1.0
    assert max(du) / min(du) < 3 and max(dv) / min(dv) < 3


def test_slow_error_vanishes_for_poiseuille_at_k_zero():
    # phi_+ = U - c gives pi = 0, u = U', v = 0; the error is -eps U''' = 0
    g = grid(64)
    c = 0.05 + 0.01j
    p = SimpleNamespace(k=0.0, eps=1e-5, mach=0.0, lam=0.0)
    pair = phi_pair(g, poiseuille(64), c, 0.0)
    e = slow_error_field(pair, p, +1).total
    assert max(np.max(np.abs(e.rho)), np.max(np.abs(e.u)), np.max(np.abs(e.v))) < 1e-12


def test_slow_error_cosine_profile_regression():
    # U = cos(pi y/2): at k = 0 the only error is the second row, -eps U'''
    a = np.pi / 2

    def func(y):
        y = np.asarray(y, float)
        return np.cos(a * y), -a * np.sin(a * y), -a * a * np.cos(a * y)

    def higher(y, count):
        return [np.real(a ** (3 + j) * np.exp(1j * (a * y + (3 + j) * np.pi / 2)))
                for j in range(count)]

    prof = Profile(func, "cosine", higher)
    y = np.linspace(-0.99, 0.99, 11)
    b = SlowBuilder(prof, 0.05 + 0.01j, 0.0)
    p = SimpleNamespace(k=0.0, eps=1e-5, mach=0.0, lam=0.0)
    pair = SimpleNamespace(c=b.c, builder=b, y=y)
    e = slow_error_field(pair, p, +1).total
    assert np.max(np.abs(e.u + 1e-5 * a ** 3 * np.sin(a * y))) < 1e-15
    assert np.max(np.abs(e.rho)) < 1e-15 and np.max(np.abs(e.v)) < 1e-15


def test_error_split_adds_up():
    g = grid(64)
    p = Params(1e-5, M, 0.0, 4.0)
    c = predicted_root(p, poiseuille(64)).c0
    pair = phi_pair(g, poiseuille(64), c, M)
    e = slow_error_field(pair, p, +1)
    assert np.max(np.abs(e.part1.v + e.part2.v - e.total.v)) < 1e-15
    assert np.all(e.part2.u == 0) and np.all(e.part2.rho == 0)


def _norm_series(t0, eps):
    rows = []
    for e in eps:
        p = Params(e, M, 0.0, t0)
        b = builder(predicted_root(p, poiseuille(64)).c0)
        rows.append((slow_error_norms(b, p, +1)["part1"], slow_error_norms(b, p, -1)["total"]))
    return np.array(rows)


def test_slow_error_norm_slopes():
    eps = np.array([1e-6, 1e-5, 1e-4, 1e-3])
    r = _norm_series(1.0, eps)
    assert loglog_slope(eps, r[:, 0])[0] >= 6 / 7 - 0.05
    assert loglog_slope(eps, r[:, 1])[0] >= 4 / 7 - 0.05


def test_third_derivative_norm_growth():
    # ||d^3 phi_+^s|| grows no faster than eps^{-1/7} over a decade
    eps = np.array([1e-6, 3e-6, 1e-5])
    vals = []
    for e in eps:
        p = Params(e, M, 0.0, 1.0)
        b = builder(predicted_root(p, poiseuille(64)).c0)
        j = b.jets(b.mesh.flat, p.k)
        vals.append(np.sqrt(np.real(b.mesh.integral(np.abs(j["phi_plus_s"][3]) ** 2))))
    assert loglog_slope(eps, np.array(vals))[0] >= -1 / 7 - 0.05


@pytest.mark.parametrize("c", [1e-3 * (1 + 1j), 1e-5 * (1 + 1j)])
def test_phi_minus_log_structure_near_top(c):
    # phi_-' - (-U''/U'^2) log(U - c) stays bounded while the log term grows
    y = np.array([0.9, 0.95, 0.99, 0.995, 0.999])
    j = builder(c).jets(y, 0.0)
    U = j["U"].val
    lead = (2.0 / (4 * y * y)) * np.log(U - c)
    rem = np.abs(j["phi_minus"][1] - lead)
    assert np.max(rem) < 1.0
    assert np.max(np.abs(lead)) > 2.5
