import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from compstab.core import (MACH_MAX, Params, Profile, base_flow, make_poiseuille,
                           sound_factor, validate_profile, weight_functions)
from compstab.errors import NearSonic, ParameterError, SubsonicViolation
from compstab.spectral import cheb_grid

from conftest import grid, poiseuille


def test_params_derived_quantities():
    p = Params(1e-5, 0.3, 0.0, 10.0)
    assert p.k == 10.0 * 1e-5 ** (1 / 7)
    assert p.n == p.k / p.eps


@pytest.mark.parametrize("kw,msg", [
    (dict(eps=0.0, mach=0.3), "eps"),
    (dict(eps=1.5, mach=0.3), "eps"),
    (dict(eps=1e-5, mach=0.7), "Mach must be < 0.5774"),
    (dict(eps=1e-5, mach=-0.1), "Mach"),
    (dict(eps=1e-5, mach=0.3, lam=-1.0), "lambda"),
    (dict(eps=1e-5, mach=0.3, t0=0.5), "t0"),
    (dict(eps=float("nan"), mach=0.3), "eps"),
])
def test_params_rejects_invalid(kw, msg):
    with pytest.raises(ParameterError, match=msg):
        Params(**kw)


def test_params_accepts_incompressible_limit():
    assert Params(1e-5, 0.0).mach == 0.0


def test_poiseuille_values_at_centre():
    g = cheb_grid(16)
    f = make_poiseuille(g)
    j = int(np.argmin(np.abs(g.nodes)))
    assert abs(f.u_s[j] - 1.0) < 1e-15 and abs(f.u_s1[j]) < 1e-15 and f.u_s2[j] == -2.0


def test_poiseuille_tau_beta():
    f = poiseuille(32)
    # int (1 - y^2)^2 = 16/15, U'(-1) = 2
    assert abs(f.tau - 8 / 15) < 1e-13
    assert f.beta == 1.0


@pytest.mark.parametrize("n", [16, 24, 64, 128])
def test_tau_spectral_accuracy(n):
    assert abs(make_poiseuille(cheb_grid(n)).tau - 8 / 15) < 1e-12


@pytest.mark.parametrize("n", [8, 17, 64, 256, 512])
def test_validate_poiseuille_passes(n):
    rep = validate_profile(make_poiseuille(cheb_grid(n)))
    assert rep.passed, rep.lines()


def test_validate_couette_fails_wall_value():
    prof = Profile(lambda y: (np.asarray(y, float), np.ones_like(y, dtype=float),
                              np.zeros_like(y, dtype=float)), "couette")
    rep = validate_profile(base_flow(prof, cheb_grid(16)))
    assert "wall_values" in rep.failures()


def test_validate_quartic_fails_concavity():
    prof = Profile(lambda y: (1 - np.asarray(y) ** 4, -4 * np.asarray(y) ** 3,
                              -12 * np.asarray(y) ** 2), "quartic")
    rep = validate_profile(base_flow(prof, cheb_grid(16)))
    assert rep.failures() == ["strict_concavity"]


def test_sound_factor_examples():
    f = poiseuille(16)
    assert np.all(sound_factor(f, 0.3 + 0.1j, 0.0) == 1.0)
    a = sound_factor(f, 0.0, 0.5)
    j = int(np.argmin(np.abs(f.grid.nodes)))
    assert abs(a[j] - 0.75) < 1e-15
    assert a[f.grid.bottom] == 1.0 and a[f.grid.top] == 1.0


def test_sound_factor_guard():
    with pytest.raises(NearSonic):
        sound_factor(poiseuille(16), 3.0, 0.5)


@given(c_re=st.floats(0.0, 0.5), c_im=st.floats(1e-6, 0.2), m=st.floats(0.0, 0.57))
@settings(max_examples=40, deadline=None)
def test_wall_sound_factor_property(c_re, c_im, m):
    c = complex(c_re, c_im)
    f = poiseuille(16)
    try:
        a = sound_factor(f, c, m)
    except NearSonic:
        return
    for w in (f.grid.bottom, f.grid.top):
        assert abs(a[w] - (1 - m * m * c * c)) < 1e-15


@pytest.mark.parametrize("m", [0.0, 0.2, 0.4, 0.55])
def test_script_w_poiseuille(m):
    f = poiseuille(64)
    y = f.grid.nodes
    cf = weight_functions(f, 0.01 + 0.005j, m)
    expect = 2 * (1 - m * m) + 6 * m * m * y * y * (y * y - 2 / 3)
    assert np.max(np.abs(cf.script_w - expect)) < 1e-13
    # minimum of the quartic sits at y^2 = 1/3
    yy = np.linspace(-1, 1, 20001)
    fine = 2 * (1 - m * m) + 6 * m * m * yy * yy * (yy * yy - 2 / 3)
    assert abs(fine.min() - 2 * (1 - 4 * m * m / 3)) < 1e-6


def test_weight_incompressible_is_half():
    cf = weight_functions(poiseuille(32), 0.05 + 0.01j, 0.0)
    assert np.max(np.abs(cf.w_vals - 0.5)) < 1e-15


def test_weight_expansion_in_c():
    # w(c) = w0 + c w1 + O(c^2): the remainder divided by c^2 stays bounded
    f = poiseuille(32)
    m = 0.4
    base = weight_functions(f, 0.0, m)
    errs = []
    for c in (1e-2, 5e-3, 2.5e-3):
        cf = weight_functions(f, c * (1 + 0.5j), m)
        cc = c * (1 + 0.5j)
        errs.append(np.max(np.abs(cf.w_vals - base.w0 - cc * base.w1)) / abs(cc) ** 2)
    assert max(errs) / min(errs) < 1.2


def test_weight_subsonic_violation():
    with pytest.raises((SubsonicViolation, ParameterError)):
        Params(1e-5, 0.99 / np.sqrt(3) + 0.2)
    with pytest.raises(SubsonicViolation):
        weight_functions(poiseuille(32), 0.0, 0.99 / np.sqrt(3) + 0.2)


def test_weight_positivity_below_limit():
    cf = weight_functions(poiseuille(64), 0.02 + 0.01j, 0.99 * MACH_MAX)
    assert cf.min_script_w > 0 and cf.min_re_w0_uw1 > 0


def test_profile_jet_spectral_fallback():
    # no 'higher' supplied: derivatives beyond U'' come from spectral differentiation
    def f(y):
        y = np.asarray(y, float)
        return np.cos(y) - np.cos(1), -np.sin(y), -np.cos(y)
    y = np.linspace(-0.9, 0.9, 7)
    j = Profile(f).jet(y, 4)
    assert np.max(np.abs(j[3] - np.sin(y))) < 1e-10
    assert np.max(np.abs(j[4] - np.cos(y))) < 1e-9
