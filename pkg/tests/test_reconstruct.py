import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import liouville
from wsurf import fd
from wsurf.core import NaturalChart, invariants_from_nu, minkowski_dot, prescribed_grid
from wsurf.errors import CompatibilityError, FrameDriftError, ParamError
from wsurf.fd import fitted_order
from wsurf.pde import canonical_rhs
from wsurf.reconstruct import (
    Frame,
    Mode,
    align_to,
    boost,
    check_compatibility,
    cylinder_exact,
    cylinder_fixture,
    integrate_frame,
    path_independence,
    rotation,
)

CYL0 = Frame((0, 0, 1), (1, 0, 0), (0, 1, 0), (0, 0, 1))


def class1_grid(n, lo=-0.5, hi=0.5):
    red = canonical_rhs(1).reduction
    ch = red.chart((lo, hi), (lo, hi), n, n)
    U, V = ch.mesh()
    return invariants_from_nu(ch, red.pair(), red.nu_field(liouville(U, V))), ch


def cylinder_error(n):
    g = cylinder_fixture(n_u=n, n_v=n)
    s = integrate_frame(g, Frame.standard())
    s = align_to(s, CYL0)
    U, V = np.meshgrid(np.linspace(0, 1, n), np.linspace(0, 1, n), indexing="ij")
    z, X, Y, l = cylinder_exact(U, V)
    return np.max(np.abs(s.z - z)), np.max(np.abs(s.l - l)), s


def test_cylinder_second_order_after_alignment():
    e1, _, s1 = cylinder_error(17)
    e2, le2, s2 = cylinder_error(33)
    assert 3.5 < e1 / e2 < 4.5
    assert le2 < 1e-3
    assert s1.gram_defect() < 1e-9 and s2.gram_defect() < 1e-9


def test_cylinder_rk4_is_more_accurate():
    g = cylinder_fixture(n_u=17, n_v=17)
    s = align_to(integrate_frame(g, Frame.standard(), method="rk4"), CYL0)
    U, V = np.meshgrid(np.linspace(0, 1, 17), np.linspace(0, 1, 17), indexing="ij")
    assert np.max(np.abs(s.z - cylinder_exact(U, V)[0])) < 1e-5


def test_single_node_returns_initial_frame():
    g = prescribed_grid((1, 1), 0.1, 0.1, nu1=-1.0, nu2=0.0)
    f = Frame((1, 2, 3), (1, 0, 0), (0, 1, 0), (0, 0, 1))
    s = integrate_frame(g, f)
    assert s.shape == (1, 1)
    assert np.array_equal(s.z[0, 0], f.z) and np.array_equal(s.l[0, 0], f.l)


def test_initial_frame_validation():
    g = cylinder_fixture(n_u=5, n_v=5)
    with pytest.raises(ParamError):
        integrate_frame(g, Frame((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 2)))
    with pytest.raises(ParamError):
        integrate_frame(g, Frame((0, 0, 0), (0, 1, 0), (1, 0, 0), (0, 0, 1)))
    with pytest.raises(ParamError):
        integrate_frame(g, Frame.standard(), method="euler")


def test_gamma1_zero_mode():
    g = cylinder_fixture(n_u=9, n_v=9)
    s = integrate_frame(g, Frame.standard(), mode=Mode.GAMMA1_ZERO)
    assert s.meta["mode"] == "GAMMA1_ZERO"
    g2 = g.copy(gamma1=0.1 + 0 * g.gamma1)
    with pytest.raises(ParamError):
        integrate_frame(g2, Frame.standard(), mode="GAMMA1_ZERO")


def test_frame_drift_error():
    # a huge step blows the pre-renormalization Gram defect
    g = prescribed_grid((5, 5), 2.0, 2.0, nu1=-3.0, nu2=1.0)
    with pytest.raises(FrameDriftError):
        integrate_frame(g, Frame.standard())


@settings(max_examples=15, deadline=None)
@given(st.floats(-1.5, 1.5), st.floats(-np.pi, np.pi), st.integers(0, 1))
def test_motion_equivariance(r, th, axis):
    g, _ = class1_grid(9)
    M = boost(r, axis) @ rotation(th)
    t = np.array([0.3, -1.0, 2.0])
    f0 = Frame.standard()
    f1 = Frame(M @ f0.z + t, M @ f0.X, M @ f0.Y, M @ f0.l)
    a = integrate_frame(g, f0).transformed(M, t)
    b = integrate_frame(g, f1)
    scale = np.cosh(r) ** 2
    assert np.max(np.abs(a.z - b.z)) < 1e-10 * scale * 10
    assert np.max(np.abs(a.l - b.l)) < 1e-10 * scale * 10


def test_boost_is_lorentz():
    M = boost(0.7, 1)
    S = np.diag([1.0, 1.0, -1.0])
    assert np.allclose(M.T @ S @ M, S) and np.linalg.det(M) == pytest.approx(1.0)


def test_first_fundamental_form_matches_E_G():
    errs, hs = [], []
    for n in (33, 65):
        g, _ = class1_grid(n)
        s = integrate_frame(g, Frame.standard())
        zu, zv = fd.du(s.z, g.h_u), fd.dv(s.z, g.h_v)
        # one-sided stencils on the outer rings are only first order
        e = [minkowski_dot(zu, zu) - g.E, minkowski_dot(zv, zv) - g.G, minkowski_dot(zu, zv)]
        errs.append(max(np.max(np.abs(fd.interior(x, 2))) for x in e))
        hs.append(g.h_u)
    assert errs[1] < 1e-4
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_path_independence_order_and_plateau():
    hs, clean, dirty = [], [], []
    for n in (17, 33, 65):
        g, ch = class1_grid(n)
        U, V = ch.mesh()
        hs.append(g.h_u)
        clean.append(path_independence(g, Frame.standard()))
        blob = np.exp(-(U**2 + V**2) / 0.02)
        dirty.append(path_independence(g.copy(nu1=g.nu1 * (1 + 0.1 * blob)), Frame.standard()))
    assert 1.7 < fitted_order(hs, clean) < 2.3
    assert min(dirty) > 0.5 * max(dirty) and dirty[-1] > 10 * clean[-1]


def test_path_independence_cylinder_tiny():
    assert path_independence(cylinder_fixture(n_u=17, n_v=17), Frame.standard()) < 1e-3


def test_path_tol_raises():
    g, ch = class1_grid(17)
    U, V = ch.mesh()
    bad = g.copy(gamma2=g.gamma2 + 0.5)
    with pytest.raises(CompatibilityError):
        integrate_frame(bad, Frame.standard(), path_tol=1e-2)
    s = integrate_frame(g, Frame.standard(), path_tol=1.0)
    assert s.meta["path_discrepancy"] < 1.0


def test_compatibility_cylinder_gamma1_zero():
    rep = check_compatibility(cylinder_fixture(n_u=9, n_v=9), gamma1_zero=True)
    assert rep.passed and rep.gauss == 0.0


def test_compatibility_class1_and_sign_flip():
    # off the symmetry lines of the Liouville solution, where (nu1)_v vanishes
    g, _ = class1_grid(33, 0.1, 0.7)
    rep = check_compatibility(g, tol=5e-2)
    assert rep.cond1_fail_nodes == 0
    assert max(rep.cond21_u, rep.cond21_v, rep.cond22, rep.gauss) < 5e-2
    flipped = check_compatibility(g.copy(gamma1=-g.gamma1), tol=5e-2)
    assert not flipped.passed and flipped.cond1_fail_nodes > 0
    d = flipped.to_dict()
    assert "cond1_mask" not in d and d["passed"] is False


def test_compatibility_gauss_decays():
    errs, hs = [], []
    for n in (17, 33, 65):
        g, _ = class1_grid(n)
        errs.append(check_compatibility(g, strongly_regular=False).gauss)
        hs.append(g.h_u)
    assert 1.7 < fitted_order(hs, errs) < 2.3
