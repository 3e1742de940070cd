import numpy as np
import pytest

from conftest import liouville
from wsurf.core import invariants_from_nu, prescribed_grid
from wsurf.pde import canonical_rhs
from wsurf.reconstruct import Frame, SurfaceGrid, boost, cylinder_exact, integrate_frame, rotation
from wsurf.verify import (
    compare_curvatures,
    forms_from_mesh,
    gauss_codazzi_residual,
    invariants_from_mesh,
    mesh_normal,
    report_json,
    residual_fields,
    verification_report,
)


def exact_cylinder(n):
    x = np.linspace(0, 1, n)
    U, V = np.meshgrid(x, x, indexing="ij")
    z, X, Y, l = cylinder_exact(U, V)
    return SurfaceGrid(z, X, Y, l, x[1] - x[0], x[1] - x[0])


def class1_surface(n):
    red = canonical_rhs(1).reduction
    ch = red.chart((0.1, 0.7), (0.1, 0.7), n, n)
    U, V = ch.mesh()
    nu = red.nu_field(liouville(U, V))
    g = invariants_from_nu(ch, red.pair(), nu)
    return integrate_frame(g, Frame.standard(), chart=ch), red.pair(), nu


def test_forms_of_exact_cylinder():
    ff = forms_from_mesh(exact_cylinder(33))
    h2 = (1 / 32) ** 2
    assert np.allclose(ff.E, 1, atol=2 * h2) and np.allclose(ff.G, 1, atol=1e-12)
    assert np.max(np.abs(ff.F)) < 1e-12 and np.max(np.abs(ff.M)) < 1e-12
    assert np.allclose(ff.L, -1, atol=2 * h2) and np.max(np.abs(ff.N)) < 1e-10
    assert ff.is_spacelike()


def test_plane_is_exact():
    x = np.linspace(-1, 1, 9)
    U, V = np.meshgrid(x, x, indexing="ij")
    z = np.stack([U, V, 0 * U], -1)
    one = np.ones_like(z)
    s = SurfaceGrid(z, one * [1, 0, 0], one * [0, 1, 0], one * [0, 0, 1], 0.25, 0.25)
    ff = forms_from_mesh(s)
    assert np.allclose(ff.E, 1, atol=1e-14) and np.allclose(ff.G, 1, atol=1e-14)
    for k in ("F", "L", "M", "N"):
        assert np.max(np.abs(getattr(ff, k))) < 1e-13
    assert np.allclose(mesh_normal(s), [0, 0, 1])


def test_forms_need_five_nodes():
    with pytest.raises(ValueError):
        forms_from_mesh(exact_cylinder(4))
    with pytest.raises(ValueError):
        forms_from_mesh(exact_cylinder(9), normal="bogus")


def test_cross_normal_matches_stored():
    s, _, _ = class1_surface(33)
    n = mesh_normal(s)
    assert np.max(np.abs(n - s.l)) < 1e-2
    assert np.allclose(n[..., 0] ** 2 + n[..., 1] ** 2 - n[..., 2] ** 2, -1)


def test_F_M_decay_second_order():
    reps = [verification_report(class1_surface(n)[0]) for n in (33, 65)]
    for k in ("F_max", "M_max", "gauss_max", "codazzi1_max", "codazzi2_max"):
        assert 3.0 < reps[0][k] / reps[1][k] < 5.5, k


def test_constant_invariants_residual_zero():
    g = prescribed_grid((9, 9), 0.1, 0.1, nu1=-1.0, nu2=0.0)
    c1, c2, gs = gauss_codazzi_residual(g)
    assert np.max(np.abs(c1)) == 0 and np.max(np.abs(c2)) == 0
    # constant data with nu1 nu2 = 0 satisfies Gauss exactly
    assert np.max(np.abs(gs)) == 0


def test_gamma2_shift_shows_in_residuals():
    g = prescribed_grid((9, 9), 0.1, 0.1, nu1=2.0, nu2=-1.0, gamma2=0.3)
    _, _, base = gauss_codazzi_residual(g)
    for delta in (1e-3, 0.05, -0.2):
        _, c2, gs = gauss_codazzi_residual(g.copy(gamma2=g.gamma2 + delta))
        assert np.allclose(gs - base, 2 * 0.3 * delta + delta**2, atol=1e-14)
        assert np.allclose(c2, 0.3 + delta, atol=1e-14)


def test_invariants_from_mesh_roundtrip():
    s, pair, nu = class1_surface(65)
    g = invariants_from_mesh(s)
    inner = (slice(8, -8), slice(8, -8))
    assert np.max(np.abs(g.nu1[inner] - pair.f(nu)[inner])) < 5e-3
    assert np.max(np.abs(g.nu2[inner] - pair.g(nu)[inner])) < 5e-3


@pytest.mark.parametrize("M", [boost(0.8, 0) @ rotation(1.1), boost(-0.4, 1)])
def test_compare_curvatures_motion_invariant(M):
    s, pair, nu = class1_surface(33)
    a = compare_curvatures(s, pair, nu)
    b = compare_curvatures(s.transformed(M, (1.0, 2.0, -3.0)), pair, nu)
    for k in a:
        assert a[k] == pytest.approx(b[k], rel=1e-6, abs=1e-12)


def test_curvature_deviation_decays():
    devs = []
    for n in (33, 65):
        s, pair, nu = class1_surface(n)
        devs.append(compare_curvatures(s, pair, nu)["nu1_dev"])
    assert 3.0 < devs[0] / devs[1] < 5.5


def test_report_keys_and_json():
    s, pair, nu = class1_surface(17)
    rep = verification_report(s, pair, nu)
    for k in ("codazzi1_max", "codazzi2_max", "gauss_max", "F_max", "M_max", "nu1_dev", "nu2_dev",
              "codazzi1_mean", "gauss_mean", "interior_frac"):
        assert k in rep
    assert verification_report(s)["nu1_dev"] is None
    assert '"gauss_max"' in report_json(rep)
    assert set(residual_fields(s)) == {"codazzi1", "codazzi2", "gauss", "F", "M"}


def test_swapped_pair_is_oriented():
    s, pair, nu = class1_surface(17)
    sw = pair.swap()
    a = compare_curvatures(s, pair, nu)
    b = compare_curvatures(s, sw, nu)
    assert a["nu1_dev"] == pytest.approx(b["nu1_dev"])
