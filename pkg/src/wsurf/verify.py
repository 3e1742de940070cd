"""Independent checks of a reconstructed mesh.

Fundamental forms are recovered from z by finite differences; curvatures and
geodesic curvatures follow from them, and are compared with the Weingarten
data and with the Gauss and Codazzi equations. Nothing here reuses the
frame-integration coefficients.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import fd
from .core import InvariantGrid, WeingartenPair, invariants_from_forms, lorentz_cross, minkowski_dot
from .reconstruct import SurfaceGrid

# Rings dropped from reported maxima. Edge columns of a reconstructed mesh
# carry one-sided errors from the input invariants, which second differences
# of z amplify on the first ring; Codazzi adds one difference, Gauss two.
RING_FORMS = 2
RING_CODAZZI = 3
RING_GAUSS = 4
# Reported maxima also skip this fraction of each side: errors in the far
# corner of the sweep decay at full order only on a fixed physical interior.
INTERIOR_FRAC = 0.125


@dataclass
class FormFields:
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    L: np.ndarray
    M: np.ndarray
    N: np.ndarray
    h_u: float = 1.0
    h_v: float = 1.0

    def is_spacelike(self):
        return bool(np.all(self.E > 0) and np.all(self.G > 0) and np.all(self.E * self.G - self.F**2 > 0))


def mesh_normal(surface: SurfaceGrid):
    """Unit time-like normal rebuilt from z_u x_L z_v, oriented like X x Y."""
    zu = fd.du(surface.z, surface.h_u)
    zv = fd.dv(surface.z, surface.h_v)
    n = -lorentz_cross(zu, zv)
    return n / np.sqrt(np.abs(minkowski_dot(n, n)))[..., None]


def forms_from_mesh(surface: SurfaceGrid, normal: str = "stored") -> FormFields:
    """E, F, G, L, M, N of the mesh; ``normal`` is "stored" (frames) or "cross"."""
    if min(surface.shape) < 5:
        raise ValueError("forms_from_mesh needs at least 5x5 nodes")
    hu, hv = surface.h_u, surface.h_v
    z = surface.z
    zu, zv = fd.du(z, hu), fd.dv(z, hv)
    zuu, zvv = fd.duu(z, hu), fd.dvv(z, hv)
    zuv = fd.duv(z, hu, hv)
    if normal == "stored":
        l = surface.l
    elif normal == "cross":
        l = mesh_normal(surface)
    else:
        raise ValueError(f"unknown normal mode {normal!r}")
    d = minkowski_dot
    return FormFields(d(zu, zu), d(zu, zv), d(zv, zv), d(l, zuu), d(l, zuv), d(l, zvv), hu, hv)


def invariants_from_mesh(surface: SurfaceGrid, normal="stored") -> InvariantGrid:
    ff = forms_from_mesh(surface, normal)
    g = invariants_from_forms(ff.E, ff.F, ff.G, ff.L, ff.M, ff.N, ff.h_u, ff.h_v, tol=np.inf)
    g.origin = surface.origin
    return g


def gauss_codazzi_residual(grid: InvariantGrid):
    """Pointwise Codazzi residuals for gamma1, gamma2 and the Gauss residual.

    Fields have the full grid shape; values near the boundary use one-sided
    stencils and should be trimmed (see the RING_* constants).
    """
    hu, hv = grid.h_u, grid.h_v
    d = grid.nu1 - grid.nu2
    sE, sG = np.sqrt(grid.E), np.sqrt(grid.G)
    c1 = grid.gamma1 - fd.dv(grid.nu1, hv) / (sG * d)
    c2 = grid.gamma2 - fd.du(grid.nu2, hu) / (sE * d)
    gauss = (fd.du(grid.gamma2, hu) / sE - fd.dv(grid.gamma1, hv) / sG
             + grid.gamma1**2 + grid.gamma2**2 - grid.nu1 * grid.nu2)
    return c1, c2, gauss


def _stats(x, ring, frac=INTERIOR_FRAC):
    ring = max(ring, int(frac * min(x.shape[:2])))
    xi = np.abs(fd.interior(x, ring))
    return {"max": float(xi.max()), "mean": float(xi.mean()),
            "max_all": float(np.max(np.abs(x)))}


def compare_curvatures(surface: SurfaceGrid, pair: WeingartenPair, nu_field, normal="stored",
                       frac=INTERIOR_FRAC):
    """Deviation of L/E, N/G on the mesh from f(nu), g(nu)."""
    nu = np.asarray(nu_field, dtype=float)
    pair = pair.oriented(nu)
    ff = forms_from_mesh(surface, normal)
    d1 = ff.L / ff.E - pair.f(nu)
    d2 = ff.N / ff.G - pair.g(nu)
    s1, s2 = _stats(d1, RING_FORMS, frac), _stats(d2, RING_FORMS, frac)
    return {
        "nu1_dev": s1["max"], "nu2_dev": s2["max"],
        "nu1_dev_mean": s1["mean"], "nu2_dev_mean": s2["mean"],
        "nu1_dev_all": s1["max_all"], "nu2_dev_all": s2["max_all"],
    }


def verification_report(surface: SurfaceGrid, pair: WeingartenPair = None, nu_field=None,
                        normal="stored", frac=INTERIOR_FRAC) -> dict:
    """Mesh-only report: Gauss-Codazzi on recovered invariants, F, M, curvature deviation."""
    ff = forms_from_mesh(surface, normal)
    g = invariants_from_forms(ff.E, ff.F, ff.G, ff.L, ff.M, ff.N, ff.h_u, ff.h_v, tol=np.inf)
    c1, c2, gs = gauss_codazzi_residual(g)
    sc1, sc2 = _stats(c1, RING_CODAZZI, frac), _stats(c2, RING_CODAZZI, frac)
    sg = _stats(gs, RING_GAUSS, frac)
    rep = {
        "codazzi1_max": sc1["max"],
        "codazzi2_max": sc2["max"],
        "gauss_max": sg["max"],
        "codazzi1_mean": sc1["mean"],
        "codazzi2_mean": sc2["mean"],
        "gauss_mean": sg["mean"],
        "F_max": _stats(ff.F, RING_FORMS, frac)["max"],
        "M_max": _stats(ff.M, RING_FORMS, frac)["max"],
        "F_max_all": float(np.max(np.abs(ff.F))),
        "M_max_all": float(np.max(np.abs(ff.M))),
        "nu1_dev": None,
        "nu2_dev": None,
        "h_u": surface.h_u,
        "h_v": surface.h_v,
    }
    if pair is not None and nu_field is not None:
        rep.update(compare_curvatures(surface, pair, nu_field, normal, frac))
    rep["interior_frac"] = frac
    return rep


def residual_fields(surface: SurfaceGrid):
    """Named residual fields, for CSV export."""
    ff = forms_from_mesh(surface)
    g = invariants_from_forms(ff.E, ff.F, ff.G, ff.L, ff.M, ff.N, ff.h_u, ff.h_v, tol=np.inf)
    c1, c2, gs = gauss_codazzi_residual(g)
    return {"codazzi1": c1, "codazzi2": c2, "gauss": gs, "F": ff.F, "M": ff.M}


def report_json(rep: dict) -> str:
    return json.dumps(rep, indent=2, default=_jsonable)


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if hasattr(x, "__dataclass_fields__"):
        return asdict(x)
    raise TypeError(type(x))
