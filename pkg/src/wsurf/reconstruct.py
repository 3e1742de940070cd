"""Moving-frame reconstruction of a space-like surface from its invariants.

Along u the frame (z, X, Y, l) obeys::

    z_u = sqrt(E) X            X_u = sqrt(E) (gamma1 Y - nu1 l)
    Y_u = -sqrt(E) gamma1 X    l_u = -sqrt(E) nu1 X

and along v::

    z_v = sqrt(G) Y            X_v = sqrt(G) gamma2 Y
    Y_v = -sqrt(G) (gamma2 X + nu2 l)    l_v = -sqrt(G) nu2 Y

We sweep u along the first grid row, then v up every column (all columns at
once). Each step is followed by a Gram-Schmidt pass in signature (2, 1).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import fd
from .core import InvariantGrid, NaturalChart, SIGNATURE, minkowski_dot
from .errors import CompatibilityError, FrameDriftError, ParamError


class Mode(str, enum.Enum):
    STRONGLY_REGULAR = "STRONGLY_REGULAR"
    GAMMA1_ZERO = "GAMMA1_ZERO"
    PRESCRIBED = "PRESCRIBED"


@dataclass
class Frame:
    """Position and Minkowski-orthonormal frame at one point."""

    z: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    l: np.ndarray

    def __post_init__(self):
        for k in ("z", "X", "Y", "l"):
            setattr(self, k, np.asarray(getattr(self, k), dtype=float).reshape(3))

    def matrix(self):
        """Columns X, Y, l."""
        return np.column_stack([self.X, self.Y, self.l])

    def gram(self):
        M = self.matrix()
        return M.T @ SIGNATURE @ M

    def is_orthonormal(self, tol=1e-9):
        return bool(np.max(np.abs(self.gram() - SIGNATURE)) < tol)

    def orientation(self):
        return float(np.linalg.det(self.matrix()))

    @classmethod
    def standard(cls, z=(0.0, 0.0, 0.0)):
        return cls(z, (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))

    def to_dict(self):
        return {k: getattr(self, k).tolist() for k in ("z", "X", "Y", "l")}


@dataclass
class SurfaceGrid:
    """Immersion z and frames X, Y, l on a (u, v) grid; arrays of shape (n_u, n_v, 3)."""

    z: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    l: np.ndarray
    h_u: float
    h_v: float
    origin: tuple = (0.0, 0.0)
    chart: Optional[NaturalChart] = None
    meta: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.z.shape[:2]

    def frame(self, i, j) -> Frame:
        return Frame(self.z[i, j], self.X[i, j], self.Y[i, j], self.l[i, j])

    def gram_defect(self):
        """max over nodes of |Gram(X, Y, l) - diag(1, 1, -1)|."""
        return float(np.max(_gram_defect(self.X, self.Y, self.l))) if self.z.size else 0.0

    def transformed(self, M, t=(0.0, 0.0, 0.0)) -> "SurfaceGrid":
        """Image under the motion x -> M x + t."""
        M = np.asarray(M, dtype=float)
        t = np.asarray(t, dtype=float)
        return SurfaceGrid(self.z @ M.T + t, self.X @ M.T, self.Y @ M.T, self.l @ M.T,
                           self.h_u, self.h_v, self.origin, self.chart, dict(self.meta))

    def to_dict(self):
        return {
            "h_u": self.h_u, "h_v": self.h_v, "origin": list(self.origin),
            "z": self.z.tolist(), "X": self.X.tolist(), "Y": self.Y.tolist(), "l": self.l.tolist(),
        }


def _gram_defect(X, Y, l):
    d = [
        np.abs(minkowski_dot(X, X) - 1.0),
        np.abs(minkowski_dot(Y, Y) - 1.0),
        np.abs(minkowski_dot(l, l) + 1.0),
        np.abs(minkowski_dot(X, Y)),
        np.abs(minkowski_dot(X, l)),
        np.abs(minkowski_dot(Y, l)),
    ]
    return np.max(np.stack(d), axis=0)


def renormalize(X, Y, l):
    """Gram-Schmidt for signature (2, 1): X, Y space-like first, then l."""
    X = X / np.sqrt(minkowski_dot(X, X))[..., None]
    Y = Y - minkowski_dot(Y, X)[..., None] * X
    Y = Y / np.sqrt(minkowski_dot(Y, Y))[..., None]
    l = l - minkowski_dot(l, X)[..., None] * X - minkowski_dot(l, Y)[..., None] * Y
    l = l / np.sqrt(np.abs(minkowski_dot(l, l)))[..., None]
    return X, Y, l


# ---------------------------------------------------------------------------
# right-hand sides of the frame system; coefficient arrays broadcast over rows


def _rhs_u(S, sE, g1, n1):
    z, X, Y, l = S
    sE, g1, n1 = (np.asarray(c)[..., None] for c in (sE, g1, n1))
    return (sE * X, sE * (g1 * Y - n1 * l), -sE * g1 * X, -sE * n1 * X)


def _rhs_v(S, sG, g2, n2):
    z, X, Y, l = S
    sG, g2, n2 = (np.asarray(c)[..., None] for c in (sG, g2, n2))
    return (sG * Y, sG * g2 * Y, -sG * (g2 * X + n2 * l), -sG * n2 * Y)


def _step(S, h, rhs, c0, c1, method, drift_tol, stats):
    """One step from node coefficients c0 to c1 (each a tuple of arrays)."""
    add = lambda S, K, t: tuple(s + t * k for s, k in zip(S, K))
    if method == "heun":
        k1 = rhs(S, *c0)
        k2 = rhs(add(S, k1, h), *c1)
        new = tuple(s + 0.5 * h * (a + b) for s, a, b in zip(S, k1, k2))
    elif method == "rk4":
        cm = tuple(0.5 * (a + b) for a, b in zip(c0, c1))  # linear interpolation
        k1 = rhs(S, *c0)
        k2 = rhs(add(S, k1, h / 2), *cm)
        k3 = rhs(add(S, k2, h / 2), *cm)
        k4 = rhs(add(S, k3, h), *c1)
        new = tuple(s + h / 6 * (a + 2 * b + 2 * c + d) for s, a, b, c, d in zip(S, k1, k2, k3, k4))
    else:
        raise ParamError(f"unknown integrator {method!r}")
    z, X, Y, l = new
    drift = float(np.max(_gram_defect(X, Y, l)))
    stats["max_drift"] = max(stats.get("max_drift", 0.0), drift)
    if drift > drift_tol:
        raise FrameDriftError(f"frame drift {drift:.3g} exceeds {drift_tol:g} in one step")
    X, Y, l = renormalize(X, Y, l)
    return z, X, Y, l


def _coeffs(grid: InvariantGrid):
    cu = (np.sqrt(grid.E), grid.gamma1, grid.nu1)
    cv = (np.sqrt(grid.G), grid.gamma2, grid.nu2)
    return cu, cv


def _sweep(grid, initial: Frame, order, method, drift_tol, stats):
    """Integrate along the first axis of ``order`` then the second."""
    n_u, n_v = grid.shape
    cu, cv = _coeffs(grid)
    out = np.empty((4, n_u, n_v, 3))
    S0 = (initial.z, initial.X, initial.Y, initial.l)
    if order == "uv":
        out[:, 0, 0] = S0
        S = S0
        for i in range(n_u - 1):
            S = _step(S, grid.h_u, _rhs_u, tuple(c[i, 0] for c in cu), tuple(c[i + 1, 0] for c in cu),
                      method, drift_tol, stats)
            out[:, i + 1, 0] = S
        S = tuple(out[k, :, 0] for k in range(4))
        for j in range(n_v - 1):
            S = _step(S, grid.h_v, _rhs_v, tuple(c[:, j] for c in cv), tuple(c[:, j + 1] for c in cv),
                      method, drift_tol, stats)
            for k in range(4):
                out[k, :, j + 1] = S[k]
    else:
        out[:, 0, 0] = S0
        S = S0
        for j in range(n_v - 1):
            S = _step(S, grid.h_v, _rhs_v, tuple(c[0, j] for c in cv), tuple(c[0, j + 1] for c in cv),
                      method, drift_tol, stats)
            out[:, 0, j + 1] = S
        S = tuple(out[k, 0, :] for k in range(4))
        for i in range(n_u - 1):
            S = _step(S, grid.h_u, _rhs_u, tuple(c[i, :] for c in cu), tuple(c[i + 1, :] for c in cu),
                      method, drift_tol, stats)
            for k in range(4):
                out[k, i + 1, :] = S[k]
    return out


def _check_initial(initial: Frame, tol=1e-9):
    if not initial.is_orthonormal(tol):
        raise ParamError("initial frame is not Minkowski-orthonormal")
    if initial.orientation() <= 0:
        raise ParamError("initial frame is not positively oriented (det[X Y l] <= 0)")


def integrate_frame(invariants: InvariantGrid, initial: Frame, mode=Mode.STRONGLY_REGULAR,
                    method: str = "heun", drift_tol: float = 1e-3, path_tol: Optional[float] = None,
                    chart: Optional[NaturalChart] = None) -> SurfaceGrid:
    """Integrate the frame equations over the grid of ``invariants``.

    ``method`` is ``"heun"`` (default; uses nodal coefficients only) or
    ``"rk4"`` (coefficients interpolated linearly to half steps). With
    ``path_tol`` set, the u-then-v and v-then-u results are compared at the
    far corner and CompatibilityError is raised above the tolerance.
    """
    mode = Mode(mode)
    _check_initial(initial)
    if mode is Mode.GAMMA1_ZERO and np.max(np.abs(invariants.gamma1)) > 1e-12:
        raise ParamError("GAMMA1_ZERO mode needs gamma1 == 0")
    n_u, n_v = invariants.shape if invariants.nu1.ndim == 2 else (0, 0)
    if n_u * n_v <= 1:
        one = lambda v: np.asarray(v, float).reshape(1, 1, 3)
        return SurfaceGrid(one(initial.z), one(initial.X), one(initial.Y), one(initial.l),
                           invariants.h_u, invariants.h_v, invariants.origin, chart,
                           {"mode": mode.value, "max_drift": 0.0})
    stats = {}
    out = _sweep(invariants, initial, "uv", method, drift_tol, stats)
    meta = {"mode": mode.value, "method": method, "max_drift": stats.get("max_drift", 0.0)}
    if path_tol is not None:
        d = path_independence(invariants, initial, method=method)
        meta["path_discrepancy"] = d
        if d > path_tol:
            raise CompatibilityError(f"path discrepancy {d:.3g} exceeds {path_tol:g}")
    return SurfaceGrid(out[0], out[1], out[2], out[3], invariants.h_u, invariants.h_v,
                       invariants.origin, chart, meta)


def path_independence(invariants: InvariantGrid, initial: Frame, method="heun") -> float:
    """Max over nodes of the gap between u-then-v and v-then-u integration.

    At node (i, j) the two paths bound the rectangle [0, i] x [0, j], so an
    incompatibility anywhere in the grid shows up at some node. (The far
    corner alone is blind to corruption supported away from the boundary.)
    The gap is the Euclidean norm of the stacked differences of z, X, Y, l;
    the Minkowski norm vanishes on null differences.
    """
    n_u, n_v = invariants.shape
    if n_u * n_v <= 1:
        return 0.0
    stats = {}
    a = _sweep(invariants, initial, "uv", method, np.inf, stats)
    b = _sweep(invariants, initial, "vu", method, np.inf, stats)
    gap = np.sqrt(np.sum((a - b) ** 2, axis=(0, 3)))
    return float(gap.max())


# ---------------------------------------------------------------------------
# compatibility


@dataclass
class CompatibilityReport:
    cond1_violation: float
    cond1_fail_nodes: int
    cond1_mask: np.ndarray
    cond21_u: float
    cond21_v: float
    cond22: float
    gauss: float
    passed: bool
    tol: float

    def to_dict(self):
        return {k: (int(v) if isinstance(v, (bool, np.bool_)) and k != "passed" else v)
                for k, v in self.__dict__.items() if k != "cond1_mask"}


def check_compatibility(grid: InvariantGrid, strongly_regular: bool = True, gamma1_zero: bool = False,
                        tol: float = 1e-3) -> CompatibilityReport:
    """Sign conditions and the integrability equations on interior nodes.

    Residuals are taken two rings in from the boundary.
    Strongly regular data: gamma1 (nu1)_v > 0, gamma2 (nu2)_u > 0, the two
    log-derivative equations and the Gauss equation written in invariants.
    With ``gamma1_zero`` the only condition is (gamma2)_u/sqrt(E) + gamma2^2
    = nu1 nu2. With neither, the plain Gauss equation in E, G is reported.
    """
    hu, hv = grid.h_u, grid.h_v
    n1, n2, g1, g2 = grid.nu1, grid.nu2, grid.gamma1, grid.gamma2
    n1u, n1v = fd.du(n1, hu), fd.dv(n1, hv)
    n2u, n2v = fd.du(n2, hu), fd.dv(n2, hv)
    d = n1 - n2
    # nested differences: the first ring mixes one-sided and centered stencils
    i = lambda a: fd.interior(a, 2)
    gauss_full = (fd.du(g2, hu) / np.sqrt(grid.E) - fd.dv(g1, hv) / np.sqrt(grid.G)
                  + g1**2 + g2**2 - n1 * n2)
    gauss = float(np.max(np.abs(i(gauss_full))))
    nan = float("nan")
    mask = np.zeros(grid.shape, dtype=bool)
    if gamma1_zero:
        r = fd.du(g2, hu) / np.sqrt(grid.E) + g2**2 - n1 * n2
        gauss = float(np.max(np.abs(i(r))))
        viol = 0.0 if np.max(np.abs(g1)) < 1e-12 else float(np.max(np.abs(g1)))
        passed = gauss < tol and viol == 0.0
        return CompatibilityReport(viol, int(viol > 0), mask, nan, nan, nan, gauss, passed, tol)
    if not strongly_regular:
        return CompatibilityReport(0.0, 0, mask, nan, nan, nan, gauss, gauss < tol, tol)
    s1 = g1 * n1v
    s2 = g2 * n2u
    mask = (s1 <= 0) | (s2 <= 0)
    viol = float(max(0.0, -np.min(s1), -np.min(s2))) if mask.any() else 0.0
    with np.errstate(all="ignore"):
        r1 = fd.du(np.log(n1v / g1), hu) - n1u / d
        r2 = fd.dv(np.log(n2u / g2), hv) + n2v / d
        r3 = 0.5 * d * (fd.du(g2**2, hu) / n2u - fd.dv(g1**2, hv) / n1v) + g1**2 + g2**2 - n1 * n2
    c21u = float(np.nanmax(np.abs(i(r1)))) if np.isfinite(i(r1)).any() else nan
    c21v = float(np.nanmax(np.abs(i(r2)))) if np.isfinite(i(r2)).any() else nan
    c22 = float(np.nanmax(np.abs(i(r3)))) if np.isfinite(i(r3)).any() else nan
    passed = (not mask.any()) and all(np.isfinite(x) and x < tol for x in (c21u, c21v, c22))
    return CompatibilityReport(viol, int(mask.sum()), mask, c21u, c21v, c22, gauss, bool(passed), tol)


# ---------------------------------------------------------------------------
# alignment


def motion_between(src: Frame, dst: Frame):
    """Minkowski motion (M, t) taking frame ``src`` to ``dst``."""
    A = src.matrix()
    B = dst.matrix()
    M = B @ np.linalg.inv(A)
    t = dst.z - M @ src.z
    return M, t


def align_to(surface: SurfaceGrid, target: Frame, node=(0, 0)) -> SurfaceGrid:
    """Rigidly move ``surface`` so that its frame at ``node`` becomes ``target``."""
    M, t = motion_between(surface.frame(*node), target)
    return surface.transformed(M, t)


def boost(rapidity: float, axis: int = 0):
    """Orientation-preserving Lorentz boost mixing axis (0 or 1) with the time axis."""
    c, s = np.cosh(rapidity), np.sinh(rapidity)
    M = np.eye(3)
    M[axis, axis] = c
    M[axis, 2] = s
    M[2, axis] = s
    M[2, 2] = c
    return M


def rotation(theta: float):
    """Rotation in the space-like (e1, e2) plane."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def cylinder_fixture(u_range=(0.0, 1.0), v_range=(0.0, 1.0), n_u=33, n_v=33):
    """Invariants of z = (sinh u, v, cosh u): nu1 = -1, nu2 = 0, gamma = 0, E = G = 1."""
    from .core import prescribed_grid

    h_u = (u_range[1] - u_range[0]) / (n_u - 1)
    h_v = (v_range[1] - v_range[0]) / (n_v - 1)
    grid = prescribed_grid((n_u, n_v), h_u, h_v, nu1=-1.0, nu2=0.0,
                           origin=(u_range[0], v_range[0]))
    return grid


def cylinder_exact(U, V):
    z = np.stack([np.sinh(U), V, np.cosh(U)], axis=-1)
    X = np.stack([np.cosh(U), 0 * U, np.sinh(U)], axis=-1)
    Y = np.stack([0 * U, 1 + 0 * U, 0 * U], axis=-1)
    l = np.stack([np.sinh(U), 0 * U, np.cosh(U)], axis=-1)
    return z, X, Y, l
