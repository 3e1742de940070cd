"""Minkowski linear algebra, Weingarten quadratures and natural-chart invariants.

Conventions used throughout the package:

* Vectors live in R^3 with the product <a, b> = a1 b1 + a2 b2 - a3 b3.
* Grids are indexed ``[i, j]`` with i along u, j along v.
* A Weingarten pair (f, g) gives the principal curvatures nu1 = f(nu),
  nu2 = g(nu). We always work with nu1 - nu2 > 0; pairs with f - g < 0 are
  swapped and the swap is recorded.
* Natural principal parameters: E = a^-2 exp(-2 I(nu)), G = b^-2 exp(-2 J(nu))
  where I' = f'/(f - g), J' = g'/(g - f), I(nu0) = J(nu0) = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
import sympy as sp

from . import expr as ex
from . import fd
from .errors import DomainError, NotPrincipalError, ParamError

SIGNATURE = np.diag([1.0, 1.0, -1.0])

# Gauss-Legendre rule used for every sub-interval of the quadrature table.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def minkowski_dot(a, b):
    """Lorentzian product along the last axis; broadcasts over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1] - a[..., 2] * b[..., 2]


def minkowski_norm2(a):
    return minkowski_dot(a, a)


def lorentz_cross(a, b):
    """Vector n with <n, w> = det[a b w] for all w."""
    return np.cross(a, b) @ SIGNATURE


# ---------------------------------------------------------------------------
# Weingarten pairs


class WeingartenPair:
    """Weingarten functions f, g of one variable nu, given as sympy expressions.

    ``domain`` is the open interval of admissible nu. Values and first/second
    derivatives are compiled once; the quadrature integrands I', J' and their
    derivatives are exact.
    """

    def __init__(self, f, g, domain=(-np.inf, np.inf), name: str = "", swapped: bool = False):
        self.f_expr = ex.parse(f)
        self.g_expr = ex.parse(g)
        lo, hi = float(domain[0]), float(domain[1])
        if not lo < hi:
            raise ParamError(f"empty domain {domain}")
        self.domain = (lo, hi)
        self.name = name
        self.swapped = swapped
        nu = ex.NU
        fp = sp.diff(self.f_expr, nu)
        gp = sp.diff(self.g_expr, nu)
        d = self.f_expr - self.g_expr
        ip = fp / d
        jp = -gp / d
        self.fp_expr, self.gp_expr = fp, gp
        self.Ip_expr, self.Jp_expr = ip, jp
        c = ex.compile_expr
        self.f = c(self.f_expr)
        self.g = c(self.g_expr)
        self.fp = c(fp)
        self.gp = c(gp)
        self.dI = c(ip)
        self.dJ = c(jp)
        self.d2I = c(sp.diff(ip, nu))
        self.d2J = c(sp.diff(jp, nu))

    @classmethod
    def from_text(cls, f: str, g: str, domain=(-np.inf, np.inf), name=""):
        return cls(f, g, domain=domain, name=name)

    def __repr__(self):
        tag = ", swapped" if self.swapped else ""
        return f"WeingartenPair(f={self.f_expr}, g={self.g_expr}, domain={self.domain}{tag})"

    def swap(self) -> "WeingartenPair":
        return WeingartenPair(self.g_expr, self.f_expr, self.domain, self.name, not self.swapped)

    def check_domain(self, nu):
        nu = np.asarray(nu, dtype=float)
        lo, hi = self.domain
        if not np.all(np.isfinite(nu)):
            raise DomainError("non-finite nu values")
        if nu.size and (nu.min() <= lo or nu.max() >= hi):
            raise DomainError(
                f"nu range [{nu.min():.6g}, {nu.max():.6g}] leaves the domain ({lo}, {hi})"
            )

    def tol_singular(self, nu):
        return 1e-8 * max(1.0, float(np.max(np.abs(self.f(nu)))))

    def validate(self, nu):
        """Sampling check of f - g != 0 and f' g' != 0. Returns sign of f - g."""
        nu = np.atleast_1d(np.asarray(nu, dtype=float))
        self.check_domain(nu)
        diff = self.f(nu) - self.g(nu)
        if np.min(np.abs(diff)) < self.tol_singular(nu):
            raise DomainError("f - g vanishes on the sampled range (umbilic points)")
        if np.min(np.abs(self.fp(nu) * self.gp(nu))) == 0.0:
            raise DomainError("f' g' vanishes on the sampled range")
        s = np.sign(diff)
        if not np.all(s == s.flat[0]):
            raise DomainError("f - g changes sign on the sampled range")
        return int(s.flat[0])

    def oriented(self, nu) -> "WeingartenPair":
        """Pair with f - g > 0 on the samples (swapping f and g if needed)."""
        s = self.validate(nu)
        return self if s > 0 else self.swap()


# ---------------------------------------------------------------------------
# Chart and grid types


@dataclass(frozen=True)
class NaturalChart:
    """Constants a, b, nu0 of a natural principal chart and its (u, v) grid."""

    a: float
    b: float
    nu0: float
    u_range: tuple = (0.0, 1.0)
    v_range: tuple = (0.0, 1.0)
    n_u: int = 33
    n_v: int = 33

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ParamError("chart constants a, b must be positive")
        if self.n_u < 3 or self.n_v < 3:
            raise ParamError("a chart grid needs at least 3 nodes per axis")
        if not (self.u_range[1] > self.u_range[0] and self.v_range[1] > self.v_range[0]):
            raise ParamError("chart ranges must be increasing intervals")

    @property
    def h_u(self) -> float:
        return (self.u_range[1] - self.u_range[0]) / (self.n_u - 1)

    @property
    def h_v(self) -> float:
        return (self.v_range[1] - self.v_range[0]) / (self.n_v - 1)

    @property
    def u(self):
        return np.linspace(self.u_range[0], self.u_range[1], self.n_u)

    @property
    def v(self):
        return np.linspace(self.v_range[0], self.v_range[1], self.n_v)

    def mesh(self):
        return np.meshgrid(self.u, self.v, indexing="ij")

    def refined(self, factor=2) -> "NaturalChart":
        return replace(self, n_u=(self.n_u - 1) * factor + 1, n_v=(self.n_v - 1) * factor + 1)

    def with_nodes(self, n_u, n_v=None) -> "NaturalChart":
        return replace(self, n_u=n_u, n_v=n_u if n_v is None else n_v)

    def to_dict(self):
        return {
            "a": self.a, "b": self.b, "nu0": self.nu0,
            "u_range": list(self.u_range), "v_range": list(self.v_range),
            "n_u": self.n_u, "n_v": self.n_v,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            a=float(d["a"]), b=float(d["b"]), nu0=float(d["nu0"]),
            u_range=tuple(d.get("u_range", (0.0, 1.0))),
            v_range=tuple(d.get("v_range", (0.0, 1.0))),
            n_u=int(d.get("n_u", 33)), n_v=int(d.get("n_v", 33)),
        )


@dataclass
class InvariantGrid:
    """Sampled nu1, nu2, gamma1, gamma2, E, G on a (u, v) grid."""

    nu1: np.ndarray
    nu2: np.ndarray
    gamma1: np.ndarray
    gamma2: np.ndarray
    E: np.ndarray
    G: np.ndarray
    h_u: float = 1.0
    h_v: float = 1.0
    nu: Optional[np.ndarray] = None
    nu0: Optional[float] = None
    origin: tuple = (0.0, 0.0)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        shape = np.shape(self.nu1)
        for name in ("nu2", "gamma1", "gamma2", "E", "G"):
            setattr(self, name, np.broadcast_to(np.asarray(getattr(self, name), float), shape).copy())
        self.nu1 = np.asarray(self.nu1, dtype=float)

    @property
    def shape(self):
        return self.nu1.shape

    @property
    def H(self):
        return 0.5 * (self.nu1 + self.nu2)

    @property
    def Hp(self):
        return 0.5 * (self.nu1 - self.nu2)

    @property
    def Kp(self):
        return self.nu1 * self.nu2

    @property
    def K(self):
        return -self.Kp

    def copy(self, **changes):
        d = {k: getattr(self, k) for k in ("nu1", "nu2", "gamma1", "gamma2", "E", "G", "nu")}
        d = {k: (None if v is None else np.array(v)) for k, v in d.items()}
        d.update(h_u=self.h_u, h_v=self.h_v, nu0=self.nu0, origin=self.origin, meta=dict(self.meta))
        d.update(changes)
        return InvariantGrid(**d)


@dataclass
class QuadratureResult:
    """I and J tabulated on a dense nu-table, evaluated exactly between nodes."""

    nu0: float
    table: np.ndarray
    I_table: np.ndarray
    J_table: np.ndarray
    dI: Callable
    dJ: Callable
    I: np.ndarray = None  # at the requested samples
    J: np.ndarray = None

    def _eval(self, x, vals, deriv):
        x = np.asarray(x, dtype=float)
        k = np.clip(np.searchsorted(self.table, x), 0, len(self.table) - 1)
        # step back where the left neighbour is closer
        left = np.clip(k - 1, 0, None)
        closer = np.abs(x - self.table[left]) < np.abs(x - self.table[k])
        k = np.where(closer, left, k)
        x0 = self.table[k]
        return vals[k] + _gl_integral(deriv, x0, x)

    def eval_I(self, x):
        return self._eval(x, self.I_table, self.dI)

    def eval_J(self, x):
        return self._eval(x, self.J_table, self.dJ)


def _gl_integral(fn, lo, hi):
    """Vectorised 10-point Gauss-Legendre integral of fn over [lo, hi]."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    pts = mid[..., None] + half[..., None] * _GL_X
    return half * np.sum(_GL_W * fn(pts), axis=-1)


def compute_IJ(pair: WeingartenPair, nu0: float, nu_samples, n_table: int = 2049) -> QuadratureResult:
    """Quadratures I = int f'/(f-g), J = int g'/(g-f) from nu0.

    The table spans the samples and nu0 (which is always a node). Each table
    cell is integrated by a 10-point Gauss-Legendre rule, so the tabulated
    values are accurate far beyond O(h^4); the requested samples are reached
    by one more Gauss-Legendre step from the nearest node.
    """
    samples = np.asarray(nu_samples, dtype=float)
    pair.check_domain(np.append(samples.ravel(), nu0))
    lo = min(float(samples.min()) if samples.size else nu0, nu0)
    hi = max(float(samples.max()) if samples.size else nu0, nu0)
    if hi > lo:
        n_lo = max(2, int(round((n_table - 1) * (nu0 - lo) / (hi - lo))) + 1) if nu0 > lo else 1
        n_hi = max(2, n_table - n_lo + 1) if hi > nu0 else 1
        left = np.linspace(lo, nu0, n_lo)
        right = np.linspace(nu0, hi, n_hi)
        table = np.concatenate([left, right[1:]])
    else:
        table = np.array([nu0])
    d = pair.f(table) - pair.g(table)
    tol = pair.tol_singular(table)
    if np.min(np.abs(d)) < tol or (len(table) > 1 and np.min(np.abs(_cell_mid_diff(pair, table))) < tol):
        raise DomainError("|f - g| below tol_singular on the quadrature range")
    k0 = int(np.argmin(np.abs(table - nu0)))
    I_tab = _cumulative(pair.dI, table, k0)
    J_tab = _cumulative(pair.dJ, table, k0)
    res = QuadratureResult(nu0=float(nu0), table=table, I_table=I_tab, J_table=J_tab,
                           dI=pair.dI, dJ=pair.dJ)
    res.I = res.eval_I(samples)
    res.J = res.eval_J(samples)
    return res


def _cell_mid_diff(pair, table):
    mid = 0.5 * (table[1:] + table[:-1])
    return pair.f(mid) - pair.g(mid)


def _cumulative(fn, table, k0):
    if len(table) == 1:
        return np.zeros(1)
    cells = _gl_integral(fn, table[:-1], table[1:])
    out = np.zeros_like(table)
    out[k0 + 1:] = np.cumsum(cells[k0:])
    out[:k0] = -np.cumsum(cells[:k0][::-1])[::-1]
    return out


def metric_from_chart(chart: NaturalChart, pair: WeingartenPair, nu_field, quad=None):
    """E = a^-2 exp(-2I(nu)), G = b^-2 exp(-2J(nu))."""
    nu = np.asarray(nu_field, dtype=float)
    q = quad if quad is not None else compute_IJ(pair, chart.nu0, nu)
    I = q.eval_I(nu)
    J = q.eval_J(nu)
    return np.exp(-2.0 * I) / chart.a**2, np.exp(-2.0 * J) / chart.b**2


def invariants_from_nu(chart: NaturalChart, pair: WeingartenPair, nu_field) -> InvariantGrid:
    """All invariants of the W-surface carried by the chart and the field nu.

    The pair is oriented first (f - g > 0). gamma1 = b e^J I_v and
    gamma2 = -a e^I J_u with I_v = I'(nu) nu_v etc.; the nu-derivatives are
    second-order finite differences, the I', J' factors are exact.
    """
    nu = np.asarray(nu_field, dtype=float)
    if nu.shape != (chart.n_u, chart.n_v):
        raise ParamError(f"nu field shape {nu.shape} does not match chart {(chart.n_u, chart.n_v)}")
    pair = pair.oriented(nu)
    q = compute_IJ(pair, chart.nu0, nu)
    I = q.eval_I(nu)
    J = q.eval_J(nu)
    nu_u = fd.du(nu, chart.h_u)
    nu_v = fd.dv(nu, chart.h_v)
    gamma1 = chart.b * np.exp(J) * pair.dI(nu) * nu_v
    gamma2 = -chart.a * np.exp(I) * pair.dJ(nu) * nu_u
    return InvariantGrid(
        nu1=pair.f(nu), nu2=pair.g(nu), gamma1=gamma1, gamma2=gamma2,
        E=np.exp(-2.0 * I) / chart.a**2, G=np.exp(-2.0 * J) / chart.b**2,
        h_u=chart.h_u, h_v=chart.h_v, nu=nu, nu0=chart.nu0,
        origin=(chart.u_range[0], chart.v_range[0]),
        meta={"swapped": pair.swapped, "a": chart.a, "b": chart.b},
    )


def lemma_functions(grid: InvariantGrid, pair: WeingartenPair, nu0=None):
    """lambda = sqrt(E) e^I and mu = sqrt(G) e^J; constant 1/a, 1/b on natural charts."""
    nu0 = grid.nu0 if nu0 is None else nu0
    if grid.nu is None or nu0 is None:
        raise ParamError("grid carries no nu field / nu0")
    if grid.meta.get("swapped") and not pair.swapped:
        pair = pair.swap()
    q = compute_IJ(pair, nu0, grid.nu)
    return np.sqrt(grid.E) * np.exp(q.eval_I(grid.nu)), np.sqrt(grid.G) * np.exp(q.eval_J(grid.nu))


def natural_constant(grid: InvariantGrid):
    return np.sqrt(grid.E * grid.G) * (grid.nu1 - grid.nu2)


def check_natural_parameters(grid: InvariantGrid) -> float:
    """max |sqrt(EG)(nu1 - nu2) - mean|; zero iff the parameters are natural."""
    c = natural_constant(grid)
    return float(np.max(np.abs(c - c.mean())))


def invariants_from_forms(E, F, G, L, M, N, h_u, h_v, tol=1e-6) -> InvariantGrid:
    """nu1 = L/E, nu2 = N/G, gamma1 = -E_v/(2E sqrt G), gamma2 = G_u/(2G sqrt E)."""
    E, F, G, L, M, N = (np.asarray(x, dtype=float) for x in (E, F, G, L, M, N))
    shape = np.broadcast_shapes(E.shape, F.shape, G.shape, L.shape, M.shape, N.shape)
    E, F, G, L, M, N = (np.broadcast_to(x, shape) for x in (E, F, G, L, M, N))
    f_max = float(np.max(np.abs(F)))
    m_max = float(np.max(np.abs(M)))
    if f_max > tol or m_max > tol:
        raise NotPrincipalError(f"not principal parameters: max|F|={f_max:.3g}, max|M|={m_max:.3g}")
    if np.min(E) <= 0 or np.min(G) <= 0:
        raise DomainError("first fundamental form is not positive definite")
    gamma1 = -fd.dv(E, h_v) / (2.0 * E * np.sqrt(G))
    gamma2 = fd.du(G, h_u) / (2.0 * G * np.sqrt(E))
    return InvariantGrid(nu1=L / E, nu2=N / G, gamma1=gamma1, gamma2=gamma2,
                         E=E, G=G, h_u=h_u, h_v=h_v)


def prescribed_grid(shape, h_u, h_v, nu1, nu2, gamma1=0.0, gamma2=0.0, E=1.0, G=1.0, origin=(0.0, 0.0)):
    """InvariantGrid from raw (possibly constant) fields, for non-W fixtures."""
    full = lambda x: np.broadcast_to(np.asarray(x, dtype=float), shape).copy()
    return InvariantGrid(full(nu1), full(nu2), full(gamma1), full(gamma2), full(E), full(G),
                         h_u=h_u, h_v=h_v, origin=origin)
