"""Natural-PDE residuals, the four canonical operators and grid solvers.

Operators act on a field w sampled on a (u, v) grid::

    DELTA           w_uu + w_vv
    DELTA_BAR       w_uu - w_vv
    DELTA_STAR      w_uu + (1/w)_vv
    DELTA_BAR_STAR  w_uu - (1/w)_vv

A canonical form reads ``op(F(x)) = R(x)`` where x is the unknown (lambda, or
nu itself for some classes) and F the lhs transform. Starred operators are
discretised on the transformed field F and on 1/F directly.
"""

from __future__ import annotations

import enum
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Optional

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spla
import sympy as sp

from . import expr as ex
from . import fd
from .core import NaturalChart, WeingartenPair, compute_IJ
from .errors import (
    CflError,
    NonConvergenceError,
    ParamError,
    SingularFieldError,
)

LAM, NU, P, Q = ex.LAM, ex.NU, ex.P, ex.Q


class OperatorKind(str, enum.Enum):
    DELTA = "DELTA"
    DELTA_BAR = "DELTA_BAR"
    DELTA_STAR = "DELTA_STAR"
    DELTA_BAR_STAR = "DELTA_BAR_STAR"

    @property
    def starred(self):
        return self in (OperatorKind.DELTA_STAR, OperatorKind.DELTA_BAR_STAR)

    @property
    def vsign(self):
        return 1.0 if self in (OperatorKind.DELTA, OperatorKind.DELTA_STAR) else -1.0

    @property
    def elliptic(self):
        return self.vsign > 0

    @property
    def symbol(self):
        return {"DELTA": "Δ", "DELTA_BAR": "Δ̄", "DELTA_STAR": "Δ*", "DELTA_BAR_STAR": "Δ̄*"}[self.value]


class Signature(str, enum.Enum):
    EUCLIDEAN = "EUCLIDEAN"
    MINKOWSKI = "MINKOWSKI"


# ---------------------------------------------------------------------------
# forms


@dataclass(frozen=True)
class Reduction:
    """How a class's natural PDE collapses to its canonical form.

    With nu = nu_of(x), the pair (f, g) and chart constants (a, b, nu0), the
    natural-PDE residual equals kappa(x) times the canonical residual.
    """

    f: str
    g: str
    nu_of: sp.Expr
    nu0: float
    a: float
    b: float
    kappa: sp.Expr
    nu_domain: tuple
    var: sp.Symbol = LAM

    def pair(self) -> WeingartenPair:
        return WeingartenPair(self.f, self.g, domain=self.nu_domain)

    def chart(self, u_range=(0.0, 1.0), v_range=(0.0, 1.0), n_u=33, n_v=33) -> NaturalChart:
        return NaturalChart(self.a, self.b, self.nu0, tuple(u_range), tuple(v_range), n_u, n_v)

    def nu_field(self, x):
        return ex.compile_expr(self.nu_of, self.var)(x)

    def kappa_field(self, x):
        return ex.compile_expr(self.kappa, self.var)(x)


@dataclass(frozen=True)
class PdeForm:
    """op(lhs(x)) = rhs(x) on a grid, with bookkeeping for classification."""

    operator: OperatorKind
    lhs: sp.Expr
    rhs: sp.Expr
    var: sp.Symbol = LAM
    signature: Signature = Signature.MINKOWSKI
    class_id: Optional[int] = None
    p: Any = None
    q: Any = None
    substitution: str = ""
    aux: dict = field(default_factory=dict)
    reduction: Optional[Reduction] = None

    @property
    def lhs_fn(self) -> Callable:
        return ex.compile_expr(self.lhs, self.var)

    @property
    def rhs_fn(self) -> Callable:
        return ex.compile_expr(self.rhs, self.var)

    @property
    def drhs_fn(self) -> Callable:
        return ex.compile_expr(sp.diff(self.rhs, self.var), self.var)

    @property
    def dlhs_fn(self) -> Callable:
        return ex.compile_expr(sp.diff(self.lhs, self.var), self.var)

    def residual(self, x, h_u, h_v):
        """op(F(x)) - R(x) on interior nodes."""
        return operator_apply(self.operator, self.lhs_fn(x), h_u, h_v) - fd.interior(self.rhs_fn(x))

    def with_rhs(self, rhs, signature=None) -> "PdeForm":
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["rhs"] = rhs
        if signature is not None:
            d["signature"] = signature
        return PdeForm(**d)

    def text(self) -> str:
        v = "λ" if self.var == LAM else "ν"
        lhs = sp.sstr(self.lhs).replace("lambda", "λ").replace("nu", "ν")
        rhs = sp.sstr(self.rhs).replace("lambda", "λ").replace("nu", "ν")
        inner = v if self.lhs == self.var else f"({lhs})"
        return f"{self.operator.symbol}{inner} = {rhs}"

    def to_dict(self):
        return {
            "class_id": self.class_id,
            "p": _num(self.p),
            "q": _num(self.q),
            "operator": self.operator.value,
            "var": "lambda" if self.var == LAM else "nu",
            "lhs": ex.to_text(self.lhs),
            "rhs": ex.to_text(self.rhs),
            "signature": self.signature.value,
            "substitution": self.substitution,
            "aux": {k: str(v) for k, v in self.aux.items()},
        }


def _num(x):
    if x is None:
        return None
    try:
        return float(x)
    except TypeError:
        return str(x)


# ---------------------------------------------------------------------------
# operators and residuals


def operator_apply(op: OperatorKind, lam, h_u, h_v, tol_singular=1e-12):
    """Centered-difference application of ``op``; interior nodes only."""
    op = OperatorKind(op)
    w = np.asarray(lam, dtype=float)
    if min(w.shape) < 3:
        raise ParamError("operator needs at least 3x3 nodes")
    if op.starred:
        if np.min(np.abs(w)) < tol_singular:
            raise SingularFieldError("starred operator applied to a field touching zero")
        wv = 1.0 / w
    else:
        wv = w
    uu = (w[2:, 1:-1] - 2.0 * w[1:-1, 1:-1] + w[:-2, 1:-1]) / h_u**2
    vv = (wv[1:-1, 2:] - 2.0 * wv[1:-1, 1:-1] + wv[1:-1, :-2]) / h_v**2
    return uu + op.vsign * vv


def _nu_jets(nu, h_u, h_v):
    i = fd.interior
    nu_u = (nu[2:, 1:-1] - nu[:-2, 1:-1]) / (2 * h_u)
    nu_v = (nu[1:-1, 2:] - nu[1:-1, :-2]) / (2 * h_v)
    nu_uu = (nu[2:, 1:-1] - 2 * nu[1:-1, 1:-1] + nu[:-2, 1:-1]) / h_u**2
    nu_vv = (nu[1:-1, 2:] - 2 * nu[1:-1, 1:-1] + nu[1:-1, :-2]) / h_v**2
    return i(nu), nu_u, nu_v, nu_uu, nu_vv


def _natural_lhs_parts(a, b, pair, q, n, nu_u, nu_v, nu_uu, nu_vv):
    I = q.eval_I(n)
    J = q.eval_J(n)
    Ip, Jp = pair.dI(n), pair.dJ(n)
    Ipp, Jpp = pair.d2I(n), pair.d2J(n)
    Ju = Jp * nu_u
    Iu = Ip * nu_u
    Juu = Jpp * nu_u**2 + Jp * nu_uu
    Iv = Ip * nu_v
    Jv = Jp * nu_v
    Ivv = Ipp * nu_v**2 + Ip * nu_vv
    upart = a**2 * np.exp(2 * I) * (Juu + Iu * Ju - Ju**2)
    vpart = b**2 * np.exp(2 * J) * (Ivv + Iv * Jv - Iv**2)
    return upart, vpart


def natural_pde_residual(chart: NaturalChart, pair: WeingartenPair, nu_field, quad=None):
    """LHS + f g of the natural PDE on interior nodes.

    Only nu is differenced; I', J', I'', J'' enter exactly through the chain
    rule, so the residual is O(h^2) for a smooth exact solution.
    """
    nu = np.asarray(nu_field, dtype=float)
    if min(nu.shape) < 3:
        raise ParamError("natural PDE residual needs a grid of at least 3x3")
    q = quad if quad is not None else compute_IJ(pair, chart.nu0, nu)
    n, nu_u, nu_v, nu_uu, nu_vv = _nu_jets(nu, chart.h_u, chart.h_v)
    up, vp = _natural_lhs_parts(chart.a, chart.b, pair, q, n, nu_u, nu_v, nu_uu, nu_vv)
    return up + vp + pair.f(n) * pair.g(n)


def natural_ode_residual(chart: NaturalChart, pair: WeingartenPair, nu_of_u, quad=None):
    """The v-independent reduction: a^2 e^{2I}(J_uu + I_u J_u - J_u^2) + f g."""
    nu = np.asarray(nu_of_u, dtype=float)
    q = quad if quad is not None else compute_IJ(pair, chart.nu0, nu)
    h = chart.h_u
    n = nu[1:-1]
    nu_u = (nu[2:] - nu[:-2]) / (2 * h)
    nu_uu = (nu[2:] - 2 * nu[1:-1] + nu[:-2]) / h**2
    zero = np.zeros_like(n)
    up, _ = _natural_lhs_parts(chart.a, chart.b, pair, q, n, nu_u, zero, nu_uu, zero)
    return up + pair.f(n) * pair.g(n)


# ---------------------------------------------------------------------------
# canonical forms of the ten basic classes


def _exact(x):
    if x is None:
        return None
    if isinstance(x, sp.Basic):
        return x
    if isinstance(x, (int, np.integer)):
        return sp.Integer(int(x))
    try:
        from fractions import Fraction

        if isinstance(x, Fraction):
            return sp.Rational(x.numerator, x.denominator)
    except ImportError:  # pragma: no cover
        pass
    if isinstance(x, str):
        return sp.Rational(x) if "/" in x or x.replace(".", "", 1).lstrip("-").isdigit() else sp.sympify(x)
    xf = float(x)
    return sp.Integer(int(xf)) if xf.is_integer() else sp.Float(xf)


def _check_params(class_id, p, q):
    if class_id not in range(1, 11):
        raise ParamError(f"class_id must be 1..10, got {class_id}")
    if class_id in (4, 5, 6, 7, 10) and p is None:
        raise ParamError(f"class {class_id} needs p")
    if class_id == 10 and q is None:
        raise ParamError("class 10 needs q")
    if class_id in (4, 6) and not float(p) ** 2 > 1:
        raise ParamError(f"class {class_id} needs p^2 > 1, got p={p}")
    if class_id in (5, 7) and not (float(p) ** 2 < 1 and float(p) != 0):
        raise ParamError(f"class {class_id} needs p^2 < 1 and p != 0, got p={p}")
    if class_id == 10 and not (float(p) != 0 and float(q) > 0):
        raise ParamError(f"class 10 needs p != 0 and q > 0, got p={p}, q={q}")


BASIC_RELATION_TEXT = {
    1: "H=0", 2: "H=1/2", 3: "H'=1", 4: "H=pH'", 5: "H=pH'", 6: "H=pH'+1",
    7: "H=pH'+1", 8: "K'=-1", 9: "K'=2H'", 10: "K'=pH'-q",
}


def canonical_rhs(class_id: int, p=None, q=None) -> PdeForm:
    """Canonical form of one of the ten basic classes, with its reduction."""
    _check_params(class_id, p, q)
    p = _exact(p)
    q = _exact(q)
    half = sp.Rational(1, 2)
    op = OperatorKind
    if class_id == 1:
        return PdeForm(op.DELTA, LAM, sp.exp(LAM), class_id=1, substitution="nu = -exp(lambda)",
                       reduction=Reduction("-nu", "nu", -sp.exp(LAM), -0.5, 1.0, 1.0, sp.exp(LAM),
                                           (-np.inf, 0.0)))
    if class_id == 2:
        return PdeForm(op.DELTA, LAM, sp.sinh(LAM), class_id=2, substitution="nu = (1 - exp(lambda))/2",
                       reduction=Reduction("1 - nu", "nu", (1 - sp.exp(LAM)) / 2, 0.0, 1.0, 1.0,
                                           sp.exp(LAM) / 2, (-np.inf, 0.5)))
    if class_id == 3:
        return PdeForm(op.DELTA_STAR, sp.exp(NU), 2 * NU * (NU + 2), var=NU, class_id=3,
                       reduction=Reduction("nu + 2", "nu", NU, 0.0, 1.0, 1.0, -half,
                                           (-np.inf, np.inf), var=NU))
    if class_id in (4, 5):
        kind = op.DELTA_STAR if class_id == 4 else op.DELTA_BAR_STAR
        pf = float(p)
        red = Reduction(f"({pf + 1!r})/({pf - 1!r})*nu", "nu", NU, 1.0, 1.0,
                        float(np.sqrt(abs((pf - 1) / (pf + 1)))), (1 - p) * NU / (2 * p),
                        (0.0, np.inf), var=NU)
        return PdeForm(kind, NU**p, 2 * p * (p + 1) / (p - 1) ** 2 * NU, var=NU, class_id=class_id,
                       p=p, reduction=red, aux={"inverse": LAM ** (1 / p)})
    if class_id in (6, 7):
        kind = op.DELTA_STAR if class_id == 6 else op.DELTA_BAR_STAR
        pf = float(p)
        rhs = p * ((p - 1) * LAM + 2) * ((p + 1) * LAM + 2) / (2 * (p - 1) * LAM)
        nu_dom = (1.0, np.inf) if pf > 1 else (-np.inf, 1.0)
        red = Reduction(f"(2 - ({pf + 1!r})*nu)/({1 - pf!r})", "nu", ((p - 1) * LAM + 2) / 2,
                        (pf + 1) / 2, 1.0, float(np.sqrt(abs((pf - 1) / (pf + 1)))),
                        (1 - p) * LAM / (2 * p), nu_dom)
        return PdeForm(kind, LAM**p, rhs, class_id=class_id, p=p,
                       substitution="nu = ((p - 1)*lambda + 2)/2", reduction=red,
                       aux={"inverse": LAM ** (1 / p)})
    if class_id == 8:
        red = Reduction("nu", "-1/nu", sp.tan(LAM / 2), 1.0, float(np.sqrt(2)), float(np.sqrt(2)),
                        -1 / sp.sin(LAM), (0.0, np.inf))
        return PdeForm(op.DELTA_BAR, LAM, -sp.sin(LAM), class_id=8, substitution="nu = tan(lambda)",
                       reduction=red)
    if class_id == 9:
        red = Reduction("nu - 1", "1 - 1/nu", (LAM - 4) / (LAM - 2), 2.0, 1.0, 0.5,
                        -2 / ((LAM - 2) * (LAM - 4)), (1.0, np.inf))
        return PdeForm(op.DELTA_STAR, sp.exp(LAM), sp.Integer(2), class_id=9,
                       substitution="nu = (lambda - 4)/(lambda - 2)", reduction=red)
    # class 10
    calI = sp.atan(LAM / sp.sqrt(q)) / sp.sqrt(q)
    rhs = p * q / 2 * LAM * (p * LAM - 2 * q) / (LAM**2 + q)
    pf, qf = float(p), float(q)
    red = Reduction(f"nu - ({pf / 2!r})", f"(({pf / 2!r})*(nu - ({pf / 2!r})) - ({qf!r}))/nu",
                    LAM + p / 2, pf / 2, float(np.sqrt(4 / (pf**2 + 4 * qf))), float(2 / abs(pf)),
                    -(LAM**2 + q) / (p * q * (LAM + p / 2)),
                    (0.0, np.inf) if pf > 0 else (-np.inf, 0.0))
    return PdeForm(op.DELTA_STAR, sp.exp(p * calI), rhs, class_id=10, p=p, q=q,
                   substitution="nu = lambda + p/2", reduction=red,
                   aux={"I": calI})


# ---------------------------------------------------------------------------
# solvers


@dataclass
class SolverConfig:
    max_iter: int = 100
    newton_tol: float = 1e-10
    damping: float = 1.0
    boundary: Any = None  # full-grid array or callable (U, V) -> field
    initial: Any = None
    cauchy: Any = None  # (x(u, v0), x_v(u, v0)) arrays or callables of u
    u_boundary: str = "neumann"  # hyperbolic marching: neumann | periodic | dirichlet
    reverse: bool = False  # march from v_range[1] down to v_range[0]

    def __post_init__(self):
        if int(self.max_iter) < 1:
            raise ParamError("max_iter must be >= 1")
        if not self.newton_tol > 0:
            raise ParamError("newton_tol must be positive")
        if not 0 < self.damping <= 1:
            raise ParamError("damping must lie in (0, 1]")
        if self.u_boundary not in ("neumann", "periodic", "dirichlet"):
            raise ParamError(f"unknown u boundary mode {self.u_boundary!r}")


@dataclass
class SolverReport:
    iterations: int
    final_residual: float
    wall_time: float
    converged: bool
    method: str = "newton"
    history: list = field(default_factory=list)

    def to_dict(self):
        d = asdict(self)
        d["history"] = [float(x) for x in self.history]
        return d


def _field_from(spec, chart, what):
    if spec is None:
        raise ParamError(f"{what} data must be supplied")
    if callable(spec):
        U, V = chart.mesh()
        return np.asarray(spec(U, V), dtype=float)
    arr = np.asarray(spec, dtype=float)
    if arr.shape != (chart.n_u, chart.n_v):
        raise ParamError(f"{what} array has shape {arr.shape}, expected {(chart.n_u, chart.n_v)}")
    return arr


def _laplacian_parts(nu_, nv_, h_u, h_v):
    """Sparse second-difference matrices on the interior (Dirichlet elimination)."""
    def d2(n, h):
        return sps.diags([np.ones(n - 1), -2 * np.ones(n), np.ones(n - 1)], [-1, 0, 1]) / h**2
    Iu = sps.identity(nu_)
    Iv = sps.identity(nv_)
    Duu = sps.kron(d2(nu_, h_u), Iv, format="csr")
    Dvv = sps.kron(Iu, d2(nv_, h_v), format="csr")
    return Duu, Dvv


def solve_elliptic(form: PdeForm, chart: NaturalChart, cfg: SolverConfig, report: bool = False):
    """Damped Newton for op(F(x)) = R(x) with Dirichlet data on the boundary ring.

    The Jacobian is the five-point stencil applied to diag(F') (and
    diag(-F'/F^2) along v for starred operators) minus diag(R'). When a linear
    solve fails, the step falls back to the chord iteration with the plain
    stencil. Returns the full field (boundary included).
    """
    if form.operator not in (OperatorKind.DELTA, OperatorKind.DELTA_STAR):
        raise ParamError(f"solve_elliptic needs DELTA or DELTA_STAR, got {form.operator.value}")
    t0 = time.perf_counter()
    bnd = _field_from(cfg.boundary, chart, "boundary")
    x = bnd.copy()
    if cfg.initial is not None:
        init = _field_from(cfg.initial, chart, "initial")
        x[1:-1, 1:-1] = init[1:-1, 1:-1]
    else:
        ring = np.concatenate([bnd[0], bnd[-1], bnd[1:-1, 0], bnd[1:-1, -1]])
        x[1:-1, 1:-1] = ring.mean()
    h_u, h_v = chart.h_u, chart.h_v
    nu_, nv_ = chart.n_u - 2, chart.n_v - 2
    Duu, Dvv = _laplacian_parts(nu_, nv_, h_u, h_v)
    F, dF = form.lhs_fn, form.dlhs_fn
    R, dR = form.rhs_fn, form.drhs_fn
    starred = form.operator.starred

    def resid(x):
        if starred and np.min(np.abs(F(x))) < 1e-12:
            raise SingularFieldError("lhs transform vanishes during the iteration")
        with np.errstate(over="raise", invalid="raise"):
            try:
                r = form.residual(x, h_u, h_v)
            except FloatingPointError:
                return np.full((nu_, nv_), np.inf)
        return r

    def jac(x):
        xi = x[1:-1, 1:-1].ravel()
        fp = dF(xi)
        if starred:
            Fx = F(xi)
            J = Duu @ sps.diags(fp) + form.operator.vsign * (Dvv @ sps.diags(-fp / Fx**2))
        else:
            J = Duu + form.operator.vsign * Dvv
            if np.ndim(fp):
                J = Duu @ sps.diags(fp) + form.operator.vsign * (Dvv @ sps.diags(fp))
        return (J - sps.diags(np.broadcast_to(dR(xi), xi.shape))).tocsc()

    chord = (Duu + form.operator.vsign * Dvv).tocsc()
    r = resid(x)
    rmax = float(np.max(np.abs(r)))
    best = (rmax, x.copy())
    history = [rmax]
    method = "newton"
    it = 0
    while rmax >= cfg.newton_tol and it < cfg.max_iter:
        it += 1
        try:
            with np.errstate(all="ignore"):
                J = jac(x)
                step = spla.spsolve(J, -r.ravel())
            if not np.all(np.isfinite(step)):
                raise np.linalg.LinAlgError("singular Jacobian")
        except (RuntimeError, np.linalg.LinAlgError):
            method = "chord"
            step = spla.spsolve(chord, -r.ravel())
        step = step.reshape(nu_, nv_)
        t = cfg.damping
        for _ in range(30):
            trial = x.copy()
            trial[1:-1, 1:-1] += t * step
            r_new = resid(trial)
            m = float(np.max(np.abs(r_new)))
            if m < rmax or m < cfg.newton_tol:
                break
            t *= 0.5
        x, r, rmax = trial, r_new, m
        history.append(rmax)
        if rmax < best[0]:
            best = (rmax, x.copy())
    wall = time.perf_counter() - t0
    rep = SolverReport(it, best[0], wall, best[0] < cfg.newton_tol, method, history)
    if not rep.converged:
        raise NonConvergenceError(
            f"Newton did not reach {cfg.newton_tol:g} in {it} iterations (best {best[0]:.3g})",
            best=best[1], residual=best[0], iterations=it,
        )
    return (best[1], rep) if report else best[1]


def _cauchy_rows(spec, chart):
    if spec is None or len(spec) != 2:
        raise ParamError("Cauchy data (value, v-derivative) must be supplied")
    u = chart.u
    out = []
    for s in spec:
        arr = np.asarray(s(u), dtype=float) if callable(s) else np.asarray(s, dtype=float)
        arr = np.broadcast_to(arr, u.shape).astype(float)
        out.append(arr)
    return out


def _uu_rows(w, h, mode, edge=None):
    out = np.empty_like(w)
    out[1:-1] = (w[2:] - 2 * w[1:-1] + w[:-2]) / h**2
    if mode == "neumann":
        out[0] = 2 * (w[1] - w[0]) / h**2
        out[-1] = 2 * (w[-2] - w[-1]) / h**2
    elif mode == "periodic":
        # last node duplicates the first
        out[0] = (w[1] - 2 * w[0] + w[-2]) / h**2
        out[-1] = out[0]
    else:
        out[0] = out[-1] = 0.0  # overwritten by Dirichlet data
    return out


def solve_hyperbolic(form: PdeForm, chart: NaturalChart, cfg: SolverConfig, report: bool = False):
    """Leapfrog marching in v for op(F(x)) = R(x), op in {DELTA_BAR, DELTA_BAR_STAR}.

    The marched quantity is w = x (plain) or w = 1/F(x) (starred):
    w_vv = F(x)_uu - R(x). The first step is a second-order Taylor step built
    from the Cauchy data. Requires h_v <= h_u.
    """
    if form.operator not in (OperatorKind.DELTA_BAR, OperatorKind.DELTA_BAR_STAR):
        raise ParamError(f"solve_hyperbolic needs DELTA_BAR or DELTA_BAR_STAR, got {form.operator.value}")
    h_u, h_v = chart.h_u, chart.h_v
    if h_v > h_u * (1 + 1e-12):
        raise CflError(f"CFL violated: h_v={h_v:g} > h_u={h_u:g}")
    t0 = time.perf_counter()
    x0, xv0 = _cauchy_rows(cfg.cauchy, chart)
    F, dF, R = form.lhs_fn, form.dlhs_fn, form.rhs_fn
    starred = form.operator.starred
    if starred:
        inv = form.aux.get("inverse")
        if inv is None:
            inv = sp.solve(sp.Eq(form.lhs, sp.Symbol("y")), form.var)[0].subs(sp.Symbol("y"), LAM)
        Finv = ex.compile_expr(sp.sympify(inv).subs(form.var, LAM), LAM)

        def to_x(w):
            if np.min(np.abs(w)) < 1e-12:
                raise SingularFieldError("1/F(x) reached zero during marching")
            return Finv(1.0 / w)

        def to_w(x):
            Fx = F(x)
            if np.min(np.abs(Fx)) < 1e-12:
                raise SingularFieldError("lhs transform vanishes on Cauchy data")
            return 1.0 / Fx
    else:
        to_x = to_w = lambda z: z
    sgn = -1.0 if cfg.reverse else 1.0
    mode = cfg.u_boundary
    dirichlet = None
    if mode == "dirichlet":
        dirichlet = _field_from(cfg.boundary, chart, "u-boundary")
        if cfg.reverse:
            dirichlet = dirichlet[:, ::-1]

    def accel(x):
        return _uu_rows(F(x), h_u, mode) - R(x)

    nv = chart.n_v
    out = np.empty((chart.n_u, nv))
    w0 = to_w(x0)
    if starred:
        wv0 = -dF(x0) * xv0 / F(x0) ** 2
    else:
        wv0 = xv0
    wv0 = sgn * wv0
    w_prev = w0
    w_cur = w0 + h_v * wv0 + 0.5 * h_v**2 * accel(x0)
    out[:, 0] = x0
    x_cur = to_x(w_cur)
    if dirichlet is not None:
        x_cur[[0, -1]] = dirichlet[[0, -1], 1]
        w_cur = to_w(x_cur)
    out[:, 1] = x_cur
    for j in range(2, nv):
        w_next = 2 * w_cur - w_prev + h_v**2 * accel(x_cur)
        x_next = to_x(w_next)
        if dirichlet is not None:
            x_next[[0, -1]] = dirichlet[[0, -1], j]
            w_next = to_w(x_next)
        if not np.all(np.isfinite(x_next)):
            raise SingularFieldError(f"marching blew up at row {j}")
        out[:, j] = x_next
        w_prev, w_cur, x_cur = w_cur, w_next, x_next
    if cfg.reverse:
        out = out[:, ::-1]
    rep = SolverReport(nv - 1, float("nan"), time.perf_counter() - t0, True, "leapfrog")
    return (out, rep) if report else out
