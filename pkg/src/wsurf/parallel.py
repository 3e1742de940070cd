"""Parallel surfaces z + a l and how the Weingarten data transform under them.

For an offset a the sign eps = sign((1 - a nu1)(1 - a nu2)) must be constant
on the grid; points with (1 - a nu1)(1 - a nu2) = 0 are rejected. Curvatures
map as nu_i -> eps nu_i / (1 - a nu_i) and the natural chart constants as
a -> a/|1 - a f(nu0)|, b -> b/|1 - a g(nu0)|.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import sympy as sp

from . import expr as ex
from .core import NaturalChart, WeingartenPair, check_natural_parameters, compute_IJ, invariants_from_nu
from .errors import DegenerateError, ParamError, SingularOffsetError
from .pde import natural_pde_residual
from .reconstruct import SurfaceGrid, renormalize

OFFSET_TOL = 1e-10


def _check_a(a):
    a = float(a)
    if a == 0.0 or not np.isfinite(a):
        raise ParamError("offset a must be a nonzero finite number")
    return a


def offset_sign(nu1, nu2, a, tol=OFFSET_TOL):
    """eps = sign((1 - a nu1)(1 - a nu2)), required constant over the samples."""
    a = _check_a(a)
    d1 = 1.0 - a * np.asarray(nu1, dtype=float)
    d2 = 1.0 - a * np.asarray(nu2, dtype=float)
    if min(np.min(np.abs(d1)), np.min(np.abs(d2))) < tol:
        raise SingularOffsetError(f"offset a={a:g} hits 1 - a nu_i = 0")
    s = np.sign(d1 * d2)
    if not np.all(s == s.flat[0]):
        raise SingularOffsetError(f"offset a={a:g} straddles the excluded set; eps is not constant")
    return int(s.flat[0])


def parallel_invariants(nu1, nu2, a):
    """(nu1_bar, nu2_bar, eps) of the parallel surface at offset a."""
    eps = offset_sign(nu1, nu2, a)
    nu1 = np.asarray(nu1, dtype=float)
    nu2 = np.asarray(nu2, dtype=float)
    return eps * nu1 / (1.0 - a * nu1), eps * nu2 / (1.0 - a * nu2), eps


def original_invariants(nu1_bar, nu2_bar, a, eps):
    """Inverse map: nu_i = eps nu_i_bar / (1 + a eps nu_i_bar)."""
    nb1 = np.asarray(nu1_bar, dtype=float)
    nb2 = np.asarray(nu2_bar, dtype=float)
    return eps * nb1 / (1.0 + a * eps * nb1), eps * nb2 / (1.0 + a * eps * nb2)


def invariants_back(Kp_bar, H_bar, Hp_bar, a, eps):
    """K', H, H' of the original surface from those of the parallel one."""
    den = 1.0 + 2.0 * a * eps * H_bar + a**2 * Kp_bar
    return Kp_bar / den, (eps * H_bar + a * Kp_bar) / den, eps * Hp_bar / den


def composed_offset(a, b, eps_a):
    """Offsetting by a, then by b along the new normal, equals one offset by a + eps_a b."""
    return a + eps_a * b


def parallel_surface(surface: SurfaceGrid, a: float, nu1=None, nu2=None) -> SurfaceGrid:
    """z + a l with l_bar = eps l.

    The offset check needs curvatures; pass nu1, nu2 (for example from the
    verify module) or the surface's own invariants. X and Y keep their
    direction when 1 - a nu_i > 0 and flip otherwise, so the new frame stays
    positively oriented.
    """
    a = _check_a(a)
    if nu1 is None or nu2 is None:
        raise ParamError("parallel_surface needs the principal curvatures nu1, nu2")
    nu1 = np.broadcast_to(np.asarray(nu1, float), surface.shape)
    nu2 = np.broadcast_to(np.asarray(nu2, float), surface.shape)
    eps = offset_sign(nu1, nu2, a)
    s1 = np.sign(1.0 - a * nu1)[..., None]
    s2 = np.sign(1.0 - a * nu2)[..., None]
    X, Y, l = renormalize(s1 * surface.X, s2 * surface.Y, eps * surface.l)
    meta = dict(surface.meta)
    meta.update(offset=a, eps=eps)
    return SurfaceGrid(surface.z + a * surface.l, X, Y, l, surface.h_u, surface.h_v,
                       surface.origin, None, meta)


def parallel_weingarten(pair: WeingartenPair, a: float, eps: int = None, samples=None) -> WeingartenPair:
    """f_bar = eps f/(1 - a f), g_bar = eps g/(1 - a g).

    eps is read off ``samples`` of nu when given, otherwise taken as +1.
    """
    a = _check_a(a)
    if samples is not None:
        s = np.asarray(samples, dtype=float)
        e = offset_sign(pair.f(s), pair.g(s), a)
        if eps is not None and eps != e:
            raise SingularOffsetError(f"requested eps={eps} but the samples give eps={e}")
        eps = e
        before = np.sign(pair.f(s) - pair.g(s))
    elif eps is None:
        eps = 1
    if eps not in (1, -1):
        raise ParamError("eps must be +1 or -1")
    ar = sp.nsimplify(a) if float(a).is_integer() else sp.Float(a)
    fb = eps * pair.f_expr / (1 - ar * pair.f_expr)
    gb = eps * pair.g_expr / (1 - ar * pair.g_expr)
    out = WeingartenPair(fb, gb, domain=pair.domain, name=f"{pair.name}|a={a:g}", swapped=pair.swapped)
    if samples is not None:
        after = np.sign(out.f(s) - out.g(s))
        if not np.all(after == before):
            raise SingularOffsetError("sign(f - g) changed under the offset")
    return out


def parallel_chart(chart: NaturalChart, pair: WeingartenPair, a: float) -> NaturalChart:
    """Chart constants a/|1 - a f0|, b/|1 - a g0| at the same nu0 and grid."""
    f0 = float(pair.f(chart.nu0))
    g0 = float(pair.g(chart.nu0))
    d1, d2 = 1.0 - a * f0, 1.0 - a * g0
    if min(abs(d1), abs(d2)) < OFFSET_TOL:
        raise SingularOffsetError("offset is singular at nu0")
    return NaturalChart(chart.a / abs(d1), chart.b / abs(d2), chart.nu0, chart.u_range, chart.v_range,
                        chart.n_u, chart.n_v)


# ---------------------------------------------------------------------------
# linear relations


def parallel_relation(rel, a: float, eps: int = 1):
    """Coefficients of the relation satisfied by the parallel surface.

    delta K' = alpha H + beta H' + gamma becomes
    (delta - a alpha - a^2 gamma) K'_bar = eps (alpha + 2 a gamma) H_bar + eps beta H'_bar + gamma.
    The quantity alpha^2 - beta^2 + 4 gamma delta is unchanged.
    """
    from .classify import LinearRelation

    if a == 0:
        raise ParamError("offset a must be nonzero")
    al, be, ga, de = rel.alpha, rel.beta, rel.gamma, rel.delta
    if rel.discriminant == 0:
        raise DegenerateError("degenerate relation: alpha^2 - beta^2 + 4 gamma delta = 0")
    return LinearRelation(eps * (al + 2 * a * ga), eps * be, ga, de - a * al - a * a * ga)


# ---------------------------------------------------------------------------
# natural-chart checks


@dataclass
class ParallelNaturalReport:
    a: float
    eps: int
    a_bar: float
    b_bar: float
    constancy: float  # max relative deviation of sqrt(EG)(nu1 - nu2), parallel data
    constancy_original: float
    constant_ratio: float  # parallel constant / original constant
    IJ_closed_form_err: float  # quadrature vs closed form of I_bar, J_bar
    residual_original_max: float
    residual_parallel_max: float
    pointwise_diff_max: float  # |res_bar - res|, the displayed identity
    scaled_diff_max: float  # |res_bar (1 - a f)(1 - a g) - res|

    def to_dict(self):
        return dict(self.__dict__)


def check_parallel_natural(chart: NaturalChart, pair: WeingartenPair, nu_field, a: float) -> ParallelNaturalReport:
    """Natural-chart and natural-PDE checks for the parallel surface at offset a."""
    a = _check_a(a)
    nu = np.asarray(nu_field, dtype=float)
    pair = pair.oriented(nu)
    f, g = pair.f(nu), pair.g(nu)
    eps = offset_sign(f, g, a)
    offset_sign(pair.f(chart.nu0), pair.g(chart.nu0), a)
    pbar = parallel_weingarten(pair, a, eps=eps, samples=nu)
    cbar = parallel_chart(chart, pair, a)

    grid = invariants_from_nu(chart, pair, nu)
    gbar = invariants_from_nu(cbar, pbar, nu)
    c0 = np.sqrt(grid.E * grid.G) * (grid.nu1 - grid.nu2)
    c1 = np.sqrt(gbar.E * gbar.G) * (gbar.nu1 - gbar.nu2)

    q = compute_IJ(pair, chart.nu0, nu)
    qb = compute_IJ(pbar, chart.nu0, nu)
    f0, g0 = float(pair.f(chart.nu0)), float(pair.g(chart.nu0))
    Ib = q.eval_I(nu) - np.log((1 - a * f) / (1 - a * f0))
    Jb = q.eval_J(nu) - np.log((1 - a * g) / (1 - a * g0))
    ij_err = float(max(np.max(np.abs(Ib - qb.eval_I(nu))), np.max(np.abs(Jb - qb.eval_J(nu)))))

    res = natural_pde_residual(chart, pair, nu, quad=q)
    resb = natural_pde_residual(cbar, pbar, nu, quad=qb)
    D = ((1 - a * f) * (1 - a * g))[1:-1, 1:-1]
    return ParallelNaturalReport(
        a=a, eps=eps, a_bar=cbar.a, b_bar=cbar.b,
        constancy=check_natural_parameters(gbar) / abs(c1.mean()),
        constancy_original=check_natural_parameters(grid) / abs(c0.mean()),
        constant_ratio=float(c1.mean() / c0.mean()),
        IJ_closed_form_err=ij_err,
        residual_original_max=float(np.max(np.abs(res))),
        residual_parallel_max=float(np.max(np.abs(resb))),
        pointwise_diff_max=float(np.max(np.abs(resb - res))),
        scaled_diff_max=float(np.max(np.abs(resb * D - res))),
    )


def family_report(chart, pair, nu_field, offsets):
    """One ParallelNaturalReport per offset (skipping none: singular offsets raise)."""
    return [check_parallel_natural(chart, pair, nu_field, a) for a in offsets]
