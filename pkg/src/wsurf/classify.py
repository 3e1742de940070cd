"""Classification of linear curvature relations delta K' = alpha H + beta H' + gamma.

Every nondegenerate relation is reduced, by a parallel offset and a homothety,
to one of ten basic classes with a canonical natural PDE. The case analysis
splits on delta = 0 (no K' term) and delta != 0 (normalized to delta = 1).

Exact inputs (int, Fraction, numeric strings, sympy rationals) are handled in
exact arithmetic. Float inputs use ``tol`` for the zero tests that pick a
branch.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

import numpy as np
import sympy as sp

from . import expr as ex
from .errors import DegenerateError, ParamError, UmbilicError
from .pde import BASIC_RELATION_TEXT, LAM, NU, OperatorKind, PdeForm, Signature, canonical_rhs

DEFAULT_TOL = 1e-12


def _coef(x):
    if isinstance(x, sp.Basic):
        return x
    if isinstance(x, bool):
        raise ParamError("boolean is not a coefficient")
    if isinstance(x, (int, np.integer)):
        return sp.Integer(int(x))
    if isinstance(x, Fraction):
        return sp.Rational(x.numerator, x.denominator)
    if isinstance(x, str):
        try:
            return sp.Rational(x.strip())
        except (TypeError, ValueError):
            raise ParamError(f"cannot read coefficient {x!r}") from None
    xf = float(x)
    if not np.isfinite(xf):
        raise ParamError("coefficients must be finite")
    return sp.Float(xf, 17)


def _is_exact(x):
    return isinstance(x, sp.Rational)


def _zero(x, tol=DEFAULT_TOL):
    if _is_exact(x):
        return x == 0
    return abs(float(x)) <= tol


def _sign(x, tol=DEFAULT_TOL):
    if _zero(x, tol):
        return 0
    return 1 if x > 0 else -1


def _clean(x):
    """Collapse floats that are integers; keep rationals exact."""
    x = sp.nsimplify(x) if _is_exact(x) else x
    return sp.simplify(x) if isinstance(x, sp.Expr) and not x.is_Number else x


@dataclass(frozen=True)
class LinearRelation:
    """delta K' = alpha H + beta H' + gamma, with the optional fractional form A, B, C, D."""

    alpha: object
    beta: object
    gamma: object
    delta: object
    fractional: Optional[tuple] = None

    def __post_init__(self):
        for k in ("alpha", "beta", "gamma", "delta"):
            object.__setattr__(self, k, _coef(getattr(self, k)))

    @property
    def coeffs(self):
        return (self.alpha, self.beta, self.gamma, self.delta)

    @property
    def discriminant(self):
        return self.alpha**2 - self.beta**2 + 4 * self.gamma * self.delta

    @property
    def exact(self):
        return all(_is_exact(c) for c in self.coeffs)

    def is_degenerate(self, tol=DEFAULT_TOL):
        return _zero(self.discriminant, tol)

    def scaled(self, c) -> "LinearRelation":
        c = _coef(c)
        if c == 0:
            raise ParamError("scale factor must be nonzero")
        return LinearRelation(*(c * x for x in self.coeffs))

    def normalized(self) -> "LinearRelation":
        """Divide by delta when nonzero, else by the first nonzero of alpha, gamma, beta."""
        for c in (self.delta, self.alpha, self.gamma, self.beta):
            if c != 0:
                return self.scaled(1 / c)
        raise DegenerateError("all coefficients vanish")

    def evaluate(self, Kp, H, Hp):
        """Residual delta K' - alpha H - beta H' - gamma, numerically."""
        a, b, g, d = (float(c) for c in self.coeffs)
        return d * np.asarray(Kp) - a * np.asarray(H) - b * np.asarray(Hp) - g

    def text(self):
        return f"{self.delta}*K' = {self.alpha}*H + {self.beta}*H' + {self.gamma}"

    def to_dict(self):
        d = {k: str(v) for k, v in zip(("alpha", "beta", "gamma", "delta"), self.coeffs)}
        if self.fractional is not None:
            d["fractional"] = [str(x) for x in self.fractional]
        return d


def fractional_to_linear(A, B, C, D) -> LinearRelation:
    """nu1 = (A nu2 + B)/(C nu2 + D) as alpha = A - D, beta = -(A + D), gamma = B, delta = C."""
    A, B, C, D = (_coef(x) for x in (A, B, C, D))
    if A == D and B == 0 and C == 0:
        raise UmbilicError("A = D, B = C = 0 describes umbilic surfaces only")
    if B * C - A * D == 0:
        raise DegenerateError("BC - AD = 0: the fractional map is constant")
    rel = LinearRelation(A - D, -(A + D), B, C, fractional=(A, B, C, D))
    # alpha^2 - beta^2 + 4 gamma delta = 4(BC - AD), so nondegeneracy is automatic
    return rel


def linear_to_fractional(rel: LinearRelation):
    """Inverse of fractional_to_linear: (A, B, C, D)."""
    a, b, g, d = rel.coeffs
    A = (a - b) / 2
    D = -(a + b) / 2
    return (A, g, d, D)


def nu1_from_nu2(rel: LinearRelation, nu2):
    """nu1 = ((alpha - beta)/2 nu2 + gamma)/(delta nu2 - (alpha + beta)/2)."""
    a, b, g, d = (float(c) for c in rel.coeffs)
    nu2 = np.asarray(nu2, dtype=float)
    return ((a - b) / 2 * nu2 + g) / (d * nu2 - (a + b) / 2)


# ---------------------------------------------------------------------------
# descriptor


@dataclass
class BasicClassDescriptor:
    class_id: int
    p: object = None
    q: object = None
    offset_a: object = 0
    similarity_scale: object = 1
    eta: Optional[int] = None
    substitution: str = ""
    pde: Optional[PdeForm] = None
    branch: str = ""
    eps: int = 1
    eps_assumed: bool = True
    orientation: int = 1  # sign used when scaling by a signed coefficient
    family: Optional[PdeForm] = None
    reduced: Optional[LinearRelation] = None
    input: Optional[LinearRelation] = None
    notes: list = field(default_factory=list)

    @property
    def basic_relation(self):
        return BASIC_RELATION_TEXT[self.class_id]

    def summary(self) -> str:
        """One human-readable line, numbers rounded to 6 significant digits."""
        head = f"class {self.class_id} ({self.basic_relation}): {self.pde.text()}"
        if self.substitution:
            head += f", {self.substitution.replace('lambda', 'λ').replace('nu', 'ν')}"
        if self.p is not None:
            head += f", p={_fmt(self.p)}"
        if self.q is not None:
            head += f", q={_fmt(self.q)}"
        return head + f", offset a={_fmt(self.offset_a)}, scale s={_fmt(self.similarity_scale)}"

    def to_dict(self):
        return {
            "class_id": self.class_id,
            "basic_relation": self.basic_relation,
            "branch": self.branch,
            "p": _num(self.p),
            "q": _num(self.q),
            "offset_a": _num(self.offset_a),
            "similarity_scale": _num(self.similarity_scale),
            "eta": self.eta,
            "eps": self.eps,
            "eps_assumed": self.eps_assumed,
            "orientation": self.orientation,
            "substitution": self.substitution,
            "pde": self.pde.to_dict() if self.pde is not None else None,
            "family_pde": self.family.to_dict() if self.family is not None else None,
            "input": self.input.to_dict() if self.input is not None else None,
            "reduced": self.reduced.to_dict() if self.reduced is not None else None,
            "notes": list(self.notes),
        }


def _num(x):
    if x is None:
        return None
    v = float(x)
    return int(v) if v.is_integer() else v


def _fmt(x):
    return f"{float(x):.6g}"


# ---------------------------------------------------------------------------
# case analysis


def _eta(alpha, beta, tol):
    return _sign(alpha**2 - beta**2, tol)


def _branch_I(rel: LinearRelation, tol):
    """delta = 0: alpha H + beta H' + gamma = 0. Returns a partial descriptor."""
    a, b, g, _ = rel.coeffs
    za, zb, zg = _zero(a, tol), _zero(b, tol), _zero(g, tol)
    if za and zg:
        raise DegenerateError("alpha = gamma = 0 with delta = 0 forces H' = 0 (umbilic)")
    eta = _eta(a, b, tol)
    if eta == 0:
        raise DegenerateError("alpha^2 - beta^2 = 0")
    if za:
        # I.1: beta H' + gamma = 0, H' = -gamma/beta
        Hp = -g / b
        return BasicClassDescriptor(3, similarity_scale=abs(Hp), eta=eta, branch="I.1",
                                    orientation=_sign(Hp, tol)), {"beta": b / g}
    if zg:
        if zb:
            return BasicClassDescriptor(1, eta=eta, branch="I.2.3"), {}
        p = _clean(-b / a)
        cid = 4 if eta < 0 else 5
        return BasicClassDescriptor(cid, p=p, eta=eta, branch="I.2.1" if eta < 0 else "I.2.2",
                                    orientation=_sign(a, tol)), {}
    if zb:
        # I.3: H = -gamma/alpha
        H = -g / a
        return BasicClassDescriptor(2, similarity_scale=2 * abs(H), eta=eta, branch="I.3",
                                    orientation=_sign(H, tol)), {"H": H}
    # I.4: H = p H' + k
    p = _clean(-b / a)
    k = -g / a
    cid = 6 if eta < 0 else 7
    return BasicClassDescriptor(cid, p=p, similarity_scale=abs(k), eta=eta,
                                branch="I.4.1" if eta < 0 else "I.4.2",
                                orientation=_sign(k, tol)), {"gamma": g / a}


def offset_roots(rel: LinearRelation, tol=DEFAULT_TOL):
    """Real roots a of 1 - a alpha - a^2 gamma = 0 (delta normalized to 1)."""
    r = rel.normalized() if rel.delta != 1 else rel
    al, ga = r.alpha, r.gamma
    if _zero(ga, tol):
        return [] if _zero(al, tol) else [1 / al]
    disc = al**2 + 4 * ga
    if disc < 0 and not _zero(disc, tol):
        return []
    if _zero(disc, tol):
        return [-al / (2 * ga)]
    s = sp.sqrt(disc)
    return [(-al + s) / (2 * ga), (-al - s) / (2 * ga)]


def pick_offset(roots):
    """Root of smallest |a|, ties toward positive a."""
    if not roots:
        raise DegenerateError("no real offset")
    return sorted(roots, key=lambda r: (abs(float(r)), -float(r)))[0]


def _parallel(rel: LinearRelation, a, eps):
    al, be, ga, de = rel.coeffs
    return LinearRelation(eps * (al + 2 * a * ga), eps * be, ga, de - a * al - a * a * ga)


def classify(rel: LinearRelation, eps: Optional[int] = None, tol: float = DEFAULT_TOL) -> BasicClassDescriptor:
    """Basic class of the relation, with offset, homothety scale and canonical PDE.

    ``eps`` is the sign sign((1 - a nu1)(1 - a nu2)) of the parallel reduction;
    it is unknown without curvature data and defaults to +1 (recorded in
    ``eps_assumed``).
    """
    if not isinstance(rel, LinearRelation):
        rel = LinearRelation(*rel)
    if rel.fractional is not None:
        A, B, C, D = rel.fractional
        if A == D and B == 0 and C == 0:
            raise UmbilicError("A = D, B = C = 0 describes umbilic surfaces only")
    if rel.is_degenerate(tol):
        raise DegenerateError("alpha^2 - beta^2 + 4 gamma delta = 0")
    eps_assumed = eps is None
    eps = 1 if eps is None else int(eps)
    if eps not in (1, -1):
        raise ParamError("eps must be +1 or -1")

    offset = sp.Integer(0)
    work = rel
    if _zero(rel.delta, tol):
        work = LinearRelation(rel.alpha, rel.beta, rel.gamma, 0)
        desc, extra = _branch_I(work, tol)
    else:
        work = rel.normalized()
        al, be, ga, _ = work.coeffs
        disc = al**2 + 4 * ga
        if _zero(al, tol) and _zero(ga, tol):
            # II.5: K' = beta H'
            desc = BasicClassDescriptor(9, similarity_scale=abs(be) / 2, branch="II.5",
                                        orientation=_sign(be, tol))
            extra = {"beta": be}
        elif disc > 0 or _zero(disc, tol):
            # II.6: offset onto a delta = 0 relation
            offset = pick_offset(offset_roots(work, tol))
            red = _parallel(work, offset, eps)
            red = LinearRelation(red.alpha, red.beta, red.gamma, 0)
            desc, extra = _branch_I(red, tol)
            desc.branch = "II.6/" + desc.branch
            work = red
        else:
            # II.7: offset kills the H term, then K' = beta' H' + gamma'
            offset = -al / (2 * ga)
            c = (4 * ga + al**2) / (4 * ga)
            be2, ga2 = eps * be / c, ga / c
            work = LinearRelation(0, be2, ga2, 1)
            if _zero(be2, tol):
                desc = BasicClassDescriptor(8, similarity_scale=sp.sqrt(-ga2), branch="II.7.1")
                extra = {"K": -ga2}
            else:
                desc = BasicClassDescriptor(10, p=_clean(be2), q=_clean(-ga2), branch="II.7.2")
                extra = {}
    desc.offset_a = _clean(offset)
    desc.similarity_scale = _clean(desc.similarity_scale)
    desc.eps = eps
    desc.eps_assumed = eps_assumed and desc.offset_a != 0
    if desc.eps_assumed:
        desc.notes.append("eps = +1 assumed for the parallel reduction")
    desc.input = rel
    desc.reduced = work
    desc.pde = canonical_rhs(desc.class_id, desc.p, desc.q)
    desc.substitution = desc.pde.substitution
    desc.family = _family_form(desc.class_id, desc.p, desc.q, extra)
    return desc


# ---------------------------------------------------------------------------
# family forms (before the homothety)


def _family_form(cid, p, q, extra) -> PdeForm:
    op = OperatorKind
    if cid in (1, 4, 5, 10):
        return canonical_rhs(cid, p, q)
    if cid == 2:
        H = abs(extra["H"])
        base = canonical_rhs(2)
        return replace(base, rhs=2 * H * sp.sinh(LAM), reduction=None)
    if cid == 3:
        b = extra["beta"]  # relation b H' + 1 = 0
        return PdeForm(op.DELTA_STAR, sp.exp(-b * NU), 2 / b * NU * (b * NU - 2), var=NU, class_id=3)
    if cid in (6, 7):
        g = extra["gamma"]  # relation H - p H' + g = 0
        rhs = p / (2 * (p - 1)) * ((1 - p) * LAM + 2 * g) * (2 * g - (p + 1) * LAM) / LAM
        kind = op.DELTA_STAR if cid == 6 else op.DELTA_BAR_STAR
        sub = f"nu = ({ex.to_text((p - 1) * LAM / 2 - g)})"
        return PdeForm(kind, LAM**p, sp.cancel(rhs), class_id=cid, p=p, substitution=sub)
    if cid == 8:
        K = extra["K"]
        base = canonical_rhs(8)
        return replace(base, rhs=-(K**2) * sp.sin(LAM), reduction=None)
    if cid == 9:
        b = extra["beta"]
        base = canonical_rhs(9)
        return replace(base, rhs=b**4 / 8, reduction=None)
    raise ParamError(f"bad class id {cid}")


def family_pde(rel: LinearRelation, eps: Optional[int] = None, tol: float = DEFAULT_TOL) -> PdeForm:
    """The natural PDE of the relation's family before the homothety to the basic class."""
    return classify(rel, eps=eps, tol=tol).family


# ---------------------------------------------------------------------------
# Euclidean counterpart


def euclidean_counterpart(form: PdeForm) -> PdeForm:
    """Same operator and lhs, rhs negated, signature flipped. An involution."""
    sig = Signature.EUCLIDEAN if form.signature == Signature.MINKOWSKI else Signature.MINKOWSKI
    return form.with_rhs(-form.rhs, signature=sig)


# ---------------------------------------------------------------------------
# table helpers


def basic_relation(class_id: int, p=None, q=None) -> LinearRelation:
    """Defining relation (alpha, beta, gamma, delta) of a basic class."""
    p = None if p is None else _coef(p)
    q = None if q is None else _coef(q)
    rows = {
        1: (1, 0, 0, 0),
        2: (1, 0, sp.Rational(-1, 2), 0),
        3: (0, 1, -1, 0),
        8: (0, 0, -1, 1),
        9: (0, 2, 0, 1),
    }
    if class_id in rows:
        return LinearRelation(*rows[class_id])
    if class_id in (4, 5):
        return LinearRelation(1, -p, 0, 0)
    if class_id in (6, 7):
        return LinearRelation(1, -p, -1, 0)
    if class_id == 10:
        return LinearRelation(0, p, -q, 1)
    raise ParamError(f"class_id must be 1..10, got {class_id}")


def table_row(class_id: int, p=None, q=None) -> dict:
    """Operator, lhs, rhs and substitution as normalized strings."""
    d = classify(basic_relation(class_id, p, q))
    f = d.pde
    return {
        "class_id": d.class_id,
        "operator": f.operator.value,
        "lhs": ex.to_text(ex.normalize(f.lhs)),
        "rhs": ex.to_text(ex.normalize(f.rhs)),
        "substitution": f.substitution,
    }


def reduction_check(desc: BasicClassDescriptor, tol=DEFAULT_TOL):
    """Residual of the offset equation of the branch used (0 when no offset)."""
    rel = desc.input.normalized() if not _zero(desc.input.delta, tol) else desc.input
    a = desc.offset_a
    if desc.branch.startswith("II.6"):
        return abs(float(1 - a * rel.alpha - a**2 * rel.gamma))
    if desc.branch.startswith("II.7"):
        return abs(float(rel.alpha + 2 * a * rel.gamma))
    return 0.0
