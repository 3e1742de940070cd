"""Command-line front end.

Subcommands: classify, solve, reconstruct, verify, parallel, pipeline,
convergence, export. Exit codes: 0 ok, 1 usage, 2 classification,
3 solver, 4 verification.

Run configs are YAML or JSON files. Unknown keys are rejected, and flags
given on the command line override file values.
"""

from __future__ import annotations

import argparse
import copy
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import sympy as sp
import yaml

from . import expr as ex
from . import io as wio
from .classify import LinearRelation, classify, euclidean_counterpart, fractional_to_linear
from .core import NaturalChart, invariants_from_nu
from .errors import (
    CompatibilityError,
    DegenerateError,
    NonConvergenceError,
    ParamError,
    SingularFieldError,
    SingularOffsetError,
    WSurfError,
)
from .fd import fitted_order
from .parallel import check_parallel_natural
from .pde import PdeForm, SolverConfig, canonical_rhs, solve_elliptic, solve_hyperbolic
from .reconstruct import Frame, integrate_frame
from .verify import verification_report

EXIT_OK, EXIT_USAGE, EXIT_CLASSIFY, EXIT_SOLVER, EXIT_VERIFY = 0, 1, 2, 3, 4

# named exact solutions, as expressions in u, v
PRESETS = {
    "liouville": "log(8*{a}**2/(1 - {a}**2*((u - {u0})**2 + (v - {v0})**2))**2)",
    "kink": "4*atan(exp(v - {v0}))",
}

DEFAULTS = {
    "class": None,
    "p": None,
    "q": None,
    "relation": None,
    "chart": {"u_range": [0.1, 0.9], "v_range": [0.2, 1.0], "n": 65, "n_u": None, "n_v": None,
              "a": None, "b": None, "nu0": None},
    "exact": None,
    "preset": None,
    "solver": {"max_iter": 100, "newton_tol": 1e-10, "damping": 1.0, "u_boundary": "neumann",
               "reverse": False},
    "reconstruct": {"method": "heun"},
    "verify": {"gauss_max": 1e-2, "codazzi1_max": 1e-2, "codazzi2_max": 1e-2,
               "F_max": 1e-2, "M_max": 1e-2},
    "offsets": [],
    "levels": [],
    "output": {"dir": "wsurf_out", "mesh": "surface.obj"},
}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# config


def _merge(base, new, path=""):
    for k, v in new.items():
        if k not in base:
            raise UsageError(f"unknown config key {path + k!r}")
        if isinstance(base[k], dict) and k != "preset":
            if not isinstance(v, dict):
                raise UsageError(f"config key {path + k!r} must be a mapping")
            _merge(base[k], v, path + k + ".")
        else:
            base[k] = v
    return base


def load_config(path=None, overrides=None) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if path:
        text = Path(path).read_text()
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            raise UsageError(f"cannot parse {path}: {e}") from None
        if not isinstance(data, dict):
            raise UsageError("config must be a mapping")
        _merge(cfg, data)
    if overrides:
        _merge(cfg, overrides)
    _validate(cfg)
    return cfg


def _validate(cfg):
    if cfg["class"] is None and cfg["relation"] is None:
        raise UsageError("config needs 'class' or 'relation'")
    if cfg["class"] is not None and int(cfg["class"]) not in range(1, 11):
        raise UsageError("class must be 1..10")
    if cfg["exact"] is None and cfg["preset"] is None:
        raise UsageError("config needs 'exact' (expression in u, v) or 'preset'")
    if cfg["reconstruct"]["method"] not in ("heun", "rk4"):
        raise UsageError("reconstruct.method must be heun or rk4")


def _form(cfg) -> PdeForm:
    if cfg["class"] is not None:
        return canonical_rhs(int(cfg["class"]), cfg["p"], cfg["q"])
    return classify(LinearRelation(*cfg["relation"])).pde


def _exact_expr(cfg):
    if cfg["exact"] is not None:
        return ex.parse(str(cfg["exact"]), variables=("u", "v"))
    pre = dict(cfg["preset"]) if isinstance(cfg["preset"], dict) else {"name": cfg["preset"]}
    name = pre.pop("name", None)
    if name not in PRESETS:
        raise UsageError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
    params = {"a": 0.5, "u0": 0.0, "v0": 0.0}
    unknown = set(pre) - set(params)
    if unknown:
        raise UsageError(f"unknown preset keys {sorted(unknown)}")
    params.update(pre)
    return ex.parse(PRESETS[name].format(**params), variables=("u", "v"))


def _chart(cfg, form: PdeForm, n=None) -> NaturalChart:
    c = cfg["chart"]
    red = form.reduction
    n_u = n or c["n_u"] or c["n"]
    n_v = n or c["n_v"] or c["n"]
    a = c["a"] if c["a"] is not None else red.a
    b = c["b"] if c["b"] is not None else red.b
    nu0 = c["nu0"] if c["nu0"] is not None else red.nu0
    return NaturalChart(float(a), float(b), float(nu0), tuple(map(float, c["u_range"])),
                        tuple(map(float, c["v_range"])), int(n_u), int(n_v))


def _uv_fn(e):
    f = sp.lambdify((ex.U, ex.V), e, "numpy")
    return lambda U, V: np.broadcast_to(np.asarray(f(U, V), dtype=float), np.shape(U)).copy()


def solve(cfg, n=None):
    """(form, chart, field, report) for one grid level."""
    form = _form(cfg)
    chart = _chart(cfg, form, n)
    e = _exact_expr(cfg)
    exact = _uv_fn(e)
    s = cfg["solver"]
    kw = dict(max_iter=int(s["max_iter"]), newton_tol=float(s["newton_tol"]), damping=float(s["damping"]),
              u_boundary=s["u_boundary"], reverse=bool(s["reverse"]))
    if form.operator.elliptic:
        x, rep = solve_elliptic(form, chart, SolverConfig(boundary=exact, **kw), report=True)
    else:
        v0 = chart.v_range[1] if kw["reverse"] else chart.v_range[0]
        val = _uv_fn(e.subs(ex.V, v0))
        dv = _uv_fn(sp.diff(e, ex.V).subs(ex.V, v0))
        cauchy = (lambda u: val(u, 0 * u), lambda u: dv(u, 0 * u))
        x, rep = solve_hyperbolic(form, chart, SolverConfig(cauchy=cauchy, boundary=exact, **kw), report=True)
    return form, chart, x, rep, exact


def reconstruct(form, chart, x, method="heun"):
    red = form.reduction
    nu = red.nu_field(x)
    pair = red.pair()
    grid = invariants_from_nu(chart, pair, nu)
    surf = integrate_frame(grid, Frame.standard(), method=method, chart=chart)
    return surf, pair, nu


def run_pipeline(cfg, n=None):
    form, chart, x, srep, exact = solve(cfg, n)
    surf, pair, nu = reconstruct(form, chart, x, cfg["reconstruct"]["method"])
    vrep = verification_report(surf, pair, nu)
    U, V = chart.mesh()
    vrep["solution_err"] = float(np.max(np.abs(x - exact(U, V))))
    failed = {k: vrep[k] for k, tol in cfg["verify"].items()
              if vrep.get(k) is not None and not vrep[k] < float(tol)}
    return {"form": form, "chart": chart, "x": x, "surface": surf, "solver": srep,
            "verify": vrep, "failed": failed, "pair": pair, "nu": nu}


def threads() -> int:
    raw = os.environ.get("WSURF_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"WSURF_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise UsageError("WSURF_THREADS must be >= 1")
    return n


def _round6(x):
    return f"{x:.6g}" if isinstance(x, float) else str(x)


# ---------------------------------------------------------------------------
# commands


def _relation_from_args(args):
    frac = [args.A, args.B, args.C, args.D]
    lin = [args.alpha, args.beta, args.gamma, args.delta]
    if any(v is not None for v in frac):
        if any(v is None for v in frac):
            raise UsageError("--A --B --C --D must be given together")
        return fractional_to_linear(*frac)
    if any(v is None for v in lin):
        raise UsageError("give --alpha --beta --gamma --delta or --A --B --C --D")
    return LinearRelation(*lin)


def cmd_classify(args):
    rel = _relation_from_args(args)
    d = classify(rel, eps=args.eps)
    out = d.to_dict()
    if args.euclidean:
        out["euclidean"] = euclidean_counterpart(d.pde).to_dict()
    print(wio.dumps(out))
    print(d.summary(), file=sys.stderr)
    if args.euclidean:
        print("euclidean: " + euclidean_counterpart(d.pde).text(), file=sys.stderr)
    return EXIT_OK


def _overrides(args):
    ov = {}
    if getattr(args, "n", None):
        ov["chart"] = {"n": args.n}
    if getattr(args, "cls", None):
        ov["class"] = args.cls
    if getattr(args, "max_iter", None):
        ov.setdefault("solver", {})["max_iter"] = args.max_iter
    if getattr(args, "out", None):
        ov.setdefault("output", {})["dir"] = args.out
    if getattr(args, "offset", None):
        ov["offsets"] = list(args.offset)
    return ov


def _outdir(cfg):
    d = Path(cfg["output"]["dir"])
    d.mkdir(parents=True, exist_ok=True)
    return d


def _bundle_extra(cfg, form):
    return {"class_id": form.class_id, "p": None if form.p is None else float(form.p),
            "q": None if form.q is None else float(form.q), "config": cfg}


def cmd_solve(args):
    cfg = load_config(args.config, _overrides(args))
    form, chart, x, rep, exact = solve(cfg)
    d = _outdir(cfg)
    wio.write_bundle(d / "solution.json", chart, {"x": x}, _bundle_extra(cfg, form))
    wio.write_field_csv(d / "solution.csv", chart, x)
    U, V = chart.mesh()
    out = {"solver": rep.to_dict(), "solution_err": float(np.max(np.abs(x - exact(U, V)))),
           "bundle": str(d / "solution.json")}
    wio.write_json(d / "solver_report.json", out)
    print(wio.dumps(out))
    return EXIT_OK


def _load_solution(path):
    chart, fields = wio.read_bundle(path)
    obj = wio.read_json(path)
    form = canonical_rhs(obj["class_id"], obj.get("p"), obj.get("q"))
    return form, chart, fields["x"], obj


def cmd_reconstruct(args):
    form, chart, x, _ = _load_solution(args.bundle)
    surf, _, _ = reconstruct(form, chart, x, args.method)
    wio.write_mesh(args.mesh, surf)
    if args.frames:
        wio.write_frames(args.frames, surf)
    print(wio.dumps({"mesh": str(args.mesh), "shape": list(surf.shape), "gram_defect": surf.gram_defect(),
                     "max_drift": surf.meta.get("max_drift")}))
    return EXIT_OK


def cmd_verify(args):
    form, chart, x, _ = _load_solution(args.bundle)
    surf, pair, nu = reconstruct(form, chart, x, args.method)
    rep = verification_report(surf, pair, nu)
    print(wio.dumps(rep))
    if args.tol is not None:
        keys = ("gauss_max", "codazzi1_max", "codazzi2_max", "F_max", "M_max")
        if any(not rep[k] < args.tol for k in keys):
            return EXIT_VERIFY
    return EXIT_OK


def cmd_parallel(args):
    form, chart, x, _ = _load_solution(args.bundle)
    if not args.offset:
        raise UsageError("give at least one --offset")
    red = form.reduction
    nu = red.nu_field(x)
    reports = [check_parallel_natural(chart, red.pair(), nu, a).to_dict() for a in args.offset]
    print(wio.dumps({"family": reports}))
    return EXIT_OK


def cmd_pipeline(args):
    cfg = load_config(args.config, _overrides(args))
    res = run_pipeline(cfg)
    d = _outdir(cfg)
    wio.write_mesh(d / cfg["output"]["mesh"], res["surface"])
    wio.write_bundle(d / "solution.json", res["chart"], {"x": res["x"]}, _bundle_extra(cfg, res["form"]))
    wio.write_json(d / "verification.json", res["verify"])
    wio.write_json(d / "solver_report.json", res["solver"].to_dict())
    family = []
    for a in cfg["offsets"]:
        family.append(check_parallel_natural(res["chart"], res["pair"], res["nu"], float(a)).to_dict())
    if family:
        wio.write_json(d / "parallel_family.json", {"family": family})
    summary = {"class_id": res["form"].class_id, "verify": res["verify"], "failed": res["failed"],
               "out": str(d)}
    print(wio.dumps(summary))
    for k in ("gauss_max", "codazzi1_max", "codazzi2_max", "F_max", "M_max", "solution_err"):
        print(f"{k}: {_round6(res['verify'][k])}", file=sys.stderr)
    return EXIT_VERIFY if res["failed"] else EXIT_OK


def convergence_table(cfg, levels=None):
    levels = [int(n) for n in (levels or cfg["levels"])]
    if len(levels) < 3:
        raise UsageError("a convergence study needs at least 3 grid levels")

    def one(n):
        form, chart, x, _, exact = solve(cfg, n)
        U, V = chart.mesh()
        return chart.h_u, float(np.max(np.abs(x - exact(U, V))))

    with ThreadPoolExecutor(max_workers=min(threads(), len(levels))) as pool:
        rows = list(pool.map(one, levels))
    hs = [r[0] for r in rows]
    errs = [r[1] for r in rows]
    return {"levels": levels, "h": hs, "error": errs, "order": float(fitted_order(hs, errs))}


def cmd_convergence(args):
    cfg = load_config(args.config, _overrides(args))
    tab = convergence_table(cfg, args.levels)
    print(f"{'n':>6} {'h':>12} {'max error':>14}")
    for n, h, e in zip(tab["levels"], tab["h"], tab["error"]):
        print(f"{n:>6} {h:>12.6g} {e:>14.6g}")
    print(f"fitted order {tab['order']:.6g}")
    if args.json:
        wio.write_json(args.json, tab)
    return EXIT_OK


def cmd_export(args):
    form, chart, x, _ = _load_solution(args.bundle)
    out = Path(args.output)
    if out.suffix.lower() == ".csv":
        wio.write_field_csv(out, chart, x)
    else:
        surf, _, _ = reconstruct(form, chart, x, "heun")
        wio.write_mesh(out, surf)
    print(wio.dumps({"written": str(out)}))
    return EXIT_OK


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="wsurf", description="Space-like Weingarten surfaces in Minkowski 3-space.")
    sub = p.add_subparsers(dest="cmd", parser_class=_Parser)

    c = sub.add_parser("classify", help="classify a linear curvature relation")
    for k in ("alpha", "beta", "gamma", "delta", "A", "B", "C", "D"):
        c.add_argument(f"--{k}", type=str, default=None)
    c.add_argument("--eps", type=int, choices=(1, -1), default=None)
    c.add_argument("--euclidean", action="store_true")
    c.set_defaults(fn=cmd_classify)

    def common(sp_, need_config=True):
        sp_.add_argument("config", nargs=None if need_config else "?")
        sp_.add_argument("--n", type=int)
        sp_.add_argument("--class", dest="cls", type=int)
        sp_.add_argument("--max-iter", dest="max_iter", type=int)
        sp_.add_argument("--out")
        sp_.add_argument("--offset", type=float, action="append")

    s = sub.add_parser("solve", help="solve a canonical PDE against exact boundary or Cauchy data")
    common(s)
    s.set_defaults(fn=cmd_solve)

    pl = sub.add_parser("pipeline", help="solve, reconstruct, verify, export")
    common(pl)
    pl.set_defaults(fn=cmd_pipeline)

    cv = sub.add_parser("convergence", help="error versus h over grid levels")
    common(cv)
    cv.add_argument("--levels", type=int, nargs="+")
    cv.add_argument("--json")
    cv.set_defaults(fn=cmd_convergence)

    r = sub.add_parser("reconstruct", help="integrate frames from a solution bundle")
    r.add_argument("bundle")
    r.add_argument("--mesh", default="surface.obj")
    r.add_argument("--frames")
    r.add_argument("--method", choices=("heun", "rk4"), default="heun")
    r.set_defaults(fn=cmd_reconstruct)

    v = sub.add_parser("verify", help="Gauss-Codazzi report for a solution bundle")
    v.add_argument("bundle")
    v.add_argument("--method", choices=("heun", "rk4"), default="heun")
    v.add_argument("--tol", type=float)
    v.set_defaults(fn=cmd_verify)

    pa = sub.add_parser("parallel", help="parallel-family report for a solution bundle")
    pa.add_argument("bundle")
    pa.add_argument("--offset", type=float, action="append")
    pa.set_defaults(fn=cmd_parallel)

    e = sub.add_parser("export", help="write a mesh (.obj/.ply) or field CSV from a solution bundle")
    e.add_argument("bundle")
    e.add_argument("output")
    e.set_defaults(fn=cmd_export)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if not getattr(args, "cmd", None):
            raise UsageError("missing subcommand")
        threads()
        return args.fn(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateError as e:
        print(f"classification error: {e}", file=sys.stderr)
        return EXIT_CLASSIFY
    except (NonConvergenceError, SingularFieldError) as e:
        print(f"solver error: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except (CompatibilityError, SingularOffsetError) as e:
        print(f"verification error: {e}", file=sys.stderr)
        return EXIT_VERIFY
    except (ParamError, FileNotFoundError, ValueError, WSurfError) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
