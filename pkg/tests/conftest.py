import json
from pathlib import Path

import numpy as np
import sympy as sp
import pytest


def liouville(U, V, a=0.5):
    """Radial solution of lam_uu + lam_vv = exp(lam)."""
    return np.log(8 * a**2 / (1 - a**2 * (U**2 + V**2)) ** 2)


def kink(V):
    """Static kink, lam_vv = sin(lam)."""
    return 4 * np.arctan(np.exp(V))


@pytest.fixture
def report_line():
    """Print one pass/fail line per acceptance criterion."""
    def emit(num, ok, detail):
        print(f"\nACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} - {detail}")
    return emit


GOLDEN = Path(__file__).parent / "data" / "class_table.json"


def golden_rows():
    """(row, sample) pairs from the golden class table."""
    rows = json.loads(GOLDEN.read_text())["rows"]
    return [(r, s) for r in rows for s in r["samples"]]


def _subst_norm(text, sample):
    from wsurf import expr as ex

    e = ex.parse(text, variables=("nu", "lambda", "p", "q"))
    e = e.subs({ex.P: sp.Rational(sample["p"])} if "p" in sample else {})
    e = e.subs({ex.Q: sp.Rational(sample["q"])} if "q" in sample else {})
    return ex.normalize(e)


def golden_mismatches(row, sample, got):
    """Fields of ``got`` (a table_row dict) that differ from the golden row."""
    bad = []
    if got["class_id"] != row["class_id"]:
        bad.append("class_id")
    if got["operator"] != row["operator"]:
        bad.append("operator")
    for k in ("lhs", "rhs"):
        if _subst_norm(row[k], sample) != _subst_norm(got[k], sample):
            bad.append(k)
    want, have = row["substitution"], got["substitution"]
    if bool(want) != bool(have):
        bad.append("substitution")
    elif want:
        lw, rw = (s.strip() for s in want.split("=", 1))
        lh, rh = (s.strip() for s in have.split("=", 1))
        if lw != lh or _subst_norm(rw, sample) != _subst_norm(rh, sample):
            bad.append("substitution")
    return bad
