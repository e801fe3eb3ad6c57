"""Frozen reference matrices and comparison against computed ones."""

from __future__ import annotations

import json
from importlib import resources
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple


def load_golden(name: str) -> dict:
    p = resources.files("flopqlh") / "data" / "golden" / f"{name}.json"
    return json.loads(p.read_text())


def golden_names() -> List[str]:
    root = resources.files("flopqlh") / "data" / "golden"
    return sorted(x.name[:-5] for x in root.iterdir() if x.name.endswith(".json"))


def _locals(field) -> dict:
    names = [str(s) for s in field.symbols]
    loc = {n: s for n, s in zip(names, field.symbols)}
    if "qb0" in loc:
        loc["qb"] = loc["qb0"]
    return loc


def expand_entry(text: str, abbreviations: Dict[str, str], loc: dict):
    """Parse an entry, substituting abbreviations until none remain."""
    from sympy import Symbol, sympify

    env = dict(loc)
    abbr = {}
    for k, v in abbreviations.items():
        abbr[k] = sympify(v, locals=env)
    e = sympify(text, locals={**env, **{k: Symbol("_abbr_" + k) for k in abbreviations}})
    for _ in range(len(abbr) + 1):
        subs = {Symbol("_abbr_" + k): v for k, v in abbr.items()}
        e2 = e.subs(subs)
        if e2 == e:
            break
        e = e2
    return e


def to_field(field, text: str, abbreviations: Dict[str, str]):
    return field.K.from_sympy(expand_entry(text, abbreviations, _locals(field)).together())


def compare_matrix(field, computed: Sequence[Sequence], golden: Sequence[Sequence[str]], abbreviations: Dict[str, str]) -> List[Tuple[int, int, str, str]]:
    """List of (row, col, expected, got) for disagreeing entries."""
    bad = []
    for i, row in enumerate(golden):
        for j, txt in enumerate(row):
            exp = to_field(field, txt, abbreviations)
            got = computed[i][j]
            if exp - got:
                bad.append((i, j, txt, field.to_str(got) if got else "0"))
    return bad


@dataclass
class GoldenItem:
    name: str
    entries: int
    mismatches: List[Tuple[int, int, str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def _coeff_matrix(F, M) -> list:
    return [[F.from_coeff(c) if not c.is_zero() else F.zero for c in row] for row in M]


def _class_monomial(beta, loc):
    e = loc["q1"] ** beta.d
    if "q2" in loc:
        e *= loc["q2"] ** beta.d2
    for i, s in enumerate(beta.beta_s):
        e *= loc[f"qb{i}"] ** s
    return e


def _scalar_item(name: str, field, got, text: str, abbreviations) -> GoldenItem:
    from sympy import simplify

    exp = expand_entry(text, abbreviations, _locals(field))
    bad = [] if simplify(exp - got) == 0 else [(0, 0, text, str(got))]
    return GoldenItem(name, 1, bad)


def run_golden(name: str, scenario=None) -> List[GoldenItem]:
    """Recompute every stored quantity of a golden file and compare."""
    from . import birkhoff as bk
    from . import curveclasses as cc
    from .ifunc import DivisorOps
    from .lerayhirsch import Reducer, assemble_connection
    from .scenario import bundled

    G = load_golden(name)
    sc = scenario if scenario is not None else bundled(G["scenario"])
    X = sc.algebra()
    abbr = G.get("abbreviations", {})
    red = Reducer.for_algebra(X, sc.lift)
    C = assemble_connection(X, sc.lift, red)
    F = red.F
    items = []
    for a, mat in sorted(G["connection"].items()):
        items.append(GoldenItem(f"C_{a}", len(mat) ** 2, compare_matrix(F, C[a].entries, mat, abbr)))
    if "gauge" not in G:
        return items
    gauge = bk.gauge_from_connection(X, C, sc.weight_bound)
    n, nb = X.rank, X.base.ngen
    items.append(GoldenItem("B", n * n, compare_matrix(F, _coeff_matrix(F, gauge.total()), G["gauge"], abbr)))
    inv = bk.szero(n, nb)
    for M in gauge.inverse_blocks().values():
        inv = bk.sadd(inv, M)
    items.append(GoldenItem("B^-1", n * n, compare_matrix(F, _coeff_matrix(F, inv), G["gauge_inverse"], abbr)))
    for a, mat in sorted(G["reduced_connection"].items()):
        items.append(GoldenItem(f"C~_{a}", n * n, compare_matrix(F, _coeff_matrix(F, gauge.reduced_total(a)), mat, abbr)))
    box = sc.box
    classes = [b for b in cc.box_classes(X, *box) if not b.is_zero()]
    bf = bk.bf_gmt(X, classes)
    loc = _locals(F)
    invs = bk.extract_invariants(gauge, classes, bf.tau)
    ops = DivisorOps(X)
    names = X.basis_names()
    divisors = {"h": ops.coeffs_of("h"), "p": ops.coeffs_of("base", 0)}

    def table(direction, row, col):
        return sum((i.value * _class_monomial(i.beta, loc) for i in invs
                    if (i.direction, i.dual, i.inserted) == (direction, row, col)), 0)

    def one_point(cls_name, dots=()):
        tot = 0
        k = names.index(cls_name)
        for b, Jb in bf.J.items():
            if b.is_zero():
                continue
            v = bk.one_point_from_J(X, Jb)[k]
            for dname in dots:
                v *= cc.divisor_dot(X, divisors[dname], b)
            tot += v * _class_monomial(b, loc)
        return tot

    for label, text in sorted(G.get("invariants", {}).items()):
        parts = label.strip("<>").split(",")
        if parts[-1].endswith("*"):
            # starred labels name the entry of C~ they are read from: <a, row, col*>
            got = table(parts[0], parts[1], parts[2][:-1])
        else:
            # divisor axiom on the one-point invariant of the last insertion
            got = one_point(parts[-1], parts[:-1])
        items.append(_scalar_item(label, F, got, text, abbr))
    if "mirror_map" in G:
        items.append(GoldenItem("tau - t", 1, [] if bf.tau.is_trivial() == (G["mirror_map"] == "0") else [(0, 0, G["mirror_map"], "nonzero")]))
    if "birkhoff_P" in G:
        items.append(GoldenItem("P(z)", 1, [] if bf.P.is_trivial() == (G["birkhoff_P"] == "1") else [(0, 0, G["birkhoff_P"], "nontrivial")]))
    return items
