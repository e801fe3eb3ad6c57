"""Command line entry point: ``flopqlh <command> --scenario ...``.

Every command writes ``<command>.json`` and ``<command>.txt`` under ``--out``
(or prints the JSON when no directory is given).  Exit status is 0 when all
checks pass, 1 on a verification failure and 2 on usage or schema errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from . import curveclasses as cc
from .lerayhirsch import WatchdogError
from .scenario import Scenario, ScenarioError, bundled, bundled_names, load_scenario_file

COMMANDS = ("ifunc", "pf-check", "connection", "gauge", "mirror-map", "invariants", "flop-check", "regularize", "golden")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def resolve_scenario(arg: str) -> Scenario:
    p = Path(arg)
    if p.suffix == ".json" or p.exists():
        if not p.exists():
            raise ScenarioError(f"scenario file not found: {arg}")
        return load_scenario_file(p)
    if arg in bundled_names():
        return bundled(arg)
    raise ScenarioError(f"unknown scenario {arg!r}; bundled: {', '.join(bundled_names())}")


def parse_box(text: str) -> Tuple[int, int, int]:
    try:
        parts = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"--box expects three integers 'Bs,D2,Dmax', got {text!r}") from None
    if len(parts) != 3 or min(parts) < 1:
        raise UsageError(f"--box expects three positive integers 'Bs,D2,Dmax', got {text!r}")
    return parts  # type: ignore[return-value]


def apply_flags(sc: Scenario, ns: argparse.Namespace) -> Scenario:
    kw: Dict[str, Any] = {}
    if ns.box:
        kw["box"] = parse_box(ns.box)
    if ns.weight_bound is not None:
        if ns.weight_bound < 0:
            raise UsageError("--weight-bound must be non-negative")
        kw["weight_bound"] = ns.weight_bound
    if ns.lift:
        kw["lift"] = ns.lift
    if ns.sign_twist:
        kw["sign_twist"] = ns.sign_twist == "on"
    return replace(sc, **kw) if kw else sc


def weight_mask(sc: Scenario) -> Dict[str, Any]:
    """Weights (beta_S, d2) resolved under the scenario's weight bound."""
    from .birkhoff import candidate_weights, wstr

    X = sc.algebra()
    zero = ((0,) * X.base.ngen, 0)
    resolved = [zero] + candidate_weights(X, sc.weight_bound)
    return {"weight_bound": sc.weight_bound, "resolved": [wstr(w) for w in resolved]}


def _s(x: Any) -> Any:
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, cc.CurveClass):
        return x.key()
    if isinstance(x, dict):
        return {str(k): _s(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_s(v) for v in x]
    return x


class Result:
    def __init__(self, ok: bool, payload: Dict[str, Any], text: List[str]):
        self.ok = ok
        self.payload = payload
        self.text = text


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_ifunc(sc: Scenario, ns) -> Result:
    from .ifunc import assemble_I, homogeneity_defects

    X = sc.algebra()
    series = assemble_I(X, sc.box)
    defects = homogeneity_defects(series)
    text = [series.render(), f"homogeneity defects: {len(defects)}"]
    return Result(not defects, {"I": series.to_json(), "homogeneity_defects": _s([list(d) for d in defects])}, text)


def cmd_pf_check(sc: Scenario, ns) -> Result:
    from .pfsystem import flop_pf_identities, pf_check

    X = sc.algebra()
    reps = pf_check(X, sc.box)
    table = {r.name: {"checked": len(r.checked), "boundary": len(r.boundary), "failures": _s(r.failures)} for r in reps}
    ok = all(r.ok for r in reps)
    text = [f"{r.name}: checked {len(r.checked)}, boundary {len(r.boundary)}, residual failures {len(r.failures)}" for r in reps]
    payload: Dict[str, Any] = {"residuals": table}
    if X.kind == "flop":
        ids = flop_pf_identities(X)
        payload["flop_identities"] = {i.identity: {"ok": i.ok, "mismatch": i.first_mismatch} for i in ids}
        ok = ok and all(i.ok for i in ids)
        text += [f"{i.identity}: {'ok' if i.ok else 'FAIL'}" for i in ids]
    return Result(ok, payload, text)


def cmd_connection(sc: Scenario, ns) -> Result:
    from .lerayhirsch import Reducer, assemble_connection, system_soundness

    X = sc.algebra()
    red = Reducer.for_algebra(X, sc.lift)
    C = assemble_connection(X, sc.lift, red)
    targets = cc.box_classes(X, *sc.box)
    sound = system_soundness(X, C, targets)
    names = X.basis_names()
    text = [f"basis: {', '.join(names)}"]
    for a in sorted(C):
        text.append(f"C_{a}:")
        for k in range(X.rank):
            text.append("  [" + ", ".join(C[a].entry_str(k, e) for e in range(X.rank)) + "]")
    text += [f"soundness {s.direction}: checked {s.checked}, failures {len(s.failures)}" for s in sound]
    payload = {
        "basis": names,
        "connection": {a: C[a].to_json() for a in sorted(C)},
        "soundness": {s.direction: {"checked": s.checked, "failures": _s([list(f) for f in s.failures])} for s in sound},
    }
    return Result(all(s.ok for s in sound), payload, text)


def _gauge(sc: Scenario):
    from .birkhoff import gauge_from_connection
    from .lerayhirsch import assemble_connection

    X = sc.algebra()
    return gauge_from_connection(X, assemble_connection(X, sc.lift), sc.weight_bound)


def _smat_json(M) -> List[List[Dict[str, str]]]:
    return [[x.to_json() for x in row] for row in M]


def cmd_gauge(sc: Scenario, ns) -> Result:
    from .birkhoff import gauge_residual, wstr

    G = _gauge(sc)
    bad = gauge_residual(G)
    inv = G.inverse_blocks()
    payload = {
        "B": G.to_json(),
        "B_inverse": {wstr(w): _smat_json(M) for w, M in sorted(inv.items())},
        "reduced_connection": {a: _smat_json(G.reduced_total(a)) for a in sorted(G.reduced)},
        "residual_failures": [[a, wstr(w)] for a, w in bad],
    }
    text = ["B:"] + ["  [" + ", ".join(x.to_str() for x in row) + "]" for row in G.total()]
    for a in sorted(G.reduced):
        text.append(f"C~_{a}:")
        text += ["  [" + ", ".join(x.to_str() for x in row) + "]" for row in G.reduced_total(a)]
    text.append(f"gauge equation failures: {len(bad)}")
    return Result(not bad, payload, text)


def _bf(sc: Scenario):
    from .birkhoff import bf_gmt

    X = sc.algebra()
    classes = [b for b in cc.box_classes(X, *sc.box) if not b.is_zero()]
    return X, classes, bf_gmt(X, classes)


def cmd_mirror_map(sc: Scenario, ns) -> Result:
    X, classes, res = _bf(sc)
    bad = [b.key() for b, Jb in res.J.items() if not b.is_zero() and not Jb.nonneg_part().is_zero()]
    payload = {"P": res.P.to_json(), "tau": res.tau.to_json(), "nonnegative_z_failures": bad}
    text = [f"P(z) trivial: {res.P.is_trivial()}", f"tau = t_hat: {res.tau.is_trivial()}"]
    text += [f"  tau_{k} = {v}" for k, v in sorted(res.tau.to_json().items())]
    text.append(f"P I = 1 + O(1/z) failures: {len(bad)}")
    return Result(not bad, payload, text)


def cmd_invariants(sc: Scenario, ns) -> Result:
    from .birkhoff import extract_invariants

    X, classes, res = _bf(sc)
    G = _gauge(sc)
    invs = extract_invariants(G, classes, res.tau)
    rows = [{"label": i.label(), "value": str(i.value), "flagged": i.flagged} for i in invs]
    text = [f"{i.label()} = {i.value}" + ("  (mirror map correction)" if i.flagged else "") for i in invs]
    return Result(True, {"invariants": rows}, text)


def cmd_flop_check(sc: Scenario, ns) -> Result:
    from .birkhoff import check_flop_invariance
    from .lerayhirsch import check_naturality
    from .pfsystem import flop_pf_identities

    X = sc.algebra()
    if X.kind != "flop":
        raise UsageError("flop-check needs a double-bundle scenario")
    nat = check_naturality(X, sc.lift, sc.lift)
    inv = check_flop_invariance(X, sc.weight_bound, sc.lift, sc.lift)
    ids = flop_pf_identities(X)
    payload = {
        "naturality": {"ok": nat.ok, "checked": nat.checked, "first_failure": nat.first_failure},
        "gauge_invariance": {"ok": inv.ok, "checked": inv.checked, "first_failure": inv.first_failure},
        "pf_identities": {i.identity: i.ok for i in ids},
    }
    text = [f"T C_a = C'_a: {'ok' if nat.ok else 'FAIL ' + str(nat.first_failure)} ({nat.checked} entries)",
            f"T B = F^-1 B' G, T tau = tau': {'ok' if inv.ok else 'FAIL ' + str(inv.first_failure)} ({inv.checked} entries)"]
    text += [f"{i.identity}: {'ok' if i.ok else 'FAIL'}" for i in ids]
    return Result(nat.ok and inv.ok and all(i.ok for i in ids), payload, text)


def _beta_s(sc: Scenario, ns) -> Tuple[int, ...]:
    ng = sc.base.ngen
    if ns.beta_s is None:
        return (1,) * ng if ng else ()
    try:
        v = tuple(int(x) for x in ns.beta_s.split(",") if x.strip() != "")
    except ValueError:
        raise UsageError(f"--beta-s expects comma separated integers, got {ns.beta_s!r}") from None
    if len(v) != ng:
        raise UsageError(f"--beta-s needs {ng} entries for base {sc.base.name}")
    return v


def cmd_regularize(sc: Scenario, ns) -> Result:
    from .regularize import partial_bf1, partial_bf2

    X = sc.algebra()
    if X.kind != "flop":
        raise UsageError("regularize needs a double-bundle scenario")
    bs = _beta_s(sc, ns)
    d2 = ns.d2 if ns.d2 is not None else 0
    try:
        if ns.step == 2:
            rep = partial_bf2(X, bs, d2, sc.sign_twist)
            payload = {
                "lambda": rep.lam,
                "first_series": {str(d): ok for d, ok in rep.first_series},
                "naive_first_series": {str(d): ok for d, ok in rep.naive_first_series},
                "trouble_coefficient": _s(rep.trouble_coefficient),
                "trouble_expected": _s(rep.trouble_expected),
                "second_step_harmonic": _s(rep.p2_harmonic),
            }
            text = [f"lambda = {rep.lam}",
                    f"first stable series vanishes: {rep.first_series_vanishes}",
                    f"H_(d-1) coefficient of the first-step residual matches -(c1+c1')Theta P: {rep.trouble_term_ok}"]
            return Result(rep.ok, payload, text)
        rep1 = partial_bf1(X, bs, d2, sc.sign_twist)
    except ValueError as e:
        raise UsageError(str(e)) from None
    rows = rep1.table()
    payload = {
        "lambda": _lam(X, bs, d2),
        "rows": rows,
        "polynomial": _s(list(rep1.polynomial.c)) if rep1.polynomial is not None else None,
        "checks": {
            "stable_polynomiality": rep1.stable_ok,
            "matches_polynomial_part": rep1.matches_polynomial_part,
            "pri_formula": rep1.pri_formula_ok,
            "flop_difference_polynomial": rep1.flop_ok,
            "top_defect": rep1.top_defect_ok,
            "positive_levels": rep1.positive_levels_ok,
            "vanishing_when_lambda_large": rep1.clause_c,
            "euler_identity": rep1.euler_ok,
        },
        "notes": list(rep1.notes),
    }
    text = ["d  range  Reg  Pri  P(d)  defect"]
    for r in rows:
        pri = " ".join(f"{k}:{v}" for k, v in r["Pri"].items()) or "0"
        text.append(f"{r['d']}  {r['range']}  {r['Reg']}  {pri}  {r['P']}  {r['defect'] or '-'}")
    text += [f"{k}: {v}" for k, v in payload["checks"].items()]
    return Result(rep1.ok, payload, text)


def _lam(X, bs, d2) -> int:
    from .regularize import Fibre

    return Fibre(X, bs, d2, 0).lam


def cmd_golden(sc: Optional[Scenario], ns) -> Result:
    from .golden import golden_names, load_golden, run_golden

    name = ns.name or (sc.name if sc else None)
    if name not in golden_names():
        raise UsageError(f"no golden data for {name!r}; available: {', '.join(golden_names())}")
    items = run_golden(name, sc)
    G = load_golden(name)
    payload: Dict[str, Any] = {
        "items": {
            it.name: {"entries": it.entries, "ok": it.ok,
                      "mismatches": [{"row": i, "col": j, "expected": e, "got": g} for i, j, e, g in it.mismatches]}
            for it in items
        }
    }
    if ns.expand_abbrev:
        from .golden import expand_entry

        abbr = G.get("abbreviations", {})
        payload["abbreviations"] = {k: str(expand_entry(v, abbr, _symbols())) for k, v in sorted(abbr.items())}
    text = [f"{it.name}: {it.entries - len(it.mismatches)}/{it.entries} {'ok' if it.ok else 'FAIL'}" for it in items]
    for it in items:
        for i, j, e, g in it.mismatches[:5]:
            text.append(f"  {it.name}[{i}][{j}]: expected {e}, got {g}")
    return Result(all(it.ok for it in items), payload, text)


def _symbols() -> Dict[str, Any]:
    from sympy import Symbol

    return {n: Symbol(n) for n in ("z", "q1", "q2", "qb0", "qb")}


HANDLERS: Dict[str, Callable] = {
    "ifunc": cmd_ifunc,
    "pf-check": cmd_pf_check,
    "connection": cmd_connection,
    "gauge": cmd_gauge,
    "mirror-map": cmd_mirror_map,
    "invariants": cmd_invariants,
    "flop-check": cmd_flop_check,
    "regularize": cmd_regularize,
    "golden": cmd_golden,
}


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="flopqlh", description="Exact quantum Leray-Hirsch computations for split local flops.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        if name == "golden":
            p.add_argument("name", nargs="?", help="golden data set (hirzebruch, p1flop_00_01)")
        p.add_argument("--scenario", help="bundled scenario name or path to a JSON file")
        p.add_argument("--out", help="output directory for <command>.json and <command>.txt")
        p.add_argument("--box", help="truncation box 'Bs,D2,Dmax'")
        p.add_argument("--weight-bound", type=int)
        p.add_argument("--lift", choices=("iminimal", "twisted"))
        p.add_argument("--sign-twist", choices=("on", "off"))
        p.add_argument("--expand-abbrev", action="store_true", help="expand golden abbreviations in the output")
        if name == "regularize":
            p.add_argument("--beta-s", help="base class, comma separated")
            p.add_argument("--d2", type=int)
            p.add_argument("--step", type=int, choices=(1, 2), default=1)
    return ap


def dump(payload: Dict[str, Any]) -> str:
    return json.dumps(payload, sort_keys=True, indent=1) + "\n"


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        sc: Optional[Scenario] = None
        if ns.scenario:
            sc = resolve_scenario(ns.scenario)
        elif ns.command == "golden":
            name = ns.name
            if name is None:
                raise UsageError("golden needs a data set name or --scenario")
            sc = bundled(name) if name in bundled_names() else None
        else:
            raise UsageError(f"{ns.command} needs --scenario")
        if sc is not None:
            sc = apply_flags(sc, ns)
        res = HANDLERS[ns.command](sc, ns)
    except (ScenarioError, UsageError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except WatchdogError as e:
        # the computation gave up; nothing was verified
        print(f"error: {e}", file=sys.stderr)
        return 1
    payload = {
        "command": ns.command,
        "scenario": sc.to_json() if sc is not None else None,
        "resolved_weights": weight_mask(sc) if sc is not None else None,
        "ok": res.ok,
        "result": res.payload,
    }
    status = "PASS" if res.ok else "FAIL"
    if ns.out:
        out = Path(ns.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{ns.command}.json").write_text(dump(payload))
        (out / f"{ns.command}.txt").write_text("\n".join(res.text + [status]) + "\n")
        print("\n".join(res.text))
        print(status)
    else:
        sys.stdout.write(dump(payload))
    return 0 if res.ok else 1


if __name__ == "__main__":
    sys.exit(main())
