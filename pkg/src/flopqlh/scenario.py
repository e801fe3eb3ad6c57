"""Scenario data: base, fibre dimension, bundle degrees, truncation and flags."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Dict, List, Tuple

from .cohring import BaseAlgebra, TotalAlgebra, base_from_table, p1_base, point_base


class ScenarioError(ValueError):
    """Schema or consistency violation in a scenario file."""


@dataclass(frozen=True)
class Scenario:
    name: str
    r: int
    base: BaseAlgebra
    mu: Tuple[Tuple[int, ...], ...]
    mu_p: Tuple[Tuple[int, ...], ...] = ()
    kind: str = "flop"
    box: Tuple[int, int, int] = (2, 2, 6)
    weight_bound: int = 2
    lift: str = "iminimal"
    sign_twist: bool = False

    def algebra(self) -> TotalAlgebra:
        return TotalAlgebra(self.base, self.r, self.mu, self.mu_p, self.kind)

    def flopped(self) -> "Scenario":
        if self.kind != "flop":
            raise ScenarioError("only double-bundle scenarios have a flop partner")
        return replace(self, name=self.name + "_flopped", mu=self.mu_p, mu_p=self.mu)

    def with_flags(self, **kw) -> "Scenario":
        return replace(self, **kw)

    def to_json(self) -> Dict[str, Any]:
        d: Dict[str, Any] = {
            "name": self.name,
            "kind": self.kind,
            "r": self.r,
            "base": self.base.name,
            "F_degrees": [list(m) for m in self.mu],
            "box": list(self.box),
            "weight_bound": self.weight_bound,
            "lift": self.lift,
            "sign_twist": "on" if self.sign_twist else "off",
        }
        if self.kind == "flop":
            d["Fprime_degrees"] = [list(m) for m in self.mu_p]
        return d


def _base(spec: Any, path: str) -> BaseAlgebra:
    if spec == "point":
        return point_base()
    if spec == "p1":
        return p1_base()
    if isinstance(spec, dict):
        try:
            return base_from_table(spec)
        except (KeyError, TypeError, ValueError) as exc:
            raise ScenarioError(f"{path}: invalid base table ({exc})") from exc
    raise ScenarioError(f"{path}: expected 'point', 'p1' or a table object")


def _degrees(raw: Any, path: str, r: int, ngen: int) -> Tuple[Tuple[int, ...], ...]:
    if not isinstance(raw, list):
        raise ScenarioError(f"{path}: expected a list of r+1 degree entries")
    if len(raw) != r + 1:
        raise ScenarioError(f"{path}: expected {r + 1} entries (r+1), got {len(raw)}")
    out = []
    for i, e in enumerate(raw):
        if isinstance(e, int) and not isinstance(e, bool):
            e = [e]
        if not isinstance(e, list) or any(not isinstance(x, int) or isinstance(x, bool) for x in e):
            raise ScenarioError(f"{path}[{i}]: expected an integer or list of integers")
        if len(e) != ngen:
            raise ScenarioError(f"{path}[{i}]: expected {ngen} base degrees, got {len(e)}")
        out.append(tuple(e))
    return tuple(out)


def scenario_from_dict(data: Dict[str, Any]) -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("scenario: expected a JSON object")
    kind = data.get("kind", "flop")
    if kind not in ("flop", "bundle"):
        raise ScenarioError("kind: expected 'flop' or 'bundle'")
    r = data.get("r")
    if not isinstance(r, int) or isinstance(r, bool) or r < 1:
        raise ScenarioError("r: expected an integer >= 1")
    if "base" not in data:
        raise ScenarioError("base: missing")
    base = _base(data["base"], "base")
    if "F_degrees" not in data:
        raise ScenarioError("F_degrees: missing")
    mu = _degrees(data["F_degrees"], "F_degrees", r, base.ngen)
    mu_p: Tuple[Tuple[int, ...], ...] = ()
    if kind == "flop":
        if "Fprime_degrees" not in data:
            raise ScenarioError("Fprime_degrees: missing")
        mu_p = _degrees(data["Fprime_degrees"], "Fprime_degrees", r, base.ngen)
    box = data.get("box", [2, 2, 6])
    if not isinstance(box, list) or len(box) != 3 or any(not isinstance(x, int) or x < 1 for x in box):
        raise ScenarioError("box: expected three positive integers [Bs, D2, Dmax]")
    wb = data.get("weight_bound", 2)
    if not isinstance(wb, int) or wb < 0:
        raise ScenarioError("weight_bound: expected a non-negative integer")
    lift = data.get("lift", "iminimal")
    if lift not in ("iminimal", "twisted"):
        raise ScenarioError("lift: expected 'iminimal' or 'twisted'")
    tw = data.get("sign_twist", "off")
    if tw not in ("on", "off", True, False):
        raise ScenarioError("sign_twist: expected 'on' or 'off'")
    return Scenario(
        name=str(data.get("name", "scenario")),
        r=r,
        base=base,
        mu=mu,
        mu_p=mu_p,
        kind=kind,
        box=tuple(box),
        weight_bound=wb,
        lift=lift,
        sign_twist=tw in ("on", True),
    )


def load_scenario_file(path: str | Path) -> Scenario:
    p = Path(path)
    if not p.exists():
        bundled = bundled_path(str(path))
        if bundled is None:
            raise ScenarioError(f"{path}: no such file")
        p = bundled
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{p}: invalid JSON ({exc})") from exc
    return scenario_from_dict(data)


def bundled_names() -> List[str]:
    root = resources.files("flopqlh") / "data" / "scenarios"
    return sorted(x.name[:-5] for x in root.iterdir() if x.name.endswith(".json"))


def bundled_path(name: str) -> Path | None:
    if not name.endswith(".json"):
        name = name + ".json"
    root = resources.files("flopqlh") / "data" / "scenarios"
    cand = root / name
    if cand.is_file():
        return Path(str(cand))
    return None


def bundled(name: str) -> Scenario:
    p = bundled_path(name)
    if p is None:
        raise ScenarioError(f"unknown bundled scenario {name!r}")
    return load_scenario_file(p)
