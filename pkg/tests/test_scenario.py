import json

import pytest

from flopqlh.scenario import ScenarioError, bundled, bundled_names, load_scenario_file, scenario_from_dict


def test_bundled_names():
    names = bundled_names()
    for n in ("hirzebruch", "p1flop_00_01", "regfibre_r1", "regfibre_r2"):
        assert n in names


def test_p1flop_scenario():
    sc = bundled("p1flop_00_01")
    assert sc.r == 1 and sc.base.name == "p1"
    assert sc.mu == ((0,), (0,)) and sc.mu_p == ((0,), (1,))


def test_hirzebruch_scenario():
    sc = bundled("hirzebruch")
    assert sc.kind == "bundle" and sc.mu == ((0,), (1,))


def test_roundtrip(tmp_path):
    sc = bundled("p1flop_mm_00")
    p = tmp_path / "s.json"
    p.write_text(json.dumps(sc.to_json()))
    assert load_scenario_file(p) == sc


def base_dict(**kw):
    d = {"name": "t", "kind": "flop", "r": 1, "base": "p1", "F_degrees": [[0], [0]], "Fprime_degrees": [[0], [1]]}
    d.update(kw)
    return d


@pytest.mark.parametrize(
    "kw,field",
    [
        ({"F_degrees": [[0]]}, "F_degrees"),
        ({"Fprime_degrees": [[0], [0], [0]]}, "Fprime_degrees"),
        ({"F_degrees": [[0, 1], [0]]}, "F_degrees[0]"),
        ({"r": 0}, "r"),
        ({"box": [1, 2]}, "box"),
        ({"lift": "other"}, "lift"),
        ({"sign_twist": "maybe"}, "sign_twist"),
        ({"base": "p2"}, "base"),
        ({"weight_bound": -1}, "weight_bound"),
    ],
)
def test_schema_errors_name_the_field(kw, field):
    with pytest.raises(ScenarioError) as exc:
        scenario_from_dict(base_dict(**kw))
    assert str(exc.value).startswith(field)


def test_missing_file(tmp_path):
    with pytest.raises(ScenarioError):
        load_scenario_file(tmp_path / "nope.json")


def test_invalid_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{")
    with pytest.raises(ScenarioError):
        load_scenario_file(p)


def test_flopped_swaps_bundles():
    sc = bundled("p1flop_00_01").flopped()
    assert sc.mu == ((0,), (1,)) and sc.mu_p == ((0,), (0,))
    with pytest.raises(ScenarioError):
        bundled("hirzebruch").flopped()
