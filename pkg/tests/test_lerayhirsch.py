import pytest

from flopqlh import curveclasses as cc
from flopqlh.golden import compare_matrix, load_golden
from flopqlh.lerayhirsch import check_naturality, classical_limit, lift_qde, system_soundness
from conftest import algebra, connection, reducer


def test_hirzebruch_connection_matches_reference():
    G = load_golden("hirzebruch")
    C = connection("hirzebruch")
    for a, mat in G["connection"].items():
        assert compare_matrix(C[a].field, C[a].entries, mat, G["abbreviations"]) == []


@pytest.mark.parametrize("name,dirs", [("hirzebruch", [("t1", "h"), ("p", "p")]),
                                       ("p1flop_00_01", [("t1", "h"), ("t2", "xi"), ("p", "p")])])
def test_classical_limit_is_cup_product(name, dirs):
    X = algebra(name)
    C = connection(name)
    for a, cls in dirs:
        c = X.h() if cls == "h" else X.xi() if cls == "xi" else X.divisor(0)
        assert classical_limit(X, C[a]) == X.mul_matrix(c)


def test_soundness_on_small_box():
    X = algebra("hirzebruch")
    reps = system_soundness(X, connection("hirzebruch"), cc.box_classes(X, 2, 1, 4))
    assert all(r.ok for r in reps)


def test_soundness_detects_a_wrong_entry():
    from dataclasses import replace

    X = algebra("hirzebruch")
    C = dict(connection("hirzebruch"))
    entries = [list(row) for row in C["t1"].entries]
    entries[0][1] = entries[0][1] + C["t1"].field.one
    C["t1"] = replace(C["t1"], entries=entries)
    reps = system_soundness(X, C, cc.box_classes(X, 1, 1, 3))
    assert not all(r.ok for r in reps)


def test_lifted_qde_hirzebruch():
    # (z d_p)^2 = qbar q^-1 z d_h is the only lifted relation
    rels = lift_qde(algebra("hirzebruch"))
    assert len(rels) == 1


def test_naturality_mirror_scenario():
    rep = check_naturality(algebra("p1flop_01_00"))
    assert rep.ok and rep.checked == 3 * 144


def test_naturality_detects_perturbation():
    rep = check_naturality(algebra("p1flop_01_00"), perturb=("t2", 3, 4))
    assert not rep.ok and "t2" in rep.first_failure


def test_connection_json():
    C = connection("hirzebruch")
    js = C["p"].to_json()
    assert js["direction"] == "p"
    assert js["entries"][2][0] == "1"


def test_reducer_canonical_set():
    assert len(reducer("p1flop_00_01").canon) == 12
