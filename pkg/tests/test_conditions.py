from __future__ import annotations

from acclab.accountability import Analysis, CaseTest
from acclab.conditions import (
    AXIOMS, SUFFIXES, Family, Status, check_axioms, check_compiled, check_repp_bruteforce, compile_conditions,
)
from acclab.evaluation import evaluate, is_guarded
from acclab.formulas import to_tamarin
from acclab.parsing import parse_formula, parse_protocol
from acclab.protocol import EnumerationBounds, enumerate_traces
from acclab.terms import Fact, Var, pub
from acclab.trace import Trace

from conftest import setup_for


def case(name, text):
    return CaseTest.build(name, parse_formula(text))


def statuses(entries):
    return {e.key: e.status for e in entries}


def test_axioms_pass_on_db(db_setup):
    res = check_axioms(db_setup.analysis)
    assert [e.name for e in res] == list(AXIOMS)
    assert all(e.ok for e in res)


def test_axioms_vacuous_on_satisfying_universe():
    t = Trace([{Fact("Other", (pub("P1"),))}])
    a = Analysis([t], [case("t1", "Ex #i. A(x)@i")], parse_formula("not(Ex x #i. A(x)@i)"))
    assert all(e.ok for e in check_axioms(a))
    assert a.unsatisfiable_tests() == ["t1"]


def test_one_test_compiles_to_seven():
    cs = compile_conditions([case("t1", "Ex #i. A(x)@i")], parse_formula("not(Ex x #i. A(x)@i)"))
    assert len(cs) == 7
    assert sorted(c.suffix for c in cs) == sorted(SUFFIXES)
    assert {c.suffix: c.mode for c in cs} == {"suff": "exists", "single": "exists", "verif_empty": "forall",
                                              "verif_nonempty": "forall", "min": "forall", "uniq": "forall",
                                              "inj": "forall"}


def test_min_between_singletons_unsatisfiable_part():
    t1, t2 = case("t1", "Ex #i. A(x)@i"), case("t2", "Ex #i. B(y)@i")
    cs = {c.key: c for c in compile_conditions([t1, t2], parse_formula("F"))}
    text = to_tamarin(cs["min[t1]"].formula)
    assert "y = x & not(x = y)" in text
    # the strict-subset conjunct is false under any valuation
    p = pub("P1")
    assert not evaluate(Trace(), {Var("x"): p, Var("y"): p}, parse_formula("y = x & not(x = y)"))


def test_min_db_contains_strict_subset_of_manager_in_employees(db_setup):
    a = db_setup.analysis
    cs = {c.key: c for c in compile_conditions(a.tests, a.phi)}
    assert "(m = ei | m = ej) & (not(ei = m) | not(ej = m))" in to_tamarin(cs["min[t2]"].formula)


def test_compiled_all_guarded(db_setup):
    a = db_setup.analysis
    assert all(is_guarded(c.formula) for c in compile_conditions(a.tests, a.phi))


def test_compiled_pass_on_db(db_setup):
    a = db_setup.analysis
    res = check_compiled(a, compile_conditions(a.tests, a.phi))
    assert len(res) == 13
    assert all(e.ok for e in res)
    assert all(e.family is Family.TRACE_PROPERTY for e in res)


def test_uniq_fails_for_blame_all():
    a = setup_for("dmn_blame_all.msr", "dmn.acc").analysis
    res = statuses(check_compiled(a, compile_conditions(a.tests, a.phi)))
    assert res["uniq[blamed]"] is Status.FAIL
    assert statuses(check_axioms(a))["Uniq"] is Status.FAIL


def test_inj_fails_when_variables_coincide():
    p = parse_protocol("rule R: [] --[Corrupted($x), B($x, $x)]-> []")
    u = enumerate_traces(p, EnumerationBounds(1, ("P1", "P2")))
    a = Analysis(u, [case("t", "Ex #i. B(x, y)@i")], parse_formula("not(Ex x y #i. B(x, y)@i)"))
    res = statuses(check_compiled(a, compile_conditions(a.tests, a.phi)))
    assert res["inj[t]"] is Status.FAIL
    rep = check_repp_bruteforce(a, inj_ok=False)
    assert rep.status is Status.SKIPPED and rep.reason == "InsI failed"


def test_repp_passes_on_br_fixture(db_setup):
    assert check_repp_bruteforce(db_setup.analysis).ok


def test_repp_missing_counterfactual(db_setup):
    a = db_setup.analysis
    m = Var("m")
    # drop every trace whose only match blames A1 alone with A1 the only corrupted party
    gone = {i for i in range(len(a)) if len(a.ctr[i]) == 1
            and next(iter(a.ctr[i]))[1] == {m: pub("A1")} and a.cor[i] == {pub("A1")}}
    assert gone
    keep = [t for i, t in enumerate(a.universe) if i not in gone]
    b = Analysis(keep, a.tests, a.phi)
    rep = check_repp_bruteforce(b)
    assert rep.status is Status.FAIL
    _, name, rho, _, want = rep.witnesses[0]
    assert name == "t1" and rho == "{m->'A1'}" and want == ["'A1'"]


def test_axiom_and_tp_agree_on_fixtures():
    for msr, acc in [("db.msr", "db.acc"), ("db.msr", "db_no_t2.acc"), ("dmn_blame_all.msr", "dmn.acc"),
                     ("dmn_blame_first.msr", "dmn.acc"), ("db_single.msr", "db.acc")]:
        a = setup_for(msr, acc).analysis
        ax = {e.name: e.ok for e in check_axioms(a)}
        tp = check_compiled(a, compile_conditions(a.tests, a.phi))

        def all_ok(s):
            return all(e.ok for e in tp if e.name == s)

        assert ax["Ver"] == (all_ok("verif_empty") and all_ok("verif_nonempty")), msr
        assert ax["Min"] == all_ok("min"), msr
        assert ax["Uniq"] == all_ok("uniq"), msr
