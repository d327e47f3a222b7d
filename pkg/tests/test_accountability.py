from __future__ import annotations

import pytest

from acclab import fixture_path
from acclab.accountability import (
    Analysis, CaseTest, ExplicitRelation, apv, check_accountability, check_relation_axioms, ctr_of,
    format_verdict, is_single_matched, rel_ctr, verdict_of,
)
from acclab.errors import SpecError
from acclab.lemmas import lemma_tests
from acclab.parsing import parse_formula
from acclab.protocol import execute
from acclab.terms import Fact, Substitution, Var, pub
from acclab.trace import Trace
from acclab.workbench import load_protocol, load_spec

from conftest import setup_for


def parties(*groups):
    return frozenset(frozenset(pub(p) for p in g) for g in groups)


@pytest.fixture(scope="module")
def db():
    return load_protocol(fixture_path("db.msr"))


@pytest.fixture(scope="module")
def tests():
    spec = load_spec(fixture_path("db.acc"))
    return lemma_tests(spec, spec.lemmas[0])


@pytest.fixture(scope="module")
def five(db):
    script = [("CorruptManager", {"m": "M1"}), ("CorruptManager", {"m": "M2"}),
              ("CorruptEmployee", {"e": "E1"}), ("CorruptEmployee", {"e": "E2"}),
              ("CorruptEmployee", {"e": "E3"}), ("LeakM", {"m": "M1"}), ("LeakM", {"m": "M2"}),
              ("LeakE", {"a": "E1", "b": "E2"}), ("LeakE", {"a": "E2", "b": "E3"}),
              ("LeakE", {"a": "E1", "b": "E3"})]
    return execute(db, script)


def test_verdict_of_five_leaks(five, tests):
    assert verdict_of(five, tests) == parties(["M1"], ["M2"], ["E1", "E2"], ["E2", "E3"], ["E1", "E3"])


def test_ctr_of_five_leaks(five, tests):
    m, ei, ej = Var("m"), Var("ei"), Var("ej")
    expected = {("t1", Substitution({m: pub("M1")})), ("t1", Substitution({m: pub("M2")}))}
    for a, b in (("E1", "E2"), ("E2", "E3"), ("E1", "E3")):
        expected.add(("t2", Substitution({ei: pub(a), ej: pub(b)})))
    assert ctr_of(five, tests) == expected
    assert not is_single_matched(ctr_of(five, tests))


def test_non_violating_trace_has_empty_verdict(db, tests):
    t = execute(db, [("CorruptManager", {"m": "A1"})])
    assert verdict_of(t, tests) == frozenset()
    assert ctr_of(t, tests) == frozenset()


def test_singleton_verdict(db, tests):
    t = execute(db, [("CorruptManager", {"m": "A1"}), ("LeakM", {"m": "A1"})])
    assert verdict_of(t, tests) == parties(["A1"])
    assert is_single_matched(ctr_of(t, tests))


def test_case_test_needs_free_variable():
    with pytest.raises(SpecError, match="no free variables"):
        CaseTest.build("t", parse_formula("Ex x #i. A(x)@i"))


def test_rel_ctr_examples(db, tests):
    both = execute(db, [("CorruptManager", {"m": "A1"}), ("CorruptEmployee", {"e": "A2"}),
                        ("CorruptEmployee", {"e": "A3"}), ("LeakM", {"m": "A1"}),
                        ("LeakE", {"a": "A2", "b": "A3"})])
    alone = execute(db, [("CorruptManager", {"m": "A1"}), ("LeakM", {"m": "A1"})])
    other = execute(db, [("CorruptManager", {"m": "A2"}), ("LeakM", {"m": "A2"})])
    c = {t: ctr_of(t, tests) for t in (both, alone, other)}
    assert rel_ctr(both, alone, c[both], c[alone])
    assert rel_ctr(both, both, c[both], c[both])
    assert not rel_ctr(both, other, c[both], c[other])


# db single-session: one manager M and employees E1, E2


def test_apv_single_session(db_single_setup):
    a = db_single_setup.analysis
    p = db_single_setup.protocol
    m_only = execute(p, [("CorruptM", {}), ("LeakM", {})])
    both = execute(p, [("CorruptM", {}), ("CorruptE1", {}), ("CorruptE2", {}), ("LeakM", {}), ("LeakE", {})])
    quiet = execute(p, [("CorruptM", {})])
    assert a.apv(a.idx(m_only)) == parties(["M"])
    assert a.apv(a.idx(both)) == parties(["M"], ["E1", "E2"])
    assert a.apv(a.idx(quiet)) == frozenset()


def test_apv_single_session_values(db_single_setup):
    a = db_single_setup.analysis
    seen = {format_verdict(a.apv(i)) for i in range(len(a))}
    assert seen == {"<>", "<('M')>", "<('E1', 'E2')>", "<('M'), ('E1', 'E2')>"}


def test_apv_wrapper_requires_membership(db_single_setup):
    a = db_single_setup.analysis
    alien = Trace([{Fact("Unrelated", (pub("Z"),))}])
    with pytest.raises(SpecError):
        apv(alien, a.universe, a.phi, a.tests)


def test_relation_axioms_ctr_on_db(db_setup):
    res = {r.name: r.ok for r in check_relation_axioms(db_setup.analysis)}
    assert res == {"reflexivity": True, "transitivity": True, "corrupted_subset": True, "RelI": True, "RelE": True}


def test_identity_relation_fails_reli(db_single_setup):
    p = db_single_setup.protocol
    both = execute(p, [("CorruptM", {}), ("CorruptE1", {}), ("CorruptE2", {}), ("LeakM", {}), ("LeakE", {})])
    alone = execute(p, [("CorruptM", {}), ("LeakM", {})])
    s = db_single_setup
    a = Analysis([both, alone], s.analysis.tests, s.analysis.phi, relation=ExplicitRelation([(0, 0), (1, 1)]))
    res = {r.name: r.ok for r in check_relation_axioms(a)}
    assert res["reflexivity"]
    assert not res["RelI"]


def test_empty_relation_not_reflexive(db_single_setup):
    s = db_single_setup.analysis
    a = Analysis(s.universe[:3], s.tests, s.phi, relation=ExplicitRelation([]))
    res = {r.name: r.ok for r in check_relation_axioms(a)}
    assert not res["reflexivity"]


def test_accountability_db(db_setup):
    assert check_accountability(db_setup.analysis).ok


def test_accountability_without_employee_test():
    s = setup_for("db.msr", "db_no_t2.acc", bound=4)
    r = check_accountability(s.analysis)
    assert not r.ok
    assert r.verdict == frozenset() and r.apv
    assert any(f.symbol == "LeakEmployees" for _, f in r.witness.facts())


@pytest.mark.parametrize("which", ["db_setup", "db_single_setup"])
def test_corollaries_on_fixtures(request, which):
    a = request.getfixturevalue(which).analysis
    n = len(a)
    for i in range(n):
        v = a.apv(i)
        assert (not v) == a.sat[i]
        assert not any(x < y for x in v for y in v)
        for j in a.successors(i):
            for s2 in a.apv(j):
                assert not v or any(s <= s2 for s in v)
    for i in range(n):
        for j in range(n):
            if a.ctr[j] <= a.ctr[i]:
                assert a.vf[j] <= a.vf[i]
