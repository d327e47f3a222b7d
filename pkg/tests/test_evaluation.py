from __future__ import annotations

import random

import pytest

from acclab.errors import EvaluationRefused
from acclab.evaluation import (
    evaluate, guard_transform, holds_exists, holds_forall, in_existential_form, is_guarded, match_instantiations,
)
from acclab.formulas import Not, Var
from acclab.oracle import oracle_instantiations
from acclab.parsing import parse_formula
from acclab.terms import Fact, Substitution, fresh, pub
from acclab.trace import Trace


def F(text):
    return parse_formula(text)


def step(*facts):
    return frozenset(facts)


def leak_m(m, d):
    return Fact("LeakManager", (pub(m), fresh(d)))


def leak_e(a, b, d):
    return Fact("LeakEmployees", (pub(a), pub(b), fresh(d)))


# the five-leak trace: two managers and three employee pairs leak
FIVE = Trace([step(leak_m("M1", "d1")), step(leak_m("M2", "d2")), step(leak_e("E1", "E2", "d3")),
              step(leak_e("E2", "E3", "d4")), step(leak_e("E1", "E3", "d5"))])


def test_case_test_instance_holds():
    t = Trace([step(leak_m("M1", "d"))])
    assert evaluate(t, {}, F("Ex data #i. LeakManager('M1', data)@i"))


def test_falsum_never_holds():
    assert not evaluate(FIVE, {}, F("F"))


def test_empty_trace_existential():
    assert not evaluate(Trace(), {}, F("Ex x #i. A(x)@i"))


def test_match_instantiations_manager_test():
    m = Var("m")
    got = match_instantiations(FIVE, F("Ex data #i. LeakManager(m, data)@i"), (m,))
    assert got == {Substitution({m: pub("M1")}), Substitution({m: pub("M2")})}


def test_match_instantiations_employee_test():
    ei, ej = Var("ei"), Var("ej")
    got = match_instantiations(FIVE, F("Ex data #i. LeakEmployees(ei, ej, data)@i"), (ei, ej))
    pairs = {(r[ei].value, r[ej].value) for r in got}
    assert pairs == {("E1", "E2"), ("E2", "E3"), ("E1", "E3")}


def test_match_instantiations_none():
    assert match_instantiations(Trace([step(Fact("Other", ()))]), F("Ex d #i. LeakManager(m, d)@i")) == set()


def test_tautology_forall():
    assert holds_forall([FIVE], F("All x d #i. LeakManager(x, d)@i ==> x = x"))


def test_is_guarded_shapes():
    assert is_guarded(F("Ex x #i. A(x)@i & x = x"))
    assert not is_guarded(F("All x. x = x"))
    # the guard atom appears after the equation that uses it
    assert is_guarded(F("Ex sid x #i. m = <sid, x> & B(m)@i"))


def test_unguarded_evaluation_refused():
    with pytest.raises(EvaluationRefused, match="All x"):
        evaluate(FIVE, {}, F("All x. x = x"))


def test_guard_transform():
    phi = F("All x #i. A(x)@i ==> x = v")
    out = guard_transform(phi)
    assert str(out) == "(Ex #k. Guarded(v) @ #k) & (All x #i. A(x) @ #i ==> x = v)"
    assert is_guarded(out) and in_existential_form(out)
    ex = F("Ex #i. A(v)@i")
    assert guard_transform(ex) is ex


def test_guard_transform_random_outputs_guarded():
    rng = random.Random(7)
    heads = ["A(x)", "B(x, y)", "B(y, x)"]
    tails = ["x = v", "not(x = v)", "(Ex #j. A(v)@j & #j < #i)", "x = v | (Ex #j. B(v, x)@j)"]
    for _ in range(20):
        h = rng.choice(heads)
        qs = "x y" if "y" in h else "x"
        out = guard_transform(F(f"All {qs} #i. {h}@i ==> {rng.choice(tails)}"))
        assert is_guarded(out)


def test_guard_transform_rejects_other_shapes():
    with pytest.raises(EvaluationRefused):
        guard_transform(F("not(Ex #i. A(v)@i)"))


def test_forall_exists_duality():
    rng = random.Random(3)
    names = [pub(p) for p in ("P1", "P2")]
    forms = [F("All x #i. A(x)@i ==> (Ex #j. B(x)@j)"), F("All x #i. A(x)@i ==> x = 'P1'"),
             F("All x y #i. C(x, y)@i ==> not(x = y)"), F("Ex x #i. A(x)@i & not(Ex #j. B(x)@j & #j < #i)")]
    for _ in range(50):
        u = []
        for _ in range(rng.randint(1, 3)):
            steps = []
            for _ in range(rng.randint(0, 3)):
                sym = rng.choice("ABC")
                args = (rng.choice(names),) if sym != "C" else (rng.choice(names), rng.choice(names))
                steps.append(step(Fact(sym, args)))
            u.append(Trace(steps))
        phi = rng.choice(forms)
        assert holds_forall(u, phi) == (not holds_exists(u, Not(phi)))


def test_instantiations_agree_with_oracle():
    ei, ej = Var("ei"), Var("ej")
    phi = F("Ex data #i. LeakEmployees(ei, ej, data)@i")
    assert match_instantiations(FIVE, phi, (ei, ej)) == oracle_instantiations(FIVE, phi, (ei, ej))
