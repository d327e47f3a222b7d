from __future__ import annotations

import pytest

from acclab.errors import RewriteBudgetExceeded, SortError
from acclab.parsing import parse_protocol, parse_term
from acclab.terms import (
    App, Fact, RewriteTheory, Sort, Substitution, Var, apply_subst, equal_mod_e, fresh, normalize, pair,
    party_rename, pub,
)

SIG_THEORY = """
functions: sig/2, verify/3, pk/1, sk/1, true/0
equations: verify(sig(m, sk(i)), m, pk(sk(i))) = true
rule R: [] --> []
"""


def t(text: str, consts=frozenset()):
    return parse_term(text, consts)


def test_fst_of_pair():
    assert normalize(t("fst(<'a', 'b'>)")) == pub("a")


def test_signature_verification_rewrites_to_true():
    p = parse_protocol(SIG_THEORY)
    consts = {"true"}
    lhs = t("verify(sig('m', sk('i')), 'm', pk(sk('i')))", consts)
    assert normalize(lhs, p.theory) == App("true")


def test_public_name_is_normal():
    assert normalize(pub("a")) == pub("a")


def test_normalize_idempotent():
    x = t("<fst(<'a', snd(<'b', 'c'>)>), snd(<'d', 'e'>)>")
    n = normalize(x)
    assert normalize(n) == n
    assert n == pair(pub("a"), pub("e"))


def test_equal_mod_e():
    assert equal_mod_e(t("snd(<'a', 'b'>)"), pub("b"))
    assert not equal_mod_e(pub("a"), pub("b"))
    assert equal_mod_e(t("<fst(<'a', 'b'>), 'c'>"), t("<'a', 'c'>"))


def test_budget_guard_on_divergent_theory():
    x = Var("x")
    th = RewriteTheory([(App("f", (x,)), App("f", (App("g", (x,)),)))], budget=50)
    with pytest.raises(RewriteBudgetExceeded):
        th.normalize(App("f", (pub("a"),)))


def test_apply_subst():
    x, y = Var("x"), Var("y")
    assert apply_subst(x, {x: pub("a")}) == pub("a")
    assert apply_subst(App("f", (x, y)), {x: pub("a")}) == App("f", (pub("a"), y))
    assert apply_subst(Fact("A", (x,)), {x: pub("a")}) == Fact("A", (pub("a"),))


def test_fresh_variable_cannot_take_pub_name():
    with pytest.raises(SortError):
        apply_subst(Var("n", Sort.FRESH), {Var("n", Sort.FRESH): pub("a")})
    with pytest.raises(SortError):
        Substitution({Var("x", Sort.PUB): fresh("n")})


def test_party_rename():
    m = Var("m")
    assert party_rename({m: pub("M1")}, {m: pub("M2")}) == {pub("M2"): pub("M1")}
    same = {m: pub("M1")}
    f = party_rename(same, same)
    assert all(k == v for k, v in f.items())


def test_party_rename_rejects_non_injective():
    ei, ej = Var("ei"), Var("ej")
    with pytest.raises(SortError):
        party_rename({ei: pub("E1"), ej: pub("E2")}, {ei: pub("E3"), ej: pub("E3")})


def test_party_rename_round_trip():
    a, b = Var("a"), Var("b")
    rho = {a: pub("P1"), b: pub("P2")}
    rho2 = {a: pub("P3"), b: pub("P1")}
    f, g = party_rename(rho, rho2), party_rename(rho2, rho)
    for p in rho2.values():
        assert g[f[p]] == p
