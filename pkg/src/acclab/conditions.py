"""Verification conditions: semantic axioms, compiled trace properties and RepP."""

from __future__ import annotations

import itertools
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum

from .accountability import Analysis, CaseTest
from .errors import SortError, SpecError
from .evaluation import first_witness, guard_errors, lift_exists
from .formulas import (
    At, Eq, Exists, Forall, Formula, Implies, Not, Verum, all_var_names, conj, disj, fresh_name,
    rename_bound_apart, substitute_formula,
)
from .terms import CORRUPTED, Fact, Sort, Var, extend_to_bijection, term_key


class Family(str, Enum):
    AXIOM = "axiom"
    TRACE_PROPERTY = "trace-property"
    SYNTACTIC = "syntactic"


class Status(str, Enum):
    PASS = "pass"
    FAIL = "fail"
    SKIPPED = "skipped"


@dataclass
class ConditionEntry:
    name: str
    family: Family
    status: Status
    test: str | None = None
    witnesses: list = field(default_factory=list)
    reason: str = ""

    @property
    def ok(self) -> bool:
        return self.status is Status.PASS

    @property
    def key(self) -> str:
        return self.name if self.test is None else f"{self.name}[{self.test}]"


def _entry(name, family, bad, test=None, limit=3) -> ConditionEntry:
    return ConditionEntry(name, family, Status.FAIL if bad else Status.PASS, test, list(bad[:limit]))


# ---------------------------------------------------------------- axioms

AXIOMS = ("Ver", "Min", "Suff", "Uniq", "Comp")


def check_axioms(a: Analysis, limit: int = 3) -> list[ConditionEntry]:
    """Evaluate the five verdict-function axioms by brute force over the universe."""
    n = len(a)
    ver = [i for i in range(n) if (not a.vf[i]) != a.sat[i]]
    minimal = [(i, s) for i in range(n) for s in a.vf[i] if any(o < s for o in a.vf[i])]
    uniq = [(i, s) for i in range(n) for s in a.vf[i] if not s <= a.cor[i]]

    suff = []
    for i in range(n):
        for s in a.vf[i]:
            if not any(a.vf[j] == {s} and a.cor[j] <= s for j in a.successors(i)):
                suff.append((i, s))

    # the first conjunct forces vf(t') = {S}, so S ranges over singleton verdicts of related traces
    comp = []
    for i in range(n):
        if a.sat[i]:
            continue
        cands = {next(iter(a.vf[j])) for j in a.successors(i)
                 if len(a.vf[j]) == 1 and a.cor[j] <= next(iter(a.vf[j]))}
        for s in cands:
            if s in a.vf[i] or not s <= a.cor[i]:
                continue
            if any(o < s for o in a.vf[i]):
                continue
            comp.append((i, s))
    fam = Family.AXIOM
    return [
        _entry("Ver", fam, ver, limit=limit),
        _entry("Min", fam, minimal, limit=limit),
        _entry("Suff", fam, suff, limit=limit),
        _entry("Uniq", fam, uniq, limit=limit),
        _entry("Comp", fam, comp, limit=limit),
    ]


# ---------------------------------------------------------------- compiled conditions

SUFFIXES = ("suff", "verif_empty", "verif_nonempty", "min", "uniq", "inj", "single")
EXISTS_MODE = {"suff", "single"}


@dataclass(frozen=True)
class CompiledCondition:
    suffix: str
    test: str | None
    formula: Formula

    @property
    def mode(self) -> str:
        return "exists" if self.suffix in EXISTS_MODE else "forall"

    @property
    def key(self) -> str:
        return self.suffix if self.test is None else f"{self.suffix}[{self.test}]"


def rename_apart(tests: Sequence[CaseTest]) -> tuple:
    """Give every test free-variable names not used by any other test."""
    out = []
    taken: set[str] = set()
    for ct in tests:
        others = set()
        for other in tests:
            if other is not ct:
                others |= all_var_names(other.formula)
        mapping = {}
        for v in ct.fv:
            if v.name in taken or v.name in others:
                nv = Var(fresh_name(v.name, taken | others | all_var_names(ct.formula)), v.sort)
                mapping[v] = nv
            taken.add(mapping.get(v, v).name)
        if mapping:
            body = substitute_formula(ct.formula, mapping)
            ct = CaseTest(ct.name, body, tuple(mapping.get(v, v) for v in ct.fv))
        out.append(ct)
    return tuple(out)


class _Builder:
    """Inlines case tests with bound variables kept apart from every other name."""

    def __init__(self, tests: Sequence[CaseTest], phi: Formula, focus: CaseTest | None = None):
        self.tests = tests
        self.used: set[str] = {v.name for v in focus.fv} if focus else set()
        self._phi = phi

    @property
    def phi(self) -> Formula:
        phi = rename_bound_apart(self._phi, self.used)
        self.used |= all_var_names(phi)
        return phi

    def fresh_vec(self, vs: Sequence[Var]) -> tuple:
        out = []
        for v in vs:
            name = fresh_name(v.name, self.used)
            self.used.add(name)
            out.append(Var(name, v.sort))
        return tuple(out)

    def fresh_var(self, base: str, sort: Sort) -> Var:
        name = fresh_name(base, self.used)
        self.used.add(name)
        return Var(name, sort)

    def lifted(self, ct: CaseTest, vec: Sequence[Var] | None = None) -> tuple[tuple, Formula]:
        """(bound variables, body) of the test instantiated to `vec`."""
        body = ct.formula
        if vec is not None and tuple(vec) != ct.fv:
            body = substitute_formula(body, dict(zip(ct.fv, vec)))
        qvars, cs = lift_exists(body, self.used)
        self.used |= {v.name for v in qvars}
        return qvars, conj(*cs)

    # the outer test is lifted before its continuation is built, so it keeps its own names

    def exists_test(self, ct: CaseTest, vec: Sequence[Var], extra=lambda: ()) -> Formula:
        qvars, body = self.lifted(ct, vec)
        return Exists(tuple(vec) + qvars, conj(body, *extra()))

    def forall_test(self, ct: CaseTest, vec: Sequence[Var], then) -> Formula:
        qvars, body = self.lifted(ct, vec)
        return Forall(tuple(vec) + qvars, Implies(body, then()))

    def not_matched(self, ct: CaseTest) -> Formula:
        vec = self.fresh_vec(ct.fv)
        qvars, body = self.lifted(ct, vec)
        return Not(Exists(vec + qvars, body))

    def strict_subset(self, w: Sequence[Var], v: Sequence[Var]) -> Formula:
        inside = conj(*(disj(*(Eq(wi, vj) for vj in v)) for wi in w))
        extra = disj(*(conj(*(Not(Eq(vj, wi)) for wi in w)) for vj in v))
        return conj(inside, extra)

    # one method per suffix

    def single(self, ct: CaseTest, corruption: bool = False) -> Formula:
        v = ct.fv

        def extra():
            w = self.fresh_vec(v)
            out = [self.forall_test(ct, w, lambda: conj(*(Eq(wi, vi) for wi, vi in zip(w, v))))]
            out += [self.not_matched(o) for o in self.tests if o is not ct]
            if corruption:
                x = self.fresh_var("a", Sort.MSG)
                k = self.fresh_var("k", Sort.TEMP)
                out.append(Forall((x, k), Implies(At(Fact(CORRUPTED, (x,)), k), disj(*(Eq(x, vi) for vi in v)))))
            return out

        return self.exists_test(ct, v, extra)

    def suff(self, ct: CaseTest) -> Formula:
        return self.single(ct, corruption=True)

    def verif_empty(self) -> Formula:
        return Implies(conj(*(self.not_matched(ct) for ct in self.tests)), self.phi)

    def verif_nonempty(self, ct: CaseTest) -> Formula:
        return self.forall_test(ct, ct.fv, lambda: Not(self.phi))

    def min(self, ct: CaseTest) -> Formula:
        v = ct.fv

        def then():
            parts = []
            for other in self.tests:
                w = self.fresh_vec(other.fv)
                parts.append(Not(self.exists_test(other, w, lambda: [self.strict_subset(w, v)])))
            return conj(*parts)

        return self.forall_test(ct, v, then)

    def uniq(self, ct: CaseTest) -> Formula:
        def then():
            parts = []
            for vi in ct.fv:
                k = self.fresh_var("k", Sort.TEMP)
                parts.append(Exists((k,), At(Fact(CORRUPTED, (vi,)), k)))
            return conj(*parts)

        return self.forall_test(ct, ct.fv, then)

    def inj(self, ct: CaseTest) -> Formula:
        pairs = [Not(Eq(a, b)) for a, b in itertools.combinations(ct.fv, 2)]
        return self.forall_test(ct, ct.fv, lambda: conj(*pairs) if pairs else Verum())


def compile_conditions(tests: Sequence[CaseTest], phi: Formula) -> list[CompiledCondition]:
    """Trace-property conditions: six per test (suffix order) plus one global VerE."""
    for ct in tests:
        errs = guard_errors(ct.formula)
        if errs:
            raise SpecError(f"test {ct.name}: {errs[0]}")
    tests = rename_apart(tests)
    out: list[CompiledCondition] = []
    for ct in tests:
        for suffix in SUFFIXES:
            if suffix == "verif_empty":
                continue
            b = _Builder(tests, phi, ct)
            out.append(CompiledCondition(suffix, ct.name, getattr(b, suffix)(ct)))
    out.append(CompiledCondition("verif_empty", None, _Builder(tests, phi).verif_empty()))
    return _ordered(out, tests)


def _ordered(conds: list, tests: Sequence[CaseTest]) -> list:
    """Lemma order: per test in suffix order, the global one in its suffix slot of the first test."""
    by = {(c.suffix, c.test): c for c in conds}
    out = []
    for idx, ct in enumerate(tests):
        for suffix in SUFFIXES:
            if suffix == "verif_empty":
                if idx == 0:
                    out.append(by[("verif_empty", None)])
                continue
            out.append(by[(suffix, ct.name)])
    return out


def check_compiled(a: Analysis, compiled: Sequence[CompiledCondition]) -> list[ConditionEntry]:
    out = []
    for c in compiled:
        w = first_witness(a.universe, c.formula, c.mode, a.theory)
        if c.mode == "forall":
            bad = [] if w is None else [a.idx(w)]
        else:
            bad = [] if w is not None else ["no trace satisfies the condition"]
        out.append(_entry(c.suffix, Family.TRACE_PROPERTY, bad, c.test))
    return out


# ---------------------------------------------------------------- RepP

def _renaming(rho, rho_prime, ct: CaseTest, domain) -> dict:
    target = [rho[v] for v in ct.fv]
    source = [rho_prime[v] for v in ct.fv]
    if len(set(target)) != len(target) or len(set(source)) != len(source):
        raise SortError("instantiation is not injective")
    return extend_to_bijection(dict(zip(source, target)), domain)


def check_repp_bruteforce(a: Analysis, inj_ok: bool = True, limit: int = 3) -> ConditionEntry:
    """Replacement property over the universe, completing each renaming to a bijection."""
    if not inj_ok:
        return ConditionEntry("RepP", Family.SYNTACTIC, Status.SKIPPED, reason="InsI failed")
    index = {}
    for j in range(len(a)):
        if len(a.ctr[j]) == 1:
            index.setdefault(next(iter(a.ctr[j])), set()).add(a.cor[j])
    singles = {}
    for (name, rho), cors in index.items():
        singles.setdefault(name, []).append((rho, cors))
    bad = []
    seen = set()
    for i in range(len(a)):
        for name, rho in a.ctr[i]:
            if (name, rho) in seen:
                continue
            seen.add((name, rho))
            ct = a.by_name[name]
            have = index.get((name, rho), set())
            for rho_prime, cors in singles.get(name, ()):
                for cor in cors:
                    try:
                        f = _renaming(rho, rho_prime, ct, cor)
                    except SortError as e:
                        bad.append((i, name, str(e)))
                        continue
                    want = frozenset(f.get(p, p) for p in cor)
                    if want not in have:
                        bad.append((i, name, _show_rho(rho), _show_rho(rho_prime), sorted(map(str, want))))
            if len(bad) >= limit:
                break
        if len(bad) >= limit:
            break
    return _entry("RepP", Family.SYNTACTIC, bad)


def _show_rho(rho) -> str:
    return "{" + ", ".join(f"{k}->{v}" for k, v in sorted(rho.items(), key=lambda kv: term_key(kv[0]))) + "}"
