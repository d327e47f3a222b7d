"""Case tests, verdicts, counterfactual relations and the a-posteriori verdict."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

from .errors import EvaluationRefused, SpecError
from .evaluation import evaluate, guard_errors, guard_transform, in_existential_form, match_instantiations
from .formulas import Formula, free_vars, ordered_free_vars, substitute_formula
from .terms import DEFAULT_THEORY, RewriteTheory, Substitution, Var, term_key
from .trace import Trace, corrupted


@dataclass(frozen=True)
class CaseTest:
    name: str
    formula: Formula
    fv: tuple

    @classmethod
    def build(cls, name: str, formula: Formula) -> CaseTest:
        """Validate a test body, bringing it into existential guarded form."""
        errs = guard_errors(formula)
        if errs:
            raise SpecError(f"test {name}: {errs[0]}")
        fv = ordered_free_vars(formula)
        if not fv:
            raise SpecError(f"test {name} has no free variables")
        try:
            body = guard_transform(formula)
        except EvaluationRefused as e:
            raise SpecError(f"test {name}: {e}") from None
        return cls(name, body, fv)

    def instantiate(self, rho) -> Formula:
        return substitute_formula(self.formula, dict(rho))

    def parties(self, rho) -> frozenset:
        return frozenset(rho[v] for v in self.fv)

    def __str__(self) -> str:
        return f"{self.name}: {self.formula}"


def as_tests(items: Iterable) -> tuple:
    """Accept CaseTests or (name, formula) pairs."""
    out = []
    for x in items:
        out.append(x if isinstance(x, CaseTest) else CaseTest.build(*x))
    names = [t.name for t in out]
    if len(set(names)) != len(names):
        raise SpecError("case test names must be unique")
    return tuple(out)


def ctr_of(t: Trace, tests: Sequence[CaseTest], theory: RewriteTheory = DEFAULT_THEORY) -> frozenset:
    """Pairs (test name, instantiation) matching `t`."""
    out = set()
    for ct in tests:
        for rho in match_instantiations(t, ct.formula, ct.fv, theory):
            out.add((ct.name, rho))
    return frozenset(out)


def _verdict_from_ctr(ctr: Iterable, tests: dict) -> frozenset:
    return frozenset(tests[name].parties(rho) for name, rho in ctr)


def verdict_of(t: Trace, tests: Sequence[CaseTest], theory: RewriteTheory = DEFAULT_THEORY) -> frozenset:
    """Verdict function induced by the tests: a set of party sets."""
    return _verdict_from_ctr(ctr_of(t, tests, theory), {ct.name: ct for ct in tests})


def is_single_matched(ctr: frozenset) -> bool:
    return len(ctr) == 1


def rel_ctr(t: Trace, t2: Trace, ctr_t: frozenset, ctr_t2: frozenset) -> bool:
    """r_ctr completed with identity pairs."""
    if t == t2:
        return True
    return bool(ctr_t2) and ctr_t2 <= ctr_t and corrupted(t2) <= corrupted(t)


class Relation:
    """Counterfactual relation over a fixed universe."""

    name = "relation"

    def related(self, a: Analysis, i: int, j: int) -> bool:
        raise NotImplementedError

    def successors(self, a: Analysis, i: int) -> list[int]:
        return [j for j in range(len(a.universe)) if self.related(a, i, j)]


class CtrRelation(Relation):
    name = "ctr"

    def related(self, a: Analysis, i: int, j: int) -> bool:
        if i == j:
            return True
        cj = a.ctr[j]
        return bool(cj) and cj <= a.ctr[i] and a.cor[j] <= a.cor[i]

    def successors(self, a: Analysis, i: int) -> list[int]:
        ci, cor = a.ctr[i], a.cor[i]
        out = {i}
        for c, members in a.ctr_groups.items():
            if c and c <= ci:
                out.update(j for j in members if a.cor[j] <= cor)
        return sorted(out)


class ExplicitRelation(Relation):
    """A finite set of index pairs into the analysed universe."""

    name = "explicit"

    def __init__(self, pairs: Iterable[tuple[int, int]]):
        self.pairs = frozenset((int(i), int(j)) for i, j in pairs)

    def related(self, a: Analysis, i: int, j: int) -> bool:
        return (i, j) in self.pairs

    def successors(self, a: Analysis, i: int) -> list[int]:
        return sorted(j for k, j in self.pairs if k == i)


class Analysis:
    """Cached per-trace facts (phi, ctr, verdict, cor) over a universe."""

    def __init__(self, universe: Sequence[Trace], tests: Sequence[CaseTest], phi: Formula,
                 theory: RewriteTheory = DEFAULT_THEORY, relation: Relation | None = None):
        if free_vars(phi):
            raise SpecError("the security property must be closed")
        errs = guard_errors(phi)
        if errs:
            raise SpecError(f"security property: {errs[0]}")
        self.universe = tuple(universe)
        self.tests = tuple(tests)
        self.by_name = {ct.name: ct for ct in self.tests}
        self.phi = phi
        self.theory = theory
        self.relation = relation or CtrRelation()
        self.index = {t: i for i, t in enumerate(self.universe)}
        self.sat = [evaluate(t, {}, phi, theory) for t in self.universe]
        self.ctr = [ctr_of(t, self.tests, theory) for t in self.universe]
        self.vf = [_verdict_from_ctr(c, self.by_name) for c in self.ctr]
        self.cor = [corrupted(t) for t in self.universe]
        self.ctr_groups: dict[frozenset, list[int]] = {}
        for i, c in enumerate(self.ctr):
            self.ctr_groups.setdefault(c, []).append(i)
        self._succ: dict[int, list[int]] = {}
        self._apv: dict[int, frozenset] = {}

    def __len__(self) -> int:
        return len(self.universe)

    def idx(self, t: Trace) -> int:
        try:
            return self.index[t]
        except KeyError:
            raise SpecError("trace is not in the universe") from None

    def successors(self, i: int) -> list[int]:
        s = self._succ.get(i)
        if s is None:
            s = self._succ[i] = self.relation.successors(self, i)
        return s

    def related(self, i: int, j: int) -> bool:
        return self.relation.related(self, i, j)

    def apv(self, i: int) -> frozenset:
        v = self._apv.get(i)
        if v is None:
            v = self._apv[i] = self._compute_apv(i)
        return v

    def _compute_apv(self, i: int) -> frozenset:
        if self.sat[i]:
            return frozenset()
        cands = {self.cor[j] for j in self.successors(i) if not self.sat[j]}
        return frozenset(s for s in cands if not any(o < s for o in cands))

    def unsatisfiable_tests(self) -> list[str]:
        """Tests that match no trace of the universe."""
        hit = {name for c in self.ctr for name, _ in c}
        return [ct.name for ct in self.tests if ct.name not in hit]


def apv(t: Trace, universe: Sequence[Trace], phi: Formula, tests: Sequence[CaseTest] = (),
        relation: Relation | None = None, theory: RewriteTheory = DEFAULT_THEORY) -> frozenset:
    """A-posteriori verdict of `t`, relative to the finite universe."""
    a = Analysis(universe, tests, phi, theory, relation)
    return a.apv(a.idx(t))


# ---------------------------------------------------------------- relation axioms

@dataclass
class AxiomResult:
    name: str
    ok: bool
    witnesses: list = field(default_factory=list)

    @property
    def status(self) -> str:
        return "pass" if self.ok else "fail"


def check_relation_axioms(a: Analysis, limit: int = 3) -> list[AxiomResult]:
    """Reflexivity, transitivity, corrupted-subset, RelI and RelE over the universe."""
    n = len(a)
    succ = [set(a.successors(i)) for i in range(n)]

    def result(name, bad):
        return AxiomResult(name, not bad, bad[:limit])

    refl = [(i,) for i in range(n) if i not in succ[i]]
    trans = []
    for i in range(n):
        for j in succ[i]:
            missing = succ[j] - succ[i]
            if missing:
                trans.append((i, j, min(missing)))
                break
        if len(trans) >= limit:
            break
    cor_sub = [(i, j) for i in range(n) for j in succ[i] if not a.cor[j] <= a.cor[i]][:limit]
    # RelI: a single-matched trace whose corruptions are exactly the blamed parties
    singles = [(j, next(iter(a.ctr[j]))) for j in range(n) if len(a.ctr[j]) == 1]
    rel_i = []
    for i in range(n):
        for j, (name, rho) in singles:
            if (name, rho) in a.ctr[i]:
                parties = a.by_name[name].parties(rho)
                if a.cor[j] == parties and parties <= a.cor[i] and j not in succ[i]:
                    rel_i.append((i, j))
        if len(rel_i) >= limit:
            break
    rel_e = [(i, j) for i in range(n) if not a.sat[i] for j in succ[i]
             if not a.sat[j] and not a.ctr[j] <= a.ctr[i]][:limit]
    return [
        result("reflexivity", refl),
        result("transitivity", trans),
        result("corrupted_subset", cor_sub),
        result("RelI", rel_i),
        result("RelE", rel_e),
    ]


# ---------------------------------------------------------------- accountability

@dataclass
class AccountabilityResult:
    ok: bool
    witness: Trace | None = None
    verdict: frozenset | None = None
    apv: frozenset | None = None

    def __bool__(self) -> bool:
        return self.ok


def check_accountability(a: Analysis) -> AccountabilityResult:
    """Verdict function equals the apv on every trace of the universe."""
    for i, t in enumerate(a.universe):
        if a.vf[i] != a.apv(i):
            return AccountabilityResult(False, t, a.vf[i], a.apv(i))
    return AccountabilityResult(True)


def format_verdict(v: frozenset) -> str:
    """Deterministic text rendering, e.g. <(M1), (E1, E2)>."""
    groups = sorted((sorted(s, key=term_key) for s in v), key=lambda g: (len(g), [term_key(x) for x in g]))
    return "<" + ", ".join("(" + ", ".join(str(x) for x in g) + ")" for g in groups) + ">"


def verdict_json(v: frozenset) -> list:
    groups = sorted((sorted(s, key=term_key) for s in v), key=lambda g: (len(g), [term_key(x) for x in g]))
    return [[str(x) for x in g] for g in groups]


def substitution_json(rho: Substitution) -> dict:
    return {str(k): str(v) for k, v in rho.items()}


def var_names(vs: Iterable[Var]) -> list[str]:
    return [str(v) for v in vs]
