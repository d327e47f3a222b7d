"""Labelled multiset rewriting protocols and bounded trace enumeration."""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

from .errors import ArityError, SortError, SpecError, StateCapExceeded
from .formulas import Formula, free_vars
from .terms import (
    CORRUPTED, RESERVED_FACTS, App, Fact, Name, RewriteTheory, Signature, Sort, Term, Var,
    fact_key, match, pub, substitute, subterms,
)
from .trace import Trace, rename_parties

FRESH_FACT = "Fr"


@dataclass(frozen=True)
class Rule:
    name: str
    premises: tuple
    actions: tuple
    conclusions: tuple
    fresh: tuple = ()
    # pub variables that are not bound by premises; drawn from the party pool
    free_pub: tuple = field(default=(), compare=False)

    @classmethod
    def build(cls, name: str, premises: Iterable[Fact], actions: Iterable[Fact],
              conclusions: Iterable[Fact], fresh_vars: Iterable[Var] = ()) -> Rule:
        fresh = list(dict.fromkeys(fresh_vars))
        prem = []
        for f in premises:
            if f.symbol == FRESH_FACT:
                if len(f.args) != 1 or not (isinstance(f.args[0], Var) and f.args[0].sort is Sort.FRESH):
                    raise SortError(f"{FRESH_FACT} takes a single fresh variable, got {f}")
                if f.args[0] not in fresh:
                    fresh.append(f.args[0])
            else:
                prem.append(f)
        acts, concl = tuple(actions), tuple(conclusions)
        for f in (*prem, *acts, *concl):
            want = RESERVED_FACTS.get(f.symbol)
            if want is not None and len(f.args) != want:
                raise ArityError(f"{f.symbol} takes {want} argument, got {f}")
            for v in f.variables():
                if v.sort is Sort.TEMP:
                    raise SortError(f"temporal variable {v} cannot occur in a rule")
        bound: set[Var] = set()
        for f in prem:
            bound |= f.variables()
        for v in fresh:
            if v in bound:
                raise SortError(f"fresh variable {v} also occurs in a premise")
        late: set[Var] = set()
        for f in (*acts, *concl):
            late |= f.variables()
        for v in sorted(late - bound - set(fresh), key=lambda x: x.name):
            if v.sort is Sort.FRESH:
                fresh.append(v)  # implicit fresh binding
            elif v.sort is not Sort.PUB:
                raise SortError(f"variable {v} is not bound by a premise")
        free_pub = tuple(sorted({v for v in late | bound if v.sort is Sort.PUB} - bound, key=lambda x: x.name))
        return cls(name, tuple(prem), acts, concl, tuple(fresh), free_pub)

    def facts(self):
        yield from self.premises
        yield from self.actions
        yield from self.conclusions

    def __str__(self) -> str:
        def show(fs):
            return "[" + ", ".join(str(f) for f in fs) + "]"
        arrow = f"--{show(self.actions)}->" if self.actions else "-->"
        return f"rule {self.name}: {show(self.premises)} {arrow} {show(self.conclusions)}"


def default_pool(n: int) -> tuple:
    return tuple(pub(f"A{k}") for k in range(1, n + 1))


DEFAULT_PARTIES = 3


class ProtocolSpec:
    """Signature, theory, rules, declared party pool and restrictions."""

    def __init__(self, signature: Signature, theory: RewriteTheory, rules: Sequence[Rule],
                 parties: int | Sequence[str] | None = None,
                 restrictions: Sequence[tuple[str, Formula]] = ()):
        self.signature = signature
        self.theory = theory
        self.rules = tuple(rules)
        self.parties = parties
        self.restrictions = tuple(restrictions)
        names = [r.name for r in self.rules]
        dup = {n for n in names if names.count(n) > 1}
        if dup:
            raise SpecError(f"duplicate rule name {sorted(dup)[0]}")
        arities: dict[str, int] = dict(RESERVED_FACTS)
        for r in self.rules:
            for f in r.facts():
                for a in f.args:
                    try:
                        signature.check(a)
                    except ArityError as e:
                        raise SpecError(f"rule {r.name}: {e}") from None
                known = arities.setdefault(f.symbol, len(f.args))
                if known != len(f.args):
                    raise SpecError(f"rule {r.name}: fact {f.symbol} used with arities {known} and {len(f.args)}")
        from .evaluation import guard_errors
        for name, phi in self.restrictions:
            if free_vars(phi):
                raise SpecError(f"restriction {name} has free variables")
            errs = guard_errors(phi)
            if errs:
                raise SpecError(f"restriction {name}: {errs[0]}")
        if isinstance(parties, int) and parties < 1:
            raise SpecError("parties must be at least 1")

    def pool(self, size: int | None = None) -> tuple:
        """Party names; an explicit `size` overrides the declared pool."""
        if size is not None:
            return default_pool(size)
        if isinstance(self.parties, int):
            return default_pool(self.parties)
        if self.parties:
            return tuple(pub(p) for p in self.parties)
        return default_pool(DEFAULT_PARTIES)

    def rule(self, name: str) -> Rule:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)


@dataclass(frozen=True)
class EnumerationBounds:
    bound: int = 5
    parties: tuple = field(default_factory=lambda: default_pool(DEFAULT_PARTIES))
    state_cap: int = 10 ** 6

    def __post_init__(self):
        # plain strings name public parties
        object.__setattr__(self, "parties", tuple(pub(p) if isinstance(p, str) else p for p in self.parties))
        if self.bound < 1 or not self.parties or self.state_cap < 1:
            raise SpecError("enumeration bounds must all be at least 1")


# ---------------------------------------------------------------- fresh names

def _fresh_in(t: Term, out: list) -> None:
    if isinstance(t, Name):
        if t.sort is Sort.FRESH and t not in out:
            out.append(t)
    elif isinstance(t, App):
        for a in t.args:
            _fresh_in(a, out)


def _rename_names(t: Term, f: Mapping) -> Term:
    if isinstance(t, Name):
        return f.get(t, t)
    if isinstance(t, App):
        return App(t.fun, tuple(_rename_names(a, f) for a in t.args))
    return t


def _rename_fact(x: Fact, f: Mapping) -> Fact:
    return Fact(x.symbol, tuple(_rename_names(a, f) for a in x.args))


def _canonical_map(groups: Sequence[Iterable[Fact]]) -> dict:
    """Fresh-name renaming giving the lexicographically least group sequence.

    Names are numbered by the group in which they first appear; ties inside a
    group are resolved by trying every order of that group's new names and
    carrying all minimal candidates forward.
    """
    cands: list[dict] = [{}]
    n = 0
    for group in groups:
        group = list(group)
        new: list = []
        for x in group:
            for a in x.args:
                _fresh_in(a, new)
        new = [m for m in new if m not in cands[0]]
        if not new:
            continue
        best, keep = None, []
        targets = [Name(f"fn{n + k}", Sort.FRESH) for k in range(1, len(new) + 1)]
        for c in cands:
            for perm in itertools.permutations(targets):
                ext = dict(c)
                ext.update(zip(new, perm))
                key = tuple(sorted(fact_key(_rename_fact(x, ext)) for x in group))
                if best is None or key < best:
                    best, keep = key, [ext]
                elif key == best:
                    keep.append(ext)
        cands = keep
        n += len(new)
    return cands[0]


def canonical_trace(t: Trace) -> Trace:
    """Rename fresh names to fn1, fn2, ... in canonical first-occurrence order."""
    f = _canonical_map(t.steps)
    if all(k == v for k, v in f.items()):
        return t
    return Trace([_rename_fact(x, f) for x in step] for step in t.steps)


# ---------------------------------------------------------------- enumeration

@dataclass(frozen=True)
class _Instance:
    rule: Rule
    consumed: tuple
    actions: tuple
    conclusions: tuple


def _premise_matches(prem: tuple, state: tuple, binding: dict):
    """Yield (binding, consumed indices) for every way to consume `prem` from `state`."""
    if not prem:
        yield binding, ()
        return
    first, rest = prem[0], prem[1:]
    tried = set()
    for i, f in enumerate(state):
        if f.symbol != first.symbol or len(f.args) != len(first.args) or f in tried:
            continue
        tried.add(f)  # identical facts give identical successors
        b = dict(binding)
        if all(_extend(pa, ta, b) for pa, ta in zip(first.args, f.args)):
            remaining = state[:i] + state[i + 1:]
            for b2, used in _premise_matches(rest, remaining, b):
                yield b2, (f,) + used


def _extend(p: Term, t: Term, b: dict) -> bool:
    m = match(p, t, b)
    if m is None:
        return False
    b.update(m)
    return True


def _instances(rule: Rule, state: tuple, pool: tuple, next_fresh: int, th: RewriteTheory,
               fixed: Mapping | None = None):
    seen = set()
    for b, used in _premise_matches(rule.premises, state, dict(fixed or {})):
        pending = [v for v in rule.free_pub if v not in b]
        for choice in itertools.product(pool, repeat=len(pending)):
            full = dict(b)
            full.update(zip(pending, choice))
            for k, v in enumerate(rule.fresh):
                full.setdefault(v, Name(f"fn{next_fresh + k}", Sort.FRESH))
            acts = tuple(sorted({Fact(f.symbol, tuple(th.normalize(substitute(a, full)) for a in f.args))
                                 for f in rule.actions}, key=fact_key))
            concl = tuple(Fact(f.symbol, tuple(th.normalize(substitute(a, full)) for a in f.args))
                          for f in rule.conclusions)
            key = (tuple(sorted(used, key=fact_key)), acts, tuple(sorted(concl, key=fact_key)))
            if key in seen:
                continue
            seen.add(key)
            yield _Instance(rule, key[0], acts, concl)


def _apply(state: tuple, inst: _Instance) -> tuple:
    rest = list(state)
    for f in inst.consumed:
        rest.remove(f)
    rest.extend(inst.conclusions)
    return tuple(sorted(rest, key=fact_key))


def _restrictions_hold(spec: ProtocolSpec, t: Trace) -> bool:
    if not spec.restrictions:
        return True
    from .evaluation import evaluate
    return all(evaluate(t, {}, phi, spec.theory) for _, phi in spec.restrictions)


def _canonical_node(steps: tuple, state: tuple) -> tuple[tuple, tuple, int]:
    f = _canonical_map([*steps, state])
    if any(k != v for k, v in f.items()):
        steps = tuple(frozenset(_rename_fact(x, f) for x in s) for s in steps)
        state = tuple(sorted((_rename_fact(x, f) for x in state), key=fact_key))
    return steps, state, len(f)


def enumerate_traces(spec: ProtocolSpec, bounds: EnumerationBounds) -> list[Trace]:
    """All traces reachable with at most `bounds.bound` rule applications.

    Restrictions prune any step whose resulting trace violates one of them,
    so they act as safety properties on every prefix. The result is
    deduplicated modulo fresh renaming and sorted canonically.
    """
    th = spec.theory
    pool = tuple(bounds.parties)
    found: set[Trace] = set()
    best: dict = {}
    expanded = 0
    stack = [((), (), 0, bounds.bound)]
    while stack:
        steps, state, nfresh, left = stack.pop()
        found.add(canonical_trace(Trace(steps)))
        if left == 0:
            continue
        key = (steps, state)
        if best.get(key, -1) >= left:
            continue
        best[key] = left
        expanded += 1
        if expanded > bounds.state_cap:
            raise StateCapExceeded(f"more than {bounds.state_cap} states explored")
        for rule in spec.rules:
            for inst in _instances(rule, state, pool, nfresh + 1, th):
                new_steps = steps + (frozenset(inst.actions),) if inst.actions else steps
                if inst.actions and not _restrictions_hold(spec, Trace(new_steps)):
                    continue
                s2, st2, n2 = _canonical_node(new_steps, _apply(state, inst))
                stack.append((s2, st2, n2, left - 1))
    return sorted(found, key=lambda t: t.key())


def execute(spec: ProtocolSpec, script: Sequence[tuple[str, Mapping]], check_restrictions: bool = True) -> Trace:
    """Replay rule applications; each item names a rule and fixes some of its variables.

    Raises SpecError when a step is not applicable or is ambiguous.
    """
    th = spec.theory
    steps: tuple = ()
    state: tuple = ()
    nfresh = 0
    pool = spec.pool()
    for name, fixed in script:
        rule = spec.rule(name)
        fixed = {_as_var(rule, k): (pub(v) if isinstance(v, str) else v) for k, v in fixed.items()}
        insts = list(_instances(rule, state, pool, nfresh + 1, th, fixed))
        if not insts:
            raise SpecError(f"rule {name} is not applicable with {fixed}")
        if len(insts) > 1:
            raise SpecError(f"rule {name} is ambiguous with {fixed}; fix more variables")
        inst = insts[0]
        if inst.actions:
            steps = steps + (frozenset(inst.actions),)
            if check_restrictions and not _restrictions_hold(spec, Trace(steps)):
                raise SpecError(f"rule {name} violates a restriction")
        state = _apply(state, inst)
        nfresh += len(rule.fresh)
    return canonical_trace(Trace(steps))


def _as_var(rule: Rule, key) -> Var:
    if isinstance(key, Var):
        return key
    for f in rule.facts():
        for v in f.variables():
            if v.name == key.lstrip("$~"):
                return v
    raise SpecError(f"rule {rule.name} has no variable {key}")


# ---------------------------------------------------------------- BR

@dataclass(frozen=True)
class Finding:
    where: str
    kind: str
    detail: str

    def __str__(self) -> str:
        return f"{self.where}: {self.detail}"


@dataclass(frozen=True)
class BRResult:
    ok: bool
    findings: tuple

    def __bool__(self) -> bool:
        return self.ok


def _pub_names(t: Term) -> list:
    return [s for s in subterms(t) if isinstance(s, Name) and s.sort is Sort.PUB]


def check_br_syntactic(spec: ProtocolSpec) -> BRResult:
    """Sufficient syntactic condition for closure under party bijections."""
    findings: list[Finding] = []
    for r in spec.rules:
        for f in r.facts():
            for a in f.args:
                for n in dict.fromkeys(_pub_names(a)):
                    findings.append(Finding(f"rule {r.name}", "literal-name",
                                            f"public name {n} occurs in {f}"))
        for f in r.actions:
            if f.symbol == CORRUPTED:
                arg = f.args[0]
                if not (isinstance(arg, Var) and arg.sort is Sort.PUB):
                    findings.append(Finding(f"rule {r.name}", "corrupted-argument",
                                            f"{f} does not corrupt a pub variable"))
    for name, phi in spec.restrictions:
        for n in sorted(_formula_pub_names(phi), key=str):
            findings.append(Finding(f"restriction {name}", "literal-name", f"public name {n} occurs"))
    return BRResult(not findings, tuple(findings))


def _formula_pub_names(phi) -> set:
    from .formulas import ATOMS, At, Eq
    out: set = set()
    if isinstance(phi, At):
        for a in phi.fact.args:
            out.update(_pub_names(a))
    elif isinstance(phi, Eq):
        out.update(_pub_names(phi.left))
        out.update(_pub_names(phi.right))
    elif isinstance(phi, ATOMS):
        pass
    else:
        for child in (getattr(phi, "args", None) or ()):
            out |= _formula_pub_names(child)
        for attr in ("body", "left", "right"):
            child = getattr(phi, attr, None)
            if child is not None and not isinstance(child, (Var, Name, App)):
                out |= _formula_pub_names(child)
    return out


def pool_bijections(pool: Sequence) -> Iterable[dict]:
    pool = list(pool)
    for perm in itertools.permutations(pool):
        yield dict(zip(pool, perm))


def rename_closure_failures(universe: Iterable[Trace], pool: Sequence, limit: int | None = None) -> list:
    """(trace, bijection) pairs whose renamed trace is missing from `universe`."""
    traces = list(universe)
    members = set(traces)
    out = []
    for t in traces:
        for f in pool_bijections(pool):
            if canonical_trace(rename_parties(t, f)) not in members:
                out.append((t, f))
                if limit is not None and len(out) >= limit:
                    return out
    return out
