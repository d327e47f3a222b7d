"""Guarded evaluation of trace formulas over finite traces.

Quantifier blocks are evaluated by generating candidate valuations from
their guards: action atoms among the top-level conjuncts (of the body for
`Ex`, of the antecedent for `All`) are matched against the trace, and
equations whose one side is already determined bind the variables of the
other side. Guard patterns are expected to be built from constructors; a
destructor above a still-unbound variable makes evaluation refuse.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

from .errors import EvaluationRefused
from .formulas import (
    ATOMS, And, At, Eq, Exists, Falsum, Forall, Formula, Iff, Implies, Less, Not, Or, TEq, Verum,
    conj, conjuncts, disjuncts, free_vars, ordered_free_vars, quantify, rename_bound_apart, to_tamarin,
    all_var_names,
)
from .terms import (
    DEFAULT_THEORY, GUARDED, App, Fact, Name, RewriteTheory, Sort, Substitution, Term, Var,
    is_ground, sort_of, substitute, variables,
)
from .trace import Trace


# ---------------------------------------------------------------- block analysis

@dataclass(frozen=True)
class _Branch:
    """One disjunct of a quantifier block."""

    qvars: tuple            # quantified variables actually used in this branch
    guards: tuple           # action atoms among the conjuncts
    eqs: tuple              # Eq/TEq conjuncts usable for binding
    test: Formula           # formula evaluated per candidate


@dataclass(frozen=True)
class _Plan:
    branches: tuple
    error: str | None


def _merge(node):
    kind = type(node)
    qvars = list(node.vars)
    body = node.body
    while isinstance(body, kind):
        qvars.extend(body.vars)
        body = body.body
    # later binders shadow earlier ones of the same name
    seen = set()
    uniq = []
    for v in reversed(qvars):
        if v not in seen:
            seen.add(v)
            uniq.append(v)
    return tuple(reversed(uniq)), body


def _uncurry(body: Formula) -> tuple[Formula, Formula] | None:
    """Split a universal body into (antecedent, consequent)."""
    if isinstance(body, Not):
        return body.body, Falsum()
    if not isinstance(body, Implies):
        return None
    ante, cons = [body.left], body.right
    while isinstance(cons, Implies):
        ante.append(cons.left)
        cons = cons.right
    return conj(*ante), cons


def _covered(qvars: tuple, guards: tuple, eqs: tuple, known: set) -> list:
    """Quantified variables not determined by guards and equations."""
    det = set(known)
    for g in guards:
        det |= g.fact.variables()
        det.add(g.tp)
    changed = True
    while changed:
        changed = False
        for e in eqs:
            if isinstance(e, TEq):
                sides = [{e.left}, {e.right}]
            else:
                sides = [variables(e.left), variables(e.right)]
            for a, b in ((0, 1), (1, 0)):
                if sides[a] <= det and not sides[b] <= det:
                    det |= sides[b]
                    changed = True
    return [v for v in qvars if v not in det]


def _analyse(node: Formula) -> _Plan:
    qvars, body = _merge(node)
    is_exists = isinstance(node, Exists)
    if is_exists:
        parts = [(d, d) for d in disjuncts(body)]
    else:
        split = _uncurry(body)
        if split is None:
            return _Plan((), "universal body is not an implication")
        ante, cons = split
        parts = [(a, Implies(a, cons)) for a in disjuncts(ante)]
    branches = []
    for scope, test in parts:
        used = free_vars(test)
        bvars = tuple(v for v in qvars if v in used)
        known = used - set(qvars)
        cs = conjuncts(scope)
        guards = tuple(c for c in cs if isinstance(c, At))
        eqs = tuple(c for c in cs if isinstance(c, (Eq, TEq)))
        if bvars and not guards:
            return _Plan((), "no action atom guards the block")
        missing = _covered(bvars, guards, eqs, known)
        if missing:
            names = ", ".join(str(v) if v.sort is not Sort.TEMP else f"#{v.name}" for v in missing)
            return _Plan((), f"variables {names} are not covered by a guard")
        # most constrained guards first
        guards = tuple(sorted(guards, key=lambda g: -len((g.fact.variables() | {g.tp}) & known)))
        branches.append(_Branch(bvars, guards, eqs, test))
    return _Plan(tuple(branches), None)


_PLANS: dict[int, tuple] = {}


def _plan(node: Formula) -> _Plan:
    hit = _PLANS.get(id(node))
    if hit is not None and hit[0] is node:
        return hit[1]
    plan = _analyse(node)
    if len(_PLANS) > 200_000:
        _PLANS.clear()
    _PLANS[id(node)] = (node, plan)
    return plan


def guard_errors(phi: Formula) -> list[str]:
    """Messages for every unguarded quantifier block in `phi`."""
    out: list[str] = []
    _collect_errors(phi, out)
    return out


def _collect_errors(phi: Formula, out: list) -> None:
    if isinstance(phi, ATOMS):
        return
    if isinstance(phi, Not):
        _collect_errors(phi.body, out)
    elif isinstance(phi, (And, Or)):
        for a in phi.args:
            _collect_errors(a, out)
    elif isinstance(phi, (Implies, Iff)):
        _collect_errors(phi.left, out)
        _collect_errors(phi.right, out)
    else:
        plan = _plan(phi)
        if plan.error:
            out.append(f"{plan.error} in '{to_tamarin(phi)}'")
            return
        _, body = _merge(phi)
        _collect_errors(body, out)


def is_guarded(phi: Formula) -> bool:
    return not guard_errors(phi)


# ---------------------------------------------------------------- matching

def _match(p: Term, t: Term, b: dict, th: RewriteTheory, destructors: set) -> bool:
    if isinstance(p, Var):
        bound = b.get(p)
        if bound is not None:
            return bound == t
        if not p.sort.accepts(sort_of(t)):
            return False
        b[p] = t
        return True
    if isinstance(p, Name):
        return p == t
    if p.fun in destructors:
        inst = substitute(p, b)
        if not is_ground(inst):
            raise EvaluationRefused(f"cannot match destructor pattern {p} with unbound variables")
        return th.normalize(inst) == t
    if not isinstance(t, App) or t.fun != p.fun or len(t.args) != len(p.args):
        return False
    return all(_match(pa, ta, b, th, destructors) for pa, ta in zip(p.args, t.args))


def _candidates(t: Trace, env: dict, br: _Branch, th: RewriteTheory):
    base = {k: v for k, v in env.items() if k not in br.qvars}
    envs = [base]
    destructors = th.destructors()
    index = t.by_symbol()
    for g in br.guards:
        nxt = []
        occ = index.get(g.fact.symbol, ())
        arity = len(g.fact.args)
        for e in envs:
            tp = e.get(g.tp)
            for i, f in occ:
                if tp is not None and tp != i:
                    continue
                if len(f.args) != arity:
                    continue
                b = dict(e)
                if all(_match(pa, ta, b, th, destructors) for pa, ta in zip(g.fact.args, f.args)):
                    if tp is None:
                        b[g.tp] = i
                    nxt.append(b)
        envs = nxt
        if not envs:
            return []
    if br.eqs:
        envs = [e for e in (_solve_eqs(e, br, th, destructors) for e in envs) if e is not None]
    return envs


def _solve_eqs(e: dict, br: _Branch, th: RewriteTheory, destructors: set):
    pending = [q for q in br.qvars if q not in e]
    if not pending:
        return e
    e = dict(e)
    progress = True
    while pending and progress:
        progress = False
        for eq in br.eqs:
            if isinstance(eq, TEq):
                if eq.left in e and eq.right not in e:
                    e[eq.right] = e[eq.left]
                    progress = True
                elif eq.right in e and eq.left not in e:
                    e[eq.left] = e[eq.right]
                    progress = True
                continue
            lv, rv = variables(eq.left), variables(eq.right)
            for known_side, other, ov in ((eq.left, eq.right, rv), (eq.right, eq.left, lv)):
                kv = variables(known_side)
                if all(v in e for v in kv) and not all(v in e for v in ov):
                    value = th.normalize(substitute(known_side, e))
                    if not _match(other, value, e, th, destructors):
                        return None
                    progress = True
                    break
        pending = [q for q in br.qvars if q not in e]
    return e if not pending else None


# ---------------------------------------------------------------- evaluation

def evaluate(t: Trace, v: Mapping, phi: Formula, theory: RewriteTheory = DEFAULT_THEORY) -> bool:
    """Satisfaction (t, v) |= phi for guarded formulas."""
    env = dict(v)
    missing = free_vars(phi) - set(env)
    if missing:
        names = ", ".join(sorted(str(x) for x in missing))
        raise EvaluationRefused(f"valuation does not cover free variables {names}")
    return _eval(t, env, phi, theory)


def _val(term: Term, env: dict, th: RewriteTheory) -> Term:
    return th.normalize(substitute(term, env))


def _eval(t: Trace, env: dict, phi: Formula, th: RewriteTheory) -> bool:
    if isinstance(phi, At):
        i = env[phi.tp]
        if not 1 <= i <= len(t.steps):
            return False
        f = Fact(phi.fact.symbol, tuple(_val(a, env, th) for a in phi.fact.args))
        return f in t.steps[i - 1]
    if isinstance(phi, And):
        return all(_eval(t, env, a, th) for a in phi.args)
    if isinstance(phi, Eq):
        return _val(phi.left, env, th) == _val(phi.right, env, th)
    if isinstance(phi, Not):
        return not _eval(t, env, phi.body, th)
    if isinstance(phi, Or):
        return any(_eval(t, env, a, th) for a in phi.args)
    if isinstance(phi, Implies):
        return (not _eval(t, env, phi.left, th)) or _eval(t, env, phi.right, th)
    if isinstance(phi, Falsum):
        return False
    if isinstance(phi, Verum):
        return True
    if isinstance(phi, Less):
        return env[phi.left] < env[phi.right]
    if isinstance(phi, TEq):
        return env[phi.left] == env[phi.right]
    if isinstance(phi, Iff):
        return _eval(t, env, phi.left, th) == _eval(t, env, phi.right, th)
    plan = _plan(phi)
    if plan.error:
        raise EvaluationRefused(f"{plan.error} in '{to_tamarin(phi)}'")
    if isinstance(phi, Exists):
        for br in plan.branches:
            for e in _candidates(t, env, br, th):
                if _eval(t, e, br.test, th):
                    return True
        return False
    for br in plan.branches:
        for e in _candidates(t, env, br, th):
            if not _eval(t, e, br.test, th):
                return False
    return True


# ---------------------------------------------------------------- lifting and closure

def lift_exists(phi: Formula, avoid: set[str] = frozenset()) -> tuple[tuple, tuple]:
    """Pull existential binders out of `phi` and its top-level conjuncts.

    Returns (quantified variables, conjuncts). Bound names are renamed apart
    from each other and from `avoid` where needed.
    """
    used = set(avoid) | {v.name for v in free_vars(phi)}
    qvars: list[Var] = []
    out: list[Formula] = []

    def walk(f: Formula):
        if isinstance(f, Exists):
            f2 = rename_bound_apart(f, used)
            qvars.extend(f2.vars)
            used.update(v.name for v in f2.vars)
            walk(f2.body)
        elif isinstance(f, And):
            for a in f.args:
                walk(a)
        else:
            out.append(f)

    walk(phi)
    return tuple(qvars), tuple(out)


def match_instantiations(t: Trace, phi: Formula, fv: tuple | None = None,
                         theory: RewriteTheory = DEFAULT_THEORY) -> set:
    """All instantiations rho of fv with t |= phi rho (normalized)."""
    fv = tuple(fv) if fv is not None else ordered_free_vars(phi)
    qvars, cs = lift_exists(phi)
    block = Exists(tuple(fv) + qvars, conj(*cs)) if (fv or qvars) else conj(*cs)
    if not isinstance(block, Exists):
        return {Substitution({})} if _eval(t, {}, block, theory) else set()
    plan = _plan(block)
    if plan.error:
        raise EvaluationRefused(f"{plan.error} in '{to_tamarin(block)}'")
    out = set()
    for br in plan.branches:
        for e in _candidates(t, {}, br, theory):
            if _eval(t, e, br.test, theory):
                out.add(Substitution({v: e[v] for v in fv if v in e}))
    return out


def in_existential_form(phi: Formula) -> bool:
    """Guarded, with every free variable bound by a top-level existential guard."""
    if not is_guarded(phi):
        return False
    fv = ordered_free_vars(phi)
    _, cs = lift_exists(phi)
    guards = tuple(c for c in cs if isinstance(c, At))
    eqs = tuple(c for c in cs if isinstance(c, (Eq, TEq)))
    return not _covered(fv, guards, eqs, set())


def guard_transform(phi: Formula) -> Formula:
    """Bring a guarded formula into existential form by adding Guarded facts.

    Formulas already in existential guarded form are returned unchanged.
    """
    if in_existential_form(phi):
        return phi
    if not isinstance(phi, Forall) or not is_guarded(phi):
        raise EvaluationRefused(f"'{to_tamarin(phi)}' is neither existentially nor universally guarded")
    fv = ordered_free_vars(phi)
    k = Var(_fresh("k", all_var_names(phi)), Sort.TEMP)
    guards = [At(Fact(GUARDED, (v,)), k) for v in fv if v.sort is not Sort.TEMP]
    if not guards or len(guards) != len(fv):
        raise EvaluationRefused("a guard transform needs free message variables only")
    return conj(Exists((k,), conj(*guards)), phi)


def _fresh(base: str, used: set) -> str:
    if base not in used:
        return base
    n = 1
    while f"{base}{n}" in used:
        n += 1
    return f"{base}{n}"


def _domain(t: Trace, v: Var, msg_dom: list) -> Iterable:
    if v.sort is Sort.TEMP:
        return range(1, len(t) + 1)
    return [x for x in msg_dom if v.sort.accepts(sort_of(x))]


def free_valuations(t: Trace, fvs: Iterable[Var]):
    """Every valuation of `fvs` over the trace's subterms and indices."""
    fvs = list(fvs)
    dom = t.subterm_domain()
    for combo in itertools.product(*(_domain(t, v, dom) for v in fvs)):
        yield dict(zip(fvs, combo))


def holds_on(t: Trace, phi: Formula, mode: str, theory: RewriteTheory = DEFAULT_THEORY,
             fvs: tuple | None = None) -> bool:
    """Per-trace helper: free variables universally (mode 'forall') or existentially closed."""
    if fvs is None:
        fvs = ordered_free_vars(phi)
    if not fvs:
        return _eval(t, {}, phi, theory)
    vals = (_eval(t, e, phi, theory) for e in free_valuations(t, fvs))
    return all(vals) if mode == "forall" else any(vals)


def holds_forall(universe: Iterable[Trace], phi: Formula, theory: RewriteTheory = DEFAULT_THEORY) -> bool:
    return all(holds_on(t, phi, "forall", theory) for t in universe)


def holds_exists(universe: Iterable[Trace], phi: Formula, theory: RewriteTheory = DEFAULT_THEORY) -> bool:
    return any(holds_on(t, phi, "exists", theory) for t in universe)


def first_witness(universe: Iterable[Trace], phi: Formula, mode: str,
                  theory: RewriteTheory = DEFAULT_THEORY) -> Trace | None:
    """First trace refuting a forall-check, or satisfying an exists-check."""
    fvs = ordered_free_vars(phi)
    for t in universe:
        ok = holds_on(t, phi, mode, theory, fvs)
        if mode == "forall" and not ok:
            return t
        if mode == "exists" and ok:
            return t
    return None


def exists_closure(phi: Formula) -> Formula:
    return quantify(Exists, ordered_free_vars(phi), phi)


def forall_closure(phi: Formula) -> Formula:
    return quantify(Forall, ordered_free_vars(phi), phi)
