"""Brute-force reference semantics for small traces.

Message variables range over every subterm occurring in the trace and
temporal variables over its indices. No guard analysis is involved, so the
result is an independent check of the guarded evaluator. Quantified
variables that do not occur in their body are skipped (vacuous binders).
"""

from __future__ import annotations

import itertools
from collections.abc import Mapping

from .formulas import (
    And, At, Eq, Exists, Falsum, Forall, Formula, Iff, Implies, Less, Not, Or, TEq, Verum, free_vars,
)
from .terms import DEFAULT_THEORY, Fact, RewriteTheory, Sort, sort_of, substitute
from .trace import Trace


def oracle_evaluate(t: Trace, v: Mapping, phi: Formula, theory: RewriteTheory = DEFAULT_THEORY) -> bool:
    dom = t.subterm_domain()
    return _ev(t, dict(v), phi, theory, dom)


def _domain(t: Trace, var, dom):
    if var.sort is Sort.TEMP:
        return range(1, len(t) + 1)
    return [x for x in dom if var.sort.accepts(sort_of(x))]


def _ev(t: Trace, env: dict, phi: Formula, th: RewriteTheory, dom: list) -> bool:
    if isinstance(phi, Falsum):
        return False
    if isinstance(phi, Verum):
        return True
    if isinstance(phi, Eq):
        return th.normalize(substitute(phi.left, env)) == th.normalize(substitute(phi.right, env))
    if isinstance(phi, Less):
        return env[phi.left] < env[phi.right]
    if isinstance(phi, TEq):
        return env[phi.left] == env[phi.right]
    if isinstance(phi, At):
        i = env[phi.tp]
        if not 1 <= i <= len(t):
            return False
        f = Fact(phi.fact.symbol, tuple(th.normalize(substitute(a, env)) for a in phi.fact.args))
        return f in t[i]
    if isinstance(phi, Not):
        return not _ev(t, env, phi.body, th, dom)
    if isinstance(phi, And):
        return all(_ev(t, env, a, th, dom) for a in phi.args)
    if isinstance(phi, Or):
        return any(_ev(t, env, a, th, dom) for a in phi.args)
    if isinstance(phi, Implies):
        return (not _ev(t, env, phi.left, th, dom)) or _ev(t, env, phi.right, th, dom)
    if isinstance(phi, Iff):
        return _ev(t, env, phi.left, th, dom) == _ev(t, env, phi.right, th, dom)
    used = free_vars(phi.body)
    qvars = [x for x in dict.fromkeys(phi.vars) if x in used]
    inner = {k: val for k, val in env.items() if k not in phi.vars}
    want = isinstance(phi, Exists)
    for combo in itertools.product(*(_domain(t, x, dom) for x in qvars)):
        e = dict(inner)
        e.update(zip(qvars, combo))
        if _ev(t, e, phi.body, th, dom) == want:
            return want
    return not want


def oracle_instantiations(t: Trace, phi: Formula, fv: tuple, theory: RewriteTheory = DEFAULT_THEORY) -> set:
    """Every valuation of `fv` over the trace domain that satisfies `phi`."""
    from .terms import Substitution

    dom = t.subterm_domain()
    out = set()
    for combo in itertools.product(*(_domain(t, x, dom) for x in fv)):
        env = dict(zip(fv, combo))
        if _ev(t, env, phi, theory, dom):
            out.add(Substitution(env))
    return out
