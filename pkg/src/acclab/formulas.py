"""Trace formula AST, free variables, substitution and Tamarin-style printing."""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from typing import Union

from .terms import Fact, Sort, Term, Var, substitute, variables


@dataclass(frozen=True, slots=True)
class Falsum:
    pass


@dataclass(frozen=True, slots=True)
class Verum:
    """Abbreviation for ¬⊥."""


@dataclass(frozen=True, slots=True)
class Eq:
    left: Term
    right: Term


@dataclass(frozen=True, slots=True)
class Less:
    left: Var
    right: Var


@dataclass(frozen=True, slots=True)
class TEq:
    left: Var
    right: Var


@dataclass(frozen=True, slots=True)
class At:
    fact: Fact
    tp: Var


@dataclass(frozen=True, slots=True)
class Not:
    body: Formula


@dataclass(frozen=True, slots=True)
class And:
    args: tuple


@dataclass(frozen=True, slots=True)
class Or:
    args: tuple


@dataclass(frozen=True, slots=True)
class Implies:
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Iff:
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Exists:
    vars: tuple
    body: Formula


@dataclass(frozen=True, slots=True)
class Forall:
    vars: tuple
    body: Formula


Formula = Union[Falsum, Verum, Eq, Less, TEq, At, Not, And, Or, Implies, Iff, Exists, Forall]
ATOMS = (Falsum, Verum, Eq, Less, TEq, At)


def conj(*parts: Formula) -> Formula:
    flat: list = []
    for p in parts:
        if isinstance(p, And):
            flat.extend(p.args)
        elif not isinstance(p, Verum):
            flat.append(p)
    if not flat:
        return Verum()
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(*parts: Formula) -> Formula:
    flat: list = []
    for p in parts:
        if isinstance(p, Or):
            flat.extend(p.args)
        elif not isinstance(p, Falsum):
            flat.append(p)
    if not flat:
        return Falsum()
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def conjuncts(phi: Formula) -> tuple:
    return phi.args if isinstance(phi, And) else (phi,)


def disjuncts(phi: Formula) -> tuple:
    return phi.args if isinstance(phi, Or) else (phi,)


def atom_vars(phi: Formula) -> set[Var]:
    if isinstance(phi, Eq):
        return variables(phi.left) | variables(phi.right)
    if isinstance(phi, (Less, TEq)):
        return {phi.left, phi.right}
    if isinstance(phi, At):
        return phi.fact.variables() | {phi.tp}
    return set()


def free_vars(phi: Formula) -> set[Var]:
    if isinstance(phi, ATOMS):
        return atom_vars(phi)
    if isinstance(phi, Not):
        return free_vars(phi.body)
    if isinstance(phi, (And, Or)):
        out: set[Var] = set()
        for a in phi.args:
            out |= free_vars(a)
        return out
    if isinstance(phi, (Implies, Iff)):
        return free_vars(phi.left) | free_vars(phi.right)
    return free_vars(phi.body) - set(phi.vars)


def ordered_free_vars(phi: Formula) -> tuple:
    """Free variables in order of first (left-to-right) occurrence."""
    seen: list[Var] = []
    _ordered_fv(phi, frozenset(), seen)
    return tuple(seen)


def _term_vars_ordered(t: Term, out: list) -> None:
    if isinstance(t, Var):
        out.append(t)
    elif hasattr(t, "args"):
        for a in t.args:
            _term_vars_ordered(a, out)


def _ordered_fv(phi: Formula, bound: frozenset, seen: list) -> None:
    found: list[Var] = []
    if isinstance(phi, Eq):
        _term_vars_ordered(phi.left, found)
        _term_vars_ordered(phi.right, found)
    elif isinstance(phi, (Less, TEq)):
        found = [phi.left, phi.right]
    elif isinstance(phi, At):
        for a in phi.fact.args:
            _term_vars_ordered(a, found)
        found.append(phi.tp)
    elif isinstance(phi, Not):
        _ordered_fv(phi.body, bound, seen)
    elif isinstance(phi, (And, Or)):
        for a in phi.args:
            _ordered_fv(a, bound, seen)
    elif isinstance(phi, (Implies, Iff)):
        _ordered_fv(phi.left, bound, seen)
        _ordered_fv(phi.right, bound, seen)
    elif isinstance(phi, (Exists, Forall)):
        _ordered_fv(phi.body, bound | set(phi.vars), seen)
    for v in found:
        if v not in bound and v not in seen:
            seen.append(v)


def all_var_names(phi: Formula) -> set[str]:
    """Names of every variable occurring in `phi`, free or bound."""
    out: set[str] = set()
    for v in _all_vars(phi):
        out.add(v.name)
    return out


def _all_vars(phi: Formula) -> set[Var]:
    if isinstance(phi, ATOMS):
        return atom_vars(phi)
    if isinstance(phi, Not):
        return _all_vars(phi.body)
    if isinstance(phi, (And, Or)):
        out: set[Var] = set()
        for a in phi.args:
            out |= _all_vars(a)
        return out
    if isinstance(phi, (Implies, Iff)):
        return _all_vars(phi.left) | _all_vars(phi.right)
    return _all_vars(phi.body) | set(phi.vars)


def fresh_name(base: str, used: set[str]) -> str:
    if base not in used:
        return base
    k = 1
    while f"{base}_{k}" in used:
        k += 1
    return f"{base}_{k}"


def substitute_formula(phi: Formula, binding: Mapping) -> Formula:
    """Capture-avoiding homomorphic substitution of free variables."""
    binding = {v: t for v, t in binding.items() if v != t}
    if not binding:
        return phi
    return _subst(phi, binding)


def _subst(phi: Formula, b: Mapping) -> Formula:
    if isinstance(phi, (Falsum, Verum)):
        return phi
    if isinstance(phi, Eq):
        return Eq(substitute(phi.left, b), substitute(phi.right, b))
    if isinstance(phi, Less):
        return Less(b.get(phi.left, phi.left), b.get(phi.right, phi.right))
    if isinstance(phi, TEq):
        return TEq(b.get(phi.left, phi.left), b.get(phi.right, phi.right))
    if isinstance(phi, At):
        return At(phi.fact.substitute(b), b.get(phi.tp, phi.tp))
    if isinstance(phi, Not):
        return Not(_subst(phi.body, b))
    if isinstance(phi, And):
        return And(tuple(_subst(a, b) for a in phi.args))
    if isinstance(phi, Or):
        return Or(tuple(_subst(a, b) for a in phi.args))
    if isinstance(phi, Implies):
        return Implies(_subst(phi.left, b), _subst(phi.right, b))
    if isinstance(phi, Iff):
        return Iff(_subst(phi.left, b), _subst(phi.right, b))
    # quantifier: drop shadowed bindings, rename bound vars that would capture
    inner = {v: t for v, t in b.items() if v not in phi.vars}
    if not inner:
        return phi
    incoming: set[str] = set()
    for t in inner.values():
        if isinstance(t, Var):
            incoming.add(t.name)
        elif not isinstance(t, int):
            incoming |= {v.name for v in variables(t)}
    used = all_var_names(phi) | incoming | {v.name for v in inner}
    new_vars = []
    renaming = {}
    for v in phi.vars:
        if v.name in incoming:
            nv = Var(fresh_name(v.name, used), v.sort)
            used.add(nv.name)
            renaming[v] = nv
            new_vars.append(nv)
        else:
            new_vars.append(v)
    body = _subst(phi.body, renaming) if renaming else phi.body
    body = _subst(body, inner)
    return type(phi)(tuple(new_vars), body)


def rename_bound_apart(phi: Formula, avoid: set[str]) -> Formula:
    """Rename bound variables whose names collide with `avoid`."""
    if isinstance(phi, ATOMS):
        return phi
    if isinstance(phi, Not):
        return Not(rename_bound_apart(phi.body, avoid))
    if isinstance(phi, (And, Or)):
        return type(phi)(tuple(rename_bound_apart(a, avoid) for a in phi.args))
    if isinstance(phi, (Implies, Iff)):
        return type(phi)(rename_bound_apart(phi.left, avoid), rename_bound_apart(phi.right, avoid))
    used = set(avoid) | all_var_names(phi)
    renaming = {}
    new_vars = []
    for v in phi.vars:
        if v.name in avoid:
            nv = Var(fresh_name(v.name, used), v.sort)
            used.add(nv.name)
            renaming[v] = nv
            new_vars.append(nv)
        else:
            new_vars.append(v)
    body = _subst(phi.body, renaming) if renaming else phi.body
    return type(phi)(tuple(new_vars), rename_bound_apart(body, avoid))


def quantify(kind: type, qvars: Iterable[Var], body: Formula) -> Formula:
    qvars = tuple(qvars)
    if not qvars:
        return body
    if isinstance(body, kind):
        return kind(qvars + body.vars, body.body)
    return kind(qvars, body)


# ---------------------------------------------------------------- printing

def _tvar(v: Var) -> str:
    return f"#{v.name}" if v.sort is Sort.TEMP else str(v)


def _term(t) -> str:
    if isinstance(t, Var):
        return _tvar(t)
    return str(t)


def _fact(f: Fact) -> str:
    return f"{f.symbol}(" + ", ".join(_term(a) for a in f.args) + ")"


def to_tamarin(phi: Formula) -> str:
    """Render in Tamarin lemma syntax (ASCII)."""
    return _pp(phi)


def _wrap(phi: Formula) -> str:
    s = _pp(phi)
    if isinstance(phi, ATOMS) or isinstance(phi, Not):
        return s
    return f"({s})"


def _pp(phi: Formula) -> str:
    if isinstance(phi, Falsum):
        return "F"
    if isinstance(phi, Verum):
        return "T"
    if isinstance(phi, Eq):
        return f"{_term(phi.left)} = {_term(phi.right)}"
    if isinstance(phi, Less):
        return f"{_tvar(phi.left)} < {_tvar(phi.right)}"
    if isinstance(phi, TEq):
        return f"{_tvar(phi.left)} = {_tvar(phi.right)}"
    if isinstance(phi, At):
        return f"{_fact(phi.fact)} @ {_tvar(phi.tp)}"
    if isinstance(phi, Not):
        return f"not({_pp(phi.body)})"
    if isinstance(phi, And):
        return " & ".join(_wrap(a) for a in phi.args)
    if isinstance(phi, Or):
        return " | ".join(_wrap(a) for a in phi.args)
    if isinstance(phi, Implies):
        return f"{_wrap(phi.left)} ==> {_wrap(phi.right)}"
    if isinstance(phi, Iff):
        return f"{_wrap(phi.left)} <=> {_wrap(phi.right)}"
    kw = "Ex" if isinstance(phi, Exists) else "All"
    names = " ".join(_tvar(v) for v in phi.vars)
    return f"{kw} {names}. {_pp(phi.body)}"


def size(phi: Formula) -> int:
    if isinstance(phi, ATOMS):
        return 1
    if isinstance(phi, Not):
        return 1 + size(phi.body)
    if isinstance(phi, (And, Or)):
        return 1 + sum(size(a) for a in phi.args)
    if isinstance(phi, (Implies, Iff)):
        return 1 + size(phi.left) + size(phi.right)
    return 1 + size(phi.body)


# attach `substitute` so terms.apply_subst can dispatch on formulas
for _cls in (Falsum, Verum, Eq, Less, TEq, At, Not, And, Or, Implies, Iff, Exists, Forall):
    _cls.substitute = substitute_formula  # type: ignore[attr-defined]
    _cls.__str__ = to_tamarin  # type: ignore[assignment]
