"""Order-sorted terms, rewrite theories, substitutions and facts.

Terms are immutable and hashable. Equality modulo the equational theory is
decided by comparing normal forms under a convergent rewrite system.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from enum import Enum
from typing import Union

from .errors import ArityError, RewriteBudgetExceeded, SortError


class Sort(str, Enum):
    MSG = "msg"
    PUB = "pub"
    FRESH = "fresh"
    TEMP = "temp"

    def accepts(self, other: Sort) -> bool:
        """Whether a value of sort `other` may stand where `self` is expected."""
        if self is other:
            return True
        return self is Sort.MSG and other in (Sort.PUB, Sort.FRESH)


_VAR_PREFIX = {Sort.MSG: "", Sort.PUB: "$", Sort.FRESH: "~", Sort.TEMP: "#"}


@dataclass(frozen=True, slots=True)
class Var:
    name: str
    sort: Sort = Sort.MSG

    def __str__(self) -> str:
        return _VAR_PREFIX[self.sort] + self.name


@dataclass(frozen=True, slots=True)
class Name:
    """A public or fresh name (a constant of sort pub or fresh)."""

    value: str
    sort: Sort = Sort.PUB

    def __post_init__(self):
        if self.sort not in (Sort.PUB, Sort.FRESH):
            raise SortError(f"names are pub or fresh, not {self.sort.value}")

    def __str__(self) -> str:
        if self.sort is Sort.PUB:
            return f"'{self.value}'"
        return f"~{self.value}"


@dataclass(frozen=True, slots=True)
class App:
    fun: str
    args: tuple = ()

    def __str__(self) -> str:
        if self.fun == PAIR and len(self.args) == 2:
            items = [self.args[0]]
            rest = self.args[1]
            while isinstance(rest, App) and rest.fun == PAIR and len(rest.args) == 2:
                items.append(rest.args[0])
                rest = rest.args[1]
            items.append(rest)
            return "<" + ", ".join(str(a) for a in items) + ">"
        if not self.args:
            return f"{self.fun}()"
        return f"{self.fun}(" + ", ".join(str(a) for a in self.args) + ")"


Term = Union[Var, Name, App]

PAIR = "pair"
BUILTIN_FUNCTIONS = {PAIR: 2, "fst": 1, "snd": 1}


def pub(value: str) -> Name:
    return Name(value, Sort.PUB)


def fresh(value: str) -> Name:
    return Name(value, Sort.FRESH)


def pair(*items: Term) -> Term:
    """Right-nested tuple <a, b, c> = <a, <b, c>>."""
    if len(items) < 2:
        raise ArityError("a tuple needs at least two components")
    result = items[-1]
    for item in reversed(items[:-1]):
        result = App(PAIR, (item, result))
    return result


def sort_of(t: Term) -> Sort:
    if isinstance(t, App):
        return Sort.MSG
    return t.sort


def variables(t: Term) -> set[Var]:
    out: set[Var] = set()
    _collect_vars(t, out)
    return out


def _collect_vars(t: Term, out: set[Var]) -> None:
    if isinstance(t, Var):
        out.add(t)
    elif isinstance(t, App):
        for a in t.args:
            _collect_vars(a, out)


def is_ground(t: Term) -> bool:
    if isinstance(t, Var):
        return False
    if isinstance(t, App):
        return all(is_ground(a) for a in t.args)
    return True


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, App):
        for a in t.args:
            yield from subterms(a)


def names_in(t: Term) -> set[Name]:
    return {s for s in subterms(t) if isinstance(s, Name)}


def term_key(t: Term) -> tuple:
    """Total order on terms used for canonical output."""
    if isinstance(t, Var):
        return (0, t.sort.value, t.name)
    if isinstance(t, Name):
        return (1, t.sort.value, t.value)
    return (2, t.fun, len(t.args), tuple(term_key(a) for a in t.args))


def substitute(t: Term, binding: Mapping) -> Term:
    """Homomorphic replacement without sort checks (internal fast path)."""
    if isinstance(t, Var):
        return binding.get(t, t)
    if isinstance(t, App):
        args = tuple(substitute(a, binding) for a in t.args)
        return App(t.fun, args)
    return t


def match(pattern: Term, term: Term, binding: dict | None = None) -> dict | None:
    """Syntactic matching of `pattern` against `term`, respecting sorts."""
    binding = {} if binding is None else dict(binding)
    return binding if _match(pattern, term, binding) else None


def _match(p: Term, t: Term, b: dict) -> bool:
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
    if not isinstance(t, App) or t.fun != p.fun or len(t.args) != len(p.args):
        return False
    return all(_match(pa, ta, b) for pa, ta in zip(p.args, t.args))


@dataclass(frozen=True, slots=True)
class FunctionSymbol:
    name: str
    arity: int
    private: bool = False


class Signature:
    """Function symbols with arities; pair/fst/snd are always present."""

    def __init__(self, symbols: Iterable[FunctionSymbol] = ()):
        self.symbols: dict[str, FunctionSymbol] = {
            n: FunctionSymbol(n, a) for n, a in BUILTIN_FUNCTIONS.items()
        }
        for sym in symbols:
            known = self.symbols.get(sym.name)
            if known is not None and known != sym:
                raise ArityError(f"function symbol {sym.name} declared twice")
            self.symbols[sym.name] = sym

    def __contains__(self, name: str) -> bool:
        return name in self.symbols

    def arity(self, name: str) -> int:
        return self.symbols[name].arity

    def check(self, t: Term) -> None:
        """Raise if `t` uses an undeclared symbol or a wrong arity."""
        for s in subterms(t):
            if isinstance(s, App):
                sym = self.symbols.get(s.fun)
                if sym is None:
                    raise ArityError(f"unknown function symbol {s.fun}")
                if sym.arity != len(s.args):
                    raise ArityError(f"{s.fun}/{sym.arity} applied to {len(s.args)} arguments")

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Signature) and self.symbols == other.symbols

    def __repr__(self) -> str:
        user = [f"{s.name}/{s.arity}" for s in self.symbols.values() if s.name not in BUILTIN_FUNCTIONS]
        return f"Signature({', '.join(user)})"


_X, _Y = Var("x"), Var("y")
BUILTIN_RULES = (
    (App("fst", (App(PAIR, (_X, _Y)),)), _X),
    (App("snd", (App(PAIR, (_X, _Y)),)), _Y),
)

DEFAULT_BUDGET = 10_000


class RewriteTheory:
    """Left-to-right oriented equations, assumed convergent.

    Convergence is not checked; a per-call step budget turns divergence into
    RewriteBudgetExceeded.
    """

    def __init__(self, rules: Iterable[tuple[Term, Term]] = (), budget: int = DEFAULT_BUDGET):
        user = tuple(rules)
        for lhs, rhs in user:
            if not isinstance(lhs, App):
                raise SortError(f"rewrite rule lhs must be an application, got {lhs}")
            extra = variables(rhs) - variables(lhs)
            if extra:
                names = ", ".join(sorted(str(v) for v in extra))
                raise SortError(f"rhs variables {names} do not occur in lhs {lhs}")
        self.rules = BUILTIN_RULES + user
        self.budget = budget
        self._by_head: dict[str, list[tuple[Term, Term]]] = {}
        for lhs, rhs in self.rules:
            self._by_head.setdefault(lhs.fun, []).append((lhs, rhs))
        self._cache: dict[Term, Term] = {}

    @property
    def user_rules(self) -> tuple[tuple[Term, Term], ...]:
        return self.rules[len(BUILTIN_RULES):]

    def destructors(self) -> set[str]:
        return set(self._by_head)

    def normalize(self, t: Term) -> Term:
        steps = [0]
        try:
            return self._norm(t, steps)
        except RecursionError:
            raise RewriteBudgetExceeded(f"rewriting {t} exceeded the recursion limit") from None

    def _norm(self, t: Term, steps: list[int]) -> Term:
        if not isinstance(t, App):
            return t
        cached = self._cache.get(t)
        if cached is not None:
            return cached
        args = tuple(self._norm(a, steps) for a in t.args)
        u = t if args == t.args else App(t.fun, args)
        for lhs, rhs in self._by_head.get(u.fun, ()):
            b = match(lhs, u)
            if b is not None:
                steps[0] += 1
                if steps[0] > self.budget:
                    raise RewriteBudgetExceeded(
                        f"more than {self.budget} rewrite steps normalizing {t}")
                result = self._norm(substitute(rhs, b), steps)
                self._cache[t] = result
                return result
        self._cache[t] = u
        return u

    def equal(self, t1: Term, t2: Term) -> bool:
        return self.normalize(t1) == self.normalize(t2)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, RewriteTheory) and self.rules == other.rules

    def __hash__(self) -> int:
        return hash(self.rules)

    def __repr__(self) -> str:
        return f"RewriteTheory({len(self.user_rules)} user rules)"


DEFAULT_THEORY = RewriteTheory()


def normalize(t: Term, th: RewriteTheory = DEFAULT_THEORY) -> Term:
    """Innermost-leftmost normal form of `t`."""
    return th.normalize(t)


def equal_mod_e(t1: Term, t2: Term, th: RewriteTheory = DEFAULT_THEORY) -> bool:
    return th.equal(t1, t2)


@dataclass(frozen=True, slots=True)
class Fact:
    symbol: str
    args: tuple = ()

    def __str__(self) -> str:
        return f"{self.symbol}(" + ", ".join(str(a) for a in self.args) + ")"

    @property
    def arity(self) -> int:
        return len(self.args)

    def variables(self) -> set[Var]:
        out: set[Var] = set()
        for a in self.args:
            _collect_vars(a, out)
        return out

    def is_ground(self) -> bool:
        return all(is_ground(a) for a in self.args)

    def substitute(self, binding: Mapping) -> Fact:
        return Fact(self.symbol, tuple(substitute(a, binding) for a in self.args))

    def normalize(self, th: RewriteTheory = DEFAULT_THEORY) -> Fact:
        return Fact(self.symbol, tuple(th.normalize(a) for a in self.args))


CORRUPTED = "Corrupted"
GUARDED = "Guarded"
RESERVED_FACTS = {CORRUPTED: 1, GUARDED: 1}


def fact_key(f: Fact) -> tuple:
    return (f.symbol, len(f.args), tuple(term_key(a) for a in f.args))


def check_binding(v: Var, t: Term) -> None:
    """Raise SortError unless `t` may be bound to `v`."""
    if v.sort is Sort.TEMP:
        if not (isinstance(t, Var) and t.sort is Sort.TEMP):
            raise SortError(f"temporal variable {v} can only be renamed to a temporal variable")
        return
    ts = sort_of(t)
    if ts is Sort.TEMP or not v.sort.accepts(ts):
        raise SortError(f"cannot bind {v} ({v.sort.value}) to {t} ({ts.value})")


class Substitution(Mapping):
    """Finite, well-sorted, immutable map from variables to terms."""

    __slots__ = ("_items",)

    def __init__(self, mapping: Mapping | Iterable = ()):
        items = dict(mapping)
        for v, t in items.items():
            if not isinstance(v, Var):
                raise SortError(f"substitution domain must be variables, got {v!r}")
            check_binding(v, t)
        object.__setattr__(self, "_items", tuple(sorted(items.items(), key=lambda kv: term_key(kv[0]))))

    def __getitem__(self, v: Var) -> Term:
        for k, t in self._items:
            if k == v:
                return t
        raise KeyError(v)

    def __iter__(self):
        return (k for k, _ in self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __hash__(self) -> int:
        return hash(self._items)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Substitution):
            return self._items == other._items
        if isinstance(other, Mapping):
            return dict(self._items) == dict(other)
        return NotImplemented

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}↦{t}" for k, t in self._items)
        return "{" + inner + "}"

    def normalized(self, th: RewriteTheory = DEFAULT_THEORY) -> Substitution:
        return Substitution({k: th.normalize(t) for k, t in self._items})

    def is_injective(self) -> bool:
        values = [t for _, t in self._items]
        return len(set(values)) == len(values)

    def inverse(self) -> dict:
        if not self.is_injective():
            raise SortError(f"substitution {self!r} is not injective")
        return {t: k for k, t in self._items}


def apply_subst(obj, s: Mapping):
    """Apply a substitution to a term, fact or trace formula."""
    s = s if isinstance(s, Substitution) else Substitution(s)
    binding = dict(s.items())
    if isinstance(obj, (Var, Name, App)):
        return substitute(obj, binding)
    if isinstance(obj, Fact):
        return obj.substitute(binding)
    sub = getattr(obj, "substitute", None)
    if sub is None:
        raise TypeError(f"cannot apply a substitution to {type(obj).__name__}")
    return sub(binding)


def party_rename(rho: Mapping, rho_prime: Mapping) -> dict:
    """Map rho_prime(v) to rho(v) for every shared variable v.

    Both instantiations must share their domain, be injective and map to
    public names. Parties outside rng(rho_prime) are left alone (identity).
    """
    if set(rho) != set(rho_prime):
        raise SortError("instantiations must share a domain")
    for inst in (rho, rho_prime):
        values = list(inst.values())
        if len(set(values)) != len(values):
            raise SortError(f"instantiation {dict(inst)} is not injective")
        for t in values:
            if not (isinstance(t, Name) and t.sort is Sort.PUB):
                raise SortError(f"party {t} is not a public name")
    return {rho_prime[v]: rho[v] for v in rho}


def extend_to_bijection(mapping: Mapping, domain: Iterable) -> dict:
    """Complete a partial injective map into a bijection on `domain` ∪ its support.

    Elements of rng(mapping) that are not in dom(mapping) are sent, in a fixed
    order, to elements of dom(mapping) missing from the range, so the result
    permutes a finite set and is the identity elsewhere.
    """
    mapping = dict(mapping)
    values = list(mapping.values())
    if len(set(values)) != len(values):
        raise SortError("mapping is not injective")
    free_sources = sorted((v for v in values if v not in mapping), key=term_key)
    free_targets = sorted((k for k in mapping if k not in set(values)), key=term_key)
    result = dict(mapping)
    result.update(zip(free_sources, free_targets))
    for d in domain:
        result.setdefault(d, d)
    return result
