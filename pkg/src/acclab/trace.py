"""Finite traces: sequences of sets of ground, normalized facts."""

from __future__ import annotations

from collections.abc import Iterable, Mapping

from .errors import SortError
from .terms import CORRUPTED, App, Fact, Name, Term, fact_key, subterms, term_key


class Trace:
    """Immutable trace; positions are numbered 1..len(trace)."""

    __slots__ = ("steps", "_hash", "_by_symbol", "_cor", "_key")

    def __init__(self, steps: Iterable[Iterable[Fact]] = ()):
        self.steps: tuple = tuple(frozenset(s) for s in steps if s)
        for step in self.steps:
            for f in step:
                if not f.is_ground():
                    raise SortError(f"trace facts must be ground, got {f}")
        self._hash = hash(self.steps)
        self._by_symbol = None
        self._cor = None
        self._key = None

    def __len__(self) -> int:
        return len(self.steps)

    def __getitem__(self, i: int) -> frozenset:
        """1-based access, matching timepoint semantics."""
        if not 1 <= i <= len(self.steps):
            raise IndexError(i)
        return self.steps[i - 1]

    def __iter__(self):
        return iter(self.steps)

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Trace) and self._hash == other._hash and self.steps == other.steps

    def __repr__(self) -> str:
        return f"Trace({self})"

    def __str__(self) -> str:
        parts = []
        for step in self.steps:
            facts = sorted(step, key=fact_key)
            parts.append("{" + ", ".join(str(f) for f in facts) + "}")
        return "[" + ", ".join(parts) + "]"

    def key(self) -> tuple:
        """Total order used for canonical listing."""
        if self._key is None:
            self._key = (len(self.steps), tuple(tuple(sorted(fact_key(f) for f in s)) for s in self.steps))
        return self._key

    def by_symbol(self) -> dict:
        """symbol -> list of (index, fact) occurrences."""
        if self._by_symbol is None:
            idx: dict[str, list] = {}
            for i, step in enumerate(self.steps, 1):
                for f in step:
                    idx.setdefault(f.symbol, []).append((i, f))
            self._by_symbol = idx
        return self._by_symbol

    def facts(self):
        for i, step in enumerate(self.steps, 1):
            for f in step:
                yield i, f

    def corrupted(self) -> frozenset:
        if self._cor is None:
            self._cor = frozenset(f.args[0] for _, f in self.by_symbol().get(CORRUPTED, ()) if len(f.args) == 1)
        return self._cor

    def subterm_domain(self) -> list:
        """All subterms of fact arguments, in canonical order."""
        seen = set()
        for _, f in self.facts():
            for a in f.args:
                seen.update(subterms(a))
        return sorted(seen, key=term_key)

    def prefix(self, n: int) -> Trace:
        return Trace(self.steps[:n])

    def extend(self, step: Iterable[Fact]) -> Trace:
        return Trace(self.steps + (frozenset(step),))


def corrupted(t: Trace) -> frozenset:
    """Parties with a Corrupted action anywhere in `t`."""
    return t.corrupted()


def _rename_term(t: Term, f: Mapping) -> Term:
    hit = f.get(t)
    if hit is not None:
        return hit
    if isinstance(t, App):
        return App(t.fun, tuple(_rename_term(a, f) for a in t.args))
    return t


def check_bijection(f: Mapping) -> None:
    values = list(f.values())
    if len(set(values)) != len(values) or set(values) != set(f):
        raise SortError("party renaming must be a bijection on its domain")


def rename_parties(t: Trace, f: Mapping) -> Trace:
    """Replace every occurrence of a party term by its image under `f`.

    `f` must permute its domain. Party terms are replaced top-down, so
    compound parties (pairs, say) are renamed as a whole.
    """
    check_bijection(f)
    f = {k: v for k, v in f.items() if k != v}
    if not f:
        return t
    steps = []
    for step in t.steps:
        steps.append(frozenset(Fact(x.symbol, tuple(_rename_term(a, f) for a in x.args)) for x in step))
    return Trace(steps)


def public_names(t: Trace) -> set:
    out = set()
    for _, f in t.facts():
        for a in f.args:
            out.update(s for s in subterms(a) if isinstance(s, Name) and s.sort.value == "pub")
    return out
