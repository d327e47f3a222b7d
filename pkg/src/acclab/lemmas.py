"""Compile `test`/`lemma` declarations into Tamarin lemma text."""

from __future__ import annotations

from .accountability import CaseTest
from .conditions import CompiledCondition, compile_conditions
from .errors import SpecError
from .evaluation import guard_errors
from .formulas import to_tamarin
from .parsing import AccountabilitySpec, LemmaDecl


def lemma_tests(spec: AccountabilitySpec, lemma: LemmaDecl) -> tuple:
    tests = []
    for name in lemma.tests:
        decl = spec.test(name)
        try:
            tests.append(CaseTest.build(decl.name, decl.formula))
        except SpecError as e:
            raise SpecError(f"line {decl.line}: {e}") from None
    return tuple(tests)


def lemma_name(lemma: str, cond: CompiledCondition) -> str:
    if cond.test is None:
        return f"{lemma}_{cond.suffix}"
    return f"{lemma}_{cond.test}_{cond.suffix}"


def compile_lemma(spec: AccountabilitySpec, lemma: LemmaDecl) -> list[tuple[str, CompiledCondition]]:
    tests = lemma_tests(spec, lemma)
    out = []
    for c in compile_conditions(tests, lemma.prop):
        errs = guard_errors(c.formula)
        if errs:
            raise SpecError(f"{lemma_name(lemma.name, c)}: {errs[0]}")
        out.append((lemma_name(lemma.name, c), c))
    return out


def emit_lemmas(spec: AccountabilitySpec) -> str:
    """One standard lemma per compiled condition, for every accountability lemma."""
    blocks = []
    seen: set[str] = set()
    for lemma in spec.lemmas:
        for name, c in compile_lemma(spec, lemma):
            if name in seen:
                raise SpecError(f"generated lemma name {name} is not unique")
            seen.add(name)
            kind = "exists-trace" if c.mode == "exists" else "all-traces"
            blocks.append(f"lemma {name}:\n  {kind}\n  \"{to_tamarin(c.formula)}\"\n")
    return "\n".join(blocks)
