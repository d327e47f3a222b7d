"""Map condition outcomes to an accountability verdict with repair hints."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum

from .accountability import CaseTest
from .conditions import SUFFIXES, ConditionEntry, Family, Status
from .errors import SpecError
from .evaluation import lift_exists
from .formulas import Eq, Exists, Not, conj, substitute_formula


class AccVerdict(str, Enum):
    HOLDS = "acc_holds"
    VIOLATED = "acc_violated"
    INCONCLUSIVE = "inconclusive"


EXIT_CODES = {AccVerdict.HOLDS: 0, AccVerdict.VIOLATED: 1, AccVerdict.INCONCLUSIVE: 2}
INPUT_ERROR = 3

# failures that refute accountability outright
REFUTING = {"verif_empty", "verif_nonempty", "min", "uniq"}
# failures after which accountability is undetermined
UNDETERMINED = {"suff", "single", "inj", "RepP"}

DISCLAIMER = ("all conditions hold on the enumerated universe (bound {bound}, pool {pool}); "
              "this is evidence, not a proof for unbounded traces")


@dataclass
class Diagnosis:
    verdict: AccVerdict
    failed: list = field(default_factory=list)
    hints: list = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]


def _hint(e: ConditionEntry, tests: Sequence[str]) -> str:
    t = e.test
    if e.name == "verif_empty":
        return "a violation occurs that no case test matches; the witness trace suggests an additional case test"
    if e.name == "verif_nonempty":
        return f"{t} matches a trace that satisfies the property; restrict {t} to violating traces"
    if e.name == "min":
        others = [o for o in tests if o != t] or [t]
        alts = "; ".join(f"{t} & not({o} & [fv({o}) strictly inside fv({t})])" for o in others)
        return f"{t} can blame a strict superset of another verdict; replace it by {alts}"
    if e.name == "uniq":
        return f"{t} blames a party that is not corrupted; the test accuses an honest party"
    if e.name == "suff":
        return (f"no trace shows the parties blamed by {t} causing a violation on their own; "
                f"the test may blame too many parties, or the protocol lacks that behaviour")
    if e.name == "single":
        return (f"every trace matching {t} has further matches; make {t} single-matched "
                f"on some trace, e.g. by making it antisymmetric in its variables")
    if e.name == "inj":
        return f"{t} can map two free variables to the same party; split it by partitions of its free variables"
    if e.name == "RepP":
        if e.status is Status.SKIPPED:
            return "replacement property not checked because an injectivity condition failed"
        return "the universe is not closed under replacing blamed parties; look for literal public names in rules"
    return ""


def required_keys(tests: Iterable[str]) -> set[str]:
    keys = {"verif_empty", "RepP"}
    for t in tests:
        keys |= {f"{s}[{t}]" for s in SUFFIXES if s != "verif_empty"}
    return keys


def diagnose(entries: Sequence[ConditionEntry], tests: Sequence[str] | None = None,
             bound: int | None = None, pool: Sequence | None = None) -> Diagnosis:
    """Verdict from the trace-property and replacement conditions."""
    relevant = [e for e in entries if e.family is not Family.AXIOM]
    if tests is None:
        tests = list(dict.fromkeys(e.test for e in relevant if e.test is not None))
    have = {e.key for e in relevant}
    missing = sorted(required_keys(tests) - have)
    if missing:
        raise SpecError("incomplete condition report, missing " + ", ".join(missing))
    failed = [e for e in relevant if e.status is not Status.PASS and e.name in REFUTING | UNDETERMINED]
    hints = [h for h in (_hint(e, tests) for e in failed) if h]
    if any(e.name == "BR" and e.status is Status.FAIL for e in relevant):
        hints.append("the syntactic renaming check failed; the replacement property was only confirmed "
                     "on the enumerated universe")
    if any(e.name in REFUTING for e in failed):
        verdict = AccVerdict.VIOLATED
    elif failed:
        verdict = AccVerdict.INCONCLUSIVE
    else:
        verdict = AccVerdict.HOLDS
        pool_text = ", ".join(str(p) for p in pool) if pool is not None else "?"
        hints.append(DISCLAIMER.format(bound=bound if bound is not None else "?", pool=pool_text))
    return Diagnosis(verdict, [e.key for e in failed], hints)


# ---------------------------------------------------------------- injectivity split

def set_partitions(items: Sequence) -> list[list[list]]:
    """All partitions of `items`, blocks ordered by first element."""
    items = list(items)
    if not items:
        return [[]]
    first, rest = items[0], items[1:]
    out = []
    for p in set_partitions(rest):
        out.append([[first], *p])
        for k in range(len(p)):
            out.append([*p[:k], [first, *p[k]], *p[k + 1:]])
    pos = {x: k for k, x in enumerate(items)}
    out = [sorted(p, key=lambda b: pos[b[0]]) for p in out]
    return sorted(out, key=lambda p: (-len(p), [[pos[x] for x in b] for b in p]))


def split_for_injectivity(ct: CaseTest) -> list[CaseTest]:
    """One test per partition of fv(ct): each block merged into one variable,
    distinct blocks required to differ. With a single free variable the
    original test is returned unchanged."""
    if len(ct.fv) == 1:
        return [ct]
    out = []
    for k, part in enumerate(set_partitions(ct.fv), 1):
        reps = [block[0] for block in part]
        merge = {v: block[0] for block in part for v in block[1:]}
        body = substitute_formula(ct.formula, merge) if merge else ct.formula
        qvars, cs = lift_exists(body)
        neq = [Not(Eq(a, b)) for i, a in enumerate(reps) for b in reps[i + 1:]]
        inner = conj(*cs, *neq)
        formula = Exists(qvars, inner) if qvars else inner
        out.append(CaseTest(f"{ct.name}_{k}", formula, tuple(reps)))
    return out
