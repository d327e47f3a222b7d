"""Random small protocols for cross-checking conditions against brute force."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

from .accountability import Analysis, check_accountability
from .conditions import check_axioms, check_compiled, check_repp_bruteforce, compile_conditions
from .errors import StateCapExceeded
from .lemmas import lemma_tests
from .parsing import parse_protocol, parse_spec
from .protocol import EnumerationBounds, enumerate_traces

# rule templates over K/1 (key material), A/1 and B/2 (observable events)
RULES = (
    "[] --[Corrupted($x)]-> [K($x)]",
    "[] --[Corrupted($x), A($x)]-> [K($x)]",
    "[K($x)] --[A($x)]-> [K($x)]",
    "[K($x)] --[A($x)]-> []",
    "[K($x), K($y)] --[B($x, $y)]-> [K($x), K($y)]",
    "[K($x)] --[B($x, $y)]-> [K($x)]",
    "[] --[A($x)]-> []",
    "[] --[B($x, $y)]-> []",
    "[] --[Corrupted($x), B($x, $y)]-> []",
    "[K($x)] --[Corrupted($y), B($x, $y)]-> [K($x)]",
)

TESTS = (
    "Ex #i. A(x)@i",
    "Ex y #i. B(x, y)@i",
    "Ex y #i. B(y, x)@i",
    "Ex #i. B(x, y)@i",
    "Ex #i. B(x, x)@i",
    "Ex #i #j. A(x)@i & B(x, y)@j",
)

PROPERTIES = (
    "not(Ex x #i. A(x)@i)",
    "not(Ex x y #i. B(x, y)@i)",
    "not(Ex x y #i. A(x)@i | B(x, y)@i)",
    "All x y #i. B(x, y)@i ==> x = y",
    "All x #i. A(x)@i ==> (Ex y #j. B(x, y)@j)",
)

RESTRICTIONS = (
    'restriction once: "All x #i #j. Corrupted(x)@i & Corrupted(x)@j ==> #i = #j"',
    'restriction distinct: "All x #i. B(x, x)@i ==> F"',
)

MAX_TRACES = 1500
MAX_STATES = 3000


@dataclass
class Instance:
    protocol: str
    spec: str
    bound: int
    parties: int


def random_instance(rng: random.Random) -> Instance:
    rules = rng.sample(RULES, rng.randint(1, 4))
    lines = [f"parties: {rng.randint(1, 3)}", ""]
    lines += [f"rule R{k}: {r}" for k, r in enumerate(rules, 1)]
    for r in RESTRICTIONS:
        if rng.random() < 0.4:
            lines.append(r)
    tests = rng.sample(TESTS, rng.randint(1, 2))
    spec = [f'test t{k}: "{t}"' for k, t in enumerate(tests, 1)]
    names = ", ".join(f"t{k}" for k in range(1, len(tests) + 1))
    spec.append(f'lemma acc: {names} accounts for "{rng.choice(PROPERTIES)}"')
    return Instance("\n".join(lines) + "\n", "\n".join(spec) + "\n", rng.randint(2, 4), 0)


@dataclass
class Outcome:
    instance: Instance
    trace_count: int
    flags: dict
    discrepancies: list


def _all(entries, name):
    return all(e.ok for e in entries if e.name == name)


def evaluate_instance(inst: Instance) -> Outcome | None:
    """Run every cross-check; None if the universe cannot be kept small."""
    p = parse_protocol(inst.protocol, "<random>")
    spec = parse_spec(inst.spec, source="<random>")
    lem = spec.lemmas[0]
    tests = lemma_tests(spec, lem)
    # grow the bound until the target or the size cap is reached
    universe, bound = None, 0
    for b in range(1, inst.bound + 1):
        try:
            u = enumerate_traces(p, EnumerationBounds(b, p.pool(), state_cap=MAX_STATES))
        except StateCapExceeded:
            break
        if len(u) > MAX_TRACES:
            break
        universe, bound = u, b
    if universe is None:
        return None
    inst.bound, inst.parties = bound, len(p.pool())
    a = Analysis(universe, tests, lem.prop, p.theory)
    ax = {e.name: e.ok for e in check_axioms(a)}
    cp = check_compiled(a, compile_conditions(a.tests, a.phi))
    inj = _all(cp, "inj")
    repp = check_repp_bruteforce(a, inj).ok
    tp = {s: _all(cp, s) for s in ("suff", "verif_empty", "verif_nonempty", "min", "uniq", "inj", "single")}
    acc = check_accountability(a).ok
    vc = all(ax.values())
    vc_tp = all(tp[s] for s in ("suff", "verif_empty", "verif_nonempty", "min", "uniq"))
    flags = {"acc": acc, "VC": vc, "VC_tp": vc_tp, "RepP": repp, **{f"ax_{k}": v for k, v in ax.items()},
             **{f"tp_{k}": v for k, v in tp.items()}}

    bad = []

    def expect(name, ok):
        if not ok:
            bad.append(name)

    expect("iff_vc", vc == acc)
    expect("ver_equiv", ax["Ver"] == (tp["verif_empty"] and tp["verif_nonempty"]))
    expect("min_equiv", ax["Min"] == tp["min"])
    expect("uniq_equiv", ax["Uniq"] == tp["uniq"])
    expect("suff_snd", not (tp["suff"] and tp["uniq"] and inj and repp) or ax["Suff"])
    expect("suff_cmpl", not (ax["Suff"] and tp["single"] and ax["Ver"]) or tp["suff"])
    expect("comp", not tp["verif_nonempty"] or ax["Comp"])
    expect("snd_trace_prop", not (vc_tp and inj and repp) or acc)
    expect("cmpl_trace_prop", not (acc and tp["single"]) or vc_tp)
    bad += corollary_failures(a)
    return Outcome(inst, len(universe), flags, bad)


def corollary_failures(a: Analysis) -> list[str]:
    """apv corollaries and the ctr/verdict monotonicity over every trace (pair)."""
    bad = []
    n = len(a)
    for i in range(n):
        v = a.apv(i)
        if (not v) != a.sat[i]:
            bad.append("apv_empty_iff_phi")
        if any(x < y for x in v for y in v):
            bad.append("min_apv")
        for j in a.successors(i):
            for s2 in a.apv(j):
                if v and not any(s <= s2 for s in v):
                    bad.append("rel_apv")
    # vf is a function of ctr, so distinct ctr values cover every pair
    groups = {c: a.vf[m[0]] for c, m in a.ctr_groups.items()}
    for c1, v1 in groups.items():
        for c2, v2 in groups.items():
            if c2 <= c1 and not v2 <= v1:
                bad.append("ctr_vf")
    return sorted(set(bad))


@dataclass
class Summary:
    seed: int
    outcomes: list = field(default_factory=list)
    skipped: int = 0
    seconds: float = 0.0

    @property
    def discrepancies(self) -> list:
        return [(k, o) for k, o in enumerate(self.outcomes) if o.discrepancies]

    @property
    def ok(self) -> bool:
        return not self.discrepancies

    def counts(self) -> dict:
        out: dict[str, int] = {}
        for o in self.outcomes:
            for k, v in o.flags.items():
                if not v:
                    out[k] = out.get(k, 0) + 1
        return dict(sorted(out.items()))

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "protocols": len(self.outcomes),
            "resampled": self.skipped,
            "seconds": round(self.seconds, 2),
            "accountable": sum(o.flags["acc"] for o in self.outcomes),
            "failures_per_condition": self.counts(),
            "discrepancies": [{"index": k, "checks": o.discrepancies, "protocol": o.instance.protocol,
                               "spec": o.instance.spec, "bound": o.instance.bound} for k, o in self.discrepancies],
        }

    def to_text(self) -> str:
        d = self.to_json()
        lines = [f"{d['protocols']} protocols (seed {d['seed']}, {d['resampled']} resampled) in {d['seconds']} s",
                 f"accountable: {d['accountable']}",
                 "protocols failing each condition: " + ", ".join(f"{k}={v}" for k, v in d["failures_per_condition"].items()),
                 f"discrepancies: {len(d['discrepancies'])}"]
        for item in d["discrepancies"]:
            lines.append(f"  #{item['index']}: {', '.join(item['checks'])}")
        return "\n".join(lines) + "\n"


def run_campaign(count: int = 200, seed: int = 0) -> Summary:
    rng = random.Random(seed)
    summary = Summary(seed)
    start = time.perf_counter()
    while len(summary.outcomes) < count:
        out = evaluate_instance(random_instance(rng))
        if out is None:
            summary.skipped += 1
            continue
        summary.outcomes.append(out)
    summary.seconds = time.perf_counter() - start
    return summary
