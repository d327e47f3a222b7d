"""End-to-end checks: load inputs, enumerate, evaluate, diagnose, report."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .accountability import (
    Analysis, CtrRelation, ExplicitRelation, Relation, check_accountability, check_relation_axioms,
    format_verdict, substitution_json, verdict_json,
)
from .conditions import (
    ConditionEntry, Family, Status, check_axioms, check_compiled, check_repp_bruteforce, compile_conditions,
)
from .diagnosis import Diagnosis, diagnose
from .errors import SpecError
from .lemmas import lemma_tests
from .parsing import AccountabilitySpec, LemmaDecl, parse_protocol, parse_spec
from .protocol import EnumerationBounds, ProtocolSpec, check_br_syntactic, enumerate_traces
from .terms import term_key
from .trace import Trace

SCHEMA_VERSION = 1


def constants_of(p: ProtocolSpec) -> frozenset:
    return frozenset(s.name for s in p.signature.symbols.values() if s.arity == 0)


def load_protocol(path: str | Path) -> ProtocolSpec:
    path = Path(path)
    return parse_protocol(path.read_text(), str(path))


def load_spec(path: str | Path, protocol: ProtocolSpec | None = None) -> AccountabilitySpec:
    path = Path(path)
    consts = constants_of(protocol) if protocol is not None else frozenset()
    return parse_spec(path.read_text(), consts, str(path))


def pick_lemma(spec: AccountabilitySpec, name: str | None) -> LemmaDecl:
    if not spec.lemmas:
        raise SpecError("the accountability spec declares no lemma")
    if name is None:
        return spec.lemmas[0]
    for lem in spec.lemmas:
        if lem.name == name:
            return lem
    raise SpecError(f"unknown lemma {name}")


def load_relation(arg: str | None) -> Relation:
    """`ctr` or `file:PATH`, where PATH holds {"pairs": [[i, j], ...]} over universe indices."""
    if arg in (None, "ctr"):
        return CtrRelation()
    if arg.startswith("file:"):
        data = json.loads(Path(arg[5:]).read_text())
        return ExplicitRelation(data["pairs"])
    raise SpecError(f"unknown relation {arg!r}; use ctr or file:PATH")


@dataclass
class Setup:
    protocol: ProtocolSpec
    spec: AccountabilitySpec
    lemma: LemmaDecl
    bounds: EnumerationBounds
    analysis: Analysis

    @property
    def universe(self) -> tuple:
        return self.analysis.universe


def prepare(protocol: ProtocolSpec, spec: AccountabilitySpec, lemma: str | None = None, bound: int = 5,
            parties: int | None = None, relation: Relation | None = None) -> Setup:
    lem = pick_lemma(spec, lemma)
    tests = lemma_tests(spec, lem)
    bounds = EnumerationBounds(bound, protocol.pool(parties))
    universe = enumerate_traces(protocol, bounds)
    a = Analysis(universe, tests, lem.prop, protocol.theory, relation)
    return Setup(protocol, spec, lem, bounds, a)


@dataclass
class Report:
    setup: Setup
    conditions: list
    relation_axioms: list
    diagnosis: Diagnosis
    spec_errors: list = field(default_factory=list)
    br_findings: list = field(default_factory=list)

    # witness traces are numbered in order of first reference
    def _witness_ids(self) -> dict:
        ids: dict[int, int] = {}
        for e in self.conditions:
            for w in e.witnesses:
                i = _trace_of(w)
                if i is not None:
                    ids.setdefault(i, len(ids) + 1)
        for r in self.relation_axioms:
            for w in r.witnesses:
                for i in w:
                    ids.setdefault(i, len(ids) + 1)
        return ids

    def to_json(self) -> dict:
        a = self.setup.analysis
        ids = self._witness_ids()
        conds = []
        for e in self.conditions:
            item = {"name": e.name, "family": e.family.value, "status": e.status.value,
                    "test": e.test, "witnesses": [_witness_json(w, ids) for w in e.witnesses]}
            if e.reason:
                item["reason"] = e.reason
            conds.append(item)
        rel = [{"name": r.name, "status": r.status,
                "witnesses": [{"traces": [ids[i] for i in w]} for w in r.witnesses]} for r in self.relation_axioms]
        witnesses = []
        for i, k in sorted(ids.items(), key=lambda kv: kv[1]):
            witnesses.append({
                "id": k,
                "index": i,
                "trace": str(a.universe[i]),
                "satisfies_property": a.sat[i],
                "corrupted": sorted(str(p) for p in a.cor[i]),
                "verdict": verdict_json(a.vf[i]),
                "apv": verdict_json(a.apv(i)),
                "ctr": [{"test": n, "instantiation": substitution_json(r)} for n, r in sorted(
                    a.ctr[i], key=lambda x: (x[0], [term_key(v) for v in x[1].values()]))],
            })
        b = self.setup.bounds
        return {
            "schema_version": SCHEMA_VERSION,
            "lemma": self.setup.lemma.name,
            "relation": a.relation.name,
            "universe": {"bound": b.bound, "parties": [str(p) for p in b.parties], "trace_count": len(a)},
            "spec_errors": list(self.spec_errors),
            "conditions": conds,
            "relation_axioms": rel,
            "br_findings": [str(f) for f in self.br_findings],
            "diagnosis": {"verdict": self.diagnosis.verdict.value, "failed": self.diagnosis.failed,
                          "hints": self.diagnosis.hints, "exit_code": self.exit_code},
            "witnesses": witnesses,
        }

    @property
    def exit_code(self) -> int:
        from .diagnosis import INPUT_ERROR
        return INPUT_ERROR if self.spec_errors else self.diagnosis.exit_code

    def to_text(self) -> str:
        d = self.to_json()
        u = d["universe"]
        lines = [f"lemma {d['lemma']} (relation {d['relation']})",
                 f"universe: {u['trace_count']} traces, bound {u['bound']}, parties {', '.join(u['parties'])}"]
        for err in d["spec_errors"]:
            lines.append(f"spec error: {err}")
        lines.append("conditions:")
        for c in d["conditions"]:
            key = c["name"] if c["test"] is None else f"{c['name']}[{c['test']}]"
            extra = ""
            if c["witnesses"]:
                extra = "  witness " + "; ".join(_witness_text(w) for w in c["witnesses"])
            elif c.get("reason"):
                extra = f"  ({c['reason']})"
            lines.append(f"  {c['family']:<15} {key:<28} {c['status']}{extra}")
        lines.append("relation axioms:")
        for r in d["relation_axioms"]:
            lines.append(f"  {r['name']:<28} {r['status']}")
        for f in d["br_findings"]:
            lines.append(f"BR finding: {f}")
        diag = d["diagnosis"]
        lines.append(f"diagnosis: {diag['verdict']}")
        for h in diag["hints"]:
            lines.append(f"  hint: {h}")
        if d["witnesses"]:
            lines.append("witness traces:")
            for w in d["witnesses"]:
                lines.append(f"  #{w['id']} (universe index {w['index']}): {w['trace']}")
                lines.append(f"      verdict {_fmt(w['verdict'])}  apv {_fmt(w['apv'])}  "
                             f"corrupted {{{', '.join(w['corrupted'])}}}")
        return "\n".join(lines) + "\n"


def _fmt(groups: list) -> str:
    return "<" + ", ".join("(" + ", ".join(g) + ")" for g in groups) + ">"


def _trace_of(w):
    if isinstance(w, int):
        return w
    if isinstance(w, tuple) and w and isinstance(w[0], int):
        return w[0]
    return None


def _witness_json(w, ids: dict) -> dict:
    i = _trace_of(w)
    out: dict = {}
    if i is not None:
        out["trace"] = ids[i]
    rest = w[1:] if isinstance(w, tuple) else (() if isinstance(w, int) else (w,))
    if rest:
        out["detail"] = " ".join(_show(x) for x in rest)
    return out


def _show(x) -> str:
    if isinstance(x, frozenset):
        return "(" + ", ".join(sorted(str(p) for p in x)) + ")"
    if isinstance(x, list):
        return "{" + ", ".join(str(p) for p in x) + "}"
    return str(x)


def _witness_text(w: dict) -> str:
    parts = []
    if "trace" in w:
        parts.append(f"#{w['trace']}")
    if "detail" in w:
        parts.append(w["detail"])
    return " ".join(parts)


def run_check(setup: Setup) -> Report:
    a = setup.analysis
    entries: list[ConditionEntry] = check_axioms(a)
    compiled = compile_conditions(a.tests, a.phi)
    cp = check_compiled(a, compiled)
    entries += cp
    inj_ok = all(e.ok for e in cp if e.name == "inj")
    entries.append(check_repp_bruteforce(a, inj_ok))
    br = check_br_syntactic(setup.protocol)
    entries.append(ConditionEntry("BR", Family.SYNTACTIC, Status.PASS if br.ok else Status.FAIL,
                                  witnesses=[str(f) for f in br.findings]))
    rel = check_relation_axioms(a)
    diag = diagnose(entries, [t.name for t in a.tests], setup.bounds.bound, setup.bounds.parties)
    errors = [f"test {n} matches no trace of the universe" for n in a.unsatisfiable_tests()]
    return Report(setup, entries, rel, diag, errors, list(br.findings))


def apv_rows(setup: Setup, indices=None) -> list[dict]:
    a = setup.analysis
    rows = []
    for i in (range(len(a)) if indices is None else indices):
        if not 0 <= i < len(a):
            raise SpecError(f"trace index {i} outside the universe (0..{len(a) - 1})")
        rows.append({
            "index": i,
            "trace": str(a.universe[i]),
            "satisfies_property": a.sat[i],
            "corrupted": sorted(str(p) for p in a.cor[i]),
            "ctr": [{"test": n, "instantiation": substitution_json(r)} for n, r in sorted(
                a.ctr[i], key=lambda x: (x[0], [term_key(v) for v in x[1].values()]))],
            "verdict": format_verdict(a.vf[i]),
            "apv": format_verdict(a.apv(i)),
        })
    return rows


def oracle(setup: Setup) -> dict:
    r = check_accountability(setup.analysis)
    out = {"accountable": r.ok, "trace_count": len(setup.analysis)}
    if not r.ok:
        out["witness"] = {"index": setup.analysis.idx(r.witness), "trace": str(r.witness),
                          "verdict": format_verdict(r.verdict), "apv": format_verdict(r.apv)}
    return out


def witness_trace(setup: Setup, i: int) -> Trace:
    return setup.analysis.universe[i]
