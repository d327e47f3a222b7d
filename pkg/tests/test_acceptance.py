"""Acceptance criteria, one test each. Every test records a pass/fail line that
is printed in the terminal summary (and to stdout when run with -s)."""

from __future__ import annotations

import itertools
import json
import random
import time

from acclab import fixture_path
from acclab.accountability import CaseTest, ctr_of, format_verdict, verdict_of
from acclab.campaign import PROPERTIES, TESTS, Instance, evaluate_instance
from acclab.cli import run
from acclab.conditions import Family, check_repp_bruteforce, compile_conditions
from acclab.evaluation import evaluate, is_guarded
from acclab.lemmas import emit_lemmas
from acclab.oracle import oracle_evaluate
from acclab.parsing import parse_formula
from acclab.protocol import EnumerationBounds, check_br_syntactic, enumerate_traces, execute, rename_closure_failures
from acclab.terms import Substitution, Var, pub
from acclab.workbench import load_protocol, load_spec, run_check

from conftest import ACCEPTANCE, GOLDEN, fixture, setup_for
from randgen import NAMES, random_formula, random_trace


def record(n: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[n] = (ok, detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


def groups(*gs):
    return frozenset(frozenset(pub(p) for p in g) for g in gs)


def test_criterion_1_worked_examples():
    start = time.perf_counter()
    db = load_protocol(fixture_path("db.msr"))
    spec = load_spec(fixture_path("db.acc"), db)
    s = setup_for("db.msr", "db.acc", bound=4)
    report = run_check(s)
    tests = s.analysis.tests
    five = execute(db, [("CorruptManager", {"m": "M1"}), ("CorruptManager", {"m": "M2"}),
                        ("CorruptEmployee", {"e": "E1"}), ("CorruptEmployee", {"e": "E2"}),
                        ("CorruptEmployee", {"e": "E3"}), ("LeakM", {"m": "M1"}), ("LeakM", {"m": "M2"}),
                        ("LeakE", {"a": "E1", "b": "E2"}), ("LeakE", {"a": "E2", "b": "E3"}),
                        ("LeakE", {"a": "E1", "b": "E3"})])
    vf_ok = verdict_of(five, tests) == groups(["M1"], ["M2"], ["E1", "E2"], ["E2", "E3"], ["E1", "E3"])
    m, ei, ej = Var("m"), Var("ei"), Var("ej")
    want_ctr = {("t1", Substitution({m: pub("M1")})), ("t1", Substitution({m: pub("M2")}))}
    want_ctr |= {("t2", Substitution({ei: pub(a), ej: pub(b)})) for a, b in (("E1", "E2"), ("E2", "E3"), ("E1", "E3"))}
    ctr_ok = ctr_of(five, tests) == want_ctr
    single = setup_for("db_single.msr", "db.acc", bound=5).analysis
    apvs = {format_verdict(single.apv(i)) for i in range(len(single))}
    apv_ok = apvs == {"<>", "<('M')>", "<('E1', 'E2')>", "<('M'), ('E1', 'E2')>"}
    secs = time.perf_counter() - start
    ok = vf_ok and ctr_ok and apv_ok and report.exit_code == 0 and secs < 10 and spec.lemmas
    record(1, ok, f"vf exact={vf_ok}, ctr exact={ctr_ok}, four apv verdicts={apv_ok}, "
                  f"db bound 4 ({len(s.universe)} traces) checked in {secs:.2f} s")
    assert ok


def _campaign_ok(summary, checks):
    bad = [(k, o.discrepancies) for k, o in enumerate(summary.outcomes) if set(o.discrepancies) & set(checks)]
    return bad


def test_criterion_2_iff_vc(campaign_summary):
    s = campaign_summary
    shapes_ok = all(o.instance.bound <= 4 and o.instance.parties <= 3 and o.instance.protocol.count("rule ") <= 4
                    and o.instance.spec.count("test ") <= 2 for o in s.outcomes)
    bad = _campaign_ok(s, ["iff_vc"])
    acc = sum(o.flags["acc"] for o in s.outcomes)
    ok = len(s.outcomes) == 200 and not bad and shapes_ok and s.seconds < 300
    record(2, ok, f"{len(s.outcomes)} protocols, {acc} accountable, {len(bad)} discrepancies, {s.seconds:.1f} s")
    assert ok, bad[:3]


def test_criterion_3_equivalence_and_implication_lemmas(campaign_summary):
    names = ["ver_equiv", "min_equiv", "uniq_equiv", "suff_snd", "suff_cmpl", "comp"]
    bad = _campaign_ok(campaign_summary, names)
    fixtures = [("db.msr", "db.acc"), ("db.msr", "db_no_t2.acc"), ("dmn_blame_all.msr", "dmn.acc"),
                ("dmn_blame_first.msr", "dmn.acc"), ("db_single.msr", "db.acc"), ("mixvote_s.msr", "mixvote_s.acc")]
    fx_bad = []
    for msr, acc in fixtures:
        inst = Instance(fixture_path(msr).read_text(), fixture_path(acc).read_text(), 4, 0)
        out = evaluate_instance(inst)
        if out is None or set(out.discrepancies) & set(names):
            fx_bad.append(msr)
    failing = {k: sum(not o.flags[k] for o in campaign_summary.outcomes)
               for k in ("ax_Ver", "ax_Min", "ax_Uniq", "ax_Suff", "ax_Comp")}
    ok = not bad and not fx_bad
    record(3, ok, f"{len(bad)} campaign and {len(fx_bad)} fixture counterexamples; axiom failures seen {failing}")
    assert ok, (bad[:3], fx_bad)


def test_criterion_4_apv_corollaries(campaign_summary):
    bad = _campaign_ok(campaign_summary, ["apv_empty_iff_phi", "min_apv"])
    fx_bad = []
    traces = 0
    for msr, acc, b in [("db.msr", "db.acc", 4), ("db.msr", "db_no_t2.acc", 4), ("dmn_blame_all.msr", "dmn.acc", 4),
                        ("dmn_blame_first.msr", "dmn.acc", 4), ("db_single.msr", "db.acc", 5),
                        ("mixvote_s.msr", "mixvote_s.acc", 4)]:
        a = setup_for(msr, acc, bound=b).analysis
        for i in range(len(a)):
            traces += 1
            v = a.apv(i)
            if (not v) != a.sat[i] or any(x < y for x in v for y in v):
                fx_bad.append((msr, i))
    ok = not bad and not fx_bad
    record(4, ok, f"{traces} fixture traces and {len(campaign_summary.outcomes)} campaign universes, "
                  f"{len(bad) + len(fx_bad)} violations")
    assert ok


def test_criterion_5_guardedness_and_goldens():
    formulas = 0
    unguarded = []
    for n in (1, 2):
        for combo in itertools.permutations(TESTS, n):
            tests = [CaseTest.build(f"t{k}", parse_formula(x)) for k, x in enumerate(combo, 1)]
            for prop in PROPERTIES:
                cs = compile_conditions(tests, parse_formula(prop))
                if len(cs) != 6 * n + 1:
                    unguarded.append(("count", combo, prop))
                for c in cs:
                    formulas += 1
                    if not is_guarded(c.formula):
                        unguarded.append((combo, prop, c.key))
    golden_ok = True
    for acc, golden, n in [("db.acc", "db.spthy", 2), ("db_no_t2.acc", "db_no_t2.spthy", 1), ("dmn.acc", "dmn.spthy", 1)]:
        text = emit_lemmas(load_spec(fixture_path(acc)))
        golden_ok &= text == (GOLDEN / golden).read_text() and text.count("lemma ") == 6 * n + 1
        for block in text.split("\n\n"):
            body = block.split('"')[1]
            formulas += 1
            if not is_guarded(parse_formula(body)):
                unguarded.append((acc, block.splitlines()[0]))
    ok = not unguarded and golden_ok
    record(5, ok, f"{formulas} compiled/emitted formulas, {len(unguarded)} unguarded; goldens byte-exact={golden_ok}")
    assert ok, unguarded[:3]


def test_criterion_6_br_and_repp():
    pairs = {"db.msr": "db.acc", "dmn_blame_all.msr": "dmn.acc", "dmn_blame_first.msr": "dmn.acc",
             "db_single.msr": "db.acc", "mixvote_s.msr": "mixvote_s.acc", "pair_corrupt.msr": None}
    passing, problems = [], []
    for msr, acc in pairs.items():
        p = load_protocol(fixture_path(msr))
        if not check_br_syntactic(p).ok:
            continue
        passing.append(msr)
        pool = p.pool(3)
        u = enumerate_traces(p, EnumerationBounds(4, pool))
        if rename_closure_failures(u, pool, limit=1):
            problems.append(f"{msr}: not closed")
        if acc is not None:
            s = setup_for(msr, acc, bound=4, parties=3)
            if not check_repp_bruteforce(s.analysis).ok:
                problems.append(f"{msr}: RepP")
    mv = check_br_syntactic(load_protocol(fixture_path("mixvote_s.msr")))
    cites = {f.where for f in mv.findings if f.kind == "literal-name" and "'S'" in f.detail}
    s_ok = not mv.ok and "rule CorruptServer" in cites and "rule Drop" in cites
    ok = len(passing) >= 3 and not problems and s_ok
    record(6, ok, f"BR-passing fixtures {passing} closed under all 6 pool bijections at bound 4 with RepP; "
                  f"literal 'S' fixture flagged in {sorted(cites)}")
    assert ok, problems


def test_criterion_7_dmn(tmp_path):
    out_all, out_first = tmp_path / "all.json", tmp_path / "first.json"
    code_all = run(["check", fixture("dmn_blame_all.msr"), fixture("dmn.acc"), "--bound", "4", "--format", "json",
                    "--out", str(out_all)])
    code_first = run(["check", fixture("dmn_blame_first.msr"), fixture("dmn.acc"), "--bound", "4",
                      "--format", "json", "--out", str(out_first)])
    r_all, r_first = json.loads(out_all.read_text()), json.loads(out_first.read_text())
    uniq = [c for c in r_all["conditions"] if c["name"] == "uniq" and c["family"] == Family.TRACE_PROPERTY.value]
    uniq_fail = uniq and uniq[0]["status"] == "fail"
    # the witness blames a server that was never corrupted
    honest_blamed = False
    if uniq_fail and uniq[0]["witnesses"]:
        w = next(x for x in r_all["witnesses"] if x["id"] == uniq[0]["witnesses"][0]["trace"])
        blamed = {p for g in w["verdict"] for p in g}
        honest_blamed = bool(blamed - set(w["corrupted"]))
    first_clean = all(c["status"] == "pass" for c in r_first["conditions"])
    ok = (code_all, code_first) == (1, 0) and uniq_fail and honest_blamed and first_clean \
        and r_all["diagnosis"]["verdict"] == "acc_violated" and r_first["diagnosis"]["verdict"] == "acc_holds"
    record(7, ok, f"blame-all exit {code_all} ({r_all['diagnosis']['verdict']}, uniq fails, honest server blamed="
                  f"{honest_blamed}); blame-first exit {code_first} ({r_first['diagnosis']['verdict']})")
    assert ok


def test_criterion_8_oracle_equivalence():
    rng = random.Random(2024)
    v = Var("v")
    pairs = disagreements = valuations = 0
    for k in range(1000):
        t = random_trace(rng, max_len=4)
        free = [v] if k % 3 == 0 else []
        phi = random_formula(rng, free=free)
        assert is_guarded(phi)
        pairs += 1
        envs = [{}] if not free else [{v: x} for x in t.subterm_domain()] + [{v: NAMES[2]}]
        for env in envs:
            valuations += 1
            if evaluate(t, env, phi) != oracle_evaluate(t, env, phi):
                disagreements += 1
    ok = pairs == 1000 and disagreements == 0
    record(8, ok, f"{pairs} (trace, formula) pairs, {valuations} valuations, {disagreements} disagreements")
    assert ok
