"""Shared database walkthrough.

Managers can leak on their own, employees only in pairs. We replay a run with
five leaks, look at the verdict and the counterfactual relation, then run the
full condition check on the bounded universe.
"""

from __future__ import annotations

from acclab import fixture_path
from acclab.accountability import ctr_of, format_verdict, verdict_of
from acclab.protocol import execute
from acclab.workbench import load_protocol, load_spec, prepare, run_check

db = load_protocol(fixture_path("db.msr"))
spec = load_spec(fixture_path("db.acc"), db)

print("1. Replaying a run where two managers and three employee pairs leak")
run = execute(db, [
    ("CorruptManager", {"m": "M1"}), ("CorruptManager", {"m": "M2"}),
    ("CorruptEmployee", {"e": "E1"}), ("CorruptEmployee", {"e": "E2"}), ("CorruptEmployee", {"e": "E3"}),
    ("LeakM", {"m": "M1"}), ("LeakM", {"m": "M2"}),
    ("LeakE", {"a": "E1", "b": "E2"}), ("LeakE", {"a": "E2", "b": "E3"}), ("LeakE", {"a": "E1", "b": "E3"}),
])
setup = prepare(db, spec, bound=4)
tests = setup.analysis.tests
print("   verdict:", format_verdict(verdict_of(run, tests)))
for name, inst in sorted(ctr_of(run, tests), key=str):
    print(f"   matched {name} with {inst}")

print("\n2. Checking every condition over all runs up to 4 steps with parties A1..A3")
report = run_check(setup)
print(report.to_text())
print("exit code:", report.exit_code)
