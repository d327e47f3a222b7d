"""Diagnosing a two-stage mix network.

The first auditor blames every server on the path of a wrong output, so an
honest server can be blamed next to a dishonest one. The second auditor blames
only the first server that deviated. The workbench explains which condition
breaks and emits the lemmas a prover would need.
"""

from __future__ import annotations

from acclab import fixture_path
from acclab.lemmas import emit_lemmas
from acclab.workbench import load_protocol, load_spec, prepare, run_check

for variant in ("dmn_blame_all.msr", "dmn_blame_first.msr"):
    p = load_protocol(fixture_path(variant))
    report = run_check(prepare(p, load_spec(fixture_path("dmn.acc"), p), bound=4))
    d = report.diagnosis
    print(f"== {variant}: {d.verdict.value} (exit {d.exit_code})")
    print("   failing:", ", ".join(d.failed) or "none")
    for h in d.hints:
        print("   hint:", h)
    print()

print("== lemmas for an external prover")
print(emit_lemmas(load_spec(fixture_path("dmn.acc"))))
