"""A-posteriori verdicts on a one-manager, two-employee database.

Each run of the universe gets the set of minimal counterfactual verdicts.
Runs that keep the data secret get the empty verdict.
"""

from __future__ import annotations

from collections import Counter

from acclab import fixture_path
from acclab.accountability import format_verdict
from acclab.workbench import load_protocol, load_spec, prepare

p = load_protocol(fixture_path("db_single.msr"))
setup = prepare(p, load_spec(fixture_path("db.acc"), p), bound=5)
a = setup.analysis

seen = Counter(format_verdict(a.apv(i)) for i in range(len(a)))
print(f"{len(a)} runs up to 5 steps")
for verdict, n in sorted(seen.items()):
    print(f"  {verdict:28} {n} runs")

# one representative run per distinct verdict
shown = set()
for i in range(len(a)):
    v = format_verdict(a.apv(i))
    if v not in shown:
        shown.add(v)
        print(f"\nrun {i} -> {v}")
        print(a.universe[i])
