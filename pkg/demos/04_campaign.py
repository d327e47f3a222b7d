"""Random-protocol campaign.

Generates small protocols with random case tests and properties, then checks
that the accountability criterion agrees with the condition suite and that the
axiom and trace-property forms of each condition coincide.
"""

from __future__ import annotations

import sys

from acclab.campaign import run_campaign

count = int(sys.argv[1]) if len(sys.argv) > 1 else 40
summary = run_campaign(count, seed=0)
print(summary.to_text())
sys.exit(0 if summary.ok else 1)
