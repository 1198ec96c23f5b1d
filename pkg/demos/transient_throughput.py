"""What survives in the seconds after a failure, before any replanning?

The robust design guarantees full delivery once links are remapped, but
remapping takes time.  In the window right after a failure only the calm-day
links that physically survived are available.  This script measures that
window on both fixtures, in two flavors:

  total      -- maximize summed delivered volume (some flows may starve)
  concurrent -- maximize the fraction every flow gets simultaneously
"""

from __future__ import annotations

import sys
from importlib import resources

from roadmnet import (
    FailureScenario,
    design_optimal,
    enumerate_failures,
    load_inputs,
    transient_reports,
    write_transient_csv,
)

nf = FailureScenario.no_failure()


def survey(name: str) -> None:
    path = resources.files("roadmnet") / "data" / f"{name}.json"
    topology, demands, costs = load_inputs(str(path))
    _, plans = design_optimal(topology, demands, costs)
    scens = enumerate_failures(topology)

    total = transient_reports(topology, demands, plans[nf], scens)
    conc = transient_reports(topology, demands, plans[nf], scens, concurrent=True)

    print(f"== {name}")
    print(f"{'scenario':<14} {'total':>8} {'concurrent':>11}")
    for t, c in zip(total, conc):
        print(f"{t.scenario.label():<14} {t.fraction:>8.2f} {c.fraction:>11.2f}")
    floor = min(t.fraction for t in total)
    print(f"worst case delivers {floor:.0%} of offered traffic\n")


survey("toy2x5")
survey("grid3x3_600")

# The zeros are honest.  Both calm-day plans use a single link, so in the
# transient window that link is a single point of failure: whatever cuts its
# fiber route or kills an endpoint router zeroes delivery until the design's
# spare tails are remapped.  Robustness after replanning and throughput
# before replanning are different promises; this report measures the second.

# Same numbers, machine-readable:
path = resources.files("roadmnet") / "data" / "grid3x3_600.json"
topology, demands, costs = load_inputs(str(path))
_, plans = design_optimal(topology, demands, costs)
reports = transient_reports(topology, demands, plans[nf], enumerate_failures(topology))
write_transient_csv(reports, sys.stdout)
