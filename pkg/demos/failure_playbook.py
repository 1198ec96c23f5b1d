"""Build the full failure playbook for the grid fixture.

A robust design is only half the deliverable; the other half is the sheet
that says, for each failure, which links to bring up, where each one gets
regenerated, and which fiber it rides.  This script produces that sheet,
saves it as a design document, and proves the document round-trips.
"""

from __future__ import annotations

import tempfile
from importlib import resources
from pathlib import Path

from roadmnet import (
    design_optimal,
    enumerate_failures,
    load_design,
    load_inputs,
    plan_links,
    save_design,
)

path = resources.files("roadmnet") / "data" / "grid3x3_600.json"
topology, demands, costs = load_inputs(str(path))

design, plans = design_optimal(topology, demands, costs)
print(f"design: {design.summary()}")
print(f"playbook covers {len(plans)} failure states\n")

# One block per scenario.  Links are unordered router pairs; each capacity
# unit lists its regen chain and the spans its signal actually traverses.
for scenario in enumerate_failures(topology):
    plan = plans[scenario]
    print(scenario.label())
    for a, b, units in plan.canonical_links():
        if plan.is_intra(a, b):
            print(f"  {a}<->{b}  x{units}  (same node, port-to-port)")
            continue
        for i, chain in enumerate(plan.regen_chains[(a, b)]):
            route = plan.span_paths[(a, b)][i]
            stops = " -> ".join(chain) if chain else "direct"
            print(f"  {a}<->{b}  unit {i + 1}: regen {stops}; "
                  f"{len(route)} span(s)")

# -- Hand the playbook to someone else. ----------------------------------
# The document format freezes every per-scenario link with its chains and
# span routes; reloading reconstructs the same plan without re-solving.

with tempfile.TemporaryDirectory() as tmp:
    doc_path = Path(tmp) / "grid-playbook.json"
    links = {s.label(): plan_links(p) for s, p in plans.items()}
    save_design(doc_path, design, costs, algorithm="optimal", links=links)
    doc = load_design(doc_path)
    rebuilt = doc.plan(topology, label="no-failure")
    assert rebuilt.link_caps == plans[enumerate_failures(topology)[0]].link_caps
    print(f"\nsaved and reloaded playbook: {len(doc.links)} scenario entries, "
          f"{doc_path.stat().st_size} bytes")
