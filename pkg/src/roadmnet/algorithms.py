"""Design algorithms: joint optimum, two decomposition heuristics, and a
fixed-lightpath baseline.

All four size the same three resources (tails, regens, ports) against the
same failure set, but differ in how much reconfigurability they assume:

* ``design_optimal`` solves one model across every scenario jointly, sharing
  equipment freely between failure states.
* ``design_simple`` solves each scenario independently and keeps the
  elementwise maximum of the resulting placements.
* ``design_greedy`` walks the scenarios in order, each time buying only what
  the already-accumulated equipment cannot cover.
* ``design_legacy`` models a network without reconfigurable optics: links are
  bought with their lightpaths and regens permanently attached, and a failed
  link's equipment cannot be repurposed.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .design import (
    Design,
    InfeasibleDesignError,
    NoIncumbentError,
    PriorPlacement,
    build_design_model,
    extract_design,
    source_side_usage,
)
from .milp import LinearModel, SolveResult, solve
from .operation import OperationPlan, operate
from .topology import (
    CostModel,
    DemandMatrix,
    FailureScenario,
    SpanKey,
    Topology,
    dead_routers,
    enumerate_failures,
    shortest_path,
)

_REACH_EPS = 1e-9


def _scenario_list(
    topology: Topology, scenarios: Sequence[FailureScenario] | None
) -> list[FailureScenario]:
    return list(scenarios) if scenarios is not None else enumerate_failures(topology)


def _check_solve(result: SolveResult, scenario_hint: str) -> None:
    if result.status == "no_solution":
        raise NoIncumbentError(
            f"time limit expired with no placement found ({scenario_hint})"
        )
    if not result.ok:
        raise InfeasibleDesignError(
            f"no feasible placement exists ({scenario_hint})"
        )


def _diagnose_infeasible(
    topology: Topology,
    demands: DemandMatrix,
    costs: CostModel,
    scenarios: Sequence[FailureScenario],
) -> FailureScenario | None:
    """Find one scenario that is infeasible on its own, for a sharp error."""
    for scen in scenarios:
        dm = build_design_model(topology, demands, [scen], costs)
        if solve(dm.model).status == "infeasible":
            return scen
    return None


def _design_from_plans(
    topology: Topology,
    costs: CostModel,
    plans: dict[FailureScenario, OperationPlan],
    status: str,
) -> Design:
    """Tightest placement covering every plan: elementwise usage maxima."""
    tails = {r.id: 0 for r in topology.routers}
    reported = {n: 0 for n in topology.all_nodes}
    ports = {r.id: 0 for r in topology.routers}
    bookkeeping = {n: 0 for n in topology.all_nodes}
    for plan in plans.values():
        for rid, used in plan.tail_usage().items():
            tails[rid] = max(tails[rid], used)
        for rid, used in plan.port_usage().items():
            ports[rid] = max(ports[rid], used)
        for node, used in plan.regen_usage().items():
            reported[node] = max(reported[node], used)
        for node, used in plan.bookkeeping_usage().items():
            bookkeeping[node] = max(bookkeeping[node], used)
    raw = {n: reported[n] + bookkeeping[n] for n in topology.all_nodes}
    cost_reported = (
        costs.tail * sum(tails.values())
        + costs.regen * sum(reported.values())
        + costs.port * sum(ports.values())
    )
    cost_raw = cost_reported + costs.regen * sum(bookkeeping.values())
    return Design(
        tails=tails,
        regens_raw=raw,
        regens_reported=reported,
        ports=ports,
        total_cost_raw=cost_raw,
        total_cost_reported=cost_reported,
        solve_status=status,
    )


def design_optimal(
    topology: Topology,
    demands: DemandMatrix,
    costs: CostModel,
    time_limit: float | None = None,
    scenarios: Sequence[FailureScenario] | None = None,
) -> tuple[Design, dict[FailureScenario, OperationPlan]]:
    """Jointly optimal placement over all scenarios, with one plan each.

    The returned plans are the cheapest per-scenario operations of the
    placement (fewest link units, then regens), and the placement itself is
    re-tightened to exactly what those plans use, so zero-cost resources
    never carry arbitrary slack.

    Raises:
        InfeasibleDesignError: some scenario cannot be served at all (the
            exception names one such scenario when it can be isolated).
        NoIncumbentError: time limit expired before any placement was found.
    """
    scens = _scenario_list(topology, scenarios)
    dm = build_design_model(topology, demands, scens, costs)
    result = solve(dm.model, time_limit)
    if result.status == "infeasible":
        bad = _diagnose_infeasible(topology, demands, costs, scens)
        hint = bad.label() if bad else "joint model"
        raise InfeasibleDesignError(f"no placement can serve {hint}", bad)
    _check_solve(result, "joint model")
    rough = extract_design(dm, result)
    plans = {scen: operate(topology, demands, rough, scen) for scen in scens}
    design = _design_from_plans(topology, costs, plans, result.status)
    return design, plans


def design_simple(
    topology: Topology,
    demands: DemandMatrix,
    costs: CostModel,
    per_scenario_time_limit: float | None = None,
    scenarios: Sequence[FailureScenario] | None = None,
) -> Design:
    """Independent per-scenario optima, aggregated by elementwise maximum.

    Each scenario is solved on its own (the solves are independent and could
    run concurrently); the final placement takes the maximum of every count
    across scenarios, which over-buys exactly where scenarios disagree.
    """
    scens = _scenario_list(topology, scenarios)
    tails: dict[str, int] = {r.id: 0 for r in topology.routers}
    reported: dict[str, int] = {n: 0 for n in topology.all_nodes}
    ports: dict[str, int] = {r.id: 0 for r in topology.routers}
    bookkeeping: dict[str, int] = {n: 0 for n in topology.all_nodes}
    statuses: list[str] = []
    for scen in scens:
        dm = build_design_model(topology, demands, [scen], costs)
        result = solve(dm.model, per_scenario_time_limit)
        if result.status == "infeasible":
            raise InfeasibleDesignError(
                f"no placement can serve {scen.label()}", scen
            )
        _check_solve(result, scen.label())
        part = extract_design(dm, result)
        statuses.append(result.status)
        for rid, v in part.tails.items():
            tails[rid] = max(tails[rid], v)
        for n, v in part.regens_reported.items():
            reported[n] = max(reported[n], v)
        for rid, v in part.ports.items():
            ports[rid] = max(ports[rid], v)
        for n, v in source_side_usage(dm, result.values).items():
            bookkeeping[n] = max(bookkeeping[n], v)
    raw = {n: reported[n] + bookkeeping[n] for n in topology.all_nodes}
    cost_reported = (
        costs.tail * sum(tails.values())
        + costs.regen * sum(reported.values())
        + costs.port * sum(ports.values())
    )
    return Design(
        tails=tails,
        regens_raw=raw,
        regens_reported=reported,
        ports=ports,
        total_cost_raw=cost_reported + costs.regen * sum(bookkeeping.values()),
        total_cost_reported=cost_reported,
        solve_status="optimal" if all(s == "optimal" for s in statuses) else "feasible",
    )


def design_greedy(
    topology: Topology,
    demands: DemandMatrix,
    costs: CostModel,
    per_scenario_time_limit: float | None = None,
    scenarios: Sequence[FailureScenario] | None = None,
) -> Design:
    """Scenario-by-scenario accumulation: each solve reuses everything bought
    so far for free and buys only the shortfall."""
    scens = _scenario_list(topology, scenarios)
    tails: dict[str, int] = defaultdict(int)
    regens: dict[str, int] = defaultdict(int)
    ports: dict[str, int] = defaultdict(int)
    bookkeeping: dict[str, int] = {n: 0 for n in topology.all_nodes}
    statuses: list[str] = []
    for scen in scens:
        prior = PriorPlacement(tails=dict(tails), regens=dict(regens), ports=dict(ports))
        dm = build_design_model(topology, demands, [scen], costs, prior)
        result = solve(dm.model, per_scenario_time_limit)
        if result.status == "infeasible":
            raise InfeasibleDesignError(
                f"no placement can serve {scen.label()}", scen
            )
        _check_solve(result, scen.label())
        bought = extract_design(dm, result)
        statuses.append(result.status)
        for rid, v in bought.tails.items():
            tails[rid] += v
        for n, v in bought.regens_reported.items():
            regens[n] += v
        for rid, v in bought.ports.items():
            ports[rid] += v
        for n, v in source_side_usage(dm, result.values).items():
            bookkeeping[n] = max(bookkeeping[n], v)
    tails_out = {r.id: tails.get(r.id, 0) for r in topology.routers}
    reported = {n: regens.get(n, 0) for n in topology.all_nodes}
    ports_out = {r.id: ports.get(r.id, 0) for r in topology.routers}
    raw = {n: reported[n] + bookkeeping[n] for n in topology.all_nodes}
    cost_reported = (
        costs.tail * sum(tails_out.values())
        + costs.regen * sum(reported.values())
        + costs.port * sum(ports_out.values())
    )
    return Design(
        tails=tails_out,
        regens_raw=raw,
        regens_reported=reported,
        ports=ports_out,
        total_cost_raw=cost_reported + costs.regen * sum(bookkeeping.values()),
        total_cost_reported=cost_reported,
        solve_status="optimal" if all(s == "optimal" for s in statuses) else "feasible",
    )


@dataclass(frozen=True)
class LegacyLink:
    """A bought link whose lightpath and regens are permanently attached.

    ``path`` / ``regens`` / ``spans`` are empty for intra-node (port) links.
    """

    a: str
    b: str
    units: int
    path: tuple[str, ...]
    regens: tuple[str, ...]
    spans: tuple[SpanKey, ...]

    @property
    def intra(self) -> bool:
        return not self.path


def _farthest_reach_regens(
    topology: Topology, walk: Sequence[str]
) -> tuple[str, ...] | None:
    """Regen sites along a fixed walk, each placed as late as reach allows.

    Returns None when a single span already exceeds reach.
    """
    limit = topology.regen_dist + _REACH_EPS
    pos = [0.0]
    for u, v in zip(walk, walk[1:]):
        span = topology.span_by_key[(u, v) if u <= v else (v, u)]
        pos.append(pos[-1] + span.miles)
    regens: list[str] = []
    anchor = 0.0
    for i in range(1, len(walk)):
        if pos[i] - anchor > limit:
            if pos[i - 1] <= anchor + _REACH_EPS:
                return None  # one span alone is too long
            regens.append(walk[i - 1])
            anchor = pos[i - 1]
            if pos[i] - anchor > limit:
                return None
    return tuple(regens)


def design_legacy(
    topology: Topology,
    demands: DemandMatrix,
    costs: CostModel,
    per_scenario_time_limit: float | None = None,
    scenarios: Sequence[FailureScenario] | None = None,
) -> tuple[Design, tuple[LegacyLink, ...]]:
    """Baseline without reconfigurable optics.

    Scenario by scenario, links are bought on the shortest surviving fiber
    route with regens attached by farthest reach; a bought link survives a
    later failure only if its endpoints are alive and its recorded route
    avoids the cut.  Each step solves a small model choosing the cheapest
    set of new links that, together with the surviving ones, routes all
    demands.  Equipment of a down link is stranded, never repurposed.
    """
    scens = _scenario_list(topology, scenarios)
    owned: list[LegacyLink] = []
    statuses: list[str] = []
    for scen in scens:
        dead = dead_routers(topology, scen)
        alive = [r for r in topology.routers if r.id not in dead]
        cut = scen.target if scen.kind == "span" else None

        surviving: dict[tuple[str, str], int] = defaultdict(int)
        for link in owned:
            if link.a in dead or link.b in dead:
                continue
            if cut is not None and cut in link.spans:
                continue
            surviving[(link.a, link.b)] += link.units

        candidates: dict[tuple[str, str], tuple[float, LegacyLink]] = {}
        for i, a in enumerate(alive):
            for b in alive[i + 1:]:
                key = (a.id, b.id) if a.id < b.id else (b.id, a.id)
                if a.node == b.node:
                    proto = LegacyLink(key[0], key[1], 1, (), (), ())
                    candidates[key] = (2.0 * costs.port, proto)
                    continue
                walk = shortest_path(topology, scen, a.node, b.node)
                if walk is None:
                    continue
                regens = _farthest_reach_regens(topology, walk)
                if regens is None:
                    continue
                spans = tuple(
                    topology.span_by_key[(u, v) if u <= v else (v, u)].key
                    for u, v in zip(walk, walk[1:])
                )
                proto = LegacyLink(key[0], key[1], 1, tuple(walk), regens, spans)
                price = 2.0 * costs.tail + costs.regen * len(regens)
                candidates[key] = (price, proto)

        m = LinearModel(f"legacy_{scen.label()}")
        buy_vars: dict[tuple[str, str], str] = {}
        for key in sorted(candidates):
            buy_vars[key] = m.add_variable(f"buy_{key[0]}_{key[1]}", integer=True)
        pairs = sorted(set(surviving) | set(candidates))
        arc_load: dict[tuple[str, str], dict[str, float]] = defaultdict(dict)
        for s, t, volume in demands.pairs:
            fvars: dict[tuple[str, str], str] = {}
            for u, v in pairs:
                for arc in ((u, v), (v, u)):
                    fvars[arc] = m.add_variable(f"y_{s}_{t}_{arc[0]}_{arc[1]}")
            by_in: dict[str, list[str]] = defaultdict(list)
            by_out: dict[str, list[str]] = defaultdict(list)
            for (u, v), name in fvars.items():
                by_out[u].append(name)
                by_in[v].append(name)
                arc_load[(u, v)][name] = 1.0
            for r in alive:
                if r.node in (s, t):
                    continue
                coeffs: dict[str, float] = {}
                for name in by_in.get(r.id, []):
                    coeffs[name] = coeffs.get(name, 0.0) + 1.0
                for name in by_out.get(r.id, []):
                    coeffs[name] = coeffs.get(name, 0.0) - 1.0
                if coeffs:
                    m.add_constraint(coeffs, "==", 0.0)
            for node, sign in ((s, 1.0), (t, -1.0)):
                stationed = [r for r in alive if r.node == node]
                coeffs = {}
                for r in stationed:
                    for name in by_out.get(r.id, []):
                        coeffs[name] = coeffs.get(name, 0.0) + sign
                    for name in by_in.get(r.id, []):
                        coeffs[name] = coeffs.get(name, 0.0) - sign
                if not coeffs:
                    raise InfeasibleDesignError(
                        f"no placement can serve {scen.label()}", scen
                    )
                m.add_constraint(coeffs, "==", volume)
        for u, v in pairs:
            base = float(surviving.get((u, v), 0))
            for arc in ((u, v), (v, u)):
                loads = arc_load.get(arc)
                if not loads:
                    continue
                coeffs = dict(loads)
                key = (u, v)
                if key in buy_vars:
                    coeffs[buy_vars[key]] = coeffs.get(buy_vars[key], 0.0) - 1.0
                m.add_constraint(coeffs, "<=", base)
        m.set_objective(
            {name: candidates[key][0] for key, name in buy_vars.items()}
        )
        result = solve(m, per_scenario_time_limit)
        if result.status == "infeasible":
            raise InfeasibleDesignError(
                f"no placement can serve {scen.label()}", scen
            )
        _check_solve(result, scen.label())
        statuses.append(result.status)
        for key, name in buy_vars.items():
            units = int(round(result.values.get(name, 0.0)))
            if units > 0:
                proto = candidates[key][1]
                owned.append(
                    LegacyLink(proto.a, proto.b, units, proto.path,
                               proto.regens, proto.spans)
                )

    tails = {r.id: 0 for r in topology.routers}
    regens = {n: 0 for n in topology.all_nodes}
    ports = {r.id: 0 for r in topology.routers}
    for link in owned:
        if link.intra:
            ports[link.a] += link.units
            ports[link.b] += link.units
        else:
            tails[link.a] += link.units
            tails[link.b] += link.units
            for node in link.regens:
                regens[node] += link.units
    cost = (
        costs.tail * sum(tails.values())
        + costs.regen * sum(regens.values())
        + costs.port * sum(ports.values())
    )
    design = Design(
        tails=tails,
        regens_raw=dict(regens),
        regens_reported=dict(regens),
        ports=ports,
        total_cost_raw=cost,
        total_cost_reported=cost,
        solve_status="optimal" if all(s == "optimal" for s in statuses) else "feasible",
    )
    return design, tuple(owned)
