from __future__ import annotations

import json
import subprocess
import sys

import pytest

from roadmnet.cli import main
from roadmnet.io import (
    InputFormatError,
    load_design,
    load_inputs,
    parse_scenario_label,
    plan_links,
    save_design,
)
from roadmnet.topology import FailureScenario, TopologyError

from conftest import fixture_path

NF = FailureScenario.no_failure()


# ---------------------------------------------------------------------------
# Network input files
# ---------------------------------------------------------------------------


def test_load_toy_fixture():
    topology, demands, costs = load_inputs(fixture_path("toy2x5"))
    assert topology.ip_nodes == ("N1", "N2")
    assert len(topology.spans) == 8
    assert topology.regen_dist == 1000.0
    assert demands.pairs == (("N1", "N2", 0.8),)
    assert (costs.tail, costs.regen, costs.port) == (1.0, 1.0, 0.0)


def test_costs_default_when_missing(tmp_path):
    doc = json.loads(open(fixture_path("toy2x5")).read())
    del doc["costs"]
    path = tmp_path / "nocosts.json"
    path.write_text(json.dumps(doc))
    _, _, costs = load_inputs(str(path))
    assert (costs.tail, costs.regen, costs.port) == (1.0, 1.0, 0.0)


@pytest.mark.parametrize(
    "mutate,needle",
    [
        (lambda d: d.pop("spans"), "spans"),
        (lambda d: d["routers"][0].pop("home"), "routers[0]"),
        (lambda d: d["spans"][2].__setitem__("miles", "far"), "spans[2].miles"),
        (lambda d: d["demands"][0].__setitem__("units", None), "demands[0].units"),
        (lambda d: d.__setitem__("ip_nodes", "N1"), "ip_nodes"),
    ],
)
def test_structural_errors_name_the_field(tmp_path, mutate, needle):
    doc = json.loads(open(fixture_path("toy2x5")).read())
    mutate(doc)
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(InputFormatError, match=needle.replace("[", r"\[")):
        load_inputs(str(path))


def test_invalid_json_reported(tmp_path):
    path = tmp_path / "garbage.json"
    path.write_text("{not json")
    with pytest.raises(InputFormatError, match="valid JSON"):
        load_inputs(str(path))


def test_semantic_errors_come_from_topology(tmp_path):
    doc = json.loads(open(fixture_path("toy2x5")).read())
    doc["demands"][0]["src"] = "O1"  # an optical node cannot offer traffic
    path = tmp_path / "semantic.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(TopologyError):
        load_inputs(str(path))


# ---------------------------------------------------------------------------
# Design documents
# ---------------------------------------------------------------------------


def test_design_document_round_trip(tmp_path, toy_inputs, toy_optimal):
    topology, _, costs = toy_inputs
    design, plans = toy_optimal
    links = {s.label(): plan_links(p) for s, p in plans.items()}
    path = tmp_path / "design.json"
    save_design(str(path), design, costs, algorithm="optimal", links=links)

    doc = load_design(str(path))
    assert doc.algorithm == "optimal"
    assert doc.design == design
    assert set(doc.links) == set(links)
    assert doc.links["no-failure"] == links["no-failure"]

    again = tmp_path / "again.json"
    save_design(str(again), doc.design, doc.costs, algorithm=doc.algorithm,
                links=doc.links)
    assert path.read_bytes() == again.read_bytes()


def test_document_rebuilds_base_plan(tmp_path, toy_inputs, toy_optimal):
    topology, _, costs = toy_inputs
    design, plans = toy_optimal
    links = {NF.label(): plan_links(plans[NF])}
    path = tmp_path / "design.json"
    save_design(str(path), design, costs, algorithm="optimal", links=links)
    rebuilt = load_design(str(path)).plan(topology)
    original = plans[NF]
    assert rebuilt.link_caps == original.link_caps
    assert rebuilt.regen_chains == original.regen_chains
    assert rebuilt.span_paths == original.span_paths
    assert rebuilt.flows == {}


def test_document_for_other_network_rejected(tmp_path, toy_inputs, toy_optimal):
    _, _, costs = toy_inputs
    design, plans = toy_optimal
    links = {NF.label(): plan_links(plans[NF])}
    path = tmp_path / "design.json"
    save_design(str(path), design, costs, algorithm="optimal", links=links)
    grid_topology, _, _ = load_inputs(fixture_path("grid3x3_600"))
    with pytest.raises(InputFormatError, match="different network"):
        load_design(str(path)).plan(grid_topology)


def test_unsupported_format_flag(tmp_path):
    path = tmp_path / "odd.json"
    path.write_text(json.dumps({"format": "something-else/9"}))
    with pytest.raises(InputFormatError, match="unsupported format"):
        load_design(str(path))


def test_parse_scenario_labels(toy_inputs):
    topology, _, _ = toy_inputs
    for scen in (NF, FailureScenario.span_cut("O1", "O2"),
                 FailureScenario.router_down("R3")):
        assert parse_scenario_label(topology, scen.label()) == scen
    with pytest.raises(InputFormatError):
        parse_scenario_label(topology, "span:O1")
    with pytest.raises(InputFormatError):
        parse_scenario_label(topology, "router:nope")
    with pytest.raises(InputFormatError):
        parse_scenario_label(topology, "meteor:N1")


# ---------------------------------------------------------------------------
# Command line
# ---------------------------------------------------------------------------


def test_cli_design_and_transient(tmp_path, capsys):
    design_path = tmp_path / "opt.json"
    assert main(["design", fixture_path("toy2x5"), "--out", str(design_path)]) == 0
    out = capsys.readouterr().out
    assert "4 tails, 2 regens" in out
    assert design_path.exists()

    csv_path = tmp_path / "tr.csv"
    code = main([
        "transient", fixture_path("toy2x5"),
        "--design", str(design_path), "--out", str(csv_path),
    ])
    assert code == 0
    lines = csv_path.read_text().splitlines()
    assert lines[0] == "scenario_kind,scenario_id,offered,delivered,fraction"
    assert len(lines) == 1 + 13
    fractions = [float(line.split(",")[4]) for line in lines[1:]]
    assert fractions.count(0.0) == 6  # four cut spans + two router losses
    assert fractions.count(1.0) == 7


def test_cli_transient_stdout_when_no_out(tmp_path, capsys):
    design_path = tmp_path / "opt.json"
    main(["design", fixture_path("toy2x5"), "--out", str(design_path)])
    capsys.readouterr()
    assert main([
        "transient", fixture_path("toy2x5"), "--design", str(design_path),
    ]) == 0
    out = capsys.readouterr().out
    assert out.startswith("scenario_kind,")


def test_cli_legacy_transient_rides_out_failures(tmp_path):
    design_path = tmp_path / "legacy.json"
    assert main([
        "design", fixture_path("toy2x5"), "--algorithm", "legacy",
        "--out", str(design_path),
    ]) == 0
    csv_path = tmp_path / "tr.csv"
    main([
        "transient", fixture_path("toy2x5"),
        "--design", str(design_path), "--out", str(csv_path),
    ])
    rows = csv_path.read_text().splitlines()[1:]
    assert all(row.endswith(",1.000000") for row in rows)


def test_cli_design_rewrites_identically(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["design", fixture_path("toy2x5"), "--out", str(a)])
    main(["design", fixture_path("toy2x5"), "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_cli_compare(tmp_path, capsys):
    csv_path = tmp_path / "cmp.csv"
    assert main([
        "compare", fixture_path("toy2x5"), "--csv", str(csv_path),
    ]) == 0
    out = capsys.readouterr().out
    assert "optimal" in out and "legacy" in out
    header = csv_path.read_text().splitlines()[0]
    assert header == "algorithm,cost,tails,regens,ports,seconds"
    rows = csv_path.read_text().splitlines()[1:]
    assert [r.split(",")[0] for r in rows] == [
        "optimal", "simple", "greedy", "legacy",
    ]


class TestExitCodes:
    def test_missing_input(self, capsys):
        assert main(["design", "/no/such/file.json"]) == 2
        assert "error:" in capsys.readouterr().err

    def test_garbage_input(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("]")
        assert main(["design", str(bad)]) == 2

    def test_missing_design_document(self, capsys):
        assert main([
            "transient", fixture_path("toy2x5"), "--design", "/no/doc.json",
        ]) == 2

    def test_unparsable_arguments(self, capsys):
        assert main([]) == 2
        assert main(["design"]) == 2
        assert main(["design", "x.json", "--algorithm", "psychic"]) == 2

    def test_infeasible_network(self, tmp_path, capsys):
        doc = json.loads(open(fixture_path("toy2x5")).read())
        doc["routers"] = [r for r in doc["routers"] if r["id"] != "R2"]
        path = tmp_path / "fragile.json"
        path.write_text(json.dumps(doc))
        assert main(["design", str(path)]) == 3
        assert "infeasible" in capsys.readouterr().err

    def test_budget_too_small_for_any_answer(self, capsys):
        assert main([
            "design", fixture_path("toy2x5"), "--time-limit", "0.0",
        ]) == 4
        assert "budget" in capsys.readouterr().err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "roadmnet", "--help"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "design" in proc.stdout
