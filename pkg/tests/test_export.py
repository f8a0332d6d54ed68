import json
from pathlib import Path

from fca_taxonomy.export import (
    dumps_json,
    lattice_document,
    round_sigma,
    selection_document,
    selection_dot,
    stability_documents,
    write_manifest,
)
from fca_taxonomy.lattice import ConceptLattice
from fca_taxonomy.models import RunManifest
from fca_taxonomy.selection import iceberg_filter, stability_threshold_filter, top_k_stability
from fca_taxonomy.stability import StabilityReport


def test_lattice_json_matches_golden(fixtures_dir: Path, toy_lattice: ConceptLattice) -> None:
    expected = (fixtures_dir / "toy_lattice.json").read_text(encoding="utf-8")
    assert dumps_json(lattice_document(toy_lattice)) == expected


def test_stability_json_matches_golden(fixtures_dir: Path, toy_report: StabilityReport) -> None:
    expected = (fixtures_dir / "toy_stability.json").read_text(encoding="utf-8")
    assert dumps_json(stability_documents(toy_report)) == expected


def test_selection_dot_matches_golden(
    fixtures_dir: Path, toy_lattice: ConceptLattice, toy_report: StabilityReport
) -> None:
    selection = top_k_stability(toy_lattice, toy_report, 2, exclude_extremes=True)
    expected = (fixtures_dir / "toy_top_stability_2.dot").read_text(encoding="utf-8")
    assert selection_dot(toy_lattice, selection, toy_report) == expected


def test_empty_selection_dot(toy_lattice: ConceptLattice, toy_report: StabilityReport) -> None:
    dot = selection_dot(toy_lattice, iceberg_filter(toy_lattice, 4), toy_report)
    assert dot == "digraph selection {\n  rankdir=BT;\n  node [shape=box];\n}\n"


def test_bottom_label_and_node_count(toy_lattice: ConceptLattice, toy_report: StabilityReport) -> None:
    dot = selection_dot(toy_lattice, iceberg_filter(toy_lattice, 0), toy_report)
    assert 'c0 [label="m1, m2, m3 | 0 | σ=1"];' in dot
    assert sum(" [label=" in line for line in dot.splitlines()) == 4
    assert sum(" -> " in line for line in dot.splitlines()) == 4


def test_selection_document(toy_lattice: ConceptLattice, toy_report: StabilityReport) -> None:
    payload = json.loads(
        dumps_json(selection_document(toy_lattice, stability_threshold_filter(toy_lattice, toy_report, 0.6)))
    )
    assert [concept["id"] for concept in payload["concepts"]] == [0, 3]
    assert payload["edges"] == [[0, 3]]
    assert payload["criterion"] == {
        "exclude_extremes": None,
        "kind": "stability_threshold",
        "value": 0.6,
    }


def test_round_sigma() -> None:
    assert round_sigma(1 / 3, 12) == 0.333333333333
    assert round_sigma(0.625, 4) == 0.625


def test_manifest_written_next_to_output(tmp_path: Path) -> None:
    output = tmp_path / "lattice.json"
    manifest = RunManifest(
        command="lattice", argv=["lattice"], inputs=[], outputs=[str(output)], config={}, tool_version="0"
    )
    target = write_manifest(output, manifest)
    assert target == tmp_path / "lattice.json.manifest.json"
    assert json.loads(target.read_text(encoding="utf-8"))["command"] == "lattice"
