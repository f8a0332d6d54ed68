from __future__ import annotations

import dataclasses
import json
from pathlib import Path

import pytest

from fca_taxonomy.context import FormalContext
from fca_taxonomy.lattice import Concept
from fca_taxonomy.main import EXIT_CAPACITY, EXIT_EMPTY, EXIT_INCONSISTENT, EXIT_OK, EXIT_USAGE, main
from fca_taxonomy.stability import ConceptStability, stability_bruteforce


def test_build_context_from_toy_log(fixtures_dir: Path, tmp_path: Path, capsys) -> None:
    out = tmp_path / "toy.cxt"
    code = main(
        [
            "build-context",
            str(fixtures_dir / "toy_external.csv"),
            "--config",
            str(fixtures_dir / "toy_ingest.json"),
            "-o",
            str(out),
        ]
    )
    assert code == EXIT_OK
    assert out.read_bytes() == (fixtures_dir / "toy.cxt").read_bytes()
    assert "3 objects x 3 attributes, 5 pairs" in capsys.readouterr().out

    manifest = json.loads((tmp_path / "toy.cxt.manifest.json").read_text(encoding="utf-8"))
    assert manifest["command"] == "build-context"
    assert manifest["outputs"] == [str(out)]
    assert set(manifest["stage_seconds"]) == {"ingest", "build", "write"}


def test_build_context_internal_kind(fixtures_dir: Path, tmp_path: Path) -> None:
    out = tmp_path / "pages.cxt"
    code = main(
        [
            "build-context",
            str(fixtures_dir / "toy_internal.csv"),
            "--kind",
            "internal",
            "--config",
            str(fixtures_dir / "internal_ingest.json"),
            "-o",
            str(out),
        ]
    )
    assert code == EXIT_OK
    assert "personal-page" in out.read_text(encoding="utf-8")


def test_missing_input_file(tmp_path: Path, capsys) -> None:
    missing = tmp_path / "nope.csv"
    code = main(["build-context", str(missing), "-o", str(tmp_path / "x.cxt")])
    assert code == EXIT_USAGE
    assert str(missing) in capsys.readouterr().err


def test_empty_surviving_context(fixtures_dir: Path, tmp_path: Path, capsys) -> None:
    config = tmp_path / "strict.json"
    config.write_text('{"min_sessions": 1000}', encoding="utf-8")
    code = main(
        ["build-context", str(fixtures_dir / "toy_external.csv"), "--config", str(config), "-o", str(tmp_path / "x.cxt")]
    )
    assert code == EXIT_EMPTY
    assert "empty context" in capsys.readouterr().err
    assert not (tmp_path / "x.cxt").exists()


def test_lattice_command(fixtures_dir: Path, tmp_path: Path, capsys) -> None:
    out = tmp_path / "lattice.json"
    assert main(["lattice", str(fixtures_dir / "toy.cxt"), "-o", str(out)]) == EXIT_OK
    assert out.read_text(encoding="utf-8") == (fixtures_dir / "toy_lattice.json").read_text(encoding="utf-8")
    assert "4 concepts, 4 edges" in capsys.readouterr().out

    manifest = json.loads((tmp_path / "lattice.json.manifest.json").read_text(encoding="utf-8"))
    assert manifest["concept_count"] == 4


def test_lattice_command_on_one_by_one_context(tmp_path: Path, capsys) -> None:
    cxt = tmp_path / "one.cxt"
    cxt.write_text("B\n\n1\n1\n\ng\nm\nX\n", encoding="utf-8")
    assert main(["lattice", str(cxt), "-o", str(tmp_path / "one.json")]) == EXIT_OK
    assert "1 concepts, 0 edges" in capsys.readouterr().out


def test_corrupted_cxt(tmp_path: Path) -> None:
    cxt = tmp_path / "bad.cxt"
    cxt.write_text("B\n\n1\n2\n\ng\nm1\nm2\nX\n", encoding="utf-8")
    assert main(["lattice", str(cxt), "-o", str(tmp_path / "bad.json")]) == EXIT_USAGE


def test_non_utf8_cxt(tmp_path: Path, capsys) -> None:
    cxt = tmp_path / "latin1.cxt"
    cxt.write_bytes("B\n\n1\n1\n\ncafé\nm\nX\n".encode("latin-1"))
    assert main(["lattice", str(cxt), "-o", str(tmp_path / "bad.json")]) == EXIT_USAGE
    assert "UTF-8" in capsys.readouterr().err


def test_build_context_skips_undecodable_rows(fixtures_dir: Path, tmp_path: Path) -> None:
    log = tmp_path / "mixed.csv"
    log.write_bytes((fixtures_dir / "toy_external.csv").read_bytes() + b"g9,\xe9.ru,1199145600,1200355200,30\n")
    out = tmp_path / "mixed.cxt"
    code = main(["build-context", str(log), "--config", str(fixtures_dir / "toy_ingest.json"), "-o", str(out)])
    assert code == EXIT_OK
    assert out.read_bytes() == (fixtures_dir / "toy.cxt").read_bytes()


def test_capacity_exceeded(fixtures_dir: Path, tmp_path: Path) -> None:
    args = ["--max-concepts", "2", "stability", str(fixtures_dir / "toy.cxt"), "-o", str(tmp_path / "s.json")]
    assert main(args) == EXIT_CAPACITY


def test_stability_command(fixtures_dir: Path, tmp_path: Path) -> None:
    out = tmp_path / "stability.json"
    assert main(["stability", str(fixtures_dir / "toy.cxt"), "-o", str(out)]) == EXIT_OK
    assert out.read_text(encoding="utf-8") == (fixtures_dir / "toy_stability.json").read_text(encoding="utf-8")


def test_stability_command_on_empty_relation(tmp_path: Path) -> None:
    cxt = tmp_path / "empty.cxt"
    cxt.write_text("B\n\n2\n2\n\ng1\ng2\nm1\nm2\n..\n..\n", encoding="utf-8")
    out = tmp_path / "empty.json"
    assert main(["stability", str(cxt), "-o", str(out)]) == EXIT_OK
    entries = json.loads(out.read_text(encoding="utf-8"))
    assert [entry["generator_count"] for entry in entries] == ["1", "3"]
    assert [entry["sigma"] for entry in entries] == [1.0, 0.75]


def test_broken_counting_identity(fixtures_dir: Path, tmp_path: Path, monkeypatch) -> None:
    monkeypatch.setattr("fca_taxonomy.main.verify_counting_identity", lambda report, ctx: False)
    args = ["stability", str(fixtures_dir / "toy.cxt"), "-o", str(tmp_path / "s.json")]
    assert main(args) == EXIT_INCONSISTENT
    assert not (tmp_path / "s.json").exists()


def test_select_top_stability(fixtures_dir: Path, tmp_path: Path) -> None:
    dot = tmp_path / "taxonomy.dot"
    code = main(["select", str(fixtures_dir / "toy.cxt"), "--top-stability", "2", "--exclude-extremes", "--dot", str(dot)])
    assert code == EXIT_OK
    assert dot.read_text(encoding="utf-8") == (fixtures_dir / "toy_top_stability_2.dot").read_text(encoding="utf-8")

    payload = json.loads((tmp_path / "taxonomy.json").read_text(encoding="utf-8"))
    assert [concept["id"] for concept in payload["concepts"]] == [3, 1]
    manifest = json.loads((tmp_path / "taxonomy.dot.manifest.json").read_text(encoding="utf-8"))
    assert manifest["criterion"] == {"exclude_extremes": True, "kind": "top_k_stability", "value": 2}


def test_select_full_iceberg(fixtures_dir: Path, tmp_path: Path) -> None:
    dot = tmp_path / "all.dot"
    assert main(["select", str(fixtures_dir / "toy.cxt"), "--iceberg", "0", "--dot", str(dot)]) == EXIT_OK
    lines = dot.read_text(encoding="utf-8").splitlines()
    assert sum("[label=" in line for line in lines) == 4
    assert sum(" -> " in line for line in lines) == 4


def test_select_empty_iceberg_warns(fixtures_dir: Path, tmp_path: Path, capsys) -> None:
    dot = tmp_path / "none.dot"
    json_out = tmp_path / "none-selection.json"
    code = main(
        ["select", str(fixtures_dir / "toy.cxt"), "--iceberg", "4", "--dot", str(dot), "--json", str(json_out)]
    )
    assert code == EXIT_OK
    assert "warning" in capsys.readouterr().err
    assert "->" not in dot.read_text(encoding="utf-8")
    assert json.loads(json_out.read_text(encoding="utf-8"))["concepts"] == []


def test_select_rejects_conflicting_criteria(fixtures_dir: Path, tmp_path: Path) -> None:
    args = ["select", str(fixtures_dir / "toy.cxt"), "--iceberg", "1", "--top-extent", "2", "--dot", str(tmp_path / "x.dot")]
    assert main(args) == EXIT_USAGE
    assert main(["select", str(fixtures_dir / "toy.cxt"), "--dot", str(tmp_path / "x.dot")]) == EXIT_USAGE


@pytest.mark.parametrize(
    ("k", "expected"),
    [
        (2, ["top-2 by extent: c3 c1", "top-2 by stability: c0 c3", "jaccard: 0.333333"]),
        (4, ["jaccard: 1.000000", "only by extent: -", "only by stability: -"]),
        (1, ["top-1 by extent: c3", "top-1 by stability: c0", "jaccard: 0.000000", "common: -"]),
    ],
)
def test_compare(fixtures_dir: Path, capsys, k: int, expected: list[str]) -> None:
    assert main(["compare", str(fixtures_dir / "toy.cxt"), "-k", str(k)]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    for line in expected:
        assert line in lines


def test_compare_requires_positive_k(fixtures_dir: Path) -> None:
    assert main(["compare", str(fixtures_dir / "toy.cxt"), "-k", "0"]) == EXIT_USAGE


def test_outputs_are_byte_reproducible(fixtures_dir: Path, tmp_path: Path) -> None:
    first = tmp_path / "a.json"
    second = tmp_path / "b.json"
    assert main(["--threads", "3", "lattice", str(fixtures_dir / "toy.cxt"), "-o", str(first)]) == EXIT_OK
    assert main(["lattice", str(fixtures_dir / "toy.cxt"), "-o", str(second)]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()


def test_stability_verify_against_subset_enumeration(fixtures_dir: Path, tmp_path: Path, monkeypatch) -> None:
    out = tmp_path / "verified.json"
    assert main(["stability", str(fixtures_dir / "toy.cxt"), "-o", str(out), "--verify"]) == EXIT_OK
    manifest = json.loads((tmp_path / "verified.json.manifest.json").read_text(encoding="utf-8"))
    assert "verify" in manifest["stage_seconds"]

    def off_by_one(ctx: FormalContext, concept: Concept, *, cap: int) -> ConceptStability:
        entry = stability_bruteforce(ctx, concept, cap=cap)
        return dataclasses.replace(entry, generator_count=entry.generator_count + 1)

    monkeypatch.setattr("fca_taxonomy.main.stability_bruteforce", off_by_one)
    assert main(["stability", str(fixtures_dir / "toy.cxt"), "-o", str(out), "--verify"]) == EXIT_INCONSISTENT
