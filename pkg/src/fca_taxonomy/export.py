"""JSON and DOT writers; UTF-8, LF endings and sorted keys keep reruns byte-identical."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from pydantic import BaseModel

from fca_taxonomy.lattice import Concept, ConceptLattice
from fca_taxonomy.models import (
    ConceptDocument,
    CriterionDocument,
    LatticeDocument,
    RunManifest,
    SelectionDocument,
    StabilityEntryDocument,
)
from fca_taxonomy.paths import manifest_path_for
from fca_taxonomy.selection import Criterion, SelectionResult
from fca_taxonomy.stability import StabilityReport

JSON_SIGMA_DIGITS = 12
DOT_SIGMA_DIGITS = 4
EMPTY_INTENT_LABEL = "∅"


def concept_document(lat: ConceptLattice, concept: Concept) -> ConceptDocument:
    ctx = lat.context
    return ConceptDocument(
        id=concept.id,
        extent=ctx.object_names_of(concept.extent),
        intent=ctx.attribute_names_of(concept.intent),
    )


def lattice_document(lat: ConceptLattice) -> LatticeDocument:
    return LatticeDocument(
        concepts=[concept_document(lat, concept) for concept in lat.concepts],
        edges=list(lat.edges),
    )


def stability_documents(report: StabilityReport) -> list[StabilityEntryDocument]:
    return [
        StabilityEntryDocument(
            id=concept_id,
            extent_size=entry.extent_size,
            sigma=round_sigma(entry.sigma, JSON_SIGMA_DIGITS),
            generator_count=None if entry.generator_count is None else str(entry.generator_count),
        )
        for concept_id, entry in sorted(report.per_concept.items())
    ]


def criterion_document(criterion: Criterion) -> CriterionDocument:
    value: float | int = criterion.value
    if criterion.kind != "stability_threshold":
        value = int(criterion.value)
    return CriterionDocument(
        kind=criterion.kind,
        value=value,
        exclude_extremes=criterion.exclude_extremes,
    )


def selection_document(lat: ConceptLattice, selection: SelectionResult) -> SelectionDocument:
    return SelectionDocument(
        concepts=[concept_document(lat, lat.concepts[cid]) for cid in selection.selected_ids],
        edges=list(selection.induced_edges),
        criterion=criterion_document(selection.criterion),
    )


def selection_dot(
    lat: ConceptLattice,
    selection: SelectionResult,
    report: StabilityReport,
    *,
    graph_name: str = "selection",
) -> str:
    """Hasse diagram of a selection; edges point from lower to upper concepts."""
    ctx = lat.context
    lines = [
        f"digraph {graph_name} {{",
        "  rankdir=BT;",
        "  node [shape=box];",
    ]
    for cid in selection.selected_ids:
        concept = lat.concepts[cid]
        intent = ", ".join(ctx.attribute_names_of(concept.intent)) or EMPTY_INTENT_LABEL
        sigma = format(report.sigma(cid), f".{DOT_SIGMA_DIGITS}g")
        label = f"{intent} | {concept.extent_size} | σ={sigma}"
        lines.append(f'  c{cid} [label="{_dot_escape(label)}"];')
    for lower, upper in selection.induced_edges:
        lines.append(f"  c{lower} -> c{upper};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def round_sigma(value: float, digits: int) -> float:
    return float(format(value, f".{digits}g"))


def dumps_json(payload: Any) -> str:
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    elif isinstance(payload, list):
        payload = [
            item.model_dump(mode="json") if isinstance(item, BaseModel) else item
            for item in payload
        ]
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")


def write_json(path: Path, payload: Any) -> None:
    write_text(path, dumps_json(payload))


def write_manifest(output: Path, manifest: RunManifest) -> Path:
    target = manifest_path_for(output)
    write_json(target, manifest)
    return target


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')
