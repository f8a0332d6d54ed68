# ties are broken by ascending concept id after the primary key

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from typing import Literal

import networkx as nx

from fca_taxonomy.bitset import is_subset
from fca_taxonomy.lattice import Concept, ConceptLattice
from fca_taxonomy.stability import StabilityReport

type CriterionKind = Literal["iceberg", "top_k_extent", "top_k_stability", "stability_threshold"]


class MismatchedLatticeError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Criterion:
    kind: CriterionKind
    value: float
    exclude_extremes: bool | None = None

    def describe(self) -> str:
        text = f"{self.kind}({self.value:g})"
        if self.exclude_extremes:
            text += " excluding extremes"
        return text


@dataclass(frozen=True, slots=True)
class SelectionResult:
    selected_ids: tuple[int, ...]
    criterion: Criterion
    induced_edges: tuple[tuple[int, int], ...]
    lattice_fingerprint: str

    def __len__(self) -> int:
        return len(self.selected_ids)


@dataclass(frozen=True, slots=True)
class SelectionOverlap:
    jaccard: float
    common: frozenset[int]
    only_first: frozenset[int]
    only_second: frozenset[int]


def iceberg_filter(lat: ConceptLattice, min_extent: int) -> SelectionResult:
    """Order filter of all concepts with at least ``min_extent`` objects."""
    if min_extent < 0:
        raise ValueError(f"min_extent must be non-negative, got {min_extent}")
    ids = [concept.id for concept in lat.concepts if concept.extent_size >= min_extent]
    return _result(lat, ids, Criterion(kind="iceberg", value=min_extent))


def top_k_extent(lat: ConceptLattice, k: int) -> SelectionResult:
    _check_k(k)
    ranked = sorted(lat.concepts, key=lambda concept: (-concept.extent_size, concept.id))
    ids = [concept.id for concept in ranked[:k]]
    return _result(lat, ids, Criterion(kind="top_k_extent", value=k))


def top_k_stability(
    lat: ConceptLattice,
    report: StabilityReport,
    k: int,
    exclude_extremes: bool = False,
) -> SelectionResult:
    """The ``k`` most stable concepts.

    ``exclude_extremes`` drops the trivial concepts, those with an empty
    extent or an empty intent; an empty-extent bottom always has sigma 1.
    """
    _check_k(k)
    _check_report(lat, report)
    candidates: Iterable[Concept] = lat.concepts
    if exclude_extremes:
        candidates = [concept for concept in lat.concepts if not _is_trivial(concept)]
    ranked = sorted(candidates, key=lambda concept: (-report.sigma(concept.id), concept.id))
    ids = [concept.id for concept in ranked[:k]]
    return _result(
        lat,
        ids,
        Criterion(kind="top_k_stability", value=k, exclude_extremes=exclude_extremes),
    )


def stability_threshold_filter(
    lat: ConceptLattice, report: StabilityReport, theta: float
) -> SelectionResult:
    """All concepts whose stability strictly exceeds ``theta``."""
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    _check_report(lat, report)
    ids = [concept.id for concept in lat.concepts if report.sigma(concept.id) > theta]
    return _result(lat, ids, Criterion(kind="stability_threshold", value=theta))


def selection_overlap(a: SelectionResult, b: SelectionResult) -> SelectionOverlap:
    if a.lattice_fingerprint != b.lattice_fingerprint:
        raise MismatchedLatticeError("Selections were taken from different lattices.")
    first = frozenset(a.selected_ids)
    second = frozenset(b.selected_ids)
    union = first | second
    common = first & second
    jaccard = len(common) / len(union) if union else 1.0
    return SelectionOverlap(
        jaccard=jaccard,
        common=common,
        only_first=first - second,
        only_second=second - first,
    )


def is_order_filter(lat: ConceptLattice, ids: Iterable[int]) -> bool:
    selected = set(ids)
    return all(upper in selected for node in selected for upper in lat.upper_neighbors[node])


def induced_cover_edges(lat: ConceptLattice, ids: Iterable[int]) -> tuple[tuple[int, int], ...]:
    """Covering relation of the lattice order restricted to ``ids``."""
    selected = sorted(set(ids))
    if is_order_filter(lat, selected):
        # every lattice chain between two members of a filter stays inside it
        members = set(selected)
        return tuple(
            (lower, upper)
            for lower in selected
            for upper in lat.upper_neighbors[lower]
            if upper in members
        )
    order = nx.DiGraph()
    order.add_nodes_from(selected)
    for lower in selected:
        lower_extent = lat.concepts[lower].extent
        for upper in selected:
            upper_extent = lat.concepts[upper].extent
            if lower != upper and is_subset(lower_extent, upper_extent):
                order.add_edge(lower, upper)
    reduced = nx.transitive_reduction(order)
    return tuple(sorted(reduced.edges()))


def _result(lat: ConceptLattice, ids: list[int], criterion: Criterion) -> SelectionResult:
    return SelectionResult(
        selected_ids=tuple(ids),
        criterion=criterion,
        induced_edges=induced_cover_edges(lat, ids),
        lattice_fingerprint=lat.fingerprint,
    )


def _is_trivial(concept: Concept) -> bool:
    return concept.extent == 0 or concept.intent == 0


def _check_k(k: int) -> None:
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")


def _check_report(lat: ConceptLattice, report: StabilityReport) -> None:
    missing = [concept.id for concept in lat.concepts if concept.id not in report.per_concept]
    if missing:
        raise MismatchedLatticeError(
            f"Stability report does not cover {len(missing)} concepts of the lattice."
        )
