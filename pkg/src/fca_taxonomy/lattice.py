"""Concept enumeration (Close-by-One) and covering-graph construction."""

from __future__ import annotations

import hashlib
import logging
import threading
from collections import defaultdict
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import Literal

import networkx as nx

from fca_taxonomy.bitset import is_subset, iter_bits, lectic_key
from fca_taxonomy.context import (
    AttributeSet,
    FormalContext,
    ObjectSet,
    common_attributes,
    common_objects,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_CONCEPTS = 10_000_000
BRUTEFORCE_MAX_OBJECTS = 20

type CoverMethod = Literal["intents", "buckets"]


class CapacityError(RuntimeError):
    def __init__(self, limit: int, partial_count: int) -> None:
        super().__init__(
            f"Concept count exceeded the limit of {limit} "
            f"({partial_count} concepts enumerated before stopping)."
        )
        self.limit = limit
        self.partial_count = partial_count


class LatticeInconsistencyError(RuntimeError):
    pass


class UnknownConceptError(KeyError):
    pass


@dataclass(frozen=True, slots=True)
class Concept:
    id: int
    extent: ObjectSet
    intent: AttributeSet

    @property
    def extent_size(self) -> int:
        return self.extent.bit_count()


@dataclass(frozen=True)
class ConceptLattice:
    context: FormalContext
    concepts: tuple[Concept, ...]
    upper_neighbors: tuple[tuple[int, ...], ...]
    top_id: int
    bottom_id: int

    def __len__(self) -> int:
        return len(self.concepts)

    def concept(self, concept_id: int) -> Concept:
        if not 0 <= concept_id < len(self.concepts):
            raise UnknownConceptError(f"Unknown concept id: {concept_id}")
        return self.concepts[concept_id]

    @cached_property
    def lower_neighbors(self) -> tuple[tuple[int, ...], ...]:
        lowers: list[list[int]] = [[] for _ in self.concepts]
        for lower, uppers in enumerate(self.upper_neighbors):
            for upper in uppers:
                lowers[upper].append(lower)
        return tuple(tuple(ids) for ids in lowers)

    @cached_property
    def edges(self) -> tuple[tuple[int, int], ...]:
        """Cover edges as ``(lower_id, upper_id)`` pairs, sorted."""
        return tuple(
            (lower, upper)
            for lower, uppers in enumerate(self.upper_neighbors)
            for upper in uppers
        )

    @cached_property
    def graph(self) -> nx.DiGraph:
        """Covering graph with edges pointing from lower to upper neighbours."""
        graph = nx.DiGraph()
        graph.add_nodes_from(range(len(self.concepts)))
        graph.add_edges_from(self.edges)
        return graph

    @cached_property
    def fingerprint(self) -> str:
        digest = hashlib.sha256()
        for concept in self.concepts:
            digest.update(f"{concept.extent:x}:{concept.intent:x};".encode("ascii"))
        for lower, upper in self.edges:
            digest.update(f"{lower}>{upper};".encode("ascii"))
        return digest.hexdigest()


class _ConceptBudget:
    def __init__(self, limit: int) -> None:
        self._limit = limit
        self._count = 0
        self._lock = threading.Lock()

    def charge(self, amount: int = 1) -> None:
        with self._lock:
            self._count += amount
            if self._count > self._limit:
                raise CapacityError(self._limit, self._count - amount)


def enumerate_concepts(
    ctx: FormalContext,
    *,
    max_concepts: int = DEFAULT_MAX_CONCEPTS,
    threads: int = 1,
) -> list[Concept]:
    """Every concept of ``ctx`` exactly once, in canonical (descending lectic) order.

    Close-by-One over attribute indices. With ``threads > 1`` the subtrees
    below the top concept are explored concurrently; the merged output is
    re-sorted so the result never depends on scheduling.
    """
    budget = _ConceptBudget(max_concepts)
    root_extent = ctx.all_objects
    root_intent = common_attributes(ctx, root_extent)
    budget.charge()
    found: list[tuple[ObjectSet, AttributeSet]] = [(root_extent, root_intent)]
    branches = _children(ctx, root_extent, root_intent, 0)

    if threads > 1 and len(branches) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_explore, ctx, branch, budget) for branch in branches]
            for future in futures:
                found.extend(future.result())
    else:
        for branch in branches:
            found.extend(_explore(ctx, branch, budget))

    logger.debug(
        "enumerate_concepts objects=%s attributes=%s concepts=%s threads=%s",
        ctx.n_objects,
        ctx.n_attributes,
        len(found),
        threads,
    )
    return _canonical(ctx, found)


def enumerate_concepts_bruteforce(ctx: FormalContext) -> list[Concept]:
    """Oracle: close every object subset. Only for contexts with at most 20 objects."""
    if ctx.n_objects > BRUTEFORCE_MAX_OBJECTS:
        raise ValueError(
            f"Brute-force enumeration is limited to {BRUTEFORCE_MAX_OBJECTS} objects, "
            f"got {ctx.n_objects}."
        )
    pairs: dict[AttributeSet, ObjectSet] = {}
    for subset in range(1 << ctx.n_objects):
        intent = common_attributes(ctx, subset)
        if intent not in pairs:
            pairs[intent] = common_objects(ctx, intent)
    return _canonical(ctx, [(extent, intent) for intent, extent in pairs.items()])


def build_cover_graph(
    ctx: FormalContext,
    concepts: Sequence[Concept],
    *,
    method: CoverMethod = "intents",
) -> ConceptLattice:
    """Covering relation of the complete concept set ``concepts``.

    ``"intents"``: for each m outside B the closure of B + m is a lower
    neighbour of (A, B) exactly when the attributes it adds to B are the ones
    that generate it. ``"buckets"``: concepts are bucketed by extent size and
    larger buckets are scanned in increasing size for minimal containing
    extents. Both yield the same edges.
    """
    for position, concept in enumerate(concepts):
        if concept.id != position:
            raise LatticeInconsistencyError(
                f"Concept ids must be contiguous from 0; position {position} holds id {concept.id}."
            )
    if not concepts:
        raise LatticeInconsistencyError("A concept lattice has at least one concept.")

    if method == "intents":
        upper = _covers_by_intents(ctx, concepts)
    elif method == "buckets":
        upper = _covers_by_buckets(concepts)
    else:
        raise ValueError(f"Unknown cover method: {method!r}")

    has_lower = [False] * len(concepts)
    for uppers in upper:
        for upper_id in uppers:
            has_lower[upper_id] = True
    tops = [concept.id for concept in concepts if not upper[concept.id]]
    bottoms = [concept.id for concept in concepts if not has_lower[concept.id]]
    if len(tops) != 1 or len(bottoms) != 1:
        raise LatticeInconsistencyError(
            f"Expected exactly one top and one bottom, found {len(tops)} and {len(bottoms)}; "
            "the concept list is not the complete lattice of this context."
        )
    return ConceptLattice(
        context=ctx,
        concepts=tuple(concepts),
        upper_neighbors=tuple(tuple(sorted(ids)) for ids in upper),
        top_id=tops[0],
        bottom_id=bottoms[0],
    )


def build_lattice(
    ctx: FormalContext,
    *,
    max_concepts: int = DEFAULT_MAX_CONCEPTS,
    threads: int = 1,
) -> ConceptLattice:
    return build_cover_graph(
        ctx, enumerate_concepts(ctx, max_concepts=max_concepts, threads=threads)
    )


def subconcepts_of(lat: ConceptLattice, concept_id: int) -> set[int]:
    """Ids strictly below ``concept_id``."""
    lat.concept(concept_id)
    return set(nx.ancestors(lat.graph, concept_id))


def superconcepts_of(lat: ConceptLattice, concept_id: int) -> set[int]:
    """Ids strictly above ``concept_id``."""
    lat.concept(concept_id)
    return set(nx.descendants(lat.graph, concept_id))


def _children(
    ctx: FormalContext, extent: ObjectSet, intent: AttributeSet, start: int
) -> list[tuple[ObjectSet, AttributeSet, int]]:
    children: list[tuple[ObjectSet, AttributeSet, int]] = []
    for j in range(start, ctx.n_attributes):
        bit = 1 << j
        if intent & bit:
            continue
        new_extent = extent & ctx.cols[j]
        new_intent = common_attributes(ctx, new_extent)
        # canonical iff no attribute before j was added by the closure
        prefix = bit - 1
        if new_intent & prefix == intent & prefix:
            children.append((new_extent, new_intent, j + 1))
    return children


def _explore(
    ctx: FormalContext,
    branch: tuple[ObjectSet, AttributeSet, int],
    budget: _ConceptBudget,
) -> list[tuple[ObjectSet, AttributeSet]]:
    found: list[tuple[ObjectSet, AttributeSet]] = []
    stack = [branch]
    while stack:
        extent, intent, start = stack.pop()
        budget.charge()
        found.append((extent, intent))
        stack.extend(_children(ctx, extent, intent, start))
    return found


def _canonical(
    ctx: FormalContext, pairs: list[tuple[ObjectSet, AttributeSet]]
) -> list[Concept]:
    width = ctx.n_attributes
    ordered = sorted(pairs, key=lambda pair: lectic_key(pair[1], width), reverse=True)
    return [
        Concept(id=index, extent=extent, intent=intent)
        for index, (extent, intent) in enumerate(ordered)
    ]


def _covers_by_intents(ctx: FormalContext, concepts: Sequence[Concept]) -> list[list[int]]:
    by_intent = {concept.intent: concept.id for concept in concepts}
    upper: list[list[int]] = [[] for _ in concepts]
    for concept in concepts:
        # closed intent of (B + m) -> attributes m that generate it
        generators: dict[AttributeSet, AttributeSet] = defaultdict(int)
        for m in iter_bits(ctx.all_attributes & ~concept.intent):
            closed = common_attributes(ctx, concept.extent & ctx.cols[m])
            generators[closed] |= 1 << m
        for closed, generated_by in generators.items():
            # lower neighbour iff every attribute it adds generates it on its own
            if closed & ~concept.intent != generated_by:
                continue
            try:
                lower_id = by_intent[closed]
            except KeyError as exc:
                raise LatticeInconsistencyError(
                    f"Closed intent {closed:#x} is missing from the concept list."
                ) from exc
            upper[lower_id].append(concept.id)
    return upper


def _covers_by_buckets(concepts: Sequence[Concept]) -> list[list[int]]:
    buckets: dict[int, list[Concept]] = defaultdict(list)
    for concept in concepts:
        buckets[concept.extent_size].append(concept)
    sizes = sorted(buckets)
    upper: list[list[int]] = []
    for concept in concepts:
        size = concept.extent_size
        covers: list[Concept] = []
        for larger in sizes:
            if larger <= size:
                continue
            for candidate in buckets[larger]:
                if not is_subset(concept.extent, candidate.extent):
                    continue
                if any(is_subset(cover.extent, candidate.extent) for cover in covers):
                    continue
                covers.append(candidate)
        upper.append([cover.id for cover in covers])
    return upper
