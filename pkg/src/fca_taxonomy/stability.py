"""Stability index of formal concepts, exact and by subset enumeration."""

from __future__ import annotations

import logging
import math
from collections.abc import Iterator, Mapping
from dataclasses import dataclass
from types import MappingProxyType

from fca_taxonomy.bitset import iter_bits
from fca_taxonomy.context import FormalContext, common_attributes
from fca_taxonomy.lattice import Concept, ConceptLattice

logger = logging.getLogger(__name__)

DEFAULT_EXTENT_CAP = 20
DEFAULT_DOWNSET_CACHE_LIMIT = 500_000
_SMALLEST_SIGMA = math.ulp(0.0)


class ExtentTooLargeError(ValueError):
    def __init__(self, extent_size: int, cap: int) -> None:
        super().__init__(
            f"Extent of size {extent_size} exceeds the brute-force cap of {cap}; "
            "use stability_all instead."
        )
        self.extent_size = extent_size
        self.cap = cap


@dataclass(frozen=True, slots=True)
class ConceptStability:
    sigma: float
    generator_count: int | None
    extent_size: int


@dataclass(frozen=True, slots=True)
class LeaveOneOut:
    survivors: int
    extent_size: int

    @property
    def fraction(self) -> float:
        return self.survivors / self.extent_size if self.extent_size else 1.0


@dataclass(frozen=True)
class StabilityReport:
    per_concept: Mapping[int, ConceptStability]
    exact: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "per_concept", MappingProxyType(dict(self.per_concept)))

    def __len__(self) -> int:
        return len(self.per_concept)

    def __getitem__(self, concept_id: int) -> ConceptStability:
        return self.per_concept[concept_id]

    def __iter__(self) -> Iterator[int]:
        return iter(self.per_concept)

    def sigma(self, concept_id: int) -> float:
        return self.per_concept[concept_id].sigma


def generator_ratio(count: int, extent_size: int) -> float:
    """count / 2^extent_size, clamped to the smallest positive float instead of rounding to 0."""
    ratio = count / (1 << extent_size)
    return _SMALLEST_SIGMA if count and not ratio else ratio


def stability_bruteforce(
    ctx: FormalContext,
    concept: Concept,
    *,
    cap: int = DEFAULT_EXTENT_CAP,
) -> ConceptStability:
    size = concept.extent_size
    if size > cap:
        raise ExtentTooLargeError(size, cap)
    members = list(iter_bits(concept.extent))
    count = 0
    for selector in range(1 << size):
        subset = 0
        for position, g in enumerate(members):
            if selector >> position & 1:
                subset |= 1 << g
        if common_attributes(ctx, subset) == concept.intent:
            count += 1
    return ConceptStability(sigma=generator_ratio(count, size), generator_count=count, extent_size=size)


def stability_all(
    ctx: FormalContext,
    lat: ConceptLattice,
    *,
    exact: bool = True,
    downset_cache_limit: int = DEFAULT_DOWNSET_CACHE_LIMIT,
) -> StabilityReport:
    """Stability of every concept of ``lat`` in one bottom-up pass.

    Concepts are visited by ascending extent size, ties by id, so every proper
    subconcept is finished first. With ``exact`` the generator counts are kept
    as Python integers and sigma is their correctly rounded ratio; otherwise
    only the floating recurrence ``1 - sum sigma(D) * 2^(|D| - |A|)`` runs.
    """
    if lat.context is not ctx and lat.context != ctx:
        raise ValueError("Lattice was built from a different context.")
    order = sorted(lat.concepts, key=lambda concept: (concept.extent_size, concept.id))
    downsets = _DownsetIndex(lat, cache=len(lat) <= downset_cache_limit)
    counts: dict[int, int] = {}
    sigmas: dict[int, float] = {}
    entries: dict[int, ConceptStability] = {}

    for concept in order:
        size = concept.extent_size
        below = downsets.strictly_below(concept.id)
        if exact:
            count = (1 << size) - sum(counts[other] for other in below)
            counts[concept.id] = count
            entries[concept.id] = ConceptStability(
                sigma=generator_ratio(count, size), generator_count=count, extent_size=size
            )
        else:
            sigma = 1.0 - math.fsum(
                math.ldexp(sigmas[other], lat.concepts[other].extent_size - size)
                for other in below
            )
            sigma = max(sigma, _SMALLEST_SIGMA)
            sigmas[concept.id] = sigma
            entries[concept.id] = ConceptStability(
                sigma=sigma, generator_count=None, extent_size=size
            )

    logger.debug(
        "stability_all concepts=%s exact=%s cached_downsets=%s",
        len(entries),
        exact,
        downsets.cached,
    )
    return StabilityReport(per_concept=entries, exact=exact)


def verify_counting_identity(report: StabilityReport, ctx: FormalContext) -> bool:
    """True iff the generator counts of all concepts add up to 2^|G|."""
    if report.exact:
        expected = 1 << ctx.n_objects
        total = 0
        for entry in report.per_concept.values():
            if entry.generator_count is None:
                return False
            total += entry.generator_count
        return total == expected
    approx = math.fsum(
        math.ldexp(entry.sigma, entry.extent_size - ctx.n_objects)
        for entry in report.per_concept.values()
    )
    return math.isclose(approx, 1.0, rel_tol=1e-9)


def leave_one_out_survival(ctx: FormalContext, concept: Concept) -> LeaveOneOut:
    """How many single-object removals g in A still keep (A - {g})' equal to B."""
    survivors = sum(
        1
        for g in iter_bits(concept.extent)
        if common_attributes(ctx, concept.extent & ~(1 << g)) == concept.intent
    )
    return LeaveOneOut(survivors=survivors, extent_size=concept.extent_size)


class _DownsetIndex:
    """Strict downsets over cover edges, cached as id bitmasks or recomputed on demand."""

    def __init__(self, lat: ConceptLattice, *, cache: bool) -> None:
        self._lat = lat
        self.cached = cache
        self._masks: dict[int, int] = {}

    def strictly_below(self, concept_id: int) -> Iterator[int]:
        if self.cached:
            return iter_bits(self._cached_mask(concept_id))
        return iter(self._walk(concept_id))

    def _cached_mask(self, concept_id: int) -> int:
        # lower neighbours have strictly smaller extents, so they are already cached
        mask = 0
        for lower in self._lat.lower_neighbors[concept_id]:
            mask |= self._masks[lower] | (1 << lower)
        self._masks[concept_id] = mask
        return mask

    def _walk(self, concept_id: int) -> set[int]:
        seen: set[int] = set()
        frontier = list(self._lat.lower_neighbors[concept_id])
        while frontier:
            current = frontier.pop()
            if current in seen:
                continue
            seen.add(current)
            frontier.extend(self._lat.lower_neighbors[current])
        return seen
