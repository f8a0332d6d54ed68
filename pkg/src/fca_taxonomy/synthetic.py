"""Random contexts and sub-contexts for property checks and scale runs."""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from fca_taxonomy.context import FormalContext


def random_context(
    n_objects: int,
    n_attributes: int,
    density: float,
    seed: int,
) -> FormalContext:
    """Bernoulli(``density``) incidence, reproducible from ``seed``."""
    if not 0.0 <= density <= 1.0:
        raise ValueError(f"density must lie in [0, 1], got {density}")
    rng = np.random.default_rng(seed)
    matrix = rng.random((n_objects, n_attributes)) < density
    return FormalContext.from_matrix(
        matrix,
        object_names=[f"g{g + 1}" for g in range(n_objects)],
        attribute_names=[f"m{m + 1}" for m in range(n_attributes)],
    )


def context_minor(
    ctx: FormalContext,
    objects: Sequence[int],
    attributes: Sequence[int],
) -> FormalContext:
    """Sub-context on the given object and attribute positions, in that order."""
    rows = []
    for g in objects:
        row = 0
        for position, m in enumerate(attributes):
            if ctx.incident(g, m):
                row |= 1 << position
        rows.append(row)
    return FormalContext.from_rows(
        [ctx.object_names[g] for g in objects],
        [ctx.attribute_names[m] for m in attributes],
        rows,
    )


def random_minor(ctx: FormalContext, size: int, seed: int) -> FormalContext:
    """A ``size`` x ``size`` minor (or smaller, if the context is smaller)."""
    rng = np.random.default_rng(seed)
    objects = sorted(
        int(g) for g in rng.choice(ctx.n_objects, size=min(size, ctx.n_objects), replace=False)
    )
    attributes = sorted(
        int(m)
        for m in rng.choice(ctx.n_attributes, size=min(size, ctx.n_attributes), replace=False)
    )
    return context_minor(ctx, objects, attributes)
