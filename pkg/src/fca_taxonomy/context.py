from __future__ import annotations

from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Any

from fca_taxonomy.bitset import full_mask, iter_bits, mask_of

type ObjectSet = int
type AttributeSet = int


class ContextFormatError(ValueError):
    pass


class ContextIndexError(IndexError):
    pass


@dataclass(frozen=True, slots=True)
class FormalContext:
    object_names: tuple[str, ...]
    attribute_names: tuple[str, ...]
    rows: tuple[int, ...]
    cols: tuple[int, ...] = field(repr=False)
    all_objects: ObjectSet = field(repr=False)
    all_attributes: AttributeSet = field(repr=False)

    @classmethod
    def from_rows(
        cls,
        object_names: Sequence[str],
        attribute_names: Sequence[str],
        rows: Sequence[int],
    ) -> FormalContext:
        objects = tuple(str(name) for name in object_names)
        attributes = tuple(str(name) for name in attribute_names)
        _ensure_unique(objects, "object")
        _ensure_unique(attributes, "attribute")
        if len(rows) != len(objects):
            raise ContextFormatError(
                f"Incidence has {len(rows)} rows but the context names {len(objects)} objects."
            )
        all_attributes = full_mask(len(attributes))
        cols = [0] * len(attributes)
        for g, row in enumerate(rows):
            if row < 0 or row & ~all_attributes:
                raise ContextFormatError(
                    f"Row of object {objects[g]!r} references attributes beyond {len(attributes)}."
                )
            for m in iter_bits(row):
                cols[m] |= 1 << g
        return cls(
            object_names=objects,
            attribute_names=attributes,
            rows=tuple(rows),
            cols=tuple(cols),
            all_objects=full_mask(len(objects)),
            all_attributes=all_attributes,
        )

    @classmethod
    def from_pairs(
        cls,
        object_names: Sequence[str],
        attribute_names: Sequence[str],
        pairs: Iterable[tuple[str, str]],
    ) -> FormalContext:
        object_index = {name: g for g, name in enumerate(object_names)}
        attribute_index = {name: m for m, name in enumerate(attribute_names)}
        rows = [0] * len(object_names)
        for obj, attr in pairs:
            try:
                rows[object_index[obj]] |= 1 << attribute_index[attr]
            except KeyError as exc:
                raise ContextFormatError(f"Incidence pair names an unknown element: {exc}") from exc
        return cls.from_rows(object_names, attribute_names, rows)

    @classmethod
    def from_matrix(
        cls,
        matrix: Any,
        object_names: Sequence[str] | None = None,
        attribute_names: Sequence[str] | None = None,
    ) -> FormalContext:
        """Build a context from any 2-D boolean array-like (nested lists, numpy arrays)."""
        table = [[bool(cell) for cell in row] for row in matrix]
        n_attributes = len(table[0]) if table else len(attribute_names or ())
        if any(len(row) != n_attributes for row in table):
            raise ContextFormatError("Incidence matrix rows differ in length.")
        objects = (
            list(object_names) if object_names is not None else [f"g{g + 1}" for g in range(len(table))]
        )
        attributes = (
            list(attribute_names)
            if attribute_names is not None
            else [f"m{m + 1}" for m in range(n_attributes)]
        )
        if len(attributes) != n_attributes:
            raise ContextFormatError(
                f"Matrix has {n_attributes} columns but {len(attributes)} attribute names."
            )
        rows = [mask_of(m for m, cell in enumerate(row) if cell) for row in table]
        return cls.from_rows(objects, attributes, rows)

    @property
    def n_objects(self) -> int:
        return len(self.object_names)

    @property
    def n_attributes(self) -> int:
        return len(self.attribute_names)

    @property
    def incidence_count(self) -> int:
        return sum(row.bit_count() for row in self.rows)

    @property
    def density(self) -> float:
        cells = self.n_objects * self.n_attributes
        return self.incidence_count / cells if cells else 0.0

    def incident(self, g: int, m: int) -> bool:
        return bool(self.rows[g] >> m & 1)

    def object_set(self, names: Iterable[str]) -> ObjectSet:
        return _mask_by_name(self.object_names, names, "object")

    def attribute_set(self, names: Iterable[str]) -> AttributeSet:
        return _mask_by_name(self.attribute_names, names, "attribute")

    def object_names_of(self, a: ObjectSet) -> list[str]:
        return [self.object_names[g] for g in iter_bits(a)]

    def attribute_names_of(self, b: AttributeSet) -> list[str]:
        return [self.attribute_names[m] for m in iter_bits(b)]


def derive_objects(ctx: FormalContext, a: ObjectSet) -> AttributeSet:
    """A' : attributes shared by every object of ``a`` (all of M for the empty set)."""
    _check_objects(ctx, a)
    return common_attributes(ctx, a)


def derive_attributes(ctx: FormalContext, b: AttributeSet) -> ObjectSet:
    """B' : objects having every attribute of ``b`` (all of G for the empty set)."""
    _check_attributes(ctx, b)
    return common_objects(ctx, b)


def close_objects(ctx: FormalContext, a: ObjectSet) -> ObjectSet:
    _check_objects(ctx, a)
    return common_objects(ctx, common_attributes(ctx, a))


def close_attributes(ctx: FormalContext, b: AttributeSet) -> AttributeSet:
    _check_attributes(ctx, b)
    return common_attributes(ctx, common_objects(ctx, b))


def is_concept(ctx: FormalContext, a: ObjectSet, b: AttributeSet) -> bool:
    _check_objects(ctx, a)
    _check_attributes(ctx, b)
    return common_attributes(ctx, a) == b and common_objects(ctx, b) == a


def common_attributes(ctx: FormalContext, a: ObjectSet) -> AttributeSet:
    """Unchecked A' for callers that only hold sets produced by this context."""
    size = a.bit_count()
    if size <= ctx.n_attributes:
        result = ctx.all_attributes
        for g in iter_bits(a):
            result &= ctx.rows[g]
            if not result:
                break
        return result
    # wide extents: test each column for containment instead of folding rows
    result = 0
    for m, col in enumerate(ctx.cols):
        if col & a == a:
            result |= 1 << m
    return result


def common_objects(ctx: FormalContext, b: AttributeSet) -> ObjectSet:
    result = ctx.all_objects
    for m in iter_bits(b):
        result &= ctx.cols[m]
        if not result:
            break
    return result


def _check_objects(ctx: FormalContext, a: ObjectSet) -> None:
    if a < 0 or a & ~ctx.all_objects:
        raise ContextIndexError(f"Object set references indices beyond |G|={ctx.n_objects}.")


def _check_attributes(ctx: FormalContext, b: AttributeSet) -> None:
    if b < 0 or b & ~ctx.all_attributes:
        raise ContextIndexError(f"Attribute set references indices beyond |M|={ctx.n_attributes}.")


def _ensure_unique(names: tuple[str, ...], kind: str) -> None:
    duplicates = sorted(name for name, count in Counter(names).items() if count > 1)
    if duplicates:
        raise ContextFormatError(f"Duplicate {kind} names: {', '.join(duplicates)}")


def _mask_by_name(universe: tuple[str, ...], names: Iterable[str], kind: str) -> int:
    index = {name: i for i, name in enumerate(universe)}
    try:
        return mask_of(index[name] for name in names)
    except KeyError as exc:
        raise ContextFormatError(f"Unknown {kind} name: {exc.args[0]!r}") from exc
