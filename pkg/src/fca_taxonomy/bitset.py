"""Integer sets: bit i of an int marks element i as a member."""

from __future__ import annotations

from collections.abc import Iterable, Iterator


def mask_of(indices: Iterable[int]) -> int:
    mask = 0
    for index in indices:
        if index < 0:
            raise ValueError(f"bit not greater than or equal to 0, bit == {index}")
        mask |= 1 << index
    return mask


def full_mask(width: int) -> int:
    return (1 << width) - 1


def iter_bits(mask: int) -> Iterator[int]:
    """Yield set bit positions in increasing order."""
    if mask < 0:
        raise ValueError("negative masks have no finite bit set")
    # scanning the reversed binary string keeps the loop in C for wide masks
    digits = bin(mask)[:1:-1]
    position = digits.find("1")
    while position >= 0:
        yield position
        position = digits.find("1", position + 1)


def indices_of(mask: int) -> list[int]:
    return list(iter_bits(mask))


def is_subset(inner: int, outer: int) -> bool:
    return inner & ~outer == 0


def lectic_key(mask: int, width: int) -> int:
    """Integer whose order is the lectic order of ``mask`` with index 0 most significant."""
    if width == 0:
        return 0
    return int(format(mask, f"0{width}b")[::-1], 2)
