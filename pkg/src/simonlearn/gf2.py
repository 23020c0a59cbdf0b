"""Bit strings and linear algebra over GF(2).

Bit strings are stored as Python ints with the leftmost character as the
most significant bit, so ``BitString.parse("100").bits == 4``.  Rows of a
GF(2) matrix are packed the same way, which keeps elimination to XORs.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import UsageError

MAX_WIDTH = 16


@dataclass(frozen=True, order=True)
class BitString:
    """Fixed-width bit string x1 x2 ... xn with x1 the most significant bit."""

    width: int
    bits: int

    def __post_init__(self) -> None:
        if not 1 <= self.width <= MAX_WIDTH:
            raise UsageError(f"width must be in [1, {MAX_WIDTH}], got {self.width}")
        if not 0 <= self.bits < (1 << self.width):
            raise UsageError(f"bits={self.bits} does not fit in {self.width} bits")

    @classmethod
    def parse(cls, text: str) -> "BitString":
        text = text.strip()
        if not text or any(c not in "01" for c in text):
            raise UsageError(f"not a bit string: {text!r}")
        return cls(len(text), int(text, 2))

    @classmethod
    def zero(cls, width: int) -> "BitString":
        return cls(width, 0)

    def __str__(self) -> str:
        return format(self.bits, f"0{self.width}b")

    def __int__(self) -> int:
        return self.bits

    def __bool__(self) -> bool:
        return self.bits != 0

    def bit(self, i: int) -> int:
        """Return x_i using 1-based indexing from the left."""
        if not 1 <= i <= self.width:
            raise UsageError(f"bit index {i} out of range for width {self.width}")
        return (self.bits >> (self.width - i)) & 1


def all_bitstrings(width: int) -> list[BitString]:
    return [BitString(width, v) for v in range(1 << width)]


def _check_widths(a: BitString, b: BitString) -> None:
    if a.width != b.width:
        raise UsageError(f"width mismatch: {a.width} vs {b.width}")


def xor(a: BitString, b: BitString) -> BitString:
    _check_widths(a, b)
    return BitString(a.width, a.bits ^ b.bits)


def dot2(a: BitString, b: BitString) -> int:
    """Inner product of two bit strings mod 2."""
    _check_widths(a, b)
    return (a.bits & b.bits).bit_count() & 1


def _rref(rows: Iterable[int], n: int) -> tuple[list[int], list[int]]:
    """Reduced row echelon form of packed rows; returns (pivot rows, pivot bit positions)."""
    work = [r for r in rows if r]
    pivots: list[int] = []
    reduced: list[int] = []
    for pos in range(n - 1, -1, -1):
        mask = 1 << pos
        idx = next((k for k, r in enumerate(work) if r & mask), None)
        if idx is None:
            continue
        pivot = work.pop(idx)
        work = [r ^ pivot if r & mask else r for r in work]
        reduced = [r ^ pivot if r & mask else r for r in reduced]
        reduced.append(pivot)
        pivots.append(pos)
        work = [r for r in work if r]
    return reduced, pivots


def _packed(rows: Sequence[BitString], n: int | None = None) -> tuple[list[int], int]:
    if not rows:
        if n is None:
            return [], 0
        return [], n
    width = rows[0].width if n is None else n
    for r in rows:
        if r.width != width:
            raise UsageError(f"row {r} has width {r.width}, expected {width}")
    return [r.bits for r in rows], width


def rank2(rows: Sequence[BitString]) -> int:
    """Row rank over GF(2)."""
    packed, width = _packed(rows)
    return len(_rref(packed, width)[1])


def nullspace_basis(rows: Sequence[BitString], n: int) -> list[BitString]:
    """Basis of {s : dot2(row, s) == 0 for every row}."""
    packed, _ = _packed(rows, n)
    reduced, pivots = _rref(packed, n)
    pivot_set = set(pivots)
    basis = []
    for free in range(n - 1, -1, -1):
        if free in pivot_set:
            continue
        vec = 1 << free
        for row, pos in zip(reduced, pivots):
            if row >> free & 1:
                vec |= 1 << pos
        basis.append(BitString(n, vec))
    return basis


class SolutionKind(enum.Enum):
    UNIQUE_NONZERO = "unique_nonzero"
    AMBIGUOUS = "ambiguous"
    NO_NONZERO_SOLUTION = "no_nonzero_solution"


@dataclass(frozen=True)
class Gf2Solution:
    kind: SolutionKind
    secret: BitString | None = None
    nullspace_dim: int = 0

    @property
    def is_unique(self) -> bool:
        return self.kind is SolutionKind.UNIQUE_NONZERO


def solve_for_secret(rows: Sequence[BitString], n: int) -> Gf2Solution:
    """Solve y . s = 0 (mod 2) for every measured row y, excluding s = 0.

    The answer is unique only when the null space is exactly {0, s}.
    """
    basis = nullspace_basis(rows, n)
    dim = len(basis)
    if dim == 0:
        return Gf2Solution(SolutionKind.NO_NONZERO_SOLUTION, None, 0)
    if dim == 1:
        return Gf2Solution(SolutionKind.UNIQUE_NONZERO, basis[0], 1)
    return Gf2Solution(SolutionKind.AMBIGUOUS, None, dim)
