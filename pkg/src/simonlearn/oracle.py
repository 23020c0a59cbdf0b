"""Simon-promise functions and their reversible 2n-qubit lifts.

A promise function with secret s is constant on every coset {x, x ^ s} and
takes distinct values on distinct cosets.  The canonical enumeration picks
one table per image subset: cosets are ordered by their smallest member,
the image subset is sorted, and the i-th value goes to the i-th coset.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import CapacityError, UsageError
from .gf2 import BitString

MAX_ENUMERATE_N = 4
MAX_FULL_ENUMERATE_N = 3


@dataclass(frozen=True)
class MappingTable:
    """A function f: {0,1}^n -> {0,1}^n together with its claimed secret.

    ``table[x]`` holds f(x) as a packed int.  Construction only checks shape;
    use :func:`is_simon_function` to check the promise.
    """

    n: int
    secret: BitString
    table: tuple[int, ...]

    def __post_init__(self) -> None:
        size = 1 << self.n
        if self.secret.width != self.n:
            raise UsageError(f"secret width {self.secret.width} != n={self.n}")
        if len(self.table) != size:
            raise UsageError(f"table needs {size} entries, got {len(self.table)}")
        if any(not 0 <= v < size for v in self.table):
            raise UsageError("table value out of range")

    def __call__(self, x: int) -> int:
        return self.table[x]

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "s": str(self.secret),
            "table": [format(v, f"0{self.n}b") for v in self.table],
        }

    @classmethod
    def from_json(cls, obj: dict | str) -> "MappingTable":
        if isinstance(obj, str):
            obj = json.loads(obj)
        n = int(obj["n"])
        secret = BitString.parse(obj["s"])
        table = tuple(BitString.parse(v).bits for v in obj["table"])
        if any(len(v) != n for v in obj["table"]):
            raise UsageError("table entries must all have width n")
        return cls(n, secret, table)


def is_simon_function(f: MappingTable) -> bool:
    s = f.secret.bits
    if s == 0:
        return False
    size = 1 << f.n
    seen: dict[int, int] = {}
    for x in range(size):
        if f.table[x] != f.table[x ^ s]:
            return False
        rep = min(x, x ^ s)
        prev = seen.setdefault(f.table[x], rep)
        if prev != rep:
            return False
    return len(seen) == size // 2


def _check_secret(n: int, s: BitString) -> None:
    if s.width != n:
        raise UsageError(f"secret width {s.width} != n={n}")
    if not s:
        raise UsageError("the secret must be nonzero")


def coset_representatives(n: int, s: BitString) -> list[int]:
    """Smallest member of each coset {x, x ^ s}, ascending."""
    return [x for x in range(1 << n) if x < x ^ s.bits]


def _table_from_assignment(n: int, s: BitString, reps: list[int], values) -> MappingTable:
    table = [0] * (1 << n)
    for rep, v in zip(reps, values):
        table[rep] = v
        table[rep ^ s.bits] = v
    return MappingTable(n, s, tuple(table))


def enumerate_canonical_oracles(n: int, s: BitString, full: bool = False) -> Iterator[MappingTable]:
    """Yield promise functions for secret ``s``.

    The default yields C(2^n, 2^(n-1)) canonical tables, one per image subset.
    With ``full=True`` every assignment of image values to cosets is yielded
    as well, multiplying the count by (2^(n-1))!.
    """
    _check_secret(n, s)
    limit = MAX_FULL_ENUMERATE_N if full else MAX_ENUMERATE_N
    if n > limit:
        raise CapacityError(f"enumeration supports n <= {limit}, got n={n}")
    reps = coset_representatives(n, s)
    for image in itertools.combinations(range(1 << n), len(reps)):
        if full:
            for assignment in itertools.permutations(image):
                yield _table_from_assignment(n, s, reps, assignment)
        else:
            yield _table_from_assignment(n, s, reps, image)


def canonical_oracle(n: int, s: BitString, index: int = 0) -> MappingTable:
    """The ``index``-th canonical table without materialising the whole list."""
    return next(itertools.islice(enumerate_canonical_oracles(n, s), index, None))


def count_per_secret(n: int) -> int:
    return math.comb(1 << n, 1 << (n - 1))


def count_mapping_tables(n: int) -> int:
    """Number of mapping tables over all nonzero secrets: (2^n - 1) * C(2^n, 2^(n-1))."""
    if n < 1:
        raise UsageError("n must be >= 1")
    if n > 16:
        raise CapacityError(f"n={n} exceeds supported width")
    return ((1 << n) - 1) * count_per_secret(n)


def random_oracle(n: int, s: BitString, seed: int) -> MappingTable:
    """Uniform draw from the canonical tables for ``s``; same seed, same table."""
    _check_secret(n, s)
    rng = np.random.default_rng(seed)
    reps = coset_representatives(n, s)
    image = np.sort(rng.choice(1 << n, size=len(reps), replace=False))
    return _table_from_assignment(n, s, reps, [int(v) for v in image])


@dataclass(frozen=True)
class OraclePermutation:
    """Basis-state permutation |x>|b> -> |x>|b ^ f(x)>, index = x * 2^n + b."""

    n: int
    perm: np.ndarray

    @property
    def dim(self) -> int:
        return 1 << (2 * self.n)


def build_oracle_permutation(f: MappingTable) -> OraclePermutation:
    size = 1 << f.n
    x = np.repeat(np.arange(size), size)
    b = np.tile(np.arange(size), size)
    fx = np.asarray(f.table)[x]
    perm = x * size + (b ^ fx)
    perm.setflags(write=False)
    return OraclePermutation(f.n, perm)
