"""Classical post-processing: J measured bit strings in, a guess for s out.

Two processors share one interface (``guess`` on a tuple of packed ints and
``guess_grid`` over every ordered J-tuple):

* :class:`Gf2PostProcessor` runs Gaussian elimination and answers only when
  the measured rows pin down a unique nonzero secret.
* :class:`LookupTable` stores one answer per multiset of outcomes and can be
  trained by accept-if-better swaps of its entries.

Guesses are coded as ints internally: the secret's packed value, or
``FAIL`` (-1) when the processor gives up.
"""

from __future__ import annotations

import functools
import itertools
import json
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import CapacityError, UsageError
from .gf2 import BitString, solve_for_secret

FAIL = -1
MAX_GRID_SIZE = 1 << 20


@dataclass(frozen=True)
class Guess:
    """A post-processor's answer: a nonzero secret, or failure when ``secret`` is None."""

    secret: BitString | None = None

    def __post_init__(self) -> None:
        if self.secret is not None and not self.secret:
            raise UsageError("a guessed secret must be nonzero")

    @property
    def failed(self) -> bool:
        return self.secret is None

    def code(self) -> int:
        return FAIL if self.secret is None else self.secret.bits

    @classmethod
    def from_code(cls, code: int, n: int) -> "Guess":
        return cls(None if code == FAIL else BitString(n, code))

    def __str__(self) -> str:
        return "fail" if self.secret is None else str(self.secret)


FAILURE = Guess()


def _as_ints(ys: Sequence[BitString | int], n: int) -> tuple[int, ...]:
    out = []
    for y in ys:
        if isinstance(y, BitString):
            if y.width != n:
                raise UsageError(f"outcome {y} has width {y.width}, expected {n}")
            out.append(y.bits)
        else:
            if not 0 <= y < (1 << n):
                raise UsageError(f"outcome {y} out of range for n={n}")
            out.append(int(y))
    return tuple(out)


def _check_grid(n: int, J: int) -> None:
    if (1 << n) ** J > MAX_GRID_SIZE:
        raise CapacityError(
            f"(2^{n})^{J} outcome tuples exceed the exact-enumeration limit; use the Monte Carlo estimator"
        )


@functools.lru_cache(maxsize=None)
def _gf2_code(ys: tuple[int, ...], n: int) -> int:
    sol = solve_for_secret([BitString(n, y) for y in ys], n)
    return sol.secret.bits if sol.is_unique else FAIL


def gf2_postprocess(ys: Sequence[BitString | int], n: int) -> Guess:
    """Guess s by Gaussian elimination; fail unless the solution is unique and nonzero."""
    key = tuple(sorted(_as_ints(ys, n)))
    return Guess.from_code(_gf2_code(key, n), n)


@functools.lru_cache(maxsize=64)
def _gf2_grid(n: int, J: int) -> np.ndarray:
    size = 1 << n
    grid = np.empty((size,) * J, dtype=np.int64)
    for combo in itertools.combinations_with_replacement(range(size), J):
        code = _gf2_code(combo, n)
        for perm in set(itertools.permutations(combo)):
            grid[perm] = code
    grid.setflags(write=False)
    return grid


class Gf2PostProcessor:
    """Gaussian elimination over GF(2), usable with any number of queries."""

    name = "gf2"

    def __init__(self, n: int):
        self.n = n

    def guess(self, ys: Sequence[int]) -> int:
        return _gf2_code(tuple(sorted(ys)), self.n)

    def guess_grid(self, J: int) -> np.ndarray:
        _check_grid(self.n, J)
        return _gf2_grid(self.n, J)

    def __call__(self, ys: Sequence[BitString | int]) -> Guess:
        return gf2_postprocess(ys, self.n)

    def __repr__(self) -> str:
        return f"Gf2PostProcessor(n={self.n})"


@functools.lru_cache(maxsize=64)
def _multiset_keys(n: int, J: int) -> tuple[tuple[int, ...], ...]:
    return tuple(itertools.combinations_with_replacement(range(1 << n), J))


@functools.lru_cache(maxsize=64)
def _grid_to_key(n: int, J: int) -> np.ndarray:
    """For each ordered J-tuple, the index of its sorted multiset in ``_multiset_keys``."""
    size = 1 << n
    index = {k: i for i, k in enumerate(_multiset_keys(n, J))}
    out = np.empty((size,) * J, dtype=np.int64)
    for tup in itertools.product(range(size), repeat=J):
        out[tup] = index[tuple(sorted(tup))]
    out.setflags(write=False)
    return out


class LookupTable:
    """Trainable map from a multiset of J outcomes to a guess.

    Entries are ordered as ``itertools.combinations_with_replacement`` over
    the 2^n outcomes, so the table has C(2^n + J - 1, J) entries.
    """

    name = "table"

    def __init__(self, n: int, J: int, codes: Sequence[int] | np.ndarray):
        _check_grid(n, J)
        self.n = n
        self.J = J
        self.keys = _multiset_keys(n, J)
        codes = np.array(codes, dtype=np.int64)
        if codes.shape != (len(self.keys),):
            raise UsageError(f"table needs {len(self.keys)} entries, got {codes.shape}")
        if np.any((codes < FAIL) | (codes == 0) | (codes >= (1 << n))):
            raise UsageError("entries must be -1 (fail) or a nonzero n-bit secret")
        self.codes = codes

    @classmethod
    def from_gf2(cls, n: int, J: int) -> "LookupTable":
        return cls(n, J, [_gf2_code(k, n) for k in _multiset_keys(n, J)])

    @classmethod
    def random(cls, n: int, J: int, seed: int) -> "LookupTable":
        """Each entry uniform over {fail} and the 2^n - 1 nonzero secrets."""
        rng = np.random.default_rng(seed)
        m = len(_multiset_keys(n, J))
        codes = rng.integers(0, 1 << n, size=m)
        codes[codes == 0] = FAIL
        return cls(n, J, codes)

    def copy(self) -> "LookupTable":
        return LookupTable(self.n, self.J, self.codes.copy())

    def __len__(self) -> int:
        return len(self.codes)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LookupTable):
            return NotImplemented
        return (self.n, self.J) == (other.n, other.J) and np.array_equal(self.codes, other.codes)

    def guess(self, ys: Sequence[int]) -> int:
        key = tuple(sorted(ys))
        if len(key) != self.J:
            raise UsageError(f"table expects {self.J} outcomes, got {len(key)}")
        return int(self.codes[self._index()[key]])

    def _index(self) -> dict:
        return _key_index(self.n, self.J)

    def guess_grid(self, J: int | None = None) -> np.ndarray:
        if J is not None and J != self.J:
            raise UsageError(f"table was built for J={self.J}, not J={J}")
        return self.codes[_grid_to_key(self.n, self.J)]

    def __call__(self, ys: Sequence[BitString | int]) -> Guess:
        return Guess.from_code(self.guess(_as_ints(ys, self.n)), self.n)

    def to_json(self) -> dict:
        out = {}
        for key, code in zip(self.keys, self.codes):
            label = ",".join(format(y, f"0{self.n}b") for y in key)
            out[label] = str(Guess.from_code(int(code), self.n))
        return out

    @classmethod
    def from_json(cls, obj: dict | str) -> "LookupTable":
        if isinstance(obj, str):
            obj = json.loads(obj)
        if not obj:
            raise UsageError("empty lookup table")
        first = next(iter(obj)).split(",")
        n, J = len(first[0]), len(first)
        index = _key_index(n, J)
        codes = np.full(len(index), FAIL - 1, dtype=np.int64)
        for label, value in obj.items():
            key = tuple(sorted(BitString.parse(y).bits for y in label.split(",")))
            if key not in index:
                raise UsageError(f"bad table key {label!r}")
            codes[index[key]] = FAIL if value == "fail" else BitString.parse(value).bits
        if np.any(codes == FAIL - 1):
            raise UsageError("lookup table JSON does not cover every multiset")
        return cls(n, J, codes)


@functools.lru_cache(maxsize=64)
def _key_index(n: int, J: int) -> dict:
    return {k: i for i, k in enumerate(_multiset_keys(n, J))}


def table_postprocess(table: LookupTable, ys: Sequence[BitString | int]) -> Guess:
    return table(ys)


PostProcessor = Gf2PostProcessor | LookupTable


def train_table(
    table: LookupTable,
    cost: Callable[[LookupTable], float],
    steps: int,
    seed: int,
) -> tuple[LookupTable, list[float]]:
    """Swap the outputs of two random entries per step; keep the swap only if cost drops.

    Returns the trained copy and the cost of the kept table after each step.
    """
    if steps < 0:
        raise UsageError("steps must be >= 0")
    rng = np.random.default_rng(seed)
    current = table.copy()
    current_cost = float(cost(current))
    trace: list[float] = []
    m = len(current)
    for _ in range(steps):
        if m >= 2:
            i, j = rng.choice(m, size=2, replace=False)
            codes = current.codes
            if codes[i] != codes[j]:
                codes[i], codes[j] = codes[j], codes[i]
                trial = float(cost(current))
                if trial < current_cost:
                    current_cost = trial
                else:
                    codes[i], codes[j] = codes[j], codes[i]
        trace.append(current_cost)
    return current, trace
