"""Success probability of the full J-query pipeline and the training cost.

p^s is the probability that J independent runs of the circuit, fed through
the post-processor, return exactly s; it is averaged over the oracle tables
listed for s.  The cost is sum_s (1 - p^s)^2 over the secrets present in the
training set.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import UsageError
from .gf2 import BitString, all_bitstrings
from .oracle import MappingTable, canonical_oracle, enumerate_canonical_oracles, is_simon_function
from .postprocess import Gf2PostProcessor, PostProcessor
from .simulator import CircuitLayout, output_distribution, output_distributions


@dataclass
class TrainingSet:
    n: int
    J: int
    per_secret: dict[BitString, list[MappingTable]]

    def __post_init__(self) -> None:
        if self.J < 1:
            raise UsageError("J must be >= 1")
        if not self.per_secret:
            raise UsageError("training set is empty")
        for s, tables in self.per_secret.items():
            if not tables:
                raise UsageError(f"no oracle tables listed for secret {s}")
            for f in tables:
                if f.n != self.n or f.secret != s or not is_simon_function(f):
                    raise UsageError(f"table {f.to_json()} is not a valid oracle for secret {s}")

    @property
    def secrets(self) -> list[BitString]:
        return sorted(self.per_secret)

    @classmethod
    def build(
        cls,
        n: int,
        J: int | None = None,
        secrets: str | Iterable[BitString | str] = "all",
        oracles_per_secret: int | str = 1,
    ) -> "TrainingSet":
        """First ``oracles_per_secret`` canonical tables (or all of them) for each chosen secret.

        ``J`` defaults to n, the smallest count above n - 1.
        """
        if secrets == "all":
            chosen = [s for s in all_bitstrings(n) if s]
        else:
            chosen = [BitString.parse(s) if isinstance(s, str) else s for s in secrets]
        per_secret = {}
        for s in chosen:
            if oracles_per_secret == "all":
                per_secret[s] = list(enumerate_canonical_oracles(n, s))
            else:
                per_secret[s] = [canonical_oracle(n, s, i) for i in range(int(oracles_per_secret))]
        return cls(n, n if J is None else J, per_secret)


@dataclass
class CostReport:
    total: float
    per_secret_p: dict[BitString, float]
    params_echo: np.ndarray = field(repr=False)

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "per_secret": {str(s): p for s, p in sorted(self.per_secret_p.items())},
            "params": [float(v) for v in self.params_echo],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def success_from_distribution(probs: np.ndarray, grid: np.ndarray, secret: int) -> float:
    """Sum over ordered J-tuples of prod_i probs[y_i] where the grid's guess equals ``secret``."""
    t = (grid == secret).astype(float)
    for _ in range(grid.ndim):
        t = t @ probs
    return float(t)


def success_probability(
    layout: CircuitLayout,
    params: np.ndarray,
    f: MappingTable,
    J: int,
    post: PostProcessor,
) -> float:
    """Exact probability that J runs plus post-processing return f's secret.

    Raises CapacityError when (2^n)^J is too large to enumerate; the Monte
    Carlo estimator covers that case.
    """
    grid = post.guess_grid(J)
    probs = output_distribution(layout, params, f).probs
    return success_from_distribution(probs, grid, f.secret.bits)


def cost(
    layout: CircuitLayout,
    params: np.ndarray,
    ts: TrainingSet,
    post: PostProcessor,
) -> CostReport:
    grid = post.guess_grid(ts.J)
    secrets = ts.secrets
    flat = [f for s in secrets for f in ts.per_secret[s]]
    dists = iter(output_distributions(layout, params, flat))
    per_secret = {}
    total = 0.0
    for s in secrets:
        ps = [success_from_distribution(next(dists).probs, grid, s.bits) for _ in ts.per_secret[s]]
        p = float(sum(ps) / len(ps))
        per_secret[s] = p
        total += (1.0 - p) ** 2
    return CostReport(total, per_secret, np.array(params, dtype=float))


def cost_function(layout: CircuitLayout, ts: TrainingSet, post: PostProcessor | None = None):
    """Scalar cost of a parameter vector, for handing to the optimisers."""
    post = Gf2PostProcessor(ts.n) if post is None else post

    def costfn(params: np.ndarray) -> float:
        return cost(layout, params, ts, post).total

    return costfn


def mc_success_probability(
    layout: CircuitLayout,
    params: np.ndarray,
    f: MappingTable,
    J: int,
    post: PostProcessor,
    shots: int,
    seed: int,
) -> float:
    """Fraction of ``shots`` sampled episodes whose post-processed guess equals the secret."""
    if shots < 1:
        raise UsageError("shots must be >= 1")
    probs = np.clip(output_distribution(layout, params, f).probs, 0.0, None)
    probs /= probs.sum()
    rng = np.random.default_rng(seed)
    samples = rng.choice(probs.size, size=(shots, J), p=probs)
    samples.sort(axis=1)
    keys, counts = np.unique(samples, axis=0, return_counts=True)
    hits = 0
    for key, count in zip(keys, counts):
        if post.guess(tuple(int(y) for y in key)) == f.secret.bits:
            hits += int(count)
    return hits / shots
