"""Finite-difference gradient descent, the GD-assisted genetic search, and landscape scans.

All parameters are angles and are wrapped onto [0, 2*pi) after every
update.  Randomness in the genetic search comes from per-agent streams
seeded by (seed, generation, agent), so evaluating agents through any
``map_fn`` (serial, threads, processes) yields the same history.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .cost import TrainingSet, cost_function
from .errors import NumericalError, UsageError
from .postprocess import PostProcessor
from .simulator import CircuitLayout

TWO_PI = 2.0 * np.pi
CONVERGENCE_TOL = 1e-6

CostFn = Callable[[np.ndarray], float]


def wrap_angles(params: np.ndarray) -> np.ndarray:
    return np.mod(params, TWO_PI)


@dataclass(frozen=True)
class GdConfig:
    eta: float = 0.1
    steps: int = 100
    fd_epsilon: float = 1e-5

    def __post_init__(self) -> None:
        if self.eta < 0 or self.fd_epsilon <= 0 or self.steps < 0:
            raise UsageError("need eta >= 0, fd_epsilon > 0 and steps >= 0")


@dataclass(frozen=True)
class GaConfig:
    population: int = 32
    elites: int = 4
    generation_gd_steps: int = 20
    mutation_prob: float = 0.3
    mutation_sigma: float = 0.1
    generations: int = 10
    seed: int = 0
    # eta * (largest Hessian eigenvalue) must stay below 2; n=3 with all secrets peaks near 33
    eta: float = 0.05
    fd_epsilon: float = 1e-5

    def __post_init__(self) -> None:
        if not 1 <= self.elites <= self.population:
            raise UsageError("need 1 <= elites <= population")
        if not 0.0 <= self.mutation_prob <= 1.0 or self.mutation_sigma < 0:
            raise UsageError("mutation_prob must be in [0, 1] and mutation_sigma >= 0")
        if self.generations < 1:
            raise UsageError("generations must be >= 1")

    @property
    def gd(self) -> GdConfig:
        return GdConfig(eta=self.eta, steps=self.generation_gd_steps, fd_epsilon=self.fd_epsilon)


def _checked(value: float, params: np.ndarray) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise NumericalError(f"cost is {value} at params {np.array2string(params, precision=6)}")
    return value


def finite_diff_gradient(costfn: CostFn, params: np.ndarray, eps: float = 1e-5) -> np.ndarray:
    """Central differences, one coordinate at a time."""
    if eps <= 0:
        raise UsageError("eps must be > 0")
    params = np.asarray(params, dtype=float)
    grad = np.empty_like(params)
    for i in range(params.size):
        step = np.zeros_like(params)
        step[i] = eps
        up = _checked(costfn(params + step), params)
        down = _checked(costfn(params - step), params)
        grad[i] = (up - down) / (2.0 * eps)
    return grad


@dataclass
class Trajectory:
    points: list[tuple[np.ndarray, float]]
    grad_norms: list[float] = field(default_factory=list)
    converged: bool = False
    final_gradient_norm: float = math.inf

    @property
    def costs(self) -> list[float]:
        return [c for _, c in self.points]

    @property
    def final_params(self) -> np.ndarray:
        return self.points[-1][0]

    @property
    def final_cost(self) -> float:
        return self.points[-1][1]

    def to_csv(self, header: str = "") -> str:
        """Rows "step,cost,grad_norm,params..."; grad_norm is the gradient used to leave that point."""
        buf = io.StringIO()
        buf.write(header)
        dim = self.points[0][0].size
        buf.write("step,cost,grad_norm," + ",".join(f"p{i}" for i in range(dim)) + "\n")
        norms = list(self.grad_norms) + [self.final_gradient_norm]
        for step, ((p, c), g) in enumerate(zip(self.points, norms)):
            buf.write(f"{step},{float(c)!r},{float(g)!r}," + ",".join(repr(float(v)) for v in p) + "\n")
        return buf.getvalue()


def gradient_descent(costfn: CostFn, init: np.ndarray, cfg: GdConfig, wrap: bool = True) -> Trajectory:
    """Repeat params <- params - eta * grad C for ``cfg.steps`` steps, recording the cost each time."""
    params = np.array(init, dtype=float)
    if wrap:
        params = wrap_angles(params)
    points = [(params.copy(), _checked(costfn(params), params))]
    norms = []
    grad = finite_diff_gradient(costfn, params, cfg.fd_epsilon)
    for _ in range(cfg.steps):
        norms.append(float(np.linalg.norm(grad)))
        params = params - cfg.eta * grad
        if wrap:
            params = wrap_angles(params)
        points.append((params.copy(), _checked(costfn(params), params)))
        grad = finite_diff_gradient(costfn, params, cfg.fd_epsilon)
    final_norm = float(np.linalg.norm(grad))
    return Trajectory(points, norms, final_norm < CONVERGENCE_TOL, final_norm)


@dataclass
class GenerationRecord:
    generation: int
    costs: np.ndarray
    params: np.ndarray
    parents: np.ndarray
    best_cost: float
    best_params: np.ndarray


@dataclass
class GaResult:
    best: np.ndarray
    best_cost: float
    history: list[GenerationRecord]

    def best_cost_trace(self) -> list[float]:
        return [rec.best_cost for rec in self.history]

    def to_trajectory(self) -> Trajectory:
        """Best-so-far parameters and cost after each generation, as a Trajectory."""
        return Trajectory(
            [(rec.best_params.copy(), rec.best_cost) for rec in self.history],
            grad_norms=[math.nan] * (len(self.history) - 1),
            final_gradient_norm=math.nan,
        )


def _agent_rng(seed: int, generation: int, agent: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, generation, agent]))


def genetic_search(
    costfn: CostFn,
    param_dim: int,
    cfg: GaConfig,
    map_fn: Callable = map,
    init: np.ndarray | None = None,
    on_generation: Callable[[GenerationRecord], None] | None = None,
) -> GaResult:
    """Gradient-descent-assisted genetic search.

    Each generation every agent takes ``generation_gd_steps`` descent steps;
    the ``elites`` cheapest agents (ties to the lower index) survive
    unchanged and fill the rest of the population cyclically, each copied
    parameter being nudged by N(0, mutation_sigma) with probability
    ``mutation_prob``.  Returns the best agent seen over the whole run.

    ``on_generation`` runs after each generation is scored and before
    repopulation; joint training uses it to retrain the post-processor that
    ``costfn`` reads.
    """
    if param_dim < 1:
        raise UsageError("param_dim must be >= 1")
    if init is None:
        pop = np.stack([_agent_rng(cfg.seed, 0, a).uniform(0.0, TWO_PI, param_dim) for a in range(cfg.population)])
    else:
        pop = wrap_angles(np.array(init, dtype=float).reshape(cfg.population, param_dim))
    parents = np.arange(cfg.population)
    gd_cfg = cfg.gd
    best, best_cost = None, math.inf
    history = []

    def descend(p):
        return gradient_descent(costfn, p, gd_cfg)

    for gen in range(cfg.generations):
        trajs = list(map_fn(descend, list(pop)))
        pop = np.stack([t.final_params for t in trajs])
        costs = np.array([t.final_cost for t in trajs])
        i = int(np.argmin(costs))
        if costs[i] < best_cost:
            best, best_cost = pop[i].copy(), float(costs[i])
        history.append(GenerationRecord(gen, costs, pop.copy(), parents.copy(), best_cost, best.copy()))
        if on_generation is not None:
            on_generation(history[-1])
        if gen == cfg.generations - 1:
            break

        elites = np.argsort(costs, kind="stable")[: cfg.elites]
        parents = elites[np.arange(cfg.population) % cfg.elites]
        new_pop = pop[parents].copy()
        for a in range(cfg.elites, cfg.population):
            rng = _agent_rng(cfg.seed, gen + 1, a)
            mask = rng.random(param_dim) < cfg.mutation_prob
            noise = rng.normal(0.0, cfg.mutation_sigma, param_dim) if cfg.mutation_sigma > 0 else 0.0
            new_pop[a] = wrap_angles(new_pop[a] + mask * noise)
        pop = new_pop

    return GaResult(best, best_cost, history)


@dataclass
class LandscapeResult:
    theta1: np.ndarray
    theta2: np.ndarray
    costs: np.ndarray
    tie_tol: float = 1e-9

    @property
    def min_cost(self) -> float:
        return float(self.costs.min())

    def near_min_cells(self) -> list[tuple[int, int]]:
        """Cells within ``tie_tol`` of the minimum, row-major order."""
        return [tuple(int(v) for v in ij) for ij in np.argwhere(self.costs <= self.min_cost + self.tie_tol)]

    @property
    def argmin(self) -> tuple[int, int]:
        """First near-minimal cell in row-major order, so float noise cannot reorder exact ties."""
        return self.near_min_cells()[0]

    def cell_of(self, t1: float, t2: float) -> tuple[int, int]:
        def locate(axis, t):
            if axis.size == 1:
                return 0
            step = axis[1] - axis[0]
            return int(np.clip(math.floor((t - axis[0]) / step + 1e-9), 0, axis.size - 1))

        return locate(self.theta1, t1), locate(self.theta2, t2)

    def to_csv(self, header: str = "") -> str:
        buf = io.StringIO()
        buf.write(header)
        buf.write("theta1,theta2,cost\n")
        for i, t1 in enumerate(self.theta1):
            for j, t2 in enumerate(self.theta2):
                buf.write(f"{float(t1)!r},{float(t2)!r},{float(self.costs[i, j])!r}\n")
        return buf.getvalue()


def landscape_scan(
    layout: CircuitLayout,
    ts: TrainingSet,
    post: PostProcessor | None = None,
    theta1: tuple[float, float] = (0.0, np.pi),
    theta2: tuple[float, float] = (0.0, np.pi),
    resolution: int | Sequence[int] = 64,
) -> LandscapeResult:
    """Evaluate the cost on a grid of cells [lo + k*step, lo + (k+1)*step), sampled at their lower corner."""
    if layout.num_params != 2:
        raise UsageError(f"landscape needs exactly 2 free parameters, layout has {layout.num_params}")
    r1, r2 = (resolution, resolution) if np.isscalar(resolution) else tuple(resolution)
    if r1 < 1 or r2 < 1:
        raise UsageError("resolution must be >= 1")
    costfn = cost_function(layout, ts, post)
    ax1 = theta1[0] + (theta1[1] - theta1[0]) * np.arange(r1) / r1
    ax2 = theta2[0] + (theta2[1] - theta2[0]) * np.arange(r2) / r2
    costs = np.empty((r1, r2))
    for i, t1 in enumerate(ax1):
        for j, t2 in enumerate(ax2):
            costs[i, j] = _checked(costfn(np.array([t1, t2])), np.array([t1, t2]))
    return LandscapeResult(ax1, ax2, costs)
