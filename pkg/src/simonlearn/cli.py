"""Command-line entry point: ``simonlearn {verify,enumerate,landscape,train}``.

Every command takes ``--config <json>`` plus ``--seed/--out/--n`` overrides
(flags win).  Exit codes: 0 success, 1 failed check, 2 usage or capacity
error, 3 non-finite cost.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Callable

import numpy as np
import scipy.linalg

from . import __version__
from .cost import TrainingSet, cost, cost_function
from .errors import CapacityError, NumericalError, UsageError
from .gf2 import BitString, all_bitstrings, dot2, solve_for_secret
from .oracle import (
    MAX_ENUMERATE_N,
    MappingTable,
    build_oracle_permutation,
    count_mapping_tables,
    count_per_secret,
    enumerate_canonical_oracles,
    is_simon_function,
    random_oracle,
)
from .optimize import (
    GaConfig,
    GdConfig,
    Trajectory,
    finite_diff_gradient,
    genetic_search,
    gradient_descent,
    landscape_scan,
)
from .postprocess import Gf2PostProcessor, LookupTable, train_table
from .simulator import (
    PARAM_COUNT,
    PAULIS,
    RESTRICTED,
    CircuitLayout,
    fig5_layout,
    general_one_qubit_gate,
    general_two_qubit_gate,
    hadamard_params,
    make_layout,
    output_distributions,
    restricted_gate,
    simon_reference_distribution,
)

log = logging.getLogger("simonlearn")

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
TABLE_SWAP_STEPS = 200
DEFAULT_LAYOUT = {1: "fig5", 2: "fig4", 3: "fig6"}


@dataclass
class RunConfig:
    n: int = 2
    layout: str | None = None
    gate_family: str = RESTRICTED
    J: int | None = None
    secrets: Any = "all"
    oracles_per_secret: Any = 1
    post: Any = "gf2"
    optimizer: dict = field(default_factory=lambda: {"kind": "ga"})
    seed: int = 0
    output_dir: str = "out"
    theta1: tuple[float, float] = (0.0, math.pi)
    theta2: tuple[float, float] = (0.0, math.pi)
    resolution: int = 64
    oracles: list | None = None

    @classmethod
    def from_dict(cls, raw: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**raw)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.n < 1:
            raise UsageError("n must be >= 1")
        if self.J is not None and self.J < 1:
            raise UsageError("J must be >= 1")
        if self.gate_family not in PARAM_COUNT:
            raise UsageError(f"unknown gate family {self.gate_family!r}")
        if self.oracles_per_secret == "all" and self.n > MAX_ENUMERATE_N:
            raise CapacityError(f"'all' oracles needs n <= {MAX_ENUMERATE_N}, got n={self.n}")
        if self.secrets != "all":
            for s in self.secret_list():
                if s.width != self.n or not s:
                    raise UsageError(f"secret {s} must be a nonzero {self.n}-bit string")
        self.post_kind()

    def secret_list(self) -> list[BitString]:
        if self.secrets == "all":
            return [s for s in all_bitstrings(self.n) if s]
        return [BitString.parse(s) for s in self.secrets]

    @property
    def queries(self) -> int:
        return self.n if self.J is None else self.J

    def post_kind(self) -> tuple[str, str | None]:
        if self.post == "gf2":
            return "gf2", None
        if isinstance(self.post, dict) and set(self.post) == {"table"}:
            init = self.post["table"]
            if init not in ("oracle-seeded", "random"):
                raise UsageError(f"table init must be 'oracle-seeded' or 'random', got {init!r}")
            return "table", init
        raise UsageError(f"post must be 'gf2' or {{'table': init}}, got {self.post!r}")

    def layout_for(self, default: str | None = None) -> CircuitLayout:
        name = self.layout or default or DEFAULT_LAYOUT.get(self.n, "fig5")
        if name.endswith(".json"):
            return CircuitLayout.from_json(json.loads(Path(name).read_text()))
        layout = make_layout(name, self.n, self.gate_family)
        if layout.n != self.n:
            raise UsageError(f"layout {name} is for n={layout.n}")
        return layout

    def training_set(self, secrets: Any = None) -> TrainingSet:
        return TrainingSet.build(
            self.n,
            self.queries,
            self.secrets if secrets is None else secrets,
            self.oracles_per_secret,
        )

    def explicit_oracles(self) -> list[MappingTable]:
        return [MappingTable.from_json(o) for o in (self.oracles or [])]

    def config_hash(self) -> str:
        d = asdict(self)
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True, default=list).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def metadata(cfg: RunConfig, layout_name: str) -> dict:
    return {"config_hash": cfg.config_hash(), "seed": cfg.seed, "layout": layout_name, "version": __version__}


def csv_header(meta: dict) -> str:
    return "# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n"


def write_json(path: Path, obj: Any) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# -- verify ------------------------------------------------------------------


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


def _check_simon_reference(cfg: RunConfig) -> Check:
    n = cfg.n
    layout = fig5_layout(n)
    params = hadamard_params(layout)
    worst, count = 0.0, 0
    for s in cfg.secret_list():
        tables = list(enumerate_canonical_oracles(n, s)) if cfg.oracles_per_secret == "all" else [
            t for _, t in zip(range(int(cfg.oracles_per_secret)), enumerate_canonical_oracles(n, s))
        ]
        ref = simon_reference_distribution(n, s).probs
        for d in output_distributions(layout, params, tables):
            worst = max(worst, float(np.max(np.abs(d.probs - ref))))
            count += 1
    return Check("simon_reference_distribution", worst < 1e-9, f"{count} oracles, max deviation {worst:.2e}")


def _check_counts(cfg: RunConfig) -> Check:
    n = cfg.n
    if n > MAX_ENUMERATE_N:
        return Check("oracle_counts", True, f"skipped for n={n} > {MAX_ENUMERATE_N}")
    per_s = {s: sum(1 for _ in enumerate_canonical_oracles(n, s)) for s in all_bitstrings(n) if s}
    ok = all(c == count_per_secret(n) for c in per_s.values()) and sum(per_s.values()) == count_mapping_tables(n)
    return Check("oracle_counts", ok, f"per secret {sorted(set(per_s.values()))}, total {sum(per_s.values())}")


def _check_gates(rng: np.random.Generator) -> list[Check]:
    worst_unitary = worst_invol = worst_forms = 0.0
    for _ in range(100):
        theta = rng.uniform(0, 2 * np.pi)
        g = restricted_gate(theta)
        worst_invol = max(worst_invol, float(np.max(np.abs(g @ g - np.eye(2)))))
        alpha = rng.uniform(0, 2 * np.pi, 4)
        u1 = general_one_qubit_gate(alpha)
        gen = sum(a * p for a, p in zip(alpha, PAULIS))
        worst_forms = max(worst_forms, float(np.max(np.abs(u1 - scipy.linalg.expm(1j * gen)))))
        u2 = general_two_qubit_gate(rng.uniform(0, 2 * np.pi, 16))
        for u in (g, u1, u2):
            eye = np.eye(u.shape[0])
            worst_unitary = max(worst_unitary, float(np.max(np.abs(u.conj().T @ u - eye))))
    return [
        Check("gate_unitarity", worst_unitary < 1e-10, f"max |U^dag U - 1| = {worst_unitary:.2e}"),
        Check("restricted_involution", worst_invol < 1e-10, f"max |G G - 1| = {worst_invol:.2e}"),
        Check("closed_form_vs_expm", worst_forms < 1e-10, f"max deviation {worst_forms:.2e}"),
    ]


def _check_oracle_involution(cfg: RunConfig, rng: np.random.Generator) -> Check:
    n = min(cfg.n, MAX_ENUMERATE_N)
    bad = 0
    for k in range(100):
        s = BitString(n, int(rng.integers(1, 1 << n)))
        perm = build_oracle_permutation(random_oracle(n, s, k)).perm
        if not (np.array_equal(np.sort(perm), np.arange(perm.size)) and np.array_equal(perm[perm], np.arange(perm.size))):
            bad += 1
    return Check("oracle_involution", bad == 0, f"{bad} of 100 random oracles failed")


def _check_solver(rng: np.random.Generator, cases: int = 2000) -> Check:
    bad = 0
    for _ in range(cases):
        n = int(rng.integers(1, 5))
        rows = [BitString(n, int(v)) for v in rng.integers(0, 1 << n, size=int(rng.integers(0, n + 2)))]
        sols = [s for s in all_bitstrings(n) if s and all(dot2(r, s) == 0 for r in rows)]
        got = solve_for_secret(rows, n)
        expect_unique = len(sols) == 1
        if got.is_unique != expect_unique or (expect_unique and got.secret != sols[0]):
            bad += 1
    return Check("gf2_solver_vs_exhaustive", bad == 0, f"{bad} of {cases} random systems disagree")


def _check_explicit_oracles(cfg: RunConfig) -> list[Check]:
    out = []
    for i, f in enumerate(cfg.explicit_oracles()):
        out.append(Check("is_simon_function", is_simon_function(f), f"configured oracle #{i} (s={f.secret})"))
    return out


def cmd_verify(cfg: RunConfig) -> int:
    rng = np.random.default_rng(cfg.seed)
    checks = [_check_simon_reference(cfg), _check_counts(cfg)]
    checks += _check_gates(rng)
    checks.append(_check_oracle_involution(cfg, rng))
    checks.append(_check_solver(rng))
    checks += _check_explicit_oracles(cfg)
    width = max(len(c.name) for c in checks)
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<{width}}  {c.detail}")
    failed = [c.name for c in checks if not c.passed]
    if failed:
        print(f"failed checks: {', '.join(failed)}")
        return EXIT_CHECK
    return EXIT_OK


# -- enumerate ---------------------------------------------------------------


def cmd_enumerate(cfg: RunConfig, secret: str | None = None) -> int:
    n = cfg.n
    if n > MAX_ENUMERATE_N:
        raise CapacityError(f"enumeration supports n <= {MAX_ENUMERATE_N}, got n={n}")
    secrets = [BitString.parse(secret)] if secret else [s for s in all_bitstrings(n) if s]
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    suffix = f"_s{secrets[0]}" if secret else ""
    path = out / f"oracles_n{n}{suffix}.jsonl"
    ok = True
    total = 0
    with path.open("w") as fh:
        for s in secrets:
            count = 0
            for f in enumerate_canonical_oracles(n, s):
                fh.write(json.dumps(f.to_json()) + "\n")
                count += 1
            total += count
            expected = count_per_secret(n)
            ok &= count == expected
            print(f"s={s}: {count} tables (expected {expected})")
    expected_total = count_mapping_tables(n) if not secret else count_per_secret(n)
    ok &= total == expected_total
    print(f"total: {total} tables (expected {expected_total}) -> {path}")
    return EXIT_OK if ok else EXIT_CHECK


# -- landscape ---------------------------------------------------------------


def cmd_landscape(cfg: RunConfig) -> int:
    layout = cfg.layout_for(default="fig5")
    if layout.num_params != 2:
        raise UsageError(f"landscape needs a 2-parameter layout; {layout.name} has {layout.num_params}")
    ts = cfg.training_set()
    post = Gf2PostProcessor(cfg.n)
    scan = landscape_scan(layout, ts, post, tuple(cfg.theta1), tuple(cfg.theta2), cfg.resolution)

    simon_params = np.full(2, np.pi / 4)
    simon_cost = cost(layout, simon_params, ts, post).total
    simon_cell = scan.cell_of(np.pi / 4, np.pi / 4)
    below = int(np.sum(scan.costs < simon_cost - scan.tie_tol))
    i, j = scan.argmin
    meta = metadata(cfg, layout.name)
    report = {
        **meta,
        "resolution": [len(scan.theta1), len(scan.theta2)],
        "argmin_cell": [i, j],
        "argmin_theta": [float(scan.theta1[i]), float(scan.theta2[j])],
        "min_cost": scan.min_cost,
        "near_min_cells": [list(c) for c in scan.near_min_cells()],
        "simon_point_cost": simon_cost,
        "simon_cell": list(simon_cell),
        "cells_below_simon": below,
        "simon_is_grid_min": bool(below == 0 and simon_cell in scan.near_min_cells()),
    }
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "landscape.csv").write_text(scan.to_csv(csv_header(meta)))
    write_json(out / "landscape.json", report)
    print(f"min cost {scan.min_cost:.12g} at cell {scan.argmin}; Simon-point cost {simon_cost:.12g}")
    print(f"simon_is_grid_min: {report['simon_is_grid_min']}")
    return EXIT_OK


# -- train -------------------------------------------------------------------


class _TableCost:
    """Cost of a parameter vector under a lookup table that training may swap out."""

    def __init__(self, layout: CircuitLayout, ts: TrainingSet, table: LookupTable):
        self.layout, self.ts, self.table = layout, ts, table

    def __call__(self, params: np.ndarray) -> float:
        return cost(self.layout, params, self.ts, self.table).total


def _simon_point_cost(cfg: RunConfig, ts: TrainingSet) -> float | None:
    try:
        layout = make_layout("fig5", cfg.n)
    except UsageError:
        return None
    return cost(layout, hadamard_params(layout), ts, Gf2PostProcessor(cfg.n)).total


def _trajectory_with_gradients(result, costfn: Callable, eps: float) -> Trajectory:
    traj = result.to_trajectory()
    norms = [float(np.linalg.norm(finite_diff_gradient(costfn, p, eps))) for p, _ in traj.points]
    traj.grad_norms = norms[:-1]
    traj.final_gradient_norm = norms[-1]
    traj.converged = norms[-1] < 1e-6
    return traj


def cmd_train(cfg: RunConfig) -> int:
    layout = cfg.layout_for()
    ts = cfg.training_set()
    kind, init = cfg.post_kind()
    opt = dict(cfg.optimizer)
    opt_kind = opt.pop("kind", "ga")

    if kind == "table":
        # The table hook only runs between GA generations; plain GD keeps the initial table.
        table = LookupTable.from_gf2(cfg.n, cfg.queries) if init == "oracle-seeded" else LookupTable.random(
            cfg.n, cfg.queries, cfg.seed
        )
        costfn = _TableCost(layout, ts, table)
    else:
        post = Gf2PostProcessor(cfg.n)
        costfn = cost_function(layout, ts, post)

    rng = np.random.default_rng(cfg.seed)
    if opt_kind == "gd":
        start = opt.pop("init", None)
        gd = GdConfig(**opt)
        x0 = np.asarray(start, dtype=float) if start is not None else rng.uniform(0, 2 * np.pi, layout.num_params)
        if x0.shape != (layout.num_params,):
            raise UsageError(f"init needs {layout.num_params} values")
        traj = gradient_descent(costfn, x0, gd)
        best = traj.final_params
    elif opt_kind == "ga":
        ga = GaConfig(**{"seed": cfg.seed, **opt})
        hook = _table_trainer(costfn, cfg.seed) if kind == "table" else None
        result = genetic_search(costfn, layout.num_params, ga, on_generation=hook)
        best = result.best
        traj = _trajectory_with_gradients(result, costfn, ga.fd_epsilon)
    else:
        raise UsageError(f"optimizer kind must be 'ga' or 'gd', got {opt_kind!r}")

    post_final = costfn.table if kind == "table" else Gf2PostProcessor(cfg.n)
    report = cost(layout, best, ts, post_final)
    general_ts = cfg.training_set(secrets="all")
    general = cost(layout, best, general_ts, post_final)
    simon_cost = _simon_point_cost(cfg, ts)

    meta = metadata(cfg, layout.name)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trajectory.csv").write_text(traj.to_csv(csv_header(meta)))
    write_json(out / "params.json", {**meta, "params": [float(v) for v in best], "layout_spec": layout.to_json()})
    write_json(out / "cost_report.json", {**meta, **report.to_json(), "simon_point_cost": simon_cost})
    write_json(out / "generalization.json", {**meta, **general.to_json()})
    if kind == "table":
        write_json(out / "table.json", costfn.table.to_json())
    log.info("wrote results to %s", out)
    print(f"final cost {report.total:.12g} (Simon-point cost {simon_cost})")
    for s, p in sorted(general.per_secret_p.items()):
        print(f"  p[{s}] = {p:.12g}")
    return EXIT_OK


def _table_trainer(costfn: _TableCost, seed: int) -> Callable:
    """GA hook: after each generation, TABLE_SWAP_STEPS swap steps against that generation's best agent."""

    def hook(rec) -> None:
        params = rec.params[int(np.argmin(rec.costs))]

        def table_cost(t: LookupTable) -> float:
            return cost(costfn.layout, params, costfn.ts, t).total

        costfn.table, trace = train_table(costfn.table, table_cost, TABLE_SWAP_STEPS, seed + rec.generation)
        log.info("generation %d: best %.12g, table cost %.12g", rec.generation, rec.best_cost, trace[-1])

    return hook


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simonlearn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", type=str, help="output directory")
    common.add_argument("--n", type=int, help="number of input bits")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("verify", parents=[common], help="run the invariant suite")
    en = sub.add_parser("enumerate", parents=[common], help="write all canonical oracle tables")
    en.add_argument("--s", dest="secret", help="restrict to one secret, e.g. 11")
    sub.add_parser("landscape", parents=[common], help="scan the cost over a 2-parameter layout")
    sub.add_parser("train", parents=[common], help="optimise circuit parameters")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    raw: dict = {}
    if args.config is not None:
        try:
            raw = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    for key, value in (("seed", args.seed), ("output_dir", args.out), ("n", args.n)):
        if value is not None:
            raw[key] = value
    try:
        return RunConfig.from_dict(raw)
    except TypeError as exc:
        raise UsageError(str(exc)) from exc


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "enumerate":
            return cmd_enumerate(cfg, args.secret)
        if args.command == "landscape":
            return cmd_landscape(cfg)
        return cmd_train(cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
