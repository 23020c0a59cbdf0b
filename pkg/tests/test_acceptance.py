"""End-to-end acceptance checks; each test prints one PASS/FAIL line."""

import itertools
import json
import math
import time

import numpy as np
import pytest
import scipy.linalg

from simonlearn.cli import main
from simonlearn.cost import TrainingSet, cost, cost_function, mc_success_probability, success_probability
from simonlearn.gf2 import BitString, all_bitstrings, solve_for_secret
from simonlearn.optimize import GaConfig, finite_diff_gradient, genetic_search, landscape_scan
from simonlearn.oracle import canonical_oracle, count_mapping_tables, enumerate_canonical_oracles
from simonlearn.postprocess import FAILURE, Gf2PostProcessor, Guess, LookupTable, train_table
from simonlearn.simulator import (
    GENERAL_1Q,
    PAULIS,
    fig4_layout,
    fig5_layout,
    general_one_qubit_gate,
    general_two_qubit_gate,
    hadamard_params,
    output_distribution,
    restricted_gate,
    simon_reference_distribution,
)

from conftest import brute_force_secret, brute_force_success

B = BitString.parse
SEEDS = range(5)


def report(capsys, number, passed, detail):
    with capsys.disabled():
        print(f"\nCRITERION {number}: {'PASS' if passed else 'FAIL'} - {detail}")
    assert passed, detail


def nonzero(n):
    return [s for s in all_bitstrings(n) if s]


def simon_cost(n, ts):
    layout = fig5_layout(n)
    return cost(layout, hadamard_params(layout), ts, Gf2PostProcessor(n)).total


def max_reference_deviation(layout, params, n):
    worst = 0.0
    for s in nonzero(n):
        probs = output_distribution(layout, params, canonical_oracle(n, s)).probs
        worst = max(worst, float(np.max(np.abs(probs - simon_reference_distribution(n, s).probs))))
    return worst


def test_criterion_1_simon_reproduction(capsys):
    start = time.perf_counter()
    worst, count = 0.0, 0
    for n in (2, 3):
        layout = fig5_layout(n)
        params = hadamard_params(layout)
        for s in nonzero(n):
            ref = np.array([0.5 ** (n - 1) if bin(y & s.bits).count("1") % 2 == 0 else 0.0 for y in range(2**n)])
            for f in enumerate_canonical_oracles(n, s):
                worst = max(worst, float(np.max(np.abs(output_distribution(layout, params, f).probs - ref))))
                count += 1
    elapsed = time.perf_counter() - start
    report(capsys, 1, worst < 1e-9 and elapsed < 10, f"{count} oracles, max deviation {worst:.1e}, {elapsed:.2f}s")


def test_criterion_2_counting(capsys):
    n2 = sum(1 for _ in enumerate_canonical_oracles(2, B("11")))
    n3 = {str(s): sum(1 for _ in enumerate_canonical_oracles(3, s)) for s in nonzero(3)}
    total2 = sum(sum(1 for _ in enumerate_canonical_oracles(2, s)) for s in nonzero(2))
    total3 = sum(n3.values())
    formula = [(2**n - 1) * math.comb(2**n, 2 ** (n - 1)) for n in (2, 3)]
    ok = n2 == 6 and set(n3.values()) == {70} and [total2, total3] == [18, 490] == formula
    ok &= [count_mapping_tables(2), count_mapping_tables(3)] == formula
    report(capsys, 2, ok, f"n=2,s=11: {n2}; n=3 per s: {sorted(set(n3.values()))}; totals {total2}, {total3}")


def test_criterion_3_landscape(capsys):
    start = time.perf_counter()
    layout = fig5_layout(2)
    ts = TrainingSet.build(2, 2)
    scan = landscape_scan(layout, ts, Gf2PostProcessor(2), resolution=64)
    elapsed = time.perf_counter() - start
    target = simon_cost(2, ts)
    simon_cell = scan.cell_of(np.pi / 4, np.pi / 4)
    below = int(np.sum(scan.costs < target - 1e-9))
    ok = scan.argmin == simon_cell and below == 0 and elapsed < 300
    report(
        capsys, 3, ok,
        f"argmin {scan.argmin}, Simon cell {simon_cell}, min {scan.min_cost:.12g}, "
        f"Simon cost {target:.12g}, {below} cells below, {elapsed:.1f}s",
    )


def test_criterion_4_exact_pipeline_value(capsys):
    layout = fig5_layout(2)
    params = hadamard_params(layout)
    f = canonical_oracle(2, B("11"))
    post = Gf2PostProcessor(2)
    p = success_probability(layout, params, f, 2, post)
    c = cost(layout, params, TrainingSet.build(2, 2, ["11"]), post).total
    probs = output_distribution(layout, params, f).probs
    # independent route: enumerate every 2-tuple and solve by exhaustive candidate search
    def brute_post(ys):
        cands = brute_force_secret(list(ys), 2)
        return Guess(cands[0]) if len(cands) == 1 else FAILURE

    brute = brute_force_success(probs, 2, B("11"), brute_post)
    ok = abs(p - 0.75) <= 1e-12 and abs(c - 0.0625) <= 1e-12 and abs(brute - p) <= 1e-12
    report(capsys, 4, ok, f"p={p!r}, cost={c!r}, brute-force p={brute!r}")


@pytest.fixture(scope="module")
def single_secret_runs():
    """GA with defaults on fig4 / n=2 / s=11 for each seed, restricted and general gates."""
    ts = TrainingSet.build(2, 2, ["11"])
    out = {}
    for family in ("restricted", GENERAL_1Q):
        layout = fig4_layout(2, family)
        costfn = cost_function(layout, ts)
        start = time.perf_counter()
        runs = [genetic_search(costfn, layout.num_params, GaConfig(seed=seed)) for seed in SEEDS]
        out[family] = (layout, runs, time.perf_counter() - start)
    return ts, out


def _criterion_5_choice(single_secret_runs):
    ts, out = single_secret_runs
    layout, runs, elapsed = out["restricted"]
    target = simon_cost(2, ts)
    rows = [(r.best_cost, max_reference_deviation(layout, r.best, 2), r) for r in runs]
    good = [row for row in rows if abs(row[0] - target) <= 1e-6 and row[1] <= 1e-6]
    near = [row for row in rows if abs(row[0] - target) <= 1e-6]
    chosen = (good or near or sorted(rows, key=lambda row: row[0]))[0]
    return layout, target, rows, good, chosen, elapsed


def test_criterion_5_training_recovery(capsys, single_secret_runs):
    layout, target, rows, good, chosen, elapsed = _criterion_5_choice(single_secret_runs)
    summary = ", ".join(f"cost {c:.3g} dev {d:.2g}" for c, d, _ in rows)
    report(capsys, 5, bool(good) and elapsed < 600, f"Simon cost {target:.6g}; seeds: {summary}; {elapsed:.0f}s")


def test_criterion_6_general_gate_parity(capsys, single_secret_runs):
    ts, out = single_secret_runs
    _, runs, elapsed = out[GENERAL_1Q]
    target = simon_cost(2, ts)
    best = min(r.best_cost for r in runs)
    ok = abs(best - target) <= 1e-6
    costs = ", ".join(f"{r.best_cost:.3g}" for r in runs)
    report(capsys, 6, ok, f"Simon cost {target:.6g}; general-gate seed costs {costs}; {elapsed:.0f}s")


def test_criterion_7_n3_training(capsys, tmp_path):
    start = time.perf_counter()
    results = []
    for seed in range(10):
        out = tmp_path / f"seed{seed}"
        code = main(["train", "--n", "3", "--seed", str(seed), "--out", str(out)])
        rep = json.loads((out / "cost_report.json").read_text())
        csv_ok = (out / "trajectory.csv").read_text().count("\n") > 2
        results.append((code, rep["total"], rep["simon_point_cost"], csv_ok))
    elapsed = time.perf_counter() - start
    hits = [seed for seed, (code, c, t, csv_ok) in enumerate(results) if code == 0 and csv_ok and abs(c - t) <= 1e-6]
    target = results[0][2]
    costs = ", ".join(f"{c:.10g}" for _, c, _, _ in results)
    ok = bool(hits) and all(r[3] for r in results) and elapsed < 1800
    report(capsys, 7, ok, f"Simon cost {target:.10g}; seeds within 1e-6: {hits}; costs {costs}; {elapsed:.0f}s")


def test_criterion_8_single_secret_generalization(capsys, single_secret_runs):
    layout, _, _, _, chosen, _ = _criterion_5_choice(single_secret_runs)
    params = chosen[2].best
    rep = cost(layout, params, TrainingSet.build(2, 2), Gf2PostProcessor(2))
    ps = {str(s): p for s, p in rep.per_secret_p.items()}
    spread = max(ps.values()) - min(ps.values())
    report(capsys, 8, spread <= 1e-9, f"p per secret {ps}, spread {spread:.3g}")


def test_criterion_9_property_suites(capsys):
    rng = np.random.default_rng(2024)
    results = {}

    worst_u = worst_inv = 0.0
    for _ in range(200):
        g = restricted_gate(rng.uniform(0, 2 * np.pi))
        worst_inv = max(worst_inv, np.max(np.abs(g @ g - np.eye(2))))
        for u in (g, general_one_qubit_gate(rng.uniform(0, 2 * np.pi, 4)), general_two_qubit_gate(rng.uniform(0, 2 * np.pi, 16))):
            worst_u = max(worst_u, np.max(np.abs(u.conj().T @ u - np.eye(len(u)))))
    results["unitarity/involution"] = worst_u < 1e-10 and worst_inv < 1e-10

    worst = 0.0
    for _ in range(200):
        alpha = rng.uniform(0, 2 * np.pi, 4)
        gen = sum(a * p for a, p in zip(alpha, PAULIS))
        worst = max(worst, np.max(np.abs(general_one_qubit_gate(alpha) - scipy.linalg.expm(1j * gen))))
    results["closed form vs expm"] = worst < 1e-10

    agree = True
    for _ in range(10_000):
        n = int(rng.integers(1, 5))
        rows = [BitString(n, int(v)) for v in rng.integers(0, 1 << n, size=int(rng.integers(0, n + 2)))]
        cands = brute_force_secret(rows, n)
        sol = solve_for_secret(rows, n)
        agree &= sol.is_unique == (len(cands) == 1) and (not sol.is_unique or sol.secret == cands[0])
    results["GF(2) vs exhaustive"] = agree

    layout, ts = fig4_layout(2), TrainingSet.build(2, 2)
    params = rng.uniform(0, 2 * np.pi, 3)
    _, trace = train_table(LookupTable.random(2, 2, seed=1), lambda t: cost(layout, params, ts, t).total, 300, seed=2)
    results["table training monotone"] = all(b <= a for a, b in zip(trace, trace[1:]))

    quad_ok = True
    for _ in range(20):
        a = rng.normal(size=(3, 3))
        q, lin = a @ a.T, rng.normal(size=3)
        x = rng.normal(size=3)
        fd = finite_diff_gradient(lambda p: float(p @ q @ p / 2 + lin @ p), x)
        quad_ok &= bool(np.max(np.abs(fd - (q @ x + lin))) < 1e-6)
    results["FD gradient vs analytic"] = quad_ok

    post = Gf2PostProcessor(2)
    mc_ok = True
    for k, s in enumerate(itertools.islice(itertools.cycle(nonzero(2)), 6)):
        lay = fig4_layout(2, GENERAL_1Q)
        p = rng.uniform(0, 2 * np.pi, lay.num_params)
        f = canonical_oracle(2, s, k)
        exact = success_probability(lay, p, f, 2, post)
        est = mc_success_probability(lay, p, f, 2, post, 100_000, seed=k)
        mc_ok &= abs(est - exact) <= 4 * math.sqrt(max(exact * (1 - exact), 1e-12) / 100_000) + 1e-12
    results["Monte Carlo vs exact"] = bool(mc_ok)

    failed = [k for k, v in results.items() if not v]
    report(capsys, 9, not failed, "all suites pass" if not failed else f"failed: {failed}")
