import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from simonlearn.errors import UsageError
from simonlearn.gf2 import BitString, all_bitstrings
from simonlearn.oracle import build_oracle_permutation, canonical_oracle, enumerate_canonical_oracles, random_oracle
from simonlearn.simulator import (
    GENERAL_1Q,
    GENERAL_2Q,
    HADAMARD,
    CircuitLayout,
    GateSpec,
    apply_layer,
    apply_oracle,
    fig4_layout,
    fig5_layout,
    fig6_layout,
    final_state,
    general_one_qubit_gate,
    general_two_qubit_gate,
    hadamard_params,
    make_layout,
    marginal_distribution,
    output_distribution,
    restricted_gate,
    simon_reference_distribution,
    zero_state,
)

from conftest import PAULI, dense_distribution, taylor_expm

B = BitString.parse
angles = st.floats(0, 2 * np.pi, allow_nan=False)


def assert_unitary(u, tol=1e-10):
    assert np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) < tol


def test_restricted_gate_examples():
    assert np.allclose(restricted_gate(np.pi / 4), HADAMARD, atol=1e-15)
    assert np.allclose(restricted_gate(0.0), PAULI[3])
    assert np.allclose(restricted_gate(np.pi / 2), PAULI[1], atol=1e-15)


def test_restricted_gate_involution_100_random(rng):
    for theta in rng.uniform(0, 2 * np.pi, 100):
        g = restricted_gate(theta)
        assert np.max(np.abs(g @ g - np.eye(2))) < 1e-10
        assert_unitary(g)
        assert np.all(g.imag == 0)


def test_general_one_qubit_examples():
    assert np.allclose(general_one_qubit_gate([0, 0, 0, 0]), np.eye(2))
    assert np.allclose(general_one_qubit_gate([0, np.pi / 2, 0, 0]), 1j * PAULI[1], atol=1e-15)


def test_general_one_qubit_matches_series_exponential(rng):
    for alpha in rng.uniform(0, 2 * np.pi, (100, 4)):
        gen = sum(a * p for a, p in zip(alpha, PAULI))
        u = general_one_qubit_gate(alpha)
        assert np.max(np.abs(u - taylor_expm(1j * gen))) < 1e-10
        assert_unitary(u)


def test_general_one_qubit_small_omega_limit():
    alpha = [0.3, 1e-10, -2e-10, 5e-11]
    gen = sum(a * p for a, p in zip(alpha, PAULI))
    assert np.max(np.abs(general_one_qubit_gate(alpha) - scipy.linalg.expm(1j * gen))) < 1e-12


def test_general_two_qubit_examples():
    zero = np.zeros(16)
    assert np.allclose(general_two_qubit_gate(zero), np.eye(4))
    a = zero.copy()
    a[0] = 0.7
    assert np.allclose(general_two_qubit_gate(a), np.exp(0.7j) * np.eye(4))
    a = zero.copy()
    a[1 * 4 + 1] = np.pi / 2
    # exp(i t P) = cos t + i sin t P for an involution P
    xx = np.kron(PAULI[1], PAULI[1])
    assert np.allclose(general_two_qubit_gate(a), 1j * xx, atol=1e-14)


def test_general_two_qubit_unitary_and_matches_series(rng):
    for alpha in rng.uniform(0, 2 * np.pi, (50, 16)):
        u = general_two_qubit_gate(alpha)
        assert_unitary(u)
        h = sum(alpha[4 * j + k] * np.kron(PAULI[j], PAULI[k]) for j in range(4) for k in range(4))
        assert np.max(np.abs(u - taylor_expm(1j * h))) < 1e-9


def test_layers_identity_and_hadamard():
    layout = fig5_layout(2, GENERAL_1Q)
    psi = zero_state(2)
    out = apply_layer(psi, layout, layout.pre_layer, np.zeros(8))
    assert np.allclose(out, psi)

    layout = fig5_layout(2)
    out = apply_layer(psi, layout, layout.pre_layer, np.array([np.pi / 4, 0.0]))
    expected = np.zeros(16)
    for x in range(4):
        expected[x * 4] = 0.5
    assert np.allclose(out, expected)


def test_layer_preserves_norm(rng):
    layout = fig4_layout(2, GENERAL_1Q)
    for _ in range(20):
        psi = rng.normal(size=16) + 1j * rng.normal(size=16)
        psi /= np.linalg.norm(psi)
        out = apply_layer(psi, layout, layout.post_layer, rng.uniform(0, 2 * np.pi, layout.num_params))
        assert abs(np.linalg.norm(out) - 1) < 1e-12


def test_gate_outside_first_register_rejected():
    with pytest.raises(UsageError):
        CircuitLayout(2, (GateSpec((2,), "restricted", 0),), (), {0: 0})
    with pytest.raises(UsageError):
        CircuitLayout(2, (GateSpec((0,), "restricted", 0),), (), {})


def test_apply_oracle_basis_and_involution(rng):
    f = canonical_oracle(2, B("11"), 4)
    perm = build_oracle_permutation(f)
    for x in range(4):
        psi = np.zeros(16, dtype=complex)
        psi[x * 4] = 1
        out = apply_oracle(psi, perm)
        assert out[x * 4 + f.table[x]] == 1
    psi = rng.normal(size=16) + 1j * rng.normal(size=16)
    assert np.allclose(apply_oracle(apply_oracle(psi, perm), perm), psi)
    assert np.isclose(np.linalg.norm(apply_oracle(psi, perm)), np.linalg.norm(psi))
    with pytest.raises(UsageError):
        apply_oracle(np.zeros(8), perm)


def test_output_distribution_examples():
    f = canonical_oracle(2, B("11"))
    layout = fig4_layout(2)
    d = output_distribution(layout, hadamard_params(layout), f)
    assert np.allclose(d.probs, [0.5, 0, 0, 0.5], atol=1e-12)
    d0 = output_distribution(layout, np.zeros(3), f)
    assert np.allclose(d0.probs, [1, 0, 0, 0])


@pytest.mark.parametrize("n, layout_fn, family", [
    (2, fig4_layout, "restricted"),
    (2, fig5_layout, GENERAL_1Q),
    (3, fig6_layout, "restricted"),
    (3, fig4_layout, GENERAL_1Q),
    (2, make_layout, GENERAL_2Q),
    (3, make_layout, GENERAL_2Q),
])
def test_output_distribution_matches_dense_matrix_oracle(n, layout_fn, family, rng):
    layout = layout_fn("fig5", n, family) if layout_fn is make_layout else layout_fn(n, family)
    for k in range(10):
        s = BitString(n, int(rng.integers(1, 1 << n)))
        f = random_oracle(n, s, k)
        params = rng.uniform(0, 2 * np.pi, layout.num_params)
        fast = output_distribution(layout, params, f).probs
        assert np.max(np.abs(fast - dense_distribution(layout, params, f))) < 1e-12
        full = marginal_distribution(final_state(layout, params, f), n).probs
        assert np.max(np.abs(fast - full)) < 1e-12
        assert abs(fast.sum() - 1) < 1e-12 and fast.min() > -1e-15


@pytest.mark.parametrize("n", [2, 3])
def test_simon_point_reproduces_reference_for_every_oracle(n):
    layout = fig5_layout(n)
    params = hadamard_params(layout)
    for s in all_bitstrings(n):
        if not s:
            continue
        ref = simon_reference_distribution(n, s).probs
        for f in enumerate_canonical_oracles(n, s):
            assert np.max(np.abs(output_distribution(layout, params, f).probs - ref)) < 1e-9


def test_reference_distribution_examples():
    assert np.allclose(simon_reference_distribution(2, B("11")).probs, [0.5, 0, 0, 0.5])
    d = simon_reference_distribution(3, B("111"))
    assert {format(y, "03b") for y, p in enumerate(d.probs) if p} == {"000", "011", "101", "110"}
    assert np.allclose(d.probs[d.probs > 0], 0.25)
    assert np.allclose(simon_reference_distribution(2, B("01")).probs, [0.5, 0, 0.5, 0])
    with pytest.raises(UsageError):
        simon_reference_distribution(2, B("00"))


@settings(max_examples=50, deadline=None)
@given(st.lists(angles, min_size=12, max_size=12), angles, st.integers(0, 11))
def test_global_phase_invariance(params, shift, which):
    layout = fig4_layout(2, GENERAL_1Q)
    f = canonical_oracle(2, B("01"), 2)
    p = np.array(params)
    base = output_distribution(layout, p, f).probs
    q = p.copy()
    q[(which // 4) * 4] += shift
    assert np.max(np.abs(output_distribution(layout, q, f).probs - base)) < 1e-12


def test_distribution_csv():
    d = simon_reference_distribution(2, B("11"))
    lines = d.to_csv().splitlines()
    assert lines[0] == "y,prob"
    assert lines[1] == "00,0.5" and lines[4] == "11,0.5"


def test_layout_json_roundtrip():
    layout = fig6_layout(3)
    assert CircuitLayout.from_json(layout.to_json()) == layout
    assert layout.num_params == 3


def test_param_count_mismatch():
    with pytest.raises(UsageError):
        output_distribution(fig4_layout(2), np.zeros(2), canonical_oracle(2, B("11")))
