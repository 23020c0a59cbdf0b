"""Independent reference implementations used as test oracles.

None of these share code paths with the library beyond its data types:
the dense simulator builds explicit 4^n x 4^n matrices with np.kron, the
success probability is enumerated tuple by tuple, and the matrix
exponential is a truncated Taylor series with scaling and squaring.
"""

import itertools

import numpy as np
import pytest

from simonlearn.gf2 import BitString, all_bitstrings, dot2

PAULI = [
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]


def taylor_expm(a, terms=30):
    """exp(a) by scaling to norm < 0.5, a Taylor sum, then repeated squaring."""
    a = np.asarray(a, dtype=complex)
    norm = np.linalg.norm(a, 1)
    k = max(0, int(np.ceil(np.log2(norm / 0.5)))) if norm > 0.5 else 0
    b = a / (2**k)
    out = np.eye(a.shape[0], dtype=complex)
    term = np.eye(a.shape[0], dtype=complex)
    for i in range(1, terms):
        term = term @ b / i
        out = out + term
    for _ in range(k):
        out = out @ out
    return out


def dense_gate(n_total, gate, qubits):
    """Embed a 1- or 2-qubit gate into the full register by Kronecker products."""
    if len(qubits) == 1:
        mats = [np.eye(2)] * n_total
        mats = list(mats)
        mats[qubits[0]] = gate
        out = np.eye(1)
        for m in mats:
            out = np.kron(out, m)
        return out
    q0, q1 = qubits
    assert q1 == q0 + 1
    out = np.eye(1)
    q = 0
    while q < n_total:
        if q == q0:
            out = np.kron(out, gate)
            q += 2
        else:
            out = np.kron(out, np.eye(2))
            q += 1
    return out


def dense_oracle(f):
    n = f.n
    size = 1 << n
    u = np.zeros((size * size, size * size))
    for x in range(size):
        for b in range(size):
            u[x * size + (b ^ f.table[x]), x * size + b] = 1.0
    return u


def dense_distribution(layout, params, f):
    """First-register distribution from explicit full-register matrices."""
    n = layout.n
    total = 2 * n
    psi = np.zeros(1 << total, dtype=complex)
    psi[0] = 1.0
    for g in layout.pre_layer:
        psi = dense_gate(total, layout.gate_matrix(g, np.asarray(params, float)), g.qubits) @ psi
    psi = dense_oracle(f) @ psi
    for g in layout.post_layer:
        psi = dense_gate(total, layout.gate_matrix(g, np.asarray(params, float)), g.qubits) @ psi
    size = 1 << n
    return (np.abs(psi) ** 2).reshape(size, size).sum(axis=1)


def brute_force_secret(rows, n):
    """All nonzero s orthogonal to every row."""
    return [s for s in all_bitstrings(n) if s and all(dot2(r, s) == 0 for r in rows)]


def brute_force_success(probs, J, secret, post):
    """Success probability by walking every ordered J-tuple of outcomes."""
    n = secret.width
    total = 0.0
    for ys in itertools.product(range(1 << n), repeat=J):
        guess = post([BitString(n, y) for y in ys])
        if guess.secret == secret:
            total += float(np.prod([probs[y] for y in ys]))
    return total


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
