"""Dense statevector simulation of the trainable Simon-style circuit.

The register layout is 2n qubits: the first n carry the function input and
are measured, the last n receive f(x) from the oracle.  Amplitudes live in a
flat array indexed by ``x * 2**n + b`` (first register most significant),
and within a register qubit 0 is the leftmost, most significant bit.

Trainable gates only ever touch the first register.  A circuit is

    |0>^(2n) -> pre layer -> oracle -> post layer -> measure first register

and the gates in each layer draw their parameters from a flat parameter
vector through a tying map, so several gates can share one angle.
"""

from __future__ import annotations

import cmath
import functools
import io
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import CapacityError, UsageError
from .gf2 import BitString
from .oracle import MappingTable, OraclePermutation, build_oracle_permutation

MAX_SIM_N = 6
OMEGA_EPS = 1e-8

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, SX, SY, SZ)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)

RESTRICTED = "restricted"
GENERAL_1Q = "general1q"
GENERAL_2Q = "general2q"

PARAM_COUNT = {RESTRICTED: 1, GENERAL_1Q: 4, GENERAL_2Q: 16}
GATE_ARITY = {RESTRICTED: 1, GENERAL_1Q: 1, GENERAL_2Q: 2}


# -- gates -------------------------------------------------------------------


def restricted_gate(theta: float) -> np.ndarray:
    """G(theta) = cos(theta) Z + sin(theta) X; the Hadamard at theta = pi/4."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [s, -c]], dtype=complex)


def general_one_qubit_gate(alpha: Sequence[float]) -> np.ndarray:
    """exp(i * sum_j alpha_j sigma_j) evaluated in closed form.

    Uses e^{i a0} (cos W * 1 + i sin(W)/W * (a1 X + a2 Y + a3 Z)) with
    W = |(a1, a2, a3)|; sin(W)/W is replaced by 1 when W < 1e-8.
    """
    a0, a1, a2, a3 = (float(a) for a in alpha)
    omega = math.sqrt(a1 * a1 + a2 * a2 + a3 * a3)
    sinc = 1.0 if omega < OMEGA_EPS else math.sin(omega) / omega
    c = math.cos(omega)
    phase = cmath.exp(1j * a0)
    # i * sinc * (a1 X + a2 Y + a3 Z), written out entrywise
    return phase * np.array(
        [
            [c + 1j * sinc * a3, sinc * (a2 + 1j * a1)],
            [sinc * (-a2 + 1j * a1), c - 1j * sinc * a3],
        ],
        dtype=complex,
    )


def two_qubit_generator(alpha: Sequence[float] | np.ndarray) -> np.ndarray:
    """Hermitian sum_{j,k} alpha_{j,k} sigma_j (x) sigma_k; ``alpha`` is 16 reals, row-major in (j, k)."""
    a = np.asarray(alpha, dtype=float).reshape(4, 4)
    h = np.zeros((4, 4), dtype=complex)
    for j in range(4):
        for k in range(4):
            if a[j, k]:
                h += a[j, k] * np.kron(PAULIS[j], PAULIS[k])
    return h


def general_two_qubit_gate(alpha: Sequence[float] | np.ndarray) -> np.ndarray:
    """exp(i H) for the two-qubit Pauli generator H, via eigendecomposition."""
    w, v = np.linalg.eigh(two_qubit_generator(alpha))
    return (v * np.exp(1j * w)) @ v.conj().T


GATE_BUILDERS = {
    RESTRICTED: lambda p: restricted_gate(p[0]),
    GENERAL_1Q: general_one_qubit_gate,
    GENERAL_2Q: general_two_qubit_gate,
}


# -- layouts -----------------------------------------------------------------


@dataclass(frozen=True)
class GateSpec:
    """One gate in a layer: the first-register qubits it acts on, its kind, and its label."""

    qubits: tuple[int, ...]
    kind: str
    label: int


@dataclass(frozen=True)
class CircuitLayout:
    """Gate placement before/after the oracle plus the parameter-tying map.

    ``tying`` maps every gate label to a shared-parameter group id.  The
    parameter vector is the concatenation of one block per group, in
    ascending group id, each block sized for that group's gate kind.
    """

    n: int
    pre_layer: tuple[GateSpec, ...]
    post_layer: tuple[GateSpec, ...]
    tying: Mapping[int, int]
    name: str = "custom"
    _offsets: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        if not 1 <= self.n <= MAX_SIM_N:
            raise CapacityError(f"simulation supports 1 <= n <= {MAX_SIM_N}, got {self.n}")
        group_kind: dict[int, str] = {}
        for g in self.pre_layer + self.post_layer:
            if g.kind not in PARAM_COUNT:
                raise UsageError(f"unknown gate kind {g.kind!r}")
            if len(g.qubits) != GATE_ARITY[g.kind]:
                raise UsageError(f"{g.kind} gate needs {GATE_ARITY[g.kind]} qubit(s), got {g.qubits}")
            if len(set(g.qubits)) != len(g.qubits):
                raise UsageError(f"repeated qubit in {g.qubits}")
            for q in g.qubits:
                if not 0 <= q < self.n:
                    raise UsageError(f"qubit slot {q} outside first register of size {self.n}")
            if g.label not in self.tying:
                raise UsageError(f"gate label {g.label} missing from tying map")
            grp = self.tying[g.label]
            if group_kind.setdefault(grp, g.kind) != g.kind:
                raise UsageError(f"group {grp} mixes gate kinds")
        offsets, pos = {}, 0
        for grp in sorted(group_kind):
            offsets[grp] = (pos, PARAM_COUNT[group_kind[grp]])
            pos += PARAM_COUNT[group_kind[grp]]
        object.__setattr__(self, "_offsets", offsets)

    @property
    def num_params(self) -> int:
        return sum(size for _, size in self._offsets.values())

    def __hash__(self) -> int:
        return hash((self.n, self.pre_layer, self.post_layer, tuple(sorted(self.tying.items())), self.name))

    def gate_params(self, gate: GateSpec, params: np.ndarray) -> np.ndarray:
        start, size = self._offsets[self.tying[gate.label]]
        return params[start:start + size]

    def gate_matrix(self, gate: GateSpec, params: np.ndarray) -> np.ndarray:
        return GATE_BUILDERS[gate.kind](self.gate_params(gate, params))

    def to_json(self) -> dict:
        def layer(gates):
            return [{"qubits": list(g.qubits), "kind": g.kind, "label": g.label} for g in gates]

        return {
            "n": self.n,
            "name": self.name,
            "pre_layer": layer(self.pre_layer),
            "post_layer": layer(self.post_layer),
            "tying": {str(k): v for k, v in sorted(self.tying.items())},
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CircuitLayout":
        def layer(items):
            return tuple(GateSpec(tuple(g["qubits"]), g["kind"], int(g["label"])) for g in items)

        return cls(
            n=int(obj["n"]),
            pre_layer=layer(obj["pre_layer"]),
            post_layer=layer(obj["post_layer"]),
            tying={int(k): int(v) for k, v in obj["tying"].items()},
            name=obj.get("name", "custom"),
        )


def _single_qubit_layer(n: int, kind: str, first_label: int) -> tuple[GateSpec, ...]:
    return tuple(GateSpec((q,), kind, first_label + q) for q in range(n))


def _pair_layer(n: int, first_label: int) -> tuple[GateSpec, ...]:
    gates = []
    for q in range(0, n - 1, 2):
        gates.append(GateSpec((q, q + 1), GENERAL_2Q, first_label + len(gates)))
    if n % 2:
        gates.append(GateSpec((n - 1,), GENERAL_1Q, first_label + len(gates)))
    return tuple(gates)


def fig4_layout(n: int = 2, family: str = RESTRICTED) -> CircuitLayout:
    """Independent pre-layer angle per qubit, one angle shared by the whole post layer."""
    _single_qubit_family(family)
    pre = _single_qubit_layer(n, family, 0)
    post = _single_qubit_layer(n, family, n)
    tying = {q: q for q in range(n)}
    tying.update({n + q: n for q in range(n)})
    return CircuitLayout(n, pre, post, tying, name="fig4")


def fig5_layout(n: int = 2, family: str = RESTRICTED) -> CircuitLayout:
    """One angle for the whole pre layer and one for the whole post layer."""
    _single_qubit_family(family)
    pre = _single_qubit_layer(n, family, 0)
    post = _single_qubit_layer(n, family, n)
    tying = {q: 0 for q in range(n)}
    tying.update({n + q: 1 for q in range(n)})
    return CircuitLayout(n, pre, post, tying, name="fig5")


def fig6_layout(n: int = 3, family: str = RESTRICTED) -> CircuitLayout:
    """Three angles: shared pre (qubits 2..n), shared post, and a separate pre angle on qubit 1."""
    _single_qubit_family(family)
    if n < 2:
        raise UsageError("fig6 layout needs n >= 2")
    pre = _single_qubit_layer(n, family, 0)
    post = _single_qubit_layer(n, family, n)
    tying = {0: 2}
    tying.update({q: 0 for q in range(1, n)})
    tying.update({n + q: 1 for q in range(n)})
    return CircuitLayout(n, pre, post, tying, name="fig6")


def pairwise_layout(n: int = 2) -> CircuitLayout:
    """General two-qubit gates on neighbouring pairs before and after the oracle, all untied."""
    pre = _pair_layer(n, 0)
    post = _pair_layer(n, len(pre))
    tying = {g.label: g.label for g in pre + post}
    return CircuitLayout(n, pre, post, tying, name="pairwise")


def _single_qubit_family(family: str) -> None:
    if family not in (RESTRICTED, GENERAL_1Q):
        raise UsageError(f"layout needs a single-qubit gate family, got {family!r}")


LAYOUTS = {"fig4": fig4_layout, "fig5": fig5_layout, "fig6": fig6_layout}


def make_layout(name: str, n: int, family: str = RESTRICTED) -> CircuitLayout:
    if family == GENERAL_2Q:
        return pairwise_layout(n)
    try:
        return LAYOUTS[name](n, family)
    except KeyError:
        raise UsageError(f"unknown layout {name!r}") from None


def hadamard_params(layout: CircuitLayout) -> np.ndarray:
    """Parameters that turn every restricted gate into a Hadamard (the Simon point)."""
    kinds = {layout.tying[g.label]: g.kind for g in layout.pre_layer + layout.post_layer}
    if any(k != RESTRICTED for k in kinds.values()):
        raise UsageError("the Simon point is only defined here for restricted layouts")
    return np.full(layout.num_params, np.pi / 4)


# -- evolution ---------------------------------------------------------------


def zero_state(n: int) -> np.ndarray:
    psi = np.zeros(1 << (2 * n), dtype=complex)
    psi[0] = 1.0
    return psi


def apply_gate(state: np.ndarray, matrix: np.ndarray, qubits: Sequence[int], total_qubits: int) -> np.ndarray:
    """Contract a k-qubit gate into the leading axis of ``state`` on the given qubits.

    The leading axis has length 2**total_qubits; any trailing axes (e.g. the
    columns of an operator being built up) are carried along unchanged.
    """
    k = len(qubits)
    rest = state.shape[1:]
    tensor = state.reshape((2,) * total_qubits + rest)
    gate = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(gate, tensor, axes=(list(range(k, 2 * k)), list(qubits)))
    return np.moveaxis(out, list(range(k)), list(qubits)).reshape(state.shape)


def apply_layer(state: np.ndarray, layout: CircuitLayout, layer: Sequence[GateSpec], params: np.ndarray) -> np.ndarray:
    n = layout.n
    if state.shape != (1 << (2 * n),):
        raise UsageError(f"state has shape {state.shape}, expected ({1 << (2 * n)},)")
    for gate in layer:
        if any(not 0 <= q < n for q in gate.qubits):
            raise UsageError(f"gate {gate} leaves the first register")
        state = apply_gate(state, layout.gate_matrix(gate, params), gate.qubits, 2 * n)
    return state


def apply_oracle(state: np.ndarray, oracle: OraclePermutation) -> np.ndarray:
    if state.shape != (oracle.dim,):
        raise UsageError(f"state of length {state.shape[0] if state.ndim else 0} does not match oracle dim {oracle.dim}")
    out = np.empty_like(state)
    out[oracle.perm] = state
    return out


@functools.lru_cache(maxsize=4096)
def _cached_permutation(f: MappingTable) -> OraclePermutation:
    return build_oracle_permutation(f)


def final_state(layout: CircuitLayout, params: np.ndarray, f: MappingTable) -> np.ndarray:
    """Full 2n-qubit statevector at the end of the circuit."""
    _check_inputs(layout, params, f)
    params = np.asarray(params, dtype=float)
    psi = apply_layer(zero_state(layout.n), layout, layout.pre_layer, params)
    psi = apply_oracle(psi, _cached_permutation(f))
    return apply_layer(psi, layout, layout.post_layer, params)


def _check_inputs(layout: CircuitLayout, params: np.ndarray, f: MappingTable) -> None:
    if f.n != layout.n:
        raise UsageError(f"oracle n={f.n} does not match layout n={layout.n}")
    shape = np.shape(params)
    if shape != (layout.num_params,):
        raise UsageError(f"layout needs {layout.num_params} parameters, got shape {shape}")


def layer_unitary(layout: CircuitLayout, layer: Sequence[GateSpec], params: np.ndarray) -> np.ndarray:
    """The 2^n x 2^n operator a layer applies to the first register."""
    n = layout.n
    mats: dict[int, np.ndarray] = {}
    u = np.eye(1 << n, dtype=complex)
    for gate in layer:
        grp = layout.tying[gate.label]
        if grp not in mats:
            mats[grp] = layout.gate_matrix(gate, params)
        u = apply_gate(u, mats[grp], gate.qubits, n)
    return u


@functools.lru_cache(maxsize=4096)
def _image_indicator(f: MappingTable) -> np.ndarray:
    size = 1 << f.n
    m = np.zeros((size, size))
    m[np.arange(size), f.table] = 1.0
    m.setflags(write=False)
    return m


def _first_register_probs(psi: np.ndarray, u_post: np.ndarray, f: MappingTable) -> np.ndarray:
    # After the oracle the state is sum_x psi(x)|x>|f(x)>; the post layer maps
    # the second-register slice b = z to u_post @ (psi * [f(x) == z]).
    amps = (u_post * psi[None, :]) @ _image_indicator(f)
    return (amps.real**2 + amps.imag**2).sum(axis=1)


@dataclass(frozen=True)
class OutcomeDistribution:
    """Pr(first register reads y), indexed by the packed value of y."""

    n: int
    probs: np.ndarray

    def __getitem__(self, y: BitString | str | int) -> float:
        if isinstance(y, str):
            y = BitString.parse(y)
        return float(self.probs[int(y)])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("y,prob\n")
        for y, p in enumerate(self.probs):
            buf.write(f"{y:0{self.n}b},{float(p)!r}\n")
        return buf.getvalue()


def output_distribution(layout: CircuitLayout, params: np.ndarray, f: MappingTable) -> OutcomeDistribution:
    """Pr(y) for the first register.

    The second register starts in |0> and is only touched by the oracle, so
    the pre layer reduces to a first-register vector and the post layer to a
    first-register operator; the result matches marginalising
    :func:`final_state` exactly.
    """
    return output_distributions(layout, params, [f])[0]


def output_distributions(
    layout: CircuitLayout, params: np.ndarray, tables: Sequence[MappingTable]
) -> list[OutcomeDistribution]:
    """``output_distribution`` for several oracles, building the layer operators once."""
    for f in tables:
        _check_inputs(layout, params, f)
    params = np.asarray(params, dtype=float)
    psi = layer_unitary(layout, layout.pre_layer, params)[:, 0]
    u_post = layer_unitary(layout, layout.post_layer, params)
    return [OutcomeDistribution(layout.n, _first_register_probs(psi, u_post, f)) for f in tables]


def marginal_distribution(state: np.ndarray, n: int) -> OutcomeDistribution:
    size = 1 << n
    probs = (np.abs(state) ** 2).reshape(size, size).sum(axis=1)
    return OutcomeDistribution(n, probs)


def simon_reference_distribution(n: int, s: BitString) -> OutcomeDistribution:
    """Uniform over {y : y . s = 0 mod 2}; what the Hadamard circuit measures."""
    if s.width != n:
        raise UsageError(f"secret width {s.width} != n={n}")
    if not s:
        raise UsageError("the secret must be nonzero")
    ys = np.arange(1 << n)
    parity = np.array([bin(int(y) & s.bits).count("1") & 1 for y in ys])
    probs = np.where(parity == 0, 1.0 / (1 << (n - 1)), 0.0)
    return OutcomeDistribution(n, probs)
