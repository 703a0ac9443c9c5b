"""Statevector simulation of the Gibbs-distribution sampling circuit.

The circuit prepares visible and hidden qubits in product states whose
|1> weights are the rescaled single-spin Gibbs factors, then entangles
each (visible, hidden) pair with an ancilla through doubly-controlled
Y rotations, one control-configuration block per spin pattern.  Keeping
only shots where every ancilla reads 1 leaves the registers distributed
by the rescaled joint Gibbs distribution Q; raising Q to the power k
and marginalizing the hidden register recovers the RBM marginal P.

Qubit layout (little-endian bit order, matching the basis encoding):
visible 0..n-1, hidden n..n+m-1, ancilla for pair (i, j) at n+m+i*m+j.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, ConfigError, EmptyPostselectionError
from .rbm import RbmParams

_MAX_QUBITS = 28


@dataclass(frozen=True)
class Gate:
    """One gate: kind 'ry' (target, angle), 'x' (target), or 'ccry'
    (control, control, target, angle)."""

    kind: str
    qubits: tuple
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in ("ry", "x", "ccry"):
            raise ConfigError(f"unknown gate kind '{self.kind}'")
        want = {"ry": 1, "x": 1, "ccry": 3}[self.kind]
        if len(self.qubits) != want or len(set(self.qubits)) != want:
            raise ConfigError(f"{self.kind} gate needs {want} distinct qubits")
        if (self.angle is None) == (self.kind != "x"):
            raise ConfigError(f"{self.kind} gate angle mismatch")


@dataclass(frozen=True)
class CircuitSpec:
    """Ordered gate list plus register sizes and a per-kind gate tally."""

    n_visible: int
    n_hidden: int
    gates: tuple
    gate_counts: dict = field(repr=True)

    @property
    def n_ancilla(self) -> int:
        return self.n_visible * self.n_hidden

    @property
    def total_qubits(self) -> int:
        return self.n_visible + self.n_hidden + self.n_ancilla

    def __post_init__(self):
        total = self.total_qubits
        for gate in self.gates:
            if any(not 0 <= q < total for q in gate.qubits):
                raise ConfigError(f"gate {gate} addresses a qubit outside 0..{total - 1}")


@dataclass(frozen=True)
class SampleBatch:
    """Measurement tally: post-selected counts keyed by string-integer pairs.

    counts maps (visible string-integer, hidden string-integer) to the
    number of occurrences among the post-selected successes; fractional
    weights are allowed so exact distributions can stand in for counts.
    """

    shots: int
    successes: float
    counts: dict

    def __post_init__(self):
        if self.successes > self.shots:
            raise ConfigError("successes cannot exceed shots")
        total = sum(self.counts.values())
        if not math.isclose(total, self.successes, rel_tol=1e-9, abs_tol=1e-9):
            raise ConfigError(
                f"counts sum to {total} but successes = {self.successes}"
            )


def _bias_angle(value: float, k: float) -> float:
    # |1> probability e^(v/k) / (e^(v/k) + e^(-v/k)), i.e. sigmoid(2v/k)
    p_one = 1.0 / (1.0 + math.exp(-2.0 * value / k))
    return 2.0 * math.asin(math.sqrt(p_one))


def _weight_angle(w: float, s: int, h: int, k: float) -> float:
    # |1> amplitude e^((w*s*h - |w|)/(2k)) <= 1, with equality when s*h aligns with w
    return 2.0 * math.asin(math.exp((w * s * h - abs(w)) / (2.0 * k)))


def build_gibbs_circuit(params: RbmParams) -> CircuitSpec:
    """Emit bias rotations, then four control-pattern blocks per (i, j) site.

    Block order is spin pattern (+,+), (+,-), (-,+), (-,-); consecutive
    blocks share X conjugations, costing six X gates per site in total.
    """
    n, m, k = params.n, params.m, params.k
    gates = []
    for i in range(n):
        gates.append(Gate("ry", (i,), _bias_angle(params.a[i], k)))
    for j in range(m):
        gates.append(Gate("ry", (n + j,), _bias_angle(params.b[j], k)))
    for i in range(n):
        for j in range(m):
            vis, hid = i, n + j
            anc = n + m + i * m + j
            w = params.w[i, j]
            gates.append(Gate("ccry", (vis, hid, anc), _weight_angle(w, 1, 1, k)))
            gates.append(Gate("x", (hid,)))
            gates.append(Gate("ccry", (vis, hid, anc), _weight_angle(w, 1, -1, k)))
            gates.append(Gate("x", (hid,)))
            gates.append(Gate("x", (vis,)))
            gates.append(Gate("ccry", (vis, hid, anc), _weight_angle(w, -1, 1, k)))
            gates.append(Gate("x", (hid,)))
            gates.append(Gate("ccry", (vis, hid, anc), _weight_angle(w, -1, -1, k)))
            gates.append(Gate("x", (vis,)))
            gates.append(Gate("x", (hid,)))
    counts = {"ry": n + m, "x": 6 * n * m, "ccry": 4 * n * m}
    return CircuitSpec(n_visible=n, n_hidden=m, gates=tuple(gates), gate_counts=counts)


def run_statevector(circuit: CircuitSpec) -> np.ndarray:
    """Apply the gate list to |0...0>; returns the 2^q complex amplitudes."""
    q = circuit.total_qubits
    if q > _MAX_QUBITS:
        raise CapacityError(f"{q} qubits exceed the {_MAX_QUBITS}-qubit budget")
    size = 1 << q
    state = np.zeros(size)
    state[0] = 1.0
    idx = np.arange(size)
    for gate in circuit.gates:
        if gate.kind == "x":
            t = gate.qubits[0]
            state = state[idx ^ (1 << t)]
        else:
            if gate.kind == "ry":
                t = gate.qubits[0]
                active = np.ones(size, dtype=bool)
            else:
                c1, c2, t = gate.qubits
                active = ((idx >> c1) & 1).astype(bool) & ((idx >> c2) & 1).astype(bool)
            lo = active & (((idx >> t) & 1) == 0)
            hi_index = idx[lo] ^ (1 << t)
            half = 0.5 * gate.angle
            c, s = math.cos(half), math.sin(half)
            a0 = state[lo]
            a1 = state[hi_index]
            state[lo] = c * a0 - s * a1
            state[hi_index] = s * a0 + c * a1
    return state.astype(np.complex128)


def sample(circuit: CircuitSpec, shots: int, seed: int) -> SampleBatch:
    """Seeded measurement of the full joint distribution with post-selection."""
    if shots < 1:
        raise ConfigError(f"need at least one shot, got {shots}")
    amplitudes = run_statevector(circuit)
    probs = np.abs(amplitudes) ** 2
    probs /= probs.sum()
    rng = np.random.default_rng(seed)
    drawn = rng.multinomial(shots, probs)
    n, m = circuit.n_visible, circuit.n_hidden
    anc_target = (1 << circuit.n_ancilla) - 1
    counts = {}
    successes = 0
    for x in np.flatnonzero(drawn):
        if (x >> (n + m)) != anc_target:
            continue
        key = (int(x) & ((1 << n) - 1), (int(x) >> n) & ((1 << m) - 1))
        counts[key] = counts.get(key, 0) + int(drawn[x])
        successes += int(drawn[x])
    if successes == 0:
        raise EmptyPostselectionError(
            f"no shot of {shots} had every ancilla at 1; raise the shot count"
        )
    return SampleBatch(shots=shots, successes=successes, counts=counts)


def empirical_q_to_p(batch: SampleBatch, params: RbmParams) -> np.ndarray:
    """Undo the k-rescaling: Q -> Q^k -> renormalize -> marginalize hidden.

    Returns the recovered P over all 2^n visible strings (string-integer
    indexed); strings never observed get probability zero.
    """
    if batch.successes <= 0 or not batch.counts:
        raise EmptyPostselectionError("no post-selected samples to convert")
    n, m, k = params.n, params.m, params.k
    joint = np.zeros((1 << n, 1 << m))
    for (x_vis, x_hid), count in batch.counts.items():
        joint[x_vis, x_hid] += count
    joint /= joint.sum()
    powered = joint ** k
    powered /= powered.sum()
    return powered.sum(axis=1)


def make_sampled_source(shots: int):
    """Probability source for the RBM sampled mode: circuit, shots, Q -> P."""

    def source(params: RbmParams, seed: int) -> np.ndarray:
        batch = sample(build_gibbs_circuit(params), shots, seed)
        return empirical_q_to_p(batch, params)

    return source


def export_text(circuit: CircuitSpec) -> str:
    """One gate per line: `RY q theta`, `X q`, `CCRY q1 q2 q3 theta`."""
    lines = []
    for gate in circuit.gates:
        qubits = " ".join(str(q) for q in gate.qubits)
        if gate.kind == "x":
            lines.append(f"X {qubits}")
        else:
            lines.append(f"{gate.kind.upper()} {qubits} {gate.angle:.17g}")
    return "\n".join(lines) + "\n"
