"""Tests for the Gibbs-sampling circuit simulator and Q -> P recovery."""
import math

import numpy as np
import pytest

from rabifss import qcircuit, rbm
from rabifss.errors import CapacityError, ConfigError, EmptyPostselectionError


def _random_params(n, m, seed, w_scale=1.0):
    rng = np.random.default_rng(seed)
    return rbm.RbmParams(
        a=rng.uniform(-1.0, 1.0, n),
        b=rng.uniform(-1.0, 1.0, m),
        c=0.1,
        d=rng.uniform(-1.0, 1.0, n),
        w=rng.uniform(-w_scale, w_scale, (n, m)),
    )


def _closed_form_q(params):
    # joint Gibbs weights exp((a.s + b.h + s'Wh)/k), normalized
    n, m, k = params.n, params.m, params.k
    q = np.zeros((1 << n, 1 << m))
    for xv in range(1 << n):
        s = np.array([1.0 if (xv >> i) & 1 else -1.0 for i in range(n)])
        for xh in range(1 << m):
            h = np.array([1.0 if (xh >> j) & 1 else -1.0 for j in range(m)])
            q[xv, xh] = math.exp((params.a @ s + params.b @ h + s @ params.w @ h) / k)
    return q / q.sum()


def _postselected(circuit):
    # condition |amplitude|^2 on every ancilla reading 1
    probs = np.abs(qcircuit.run_statevector(circuit)) ** 2
    n, m = circuit.n_visible, circuit.n_hidden
    target = (1 << circuit.n_ancilla) - 1
    post = np.zeros((1 << n, 1 << m))
    for x in range(probs.size):
        if x >> (n + m) == target:
            post[x & ((1 << n) - 1), (x >> n) & ((1 << m) - 1)] = probs[x]
    return post / post.sum(), post.sum()


def test_gate_tally_small_and_reference_size():
    circ = qcircuit.build_gibbs_circuit(_random_params(1, 1, 0))
    assert circ.gate_counts == {"ry": 2, "x": 6, "ccry": 4}
    assert circ.n_ancilla == 1 and circ.total_qubits == 3
    # the 8-state size: 6 bias rotations, 9 sites, 6 X gates per site
    circ = qcircuit.build_gibbs_circuit(_random_params(3, 3, 1))
    assert circ.gate_counts == {"ry": 6, "x": 54, "ccry": 36}
    assert sum(1 for g in circ.gates if g.kind == "ry") == 6
    assert sum(1 for g in circ.gates if g.kind == "x") == 54
    assert sum(1 for g in circ.gates if g.kind == "ccry") == 36


def test_zero_weights_rotate_every_ancilla_by_pi():
    params = rbm.RbmParams(a=[0.4, -0.3], b=[0.2], c=0.1, d=[0.0, 0.0],
                           w=np.zeros((2, 1)))
    circ = qcircuit.build_gibbs_circuit(params)
    for gate in circ.gates:
        if gate.kind == "ccry":
            assert abs(gate.angle - math.pi) < 1e-15
    batch = qcircuit.sample(circ, shots=2000, seed=5)
    assert batch.successes == 2000  # post-selection certain


def test_statevector_trivial_circuits():
    empty = qcircuit.CircuitSpec(n_visible=1, n_hidden=1, gates=(), gate_counts={})
    amps = qcircuit.run_statevector(empty)
    assert amps[0] == 1.0 and np.all(amps[1:] == 0.0)
    flip = qcircuit.CircuitSpec(
        n_visible=1, n_hidden=1,
        gates=(qcircuit.Gate("ry", (0,), math.pi),), gate_counts={})
    amps = qcircuit.run_statevector(flip)
    assert abs(abs(amps[1]) - 1.0) < 1e-15


def test_statevector_controlled_rotation_hand_check():
    # X on both controls puts them at |11>, so a pi rotation flips the target:
    # the 8-vector should be e_7 = |111>
    gates = (
        qcircuit.Gate("x", (0,)),
        qcircuit.Gate("x", (1,)),
        qcircuit.Gate("ccry", (0, 1, 2), math.pi),
    )
    circ = qcircuit.CircuitSpec(n_visible=1, n_hidden=1, gates=gates, gate_counts={})
    amps = qcircuit.run_statevector(circ)
    expect = np.zeros(8)
    expect[7] = 1.0
    np.testing.assert_allclose(np.abs(amps), expect, atol=1e-15)
    # without the control preparation the rotation is inert
    circ = qcircuit.CircuitSpec(
        n_visible=1, n_hidden=1,
        gates=(qcircuit.Gate("ccry", (0, 1, 2), math.pi),), gate_counts={})
    amps = qcircuit.run_statevector(circ)
    assert abs(amps[0] - 1.0) < 1e-15


def test_statevector_norm_preserved_after_every_gate():
    params = _random_params(2, 2, 7)
    circ = qcircuit.build_gibbs_circuit(params)
    for cut in range(1, len(circ.gates) + 1):
        prefix = qcircuit.CircuitSpec(
            n_visible=2, n_hidden=2, gates=circ.gates[:cut], gate_counts={})
        amps = qcircuit.run_statevector(prefix)
        assert abs(np.linalg.norm(amps) - 1.0) < 1e-12


def test_postselected_distribution_matches_closed_form():
    rng = np.random.default_rng(8)
    for n, m in ((1, 2), (2, 2), (3, 3)):
        for _ in range(3):
            params = _random_params(n, m, int(rng.integers(1 << 30)), w_scale=2.5)
            post, _ = _postselected(qcircuit.build_gibbs_circuit(params))
            assert np.max(np.abs(post - _closed_form_q(params))) < 1e-12


def test_success_probability_and_empirical_rate():
    params = _random_params(2, 2, 9)
    circ = qcircuit.build_gibbs_circuit(params)
    _, p_success = _postselected(circ)
    shots = 100_000
    batch = qcircuit.sample(circ, shots=shots, seed=10)
    sigma = math.sqrt(p_success * (1.0 - p_success) / shots)
    assert abs(batch.successes / shots - p_success) <= 3.0 * sigma
    assert sum(batch.counts.values()) == batch.successes
    assert batch.successes <= batch.shots


def test_single_weight_changes_only_its_own_factor():
    # zeroing one weight must rescale Q by a function of that site's spins only
    base = _random_params(2, 2, 11, w_scale=1.5)
    dropped_w = base.w.copy()
    dropped_w[1, 1] = 0.0
    dropped = rbm.RbmParams(a=base.a, b=base.b, c=base.c, d=base.d, w=dropped_w)
    assert base.k == dropped.k == 1.0  # same rescaling, ratio isolates the site
    post_full, _ = _postselected(qcircuit.build_gibbs_circuit(base))
    post_drop, _ = _postselected(qcircuit.build_gibbs_circuit(dropped))
    ratio = post_full / post_drop
    for xv in range(4):
        for xh in range(4):
            s1 = 1 if (xv >> 1) & 1 else -1
            h1 = 1 if (xh >> 1) & 1 else -1
            # representative outcome with the same (s1, h1) but other bits zero
            same = ratio[2 if s1 == 1 else 0, 2 if h1 == 1 else 0]
            assert abs(ratio[xv, xh] / same - 1.0) < 1e-10


def test_sample_deterministic_and_close_to_exact_distribution():
    gates = (
        qcircuit.Gate("ry", (0,), 1.1),
        qcircuit.Gate("ry", (1,), 2.0),
        qcircuit.Gate("x", (2,)),
        qcircuit.Gate("ccry", (1, 2, 3), 0.8),
        qcircuit.Gate("ry", (3,), 0.4),
    )
    circ = qcircuit.CircuitSpec(n_visible=4, n_hidden=0, gates=gates, gate_counts={})
    assert circ.n_ancilla == 0  # plain 4-qubit circuit: every shot succeeds
    probs = np.abs(qcircuit.run_statevector(circ)) ** 2
    batch = qcircuit.sample(circ, shots=1_000_000, seed=12)
    again = qcircuit.sample(circ, shots=1_000_000, seed=12)
    assert batch.counts == again.counts
    empirical = np.zeros(16)
    for (xv, _), cnt in batch.counts.items():
        empirical[xv] = cnt / batch.successes
    assert 0.5 * np.abs(empirical - probs).sum() <= 0.005


def test_sampled_gibbs_within_total_variation_bound():
    params = _random_params(2, 2, 13, w_scale=0.5)
    circ = qcircuit.build_gibbs_circuit(params)
    q = _closed_form_q(params)
    batch = qcircuit.sample(circ, shots=150_000, seed=14)
    empirical = np.zeros_like(q)
    for (xv, xh), cnt in batch.counts.items():
        empirical[xv, xh] = cnt / batch.successes
    tv = 0.5 * np.abs(empirical - q).sum()
    assert tv <= 0.02


def test_empty_postselection_raises():
    # no gate ever rotates the ancilla, so it stays |0> and nothing succeeds
    circ = qcircuit.CircuitSpec(
        n_visible=1, n_hidden=1,
        gates=(qcircuit.Gate("ry", (0,), 1.3),), gate_counts={})
    with pytest.raises(EmptyPostselectionError):
        qcircuit.sample(circ, shots=50, seed=15)
    with pytest.raises(ConfigError):
        qcircuit.sample(circ, shots=0, seed=15)


def test_empirical_q_to_p_plain_marginal_when_k_is_one():
    params = _random_params(2, 2, 16, w_scale=0.8)  # |w| < 2 keeps k = 1
    assert params.k == 1.0
    batch = qcircuit.SampleBatch(
        shots=10, successes=10,
        counts={(0, 1): 4, (1, 0): 2, (3, 3): 4})
    p = qcircuit.empirical_q_to_p(batch, params)
    np.testing.assert_allclose(p, [0.4, 0.2, 0.0, 0.4], atol=1e-15)


def test_empirical_q_to_p_uniform_counts_stay_uniform():
    params = _random_params(2, 2, 17, w_scale=6.0)  # k > 1 exercises the power
    assert params.k > 1.0
    counts = {(xv, xh): 3 for xv in range(4) for xh in range(4)}
    batch = qcircuit.SampleBatch(shots=48, successes=48, counts=counts)
    p = qcircuit.empirical_q_to_p(batch, params)
    np.testing.assert_allclose(p, np.full(4, 0.25), atol=1e-14)


def test_exact_q_pushed_through_recovers_rbm_probability():
    rng = np.random.default_rng(18)
    for n, m in ((2, 2), (3, 3)):
        params = _random_params(n, m, int(rng.integers(1 << 30)), w_scale=3.0)
        q = _closed_form_q(params)
        batch = qcircuit.SampleBatch(
            shots=1, successes=1.0,
            counts={(xv, xh): q[xv, xh]
                    for xv in range(1 << n) for xh in range(1 << m)})
        p = qcircuit.empirical_q_to_p(batch, params)
        expect = np.array([
            rbm.probability(params, tuple(1 if (x >> i) & 1 else -1 for i in range(n)))
            for x in range(1 << n)
        ])
        assert np.max(np.abs(p - expect)) < 1e-10


def test_sampled_source_feeds_rbm_energy():
    params = _random_params(2, 2, 19, w_scale=0.5)
    enc = rbm.make_encoding(4)
    h_emb = rbm.embed_operator(np.diag([0.0, 1.0, 2.0, 3.0]), enc)
    source = qcircuit.make_sampled_source(shots=20_000)
    e_sampled = rbm.energy(params, h_emb, enc, p_source=source, seed=20)
    e_exact = rbm.energy(params, h_emb, enc)
    assert abs(e_sampled - e_exact) < 0.05


def test_capacity_guard():
    params = _random_params(5, 5, 21)  # 5 + 5 + 25 = 35 qubits
    circ = qcircuit.build_gibbs_circuit(params)
    with pytest.raises(CapacityError):
        qcircuit.run_statevector(circ)


def test_export_text_format():
    params = _random_params(1, 1, 22)
    circ = qcircuit.build_gibbs_circuit(params)
    text = qcircuit.export_text(circ)
    lines = text.strip().split("\n")
    assert len(lines) == len(circ.gates)
    assert lines[0].startswith("RY 0 ")
    assert any(line == "X 1" or line.startswith("X ") for line in lines)
    ccry_lines = [l for l in lines if l.startswith("CCRY ")]
    assert len(ccry_lines) == 4
    parts = ccry_lines[0].split()
    assert [int(parts[1]), int(parts[2]), int(parts[3])] == [0, 1, 2]
    assert abs(float(parts[4]) - circ.gates[2].angle) < 1e-15


def test_gate_and_batch_validation():
    with pytest.raises(ConfigError):
        qcircuit.Gate("h", (0,))
    with pytest.raises(ConfigError):
        qcircuit.Gate("ry", (0,))  # missing angle
    with pytest.raises(ConfigError):
        qcircuit.Gate("x", (0,), angle=1.0)
    with pytest.raises(ConfigError):
        qcircuit.Gate("ccry", (0, 0, 1), angle=1.0)
    with pytest.raises(ConfigError):
        qcircuit.CircuitSpec(n_visible=1, n_hidden=1,
                             gates=(qcircuit.Gate("x", (5,)),), gate_counts={})
    with pytest.raises(ConfigError):
        qcircuit.SampleBatch(shots=5, successes=9, counts={(0, 0): 9})
    with pytest.raises(ConfigError):
        qcircuit.SampleBatch(shots=5, successes=3, counts={(0, 0): 2})
    with pytest.raises(EmptyPostselectionError):
        qcircuit.empirical_q_to_p(
            qcircuit.SampleBatch(shots=5, successes=0, counts={}),
            _random_params(1, 1, 23))
