import itertools
import time

import numpy as np
import pytest

from config import Config
from errors import CircuitParseError, LimitExceeded, UnsupportedGateError
from gf2core import BitVector
from oracle import pgs_brute_amplitude, statevector
from pgs import PhasedAdjacency
from ring import ExactAmplitude
from sim import SampleSpec, prepare, strong_eval, weak_sample
from zxfront import (BOUNDARY, GRAPH_LIKE_PASSES, T_COEF_I, T_COEF_S, CliffordCircuit, IncrementalTermSum, all_outputs,
                     clifford_t_strong, evaluate_diagram, gadgetize_t, parse_circuit, reduce_to_pgs,
                     sample_circuit, to_graph_like)

HALF_ROOT = ExactAmplitude.clifford(-1, 0)


def _circuit_amplitudes(c):
    inst = reduce_to_pgs(c)
    ctx = prepare(inst.A, inst.td)
    xs = all_outputs(c.n)
    return [inst.scalar * amp for amp in strong_eval(ctx, [inst.assemble(x) for x in xs])]


def _close(exact, value):
    return abs(exact.to_complex() - value) < Config.FLOAT_TOL


# ===================== 解析 =====================
def test_parse_infers_width():
    c = parse_circuit("H 0\nCZ 0 1")
    assert c.n == 2
    assert c.gates == [("H", (0,)), ("CZ", (0, 1))]


def test_parse_expands_cnot():
    c = parse_circuit("CNOT 0 1")
    assert c.gates == [("H", (1,)), ("CZ", (0, 1)), ("H", (1,))]


def test_parse_header_comments_and_separators():
    c = parse_circuit("qubits 3\n# prep\nh 0; s 0  # two gates\n\nT 2\n")
    assert c.n == 3
    assert c.gates == [("H", (0,)), ("S", (0,)), ("T", (2,))]
    assert c.t_count == 1 and not c.is_clifford()
    assert parse_circuit(c.to_text()).gates == c.gates


@pytest.mark.parametrize("text,line", [
    ("FOO 0", 1),
    ("H 0\nCZ 1 1", 2),
    ("qubits 2\nH 0\nH 2", 3),
    ("H x", 1),
    ("CZ 0", 1),
    ("qubits", 1),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(CircuitParseError) as info:
        parse_circuit(text)
    assert info.value.line_no == line


def test_circuit_add_rejects_unknown_gate():
    with pytest.raises(UnsupportedGateError):
        CliffordCircuit(1).add("CCZ", 0)


# ===================== 改写规则 =====================
def test_rewrite_passes_preserve_tensor(rng, make_circuit):
    for _ in range(15):
        c = make_circuit(int(rng.integers(1, 4)), int(rng.integers(1, 6)))
        d = c.to_diagram()
        outputs = list(itertools.product((0, 1), repeat=c.n))
        reference = [evaluate_diagram(d, bits) for bits in outputs]
        state = statevector(c)
        assert all(_close(ref, state.amplitude(BitVector.from_bits(bits))) for ref, bits in zip(reference, outputs))
        for rule in GRAPH_LIKE_PASSES:
            d = rule(d)
            assert [evaluate_diagram(d, bits) for bits in outputs] == reference, rule.__name__


def test_graph_like_cz_on_plus_states():
    d = to_graph_like(parse_circuit("H 0\nH 1\nCZ 0 1").to_diagram())
    assert d.check_graph_like()
    assert len(d.spiders()) == 2
    internal = [h for u, v, h in d.edges if BOUNDARY not in (d.kinds[u], d.kinds[v])]
    assert internal == [True]


def test_double_hadamard_is_a_plain_wire():
    c = parse_circuit("H 0\nH 0")
    d = to_graph_like(c.to_diagram())
    assert d.check_graph_like()
    assert [evaluate_diagram(d, (b,)) for b in (0, 1)] == [ExactAmplitude.one(), ExactAmplitude.zero()]


# ===================== 约化 =====================
def test_reduce_empty_circuit():
    assert _circuit_amplitudes(parse_circuit("qubits 1")) == [ExactAmplitude.one(), ExactAmplitude.zero()]


def test_reduce_single_hadamard():
    assert _circuit_amplitudes(parse_circuit("H 0")) == [HALF_ROOT, HALF_ROOT]


def test_reduce_cnot_on_zero_state():
    amps = _circuit_amplitudes(parse_circuit("H 1\nCZ 0 1\nH 1"))
    assert amps == [ExactAmplitude.one()] + [ExactAmplitude.zero()] * 3


def test_reduce_bell_pair():
    amps = _circuit_amplitudes(parse_circuit("H 0\nCNOT 0 1"))
    # all_outputs 的顺序：00, 01, 10, 11
    assert amps == [HALF_ROOT, ExactAmplitude.zero(), ExactAmplitude.zero(), HALF_ROOT]


def test_reduce_matches_dense(rng, make_circuit):
    for _ in range(20):
        c = make_circuit(int(rng.integers(1, 6)), int(rng.integers(1, 40)))
        state = statevector(c)
        for x, amp in zip(all_outputs(c.n), _circuit_amplitudes(c)):
            assert _close(amp, state.amplitude(x)), c.to_text()


@pytest.mark.slow
def test_reduce_matches_dense_large(rng, make_circuit):
    for _ in range(40):
        c = make_circuit(int(rng.integers(1, 9)), int(rng.integers(1, 101)))
        state = statevector(c)
        for x, amp in zip(all_outputs(c.n), _circuit_amplitudes(c)):
            assert _close(amp, state.amplitude(x)), c.to_text()


def _best_of(fn, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


@pytest.mark.slow
def test_scaling_bands_when_depth_doubles(rng, make_circuit):
    n = 10
    prepare_times, per_sample = [], []
    for m in (300, 600):
        c = make_circuit(n, m)
        inst = reduce_to_pgs(c)
        prepare_times.append(_best_of(lambda: prepare(inst.A, inst.td)))
        ctx = prepare(inst.A, inst.td)

        def draw(count):
            spec = SampleSpec(tuple(inst.S), tuple(inst.y), seed=1, count=count)
            return lambda: weak_sample(ctx, spec, "basis", project=inst.output_map)

        per_sample.append((_best_of(draw(20_000)) - _best_of(draw(2_000))) / 18_000)
    assert prepare_times[1] <= 2.5 * prepare_times[0]
    assert max(per_sample) <= 2 * max(min(per_sample), 1e-9)


def test_reduce_instance_shape():
    c = parse_circuit("H 0\nCZ 0 1\nS 1\nH 1")
    inst = reduce_to_pgs(c)
    assert len(inst.S) == inst.N - c.n
    assert sorted(inst.S + inst.output_map) == list(range(inst.N))
    assert set(inst.sidecar()) == {"S", "y", "output_map", "scalar", "sites"}


def test_reduce_refuses_t_gates():
    with pytest.raises(UnsupportedGateError):
        reduce_to_pgs(parse_circuit("H 0\nT 0"))


def test_reduce_calibration_keeps_exact_scalar(make_circuit):
    c = make_circuit(3, 15)
    assert reduce_to_pgs(c, calibrate=True).scalar == reduce_to_pgs(c).scalar


# ===================== T 门 =====================
def test_t_coefficients():
    assert T_COEF_I + T_COEF_S == ExactAmplitude.one()
    assert T_COEF_I + ExactAmplitude.omega_power(2) * T_COEF_S == ExactAmplitude.omega_power(1)


def test_gadgetize_sites():
    _, sites = gadgetize_t(parse_circuit("H 0\nS 0"))
    assert sites == []
    inst, sites = gadgetize_t(parse_circuit("H 0\nT 0"))
    assert len(sites) == 1
    assert inst.A.diag()[sites[0]] == 0
    assert sites[0] in inst.S


def test_clifford_t_single_t_gate():
    amps = clifford_t_strong(parse_circuit("H 0\nT 0"), all_outputs(1))
    assert amps == [HALF_ROOT, ExactAmplitude.clifford(-1, 1)]


def test_clifford_t_without_t_matches_clifford_path(make_circuit):
    c = make_circuit(3, 20)
    assert clifford_t_strong(c, all_outputs(3)) == _circuit_amplitudes(c)


def test_clifford_t_matches_dense(rng, make_circuit):
    for _ in range(8):
        n = int(rng.integers(1, 4))
        c = make_circuit(n, int(rng.integers(3, 16)), t_gates=int(rng.integers(1, 4)))
        state = statevector(c)
        xs = all_outputs(n)
        for x, amp in zip(xs, clifford_t_strong(c, xs)):
            assert _close(amp, state.amplitude(x)), c.to_text()


def test_gray_and_naive_orders_agree(rng, make_circuit):
    for _ in range(8):
        n = int(rng.integers(1, 4))
        c = make_circuit(n, int(rng.integers(3, 18)), t_gates=int(rng.integers(1, 5)))
        xs = all_outputs(n)
        assert clifford_t_strong(c, xs, order="gray") == clifford_t_strong(c, xs, order="naive"), c.to_text()


def test_gray_order_factors_only_the_clifford_block(monkeypatch):
    import zxfront
    calls = []

    def counting_prepare(*args, **kwargs):
        calls.append(1)
        return prepare(*args, **kwargs)

    monkeypatch.setattr(zxfront, "prepare", counting_prepare)
    c = parse_circuit("qubits 2\nH 0\nT 0\nCZ 0 1\nH 1\nT 1\nH 0")
    t = len(gadgetize_t(c)[1])
    xs = all_outputs(2)
    clifford_t_strong(c, xs, order="gray")
    gray_calls = len(calls)
    calls.clear()
    clifford_t_strong(c, xs, order="naive")
    assert t >= 1
    assert len(calls) - gray_calls == 2 ** t


def test_incremental_term_sum_matches_brute(rng, make_pgs):
    for n in range(1, 7):
        a = make_pgs(n)
        xs = all_outputs(n)
        bits = np.array([x.to_bits() for x in xs], dtype=np.uint8).reshape(len(xs), n)
        order = [int(v) for v in rng.permutation(n)]
        summer = IncrementalTermSum(a.to_dense(), bits, order)
        assert summer.amplitudes() == [pgs_brute_amplitude(a, x) for x in xs]
        dense = a.to_dense()
        for v in rng.integers(0, n, size=4):
            delta = int(rng.integers(1, 4))
            summer.shift_diagonal(int(v), delta)
            dense[v, v] = (dense[v, v] + delta) % 4
            shifted = PhasedAdjacency.from_dense(dense)
            assert summer.amplitudes() == [pgs_brute_amplitude(shifted, x) for x in xs]


def test_incremental_term_sum_single_edge():
    bits = np.array([[0, 0], [1, 1], [1, 0]], dtype=np.uint8)
    summer = IncrementalTermSum(np.array([[0, 1], [1, 0]]), bits, [0, 1])
    # Σ_z (−1)^{z0 z1 + x·z} / 4
    assert summer.amplitudes() == [ExactAmplitude.clifford(-2, 0), ExactAmplitude.clifford(-2, 4),
                                   ExactAmplitude.clifford(-2, 0)]


def test_shift_resumes_at_first_touch():
    a = np.array([[1, 1, 0], [1, 0, 1], [0, 1, 2]])
    summer = IncrementalTermSum(a, np.zeros((1, 3), dtype=np.uint8), [0, 1, 2])
    before = summer.steps_run
    assert summer.shift_diagonal(2, 3) == summer.touch[2]
    assert summer.steps_run - before == len(summer.history) - summer.touch[2]


def test_t_cap():
    c = parse_circuit("H 0\nT 0\nT 0\nT 0")
    with pytest.raises(LimitExceeded):
        clifford_t_strong(c, all_outputs(1), t_cap=2)


# ===================== 采样 =====================
def test_sample_bell_pair():
    samples = sample_circuit(parse_circuit("H 0\nCNOT 0 1"), 200, seed=4)
    seen = {x.to_str() for x in samples}
    assert seen == {"00", "11"}
    assert sample_circuit(parse_circuit("H 0\nCNOT 0 1"), 200, seed=4) == samples
