import itertools
from collections import Counter

import numpy as np
import pytest

from errors import ContractViolation, ShapeError
from gf2core import BitVector
from oracle import GATE_MATRICES, Z_CHECK, graph_state, pgs_brute_amplitude
from pgs import PhasedAdjacency
from ring import ExactAmplitude
from sim import EMPTY, SampleSpec, graph_state_simulate, prepare, strong_eval, strong_eval_fixed, weak_sample
from treedec import heuristic_decompose, make_graph


def _all(n):
    return [BitVector.from_bits(bits) for bits in itertools.product((0, 1), repeat=n)]


def test_prepare_zero_matrix():
    ctx = prepare(PhasedAdjacency.zeros(3))
    assert ctx.k == 0
    assert not ctx.w.any()
    assert ctx.alpha == ExactAmplitude.one()


def test_prepare_single_z_phase():
    ctx = prepare(PhasedAdjacency.from_dense([[2]]))
    assert ctx.k == 0
    assert ctx.w.tolist() == [1]


def test_prepare_rejects_unknown_alpha_rule():
    with pytest.raises(ContractViolation):
        prepare(PhasedAdjacency.zeros(1), alpha_rule="bogus")


@pytest.mark.parametrize("diag,expected", [
    (0, [ExactAmplitude.one(), ExactAmplitude.zero()]),
    (2, [ExactAmplitude.zero(), ExactAmplitude.one()]),
    (1, [ExactAmplitude.clifford(-1, -1), ExactAmplitude.clifford(-1, 1)]),
])
def test_strong_eval_single_qubit(diag, expected):
    ctx = prepare(PhasedAdjacency.from_dense([[diag]]))
    assert strong_eval(ctx, _all(1)) == expected


def test_strong_eval_length_mismatch():
    with pytest.raises(ShapeError):
        strong_eval(prepare(PhasedAdjacency.zeros(2)), [BitVector.from_str("1")])


def test_strong_eval_matches_brute(rng, make_pgs):
    for _ in range(25):
        n = int(rng.integers(1, 9))
        a = make_pgs(n, rng.random())
        xs = _all(n)
        assert strong_eval(prepare(a), xs) == [pgs_brute_amplitude(a, x) for x in xs]


def test_strong_eval_tree_path_matches_dense(rng, make_pgs):
    for _ in range(10):
        a = make_pgs(10, 0.3)
        xs = _all(10)[::7]
        assert strong_eval(prepare(a, heuristic_decompose(a.graph())), xs) == strong_eval(prepare(a), xs)


def test_support_and_normalization(rng, make_pgs):
    for _ in range(10):
        n = int(rng.integers(1, 7))
        ctx = prepare(make_pgs(n))
        amps = strong_eval(ctx, _all(n))
        nonzero = [amp for amp in amps if amp]
        assert len(nonzero) == 2 ** ctx.k
        assert all(amp.abs2() == ExactAmplitude.sqrt2_power(-2 * ctx.k) for amp in nonzero)
        total = ExactAmplitude.zero()
        for amp in nonzero:
            total = total + amp.abs2()
        assert total == ExactAmplitude.one()


def test_literal_alpha_rule_disagrees_on_single_odd_diagonal():
    a = PhasedAdjacency.from_dense([[1]])
    x = BitVector.from_str("0")
    assert strong_eval(prepare(a, alpha_rule="literal"), [x])[0] != pgs_brute_amplitude(a, x)


def test_strong_eval_fixed_matches_strong_eval(rng, make_pgs):
    for _ in range(15):
        n = int(rng.integers(1, 9))
        ctx = prepare(make_pgs(n))
        size = int(rng.integers(0, n + 1))
        S = sorted(rng.choice(n, size=size, replace=False).tolist())
        y = rng.integers(0, 2, size=size).tolist()
        xs = []
        for x in _all(n):
            bits = x.to_bits()
            if all(bits[s] == b for s, b in zip(S, y)):
                xs.append(x)
        assert strong_eval_fixed(ctx, S, y, xs) == strong_eval(ctx, xs)


def test_dense_cutoff_forces_tree_path(make_pgs):
    a = make_pgs(8, 0.4)
    tree = prepare(a, dense_cutoff=0)
    dense = prepare(a)
    assert tree.factorization.td is not None and tree.b11_low is None
    assert dense.factorization.td is None
    xs = _all(8)
    expected = [pgs_brute_amplitude(a, x) for x in xs]
    assert strong_eval(tree, xs) == expected
    assert strong_eval(dense, xs) == expected
    fixed = [x for x in xs if x.get(0) == 1 and x.get(3) == 0]
    assert strong_eval_fixed(tree, [0, 3], [1, 0], fixed) == strong_eval_fixed(dense, [0, 3], [1, 0], fixed)


@pytest.mark.parametrize("cutoff", [None, 0])
def test_secondbit_diag_enters_the_exponent(cutoff):
    ctx = prepare(PhasedAdjacency.from_dense([[1]]), dense_cutoff=cutoff)
    xs = _all(1)
    before = strong_eval(ctx, xs)
    fixed_before = strong_eval_fixed(ctx, [], [], xs)
    ctx.secondbit_diag = ctx.secondbit_diag ^ 1
    assert strong_eval_fixed(ctx, [], [], xs) != fixed_before
    if cutoff is None:
        assert strong_eval(ctx, xs) != before


def test_strong_eval_fixed_all_fixed():
    ctx = prepare(PhasedAdjacency.from_dense([[0, 1], [1, 3]]))
    x = BitVector.from_str("10")
    assert strong_eval_fixed(ctx, [0, 1], [1, 0], [x]) == strong_eval(ctx, [x])


def test_strong_eval_fixed_rejects_inconsistent_query():
    ctx = prepare(PhasedAdjacency.zeros(2))
    with pytest.raises(ContractViolation):
        strong_eval_fixed(ctx, [0], [1], [BitVector.from_str("00")])


def test_weak_sample_empty_support():
    ctx = prepare(PhasedAdjacency.from_dense([[2]]))
    assert weak_sample(ctx, SampleSpec((0,), (0,), seed=1, count=5)) is EMPTY


def test_weak_sample_zero_matrix():
    ctx = prepare(PhasedAdjacency.zeros(2))
    samples = weak_sample(ctx, SampleSpec(seed=3, count=50))
    assert all(x.to_str() == "00" for x in samples)


def test_weak_sample_full_rank_is_uniform():
    ctx = prepare(PhasedAdjacency.from_dense([[0, 1], [1, 0]]))
    count = 4096
    freq = Counter(x.to_str() for x in weak_sample(ctx, SampleSpec(seed=11, count=count)))
    sigma = (count * 0.25 * 0.75) ** 0.5
    assert set(freq) == {"00", "01", "10", "11"}
    assert all(abs(c - count / 4) < 4 * sigma for c in freq.values())


def test_weak_sample_soundness(rng, make_pgs):
    for trial in range(15):
        n = int(rng.integers(1, 9))
        a = make_pgs(n)
        ctx = prepare(a)
        size = int(rng.integers(0, n + 1))
        S = tuple(sorted(rng.choice(n, size=size, replace=False).tolist()))
        y = tuple(rng.integers(0, 2, size=size).tolist())
        samples = weak_sample(ctx, SampleSpec(S, y, seed=trial, count=40))
        if samples is EMPTY:
            fixed = [x for x in _all(n) if all(x.get(s) == b for s, b in zip(S, y))]
            assert not any(strong_eval(ctx, fixed))
            continue
        assert all(all(x.get(s) == b for s, b in zip(S, y)) for x in samples)
        assert all(strong_eval(ctx, samples))


def test_weak_sample_is_deterministic_and_prefix_stable(make_pgs):
    ctx = prepare(make_pgs(8))
    first = weak_sample(ctx, SampleSpec(seed=5, count=30))
    assert weak_sample(ctx, SampleSpec(seed=5, count=30)) == first
    assert weak_sample(ctx, SampleSpec(seed=5, count=10)) == first[:10]
    assert weak_sample(ctx, SampleSpec(seed=6, count=30)) != first


def test_sampling_strategies_agree(make_pgs):
    ctx = prepare(make_pgs(9))
    spec = SampleSpec((2,), (1,), seed=9, count=100)
    direct = weak_sample(ctx, spec, "direct")
    basis = weak_sample(ctx, spec, "basis")
    if direct is EMPTY:
        assert basis is EMPTY
    else:
        assert direct == basis


@pytest.mark.parametrize("strategy", ["direct", "basis"])
def test_weak_sample_offset_continues_the_stream(make_pgs, strategy):
    ctx = prepare(make_pgs(7))
    whole = weak_sample(ctx, SampleSpec(seed=4, count=50), strategy)
    head = weak_sample(ctx, SampleSpec(seed=4, count=20), strategy)
    tail = weak_sample(ctx, SampleSpec(seed=4, count=30, start=20), strategy)
    assert head + tail == whole


def test_weak_sample_projection_matches_full_samples(make_pgs):
    ctx = prepare(make_pgs(8))
    keep = [6, 1, 3]
    full = weak_sample(ctx, SampleSpec((0,), (1,), seed=2, count=40), "basis")
    for strategy in ("direct", "basis"):
        kept = weak_sample(ctx, SampleSpec((0,), (1,), seed=2, count=40), strategy, project=keep)
        if full is EMPTY:
            assert kept is EMPTY
        else:
            assert kept == [BitVector.from_bits(x.to_bits()[keep]) for x in full]


def _tv_to_uniform_on_support(ctx, samples, n):
    support = [x for x, amp in zip(_all(n), strong_eval(ctx, _all(n))) if amp]
    freq = Counter(x.to_str() for x in samples)
    p = 1 / len(support)
    tv = sum(abs(freq.get(x.to_str(), 0) / len(samples) - p) for x in support)
    tv += sum(c / len(samples) for key, c in freq.items() if key not in {x.to_str() for x in support})
    return tv / 2


@pytest.mark.slow
def test_weak_sample_total_variation_to_uniform(rng, make_pgs):
    for trial in range(20):
        n = int(rng.integers(1, 7))
        ctx = prepare(make_pgs(n))
        samples = weak_sample(ctx, SampleSpec(seed=trial, count=100_000))
        assert _tv_to_uniform_on_support(ctx, samples, n) < 0.02


def test_weak_sample_total_variation_small_instance():
    ctx = prepare(PhasedAdjacency.from_dense([[0, 1, 0], [1, 2, 1], [0, 1, 1]]))
    samples = weak_sample(ctx, SampleSpec(seed=8, count=20_000))
    assert _tv_to_uniform_on_support(ctx, samples, 3) < 0.03


def test_sample_spec_contract():
    with pytest.raises(ContractViolation):
        SampleSpec((0, 1), (1,))
    with pytest.raises(ContractViolation):
        SampleSpec((0, 0), (1, 1))
    with pytest.raises(ContractViolation):
        weak_sample(prepare(PhasedAdjacency.zeros(1)), SampleSpec(), "fastest")


# ===================== 图态包装 =====================
def _dense_graph_amplitudes(g, basis):
    state = graph_state(g)
    for v, b in basis.items():
        if b == "Y":
            state.apply_1q(Z_CHECK, v)
        if b in ("X", "Y"):
            state.apply_1q(GATE_MATRICES["H"], v)
    return state


def test_graph_all_x_on_empty_graph():
    n = 3
    amps = graph_state_simulate(make_graph(n), {v: "X" for v in range(n)}, "strong", xs=_all(n))
    assert amps[0] == ExactAmplitude.one()
    assert not any(amps[1:])


def test_graph_all_z_signs():
    g = make_graph(3, [(0, 1), (1, 2)])
    amps = graph_state_simulate(g, {v: "Z" for v in range(3)}, "strong", xs=_all(3))
    for x, amp in zip(_all(3), amps):
        bits = x.to_bits()
        sign = (-1) ** int(bits[0] * bits[1] + bits[1] * bits[2])
        assert amp == ExactAmplitude.sqrt2_power(-3) * sign


def test_graph_strong_matches_dense(rng, make_random_graph):
    for _ in range(15):
        n = int(rng.integers(1, 8))
        g = make_random_graph(n)
        basis = {v: "XYZ"[int(rng.integers(3))] for v in range(n)}
        state = _dense_graph_amplitudes(g, basis)
        xs = _all(n)
        amps = graph_state_simulate(g, basis, "strong", xs=xs)
        assert all(abs(amp.to_complex() - state.amplitude(x)) < 1e-9 for x, amp in zip(xs, amps))


def test_graph_weak_samples_are_in_support(rng, make_random_graph):
    for trial in range(10):
        n = int(rng.integers(2, 8))
        g = make_random_graph(n)
        basis = {v: "XYZ"[int(rng.integers(3))] for v in range(n)}
        samples = graph_state_simulate(g, basis, "weak", spec=SampleSpec((0,), (1,), seed=trial, count=30))
        if samples is EMPTY:
            state = _dense_graph_amplitudes(g, basis)
            assert all(abs(state.amplitude(x)) < 1e-9 for x in _all(n) if x.get(0) == 1)
            continue
        assert all(x.get(0) == 1 for x in samples)
        assert all(graph_state_simulate(g, basis, "strong", xs=samples))


def test_graph_weak_empty_support():
    samples = graph_state_simulate(make_graph(2), {0: "X", 1: "X"}, "weak", spec=SampleSpec((0,), (1,), count=3))
    assert samples is EMPTY


def test_graph_basis_must_be_total():
    with pytest.raises(ContractViolation):
        graph_state_simulate(make_graph(2), {0: "X"}, "strong", xs=[])
    with pytest.raises(ContractViolation):
        graph_state_simulate(make_graph(1), {0: "W"}, "strong", xs=[])
