import itertools

import numpy as np
import pytest

from errors import ContractViolation, EliminationError, ShapeError
from gf2core import BitMatrix, BitVector, mul, rank
from oracle import equal_up_to_phase, graph_state, pgs_brute_amplitude
from pgs import (H_GATE, X_CHECK, Z_GATE, Z_HAT, PhasedAdjacency, amplitude_direct, edge_complement,
                 format_pgs, gauss_jordan_wn, hadamard_amplitude_gj, parse_pgs, pivot_by_classes, read_pgs,
                 trim_z_vertices, vertex_complement, write_pgs)
from ring import ExactAmplitude
from selftest import apply_record
from treedec import make_graph


def _edges(g):
    return sorted(tuple(sorted(e)) for e in g.edges)


def _same(g, h):
    return sorted(g.nodes) == sorted(h.nodes) and _edges(g) == _edges(h)


@pytest.mark.parametrize("dense,bits,expected", [
    (np.zeros((2, 2)), "11", ExactAmplitude.clifford(-2, 0)),
    ([[0, 1, 1], [1, 0, 1], [1, 1, 0]], "111", ExactAmplitude.clifford(-3, 4)),
    ([[2]], "1", ExactAmplitude.clifford(-1, 4)),
])
def test_amplitude_direct(dense, bits, expected):
    assert amplitude_direct(PhasedAdjacency.from_dense(dense), BitVector.from_str(bits)) == expected


def test_amplitude_direct_length_mismatch():
    with pytest.raises(ShapeError):
        amplitude_direct(PhasedAdjacency.zeros(3), BitVector.from_str("10"))


def test_from_dense_rejects_non_members():
    with pytest.raises(ContractViolation):
        PhasedAdjacency.from_dense([[0, 2], [2, 0]])
    with pytest.raises(ContractViolation):
        PhasedAdjacency.from_dense([[0, 1], [0, 0]])


def test_vertex_complement_path_to_triangle():
    tau, record = vertex_complement(make_graph(3, [(0, 1), (1, 2)]), 1)
    assert _edges(tau) == [(0, 1), (0, 2), (1, 2)]
    assert record == [(1, X_CHECK), (0, Z_HAT), (2, Z_HAT)]


def test_vertex_complement_isolated_vertex():
    g = make_graph(3, [(0, 1)])
    tau, record = vertex_complement(g, 2)
    assert _same(tau, g)
    assert record == [(2, X_CHECK)]


def test_vertex_complement_is_an_involution(make_random_graph):
    g = make_random_graph(7)
    tau, _ = vertex_complement(vertex_complement(g, 3)[0], 3)
    assert _same(tau, g)


def test_edge_complement_single_edge():
    g = make_graph(2, [(0, 1)])
    eps, record = edge_complement(g, 0, 1)
    assert _same(eps, g)
    assert record == [(0, H_GATE), (1, H_GATE)]


def test_edge_complement_on_path_matches_composition():
    g = make_graph(3, [(0, 1), (1, 2)])
    eps, _ = edge_complement(g, 0, 1)
    composed = vertex_complement(vertex_complement(vertex_complement(g, 0)[0], 1)[0], 0)[0]
    assert _same(eps, composed)
    assert _edges(eps) == [(0, 1), (0, 2)]


def test_edge_complement_needs_an_edge():
    with pytest.raises(ContractViolation):
        edge_complement(make_graph(3, [(0, 1)]), 0, 2)


def test_edge_complement_matches_class_description(make_random_graph):
    for _ in range(20):
        g = make_random_graph(7)
        for i, j in list(g.edges)[:3]:
            assert _same(edge_complement(g, i, j)[0], pivot_by_classes(g, i, j))


def test_complement_records_reproduce_states(rng, make_random_graph):
    for _ in range(15):
        n = int(rng.integers(2, 8))
        g = make_random_graph(n)
        i = int(rng.integers(n))
        tau, record = vertex_complement(g, i)
        assert equal_up_to_phase(graph_state(g), apply_record(graph_state(tau), record))
        for u, v in list(g.edges)[:2]:
            eps, record = edge_complement(g, u, v)
            assert equal_up_to_phase(graph_state(g), apply_record(graph_state(eps), record))


def test_gauss_jordan_single_odd_pivot():
    gj = gauss_jordan_wn(PhasedAdjacency.from_dense([[1]]), 1)
    assert gj.B == PhasedAdjacency.from_dense([[1]])
    assert gj.v.tolist() == [0]
    assert gj.pivot_log == [("one", (0,))]
    assert gj.alpha == ExactAmplitude.omega_power(-1)


def test_gauss_jordan_anti_block_is_self_inverse():
    a = PhasedAdjacency.from_dense([[0, 1], [1, 0]])
    gj = gauss_jordan_wn(a, 2)
    assert gj.B == a
    assert gj.v.tolist() == [0, 0]
    assert gj.pivot_log == [("anti", (0, 1))]
    assert gj.alpha == ExactAmplitude.one()


def test_gauss_jordan_rejects_singular_leading_block():
    with pytest.raises(EliminationError):
        gauss_jordan_wn(PhasedAdjacency.from_dense([[0, 0], [0, 0]]), 1, coerce=False)
    with pytest.raises(ContractViolation):
        gauss_jordan_wn(PhasedAdjacency.zeros(2), 3)


def test_gauss_jordan_inverts_leading_block(rng, make_pgs):
    for _ in range(30):
        a = make_pgs(int(rng.integers(1, 12)))
        k = rank(a.omega1())
        if k == 0:
            continue
        gj = gauss_jordan_wn(a, k)
        lead = list(range(k))
        a11 = a.permuted(gj.perm).omega1().select(rows=lead, cols=lead)
        b11 = gj.B.omega1().select(rows=lead, cols=lead)
        assert mul(b11, a11) == BitMatrix.identity(k)


def test_hadamard_amplitude_examples():
    a = PhasedAdjacency.from_dense([[1, 1], [1, 1]])
    got = [hadamard_amplitude_gj(a, BitVector.from_str(s)) for s in ("00", "01", "10", "11")]
    assert got == [ExactAmplitude.clifford(-1, -1), ExactAmplitude.zero(), ExactAmplitude.zero(),
                   ExactAmplitude.clifford(-1, 1)]


def test_hadamard_amplitude_matches_brute(rng, make_pgs):
    for _ in range(20):
        n = int(rng.integers(1, 7))
        a = make_pgs(n)
        for bits in itertools.product((0, 1), repeat=n):
            x = BitVector.from_bits(bits)
            assert hadamard_amplitude_gj(a, x) == pgs_brute_amplitude(a, x)


def test_trim_single_vertex():
    adjacency, phase, scale = trim_z_vertices(make_graph(1), {0: 0})
    assert adjacency.n == 0
    assert phase == ExactAmplitude.one()
    assert scale == ExactAmplitude.sqrt2_power(-1)


def test_trim_adds_z_to_neighbour():
    result = trim_z_vertices(make_graph(2, [(0, 1)]), {0: 1})
    assert result.adjacency.to_dense().tolist() == [[2]]
    assert result.scale == ExactAmplitude.sqrt2_power(-1)
    assert result.kept == [1]


def test_trim_phase_from_trimmed_block():
    a = PhasedAdjacency.from_dense([[1, 1, 0], [1, 0, 1], [0, 1, 0]])
    result = trim_z_vertices(a, {0: 1, 1: 1})
    # xᵀA_SS x = 1 + 2 = 3，(−i)^3 = i
    assert result.phase == ExactAmplitude.omega_power(2)
    assert result.adjacency.to_dense().tolist() == [[2]]
    assert result.scale == ExactAmplitude.sqrt2_power(-2)


def test_trim_rejects_bad_vertex():
    with pytest.raises(ContractViolation):
        trim_z_vertices(make_graph(2), {5: 0})


def test_pgs_text(tmp_path, make_pgs):
    a = make_pgs(9)
    assert parse_pgs(format_pgs(a)) == a
    write_pgs(a, tmp_path / "a.pgs")
    assert read_pgs(tmp_path / "a.pgs") == a
    assert parse_pgs("pgs 2\nd 1 3  # comment\ne 0 1\n").to_dense().tolist() == [[0, 1], [1, 3]]


@pytest.mark.parametrize("text", ["", "d 0 1\n", "pgs 2\ne 1 1\n", "pgs 2\nq 0\n"])
def test_pgs_text_errors(text):
    with pytest.raises(ContractViolation):
        parse_pgs(text)
