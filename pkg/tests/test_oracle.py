import cmath
import math

import numpy as np
import pytest

from errors import ContractViolation, LimitExceeded, UnsupportedGateError
from gf2core import BitVector
from oracle import (GATE_MATRICES, X_CHECK, Z_CHECK, DenseState, OneQubitClifford, Tableau, equal_up_to_phase,
                    euler_decompose, euler_matrix, graph_with_local_ops, pgs_brute_amplitude, stabilizers_to_graph,
                    stabilizes, statevector, tableau_run)
from pgs import PhasedAdjacency
from ring import ExactAmplitude
from zxfront import all_outputs, parse_circuit

ROOT_HALF = 1 / math.sqrt(2)


def test_statevector_hadamard():
    state = statevector(parse_circuit("H 0"))
    assert np.allclose(state.amplitudes, [ROOT_HALF, ROOT_HALF])


def test_statevector_cnot_and_bell():
    assert np.allclose(statevector(parse_circuit("H 1\nCZ 0 1\nH 1")).amplitudes, [1, 0, 0, 0])
    bell = statevector(parse_circuit("H 0\nCNOT 0 1"))
    assert np.allclose(bell.amplitudes, [ROOT_HALF, 0, 0, ROOT_HALF])
    assert bell.exact(3) == ExactAmplitude.clifford(-1, 0)
    assert bell.exact(1) == ExactAmplitude.zero()


def test_qubit_zero_is_low_bit():
    state = statevector(parse_circuit("qubits 2\nX 0"))
    assert state.amplitude(BitVector.from_str("10")) == pytest.approx(1)
    assert abs(state.amplitudes[1] - 1) < 1e-12


def test_dense_limit():
    with pytest.raises(LimitExceeded):
        DenseState(15)


def test_equal_up_to_phase():
    state = statevector(parse_circuit("H 0\nS 0"))
    rotated = DenseState(1, state.amplitudes * cmath.exp(0.3j))
    assert equal_up_to_phase(state, rotated)
    assert not equal_up_to_phase(state, statevector(parse_circuit("H 0")))


def test_brute_amplitude_examples():
    assert pgs_brute_amplitude(PhasedAdjacency.zeros(2), BitVector.from_str("00")) == ExactAmplitude.one()
    a = PhasedAdjacency.from_dense([[1]])
    assert pgs_brute_amplitude(a, BitVector.from_str("0")) == ExactAmplitude.clifford(-1, -1)


def test_brute_amplitude_normalization(make_pgs):
    for n in range(1, 7):
        total = ExactAmplitude.zero()
        a = make_pgs(n)
        for x in all_outputs(n):
            total = total + pgs_brute_amplitude(a, x).abs2()
        assert total == ExactAmplitude.one()


# ===================== 稳定子表 =====================
def test_tableau_hadamard_gives_x():
    t = tableau_run(parse_circuit("H 0"))
    assert (t.z.tolist(), t.x.tolist(), t.r.tolist()) == ([[0]], [[1]], [0])


def test_tableau_hs_gives_y():
    t = tableau_run(parse_circuit("H 0\nS 0"))
    assert (t.z.tolist(), t.x.tolist(), t.r.tolist()) == ([[1]], [[1]], [0])


def test_tableau_x_flips_sign():
    t = tableau_run(parse_circuit("X 0"))
    assert (t.z.tolist(), t.x.tolist(), t.r.tolist()) == ([[1]], [[0]], [1])


def test_tableau_refuses_t():
    with pytest.raises(UnsupportedGateError):
        tableau_run(parse_circuit("H 0\nT 0"))


def test_tableau_stabilizes_dense_state(rng, make_circuit):
    for _ in range(25):
        c = make_circuit(int(rng.integers(1, 7)), int(rng.integers(1, 50)))
        t = tableau_run(c)
        assert t.is_valid()
        assert stabilizes(t, statevector(c)), c.to_text()


def test_graph_from_graph_state_stabilizers():
    t = Tableau(np.array([[0, 1], [1, 0]], dtype=np.uint8), np.eye(2, dtype=np.uint8), np.zeros(2, dtype=np.uint8))
    g, a, b, c = stabilizers_to_graph(t)
    assert sorted(g.edges) == [(0, 1)]
    assert not (a.any() or b.any() or c.any())


def test_graph_from_computational_zero():
    g, a, b, c = stabilizers_to_graph(Tableau.zero_state(1))
    assert g.number_of_nodes() == 1 and g.number_of_edges() == 0
    assert a.tolist() == [1] and b.tolist() == [0] and c.tolist() == [0]


def test_dependent_rows_rejected():
    t = Tableau(np.array([[1, 0], [1, 0]], dtype=np.uint8), np.zeros((2, 2), dtype=np.uint8),
                np.zeros(2, dtype=np.uint8))
    with pytest.raises(ContractViolation):
        stabilizers_to_graph(t)


def test_graph_form_reproduces_state(rng, make_circuit):
    for _ in range(25):
        c = make_circuit(int(rng.integers(1, 7)), int(rng.integers(1, 50)))
        g, a, b, cc = stabilizers_to_graph(tableau_run(c))
        assert equal_up_to_phase(statevector(c), graph_with_local_ops(g, a, b, cc)), c.to_text()


# ===================== 单比特 Clifford =====================
def test_check_gates():
    assert np.allclose(Z_CHECK @ Z_CHECK, GATE_MATRICES["Z"])
    assert np.allclose(X_CHECK @ X_CHECK, GATE_MATRICES["X"])


def test_euler_identity_and_z_check():
    assert euler_decompose(OneQubitClifford.from_matrix(np.eye(2))) == (0, 0, 0)
    assert euler_decompose(OneQubitClifford.from_matrix(Z_CHECK)) == (1, 0, 0)


def test_euler_hadamard_has_odd_middle_exponent():
    a, b, c = euler_decompose(OneQubitClifford.from_matrix(GATE_MATRICES["H"]))
    assert b % 2 == 1
    assert OneQubitClifford.from_matrix(euler_matrix(a, b, c)) == OneQubitClifford.from_matrix(GATE_MATRICES["H"])


def test_euler_is_total_and_composes():
    group = OneQubitClifford.all()
    assert len(set(group)) == 24
    for u in group:
        assert OneQubitClifford.from_matrix(euler_matrix(*euler_decompose(u))) == u
    for u in group[::5]:
        for v in group[::7]:
            assert OneQubitClifford.from_matrix(euler_matrix(*euler_decompose(u * v))) \
                == OneQubitClifford.from_matrix(u.matrix @ v.matrix)


def test_non_clifford_matrix_rejected():
    with pytest.raises(ContractViolation):
        OneQubitClifford.from_matrix(GATE_MATRICES["T"])
