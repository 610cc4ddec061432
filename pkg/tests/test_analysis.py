import networkx as nx
import pytest

import analysis
from analysis import (LcWitness, find_witness, graph_from_key, graph_key, learn_graph_state, lc_equivalent,
                      lc_orbit, lc_path, lc_verify_witness, orbit_diameter)
from config import Config
from errors import LimitExceeded, ShapeError
from oracle import graph_state, hadamard_all
from pgs import vertex_complement
from selftest import all_graphs


def _path3():
    return nx.path_graph(3)


def test_trivial_witness():
    g = _path3()
    assert lc_verify_witness(g, g, LcWitness([0, 1, 2], [0, 1, 2], [0, 0, 0], [0, 0, 0], 0))


def test_witness_rejects_bad_permutation():
    g = _path3()
    assert not lc_verify_witness(g, g, LcWitness([0, 0, 2], [0, 1, 2], [0, 0, 0], [0, 0, 0], 0))


def test_path_and_triangle_are_equivalent():
    p3, k3 = _path3(), nx.complete_graph(3)
    ok, wit = lc_equivalent(p3, k3)
    assert ok
    assert lc_verify_witness(k3, p3, wit)


def test_path_and_empty_graph_are_not_equivalent():
    empty = nx.empty_graph(3)
    assert lc_equivalent(_path3(), empty) == (False, None)
    assert lc_equivalent(_path3(), nx.path_graph(4)) == (False, None)


def test_shared_order_witness_exists_across_orbits():
    for g in all_graphs(4)[::9]:
        for key in sorted(lc_orbit(g), key=sorted)[:3]:
            h = graph_from_key(4, key)
            wit = find_witness(h, g)
            assert wit is not None
            assert wit.perm_a == wit.perm_b
            assert lc_verify_witness(h, g, wit)


def test_non_equivalent_pair_has_no_witness():
    assert find_witness(nx.empty_graph(3), _path3()) is None


def test_orbit_of_empty_graph():
    assert lc_orbit(nx.empty_graph(4)) == {frozenset()}


def test_star_orbit_contains_complete_graph():
    assert graph_key(nx.complete_graph(4)) in lc_orbit(nx.star_graph(3))


def test_labeled_orbits_partition_all_graphs():
    graphs = all_graphs(4)
    assert len(graphs) == 64
    seen = {}
    for g in graphs:
        key = graph_key(g)
        orbit = frozenset(lc_orbit(g))
        assert key in orbit
        for member in orbit:
            assert seen.setdefault(member, orbit) == orbit
    assert len(seen) == 64


def test_path_replays_vertex_complements(rng, make_random_graph):
    for _ in range(10):
        g1 = make_random_graph(5)
        g2 = g1
        for i in rng.integers(0, 5, size=4):
            g2 = vertex_complement(g2, int(i))[0]
        path = lc_path(g1, g2)
        assert path is not None and len(path) <= 4
        g = g1
        for i in path:
            g = vertex_complement(g, i)[0]
        assert graph_key(g) == graph_key(g2)


def test_diameter_bound(make_random_graph):
    assert orbit_diameter(nx.empty_graph(3)) == 0
    for n in range(2, 6):
        g = make_random_graph(n)
        assert 0 <= orbit_diameter(g) <= (3 * n) // 2


def test_size_limits():
    with pytest.raises(LimitExceeded):
        lc_orbit(nx.path_graph(9))
    with pytest.raises(LimitExceeded):
        orbit_diameter(nx.path_graph(8))


# ===================== 学习 =====================
def test_learn_empty_graph():
    result = learn_graph_state(nx.empty_graph(4), 0.1)
    assert result.rank == 0 and result.circuit == [] and result.success


def test_learn_single_edge():
    result = learn_graph_state(nx.path_graph(2), 1e-6)
    assert result.rank == 2 and result.true_rank == 2 and result.success


@pytest.mark.parametrize("delta", [0, 1, 1.5, -0.2])
def test_learn_rejects_delta(delta):
    with pytest.raises(ShapeError):
        learn_graph_state(nx.path_graph(3), delta)


def test_learn_draws_each_sample_once(monkeypatch):
    drawn = []
    real = analysis.weak_sample

    def counting(ctx, spec, *args, **kwargs):
        assert spec.start == sum(drawn)
        drawn.append(spec.count)
        return real(ctx, spec, *args, **kwargs)

    monkeypatch.setattr(analysis, "weak_sample", counting)
    result = learn_graph_state(nx.path_graph(2), 1e-80)
    assert result.measurements > Config.SAMPLE_BATCH
    assert sum(drawn) < result.measurements + Config.SAMPLE_BATCH
    assert all(count == Config.SAMPLE_BATCH for count in drawn)


def test_disentangler_clears_other_qubits(make_random_graph):
    for n in range(1, 8):
        g = make_random_graph(n)
        result = learn_graph_state(g, 1e-6)
        assert result.success
        state = hadamard_all(graph_state(g))
        for name, qubits in result.circuit:
            state.apply_gate(name, qubits)
        rest = [q for q in range(n) if q not in result.kept]
        for index, amp in enumerate(state.amplitudes):
            if abs(amp) > 1e-9:
                assert all(not (index >> q) & 1 for q in rest), (n, sorted(g.edges))
