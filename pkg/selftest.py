"""交叉校验套件与基准网格：LDL 模拟结果逐一对照 oracle 中的独立引擎。"""
import itertools
import logging
import math
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import networkx as nx
import numpy as np

from analysis import find_witness, graph_key, lc_orbit, learn_graph_state, lc_verify_witness, orbit_diameter
from config import Config
from gf2core import BitMatrix, BitVector, rank
from ldl import ldl_reduced
from oracle import (GATE_MATRICES, X_CHECK, OneQubitClifford, euler_decompose, euler_matrix, graph_state,
                    graph_with_local_ops, equal_up_to_phase, pgs_brute_amplitude, stabilizers_to_graph,
                    stabilizes, statevector, tableau_run)
from pgs import H_GATE, X_CHECK as X_CHECK_GATE, Z_GATE, Z_HAT, PhasedAdjacency, edge_complement, vertex_complement
from sim import EMPTY, SampleSpec, prepare, strong_eval, weak_sample
from zxfront import CliffordCircuit, all_outputs, clifford_t_strong, reduce_to_pgs, sample_circuit

logger = logging.getLogger(__name__)

CLIFFORD_GATES = ("H", "S", "SDG", "Z", "X", "CZ", "CNOT")
RECORD_MATRICES = {X_CHECK_GATE: X_CHECK, Z_HAT: GATE_MATRICES["S"], H_GATE: GATE_MATRICES["H"],
                   Z_GATE: GATE_MATRICES["Z"]}


# ===================== 随机实例 =====================
def random_circuit(n: int, m: int, rng: np.random.Generator, t_gates: int = 0) -> CliffordCircuit:
    c = CliffordCircuit(n)
    names = [name for name in CLIFFORD_GATES if n > 1 or name not in ("CZ", "CNOT")]
    slots = set(rng.choice(m, size=min(t_gates, m), replace=False).tolist()) if t_gates else set()
    for i in range(m):
        if i in slots:
            c.add("T" if rng.random() < 0.5 else "TDG", int(rng.integers(n)))
            continue
        name = names[int(rng.integers(len(names)))]
        if name in ("CZ", "CNOT"):
            a, b = rng.choice(n, size=2, replace=False)
            c.add(name, int(a), int(b))
        else:
            c.add(name, int(rng.integers(n)))
    return c


def random_graph(n: int, rng: np.random.Generator, density: float = 0.5) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_edges_from((u, v) for u, v in itertools.combinations(range(n), 2) if rng.random() < density)
    return g


def all_graphs(n: int) -> List[nx.Graph]:
    pairs = list(itertools.combinations(range(n), 2))
    out = []
    for mask in range(2 ** len(pairs)):
        g = nx.Graph()
        g.add_nodes_from(range(n))
        g.add_edges_from(p for i, p in enumerate(pairs) if mask >> i & 1)
        out.append(g)
    return out


def apply_record(state, record):
    """按记录 [(顶点, 门)] 依次作用局部门"""
    for q, gate in record:
        state.apply_1q(RECORD_MATRICES[gate], q)
    return state


# ===================== 套件 =====================
@dataclass
class SuiteResult:
    name: str
    passed: int = 0
    total: int = 0
    failures: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.passed == self.total

    def check(self, cond: bool, note: str) -> None:
        self.total += 1
        if cond:
            self.passed += 1
        elif len(self.failures) < 5:
            self.failures.append(note)


def suite_strong_vs_dense(rng, quick: bool, alpha_rule: str) -> SuiteResult:
    res = SuiteResult("strong_vs_dense")
    for trial in range(20 if quick else 200):
        n = int(rng.integers(1, 5 if quick else 9))
        c = random_circuit(n, int(rng.integers(1, 30 if quick else 101)), rng)
        state = statevector(c)
        inst = reduce_to_pgs(c)
        ctx = prepare(inst.A, inst.td, alpha_rule)
        xs = all_outputs(n)
        amps = strong_eval(ctx, [inst.assemble(x) for x in xs])
        good = all(abs((inst.scalar * amp).to_complex() - state.amplitude(x)) < Config.FLOAT_TOL
                   for x, amp in zip(xs, amps))
        res.check(good, f"trial {trial}: {c.to_text()!r}")
    return res


def suite_pgs_vs_brute(rng, quick: bool, alpha_rule: str) -> SuiteResult:
    res = SuiteResult("pgs_vs_brute")
    for trial in range(20 if quick else 100):
        n = int(rng.integers(1, 7 if quick else 13))
        a = PhasedAdjacency.random(n, rng)
        ctx = prepare(a, alpha_rule=alpha_rule)
        xs = [BitVector.from_int(int(v), n) for v in rng.integers(0, 2 ** n, size=min(2 ** n, 32))]
        got = strong_eval(ctx, xs)
        res.check(all(g == pgs_brute_amplitude(a, x) for g, x in zip(got, xs)), f"trial {trial}: {a.to_dense().tolist()}")
    return res


def suite_ldl(rng, quick: bool, alpha_rule: str) -> SuiteResult:
    res = SuiteResult("ldl_identities")
    for trial in range(50 if quick else 500):
        n = int(rng.integers(1, 65 if quick else 513))
        upper = np.triu((rng.random((n, n)) < rng.random()).astype(np.uint8))
        m = BitMatrix.from_dense(upper | upper.T)
        f = ldl_reduced(m)
        res.check(f.reconstruct() == m and f.rank == rank(m), f"trial {trial}: n={n}")
    return res


def suite_sampler(rng, quick: bool, alpha_rule: str) -> SuiteResult:
    res = SuiteResult("weak_sampler")
    count = 8000 if quick else 100000
    bound = 0.06 if quick else 0.02
    for trial in range(5 if quick else 20):
        n = int(rng.integers(1, 7))
        a = PhasedAdjacency.random(n, rng)
        ctx = prepare(a, alpha_rule=alpha_rule)
        s = sorted(rng.choice(n, size=int(rng.integers(0, n)), replace=False).tolist())
        y = rng.integers(0, 2, size=len(s)).tolist()
        domain = [x for x in all_outputs(n) if all(x.get(i) == b for i, b in zip(s, y))]
        support = {x.to_str() for x, amp in zip(domain, strong_eval(ctx, domain)) if amp}
        samples = weak_sample(ctx, SampleSpec(tuple(s), tuple(y), seed=trial, count=count))
        if samples is EMPTY:
            res.check(not support, f"trial {trial}: EMPTY but support has {len(support)} strings")
            continue
        freq = Counter(x.to_str() for x in samples)
        tv = 0.5 * sum(abs(freq.get(k, 0) / count - (1 / len(support) if k in support else 0))
                       for k in support | set(freq))
        res.check(bool(support) and set(freq) <= support and tv < bound, f"trial {trial}: tv={tv:.4f}")
    return res


def suite_complement(rng, quick: bool, alpha_rule: str) -> SuiteResult:
    res = SuiteResult("complementation")
    for trial in range(20 if quick else 200):
        n = int(rng.integers(2, 9))
        g = random_graph(n, rng)
        i = int(rng.integers(n))
        tau, record = vertex_complement(g, i)
        res.check(equal_up_to_phase(graph_state(g), apply_record(graph_state(tau), record)), f"tau {trial}")
        if g.number_of_edges():
            u, v = list(g.edges)[int(rng.integers(g.number_of_edges()))]
            eps, record = edge_complement(g, u, v)
            res.check(equal_up_to_phase(graph_state(g), apply_record(graph_state(eps), record)), f"eps {trial}")
    return res


def suite_tableau(rng, quick: bool, alpha_rule: str) -> SuiteResult:
    res = SuiteResult("tableau")
    for trial in range(20 if quick else 200):
        n = int(rng.integers(1, 9))
        c = random_circuit(n, int(rng.integers(1, 60)), rng)
        state = statevector(c)
        t = tableau_run(c)
        g, a, b, cc = stabilizers_to_graph(t)
        res.check(stabilizes(t, state) and equal_up_to_phase(state, graph_with_local_ops(g, a, b, cc)),
                  f"trial {trial}: {c.to_text()!r}")
    for u in OneQubitClifford.all():
        res.check(OneQubitClifford.from_matrix(euler_matrix(*euler_decompose(u))) == u, f"euler {u.index}")
    return res


def suite_clifford_t(rng, quick: bool, alpha_rule: str) -> SuiteResult:
    res = SuiteResult("clifford_t")
    for trial in range(5 if quick else 100):
        n = int(rng.integers(1, 4 if quick else 7))
        c = random_circuit(n, int(rng.integers(2, 25)), rng, t_gates=int(rng.integers(1, 4 if quick else 9)))
        state = statevector(c)
        xs = all_outputs(n)
        gray = clifford_t_strong(c, xs)
        good = all(abs(amp.to_complex() - state.amplitude(x)) < Config.FLOAT_TOL for x, amp in zip(xs, gray))
        if not quick:
            good = good and gray == clifford_t_strong(c, xs, order="naive")
        res.check(good, f"trial {trial}: {c.to_text()!r}")
    return res


def suite_lc(rng, quick: bool, alpha_rule: str) -> SuiteResult:
    res = SuiteResult("lc_equivalence")
    n = 3 if quick else 4
    graphs = all_graphs(n)
    for g1 in graphs:
        orbit = lc_orbit(g1)
        for g2 in graphs:
            wit = find_witness(g2, g1)
            agree = (graph_key(g2) in orbit) == (wit is not None and lc_verify_witness(g2, g1, wit))
            res.check(agree, f"{sorted(g1.edges)} vs {sorted(g2.edges)}")
    for size in range(1, 5 if quick else 7):
        covered = set()
        for g in all_graphs(size):
            if graph_key(g) in covered:
                continue
            covered |= lc_orbit(g)
            res.check(orbit_diameter(g) <= (3 * size) // 2, f"diameter {sorted(g.edges)}")
    return res


def suite_learning(rng, quick: bool, alpha_rule: str) -> SuiteResult:
    res = SuiteResult("learning")
    trials = 50 if quick else 1000
    delta = 0.01
    s = math.ceil(math.log2(1 / delta))
    failures = 0
    for trial in range(trials):
        g = random_graph(int(rng.integers(1, 11)), rng, float(rng.random()))
        out = learn_graph_state(g, delta, seed=trial)
        failures += not out.success
        res.check(out.measurements <= 2 * (out.rank + 1) * (s + 1), f"trial {trial}: {out.measurements} measurements")
    res.check(failures <= 0.02 * trials or (quick and failures <= 2), f"{failures} failed recoveries")
    return res


SUITES: Dict[str, Callable] = {
    "strong_vs_dense": suite_strong_vs_dense,
    "pgs_vs_brute": suite_pgs_vs_brute,
    "ldl_identities": suite_ldl,
    "weak_sampler": suite_sampler,
    "complementation": suite_complement,
    "tableau": suite_tableau,
    "clifford_t": suite_clifford_t,
    "lc_equivalence": suite_lc,
    "learning": suite_learning,
}


def run_selftest(quick: bool = False, seed: int = Config.DEFAULT_SEED, alpha_rule: str = "exact",
                 only: Optional[List[str]] = None) -> List[SuiteResult]:
    results = []
    for name, suite in SUITES.items():
        if only and name not in only:
            continue
        start = time.perf_counter()
        res = suite(np.random.default_rng([seed, len(results)]), quick, alpha_rule)
        logger.info(f"suite {name}: {res.passed}/{res.total} in {time.perf_counter() - start:.2f}s")
        for note in res.failures:
            logger.warning(f"suite {name} failure: {note}")
        results.append(res)
    return results


# ===================== 基准 =====================
def _timed(fn):
    start = time.perf_counter()
    out = fn()
    return time.perf_counter() - start, out


def run_bench(seed: int = Config.DEFAULT_SEED, quick: bool = False) -> List[dict]:
    """(n, m, k) 网格：prepare / strong / sample 计时，附稳定子表基线"""
    rng = np.random.default_rng(seed)
    ns = (8, 16) if quick else (16, 64, 256)
    ms = (50, 100) if quick else (200, 400, 800)
    ks = (16, 32) if quick else (64, 128)
    rows = []
    for n in ns:
        for m in ms:
            c = random_circuit(n, m, rng)
            t_reduce, inst = _timed(lambda: reduce_to_pgs(c))
            t_prepare, ctx = _timed(lambda: prepare(inst.A, inst.td))
            t_tableau, _ = _timed(lambda: tableau_run(c))
            for k in ks:
                xs = [inst.assemble(BitVector.from_bits(rng.integers(0, 2, size=n))) for _ in range(k)]
                t_strong, _ = _timed(lambda: strong_eval(ctx, xs))
                t_sample, _ = _timed(lambda: sample_circuit(c, k, seed, strategy="basis"))
                rows.append({"n": n, "m": m, "k": k, "N": inst.N, "width": inst.td.width,
                             "reduce": t_reduce, "prepare": t_prepare, "strong": t_strong,
                             "sample": t_sample, "tableau": t_tableau})
                logger.debug(f"bench row: {rows[-1]}")
    return rows
