"""图态的局部 Clifford 等价（见证验证、小规模轨道搜索、直径）以及低秩图态学习协议的模拟。"""
import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Set, Tuple

import networkx as nx
import numpy as np

from config import Config
from errors import EliminationError, LimitExceeded, ShapeError
from gf2core import BitMatrix, BitVector, affine_solutions, in_span, rank
from ldl import ldl_reduced
from pgs import PhasedAdjacency, gauss_jordan_wn, vertex_complement
from sim import SampleSpec, prepare, weak_sample

logger = logging.getLogger(__name__)

GraphKey = FrozenSet[Tuple[int, int]]


# ===================== 数据模型 =====================
@dataclass
class LcWitness:
    perm_a: List[int]
    perm_b: List[int]
    u: List[int]
    v: List[int]
    k: int


@dataclass
class LearnResult:
    rank: int
    circuit: List[Tuple[str, Tuple[int, ...]]]
    kept: List[int]                  # 承载 |φ⟩ 的量子比特
    measurements: int
    success: bool
    true_rank: int = 0
    basis: List[BitVector] = field(default_factory=list)


# ===================== 工具 =====================
def graph_key(g: nx.Graph) -> GraphKey:
    return frozenset((min(u, v), max(u, v)) for u, v in g.edges)


def graph_from_key(n: int, key: GraphKey) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_edges_from(key)
    return g


def _adjacency(g: nx.Graph) -> np.ndarray:
    n = g.number_of_nodes()
    a = np.zeros((n, n), dtype=np.int64)
    for u, v in g.edges:
        a[u, v] = a[v, u] = 1
    return a


# ===================== 见证 =====================
def lc_verify_witness(adj_a: nx.Graph, adj_b: nx.Graph, wit: LcWitness) -> bool:
    """A + D(u) = ω1(Γ_k(B + D(v)))，A、B 分别按 perm_a、perm_b 重排"""
    n = adj_a.number_of_nodes()
    if adj_b.number_of_nodes() != n:
        raise ShapeError(f"vertex counts differ: {n} vs {adj_b.number_of_nodes()}")
    if sorted(wit.perm_a) != list(range(n)) or sorted(wit.perm_b) != list(range(n)) or not 0 <= wit.k <= n:
        return False
    a = _adjacency(adj_a)[np.ix_(wit.perm_a, wit.perm_a)]
    b = _adjacency(adj_b)[np.ix_(wit.perm_b, wit.perm_b)]
    np.fill_diagonal(b, np.asarray(wit.v, dtype=np.int64) & 1)
    try:
        gamma = gauss_jordan_wn(PhasedAdjacency.from_dense(b), wit.k, coerce=False)
    except EliminationError:
        return False
    lhs = a.copy()
    np.fill_diagonal(lhs, np.asarray(wit.u, dtype=np.int64) & 1)
    return bool(np.array_equal(gamma.B.omega1().to_dense().astype(np.int64), lhs))


def _pivot_order(b: np.ndarray, subset: Tuple[int, ...]) -> Optional[List[int]]:
    """子块满秩时给出一个合法的主元次序（约化 LDL 的主元顺序）"""
    if not subset:
        return []
    sub = BitMatrix.from_dense(b[np.ix_(subset, subset)] % 2)
    f = ldl_reduced(sub)
    if f.rank != len(subset):
        return None
    return [subset[i] for i in f.perm]


def find_witness(g1: nx.Graph, g2: nx.Graph) -> Optional[LcWitness]:
    """枚举主元集合 S 与其上的对角 v，求 A + D(u) = ω1(Γ_k(B + D(v))) 的见证。

    带标号的局部互补只需要两图共用一个顶点次序（perm_a = perm_b），不搜索独立的 (π_A, π_B)；
    是否等价由 lc_equivalent 的轨道检查判定，这里只负责给出可验证的见证
    """
    n = g1.number_of_nodes()
    a = _adjacency(g1)
    base = _adjacency(g2)
    for size in range(n + 1):
        for subset in itertools.combinations(range(n), size):
            for bits in itertools.product((0, 1), repeat=size):
                b = base.copy()
                v = [0] * n
                for vert, bit in zip(subset, bits):
                    b[vert, vert] = bit
                    v[vert] = bit
                order = _pivot_order(b, subset)
                if order is None:
                    continue
                perm = order + [x for x in range(n) if x not in subset]
                try:
                    gamma = gauss_jordan_wn(PhasedAdjacency.from_dense(b[np.ix_(perm, perm)]), size, coerce=False)
                except EliminationError:
                    continue
                result = gamma.B.omega1().to_dense().astype(np.int64)
                target = a[np.ix_(perm, perm)]
                off = result.copy()
                np.fill_diagonal(off, 0)
                if np.array_equal(off, target):
                    wit = LcWitness(perm, perm, np.diag(result).tolist(), [v[x] for x in perm], size)
                    if lc_verify_witness(g1, g2, wit):
                        return wit
    return None


# ===================== 轨道 =====================
def _check_size(n: int, limit: int, what: str) -> None:
    if n > limit:
        raise LimitExceeded(f"{what} is limited to n <= {limit}, got {n}")


def _neighbours(n: int, key: GraphKey) -> List[GraphKey]:
    g = graph_from_key(n, key)
    return [graph_key(vertex_complement(g, i)[0]) for i in range(n)]


def lc_orbit(g: nx.Graph) -> Set[GraphKey]:
    """τ_i 闭包的带标号轨道"""
    n = g.number_of_nodes()
    _check_size(n, Config.MAX_ORBIT_VERTICES, "orbit enumeration")
    start = graph_key(g)
    seen = {start}
    queue = deque([start])
    while queue:
        key = queue.popleft()
        for nxt in _neighbours(n, key):
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    logger.debug(f"lc_orbit: n={n}, size={len(seen)}")
    return seen


def _distances(n: int, start: GraphKey) -> Dict[GraphKey, int]:
    dist = {start: 0}
    queue = deque([start])
    while queue:
        key = queue.popleft()
        for nxt in _neighbours(n, key):
            if nxt not in dist:
                dist[nxt] = dist[key] + 1
                queue.append(nxt)
    return dist


def lc_path(g1: nx.Graph, g2: nx.Graph) -> Optional[List[int]]:
    """从 g1 到 g2 的一条最短顶点补序列"""
    n = g1.number_of_nodes()
    start, goal = graph_key(g1), graph_key(g2)
    prev: Dict[GraphKey, Tuple[GraphKey, int]] = {}
    seen = {start}
    queue = deque([start])
    while queue:
        key = queue.popleft()
        if key == goal:
            path = []
            while key != start:
                key, i = prev[key]
                path.append(i)
            return path[::-1]
        for i, nxt in enumerate(_neighbours(n, key)):
            if nxt not in seen:
                seen.add(nxt)
                prev[nxt] = (key, i)
                queue.append(nxt)
    return None


def lc_equivalent(g1: nx.Graph, g2: nx.Graph) -> Tuple[bool, Optional[LcWitness]]:
    n = g1.number_of_nodes()
    if g2.number_of_nodes() != n:
        return False, None
    _check_size(n, Config.MAX_ORBIT_VERTICES, "LC equivalence")
    if graph_key(g2) not in lc_orbit(g1):
        return False, None
    wit = find_witness(g2, g1)
    if wit is None:
        logger.error("orbit search and witness search disagree")
        raise EliminationError(0, "no Gauss-Jordan witness for LC-equivalent graphs")
    return True, wit


def _unlabeled_classes(n: int, orbit: Set[GraphKey]) -> List[List[GraphKey]]:
    buckets: Dict[str, List[Tuple[nx.Graph, List[GraphKey]]]] = {}
    for key in sorted(orbit, key=sorted):
        g = graph_from_key(n, key)
        h = nx.weisfeiler_lehman_graph_hash(g)
        for rep, members in buckets.setdefault(h, []):
            if nx.is_isomorphic(rep, g):
                members.append(key)
                break
        else:
            buckets[h].append((g, [key]))
    return [members for h in sorted(buckets) for _, members in buckets[h]]


def orbit_diameter(g: nx.Graph) -> int:
    """无标号轨道中两类之间最短顶点补距离的最大值"""
    n = g.number_of_nodes()
    _check_size(n, Config.MAX_DIAMETER_VERTICES, "orbit diameter")
    classes = _unlabeled_classes(n, lc_orbit(g))
    diameter = 0
    for members in classes:
        dist = _distances(n, members[0])
        for other in classes:
            diameter = max(diameter, min(dist[k] for k in other))
    bound = (3 * n) // 2
    if diameter > bound:
        logger.warning(f"orbit diameter {diameter} exceeds the bound {bound}")
    return diameter


# ===================== 学习 =====================
def _disentangler(basis: np.ndarray, offset: np.ndarray) -> Tuple[List[Tuple[str, Tuple[int, ...]]], List[int]]:
    """basis: n×r 列满秩；选可逆行块 A1，剩余比特 z ⊕= A2·A1⁻¹(y ⊕ b1) ⊕ b2"""
    n, r = basis.shape
    kept: List[int] = []
    for i in range(n):
        trial = kept + [i]
        if rank(BitMatrix.from_dense(basis[trial])) == len(trial):
            kept = trial
        if len(kept) == r:
            break
    rest = [i for i in range(n) if i not in kept]
    a1 = basis[kept].astype(np.int64)
    circuit: List[Tuple[str, Tuple[int, ...]]] = []
    for j in rest:
        # 行 j 的组合系数：basis[j] = m·A1，即解 A1ᵀ·m = basis[j]ᵀ
        m = np.zeros(r, dtype=np.int64)
        if r:
            sol = affine_solutions(BitMatrix.from_dense(a1.T), BitVector.from_bits(basis[j]))
            m = sol[0].to_bits().astype(np.int64)
        for idx, i in enumerate(kept):
            if m[idx]:
                circuit.append(("CNOT", (i, j)))
        if (int(m @ offset[kept]) + int(offset[j])) % 2:
            circuit.append(("X", (j,)))
    return circuit, kept


def learn_graph_state(target: nx.Graph, delta: float, seed: int = Config.DEFAULT_SEED) -> LearnResult:
    """单拷贝计算基测量 H^{⊗n}|G⟩，用逐次差分采样 span(A)，秩连续 s 次不增即停止"""
    if not 0 < delta < 1:
        raise ShapeError(f"delta must lie in (0, 1), got {delta}")
    n = target.number_of_nodes()
    s = math.ceil(math.log2(1 / delta))
    ctx = prepare(PhasedAdjacency.from_graph(target))
    batch = Config.SAMPLE_BATCH
    drawn: List[BitVector] = []

    def measure(i: int) -> BitVector:
        while i >= len(drawn):
            drawn.extend(weak_sample(ctx, SampleSpec(seed=seed, count=batch, start=len(drawn))))
        return drawn[i]

    first = measure(0)
    vectors: List[BitVector] = []
    stale = 0
    index = 1
    while stale < s:
        diff = measure(index) ^ first
        index += 1
        basis = BitMatrix.from_columns(vectors, n) if vectors else BitMatrix.zeros(n, 0)
        if diff.any() and not in_span(basis, diff):
            vectors.append(diff)
            stale = 0
        else:
            stale += 1
    r = len(vectors)
    basis = np.stack([v.to_bits() for v in vectors], axis=1) if vectors else np.zeros((n, 0), dtype=np.uint8)
    circuit, kept = _disentangler(basis, first.to_bits().astype(np.int64))
    true_rank = rank(BitMatrix.from_dense(_adjacency(target))) if n else 0
    result = LearnResult(r, circuit, kept, index, r == true_rank, true_rank, vectors)
    logger.info(f"learn_graph_state: n={n}, r={r}, true_rank={true_rank}, measurements={index}")
    return result
