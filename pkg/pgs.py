"""相位图态：J_n 矩阵、直接振幅、顶点/边补、Gauss-Jordan-W_n 过程与 Z 基顶点裁剪。

|A⟩ = Ž^{d(A)}|G⟩，其中 G 由 A 的非对角部分给出，对角线取值于 Z4。
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np

from errors import ContractViolation, EliminationError, ShapeError
from gf2core import BitMatrix, BitVector, rank
from ring import ExactAmplitude

logger = logging.getLogger(__name__)

# 门记号
X_CHECK, Z_HAT, H_GATE, Z_GATE = "X_CHECK", "Z_HAT", "H", "Z"
LocalGateRecord = List[Tuple[int, str]]


# ===================== 数据模型 =====================
class PhasedAdjacency:
    def __init__(self, offdiag: BitMatrix, low: np.ndarray, high: np.ndarray):
        if offdiag.rows != offdiag.cols:
            raise ShapeError(f"adjacency must be square, got {offdiag.shape}")
        dense = offdiag.to_dense()
        if np.diag(dense).any():
            raise ContractViolation("off-diagonal part has a nonzero diagonal")
        if not np.array_equal(dense, dense.T):
            raise ContractViolation("off-diagonal part is not symmetric")
        self.n = offdiag.rows
        self.offdiag = offdiag
        self.low = np.asarray(low, dtype=np.uint8) & 1
        self.high = np.asarray(high, dtype=np.uint8) & 1
        if self.low.shape != (self.n,) or self.high.shape != (self.n,):
            raise ShapeError("diagonal length does not match matrix size")

    @classmethod
    def from_dense(cls, a) -> "PhasedAdjacency":
        a = np.asarray(a, dtype=np.int64)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ShapeError(f"square matrix expected, got shape {a.shape}")
        off = a.copy()
        np.fill_diagonal(off, 0)
        if not np.array_equal(off % 4, off.T % 4):
            raise ContractViolation("matrix is not symmetric")
        if ((off % 4) > 1).any():
            raise ContractViolation("off-diagonal entries must lie in {0, 1}")
        d = np.diag(a) % 4
        return cls(BitMatrix.from_dense(off % 4), d & 1, d >> 1)

    @classmethod
    def zeros(cls, n: int) -> "PhasedAdjacency":
        return cls(BitMatrix.zeros(n, n), np.zeros(n), np.zeros(n))

    @classmethod
    def from_graph(cls, g: nx.Graph, diag: Optional[Sequence[int]] = None) -> "PhasedAdjacency":
        n = g.number_of_nodes()
        a = np.zeros((n, n), dtype=np.int64)
        for u, v in g.edges:
            a[u, v] = a[v, u] = 1
        if diag is not None:
            np.fill_diagonal(a, np.asarray(diag, dtype=np.int64) % 4)
        return cls.from_dense(a)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator, density: float = 0.5) -> "PhasedAdjacency":
        upper = np.triu((rng.random((n, n)) < density).astype(np.int64), 1)
        a = upper + upper.T
        np.fill_diagonal(a, rng.integers(0, 4, size=n))
        return cls.from_dense(a)

    def diag(self) -> np.ndarray:
        return (self.low + 2 * self.high).astype(np.int64)

    def to_dense(self) -> np.ndarray:
        a = self.offdiag.to_dense().astype(np.int64)
        np.fill_diagonal(a, self.diag())
        return a

    def omega1(self) -> BitMatrix:
        a = self.offdiag.to_dense()
        np.fill_diagonal(a, self.low)
        return BitMatrix.from_dense(a)

    def graph(self) -> nx.Graph:
        dense = self.offdiag.to_dense()
        g = nx.Graph()
        g.add_nodes_from(range(self.n))
        iu, ju = np.nonzero(np.triu(dense, 1))
        g.add_edges_from(zip(iu.tolist(), ju.tolist()))
        return g

    def quad_form(self, x) -> int:
        """xᵀAx mod 4，x 提升为 {0,1} 整数"""
        bits = np.asarray(x.to_bits() if isinstance(x, BitVector) else x, dtype=np.int64)
        off = self.offdiag.to_dense().astype(np.int64)
        return int((self.diag() @ bits + bits @ off @ bits) % 4)

    def permuted(self, perm: Sequence[int]) -> "PhasedAdjacency":
        """新矩阵第 i 行对应原顶点 perm[i]"""
        idx = np.asarray(perm, dtype=np.int64)
        return PhasedAdjacency.from_dense(self.to_dense()[np.ix_(idx, idx)])

    def with_diag_added(self, delta: Sequence[int]) -> "PhasedAdjacency":
        a = self.to_dense()
        np.fill_diagonal(a, (np.diag(a) + np.asarray(delta, dtype=np.int64)) % 4)
        return PhasedAdjacency.from_dense(a)

    def __eq__(self, other) -> bool:
        if not isinstance(other, PhasedAdjacency):
            return NotImplemented
        return (self.offdiag == other.offdiag and np.array_equal(self.low, other.low)
                and np.array_equal(self.high, other.high))

    def __repr__(self) -> str:
        return f"PhasedAdjacency(n={self.n}, edges={int(self.offdiag.to_dense().sum()) // 2})"


@dataclass
class GaussJordanResult:
    B: PhasedAdjacency
    v: np.ndarray
    u: np.ndarray
    alpha: ExactAmplitude
    perm: List[int]
    pivot_log: List[Tuple[str, Tuple[int, ...]]] = field(default_factory=list)
    k: int = 0

    @property
    def one_count(self) -> int:
        return sum(1 for kind, _ in self.pivot_log if kind == "one")


@dataclass
class TrimResult:
    adjacency: PhasedAdjacency
    phase: ExactAmplitude
    scale: ExactAmplitude
    kept: List[int]

    def __iter__(self):
        return iter((self.adjacency, self.phase, self.scale))


# ===================== 直接振幅 =====================
def amplitude_direct(a: PhasedAdjacency, x: BitVector) -> ExactAmplitude:
    if x.len != a.n:
        raise ShapeError(f"bitstring length {x.len} does not match n={a.n}")
    e = a.quad_form(x)
    # (−i)^e = ω^{−2e}
    return ExactAmplitude.clifford(-a.n, -2 * e)


# ===================== 顶点补 / 边补 =====================
def _check_vertex(g: nx.Graph, i: int) -> None:
    if i not in g:
        raise ContractViolation(f"vertex {i} is not in the graph")


def vertex_complement(g: nx.Graph, i: int) -> Tuple[nx.Graph, LocalGateRecord]:
    """τ_i(G)；|G⟩ = X̌_i ∏_{j∈N(i)} Ẑ_j |τ_i(G)⟩"""
    _check_vertex(g, i)
    out = g.copy()
    nbrs = sorted(g.neighbors(i))
    for a_idx, u in enumerate(nbrs):
        for v in nbrs[a_idx + 1:]:
            if out.has_edge(u, v):
                out.remove_edge(u, v)
            else:
                out.add_edge(u, v)
    record = [(i, X_CHECK)] + [(j, Z_HAT) for j in nbrs]
    return out, record


def edge_complement(g: nx.Graph, i: int, j: int) -> Tuple[nx.Graph, LocalGateRecord]:
    """ε_ij = τ_i∘τ_j∘τ_i；|G⟩ = H_i H_j ∏_{c∈N(i)∩N(j)} Z_c |ε_ij(G)⟩"""
    _check_vertex(g, i)
    _check_vertex(g, j)
    if not g.has_edge(i, j):
        raise ContractViolation(f"({i}, {j}) is not an edge")
    out, _ = vertex_complement(g, i)
    out, _ = vertex_complement(out, j)
    out, _ = vertex_complement(out, i)
    common = sorted(set(g.neighbors(i)) & set(g.neighbors(j)))
    record = [(i, H_GATE), (j, H_GATE)] + [(c, Z_GATE) for c in common]
    return out, record


def pivot_by_classes(g: nx.Graph, i: int, j: int) -> nx.Graph:
    """按 A/B/C 三类邻居互补后交换 i、j 的等价描述"""
    if not g.has_edge(i, j):
        raise ContractViolation(f"({i}, {j}) is not an edge")
    ni, nj = set(g.neighbors(i)), set(g.neighbors(j))
    a_set = ni - nj - {j}
    b_set = nj - ni - {i}
    c_set = ni & nj
    out = g.copy()
    for s1, s2 in ((a_set, b_set), (a_set, c_set), (b_set, c_set)):
        for u in s1:
            for v in s2:
                if out.has_edge(u, v):
                    out.remove_edge(u, v)
                else:
                    out.add_edge(u, v)
    return nx.relabel_nodes(out, {i: j, j: i}, copy=True)


# ===================== Gauss-Jordan-W_n =====================
def wn_permutation(a: PhasedAdjacency) -> List[int]:
    """约化 LDL 的主元顺序：主元在前，剥离的零行在后"""
    from ldl import ldl_reduced
    return ldl_reduced(a.omega1(), high=a.high).perm


def gauss_jordan_wn(a: PhasedAdjacency, k: int, coerce: bool = True) -> GaussJordanResult:
    n = a.n
    if not 0 <= k <= n:
        raise ContractViolation(f"k={k} outside [0, {n}]")
    perm = wn_permutation(a) if coerce else list(range(n))
    b = a.permuted(perm).to_dense()
    v = np.zeros(k, dtype=np.uint8)
    log: List[Tuple[str, Tuple[int, ...]]] = []
    i = 0
    while i < k:
        rest = np.array([j for j in range(n) if j != i], dtype=np.int64)
        if b[i, i] % 2 == 1:
            col = b[rest, i] % 2
            b[np.ix_(rest, rest)] -= np.outer(col, col)
            _omega12(b)
            v[i] = (b[i, i] >> 1) & 1
            b[i, i] &= 1
            log.append(("one", (i,)))
            i += 1
            continue
        if i + 1 >= k:
            logger.error(f"Gauss-Jordan step {i}: even diagonal on the last leading index")
            raise EliminationError(i, "even diagonal with no partner inside the leading block")
        if b[i, i + 1] % 2 == 0 or b[i + 1, i + 1] % 2 == 1:
            logger.error(f"Gauss-Jordan step {i}: leading 2x2 block is not anti-diagonal")
            raise EliminationError(i, "leading 2x2 block is not anti-diagonal mod 2")
        pair = np.array([i, i + 1])
        rest = np.array([j for j in range(n) if j not in (i, i + 1)], dtype=np.int64)
        ap = b[i, rest] % 2
        aq = b[i + 1, rest] % 2
        b[np.ix_(rest, rest)] -= np.outer(ap, aq) + np.outer(aq, ap)
        b[i, rest], b[i + 1, rest] = aq, ap
        b[rest, i], b[rest, i + 1] = aq, ap
        _omega12(b)
        v[i] = (b[i, i] >> 1) & 1
        v[i + 1] = (b[i + 1, i + 1] >> 1) & 1
        b[pair, pair] &= 1
        log.append(("anti", (i, i + 1)))
        i += 2
    u = np.array([1 if i in {p[0] for kind, p in log if kind == "one"} else 0 for i in range(k)],
                 dtype=np.uint8)
    ones = sum(1 for kind, _ in log if kind == "one")
    result = GaussJordanResult(PhasedAdjacency.from_dense(b), v, u, ExactAmplitude.omega_power(-ones),
                               perm, log, k)
    logger.debug(f"gauss_jordan_wn: n={n}, k={k}, pivots={log}")
    return result


def _omega12(b: np.ndarray) -> None:
    d = np.diag(b) % 4
    b %= 2
    np.fill_diagonal(b, d)


def hadamard_amplitude_gj(a: PhasedAdjacency, x: BitVector) -> ExactAmplitude:
    """由 Γ_k(A) 直接求 ⟨x|H^{⊗n}|A⟩（小规模交叉校验用）"""
    if x.len != a.n:
        raise ShapeError(f"bitstring length {x.len} does not match n={a.n}")
    k = rank(a.omega1())
    gj = gauss_jordan_wn(a, k)
    b = gj.B.to_dense()
    xp = x.to_bits()[gj.perm].astype(np.int64)
    beta = (np.diag(b)[k:] >> 1) & 1
    z = (xp[:k] ^ gj.v) & 1
    # 后半部分：x2 = B21·z ⊕ β 时非零
    if not np.array_equal((b[k:, :k] @ z + beta) % 2, xp[k:]):
        return ExactAmplitude.zero()
    m = b[:k, :k].copy()
    m[np.arange(k), np.arange(k)] += 2 * gj.u
    off = m.copy()
    np.fill_diagonal(off, 0)
    q = int(np.diag(m) @ z + z @ off @ z) % 4
    return ExactAmplitude.clifford(-k, -gj.one_count + 2 * (-q))


# ===================== Z 基裁剪 =====================
def trim_z_vertices(g: Union[nx.Graph, PhasedAdjacency], z_assignment: Dict[int, int]) -> TrimResult:
    a = g if isinstance(g, PhasedAdjacency) else PhasedAdjacency.from_graph(g)
    dense = a.to_dense()
    trimmed = sorted(z_assignment)
    if len(set(trimmed)) != len(trimmed):
        raise ContractViolation("assigned vertices must be distinct")
    bits = np.zeros(a.n, dtype=np.int64)
    for v in trimmed:
        if not 0 <= v < a.n:
            raise ContractViolation(f"vertex {v} out of range")
        bits[v] = z_assignment[v] & 1
    kept = [v for v in range(a.n) if v not in z_assignment]
    off = dense.copy()
    np.fill_diagonal(off, 0)
    t = np.array(trimmed, dtype=np.int64)
    # 被裁顶点自身的相位与相互之间的 CZ：(−i)^{bᵀA_SS b}
    e = 0
    if t.size:
        bs = bits[t]
        e = int((np.diag(dense)[t] @ bs + bs @ off[np.ix_(t, t)] @ bs) % 4)
    keep = np.array(kept, dtype=np.int64)
    sub = dense[np.ix_(keep, keep)] if keep.size else np.zeros((0, 0), dtype=np.int64)
    if keep.size and t.size:
        shift = 2 * (off[np.ix_(keep, t)] @ bits[t])
        sub[np.arange(len(keep)), np.arange(len(keep))] = (np.diag(sub) + shift) % 4
    result = TrimResult(PhasedAdjacency.from_dense(sub), ExactAmplitude.omega_power(-2 * e),
                        ExactAmplitude.sqrt2_power(-len(trimmed)), kept)
    return result


# ===================== 文本格式 =====================
def read_pgs(path: Path) -> PhasedAdjacency:
    with open(path, "r", encoding="utf-8") as f:
        return parse_pgs(f.read())


def parse_pgs(text: str) -> PhasedAdjacency:
    a = None
    for line_no, line in enumerate(text.splitlines(), 1):
        entries = line.split("#", 1)[0].split()
        if not entries:
            continue
        if entries[0] == "pgs":
            n = int(entries[1])
            a = np.zeros((n, n), dtype=np.int64)
        elif a is None:
            raise ContractViolation(f"line {line_no}: missing 'pgs <n>' header")
        elif entries[0] == "d":
            a[int(entries[1]), int(entries[1])] = int(entries[2]) % 4
        elif entries[0] == "e":
            u, v = int(entries[1]), int(entries[2])
            if u == v:
                raise ContractViolation(f"line {line_no}: self-loop")
            a[u, v] = a[v, u] = 1
        else:
            raise ContractViolation(f"line {line_no}: unknown record {entries[0]!r}")
    if a is None:
        raise ContractViolation("empty pgs text")
    return PhasedAdjacency.from_dense(a)


def format_pgs(a: PhasedAdjacency) -> str:
    lines = [f"pgs {a.n}"]
    for i, d in enumerate(a.diag()):
        if d:
            lines.append(f"d {i} {int(d)}")
    off = a.offdiag.to_dense()
    for u, v in zip(*np.nonzero(np.triu(off, 1))):
        lines.append(f"e {int(u)} {int(v)}")
    return "\n".join(lines) + "\n"


def write_pgs(a: PhasedAdjacency, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_pgs(a))
