"""F2 上的 LDL / 约化 LDL 分解（1×1 与 2×2 反对角主元），以及按树分解逐包消元的隐式分解。

对角线按 Z4 跟踪：ω1 参与主元选择，ω2 只随尾部更新累积，用于 v、w 等副产物。
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import Config
from errors import ContractViolation, EliminationError, ShapeError
from gf2core import WORD, WORD_BITS, BitMatrix, _pack_rows, _unpack_rows
from treedec import TreeDecomposition, binarize_and_root, make_graph, validate

logger = logging.getLogger(__name__)

ONE, ANTI, ZERO = "one", "anti", "zero"


# ===================== 数据模型 =====================
@dataclass
class PivotRecord:
    kind: str                        # one | anti | zero
    vertices: Tuple[int, ...]
    columns: List[np.ndarray]        # 每个主元一列：L 该列非零行对应的顶点
    high: Tuple[int, ...]            # 消元（或剥离）时刻对角线的 ω2
    bag: int = 0


@dataclass
class LdlFactorization:
    perm: List[int]                  # 位置 -> 顶点
    L: BitMatrix
    blocks: List[Tuple[str, int]]    # (类型, 起始位置)
    rank: int
    reduced: bool = False
    records: List[PivotRecord] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.perm)

    def d_matrix(self) -> BitMatrix:
        size = self.L.cols
        d = np.zeros((size, size), dtype=np.uint8)
        for kind, pos in self.blocks:
            if kind == ONE:
                d[pos, pos] = 1
            elif kind == ANTI:
                d[pos, pos + 1] = d[pos + 1, pos] = 1
        return BitMatrix.from_dense(d)

    def perm_matrix(self) -> BitMatrix:
        p = np.zeros((self.n, self.n), dtype=np.uint8)
        for pos, vertex in enumerate(self.perm):
            p[vertex, pos] = 1
        return BitMatrix.from_dense(p)

    def reconstruct(self) -> BitMatrix:
        """ω1(P L D Lᵀ Pᵀ)"""
        from gf2core import mul
        p = self.perm_matrix()
        pl = mul(p, self.L)
        return mul(mul(pl, self.d_matrix()), pl.transpose())


@dataclass
class BagFactor:
    bag: int
    records: List[PivotRecord]


@dataclass
class ImplicitLdl:
    n: int
    perm: List[int]                  # 位置 -> 顶点；前 rank 个为主元
    rank: int
    blocks: List[Tuple[str, int]]
    factors: List[BagFactor]
    columns: List[np.ndarray]        # 主元位置 j 的 L 列非零位置（升序，含 j）
    v: np.ndarray
    w: np.ndarray
    secondbit_diag: np.ndarray
    td: Optional[TreeDecomposition] = None

    def __post_init__(self):
        self.position = {vertex: pos for pos, vertex in enumerate(self.perm)}
        r = self.rank
        self._lead = [c[(c > j) & (c < r)] for j, c in enumerate(self.columns)]
        self._tail = [c[c >= r] for c in self.columns]
        self._explicit: Optional[BitMatrix] = None

    @property
    def one_mask(self) -> np.ndarray:
        mask = np.zeros(self.rank, dtype=bool)
        for kind, pos in self.blocks:
            if kind == ONE:
                mask[pos] = True
        return mask

    @property
    def anti_pairs(self) -> np.ndarray:
        return np.array([pos for kind, pos in self.blocks if kind == ANTI], dtype=np.int64)

    @property
    def one_count(self) -> int:
        return int(self.one_mask.sum())

    def explicit_l(self) -> BitMatrix:
        """n×r 下梯形 L（位置坐标）"""
        if self._explicit is None:
            dense = np.zeros((self.n, self.rank), dtype=np.uint8)
            for j, col in enumerate(self.columns):
                dense[col, j] = 1
            self._explicit = BitMatrix.from_dense(dense)
        return self._explicit

    def as_factorization(self) -> LdlFactorization:
        return LdlFactorization(list(self.perm), self.explicit_l(), list(self.blocks), self.rank, reduced=True,
                                records=[r for f in self.factors for r in f.records])


@dataclass
class PartialInverseBlocks:
    blocks: Dict[int, Tuple[Tuple[int, ...], np.ndarray]]   # 包 -> (顶点, 稠密块)
    entries: int = 0                                          # 递推求出的元素个数

    def block(self, bag: int) -> np.ndarray:
        return self.blocks[bag][1]


# ===================== Schur 补消元状态 =====================
class _SchurState:
    """打包存储的当前 Schur 补，低位在 data 中，Z4 对角线单独存放"""

    def __init__(self, omega1: BitMatrix, high: Optional[np.ndarray]):
        self.n = omega1.rows
        self.data = omega1.data.copy()
        dense_diag = np.array([omega1.get(i, i) for i in range(self.n)], dtype=np.uint8)
        hi = np.zeros(self.n, dtype=np.uint8) if high is None else (np.asarray(high, dtype=np.uint8) & 1)
        self.diag4 = (dense_diag + 2 * hi).astype(np.uint8)
        self.alive = np.ones(self.n, dtype=bool)

    def col_bits(self, p: int, rows: np.ndarray) -> np.ndarray:
        w, bit = p // WORD_BITS, np.uint64(p % WORD_BITS)
        return ((self.data[rows, w] >> bit) & np.uint64(1)).astype(bool)

    def zero_row(self, j: int) -> bool:
        return not self.data[j].any()

    def _kill(self, j: int) -> None:
        self.data[j] = 0
        self.alive[j] = False

    def pivot_one(self, p: int, rows: np.ndarray, bag: int) -> PivotRecord:
        rows = rows[rows != p]
        nb = rows[self.col_bits(p, rows)]
        self.data[nb] ^= self.data[p]
        self.diag4[nb] = (self.diag4[nb] + 3) % 4
        high = int(self.diag4[p] >> 1)
        self._kill(p)
        return PivotRecord(ONE, (p,), [np.sort(np.append(nb, p))], (high,), bag)

    def pivot_anti(self, p: int, q: int, rows: np.ndarray, bag: int) -> PivotRecord:
        rows = rows[(rows != p) & (rows != q)]
        bp = self.col_bits(p, rows)
        bq = self.col_bits(q, rows)
        np_, nq = rows[bp], rows[bq]
        rp, rq = self.data[p].copy(), self.data[q].copy()
        self.data[np_] ^= rq
        self.data[nq] ^= rp
        both = rows[bp & bq]
        self.diag4[both] = (self.diag4[both] + 2) % 4
        high = (int(self.diag4[p] >> 1), int(self.diag4[q] >> 1))
        self._kill(p)
        self._kill(q)
        # L[:,p] = a_q，L[:,q] = a_p，保证 L[q][p] = 0
        return PivotRecord(ANTI, (p, q), [np.sort(np.append(nq, p)), np.sort(np.append(np_, q))], high, bag)

    def peel(self, j: int, bag: int) -> PivotRecord:
        high = int(self.diag4[j] >> 1)
        self._kill(j)
        return PivotRecord(ZERO, (j,), [], (high,), bag)

    def eliminate(self, eligible: List[int], rows: np.ndarray, bag: int) -> Tuple[List[PivotRecord], List[int]]:
        """在一个包内按规则消元，返回记录与无法消去（需上移）的顶点"""
        records: List[PivotRecord] = []
        eligible = sorted(eligible)
        while True:
            eligible = [e for e in eligible if self.alive[e]]
            for e in eligible:
                if self.zero_row(e):
                    records.append(self.peel(e, bag))
            eligible = [e for e in eligible if self.alive[e]]
            if not eligible:
                return records, []
            live_rows = rows[self.alive[rows]]
            odd = [e for e in eligible if self.diag4[e] & 1]
            if odd:
                records.append(self.pivot_one(odd[0], live_rows, bag))
                continue
            pair = None
            arr = np.array(eligible, dtype=np.int64)
            for i, p in enumerate(eligible):
                later = arr[i + 1:]
                hits = later[self.col_bits(p, later)]
                if hits.size:
                    pair = (p, int(hits[0]))
                    break
            if pair is None:
                return records, eligible
            records.append(self.pivot_anti(pair[0], pair[1], live_rows, bag))

    def replay(self, record_kind: str, vertices: Tuple[int, ...], step: int) -> PivotRecord:
        rows = np.flatnonzero(self.alive)
        if any(not self.alive[v] for v in vertices):
            raise EliminationError(step, f"vertex in {vertices} already eliminated")
        if record_kind == ONE:
            p = vertices[0]
            if not self.diag4[p] & 1:
                raise EliminationError(step, f"1x1 pivot {p} has even diagonal")
            return self.pivot_one(p, rows, 0)
        if record_kind == ANTI:
            p, q = vertices
            if (self.diag4[p] & 1) or (self.diag4[q] & 1) or not self.col_bits(p, np.array([q]))[0]:
                raise EliminationError(step, f"2x2 pivot {vertices} is not anti-diagonal")
            return self.pivot_anti(p, q, rows, 0)
        p = vertices[0]
        if not self.zero_row(p):
            raise EliminationError(step, f"peeled row {p} is not zero")
        return self.peel(p, 0)


# ===================== 组装 =====================
def _check_symmetric(a: BitMatrix) -> None:
    if a.rows != a.cols:
        raise ShapeError(f"square matrix expected, got {a.shape}")
    if not a.is_symmetric():
        logger.error("LDL input is not symmetric")
        raise ContractViolation("LDL input must be symmetric over F2")


def _assemble(n: int, records: List[PivotRecord], reduced: bool) -> LdlFactorization:
    if reduced:
        order = [r for r in records if r.kind != ZERO] + [r for r in records if r.kind == ZERO]
    else:
        order = list(records)
    perm = [v for r in order for v in r.vertices]
    position = {v: i for i, v in enumerate(perm)}
    rank = sum(len(r.vertices) for r in records if r.kind != ZERO)
    cols = rank if reduced else n
    dense = np.zeros((n, cols), dtype=np.uint8)
    blocks: List[Tuple[str, int]] = []
    j = 0
    for r in order:
        if r.kind == ZERO:
            if not reduced:
                dense[position[r.vertices[0]], j] = 1
                blocks.append((ZERO, j))
                j += 1
            continue
        blocks.append((r.kind, j))
        for col in r.columns:
            dense[[position[v] for v in col], j] = 1
            j += 1
    return LdlFactorization(perm, BitMatrix.from_dense(dense), blocks, rank, reduced, list(records))


def _run_dense(a: BitMatrix, high: Optional[np.ndarray], order) -> List[PivotRecord]:
    _check_symmetric(a)
    state = _SchurState(a, high)
    if order is not None:
        return [state.replay(kind, tuple(vs), step) for step, (kind, vs) in enumerate(order)]
    records, stuck = state.eliminate(list(range(a.rows)), np.arange(a.rows), 0)
    assert not stuck
    return records


def ldl_dense(a: BitMatrix, order: Optional[Sequence[Tuple[str, Sequence[int]]]] = None,
              high: Optional[np.ndarray] = None) -> LdlFactorization:
    """非约化 LDL；order 给定时按该主元序列重放"""
    records = _run_dense(a, high, order)
    f = _assemble(a.rows, records, reduced=False)
    logger.debug(f"ldl_dense: n={a.rows}, rank={f.rank}")
    return f


def ldl_reduced(a: BitMatrix, order: Optional[Sequence[Tuple[str, Sequence[int]]]] = None,
                high: Optional[np.ndarray] = None) -> LdlFactorization:
    records = _run_dense(a, high, order)
    return _assemble(a.rows, records, reduced=True)


def pivot_log(f) -> List[Tuple[str, Tuple[int, ...]]]:
    records = f.records if isinstance(f, LdlFactorization) else [r for b in f.factors for r in b.records]
    return [(r.kind, r.vertices) for r in records]


# ===================== 树分解路径 =====================
def _needs_binarize(td: TreeDecomposition) -> bool:
    return td.root is None or any(len(k) > 2 for k in td.children())


def _offdiag_graph(a: BitMatrix):
    dense = a.to_dense()
    iu, ju = np.nonzero(np.triu(dense, 1))
    return make_graph(a.rows, zip(iu.tolist(), ju.tolist()))


def _build_implicit(n: int, factors: List[BagFactor], td: Optional[TreeDecomposition]) -> ImplicitLdl:
    records = [r for f in factors for r in f.records]
    pivots = [r for r in records if r.kind != ZERO]
    peeled = [r for r in records if r.kind == ZERO]
    perm = [v for r in pivots for v in r.vertices] + [r.vertices[0] for r in peeled]
    position = {v: i for i, v in enumerate(perm)}
    rank = len(perm) - len(peeled)
    columns: List[np.ndarray] = []
    blocks: List[Tuple[str, int]] = []
    v = np.zeros(rank, dtype=np.uint8)
    for r in pivots:
        blocks.append((r.kind, len(columns)))
        for col, hi in zip(r.columns, r.high):
            v[len(columns)] = hi
            columns.append(np.sort(np.array([position[x] for x in col], dtype=np.int64)))
    beta = np.array([r.high[0] for r in peeled], dtype=np.uint8)
    w = np.concatenate([v, beta]).astype(np.uint8)
    f = ImplicitLdl(n, perm, rank, blocks, factors, columns, v, w, np.zeros(rank, dtype=np.uint8), td)
    f.secondbit_diag = _secondbit_diag(f)
    return f


def ldl_tree(a: BitMatrix, td: TreeDecomposition, high: Optional[np.ndarray] = None) -> ImplicitLdl:
    _check_symmetric(a)
    validate(td, _offdiag_graph(a))
    if _needs_binarize(td):
        td = binarize_and_root(td)
    parent = td.parents()
    state = _SchurState(a, high)
    factors: List[BagFactor] = []
    carried: Dict[int, List[int]] = {b: [] for b in range(len(td.bags))}
    for b in td.postorder():
        bag = set(td.bags[b])
        up = parent[b]
        forgotten = bag if up is None else bag - set(td.bags[up])
        eligible = sorted(set(v for v in forgotten if state.alive[v]) | set(carried[b]))
        rows = np.array(sorted(bag | set(carried[b])), dtype=np.int64)
        records, stuck = state.eliminate(eligible, rows, b)
        if stuck:
            if up is None:
                raise EliminationError(len(factors), f"root bag left vertices {stuck} uneliminated")
            # 邻居都在父包中，留到父包再消
            carried[up].extend(stuck)
        factors.append(BagFactor(b, records))
    f = _build_implicit(a.rows, factors, td)
    logger.info(f"ldl_tree: n={a.rows}, rank={f.rank}, bags={len(td.bags)}, width={td.width}")
    return f


def ldl_single_bag(a: BitMatrix, high: Optional[np.ndarray] = None,
                   order: Optional[Sequence[Tuple[str, Sequence[int]]]] = None) -> ImplicitLdl:
    """稠密路径：整个矩阵视为一个包"""
    records = _run_dense(a, high, order)
    return _build_implicit(a.rows, [BagFactor(0, records)], None)


# ===================== 隐式乘法 =====================
def implicit_apply(f: ImplicitLdl, which: str, x: BitMatrix) -> BitMatrix:
    r, n = f.rank, f.n
    expected = {"L": r, "LT": n, "Linv": r, "LinvT": r, "L2L1inv": r}
    if which not in expected:
        raise ContractViolation(f"unknown operator {which!r}")
    if x.rows != expected[which]:
        raise ShapeError(f"{which} expects {expected[which]} rows, got {x.rows}")
    z = x.data.copy()
    if which == "L":
        y = np.zeros((n, x.words), dtype=WORD)
        for j in range(r):
            if z[j].any():
                y[f.columns[j]] ^= z[j]
        return BitMatrix(n, x.cols, y)
    if which == "LT":
        y = np.zeros((r, x.words), dtype=WORD)
        for j in range(r):
            y[j] = np.bitwise_xor.reduce(z[f.columns[j]], axis=0)
        return BitMatrix(r, x.cols, y)
    if which == "LinvT":
        for j in range(r - 1, -1, -1):
            lead = f._lead[j]
            if lead.size:
                z[j] ^= np.bitwise_xor.reduce(z[lead], axis=0)
        return BitMatrix(r, x.cols, z)
    for j in range(r):
        if z[j].any():
            z[f._lead[j]] ^= z[j]
    if which == "Linv":
        return BitMatrix(r, x.cols, z)
    y = np.zeros((n - r, x.words), dtype=WORD)
    for j in range(r):
        if z[j].any() and f._tail[j].size:
            y[f._tail[j] - r] ^= z[j]
    return BitMatrix(n - r, x.cols, y)


def d_quadratic(f: ImplicitLdl, c: np.ndarray) -> np.ndarray:
    """cᵀDc（Z4），c 为 (批量, r) 的 0/1 数组"""
    c = np.asarray(c, dtype=np.int64)
    value = c[:, f.one_mask].sum(axis=1)
    pairs = f.anti_pairs
    if pairs.size:
        value = value + 2 * (c[:, pairs] & c[:, pairs + 1]).sum(axis=1)
    return value % 4


def d_bilinear(f: ImplicitLdl, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """aᵀDb（F2），a: (p, r)、b: (q, r)，返回 (p, q)"""
    a = np.asarray(a, dtype=np.int64)
    da = a * f.one_mask
    pairs = f.anti_pairs
    if pairs.size:
        da[:, pairs] = a[:, pairs + 1]
        da[:, pairs + 1] = a[:, pairs]
    return (da @ np.asarray(b, dtype=np.int64).T) % 2


def _secondbit_diag(f: ImplicitLdl) -> np.ndarray:
    """ω2(d(L1⁻ᵀ D L1⁻¹))：第 j 项为 cᵀDc，c = L1⁻¹e_j"""
    r = f.rank
    out = np.zeros(r, dtype=np.uint8)
    batch = Config.SAMPLE_BATCH
    for start in range(0, r, batch):
        stop = min(start + batch, r)
        units = np.zeros((r, stop - start), dtype=np.uint8)
        units[np.arange(start, stop), np.arange(stop - start)] = 1
        c = implicit_apply(f, "Linv", BitMatrix.from_dense(units)).to_dense().T
        out[start:stop] = d_quadratic(f, c) >> 1
    return out


def v_from_factors(f: ImplicitLdl, diag4: np.ndarray) -> np.ndarray:
    """由显式 L、D 重算 v：v = ω2(d(LDLᵀ)) ⊕ ω2(d(A11))"""
    dense = f.explicit_l().to_dense()[:f.rank].astype(np.int64)
    ldl_diag = d_quadratic(f, dense)
    a_high = (np.asarray(diag4, dtype=np.int64)[f.perm[:f.rank]] >> 1) & 1
    return ((ldl_diag >> 1) ^ a_high).astype(np.uint8)


# ===================== 分块广义逆 =====================
def _memo_solve(memo: Dict[Tuple[int, int], int], key: Tuple[int, int], deps, base) -> int:
    """按 key → deps(key) 的依赖顺序迭代求值：value = base(key) ⊕ Σ memo[deps]"""
    stack = [key]
    while stack:
        top = stack[-1]
        if top in memo:
            stack.pop()
            continue
        needed = deps(top)
        missing = [d for d in needed if d not in memo]
        if missing:
            stack.extend(missing)
            continue
        memo[top] = base(top) ^ (sum(memo[d] for d in needed) & 1)
        stack.pop()
    return memo[key]


def partial_inverse_blocks(f: ImplicitLdl, td: Optional[TreeDecomposition] = None) -> PartialInverseBlocks:
    """包内的 Z = L1⁻ᵀDL1⁻¹ 与 L2L1⁻¹ 元素，按选择性求逆递推只计算用到的位置对。

    Z_jk = δ_jk ⊕ Σ_{i∈S_j} Z_ik，(L2L1⁻¹)_tj = L_tj ⊕ Σ_{i∈S_j} (L2L1⁻¹)_ti，S_j 为 L 第 j 列主元部分的非零行
    """
    td = td if td is not None else f.td
    if td is None:
        td = TreeDecomposition([tuple(range(f.n))], [], 0)
    r = f.rank
    one = f.one_mask
    anti_first = set(f.anti_pairs.tolist())
    below = [f._lead[j].tolist() for j in range(r)]
    tail = [set(f._tail[j].tolist()) for j in range(r)]
    # L2 第 t 行最后一个非零列之后 (L2L1⁻¹)_ti 恒为 0
    last: Dict[int, int] = {}
    for j in range(r):
        for t in tail[j]:
            last[t] = j
    z_memo: Dict[Tuple[int, int], int] = {}
    y_memo: Dict[Tuple[int, int], int] = {}

    def z_deps(key):
        j, k = key
        return [(i, k) if i <= k else (k, i) for i in below[j]]

    def z_base(key):
        j, k = key
        return int((j == k and one[j]) or (k == j + 1 and j in anti_first))

    def y_deps(key):
        t, j = key
        return [(t, i) for i in below[j] if i <= last.get(t, -1)]

    def y_base(key):
        t, j = key
        return int(t in tail[j])

    out: Dict[int, Tuple[Tuple[int, ...], np.ndarray]] = {}
    for b, bag in enumerate(td.bags):
        verts = tuple(sorted(bag))
        pos = [f.position[v] for v in verts]
        block = np.zeros((len(verts), len(verts)), dtype=np.uint8)
        for a_i, pa in enumerate(pos):
            for b_i in range(a_i, len(pos)):
                pb = pos[b_i]
                if pa < r and pb < r:
                    block[a_i, b_i] = _memo_solve(z_memo, (min(pa, pb), max(pa, pb)), z_deps, z_base)
                elif pa < r or pb < r:
                    lead, peeled = (pa, pb) if pa < r else (pb, pa)
                    block[a_i, b_i] = _memo_solve(y_memo, (peeled, lead), y_deps, y_base)
                block[b_i, a_i] = block[a_i, b_i]
        out[b] = (verts, block)
    logger.debug(f"partial_inverse_blocks: bags={len(td.bags)}, z_entries={len(z_memo)}, "
                 f"l2_entries={len(y_memo)}")
    return PartialInverseBlocks(out, len(z_memo) + len(y_memo))
