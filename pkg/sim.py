"""相位图态的强/弱模拟：基于隐式 LDL 的振幅公式、固定比特批量求值、均匀采样与图态包装。

振幅：⟨x|H^{⊗n}|A⟩ = α · 2^{-k/2} · i^{cᵀDc}，c = L1⁻¹(x1 ⊕ v)，支撑为 x ⊕ w ∈ span(ω1(A))。
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from config import Config
from errors import ContractViolation, ShapeError
from gf2core import BitMatrix, BitVector, affine_solutions
from ldl import ImplicitLdl, d_bilinear, d_quadratic, implicit_apply, ldl_single_bag, ldl_tree
from pgs import PhasedAdjacency, trim_z_vertices
from ring import ExactAmplitude
from treedec import TreeDecomposition, heuristic_decompose

logger = logging.getLogger(__name__)

STRATEGIES = ("auto", "direct", "basis")
ALPHA_RULES = ("exact", "literal")

# 随机流用途标签，与 seed 一起组成 Philox 的 key
PURPOSE_PGS_SAMPLE = 1
PURPOSE_GRAPH_SAMPLE = 2


class _Empty:
    """weak_sample 的空支撑结果"""
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "EMPTY"

    def __bool__(self) -> bool:
        return False


EMPTY = _Empty()


# ===================== 数据模型 =====================
@dataclass(frozen=True)
class SampleSpec:
    S: Tuple[int, ...] = ()
    y: Tuple[int, ...] = ()
    seed: int = Config.DEFAULT_SEED
    count: int = 1
    start: int = 0                    # 从第 start 个样本开始取，前缀样本不变

    def __post_init__(self):
        object.__setattr__(self, "S", tuple(int(s) for s in self.S))
        object.__setattr__(self, "y", tuple(int(b) & 1 for b in self.y))
        if len(self.S) != len(self.y):
            raise ContractViolation(f"|S|={len(self.S)} but {len(self.y)} fixed bits given")
        if len(set(self.S)) != len(self.S):
            raise ContractViolation("fixed indices must be distinct")
        if self.count < 0:
            raise ContractViolation(f"negative sample count {self.count}")
        if self.start < 0:
            raise ContractViolation(f"negative sample offset {self.start}")


@dataclass
class SimContext:
    source: PhasedAdjacency
    perm: List[int]                   # 位置 -> 顶点
    factorization: ImplicitLdl
    k: int
    v: np.ndarray
    u: np.ndarray                     # δ(A11)：1×1 主元处为 1
    w: np.ndarray                     # 位置坐标
    secondbit_diag: np.ndarray
    alpha: ExactAmplitude
    one_count: int = 0
    alpha_rule: str = "exact"
    b11_low: Optional[np.ndarray] = None   # ω1(L1⁻ᵀDL1⁻¹)，只在稠密路径上显式保存

    @property
    def n(self) -> int:
        return self.source.n

    def to_positions(self, bits: np.ndarray) -> np.ndarray:
        """(批量, n) 顶点序 -> 位置序"""
        return bits[:, self.perm]

    def to_vertices(self, bits: np.ndarray) -> np.ndarray:
        out = np.empty_like(bits)
        out[:, self.perm] = bits
        return out


# ===================== 准备 =====================
def prepare(a: PhasedAdjacency, td: Optional[TreeDecomposition] = None,
            alpha_rule: str = "exact", dense_cutoff: Optional[int] = None) -> SimContext:
    """分解 ω1(A) 并求出振幅公式所需的 v、u、w、α。

    没有给出树分解时，n 不超过 dense_cutoff（缺省取 Config.DENSE_CUTOFF）走单包稠密消元，否则走启发式树分解
    """
    if alpha_rule not in ALPHA_RULES:
        raise ContractViolation(f"unknown alpha rule {alpha_rule!r}")
    omega1 = a.omega1()
    if td is not None:
        f = ldl_tree(omega1, td, high=a.high)
    elif a.n <= (Config.DENSE_CUTOFF if dense_cutoff is None else dense_cutoff):
        f = ldl_single_bag(omega1, high=a.high)
    else:
        f = ldl_tree(omega1, heuristic_decompose(a.graph()), high=a.high)
    p = f.one_count
    if alpha_rule == "exact":
        alpha = ExactAmplitude.omega_power(-p)
    else:
        # (√2/(1+i))^{Σv}，只用于自检的变异对照
        alpha = ExactAmplitude.omega_power(-int(f.v.sum()))
    ctx = SimContext(a, list(f.perm), f, f.rank, f.v.copy(), f.one_mask.astype(np.uint8), f.w.copy(),
                     f.secondbit_diag.copy(), alpha, p, alpha_rule)
    if f.td is None and f.rank:
        gt = implicit_apply(f, "Linv", BitMatrix.identity(f.rank)).to_dense().T
        ctx.b11_low = d_bilinear(f, gt, gt)
    logger.debug(f"prepare: n={a.n}, k={f.rank}, one_pivots={p}, "
                f"path={'tree' if f.td is not None else 'dense'}")
    return ctx


# ===================== 强模拟 =====================
def _as_bit_rows(xs: Sequence[BitVector], n: int) -> np.ndarray:
    rows = np.zeros((len(xs), n), dtype=np.uint8)
    for i, x in enumerate(xs):
        if x.len != n:
            raise ShapeError(f"query {i} has length {x.len}, expected {n}")
        rows[i] = x.to_bits()
    return rows


def _amplitudes(ctx: SimContext, e: np.ndarray, support: np.ndarray) -> List[ExactAmplitude]:
    """e: (批量,) Z4 指数，support: (批量,) bool"""
    out: List[ExactAmplitude] = []
    for ok, q in zip(support.tolist(), e.tolist()):
        if not ok:
            out.append(ExactAmplitude.zero())
        else:
            out.append(ctx.alpha * ExactAmplitude.clifford(-ctx.k, 2 * int(q)))
    return out


def _exponents(ctx: SimContext, z: np.ndarray, c: np.ndarray) -> np.ndarray:
    """zᵀΩ(L1⁻ᵀDL1⁻¹)z，z = x1 ⊕ v，c = L1⁻¹z。

    稠密路径：zᵀω1(·)z + 2zᵀsecondbit_diag；树路径不显式构造 B11，直接取 cᵀDc
    """
    if not z.shape[0]:
        return np.zeros(0, dtype=np.int64)
    if ctx.b11_low is None:
        return d_quadratic(ctx.factorization, c)
    zi = z.astype(np.int64)
    return (((zi @ ctx.b11_low) * zi).sum(axis=1) + 2 * (zi @ ctx.secondbit_diag.astype(np.int64))) % 4


def _eval_positions(ctx: SimContext, zp: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """zp = x ⊕ w（位置序）；返回 (c, 支撑标志)"""
    f, r = ctx.factorization, ctx.k
    head = BitMatrix.from_dense(zp[:, :r].T)
    c = implicit_apply(f, "Linv", head).to_dense().T
    tail = implicit_apply(f, "L2L1inv", head).to_dense().T ^ zp[:, r:]
    return c, ~tail.any(axis=1)


def strong_eval(ctx: SimContext, xs: Sequence[BitVector]) -> List[ExactAmplitude]:
    n = ctx.n
    bits = _as_bit_rows(xs, n)
    out: List[ExactAmplitude] = []
    batch = Config.SAMPLE_BATCH
    for start in range(0, len(bits), batch):
        zp = ctx.to_positions(bits[start:start + batch]) ^ ctx.w
        c, support = _eval_positions(ctx, zp)
        out.extend(_amplitudes(ctx, _exponents(ctx, zp[:, :ctx.k], c), support))
    logger.debug(f"strong_eval: {len(out)} queries, nonzero={sum(1 for a in out if a)}")
    return out


def _check_fixed(n: int, S: Sequence[int], y: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    s = np.asarray(list(S), dtype=np.int64)
    yy = np.asarray(list(y), dtype=np.uint8) & 1
    if s.shape != yy.shape:
        raise ContractViolation(f"|S|={s.size} but {yy.size} fixed bits given")
    if s.size and (s.min() < 0 or s.max() >= n):
        raise ContractViolation(f"fixed index out of range [0, {n})")
    if len(set(s.tolist())) != s.size:
        raise ContractViolation("fixed indices must be distinct")
    return s, yy


def _fixed_exponents(ctx: SimContext, c0: np.ndarray, g: np.ndarray, fpos: np.ndarray,
                     tq: np.ndarray) -> np.ndarray:
    """c = c0 ⊕ Σ x_j g_j 时的 cᵀDc，只做 ℓ×ℓ 的乘法。

    Q(g_j) 的低位取自 M = (g_j ᵀ D g_l) 的对角，高位取自 secondbit_diag
    """
    f = ctx.factorization
    q0 = int(d_quadratic(f, c0[None, :])[0])
    m = d_bilinear(f, g, g)
    cross = d_bilinear(f, c0[None, :], g)[0]
    high = np.zeros(len(fpos), dtype=np.int64)
    lead = np.flatnonzero(fpos < ctx.k)
    high[lead] = ctx.secondbit_diag[fpos[lead]]
    return (q0 + tq @ (2 * (high + cross)) + ((tq @ m) * tq).sum(axis=1)) % 4


def strong_eval_fixed(ctx: SimContext, S: Sequence[int], y: Sequence[int],
                      xs: Sequence[BitVector]) -> List[ExactAmplitude]:
    """所有查询在 S 上取值 y；只对 ℓ = n−|S| 个自由坐标做逐查询计算"""
    n, r, f = ctx.n, ctx.k, ctx.factorization
    s, yy = _check_fixed(n, S, y)
    bits = _as_bit_rows(xs, n)
    if bits.shape[0] and s.size and (bits[:, s] != yy).any():
        bad = int(np.flatnonzero((bits[:, s] != yy).any(axis=1))[0])
        raise ContractViolation(f"query {bad} disagrees with the fixed bits")
    free = np.array(sorted(set(range(n)) - set(s.tolist())), dtype=np.int64)
    ell = free.size
    # 基点：S 上取 y，其余为 0
    base = np.zeros((1, n), dtype=np.uint8)
    base[0, s] = yy
    zp0 = ctx.to_positions(base) ^ ctx.w
    head0 = BitMatrix.from_dense(zp0[:, :r].T)
    c0 = implicit_apply(f, "Linv", head0).to_dense().T[0]
    tail0 = implicit_apply(f, "L2L1inv", head0).to_dense().T[0] ^ zp0[0, r:]
    # 每个自由坐标的像：G = L1⁻¹e，T = L2L1⁻¹e（或剥离位置上的单位向量）
    g = np.zeros((ell, r), dtype=np.uint8)
    t = np.zeros((ell, n - r), dtype=np.uint8)
    fpos = np.array([f.position[int(v)] for v in free], dtype=np.int64)
    lead = np.flatnonzero(fpos < r)
    if lead.size:
        units = np.zeros((r, lead.size), dtype=np.uint8)
        units[fpos[lead], np.arange(lead.size)] = 1
        pm = BitMatrix.from_dense(units)
        g[lead] = implicit_apply(f, "Linv", pm).to_dense().T
        t[lead] = implicit_apply(f, "L2L1inv", pm).to_dense().T
    peeled = np.flatnonzero(fpos >= r)
    t[peeled, fpos[peeled] - r] = 1
    if not bits.shape[0]:
        return []
    # 尾部残差不在 T 的列空间中时整个 X_{S,y} 都不在支撑上
    if not tail0.any() or affine_solutions(BitMatrix.from_dense(t.T.reshape(n - r, ell)),
                                           BitVector.from_bits(tail0)) is not None:
        tq = bits[:, free].astype(np.int64)
        tail = (tail0.astype(np.int64) + tq @ t) % 2
        support = ~tail.astype(bool).any(axis=1)
        e = _fixed_exponents(ctx, c0, g, fpos, tq)
    else:
        e = np.zeros(bits.shape[0], dtype=np.int64)
        support = np.zeros(bits.shape[0], dtype=bool)
    out = _amplitudes(ctx, e, support)
    logger.debug(f"strong_eval_fixed: |S|={s.size}, ell={ell}, queries={len(out)}")
    return out


# ===================== 弱模拟 =====================
def random_bits(seed: int, purpose: int, start: int, count: int, nbits: int) -> np.ndarray:
    """计数器型随机比特：第 i 个样本只由 (seed, purpose, i) 决定"""
    words = max(1, -(-nbits // 64))
    blocks = -(-words // 4)
    key = (int(seed) & (2 ** 64 - 1)) | (int(purpose) << 64)
    gen = np.random.Philox(key=key, counter=int(start) * blocks)
    raw = gen.random_raw(count * blocks * 4).astype('<u8').reshape(count, blocks * 4)[:, :words]
    bits = np.unpackbits(np.ascontiguousarray(raw).view(np.uint8), axis=1, bitorder='little')
    return bits[:, :nbits]


def _solve_fixed(ctx: SimContext, s: np.ndarray, yy: np.ndarray) -> Optional[Tuple[np.ndarray, np.ndarray]]:
    """L_S·c = (y ⊕ w)_S 的全部解 (c0, 零空间基 r×d)"""
    f, r = ctx.factorization, ctx.k
    spos = np.array([f.position[int(v)] for v in s], dtype=np.int64)
    target = (yy ^ ctx.w[spos]).astype(np.uint8)
    # 先用三角求解处理落在主元位置上的部分
    guess = np.zeros((r, 1), dtype=np.uint8)
    lead = spos < r
    guess[spos[lead], 0] = target[lead]
    c_guess = implicit_apply(f, "Linv", BitMatrix.from_dense(guess)).to_dense()[:, 0]
    l_dense = f.explicit_l().to_dense()
    l_s = l_dense[spos] if spos.size else np.zeros((0, r), dtype=np.uint8)
    residual = (target.astype(np.int64) + l_s.astype(np.int64) @ c_guess) % 2
    sol = affine_solutions(BitMatrix.from_dense(l_s.reshape(spos.size, r)), BitVector.from_bits(residual))
    if sol is None:
        return None
    delta, basis = sol
    return c_guess ^ delta.to_bits(), basis.to_dense()


def weak_sample(ctx: SimContext, spec: SampleSpec, strategy: str = "auto",
                project: Optional[Sequence[int]] = None):
    """返回 count 个 BitVector 样本，或在支撑与 X_{S,y} 不交时返回 EMPTY。

    给出 project 时只返回这些顶点上的比特（按 project 的顺序）；basis 策略下逐样本的代价只与 |project| 有关
    """
    if strategy not in STRATEGIES:
        raise ContractViolation(f"unknown strategy {strategy!r}")
    n, r, f = ctx.n, ctx.k, ctx.factorization
    s, yy = _check_fixed(n, spec.S, spec.y)
    keep = np.arange(n, dtype=np.int64) if project is None else np.asarray(list(project), dtype=np.int64)
    if keep.size and (keep.min() < 0 or keep.max() >= n):
        raise ContractViolation(f"projected index out of range [0, {n})")
    solved = _solve_fixed(ctx, s, yy)
    if solved is None:
        logger.info(f"weak_sample: empty support for |S|={s.size}")
        return EMPTY
    c0, basis = solved
    d = basis.shape[1]
    if strategy == "auto":
        strategy = "basis" if n - s.size < n else "direct"
    rho = random_bits(spec.seed, PURPOSE_PGS_SAMPLE, spec.start, spec.count, d).astype(np.int64)
    kpos = np.array([f.position[int(v)] for v in keep], dtype=np.int64)
    if strategy == "basis":
        base = implicit_apply(f, "L", BitMatrix.from_dense(c0.reshape(r, 1))).to_dense()[:, 0] ^ ctx.w
        u = implicit_apply(f, "L", BitMatrix.from_dense(basis)).to_dense() if d else np.zeros((n, 0), np.uint8)
        xs = ((base[kpos].astype(np.int64) + rho @ u[kpos].T.astype(np.int64)) % 2).astype(np.uint8)
    else:
        xp = np.zeros((spec.count, n), dtype=np.uint8)
        batch = Config.SAMPLE_BATCH
        for start in range(0, spec.count, batch):
            chunk = rho[start:start + batch]
            c = ((c0.astype(np.int64) + chunk @ basis.T.astype(np.int64)) % 2).astype(np.uint8)
            xp[start:start + batch] = implicit_apply(f, "L", BitMatrix.from_dense(c.T)).to_dense().T ^ ctx.w
        xs = xp[:, kpos]
    logger.info(f"weak_sample: {spec.count} samples, strategy={strategy}, free_dim={d}, kept={keep.size}")
    return [BitVector.from_bits(row) for row in xs]


# ===================== 图态包装 =====================
BASES = ("X", "Y", "Z")


def _graph_instance(g: nx.Graph, basis: Dict[int, str]):
    n = g.number_of_nodes()
    if sorted(g.nodes) != list(range(n)):
        raise ContractViolation("graph vertices must be 0..n-1")
    if set(basis) != set(range(n)):
        raise ContractViolation("basis must be given for every vertex")
    if any(b not in BASES for b in basis.values()):
        raise ContractViolation(f"basis labels must be one of {BASES}")
    diag = [1 if basis[v] == "Y" else 0 for v in range(n)]
    a = PhasedAdjacency.from_graph(g, diag)
    z_vertices = [v for v in range(n) if basis[v] == "Z"]
    base = trim_z_vertices(a, {v: 0 for v in z_vertices})
    return a, z_vertices, base


def _restrict_td(td: TreeDecomposition, kept: List[int]) -> TreeDecomposition:
    """分解限制到保留顶点并重新编号，宽度不增"""
    index = {v: i for i, v in enumerate(kept)}
    bags = [tuple(index[v] for v in bag if v in index) for bag in td.bags]
    return TreeDecomposition(bags, list(td.edges), td.root)


def graph_state_simulate(g: nx.Graph, basis: Dict[int, str], mode: str,
                         xs: Optional[Sequence[BitVector]] = None,
                         spec: Optional[SampleSpec] = None, td: Optional[TreeDecomposition] = None):
    """X、Y、Z 基下图态的强/弱模拟：U_i ∈ {H, HŽ, I}"""
    a, z_vertices, base = _graph_instance(g, basis)
    kept = base.kept
    ctx = prepare(base.adjacency, _restrict_td(td, kept) if td is not None else None)
    n = a.n
    if mode == "strong":
        if xs is None:
            raise ContractViolation("strong mode needs query bitstrings")
        bits = _as_bit_rows(xs, n)
        cache: Dict[Tuple[int, ...], Tuple[ExactAmplitude, np.ndarray]] = {}
        shifted = []
        factors = []
        for row in bits:
            key = tuple(int(row[v]) for v in z_vertices)
            if key not in cache:
                t = trim_z_vertices(a, dict(zip(z_vertices, key)))
                # Z^c 经过 H 变为 X^c：查询比特整体平移
                shift = (t.adjacency.high ^ base.adjacency.high).astype(np.uint8)
                cache[key] = (t.phase * t.scale, shift)
            factor, shift = cache[key]
            shifted.append(BitVector.from_bits(row[kept] ^ shift) if kept else BitVector.zeros(0))
            factors.append(factor)
        amps = strong_eval(ctx, shifted)
        return [fa * am for fa, am in zip(factors, amps)]
    if mode != "weak":
        raise ContractViolation(f"unknown mode {mode!r}")
    if spec is None:
        raise ContractViolation("weak mode needs a SampleSpec")
    return _graph_weak(ctx, a, z_vertices, kept, spec)


def _graph_weak(ctx: SimContext, a: PhasedAdjacency, z_vertices: List[int], kept: List[int], spec: SampleSpec):
    """Z 结果与 X/Y 结果联合均匀：x_K = w ⊕ Lc ⊕ M·x_Z"""
    n, r, f = a.n, ctx.k, ctx.factorization
    s, yy = _check_fixed(n, spec.S, spec.y)
    fixed = dict(zip(s.tolist(), yy.tolist()))
    off = a.offdiag.to_dense().astype(np.int64)
    kidx = {v: i for i, v in enumerate(kept)}
    z_free = [v for v in z_vertices if v not in fixed]
    z_fixed = [v for v in z_vertices if v in fixed]
    l_dense = f.explicit_l().to_dense().astype(np.int64)
    nv = len(z_free) + r
    rows, rhs = [], []
    for v in s.tolist():
        if v not in kidx:
            continue
        pos = f.position[kidx[v]]
        row = np.zeros(nv, dtype=np.int64)
        row[:len(z_free)] = off[v, z_free]
        row[len(z_free):] = l_dense[pos]
        rows.append(row)
        rhs.append((fixed[v] + int(ctx.w[pos]) + sum(off[v, z] * fixed[z] for z in z_fixed)) % 2)
    system = np.array(rows, dtype=np.int64).reshape(len(rows), nv)
    sol = affine_solutions(BitMatrix.from_dense(system), BitVector.from_bits(np.array(rhs, dtype=np.uint8)))
    if sol is None:
        logger.info("graph weak sample: empty support")
        return EMPTY
    u0, basis = sol[0].to_bits().astype(np.int64), sol[1].to_dense().astype(np.int64)
    rho = random_bits(spec.seed, PURPOSE_GRAPH_SAMPLE, 0, spec.count, basis.shape[1]).astype(np.int64)
    u = (u0 + rho @ basis.T) % 2
    xz = np.zeros((spec.count, n), dtype=np.int64)
    for j, v in enumerate(z_free):
        xz[:, v] = u[:, j]
    for v in z_fixed:
        xz[:, v] = fixed[v]
    c = u[:, len(z_free):]
    xp = (ctx.w.astype(np.int64) + c @ l_dense.T) % 2
    xk = ctx.to_vertices(xp.astype(np.uint8)).astype(np.int64)
    out = xz.copy()
    if kept:
        out[:, kept] = (xk + xz @ off[:, kept]) % 2
    logger.info(f"graph weak sample: {spec.count} samples, |Z|={len(z_vertices)}, free_dim={basis.shape[1]}")
    return [BitVector.from_bits(row) for row in out]
