"""电路前端：文本电路 -> ZX 图 -> 图状(graph-like) ZX 图 -> 相位图态实例 (A, S, y)，
以及 T 门小工具化与 Clifford+T 强模拟。

相位一律以 π/4 的整数倍（Z8）存储；Clifford 路径要求全部为偶数。
"""
import itertools
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from config import Config
from errors import CircuitParseError, ContractViolation, LimitExceeded, UnsupportedGateError
from gf2core import BitMatrix, BitVector
from ldl import d_quadratic, implicit_apply
from pgs import PhasedAdjacency
from ring import ExactAmplitude
from sim import SampleSpec, prepare, strong_eval, weak_sample, EMPTY
from treedec import TreeDecomposition, slices_from_births

logger = logging.getLogger(__name__)

# 门名 -> 操作数个数
GATE_ARITY = {"H": 1, "S": 1, "SDG": 1, "Z": 1, "X": 1, "T": 1, "TDG": 1, "CZ": 2, "CNOT": 2}
# 对角单比特门的 Z8 相位
DIAGONAL_PHASE = {"Z": 4, "S": 2, "SDG": 6, "T": 1, "TDG": 7}

Z_SPIDER, X_SPIDER, H_BOX, BOUNDARY = "Z", "X", "H", "B"

# diag(1, ω) = T_COEF_I·I + T_COEF_S·S
T_COEF_S = ExactAmplitude((1, -1, 1, -1), 1)
T_COEF_I = ExactAmplitude((1, 1, -1, 1), 1)


# ===================== 电路 =====================
@dataclass
class CliffordCircuit:
    n: int
    gates: List[Tuple[str, Tuple[int, ...]]] = field(default_factory=list)

    def add(self, name: str, *qubits: int) -> "CliffordCircuit":
        name = name.upper()
        if name not in GATE_ARITY:
            raise UnsupportedGateError(f"unknown gate {name!r}")
        if len(qubits) != GATE_ARITY[name]:
            raise ContractViolation(f"{name} takes {GATE_ARITY[name]} operands, got {len(qubits)}")
        if any(not 0 <= q < self.n for q in qubits):
            raise ContractViolation(f"{name} {qubits}: qubit index out of range for n={self.n}")
        if len(qubits) == 2 and qubits[0] == qubits[1]:
            raise ContractViolation(f"{name} operands must be distinct")
        if name == "CNOT":
            a, b = qubits
            self.gates.extend([("H", (b,)), ("CZ", (a, b)), ("H", (b,))])
        else:
            self.gates.append((name, tuple(int(q) for q in qubits)))
        return self

    @property
    def t_count(self) -> int:
        return sum(1 for name, _ in self.gates if name in ("T", "TDG"))

    def is_clifford(self) -> bool:
        return self.t_count == 0

    def to_text(self) -> str:
        lines = [f"qubits {self.n}"] + [f"{name} {' '.join(map(str, qs))}" for name, qs in self.gates]
        return "\n".join(lines) + "\n"

    def to_diagram(self) -> "ZxDiagram":
        return circuit_to_diagram(self)

    def reduction_graph(self) -> Tuple[nx.Graph, List[int]]:
        """约化后相位图态的非对角图与每个顶点的诞生时刻"""
        inst = _instance_from_graph_like(to_graph_like(self.to_diagram()), allow_sites=True)
        return inst.A.graph(), list(inst.births)


def parse_circuit(text: str, n: Optional[int] = None) -> CliffordCircuit:
    """每行一个门；'#' 之后为注释，';' 分隔同一行的多个门；可选首行 'qubits N'，否则按最大下标推断"""
    parsed: List[Tuple[int, str, Tuple[int, ...]]] = []
    declared = n
    statements = [(line_no, part) for line_no, line in enumerate(text.splitlines(), 1)
                  for part in line.split("#", 1)[0].split(";")]
    for line_no, raw in statements:
        entries = raw.split()
        if not entries:
            continue
        name = entries[0].upper()
        if name == "QUBITS":
            try:
                declared = int(entries[1])
            except (IndexError, ValueError):
                raise CircuitParseError(line_no, "bad qubit count")
            continue
        if name not in GATE_ARITY:
            raise CircuitParseError(line_no, f"unknown gate {entries[0]!r}")
        try:
            qubits = tuple(int(q) for q in entries[1:])
        except ValueError:
            raise CircuitParseError(line_no, f"bad qubit index in {raw.strip()!r}")
        if len(qubits) != GATE_ARITY[name]:
            raise CircuitParseError(line_no, f"{name} takes {GATE_ARITY[name]} operands")
        if any(q < 0 for q in qubits):
            raise CircuitParseError(line_no, "negative qubit index")
        if len(qubits) == 2 and qubits[0] == qubits[1]:
            raise CircuitParseError(line_no, f"{name} operands must be distinct")
        parsed.append((line_no, name, qubits))
    width = max([q + 1 for _, _, qs in parsed for q in qs], default=1)
    if declared is None:
        declared = width
    circuit = CliffordCircuit(declared)
    for line_no, name, qubits in parsed:
        if max(qubits) >= declared:
            raise CircuitParseError(line_no, f"qubit index {max(qubits)} >= {declared}")
        circuit.add(name, *qubits)
    logger.debug(f"parse_circuit: n={circuit.n}, gates={len(circuit.gates)}, t={circuit.t_count}")
    return circuit


def read_circuit(path: Path) -> CliffordCircuit:
    with open(path, "r", encoding="utf-8") as f:
        return parse_circuit(f.read())


# ===================== ZX 图 =====================
@dataclass
class ZxDiagram:
    kinds: Dict[int, str] = field(default_factory=dict)
    phases: Dict[int, int] = field(default_factory=dict)
    edges: List[Tuple[int, int, bool]] = field(default_factory=list)   # (u, v, 是否 Hadamard 边)
    outputs: List[int] = field(default_factory=list)                  # 每个量子比特一个边界点
    scalar: ExactAmplitude = field(default_factory=ExactAmplitude.one)
    births: Dict[int, int] = field(default_factory=dict)
    graph_like: bool = False

    def add_node(self, kind: str, phase: int = 0, birth: int = 0) -> int:
        node = max(self.kinds, default=-1) + 1
        self.kinds[node] = kind
        self.phases[node] = phase % 8
        self.births[node] = birth
        return node

    def add_edge(self, u: int, v: int, hadamard: bool = False) -> None:
        self.edges.append((u, v, bool(hadamard)))

    def copy(self) -> "ZxDiagram":
        return ZxDiagram(dict(self.kinds), dict(self.phases), list(self.edges), list(self.outputs),
                         self.scalar, dict(self.births), self.graph_like)

    def spiders(self) -> List[int]:
        return sorted(v for v, k in self.kinds.items() if k != BOUNDARY)

    def incident(self, v: int) -> List[int]:
        return [i for i, (a, b, _) in enumerate(self.edges) if a == v or b == v]

    def remove_node(self, v: int) -> None:
        del self.kinds[v], self.phases[v], self.births[v]

    def check_graph_like(self) -> bool:
        if any(k not in (Z_SPIDER, BOUNDARY) for k in self.kinds.values()):
            return False
        seen = set()
        boundary_owner: Dict[int, int] = {}
        for u, v, h in self.edges:
            if u == v:
                return False
            ku, kv = self.kinds[u], self.kinds[v]
            if ku == BOUNDARY and kv == BOUNDARY:
                return False
            if BOUNDARY in (ku, kv):
                if h:
                    return False
                spider = v if ku == BOUNDARY else u
                if spider in boundary_owner:
                    return False
                boundary_owner[spider] = u if ku == BOUNDARY else v
                continue
            if not h:
                return False
            key = (min(u, v), max(u, v))
            if key in seen:
                return False
            seen.add(key)
        return True


def circuit_to_diagram(c: CliffordCircuit) -> ZxDiagram:
    """|0⟩ = 2^{-1/2}·X(0)；CZ = √2·[Z–H–Z]；H 为二元 Hadamard 方框"""
    d = ZxDiagram()
    frontier = []
    for q in range(c.n):
        frontier.append(d.add_node(X_SPIDER, 0, 0))
    d.scalar = ExactAmplitude.sqrt2_power(-c.n)
    for t, (name, qs) in enumerate(c.gates, 1):
        if name == "H":
            box = d.add_node(H_BOX, 0, t)
            d.add_edge(frontier[qs[0]], box)
            frontier[qs[0]] = box
        elif name in DIAGONAL_PHASE or name == "X":
            kind = X_SPIDER if name == "X" else Z_SPIDER
            node = d.add_node(kind, 4 if name == "X" else DIAGONAL_PHASE[name], t)
            d.add_edge(frontier[qs[0]], node)
            frontier[qs[0]] = node
        elif name == "CZ":
            a, b = qs
            za = d.add_node(Z_SPIDER, 0, t)
            zb = d.add_node(Z_SPIDER, 0, t)
            d.add_edge(frontier[a], za)
            d.add_edge(frontier[b], zb)
            d.add_edge(za, zb, hadamard=True)
            frontier[a], frontier[b] = za, zb
            d.scalar = d.scalar * ExactAmplitude.sqrt2_power(1)
        else:
            raise UnsupportedGateError(f"gate {name} has no diagram template")
    end = len(c.gates) + 1
    for q in range(c.n):
        out = d.add_node(BOUNDARY, 0, end)
        d.add_edge(frontier[q], out)
        d.outputs.append(out)
    return d


# ===================== 改写规则 =====================
def absorb_hadamard_boxes(d: ZxDiagram) -> ZxDiagram:
    """每个 Hadamard 方框变成一条 Hadamard 边；相邻两个方框抵消为普通边"""
    d = d.copy()
    for box in [v for v, k in sorted(d.kinds.items()) if k == H_BOX]:
        idx = d.incident(box)
        if len(idx) != 2:
            raise ContractViolation(f"Hadamard box {box} must have exactly two legs")
        (a1, b1, h1), (a2, b2, h2) = d.edges[idx[0]], d.edges[idx[1]]
        u = b1 if a1 == box else a1
        v = b2 if a2 == box else a2
        d.edges = [e for i, e in enumerate(d.edges) if i not in idx]
        d.add_edge(u, v, not (h1 ^ h2))
        d.remove_node(box)
    return d


def color_change(d: ZxDiagram) -> ZxDiagram:
    """X 蜘蛛 -> Z 蜘蛛，关联边翻转 Hadamard 标记（自环翻转两次）"""
    d = d.copy()
    xs = {v for v, k in d.kinds.items() if k == X_SPIDER}
    edges = []
    for u, v, h in d.edges:
        flips = (u in xs) + (v in xs)
        edges.append((u, v, h ^ bool(flips % 2)))
    d.edges = edges
    for v in xs:
        d.kinds[v] = Z_SPIDER
    return d


def fuse_spiders(d: ZxDiagram) -> ZxDiagram:
    """普通边相连的 Z 蜘蛛合并，相位相加；普通自环删除"""
    d = d.copy()
    parent = {v: v for v in d.kinds}

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for u, v, h in d.edges:
        if not h and u != v and d.kinds[u] == Z_SPIDER and d.kinds[v] == Z_SPIDER:
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[max(ru, rv)] = min(ru, rv)
    for v in sorted(d.kinds):
        root = find(v)
        if root != v:
            d.phases[root] = (d.phases[root] + d.phases[v]) % 8
            d.births[root] = min(d.births[root], d.births[v])
            d.remove_node(v)
    edges = []
    for u, v, h in d.edges:
        ru, rv = find(u), find(v)
        if ru == rv and not h and d.kinds[ru] == Z_SPIDER:
            continue
        edges.append((ru, rv, h))
    d.edges = edges
    return d


def remove_hadamard_loops(d: ZxDiagram) -> ZxDiagram:
    """Hadamard 自环：相位 +π，标量 2^{-1/2}"""
    d = d.copy()
    edges = []
    for u, v, h in d.edges:
        if u == v and h and d.kinds[u] == Z_SPIDER:
            d.phases[u] = (d.phases[u] + 4) % 8
            d.scalar = d.scalar * ExactAmplitude.sqrt2_power(-1)
        else:
            edges.append((u, v, h))
    d.edges = edges
    return d


def remove_parallel_hadamards(d: ZxDiagram) -> ZxDiagram:
    """两 Z 蜘蛛之间成对的 Hadamard 边删除，每对标量 1/2"""
    d = d.copy()
    counts: Dict[Tuple[int, int], int] = {}
    edges = []
    for u, v, h in d.edges:
        if h and u != v and d.kinds[u] == Z_SPIDER and d.kinds[v] == Z_SPIDER:
            key = (min(u, v), max(u, v))
            counts[key] = counts.get(key, 0) + 1
        else:
            edges.append((u, v, h))
    for key, cnt in sorted(counts.items()):
        if cnt % 2:
            edges.append((key[0], key[1], True))
        d.scalar = d.scalar * ExactAmplitude.sqrt2_power(-2 * (cnt // 2))
    d.edges = edges
    return d


def separate_boundaries(d: ZxDiagram) -> ZxDiagram:
    """边界边改为普通边，且每个蜘蛛至多连一个边界：插入相位为 0 的 Z 蜘蛛"""
    d = d.copy()
    owner = set()
    for b in d.outputs:
        idx = d.incident(b)
        if len(idx) != 1:
            raise ContractViolation(f"boundary {b} must have exactly one edge")
        i = idx[0]
        u, v, h = d.edges[i]
        spider = v if u == b else u
        birth = d.births[spider]
        if d.kinds[spider] == BOUNDARY:
            # 裸导线：b -- w1 -H- w2 -H- 另一端
            w1 = d.add_node(Z_SPIDER, 0, birth)
            w2 = d.add_node(Z_SPIDER, 0, birth)
            d.edges[i] = (b, w1, False)
            d.add_edge(w1, w2, True)
            d.add_edge(w2, spider, not h)
            owner.add(w1)
            continue
        if h:
            w = d.add_node(Z_SPIDER, 0, birth)
            d.edges[i] = (b, w, False)
            d.add_edge(w, spider, True)
            owner.add(w)
        elif spider in owner:
            w1 = d.add_node(Z_SPIDER, 0, birth)
            w2 = d.add_node(Z_SPIDER, 0, birth)
            d.edges[i] = (b, w1, False)
            d.add_edge(w1, w2, True)
            d.add_edge(w2, spider, True)
            owner.add(w1)
        else:
            owner.add(spider)
    return d


def canonical_order(d: ZxDiagram) -> ZxDiagram:
    """蜘蛛按 (诞生时刻, 编号) 重新编号，边界点排在最后"""
    spiders = sorted(d.spiders(), key=lambda v: (d.births[v], v))
    bounds = [b for b in d.outputs] + sorted(v for v, k in d.kinds.items()
                                             if k == BOUNDARY and v not in d.outputs)
    relabel = {v: i for i, v in enumerate(spiders + bounds)}
    out = ZxDiagram(scalar=d.scalar, graph_like=d.graph_like)
    for old, new in sorted(relabel.items(), key=lambda kv: kv[1]):
        out.kinds[new] = d.kinds[old]
        out.phases[new] = d.phases[old]
        out.births[new] = d.births[old]
    out.edges = sorted((min(relabel[u], relabel[v]), max(relabel[u], relabel[v]), h) for u, v, h in d.edges)
    out.outputs = [relabel[b] for b in d.outputs]
    return out


GRAPH_LIKE_PASSES = (absorb_hadamard_boxes, color_change, fuse_spiders, remove_hadamard_loops,
                     remove_parallel_hadamards, separate_boundaries, canonical_order)


def to_graph_like(d: ZxDiagram) -> ZxDiagram:
    before = len(d.spiders())
    for rule in GRAPH_LIKE_PASSES:
        d = rule(d)
    d.graph_like = True
    if not d.check_graph_like():
        logger.error("to_graph_like produced a diagram that is not graph-like")
        raise ContractViolation("graph-like conversion failed")
    logger.debug(f"to_graph_like: spiders {before} -> {len(d.spiders())}, edges={len(d.edges)}")
    return d


def evaluate_diagram(d: ZxDiagram, bits: Sequence[int]) -> ExactAmplitude:
    """逐蜘蛛取值求和得到张量分量（精确，仅用于小图校验）"""
    d = color_change(absorb_hadamard_boxes(d))
    spiders = d.spiders()
    if len(spiders) > Config.MAX_BRUTE_QUBITS:
        raise LimitExceeded(f"{len(spiders)} spiders exceed the brute-force limit")
    if len(bits) != len(d.outputs):
        raise ContractViolation(f"{len(bits)} output bits for {len(d.outputs)} outputs")
    index = {v: i for i, v in enumerate(spiders)}
    fixed = {b: int(x) & 1 for b, x in zip(d.outputs, bits)}
    m = len(spiders)
    s = ((np.arange(2 ** m)[:, None] >> np.arange(m)[None, :]) & 1).astype(np.int64)
    ok = np.ones(2 ** m, dtype=bool)
    phase = np.zeros(2 ** m, dtype=np.int64)
    for v in spiders:
        phase += d.phases[v] * s[:, index[v]]
    halves = 0

    def value(node):
        if d.kinds[node] == BOUNDARY:
            return np.full(2 ** m, fixed[node], dtype=np.int64)
        return s[:, index[node]]

    for u, v, h in d.edges:
        a, b = value(u), value(v)
        if h:
            halves += 1
            phase += 4 * (a * b)
        elif u != v:
            ok &= a == b
    phase %= 8
    counts = np.bincount(phase[ok], minlength=8)
    total = ExactAmplitude(tuple(int(counts[j] - counts[j + 4]) for j in range(4)))
    return d.scalar * ExactAmplitude.sqrt2_power(-halves) * total


# ===================== 相位图态实例 =====================
@dataclass
class PgsInstance:
    A: PhasedAdjacency
    S: List[int]
    y: List[int]
    output_map: List[int]            # 量子比特 q -> 自由下标
    scalar: ExactAmplitude
    td: Optional[TreeDecomposition] = None
    births: List[int] = field(default_factory=list)
    sites: List[int] = field(default_factory=list)       # T 小工具的挂点
    residual: List[int] = field(default_factory=list)    # 挂点与哑节点：Schur 补所在的块

    @property
    def N(self) -> int:
        return self.A.n

    def assemble(self, x: BitVector) -> BitVector:
        if x.len != len(self.output_map):
            raise ContractViolation(f"output bitstring has length {x.len}, expected {len(self.output_map)}")
        full = np.zeros(self.N, dtype=np.uint8)
        full[self.S] = self.y
        full[self.output_map] = x.to_bits()
        return BitVector.from_bits(full)

    def sidecar(self) -> Dict[str, object]:
        return {
            "S": list(self.S),
            "y": list(self.y),
            "output_map": list(self.output_map),
            "scalar": self.scalar.render(),
            "sites": list(self.sites),
        }


def _instance_from_graph_like(d: ZxDiagram, allow_sites: bool = False,
                              sites: Sequence[int] = ()) -> PgsInstance:
    """图状 ZX 图 -> (A, S, y)：对角 = −p/2 mod 4，每条 H 边给非对角 1，每个输出加一个边界顶点 t_q"""
    spiders = d.spiders()
    index = {v: i for i, v in enumerate(spiders)}
    ns, n = len(spiders), len(d.outputs)
    size = ns + n
    a = np.zeros((size, size), dtype=np.int64)
    site_set = set(sites)
    for v in spiders:
        p = d.phases[v]
        if v in site_set:
            p -= 1
        if p % 2:
            if not allow_sites:
                raise UnsupportedGateError("diagram has a non-Clifford phase; use clifford_t_strong")
            p -= 1
        a[index[v], index[v]] = (-(p // 2)) % 4
    h_edges = 0
    output_spider = {}
    for u, v, h in d.edges:
        if d.kinds[u] == BOUNDARY or d.kinds[v] == BOUNDARY:
            b, s = (u, v) if d.kinds[u] == BOUNDARY else (v, u)
            output_spider[b] = s
            continue
        a[index[u], index[v]] = a[index[v], index[u]] = 1
        h_edges += 1
    for q, b in enumerate(d.outputs):
        t = ns + q
        a[t, index[output_spider[b]]] = a[index[output_spider[b]], t] = 1
    # ⟨x̃|H^N|A⟩ = 2^{-ns}·(蜘蛛求和)，每条 H 边另带 2^{-1/2}
    scalar = d.scalar * ExactAmplitude.sqrt2_power(2 * ns - h_edges)
    births = [d.births[v] for v in spiders] + [max(d.births.values(), default=0)] * n
    return PgsInstance(PhasedAdjacency.from_dense(a), list(range(ns)), [0] * ns,
                       [ns + q for q in range(n)], scalar, None, births,
                       sites=[index[v] for v in sorted(site_set)])


def reduce_to_pgs(c: CliffordCircuit, td: Optional[TreeDecomposition] = None,
                  calibrate: bool = False) -> PgsInstance:
    if not c.is_clifford():
        raise UnsupportedGateError(f"circuit has {c.t_count} T/TDG gates; use clifford_t_strong")
    d = to_graph_like(c.to_diagram())
    inst = _instance_from_graph_like(d)
    inst.td = td if td is not None else slices_from_births(inst.A.graph(), inst.births, 2 * max(c.n, 1))
    if calibrate:
        inst.scalar = _calibrated_scalar(c, inst)
    logger.info(f"reduce_to_pgs: n={c.n}, gates={len(c.gates)}, N={inst.N}, td width={inst.td.width}")
    return inst


def _calibrated_scalar(c: CliffordCircuit, inst: PgsInstance) -> ExactAmplitude:
    """用稠密态矢量的一个参考振幅重新确定标量（调试用）"""
    from oracle import statevector
    if c.n > Config.MAX_DENSE_QUBITS:
        raise LimitExceeded(f"calibration needs n <= {Config.MAX_DENSE_QUBITS}")
    state = statevector(c)
    ref = int(np.flatnonzero(np.abs(state.amplitudes) > Config.FLOAT_TOL)[0])
    x = BitVector.from_int(ref, c.n)
    ctx = prepare(inst.A)
    raw = strong_eval(ctx, [inst.assemble(x)])[0]
    target = state.exact(ref)
    s1, m1 = target.clifford_form
    s2, m2 = raw.clifford_form
    scalar = ExactAmplitude.clifford(s1 - s2, m1 - m2)
    if scalar != inst.scalar:
        logger.warning(f"calibration changed the scalar from {inst.scalar.render()} to {scalar.render()}")
    return scalar


# ===================== T 小工具与 Clifford+T =====================
def _split_odd_spiders(d: ZxDiagram) -> Tuple[ZxDiagram, List[int]]:
    """奇相位蜘蛛 v(p) -> v(p−1) -H- w -H- s(1)，返回挂点 s"""
    d = d.copy()
    sites = []
    for v in d.spiders():
        if d.phases[v] % 2:
            d.phases[v] = (d.phases[v] - 1) % 8
            w = d.add_node(Z_SPIDER, 0, d.births[v])
            s = d.add_node(Z_SPIDER, 1, d.births[v])
            d.add_edge(v, w, True)
            d.add_edge(w, s, True)
            sites.append(s)
    return d, sites


def _insert_dummies(a: np.ndarray, kappa: List[int]) -> Tuple[np.ndarray, List[int], List[int], List[int]]:
    """在 κ 块秩亏处挂 j -H- w -H- u 链：w 并入 κ，u 进入剩余块；每条链使振幅减半"""
    sub = PhasedAdjacency.from_dense(a[np.ix_(kappa, kappa)])
    ctx = prepare(sub)
    peeled = [kappa[v] for v in ctx.perm[ctx.k:]]
    size = a.shape[0]
    out = np.zeros((size + 2 * len(peeled), size + 2 * len(peeled)), dtype=np.int64)
    out[:size, :size] = a
    new_kappa, dummies = list(kappa), []
    for i, j in enumerate(peeled):
        w, u = size + 2 * i, size + 2 * i + 1
        out[j, w] = out[w, j] = 1
        out[w, u] = out[u, w] = 1
        new_kappa.append(w)
        dummies.append(u)
    if peeled:
        logger.debug(f"inserted {len(peeled)} dummy chains to make the Clifford block full rank")
    return out, new_kappa, dummies, peeled


def gadgetize_t(c: CliffordCircuit) -> Tuple[PgsInstance, List[int]]:
    d = to_graph_like(c.to_diagram())
    d, site_nodes = _split_odd_spiders(d)
    inst = _instance_from_graph_like(d, sites=site_nodes)
    sites = list(inst.sites)
    kappa = [v for v in range(inst.N) if v not in set(sites)]
    a, kappa, dummies, anchors = _insert_dummies(inst.A.to_dense(), kappa)
    extra = a.shape[0] - inst.N
    inst.A = PhasedAdjacency.from_dense(a)
    # 每条哑链使振幅减半
    inst.scalar = inst.scalar * ExactAmplitude.sqrt2_power(extra)
    # 哑节点作为固定比特（取 0）
    inst.S = inst.S + list(range(inst.N - extra, inst.N))
    inst.y = inst.y + [0] * extra
    inst.births = inst.births + [inst.births[j] for j in anchors for _ in (0, 1)]
    inst.residual = sites + dummies
    logger.info(f"gadgetize_t: t_sites={len(sites)}, dummies={len(dummies)}, N={inst.N}")
    return inst, sites


def _d_apply(ctx, arr: np.ndarray) -> np.ndarray:
    """D·c（F2），arr 为 (批量, k)"""
    out = arr * ctx.factorization.one_mask
    pairs = ctx.factorization.anti_pairs
    if pairs.size:
        out[:, pairs] = arr[:, pairs + 1]
        out[:, pairs + 1] = arr[:, pairs]
    return out


# ===================== 逐项增量求和 =====================
@dataclass
class _SumState:
    alive: List[int]
    diag: np.ndarray      # Z4
    off: np.ndarray       # F2，零对角
    lin: np.ndarray       # (查询, m) F2，因子 (−1)^{ℓ·z}
    phase: np.ndarray     # (查询,) Z8
    zero: np.ndarray      # (查询,) bool
    e: int = 0            # √2 的幂

    def copy(self) -> "_SumState":
        return _SumState(list(self.alive), self.diag.copy(), self.off.copy(), self.lin.copy(),
                         self.phase.copy(), self.zero.copy(), self.e)


class IncrementalTermSum:
    """⟨x|H^{⊗m}|A⟩ 的逐变量高斯和消元，每步之前的状态都保留。

    主元总是秩最小的存活顶点，偶对角主元的伙伴是秩最小的邻居，因此选择只依赖非对角结构
    和主元自身的对角奇偶。某顶点对角元改变时，从首次触及它的步骤重新消元即可。
    """

    def __init__(self, a: np.ndarray, queries: np.ndarray, order: Sequence[int]):
        a = np.asarray(a, dtype=np.int64)
        m = a.shape[0]
        self.m = m
        self._rank = {v: r for r, v in enumerate(order)}
        if sorted(self._rank) != list(range(m)):
            raise ContractViolation("elimination order must be a permutation of the residual block")
        off = (a % 2).astype(np.uint8)
        np.fill_diagonal(off, 0)
        q = queries.shape[0]
        start = _SumState(list(range(m)), np.diag(a) % 4, off, queries.astype(np.uint8).reshape(q, m).copy(),
                          np.zeros(q, dtype=np.int64), np.zeros(q, dtype=bool))
        self.history: List[_SumState] = []
        self.touch: Dict[int, int] = {}
        self.steps_run = 0
        self.final = self._run(start, 0)

    def _run(self, state: _SumState, step: int) -> _SumState:
        del self.history[step:]
        while state.alive:
            self.history.append(state.copy())
            for v in self._step(state):
                self.touch[v] = step
            step += 1
            self.steps_run += 1
        return state

    def _step(self, st: _SumState) -> Tuple[int, ...]:
        rank = self._rank.__getitem__
        j = min(st.alive, key=rank)
        rest = [v for v in st.alive if v != j]
        nb = [v for v in rest if st.off[j, v]]
        dj = int(st.diag[j])
        lj = st.lin[:, j].astype(np.int64)
        if dj % 2:
            # Σ_{z_j} = √2·ω^{d−2}·(−i)^{σ s}，s = ℓ_j ⊕ Σ_{k∈N(j)} z_k
            sigma = dj - 2
            st.e += 1
            st.phase = (st.phase + sigma - 2 * sigma * lj) % 8
            if nb:
                idx = np.array(nb, dtype=np.int64)
                st.diag[idx] = (st.diag[idx] + sigma) % 4
                block = st.off[np.ix_(idx, idx)] ^ 1
                np.fill_diagonal(block, 0)
                st.off[np.ix_(idx, idx)] = block
                st.lin[:, idx] ^= st.lin[:, [j]]
            st.alive = rest
            return (j,)
        st.e += 2
        c = (lj ^ (dj // 2)).astype(np.int64)
        if not nb:
            st.zero |= c == 1
            st.alive = rest
            return (j,)
        # Σ_{z_j} 给出 2·[z_k = c ⊕ β·z]，代入 z_k 的全部项
        k = min(nb, key=rank)
        ms = np.array([v for v in rest if v != k], dtype=np.int64)
        dk = int(st.diag[k])
        lk = st.lin[:, k].astype(np.int64)
        if dk % 2:
            st.phase = (st.phase - 2 * dk * c) % 8
        else:
            st.phase = (st.phase + 4 * (dk // 2) * c) % 8
        st.phase = (st.phase + 4 * c * lk) % 8
        if ms.size:
            beta = st.off[j, ms].astype(np.int64)
            gamma = st.off[k, ms].astype(np.int64)
            lin = st.lin[:, ms].astype(np.int64)
            pair = np.outer(beta, gamma) + np.outer(gamma, beta)
            if dk % 2:
                st.diag[ms] = (st.diag[ms] + dk * beta) % 4
                lin += np.outer(c, beta)
                pair += np.outer(beta, beta)
            else:
                lin += (dk // 2) * beta
            lin += np.outer(c, gamma) + np.outer(lk, beta)
            st.diag[ms] = (st.diag[ms] + 2 * beta * gamma) % 4
            pair %= 2
            np.fill_diagonal(pair, 0)
            st.off[np.ix_(ms, ms)] ^= pair.astype(np.uint8)
            st.lin[:, ms] = (lin % 2).astype(np.uint8)
        st.alive = [v for v in rest if v != k]
        return (j, k)

    def shift_diagonal(self, v: int, delta: int) -> int:
        """A_vv += delta (mod 4)，返回重新执行的起始步"""
        step = self.touch[v]
        for st in self.history[:step + 1]:
            st.diag[v] = (st.diag[v] + delta) % 4
        self.final = self._run(self.history[step].copy(), step)
        return step

    def amplitudes(self) -> List[ExactAmplitude]:
        st = self.final
        zero = ExactAmplitude.zero()
        return [zero if z else ExactAmplitude.clifford(st.e - 2 * self.m, int(p))
                for p, z in zip(st.phase, st.zero)]


def gray_code(t: int) -> List[int]:
    return [j ^ (j >> 1) for j in range(2 ** t)]


def clifford_t_strong(c: CliffordCircuit, xs: Sequence[BitVector], order: str = "gray",
                      t_cap: Optional[int] = None) -> List[ExactAmplitude]:
    """Σ_b x^{t−|b|} y^{|b|} ⟨x̃|H|A_b⟩：κ 块只分解一次，每项只重算剩余块"""
    cap = Config.T_CAP if t_cap is None else t_cap
    if c.t_count > cap:
        raise LimitExceeded(f"circuit has {c.t_count} T gates, above the cap of {cap}")
    if order not in ("gray", "naive"):
        raise ContractViolation(f"unknown term order {order!r}")
    inst, sites = gadgetize_t(c)
    t = len(sites)
    residual = inst.residual
    rset = set(residual)
    kappa = [v for v in range(inst.N) if v not in rset]
    dense = inst.A.to_dense()
    ctx = prepare(PhasedAdjacency.from_dense(dense[np.ix_(kappa, kappa)]))
    k = ctx.k
    if k != len(kappa):
        raise ContractViolation("Clifford block is not full rank after dummy insertion")
    f = ctx.factorization
    # 剩余块坐标 z_R 对 c 的贡献：G = L1⁻¹·P·A_κR
    a_kr = dense[np.ix_(kappa, residual)] % 2
    g = implicit_apply(f, "Linv", BitMatrix.from_dense(a_kr[ctx.perm].reshape(k, len(residual)))).to_dense()
    gt = g.T.astype(np.int64)
    q_diag = d_quadratic(f, gt) if len(residual) else np.zeros(0, dtype=np.int64)
    q_off = (gt @ _d_apply(ctx, gt).T) % 2 if len(residual) else np.zeros((0, 0), dtype=np.int64)
    base = dense[np.ix_(residual, residual)].copy()
    np.fill_diagonal(base, (np.diag(base) - q_diag) % 4)
    off = (base + q_off) % 2
    np.fill_diagonal(off, np.diag(base))
    base = off
    # 每个查询：c0 = L1⁻¹(x̃_κ ⊕ v)，线性项 ℓ = (D c0)ᵀG
    full = np.array([inst.assemble(x).to_bits() for x in xs], dtype=np.uint8).reshape(len(xs), inst.N)
    xk = full[:, kappa][:, ctx.perm] ^ ctx.w
    c0 = implicit_apply(f, "Linv", BitMatrix.from_dense(xk.T.reshape(k, len(xs)))).to_dense().T.astype(np.int64)
    qc0 = d_quadratic(f, c0) if len(xs) else np.zeros(0, dtype=np.int64)
    lin = (_d_apply(ctx, c0) @ gt.T) % 2 if len(residual) else np.zeros((len(xs), 0), dtype=np.int64)
    xr = ((full[:, residual].astype(np.int64) + lin) % 2).astype(np.uint8)
    queries = [BitVector.from_bits(row) for row in xr]
    pos = {v: i for i, v in enumerate(residual)}
    site_idx = [pos[s] for s in sites]
    powers_i = [T_COEF_I ** j for j in range(t + 1)]
    powers_s = [T_COEF_S ** j for j in range(t + 1)]
    totals = [ExactAmplitude.zero() for _ in xs]

    def accumulate(mask: int, amps: Sequence[ExactAmplitude]) -> None:
        weight = bin(mask).count("1")
        coef = powers_i[t - weight] * powers_s[weight]
        for i, amp in enumerate(amps):
            if amp:
                totals[i] = totals[i] + coef * amp

    if order == "gray":
        # 站点按下标倒序排在最后消元：翻转最频繁的低位站点最晚被触及
        others = [i for i in range(len(residual)) if i not in set(site_idx)]
        summer = IncrementalTermSum(base, xr, others + site_idx[::-1])
        prev = 0
        for mask in gray_code(t):
            flipped = mask ^ prev
            if flipped:
                j = flipped.bit_length() - 1
                summer.shift_diagonal(site_idx[j], 3 if mask & flipped else 1)
            prev = mask
            accumulate(mask, summer.amplitudes())
        logger.debug(f"clifford_t_strong: gray order ran {summer.steps_run} elimination steps "
                     f"for {2 ** t} terms of size {len(residual)}")
    else:
        for mask in range(2 ** t):
            term = base.copy()
            chosen = [site_idx[j] for j in range(t) if mask >> j & 1]
            if chosen:
                term[chosen, chosen] = (term[chosen, chosen] + 3) % 4
            accumulate(mask, strong_eval(prepare(PhasedAdjacency.from_dense(term)), queries))
    out = []
    for i in range(len(xs)):
        prefactor = inst.scalar * ctx.alpha * ExactAmplitude.clifford(-k, 2 * int(qc0[i]))
        out.append(prefactor * totals[i])
    logger.info(f"clifford_t_strong: t={t}, terms={2 ** t}, residual={len(residual)}, queries={len(xs)}")
    return out


def sample_circuit(c: CliffordCircuit, count: int, seed: int = Config.DEFAULT_SEED,
                   strategy: str = "auto") -> List[BitVector]:
    """测量全部输出比特的弱模拟：实例内 S 固定为 0，投影到输出下标"""
    inst = reduce_to_pgs(c)
    ctx = prepare(inst.A, inst.td)
    samples = weak_sample(ctx, SampleSpec(tuple(inst.S), tuple(inst.y), seed, count), strategy,
                          project=inst.output_map)
    if samples is EMPTY:
        raise ContractViolation("circuit output distribution has empty support")
    return samples


def all_outputs(n: int) -> List[BitVector]:
    return [BitVector.from_bits(bits) for bits in itertools.product((0, 1), repeat=n)]
