"""独立的基准引擎：稠密态矢量、相位图态振幅的暴力求和、稳定子表、
稳定子 -> 图态(加局部门) 的转换，以及单比特 Clifford 的 Euler 分解。
"""
import cmath
import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from config import Config
from errors import ContractViolation, LimitExceeded, UnsupportedGateError
from gf2core import BitMatrix, BitVector, rank
from pgs import PhasedAdjacency
from ring import ExactAmplitude

logger = logging.getLogger(__name__)

_SQRT_HALF = 1 / math.sqrt(2)
_OMEGA = cmath.exp(1j * math.pi / 4)

GATE_MATRICES: Dict[str, np.ndarray] = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _SQRT_HALF,
    "S": np.diag([1, 1j]),
    "SDG": np.diag([1, -1j]),
    "Z": np.diag([1, -1]).astype(complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "T": np.diag([1, _OMEGA]),
    "TDG": np.diag([1, _OMEGA.conjugate()]),
}


# ===================== 稠密态矢量 =====================
class DenseState:
    """下标第 q 位对应第 q 个量子比特"""

    def __init__(self, n: int, amplitudes: Optional[np.ndarray] = None):
        if n > Config.MAX_DENSE_QUBITS:
            raise LimitExceeded(f"dense simulation limited to n <= {Config.MAX_DENSE_QUBITS}, got {n}")
        self.n = n
        if amplitudes is None:
            amplitudes = np.zeros(2 ** n, dtype=complex)
            amplitudes[0] = 1
        self.amplitudes = np.asarray(amplitudes, dtype=complex).reshape(2 ** n)

    def copy(self) -> "DenseState":
        return DenseState(self.n, self.amplitudes.copy())

    def _axis(self, q: int) -> int:
        return self.n - 1 - q

    def apply_1q(self, u: np.ndarray, q: int) -> "DenseState":
        psi = self.amplitudes.reshape((2,) * self.n) if self.n else self.amplitudes
        psi = np.moveaxis(np.tensordot(u, psi, axes=([1], [self._axis(q)])), 0, self._axis(q))
        self.amplitudes = psi.reshape(2 ** self.n)
        return self

    def apply_cz(self, a: int, b: int) -> "DenseState":
        idx = np.arange(2 ** self.n)
        sign = ((idx >> a) & 1) & ((idx >> b) & 1)
        self.amplitudes = np.where(sign == 1, -self.amplitudes, self.amplitudes)
        return self

    def apply_gate(self, name: str, qubits: Sequence[int]) -> "DenseState":
        if name == "CZ":
            return self.apply_cz(*qubits)
        if name == "CNOT":
            a, b = qubits
            return self.apply_1q(GATE_MATRICES["H"], b).apply_cz(a, b).apply_1q(GATE_MATRICES["H"], b)
        if name not in GATE_MATRICES:
            raise UnsupportedGateError(f"no matrix for gate {name!r}")
        return self.apply_1q(GATE_MATRICES[name], qubits[0])

    def apply_pauli_row(self, z: Sequence[int], x: Sequence[int], r: int) -> "DenseState":
        """(−1)^r ∏ σ_q，(z,x) = (0,1) X，(1,1) Y，(1,0) Z"""
        for q in range(self.n):
            zq, xq = int(z[q]) & 1, int(x[q]) & 1
            if zq and xq:
                self.apply_1q(GATE_MATRICES["Y"], q)
            elif xq:
                self.apply_1q(GATE_MATRICES["X"], q)
            elif zq:
                self.apply_1q(GATE_MATRICES["Z"], q)
        if r & 1:
            self.amplitudes = -self.amplitudes
        return self

    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def amplitude(self, x: BitVector) -> complex:
        return complex(self.amplitudes[int(sum(int(b) << q for q, b in enumerate(x.to_bits())))])

    def exact(self, index: int) -> ExactAmplitude:
        """把 2^{s/2}·ω^m 形式的浮点振幅还原为精确值"""
        amp = complex(self.amplitudes[index])
        if abs(amp) < Config.FLOAT_TOL:
            return ExactAmplitude.zero()
        s = round(math.log2(abs(amp) ** 2))
        m = round(cmath.phase(amp) / (math.pi / 4)) % 8
        exact = ExactAmplitude.clifford(s, m)
        if abs(exact.to_complex() - amp) > 1e-6:
            raise ContractViolation(f"amplitude {amp} is not of the form 2^(s/2) w^m")
        return exact


def statevector(c) -> DenseState:
    state = DenseState(c.n)
    for name, qubits in c.gates:
        state.apply_gate(name, qubits)
        if abs(state.norm2() - 1) > Config.FLOAT_TOL:
            raise ContractViolation(f"norm drifted after {name} {qubits}")
    logger.debug(f"statevector: n={c.n}, gates={len(c.gates)}")
    return state


def graph_state(g: nx.Graph) -> DenseState:
    n = g.number_of_nodes()
    state = DenseState(n)
    for q in range(n):
        state.apply_1q(GATE_MATRICES["H"], q)
    for u, v in g.edges:
        state.apply_cz(u, v)
    return state


def pgs_state(a: PhasedAdjacency) -> DenseState:
    """|A⟩ = 2^{-n/2} Σ_x (−i)^{xᵀAx}|x⟩"""
    n = a.n
    xs = _all_bits(n)
    e = _quad_forms(a, xs)
    return DenseState(n, (-1j) ** e / math.sqrt(2 ** n))


def hadamard_all(state: DenseState) -> DenseState:
    out = state.copy()
    for q in range(out.n):
        out.apply_1q(GATE_MATRICES["H"], q)
    return out


def equal_up_to_phase(u: DenseState, v: DenseState, tol: float = Config.FLOAT_TOL) -> bool:
    """以第一个非零分量为相位参照"""
    if u.n != v.n:
        return False
    nz = np.flatnonzero(np.abs(u.amplitudes) > tol)
    if not nz.size:
        return bool(np.all(np.abs(v.amplitudes) <= tol))
    ref = nz[0]
    if abs(v.amplitudes[ref]) <= tol:
        return False
    phase = v.amplitudes[ref] / u.amplitudes[ref]
    return bool(np.allclose(u.amplitudes * phase, v.amplitudes, atol=tol * 10))


# ===================== 暴力求和 =====================
def _all_bits(n: int) -> np.ndarray:
    return ((np.arange(2 ** n)[:, None] >> np.arange(n)[None, :]) & 1).astype(np.int64)


def _quad_forms(a: PhasedAdjacency, xs: np.ndarray) -> np.ndarray:
    off = a.offdiag.to_dense().astype(np.int64)
    return (xs @ a.diag() + np.einsum("ij,jk,ik->i", xs, off, xs)) % 4


def pgs_brute_amplitude(a: PhasedAdjacency, x: BitVector) -> ExactAmplitude:
    """⟨x|H^{⊗n}|A⟩ = 2^{-n} Σ_z i^{2x·z − zᵀAz}"""
    n = a.n
    if n > Config.MAX_BRUTE_QUBITS:
        raise LimitExceeded(f"brute-force summation limited to n <= {Config.MAX_BRUTE_QUBITS}, got {n}")
    if x.len != n:
        raise ContractViolation(f"bitstring length {x.len} does not match n={n}")
    zs = _all_bits(n)
    e = (2 * (zs @ x.to_bits().astype(np.int64)) - _quad_forms(a, zs)) % 4
    c = np.bincount(e, minlength=4)
    return ExactAmplitude((int(c[0] - c[2]), 0, int(c[1] - c[3]), 0), n)


# ===================== 稳定子表 =====================
def _pauli_code(z: int, x: int) -> int:
    """I, X, Y, Z -> 0, 1, 2, 3"""
    return x + 3 * z - 2 * z * x


def _product_phase(p1: int, p2: int) -> int:
    """σ_{p1}·σ_{p2} = i^e σ：循环次序为 +1，逆序为 −1"""
    if p1 == 0 or p2 == 0:
        return 0
    f = (p2 - p1) % 3
    return -1 if f == 2 else f


@dataclass
class Tableau:
    z: np.ndarray
    x: np.ndarray
    r: np.ndarray

    @classmethod
    def zero_state(cls, n: int) -> "Tableau":
        return cls(np.eye(n, dtype=np.uint8), np.zeros((n, n), dtype=np.uint8), np.zeros(n, dtype=np.uint8))

    @property
    def n(self) -> int:
        return self.z.shape[0]

    def copy(self) -> "Tableau":
        return Tableau(self.z.copy(), self.x.copy(), self.r.copy())

    def row_add(self, i: int, j: int) -> None:
        """第 j 行加到第 i 行"""
        e = sum(_product_phase(_pauli_code(int(self.z[i, k]), int(self.x[i, k])),
                               _pauli_code(int(self.z[j, k]), int(self.x[j, k]))) for k in range(self.n))
        self.r[i] = (int(self.r[i]) + int(self.r[j]) + (e % 4) // 2) % 2
        self.z[i] ^= self.z[j]
        self.x[i] ^= self.x[j]

    def apply_H(self, i: int) -> None:
        self.z[:, i], self.x[:, i] = self.x[:, i].copy(), self.z[:, i].copy()
        self.r ^= self.z[:, i] & self.x[:, i]

    def apply_S(self, i: int) -> None:
        self.r ^= self.z[:, i] & self.x[:, i]
        self.z[:, i] ^= self.x[:, i]

    def apply_CZ(self, a: int, b: int) -> None:
        self.r ^= self.x[:, a] & self.x[:, b] & (self.z[:, a] ^ self.z[:, b])
        za = self.z[:, a] ^ self.x[:, b]
        self.z[:, b] ^= self.x[:, a]
        self.z[:, a] = za

    def apply_gate(self, name: str, qubits: Sequence[int]) -> None:
        q = qubits[0]
        if name == "H":
            self.apply_H(q)
        elif name in ("S", "Z", "SDG"):
            for _ in range({"S": 1, "Z": 2, "SDG": 3}[name]):
                self.apply_S(q)
        elif name == "X":
            self.apply_H(q)
            self.apply_S(q)
            self.apply_S(q)
            self.apply_H(q)
        elif name == "CZ":
            self.apply_CZ(*qubits)
        else:
            raise UnsupportedGateError(f"tableau cannot apply {name}")

    def is_valid(self) -> bool:
        """各行两两对易且 [Z̃|X̃] 满秩"""
        sym = (self.z.astype(np.int64) @ self.x.T.astype(np.int64) + self.x.astype(np.int64) @ self.z.T) % 2
        full = rank(BitMatrix.from_dense(np.hstack([self.z, self.x]))) == self.n
        return bool(not sym.any() and full)


def tableau_run(c) -> Tableau:
    if c.t_count:
        raise UnsupportedGateError("tableau simulation needs a Clifford-only circuit")
    t = Tableau.zero_state(c.n)
    for name, qubits in c.gates:
        t.apply_gate(name, qubits)
    return t


def stabilizes(t: Tableau, state: DenseState, tol: float = Config.FLOAT_TOL) -> bool:
    for i in range(t.n):
        image = state.copy().apply_pauli_row(t.z[i], t.x[i], int(t.r[i]))
        if np.max(np.abs(image.amplitudes - state.amplitudes), initial=0.0) > tol:
            return False
    return True


def stabilizers_to_graph(t: Tableau) -> Tuple[nx.Graph, np.ndarray, np.ndarray, np.ndarray]:
    """|ψ⟩ = ⊗_j P_j^{c_j} H^{a_j} (S†)^{b_j} |G⟩，P_j = X（a_j = 1）或 Z（a_j = 0）"""
    if not t.is_valid():
        raise ContractViolation("rows are not independent commuting stabilizers")
    t = t.copy()
    n = t.n
    a = np.zeros(n, dtype=np.uint8)
    b = np.zeros(n, dtype=np.uint8)
    p = list(range(n))            # 位置 -> 量子比特

    def column_swap(i: int, j: int) -> None:
        p[i], p[j] = p[j], p[i]
        t.z[:, [i, j]] = t.z[:, [j, i]]
        t.x[:, [i, j]] = t.x[:, [j, i]]

    for i in range(n):
        xs = np.flatnonzero(t.x[i, i:])
        if not xs.size:
            zs = np.flatnonzero(t.z[i, i:])
            if not zs.size:
                raise ContractViolation(f"row {i} vanished during elimination")
            k = int(zs[0])
            t.apply_H(i + k)
            a[p[i + k]] ^= 1
        else:
            k = int(xs[0])
        column_swap(i, i + k)
        for j in range(i + 1, n):
            if t.x[j, i]:
                t.row_add(j, i)
    for i in range(n - 1, -1, -1):
        for j in range(i):
            if t.x[j, i]:
                t.row_add(j, i)
    for i in range(n):
        if t.z[i, i]:
            t.apply_S(i)
            b[p[i]] ^= 1
    adj = np.zeros((n, n), dtype=np.uint8)
    c = np.zeros(n, dtype=np.uint8)
    for i in range(n):
        c[p[i]] = t.r[i]
        for j in range(n):
            adj[p[i], p[j]] = t.z[i, j]
    g = nx.Graph()
    g.add_nodes_from(range(n))
    g.add_edges_from((int(u), int(v)) for u, v in zip(*np.nonzero(np.triu(adj, 1))))
    logger.debug(f"stabilizers_to_graph: n={n}, edges={g.number_of_edges()}, H={int(a.sum())}, S={int(b.sum())}")
    return g, a, b, c


def graph_with_local_ops(g: nx.Graph, a: Sequence[int], b: Sequence[int], c: Sequence[int]) -> DenseState:
    state = graph_state(g)
    for q in range(state.n):
        if b[q]:
            state.apply_1q(GATE_MATRICES["SDG"], q)
        if a[q]:
            state.apply_1q(GATE_MATRICES["H"], q)
        if c[q]:
            state.apply_1q(GATE_MATRICES["X" if a[q] else "Z"], q)
    return state


# ===================== 单比特 Clifford =====================
Z_CHECK = np.diag([1, -1j])
X_CHECK = GATE_MATRICES["H"] @ Z_CHECK @ GATE_MATRICES["H"]


def _phase_key(u: np.ndarray) -> Tuple[complex, ...]:
    flat = u.ravel()
    ref = flat[np.flatnonzero(np.abs(flat) > 1e-9)[0]]
    norm = flat / (ref / abs(ref))
    return tuple(complex(round(v.real, 9) + 0, round(v.imag, 9) + 0) for v in norm)


def euler_matrix(a: int, b: int, c: int) -> np.ndarray:
    mp = np.linalg.matrix_power
    return mp(Z_CHECK, a % 4) @ mp(X_CHECK, b % 4) @ mp(Z_CHECK, c % 4)


@lru_cache(maxsize=1)
def _clifford_table() -> Tuple[Tuple[Tuple[int, int, int], ...], Dict[Tuple[complex, ...], int]]:
    """24 个元素，每个元素记录 (c, b, a) 字典序最小的三元组"""
    triples = sorted(itertools.product(range(4), repeat=3), key=lambda t: (t[2], t[1], t[0]))
    canon: List[Tuple[int, int, int]] = []
    index: Dict[Tuple[complex, ...], int] = {}
    for tr in triples:
        key = _phase_key(euler_matrix(*tr))
        if key not in index:
            index[key] = len(canon)
            canon.append(tr)
    if len(canon) != 24:
        raise ContractViolation(f"expected 24 one-qubit Cliffords, found {len(canon)}")
    return tuple(canon), index


@dataclass(frozen=True)
class OneQubitClifford:
    index: int

    @classmethod
    def from_matrix(cls, u: np.ndarray) -> "OneQubitClifford":
        _, index = _clifford_table()
        key = _phase_key(np.asarray(u, dtype=complex))
        if key not in index:
            raise ContractViolation("matrix is not a one-qubit Clifford")
        return cls(index[key])

    @property
    def matrix(self) -> np.ndarray:
        return euler_matrix(*_clifford_table()[0][self.index])

    def __mul__(self, other: "OneQubitClifford") -> "OneQubitClifford":
        return OneQubitClifford.from_matrix(self.matrix @ other.matrix)

    @staticmethod
    def all() -> List["OneQubitClifford"]:
        return [OneQubitClifford(i) for i in range(24)]


def euler_decompose(u: OneQubitClifford) -> Tuple[int, int, int]:
    """Ž^a X̌^b Ž^c 等于 u（差一个全局相位）"""
    return _clifford_table()[0][u.index]
