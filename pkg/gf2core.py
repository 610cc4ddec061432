"""F2 上的位压缩线性代数。

行优先存储：第 j 列位于第 j//64 个字的第 j%64 位（小端），每行末尾的填充位恒为 0，
所以矩阵相等可以直接按字比较。
"""
import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from config import Config
from errors import ContractViolation, ShapeError

logger = logging.getLogger(__name__)

WORD = np.dtype('<u8')
WORD_BITS = Config.WORD_BITS


def _words(cols: int) -> int:
    return (cols + WORD_BITS - 1) // WORD_BITS


def _pack_rows(bits: np.ndarray, cols: int) -> np.ndarray:
    """(rows, cols) 的 0/1 数组压缩成 (rows, words) 的 '<u8'"""
    rows = bits.shape[0]
    w = _words(cols)
    padded = np.zeros((rows, w * WORD_BITS), dtype=np.uint8)
    padded[:, :cols] = bits[:, :cols] & 1
    packed = np.packbits(padded, axis=1, bitorder='little')
    return np.ascontiguousarray(packed).view(WORD).reshape(rows, w)


def _unpack_rows(data: np.ndarray, cols: int) -> np.ndarray:
    rows = data.shape[0]
    if rows == 0 or cols == 0:
        return np.zeros((rows, cols), dtype=np.uint8)
    as_bytes = np.ascontiguousarray(data, dtype=WORD).view(np.uint8)
    return np.unpackbits(as_bytes, axis=1, bitorder='little')[:, :cols]


def parity(words: np.ndarray) -> int:
    """一组字的异或后奇偶校验"""
    if words.size == 0:
        return 0
    x = int(np.bitwise_xor.reduce(words.ravel()))
    return bin(x).count("1") & 1


# ===================== 数据类型 =====================
class BitVector:
    def __init__(self, length: int, data: Optional[np.ndarray] = None):
        if length < 0:
            raise ShapeError(f"negative length {length}")
        self.len = int(length)
        if data is None:
            data = np.zeros(_words(length), dtype=WORD)
        self.data = np.asarray(data, dtype=WORD).reshape(_words(length)).copy()
        self._clear_pad()

    def _clear_pad(self) -> None:
        rem = self.len % WORD_BITS
        if rem and self.data.size:
            self.data[-1] &= np.uint64((1 << rem) - 1)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitVector":
        arr = np.asarray(list(bits) if not isinstance(bits, np.ndarray) else bits, dtype=np.uint8).reshape(1, -1)
        return cls(arr.shape[1], _pack_rows(arr, arr.shape[1])[0])

    @classmethod
    def from_str(cls, text: str) -> "BitVector":
        text = text.strip()
        if any(ch not in "01" for ch in text):
            raise ContractViolation(f"not a bitstring: {text!r}")
        return cls.from_bits([int(ch) for ch in text])

    @classmethod
    def from_int(cls, value: int, length: int) -> "BitVector":
        """第 i 位取 value 的第 i 位"""
        return cls.from_bits([(value >> i) & 1 for i in range(length)])

    @classmethod
    def zeros(cls, length: int) -> "BitVector":
        return cls(length)

    def to_bits(self) -> np.ndarray:
        return _unpack_rows(self.data.reshape(1, -1), self.len)[0]

    def to_str(self) -> str:
        return "".join(str(int(b)) for b in self.to_bits())

    def get(self, i: int) -> int:
        return int((self.data[i // WORD_BITS] >> np.uint64(i % WORD_BITS)) & np.uint64(1))

    def weight(self) -> int:
        return int(self.to_bits().sum())

    def any(self) -> bool:
        return bool(self.data.any())

    def __xor__(self, other: "BitVector") -> "BitVector":
        if self.len != other.len:
            raise ShapeError(f"length mismatch {self.len} vs {other.len}")
        return BitVector(self.len, self.data ^ other.data)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitVector):
            return NotImplemented
        return self.len == other.len and bool(np.array_equal(self.data, other.data))

    def __hash__(self) -> int:
        return hash((self.len, self.data.tobytes()))

    def __len__(self) -> int:
        return self.len

    def __repr__(self) -> str:
        return f"BitVector({self.to_str()!r})"

    def as_column(self) -> "BitMatrix":
        return BitMatrix.from_dense(self.to_bits().reshape(-1, 1))


class BitMatrix:
    def __init__(self, rows: int, cols: int, data: Optional[np.ndarray] = None):
        if rows < 0 or cols < 0:
            raise ShapeError(f"negative shape ({rows}, {cols})")
        self.rows = int(rows)
        self.cols = int(cols)
        if data is None:
            data = np.zeros((rows, _words(cols)), dtype=WORD)
        self.data = np.array(data, dtype=WORD).reshape(rows, _words(cols))
        self._clear_pad()

    def _clear_pad(self) -> None:
        rem = self.cols % WORD_BITS
        if rem and self.data.size:
            self.data[:, -1] &= np.uint64((1 << rem) - 1)

    @property
    def words(self) -> int:
        return _words(self.cols)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.rows, self.cols

    @classmethod
    def from_dense(cls, arr) -> "BitMatrix":
        arr = np.asarray(arr, dtype=np.int64)
        if arr.ndim != 2:
            raise ShapeError(f"expected 2-d array, got {arr.ndim}-d")
        bits = (arr & 1).astype(np.uint8)
        return cls(bits.shape[0], bits.shape[1], _pack_rows(bits, bits.shape[1]))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BitMatrix":
        return cls(rows, cols)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls.from_dense(np.eye(n, dtype=np.uint8))

    @classmethod
    def random(cls, rows: int, cols: int, rng: np.random.Generator, density: float = 0.5) -> "BitMatrix":
        return cls.from_dense((rng.random((rows, cols)) < density).astype(np.uint8))

    @classmethod
    def from_columns(cls, columns: Sequence[BitVector], length: int) -> "BitMatrix":
        out = np.zeros((length, len(columns)), dtype=np.uint8)
        for j, col in enumerate(columns):
            out[:, j] = col.to_bits()
        return cls.from_dense(out)

    def to_dense(self) -> np.ndarray:
        return _unpack_rows(self.data, self.cols)

    def copy(self) -> "BitMatrix":
        return BitMatrix(self.rows, self.cols, self.data.copy())

    def transpose(self) -> "BitMatrix":
        return BitMatrix.from_dense(self.to_dense().T)

    T = property(transpose)

    def get(self, i: int, j: int) -> int:
        return int((self.data[i, j // WORD_BITS] >> np.uint64(j % WORD_BITS)) & np.uint64(1))

    def row(self, i: int) -> BitVector:
        return BitVector(self.cols, self.data[i])

    def column(self, j: int) -> BitVector:
        return BitVector.from_bits(self.to_dense()[:, j])

    def select(self, rows: Optional[Sequence[int]] = None, cols: Optional[Sequence[int]] = None) -> "BitMatrix":
        dense = self.to_dense()
        if rows is not None:
            dense = dense[np.asarray(rows, dtype=np.int64)]
        if cols is not None:
            dense = dense[:, np.asarray(cols, dtype=np.int64)]
        return BitMatrix.from_dense(dense.reshape(len(rows) if rows is not None else self.rows,
                                                  len(cols) if cols is not None else self.cols))

    def is_symmetric(self) -> bool:
        return self.rows == self.cols and self == self.transpose()

    def apply(self, v: BitVector) -> BitVector:
        if v.len != self.cols:
            raise ShapeError(f"matrix has {self.cols} columns, vector has length {v.len}")
        bits = np.fromiter((parity(self.data[i] & v.data) for i in range(self.rows)),
                           dtype=np.uint8, count=self.rows)
        return BitVector.from_bits(bits)

    def __xor__(self, other: "BitMatrix") -> "BitMatrix":
        if self.shape != other.shape:
            raise ShapeError(f"shape mismatch {self.shape} vs {other.shape}")
        return BitMatrix(self.rows, self.cols, self.data ^ other.data)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.data, other.data))

    def __hash__(self) -> int:
        return hash((self.rows, self.cols, self.data.tobytes()))

    def __repr__(self) -> str:
        return f"BitMatrix({self.rows}x{self.cols})"


# ===================== 乘法 =====================
def mul(a: BitMatrix, b: BitMatrix) -> BitMatrix:
    if a.cols != b.rows:
        raise ShapeError(f"cannot multiply {a.shape} by {b.shape}")
    if a.cols >= Config.FOUR_RUSSIANS_MIN_WIDTH:
        data = _mul_four_russians(a, b)
    else:
        data = _mul_row_xor(a, b)
    return BitMatrix(a.rows, b.cols, data)


def _mul_row_xor(a: BitMatrix, b: BitMatrix) -> np.ndarray:
    out = np.zeros((a.rows, b.words), dtype=WORD)
    if a.rows == 0 or b.words == 0:
        return out
    dense = a.to_dense()
    for i in range(a.rows):
        idx = np.flatnonzero(dense[i])
        if idx.size:
            out[i] = np.bitwise_xor.reduce(b.data[idx], axis=0)
    return out


def _mul_four_russians(a: BitMatrix, b: BitMatrix) -> np.ndarray:
    """每 8 行 b 预先算出 256 项异或表，按 a 的字节查表"""
    out = np.zeros((a.rows, b.words), dtype=WORD)
    if a.rows == 0 or b.words == 0:
        return out
    a_bytes = np.ascontiguousarray(a.data).view(np.uint8)
    for c in range((a.cols + 7) // 8):
        chunk = b.data[8 * c: 8 * c + 8]
        table = np.zeros((256, b.words), dtype=WORD)
        for bit in range(chunk.shape[0]):
            span = 1 << bit
            table[span:2 * span] = table[:span] ^ chunk[bit]
        out ^= table[a_bytes[:, c]]
    return out


# ===================== 消元 =====================
def _rref(data: np.ndarray, pivot_cols: int) -> List[int]:
    """原地化为行最简形，只在前 pivot_cols 列选主元，返回主元列"""
    rows = data.shape[0]
    pivots: List[int] = []
    r = 0
    for c in range(pivot_cols):
        if r == rows:
            break
        w, bit = c // WORD_BITS, np.uint64(c % WORD_BITS)
        col = (data[r:, w] >> bit) & np.uint64(1)
        hits = np.flatnonzero(col)
        if hits.size == 0:
            continue
        p = r + int(hits[0])
        if p != r:
            data[[r, p]] = data[[p, r]]
        mask = ((data[:, w] >> bit) & np.uint64(1)).astype(bool)
        mask[r] = False
        data[mask] ^= data[r]
        pivots.append(c)
        r += 1
    return pivots


def rank(a: BitMatrix) -> int:
    return len(_rref(a.data.copy(), a.cols))


def solve_lower_unit(l: BitMatrix, rhs: BitVector) -> BitVector:
    """前代求 l·x = rhs，l 为单位下三角"""
    n = l.rows
    if l.cols != n:
        raise ShapeError(f"triangular solve needs a square matrix, got {l.shape}")
    if rhs.len != n:
        raise ShapeError(f"rhs length {rhs.len} does not match {n}")
    dense = l.to_dense()
    if n and (not np.all(np.diag(dense) == 1) or np.triu(dense, 1).any()):
        raise ContractViolation("matrix is not unit lower triangular")
    x = np.zeros(_words(n), dtype=WORD)
    b = rhs.to_bits()
    for i in range(n):
        if b[i] ^ parity(l.data[i] & x):
            x[i // WORD_BITS] |= np.uint64(1) << np.uint64(i % WORD_BITS)
    return BitVector(n, x)


@dataclass
class SpanResult:
    member: bool
    coords: Optional[BitVector] = None

    def __bool__(self) -> bool:
        return self.member


def affine_solutions(a: BitMatrix, rhs: BitVector) -> Optional[Tuple[BitVector, BitMatrix]]:
    """a·c = rhs 的全部解：返回 (特解, 零空间基 cols×d)，无解返回 None"""
    if rhs.len != a.rows:
        raise ShapeError(f"rhs length {rhs.len} does not match {a.rows} rows")
    k = a.cols
    aug = np.zeros((a.rows, k + 1), dtype=np.uint8)
    aug[:, :k] = a.to_dense()
    aug[:, k] = rhs.to_bits()
    data = _pack_rows(aug, k + 1)
    pivots = _rref(data, k)
    reduced = _unpack_rows(data, k + 1)
    if reduced[len(pivots):, k].any():
        return None
    particular = np.zeros(k, dtype=np.uint8)
    for r, c in enumerate(pivots):
        particular[c] = reduced[r, k]
    free = [c for c in range(k) if c not in set(pivots)]
    basis = np.zeros((k, len(free)), dtype=np.uint8)
    for j, f in enumerate(free):
        basis[f, j] = 1
        for r, c in enumerate(pivots):
            basis[c, j] = reduced[r, f]
    return BitVector.from_bits(particular), BitMatrix.from_dense(basis)


def nullspace(a: BitMatrix) -> BitMatrix:
    """a·c = 0 的解空间基，按列给出"""
    return affine_solutions(a, BitVector.zeros(a.rows))[1]


def in_span(basis: BitMatrix, v: BitVector) -> SpanResult:
    if basis.rows != v.len:
        raise ShapeError(f"basis has {basis.rows} rows, vector has length {v.len}")
    sol = affine_solutions(basis, v)
    if sol is None:
        return SpanResult(False)
    return SpanResult(True, sol[0])
