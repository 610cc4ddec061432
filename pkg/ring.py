"""Z[ω, 1/2] 上的精确振幅，ω = e^{iπ/4}。

元素写作 (a0 + a1·ω + a2·ω² + a3·ω³) / 2^k，规约到系数不全为偶数（零元取 k = 0），
因此表示唯一，相等判断直接比较系数。
"""
from __future__ import annotations

import cmath
from functools import cached_property
from typing import Optional, Tuple

_OMEGA_C = cmath.exp(1j * cmath.pi / 4)


class ExactAmplitude:

    def __init__(self, coef: Tuple[int, int, int, int] = (0, 0, 0, 0), k: int = 0) -> None:
        a = [int(c) for c in coef]
        if len(a) != 4:
            raise ValueError(f"expected 4 coefficients, got {len(a)}")
        if not any(a):
            k = 0
        else:
            while all(c % 2 == 0 for c in a):
                a = [c // 2 for c in a]
                k -= 1
        self._coef = tuple(a)
        self._k = int(k)

    # ===================== 构造 =====================
    @classmethod
    def zero(cls) -> ExactAmplitude:
        return cls()

    @classmethod
    def one(cls) -> ExactAmplitude:
        return cls((1, 0, 0, 0))

    @classmethod
    def from_int(cls, x: int) -> ExactAmplitude:
        return cls((x, 0, 0, 0))

    @classmethod
    def omega_power(cls, m: int) -> ExactAmplitude:
        m %= 8
        coef = [0, 0, 0, 0]
        coef[m % 4] = 1 if m < 4 else -1
        return cls(tuple(coef))

    @classmethod
    def sqrt2_power(cls, s: int) -> ExactAmplitude:
        """2^{s/2}；√2 = ω − ω³"""
        if s % 2 == 0:
            return cls((1, 0, 0, 0), -s // 2)
        return cls((0, 1, 0, -1), -(s - 1) // 2)

    @classmethod
    def clifford(cls, s: int, m: int) -> ExactAmplitude:
        """2^{s/2}·ω^m"""
        return cls.sqrt2_power(s) * cls.omega_power(m)

    # ===================== 访问 =====================
    @property
    def coef(self) -> Tuple[int, int, int, int]:
        return self._coef

    @property
    def k(self) -> int:
        return self._k

    def is_zero(self) -> bool:
        return not any(self._coef)

    def __bool__(self) -> bool:
        return not self.is_zero()

    # ===================== 运算 =====================
    def _lift(self, other) -> ExactAmplitude:
        if isinstance(other, ExactAmplitude):
            return other
        if isinstance(other, int):
            return ExactAmplitude.from_int(other)
        return NotImplemented

    def __add__(self, other) -> ExactAmplitude:
        other = self._lift(other)
        if other is NotImplemented:
            return other
        k = max(self._k, other._k)
        sa = 1 << (k - self._k)
        sb = 1 << (k - other._k)
        return ExactAmplitude(tuple(x * sa + y * sb for x, y in zip(self._coef, other._coef)), k)

    __radd__ = __add__

    def __neg__(self) -> ExactAmplitude:
        return ExactAmplitude(tuple(-x for x in self._coef), self._k)

    def __sub__(self, other) -> ExactAmplitude:
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> ExactAmplitude:
        return (-self) + other

    def __mul__(self, other) -> ExactAmplitude:
        other = self._lift(other)
        if other is NotImplemented:
            return other
        a, b = self._coef, other._coef
        c = [0, 0, 0, 0]
        for i in range(4):
            if not a[i]:
                continue
            for j in range(4):
                if i + j < 4:
                    c[i + j] += a[i] * b[j]
                else:
                    # ω^4 = -1
                    c[i + j - 4] -= a[i] * b[j]
        return ExactAmplitude(tuple(c), self._k + other._k)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> ExactAmplitude:
        if e < 0:
            raise ValueError("negative powers are not supported")
        result = ExactAmplitude.one()
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def conj(self) -> ExactAmplitude:
        a0, a1, a2, a3 = self._coef
        return ExactAmplitude((a0, -a3, -a2, -a1), self._k)

    def abs2(self) -> ExactAmplitude:
        return self * self.conj()

    # ===================== 比较 / 输出 =====================
    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = ExactAmplitude.from_int(other)
        if not isinstance(other, ExactAmplitude):
            return NotImplemented
        return self._coef == other._coef and self._k == other._k

    def __hash__(self) -> int:
        return hash((self._coef, self._k))

    def __repr__(self) -> str:
        return f"ExactAmplitude({self._coef}, k={self._k})"

    @cached_property
    def clifford_form(self) -> Optional[Tuple[int, int]]:
        """返回 (s, m) 使自身 = 2^{s/2}·ω^m；零或非该形式返回 None"""
        if self.is_zero():
            return None
        n2 = self.abs2()
        b0, b1, b2, b3 = n2.coef
        if b1 or b2 or b3 or b0 != 1:
            return None
        s = -n2.k
        for m in range(8):
            if ExactAmplitude.clifford(s, m) == self:
                return s, m
        return None

    def to_complex(self) -> complex:
        z = sum(c * _OMEGA_C ** j for j, c in enumerate(self._coef))
        return complex(z) * 2.0 ** (-self._k)

    def render(self) -> str:
        if self.is_zero():
            return "zero"
        form = self.clifford_form
        if form is not None:
            return f"({form[0]}, {form[1]})"
        return f"[{', '.join(str(c) for c in self._coef)}]/2^{self._k}"


ZERO = ExactAmplitude.zero()
ONE = ExactAmplitude.one()
OMEGA = ExactAmplitude.omega_power(1)
