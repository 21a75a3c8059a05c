"""Dense arithmetic in the real Clifford algebra R_n with e_i^2 = -1.

Elements are stored as 2**n real coefficients indexed by blade bitmask:
bit ``j - 1`` of the mask is set when ``e_j`` is a factor, mask 0 is the
scalar ``e_0 = 1``.  Products go through a sign/mask table computed once
per dimension.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionMismatch

MAX_DIM = 6


def _popcount(x: int) -> int:
    return bin(x).count("1")


def blade_product(mask_a: int, mask_b: int) -> tuple[int, int]:
    """Signed basis blade of ``e_A e_B``.

    Every ``e_j`` of B moves left past the factors of A with a larger index,
    then each shared factor squares to -1.
    """
    swaps = 0
    b = mask_b
    while b:
        low = b & -b
        j = low.bit_length() - 1
        swaps += _popcount(mask_a >> (j + 1))
        b ^= low
    swaps += _popcount(mask_a & mask_b)
    return (-1 if swaps & 1 else 1), mask_a ^ mask_b


@lru_cache(maxsize=None)
def blade_table(n: int) -> tuple[np.ndarray, np.ndarray]:
    """``(signs, masks)`` arrays of shape (2**n, 2**n) for ``e_A e_B``."""
    if not 0 <= n <= MAX_DIM:
        raise ValueError(f"algebra dimension must be in [0, {MAX_DIM}], got {n}")
    size = 1 << n
    signs = np.empty((size, size), dtype=np.float64)
    masks = np.empty((size, size), dtype=np.intp)
    for a in range(size):
        for b in range(size):
            signs[a, b], masks[a, b] = blade_product(a, b)
    signs.flags.writeable = False
    masks.flags.writeable = False
    return signs, masks


@lru_cache(maxsize=None)
def grades(n: int) -> np.ndarray:
    g = np.array([_popcount(m) for m in range(1 << n)], dtype=np.intp)
    g.flags.writeable = False
    return g


@lru_cache(maxsize=None)
def conjugation_signs(n: int) -> np.ndarray:
    """Clifford conjugation: reversion composed with grade involution."""
    g = grades(n)
    s = np.where((g * (g + 1) // 2) % 2 == 0, 1.0, -1.0)
    s.flags.writeable = False
    return s


def clifford_mul(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    """Clifford product over the last axis, broadcasting leading axes."""
    signs, masks = blade_table(n)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1]) + (1 << n,)
    out = np.zeros(shape)
    for blade in range(1 << n):
        ca = a[..., blade]
        if not np.any(ca):
            continue
        out[..., masks[blade]] += ca[..., None] * (signs[blade] * b)
    return out


def basis_left(arr: np.ndarray, mask: int, n: int) -> np.ndarray:
    """``e_mask * arr`` for coefficient arrays (last axis = blades)."""
    signs, masks = blade_table(n)
    out = np.empty_like(arr)
    out[..., masks[mask]] = signs[mask] * arr
    return out


def basis_right(arr: np.ndarray, mask: int, n: int) -> np.ndarray:
    """``arr * e_mask`` for coefficient arrays (last axis = blades)."""
    signs, masks = blade_table(n)
    out = np.empty_like(arr)
    out[..., masks[:, mask]] = signs[:, mask] * arr
    return out


class Multivector:
    """Immutable element of R_n."""

    __slots__ = ("n", "coeffs")

    def __init__(self, n: int, coeffs):
        c = np.array(coeffs, dtype=np.float64)
        if c.shape != (1 << n,):
            raise DimensionMismatch(f"expected {1 << n} coefficients for n={n}, got shape {c.shape}")
        c.flags.writeable = False
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "coeffs", c)

    def __setattr__(self, name, value):
        raise AttributeError("Multivector is immutable")

    # constructors

    @classmethod
    def zero(cls, n: int) -> Multivector:
        return cls(n, np.zeros(1 << n))

    @classmethod
    def scalar(cls, n: int, value: float) -> Multivector:
        c = np.zeros(1 << n)
        c[0] = value
        return cls(n, c)

    @classmethod
    def blade(cls, n: int, mask: int, value: float = 1.0) -> Multivector:
        c = np.zeros(1 << n)
        c[mask] = value
        return cls(n, c)

    @classmethod
    def e(cls, n: int, *indices: int) -> Multivector:
        """Product ``e_i e_j ...`` of generators (1-based indices, any order)."""
        out = cls.scalar(n, 1.0)
        for i in indices:
            if not 1 <= i <= n:
                raise ValueError(f"generator index {i} out of range for n={n}")
            out = out * cls.blade(n, 1 << (i - 1))
        return out

    @classmethod
    def vector(cls, n: int, x0: float, vec) -> Multivector:
        """Paravector ``x0 + sum x_j e_j`` as a multivector."""
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (n,):
            raise DimensionMismatch(f"vector part must have {n} entries")
        c = np.zeros(1 << n)
        c[0] = x0
        c[[1 << j for j in range(n)]] = vec
        return cls(n, c)

    # algebra

    def _coerce(self, other):
        if isinstance(other, Multivector):
            if other.n != self.n:
                raise DimensionMismatch(f"algebra dimensions differ: {self.n} vs {other.n}")
            return other.coeffs
        if isinstance(other, (int, float, np.floating, np.integer)):
            c = np.zeros(1 << self.n)
            c[0] = other
            return c
        return NotImplemented

    def __add__(self, other):
        c = self._coerce(other)
        if c is NotImplemented:
            return c
        return Multivector(self.n, self.coeffs + c)

    __radd__ = __add__

    def __sub__(self, other):
        c = self._coerce(other)
        if c is NotImplemented:
            return c
        return Multivector(self.n, self.coeffs - c)

    def __rsub__(self, other):
        c = self._coerce(other)
        if c is NotImplemented:
            return c
        return Multivector(self.n, c - self.coeffs)

    def __neg__(self):
        return Multivector(self.n, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Multivector(self.n, self.coeffs * other)
        if isinstance(other, Multivector):
            self._coerce(other)
            return Multivector(self.n, clifford_mul(self.coeffs, other.coeffs, self.n))
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Multivector(self.n, self.coeffs * other)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Multivector(self.n, self.coeffs / other)
        return NotImplemented

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = Multivector.scalar(self.n, 1.0)
        for _ in range(k):
            out = out * self
        return out

    def conjugate(self) -> Multivector:
        return Multivector(self.n, self.coeffs * conjugation_signs(self.n))

    def inverse(self) -> Multivector:
        """Inverse via ``conj(a) / (a conj(a))``; valid when that product is scalar."""
        cb = self.conjugate()
        nrm = self * cb
        scale = max(float(np.abs(nrm.coeffs).max()), 1e-300)
        if abs(nrm.coeffs[0]) == 0 or np.abs(nrm.coeffs[1:]).max(initial=0.0) > 1e-12 * scale:
            raise ArithmeticError("multivector has no conjugation-based inverse")
        return cb / nrm.coeffs[0]

    # parts

    @property
    def scalar_part(self) -> float:
        return float(self.coeffs[0])

    def grade(self, k: int) -> Multivector:
        return Multivector(self.n, np.where(grades(self.n) == k, self.coeffs, 0.0))

    def vector_part(self) -> np.ndarray:
        return self.coeffs[[1 << j for j in range(self.n)]].copy()

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def is_close(self, other, atol: float = 1e-12) -> bool:
        return bool(np.max(np.abs((self - other).coeffs)) <= atol)

    def __eq__(self, other):
        if not isinstance(other, Multivector):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash((self.n, self.coeffs.tobytes()))

    def __repr__(self):
        terms = []
        for mask, c in enumerate(self.coeffs):
            if c == 0:
                continue
            name = "".join(f"e{j + 1}" for j in range(self.n) if mask >> j & 1) or "1"
            terms.append(f"{c:+.6g}*{name}")
        return f"Multivector(n={self.n}, {' '.join(terms) or '0'})"


@dataclass(frozen=True)
class Paravector:
    """Point ``x0 + x_1 e_1 + ... + x_n e_n`` of R^{n+1}."""

    x0: float
    vec: tuple

    def __init__(self, x0, vec):
        object.__setattr__(self, "x0", float(x0))
        object.__setattr__(self, "vec", tuple(float(v) for v in vec))

    @classmethod
    def from_array(cls, arr) -> Paravector:
        arr = np.asarray(arr, dtype=np.float64)
        return cls(arr[0], arr[1:])

    @classmethod
    def from_slice(cls, u: float, v: float, unit: ImaginaryUnit) -> Paravector:
        """``u + I v`` in the plane of ``unit``."""
        return cls(u, v * np.asarray(unit.direction))

    @property
    def n(self) -> int:
        return len(self.vec)

    def as_array(self) -> np.ndarray:
        return np.array((self.x0,) + self.vec)

    def to_multivector(self) -> Multivector:
        return Multivector.vector(self.n, self.x0, self.vec)

    def conjugate(self) -> Paravector:
        return Paravector(self.x0, [-v for v in self.vec])

    def vector_norm(self) -> float:
        return float(np.linalg.norm(self.vec))

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))

    def unit(self) -> ImaginaryUnit | None:
        """Imaginary unit of the slice through this point, None on the real axis."""
        r = self.vector_norm()
        if r == 0.0:
            return None
        return ImaginaryUnit(np.asarray(self.vec) / r)


def conjugate(x: Paravector) -> Paravector:
    return x.conjugate()


def sphere_of(x: Paravector) -> tuple[float, float]:
    """Center and radius of ``[x] = {Re(x) + I |vec(x)| : I in S}``."""
    return x.x0, x.vector_norm()


@dataclass(frozen=True)
class ImaginaryUnit:
    """A point of the unit sphere S of purely imaginary vectors."""

    direction: tuple

    def __init__(self, direction, normalize: bool = False):
        d = np.asarray(direction, dtype=np.float64)
        nrm = np.linalg.norm(d)
        if normalize:
            d = d / nrm
        elif abs(nrm - 1.0) > 1e-12:
            raise ValueError(f"imaginary unit must have unit norm, got {nrm}")
        object.__setattr__(self, "direction", tuple(float(v) for v in d))

    @classmethod
    def basis(cls, n: int, j: int = 1) -> ImaginaryUnit:
        d = np.zeros(n)
        d[j - 1] = 1.0
        return cls(d)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> ImaginaryUnit:
        d = rng.standard_normal(n)
        return cls(d, normalize=True)

    @property
    def n(self) -> int:
        return len(self.direction)

    def to_multivector(self) -> Multivector:
        return Multivector.vector(self.n, 0.0, self.direction)

    def complex_to_multivector(self, z: complex) -> Multivector:
        """Image of ``z = a + ib`` under ``i -> I``."""
        return Multivector.vector(self.n, z.real, z.imag * np.asarray(self.direction))
