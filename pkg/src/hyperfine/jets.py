"""Truncated multivariate Taylor jets with Clifford-valued coefficients.

A jet stores Taylor coefficients (derivative / factorials) of a function
of ``nvars`` real variables around a point, up to total degree ``degree``.
Monomials are ordered by total degree first, so the basis of degree J-1
is a prefix of the basis of degree J and truncation is slicing.

The Dirac operators act on jets over the ``n + 1`` coordinates
``x_0, ..., x_n`` of R^{n+1}; ``e_i`` multiplies from the left unless
``right=True`` is passed.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import comb
from typing import Callable, Iterable, Sequence

import numpy as np

from .clifford import Multivector, Paravector, basis_left, basis_right, clifford_mul
from .errors import DegreeExhausted, DimensionMismatch, NonInvertibleConstantTerm

MAX_DEGREE = 6


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


class MonomialBasis:
    """Graded monomial basis in ``nvars`` variables up to ``degree``."""

    def __init__(self, nvars: int, degree: int):
        self.nvars = nvars
        self.degree = degree
        exps = [e for d in range(degree + 1) for e in _compositions(d, nvars)]
        self.exps = np.array(exps, dtype=np.intp).reshape(len(exps), nvars)
        self.exps.flags.writeable = False
        self.degs = self.exps.sum(axis=1)
        self.size = len(exps)
        self.index = {e: k for k, e in enumerate(exps)}
        # offsets[d] = first index of total degree d
        self.offsets = np.searchsorted(self.degs, np.arange(degree + 2))

    @property
    def pairs(self):
        """Pairs ``(i, j)`` with ``deg i + deg j <= degree``, grouped by product index.

        Returns ``(i_idx, j_idx, starts)`` so that the product coefficient at
        ``k`` is the sum over the slice ``starts[k]:starts[k+1]``.
        """
        return _pairs(self.nvars, self.degree)

    def shift(self, var: int, times: int = 1) -> np.ndarray:
        """For each monomial of degree <= degree - times, index of it times ``x_var**times``."""
        return _shift(self.nvars, self.degree, var, times)


@lru_cache(maxsize=None)
def basis(nvars: int, degree: int) -> MonomialBasis:
    if degree < 0 or degree > MAX_DEGREE + 2:
        raise ValueError(f"jet degree {degree} out of range")
    return MonomialBasis(nvars, degree)


@lru_cache(maxsize=None)
def _pairs(nvars: int, degree: int):
    b = basis(nvars, degree)
    ii, jj, kk = [], [], []
    for i in range(b.size):
        di = b.degs[i]
        ei = b.exps[i]
        for j in range(b.offsets[degree - di + 1]):
            ii.append(i)
            jj.append(j)
            kk.append(b.index[tuple(ei + b.exps[j])])
    ii, jj, kk = (np.array(a, dtype=np.intp) for a in (ii, jj, kk))
    order = np.argsort(kk, kind="stable")
    ii, jj, kk = ii[order], jj[order], kk[order]
    starts = np.searchsorted(kk, np.arange(b.size))
    for a in (ii, jj, starts):
        a.flags.writeable = False
    return ii, jj, starts


@lru_cache(maxsize=None)
def _shift(nvars: int, degree: int, var: int, times: int) -> np.ndarray:
    b = basis(nvars, degree)
    lower = basis(nvars, degree - times)
    step = np.zeros(nvars, dtype=np.intp)
    step[var] = times
    out = np.array([b.index[tuple(e + step)] for e in lower.exps], dtype=np.intp)
    out.flags.writeable = False
    return out


def _falling(exps: np.ndarray, var: int, times: int) -> np.ndarray:
    """``(e+1)(e+2)...(e+times)`` for the exponent of ``var`` after the shift."""
    e = exps[:, var].astype(np.float64)
    out = np.ones_like(e)
    for t in range(1, times + 1):
        out *= e + t
    return out


class Jet:
    """Immutable truncated Taylor expansion with R_n-valued coefficients."""

    __slots__ = ("nvars", "degree", "n", "coeffs")

    def __init__(self, nvars: int, degree: int, n: int, coeffs):
        c = np.array(coeffs, dtype=np.float64)
        b = basis(nvars, degree)
        if c.shape != (b.size, 1 << n):
            raise DimensionMismatch(f"jet coefficients must have shape {(b.size, 1 << n)}, got {c.shape}")
        c.flags.writeable = False
        object.__setattr__(self, "nvars", nvars)
        object.__setattr__(self, "degree", degree)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "coeffs", c)

    def __setattr__(self, name, value):
        raise AttributeError("Jet is immutable")

    # constructors

    @classmethod
    def zeros(cls, nvars: int, degree: int, n: int) -> Jet:
        return cls(nvars, degree, n, np.zeros((basis(nvars, degree).size, 1 << n)))

    @classmethod
    def constant(cls, value, nvars: int, degree: int, n: int) -> Jet:
        c = np.zeros((basis(nvars, degree).size, 1 << n))
        if isinstance(value, Multivector):
            if value.n != n:
                raise DimensionMismatch("constant has wrong algebra dimension")
            c[0] = value.coeffs
        else:
            c[0, 0] = value
        return cls(nvars, degree, n, c)

    @classmethod
    def variable(cls, var: int, value: float, nvars: int, degree: int, n: int) -> Jet:
        """Scalar jet of the coordinate ``x_var`` at a point where it equals ``value``."""
        c = np.zeros((basis(nvars, degree).size, 1 << n))
        c[0, 0] = value
        if degree >= 1:
            c[1 + var, 0] = 1.0
        return cls(nvars, degree, n, c)

    @classmethod
    def from_polynomial(cls, terms: dict, nvars: int, degree: int, n: int, point=None) -> Jet:
        """Jet at ``point`` (default origin) of ``sum coeff * x**exp``.

        ``terms`` maps exponent tuples to floats or Multivectors.
        """
        point = np.zeros(nvars) if point is None else np.asarray(point, dtype=np.float64)
        xs = [cls.variable(v, point[v], nvars, degree, n) for v in range(nvars)]
        out = cls.zeros(nvars, degree, n)
        for exp, coeff in terms.items():
            term = cls.constant(coeff, nvars, degree, n)
            for v, p in enumerate(exp):
                for _ in range(p):
                    term = term * xs[v]
            out = out + term
        return out

    # introspection

    @property
    def basis(self) -> MonomialBasis:
        return basis(self.nvars, self.degree)

    def coefficient(self, exp: Sequence[int]) -> Multivector:
        return Multivector(self.n, self.coeffs[self.basis.index[tuple(exp)]])

    def value(self) -> Multivector:
        return Multivector(self.n, self.coeffs[0])

    def is_scalar(self) -> bool:
        return not np.any(self.coeffs[:, 1:])

    def truncate(self, degree: int) -> Jet:
        if degree > self.degree:
            raise DegreeExhausted(f"cannot raise jet degree from {self.degree} to {degree}")
        size = basis(self.nvars, degree).size
        return Jet(self.nvars, degree, self.n, self.coeffs[:size])

    def max_abs(self) -> float:
        return float(np.abs(self.coeffs).max(initial=0.0))

    # arithmetic

    def _check(self, other: Jet):
        if (self.nvars, self.degree, self.n) != (other.nvars, other.degree, other.n):
            raise DimensionMismatch(
                f"jet shapes differ: {(self.nvars, self.degree, self.n)} vs {(other.nvars, other.degree, other.n)}"
            )

    def _lift(self, other):
        if isinstance(other, Jet):
            self._check(other)
            return other
        if isinstance(other, (Multivector, int, float, np.floating, np.integer)):
            return Jet.constant(other, self.nvars, self.degree, self.n)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return Jet(self.nvars, self.degree, self.n, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return Jet(self.nvars, self.degree, self.n, self.coeffs - other.coeffs)

    def __rsub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return Jet(self.nvars, self.degree, self.n, other.coeffs - self.coeffs)

    def __neg__(self):
        return Jet(self.nvars, self.degree, self.n, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet(self.nvars, self.degree, self.n, self.coeffs * other)
        if isinstance(other, Multivector):
            return Jet(self.nvars, self.degree, self.n, clifford_mul(self.coeffs, other.coeffs, self.n))
        if isinstance(other, Jet):
            self._check(other)
            return Jet(self.nvars, self.degree, self.n, _jet_product(self, other))
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet(self.nvars, self.degree, self.n, self.coeffs * other)
        if isinstance(other, Multivector):
            return Jet(self.nvars, self.degree, self.n, clifford_mul(other.coeffs, self.coeffs, self.n))
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return Jet(self.nvars, self.degree, self.n, self.coeffs / other)
        return NotImplemented

    def __pow__(self, k: int):
        if k < 0:
            return jet_invert(self) ** (-k)
        out = Jet.constant(1.0, self.nvars, self.degree, self.n)
        for _ in range(k):
            out = out * self
        return out

    def __repr__(self):
        return f"Jet(nvars={self.nvars}, degree={self.degree}, n={self.n}, value={self.value()!r})"


def _jet_product(a: Jet, b: Jet) -> np.ndarray:
    ii, jj, starts = a.basis.pairs
    ca, cb = a.coeffs, b.coeffs
    a_scalar = not np.any(ca[:, 1:])
    b_scalar = not np.any(cb[:, 1:])
    if a_scalar and b_scalar:
        prod = ca[ii, 0] * cb[jj, 0]
        out = np.zeros_like(ca)
        out[:, 0] = np.add.reduceat(prod, starts)
        return out
    if a_scalar:
        prod = ca[ii, 0, None] * cb[jj]
    elif b_scalar:
        prod = ca[ii] * cb[jj, 0, None]
    else:
        prod = clifford_mul(ca[ii], cb[jj], a.n)
    return np.add.reduceat(prod, starts, axis=0)


def jet_arith(a: Jet, b: Jet, op: str) -> Jet:
    """Truncated ``a + b``, ``a - b`` or ``a * b`` (factor order preserved)."""
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        if not isinstance(a, Jet) or not isinstance(b, Jet):
            raise TypeError("jet_arith expects two jets")
        return a * b
    raise ValueError(f"unknown jet operation {op!r}")


def jet_invert(a: Jet) -> Jet:
    """Multiplicative inverse of a jet whose constant term is invertible.

    With ``a = a0 + h`` (``h`` without constant term) the truncated series
    ``sum_k (-a0^{-1} h)^k a0^{-1}`` is exact because ``h`` is nilpotent.
    """
    a0 = a.value()
    total = float(np.sum(a.coeffs**2))
    a0a0 = a0 * a0.conjugate()
    mod2 = a0a0.coeffs[0]
    if abs(mod2) < 1e-13 * total or mod2 == 0.0:
        raise NonInvertibleConstantTerm(f"constant term {a0!r} is not invertible")
    if np.abs(a0a0.coeffs[1:]).max(initial=0.0) > 1e-12 * abs(mod2):
        raise NonInvertibleConstantTerm("constant term has no closed-form inverse (a conj(a) is not scalar)")
    a0inv = a0.conjugate() / mod2
    h = a - a0
    step = -(a0inv * h) if not a.is_scalar() else h * (-a0inv.coeffs[0])
    term = Jet.constant(1.0, a.nvars, a.degree, a.n)
    acc = term
    for _ in range(a.degree):
        term = step * term
        acc = acc + term
    return acc * a0inv


def compose_scalar(a: Jet, derivatives: Sequence[float]) -> Jet:
    """``g(a)`` for a scalar jet ``a`` given ``g^{(k)}(a0)`` for k = 0..degree."""
    if not a.is_scalar():
        raise ValueError("compose_scalar needs a scalar jet")
    h = a - a.value().coeffs[0]
    out = Jet.constant(derivatives[0], a.nvars, a.degree, a.n)
    power = Jet.constant(1.0, a.nvars, a.degree, a.n)
    fact = 1.0
    for k in range(1, a.degree + 1):
        power = power * h
        fact *= k
        out = out + power * (derivatives[k] / fact)
    return out


def paravector_jet(x: Paravector, degree: int) -> Jet:
    """Jet of the identity map ``x -> x_0 + sum x_j e_j`` at ``x``."""
    n = x.n
    nvars = n + 1
    c = np.zeros((basis(nvars, degree).size, 1 << n))
    pt = x.as_array()
    c[0, 0] = pt[0]
    for j in range(1, n + 1):
        c[0, 1 << (j - 1)] = pt[j]
    if degree >= 1:
        c[1, 0] = 1.0
        for j in range(1, n + 1):
            c[1 + j, 1 << (j - 1)] = 1.0
    return Jet(nvars, degree, n, c)


# differential operators


def _require_ambient(f: Jet, order: int):
    if f.nvars != f.n + 1:
        raise DimensionMismatch(f"Dirac operators need n + 1 = {f.n + 1} variables, jet has {f.nvars}")
    if f.degree < order:
        raise DegreeExhausted(f"operator of order {order} applied to a jet of degree {f.degree}")


def partial(f: Jet, var: int, times: int = 1) -> Jet:
    """Partial derivative ``d^times / dx_var^times`` of a jet."""
    if f.degree < times:
        raise DegreeExhausted(f"derivative of order {times} applied to a jet of degree {f.degree}")
    low = basis(f.nvars, f.degree - times)
    idx = f.basis.shift(var, times)
    scale = _falling(low.exps, var, times)
    return Jet(f.nvars, f.degree - times, f.n, f.coeffs[idx] * scale[:, None])


def _dirac(f: Jet, sign: float, right: bool) -> Jet:
    _require_ambient(f, 1)
    mul = basis_right if right else basis_left
    out = partial(f, 0).coeffs.copy()
    for i in range(1, f.n + 1):
        out += sign * mul(partial(f, i).coeffs, 1 << (i - 1), f.n)
    return Jet(f.nvars, f.degree - 1, f.n, out)


def apply_D(f: Jet, right: bool = False) -> Jet:
    """``D f = d_0 f + sum_i e_i d_i f``."""
    return _dirac(f, 1.0, right)


def apply_Dbar(f: Jet, right: bool = False) -> Jet:
    """``Dbar f = d_0 f - sum_i e_i d_i f``."""
    return _dirac(f, -1.0, right)


def apply_Delta(f: Jet, right: bool = False) -> Jet:
    """Laplacian over all ``n + 1`` coordinates."""
    _require_ambient(f, 2)
    out = np.zeros((basis(f.nvars, f.degree - 2).size, 1 << f.n))
    for i in range(f.nvars):
        out += partial(f, i, 2).coeffs
    return Jet(f.nvars, f.degree - 2, f.n, out)


# operator words

LETTERS = ("D", "Dbar", "Delta")
_ALIASES = {
    "D": "D",
    "Dbar": "Dbar",
    "D̄": "Dbar",
    "Db": "Dbar",
    "Delta": "Delta",
    "Δ": "Delta",
    "Lap": "Delta",
}
_ORDER = {"D": 1, "Dbar": 1, "Delta": 2}
_APPLY = {"D": apply_D, "Dbar": apply_Dbar, "Delta": apply_Delta}


@dataclass(frozen=True)
class OperatorWord:
    """Sequence of D / Dbar / Delta letters; the first letter is applied first."""

    letters: tuple = ()

    def __init__(self, letters: Iterable[str] = ()):
        if isinstance(letters, str):
            letters = [letters]
        norm = []
        for letter in letters:
            if letter not in _ALIASES:
                raise ValueError(f"unknown operator letter {letter!r}; expected one of {LETTERS}")
            norm.append(_ALIASES[letter])
        object.__setattr__(self, "letters", tuple(norm))

    @classmethod
    def parse(cls, text: str) -> OperatorWord:
        """Parse ``"D,Dbar,Delta"`` (commas or spaces)."""
        parts = [p for p in text.replace(",", " ").split() if p]
        return cls(parts)

    @property
    def order(self) -> int:
        return sum(_ORDER[x] for x in self.letters)

    def canonical(self) -> tuple[int, int, int]:
        """``(#D, #Dbar, #Delta)`` after rewriting each D Dbar pair as Delta."""
        d = self.letters.count("D")
        db = self.letters.count("Dbar")
        lap = self.letters.count("Delta")
        pairs = min(d, db)
        return d - pairs, db - pairs, lap + pairs

    def __add__(self, other: OperatorWord) -> OperatorWord:
        return OperatorWord(self.letters + other.letters)

    def __len__(self):
        return len(self.letters)

    def __str__(self):
        return "(" + ",".join(self.letters) + ")"


def apply_word(w: OperatorWord | Sequence[str], f: Jet, right: bool = False) -> Jet:
    if not isinstance(w, OperatorWord):
        w = OperatorWord(w)
    if w.order > f.degree:
        raise DegreeExhausted(f"word {w} of order {w.order} needs jet degree >= {w.order}, got {f.degree}")
    for letter in w.letters:
        f = _APPLY[letter](f, right=right)
    return f


# function spaces


@dataclass(frozen=True)
class SpaceTag:
    """A function space defined by ``word f = 0``."""

    name: str
    word: OperatorWord

    @property
    def order(self) -> int:
        return self.word.order

    @classmethod
    def phc(cls, k: int, ell: int) -> SpaceTag:
        """Polyanalytic holomorphic Cliffordian of order (k, ell): ``Delta^k D^ell f = 0``."""
        return cls(f"PHC({k},{ell})", OperatorWord(("Delta",) * k + ("D",) * ell))

    def __str__(self):
        return self.name


AM = SpaceTag("AM", OperatorWord(["D"]))
AH = SpaceTag("AH", OperatorWord(["Delta"]))
AP2 = SpaceTag("AP2", OperatorWord(["D", "D"]))
AP3 = SpaceTag("AP3", OperatorWord(["D", "D", "D"]))
ABH = SpaceTag("ABH", OperatorWord(["Delta", "Delta"]))
AHC1 = SpaceTag("AHC1", OperatorWord(["Delta", "D"]))
ANTI_HC1 = SpaceTag("anti-HC1", OperatorWord(["Delta", "Dbar"]))
APC12 = SpaceTag("APC(1,2)", OperatorWord(["Delta", "D", "D"]))

SPACES = {t.name: t for t in (AM, AH, AP2, AP3, ABH, AHC1, ANTI_HC1, APC12)}


def space_tag(name: str) -> SpaceTag:
    if name in SPACES:
        return SPACES[name]
    if name.startswith("PHC(") and name.endswith(")"):
        k, ell = (int(v) for v in name[4:-1].split(","))
        return SpaceTag.phc(k, ell)
    raise KeyError(f"unknown space tag {name!r}")


@dataclass(frozen=True)
class MembershipReport:
    space: SpaceTag
    max_residual: float
    tolerance: float
    passed: bool
    residuals: tuple


def classify_membership(
    f_eval: Callable[[Paravector, int], Jet],
    space: SpaceTag,
    points: Iterable[Paravector],
    tolerance: float = 1e-9,
    right: bool = False,
) -> MembershipReport:
    """Residual of the defining operator of ``space`` at each sample point.

    ``f_eval(x, degree)`` must return the jet of the function at ``x``.
    """
    from .parallel import parallel_map

    order = space.word.order

    def residual(x):
        jet = f_eval(x, order)
        return apply_word(space.word, jet, right=right).value().norm()

    res = tuple(parallel_map(residual, list(points)))
    worst = max(res, default=0.0)
    return MembershipReport(space, worst, tolerance, bool(worst < tolerance), res)


def random_polynomial_jet(
    rng: np.random.Generator, n: int, poly_degree: int, jet_degree: int, point=None, nterms: int = 8
) -> Jet:
    """Jet of a random polynomial with random multivector coefficients."""
    nvars = n + 1
    terms = {}
    for _ in range(nterms):
        d = int(rng.integers(0, poly_degree + 1))
        cuts = np.sort(rng.integers(0, d + 1, size=nvars - 1))
        exp = tuple(np.diff(np.concatenate(([0], cuts, [d]))).tolist())
        terms[exp] = Multivector(n, rng.standard_normal(1 << n))
    return Jet.from_polynomial(terms, nvars, jet_degree, n, point=point)


def num_coefficients(nvars: int, degree: int) -> int:
    return comb(nvars + degree, degree)

