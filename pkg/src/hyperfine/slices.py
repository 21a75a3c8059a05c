"""Slice functions from holomorphic seeds and the Fueter-Sce pipeline.

A slice function is stored through its component pair ``(alpha, beta)``
on the half plane ``(u, v)``; evaluating it at a paravector ``x`` uses the
chart ``u = x_0``, ``v = |vec x|`` and ``I = vec x / |vec x|``:

    f(x) = alpha(u, v) + I beta(u, v)

Jets of ``f`` in the ambient coordinates are obtained by composing the
Taylor table of ``(alpha, beta)`` with the jets of ``x_0`` and ``|vec x|``.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from math import factorial
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from .clifford import ImaginaryUnit, Multivector, Paravector
from .errors import EvenDimension, OnRealAxis, SeedNotHolomorphic, UnknownChain
from .jets import (
    ABH,
    AH,
    AHC1,
    AM,
    ANTI_HC1,
    AP2,
    AP3,
    APC12,
    MAX_DEGREE,
    Jet,
    OperatorWord,
    SpaceTag,
    apply_word,
    compose_scalar,
)

REAL_AXIS_TUBE = 0.05
CR_TOLERANCE = 1e-12


# holomorphic seeds


class HolomorphicSeed:
    """Holomorphic ``f(z) = u(x, y) + i v(x, y)`` with analytic derivatives.

    Subclasses implement ``derivatives(z, order)`` returning
    ``f(z), f'(z), ..., f^(order)(z)``.  Partial derivatives of ``u`` and
    ``v`` follow from ``d_x^a d_y^b f = i^b f^(a+b)``.
    """

    id: str = "seed"
    poles: tuple = ()
    # f(conj z) = conj f(z): u even and v odd in y
    symmetric: bool = True

    def derivatives(self, z: complex, order: int) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, z: complex) -> complex:
        return complex(self.derivatives(complex(z), 0)[0])

    def uv_partials(self, x: float, y: float, order: int) -> tuple[np.ndarray, np.ndarray]:
        """``U[a, b] = d_x^a d_y^b u`` and likewise ``V`` for ``a + b <= order``."""
        d = self.derivatives(complex(x, y), order)
        U = np.zeros((order + 1, order + 1))
        V = np.zeros((order + 1, order + 1))
        for a in range(order + 1):
            for b in range(order + 1 - a):
                w = (1j**b) * d[a + b]
                U[a, b] = w.real
                V[a, b] = w.imag
        return U, V

    def cr_residual(self, x: float, y: float, order: int = 1) -> float:
        U, V = self.uv_partials(x, y, order)
        return _cr_table_residual(U, V)

    def __repr__(self):
        return f"{type(self).__name__}({self.id!r})"


def _cr_table_residual(U: np.ndarray, V: np.ndarray) -> float:
    """Cauchy-Riemann defect of partial-derivative tables, relative to their size."""
    order = U.shape[0] - 1
    worst = 0.0
    for a in range(order):
        for b in range(order - a):
            r1 = np.abs(U[a + 1, b] - V[a, b + 1])
            r2 = np.abs(U[a, b + 1] + V[a + 1, b])
            worst = max(worst, float(np.max(r1)), float(np.max(r2)))
    scale = max(1.0, float(np.abs(U).max()), float(np.abs(V).max()))
    return worst / scale


class Monomial(HolomorphicSeed):
    def __init__(self, k: int):
        if k < 0:
            raise ValueError("monomial exponent must be non-negative")
        self.k = k
        self.id = f"z^{k}"

    def derivatives(self, z, order):
        out = np.zeros(order + 1, dtype=complex)
        for j in range(min(order, self.k) + 1):
            out[j] = factorial(self.k) / factorial(self.k - j) * z ** (self.k - j)
        return out


class Polynomial(HolomorphicSeed):
    """``sum c_j z^j``; real coefficients give an intrinsic slice function."""

    def __init__(self, coeffs: Sequence[complex]):
        self.coeffs = tuple(complex(c) for c in coeffs)
        self.symmetric = all(c.imag == 0 for c in self.coeffs)
        self.id = "poly:" + ",".join(_fmt_num(c.real) if c.imag == 0 else repr(c) for c in self.coeffs)

    def derivatives(self, z, order):
        p = np.polynomial.Polynomial(self.coeffs)
        out = np.zeros(order + 1, dtype=complex)
        for j in range(order + 1):
            out[j] = p(z)
            p = p.deriv()
        return out

    def __mul__(self, other: Polynomial) -> Polynomial:
        prod = np.polynomial.polynomial.polymul(self.coeffs, other.coeffs)
        return Polynomial(prod)


class Exp(HolomorphicSeed):
    id = "exp"

    def derivatives(self, z, order):
        return np.full(order + 1, cmath.exp(z), dtype=complex)


class Reciprocal(HolomorphicSeed):
    """``1 / (z - a)``."""

    def __init__(self, a: complex):
        self.a = complex(a)
        self.poles = (self.a,)
        self.symmetric = self.a.imag == 0
        self.id = f"inv:{_fmt_num(self.a.real)},{_fmt_num(self.a.imag)}"

    def derivatives(self, z, order):
        w = 1.0 / (z - self.a)
        out = np.empty(order + 1, dtype=complex)
        for j in range(order + 1):
            out[j] = (-1) ** j * factorial(j) * w ** (j + 1)
        return out


class Rational(HolomorphicSeed):
    """``sum c / (z - a)^p`` over ``terms = [(c, a, p), ...]``."""

    def __init__(self, terms):
        self.terms = tuple((complex(c), complex(a), int(p)) for c, a, p in terms)
        self.poles = tuple(sorted({a for _, a, _ in self.terms}, key=lambda w: (w.real, w.imag)))
        self.symmetric = _closed_under_conjugation(self.terms)
        self.id = "rational:" + ";".join(f"{c!r},{a!r},{p}" for c, a, p in self.terms)

    def derivatives(self, z, order):
        out = np.zeros(order + 1, dtype=complex)
        for c, a, p in self.terms:
            w = 1.0 / (z - a)
            rising = 1.0
            for j in range(order + 1):
                out[j] += c * (-1) ** j * rising * w ** (p + j)
                rising *= p + j
        return out


def _closed_under_conjugation(terms) -> bool:
    bag = sorted((c.real, c.imag, a.real, a.imag, p) for c, a, p in terms)
    mirror = sorted((c.real, -c.imag, a.real, -a.imag, p) for c, a, p in terms)
    return np.allclose(np.array(bag, dtype=float), np.array(mirror, dtype=float), atol=0.0)


class UVSeed(HolomorphicSeed):
    """User-supplied pair: ``partials(x, y, order) -> (U, V)`` derivative tables."""

    def __init__(self, partials: Callable, id: str = "uv", poles=(), symmetric: bool = True):
        self._partials = partials
        self.id = id
        self.poles = tuple(complex(p) for p in poles)
        self.symmetric = symmetric

    def uv_partials(self, x, y, order):
        U, V = self._partials(x, y, order)
        return np.asarray(U, dtype=float), np.asarray(V, dtype=float)

    def derivatives(self, z, order):
        U, V = self.uv_partials(z.real, z.imag, order)
        # f^(k) = d_x^k f
        return U[:, 0] + 1j * V[:, 0]


def _fmt_num(x: float) -> str:
    r = repr(float(x))
    return r[:-2] if r.endswith(".0") else r


def seed_from_id(text: str) -> HolomorphicSeed:
    """Parse a catalog id: ``z``, ``z^k``, ``exp``, ``inv:a_re,a_im``, ``poly:c0,c1,...``."""
    t = text.strip().replace(" ", "")
    if t == "z":
        return Monomial(1)
    if t.startswith("z^"):
        return Monomial(int(t[2:]))
    if t == "exp":
        return Exp()
    if t.startswith("inv:"):
        re_, im_ = (float(v) for v in t[4:].split(","))
        return Reciprocal(complex(re_, im_))
    if t.startswith("poly:"):
        return Polynomial([float(v) for v in t[5:].split(",")])
    raise ValueError(f"unknown seed id {text!r}")


# domains


@dataclass(frozen=True)
class AxialBox:
    """``{u + I v : u in [u_min, u_max], v in [v_min, v_max], I in S}``."""

    u_min: float = -1.0
    u_max: float = 1.0
    v_min: float = 0.5
    v_max: float = 1.5

    def __post_init__(self):
        if not (self.u_max > self.u_min and self.v_max > self.v_min > 0):
            raise ValueError(f"degenerate axial box {self}")

    def distance_to(self, z: complex) -> float:
        """Distance in the (u, v) half plane from the box to ``(Re z, |Im z|)``."""
        u, v = z.real, abs(z.imag)
        du = max(self.u_min - u, 0.0, u - self.u_max)
        dv = max(self.v_min - v, 0.0, v - self.v_max)
        return float(np.hypot(du, dv))

    def sample(self, n: int, count: int, rng: np.random.Generator) -> list[Paravector]:
        """Quasi-random ``(u, v)`` (Halton) with random imaginary units."""
        halton = qmc.Halton(d=2, scramble=False)
        halton.fast_forward(1)
        uv = qmc.scale(halton.random(count), [self.u_min, self.v_min], [self.u_max, self.v_max])
        return [Paravector.from_slice(u, v, ImaginaryUnit.random(n, rng)) for u, v in uv]


_FALLBACK_BOXES = (
    AxialBox(),
    AxialBox(-1.0, 1.0, 2.0, 3.0),
    AxialBox(-3.5, -2.0, 0.5, 1.5),
    AxialBox(2.0, 3.5, 0.5, 1.5),
)


def default_domain(seed: HolomorphicSeed | None, margin: float = 0.3) -> AxialBox:
    poles = seed.poles if seed is not None else ()
    for box in _FALLBACK_BOXES:
        if all(box.distance_to(p) > margin for p in poles):
            return box
    raise ValueError(f"no default domain avoids the poles of {seed!r}; pass an explicit AxialBox")


# slice functions


@dataclass(frozen=True)
class SliceFunction:
    """``f(u + I v) = alpha(u, v) + I beta(u, v)`` with R_n-valued components.

    ``partials(u, v, order)`` returns two arrays of shape
    ``(order + 1, order + 1, 2**n)`` holding ``d_u^a d_v^b`` of alpha and
    beta for ``a + b <= order``.  ``right=True`` evaluates
    ``alpha + beta I`` instead.
    """

    n: int
    partials: Callable[[float, float, int], tuple[np.ndarray, np.ndarray]]
    name: str = "f"
    domain: AxialBox = field(default_factory=AxialBox)
    seed: HolomorphicSeed | None = None
    right: bool = False

    def components(self, u: float, v: float) -> tuple[Multivector, Multivector]:
        A, B = self.partials(u, v, 0)
        return Multivector(self.n, A[0, 0]), Multivector(self.n, B[0, 0])

    def in_plane(self, u: float, v: float, unit: ImaginaryUnit) -> Multivector:
        """Value at ``u + I v``; negative ``v`` is allowed."""
        a, b = self.components(u, v)
        i = unit.to_multivector()
        return a + (b * i if self.right else i * b)

    def __call__(self, x: Paravector) -> Multivector:
        return eval_jet(self, x, 0).value()

    def cr_residual(self, u: float, v: float) -> float:
        A, B = self.partials(u, v, 1)
        return _cr_table_residual(A, B)

    def eo_residual(self, u: float, v: float) -> float:
        """Defect of ``alpha(u,-v) = alpha(u,v)``, ``beta(u,-v) = -beta(u,v)``."""
        A1, B1 = self.partials(u, v, 0)
        A2, B2 = self.partials(u, -v, 0)
        return float(max(np.abs(A1[0, 0] - A2[0, 0]).max(), np.abs(B1[0, 0] + B2[0, 0]).max()))

    def scaled(self, c: Multivector, name: str | None = None) -> SliceFunction:
        """Slice function with components ``c alpha`` and ``c beta``."""
        from .clifford import clifford_mul

        def partials(u, v, order):
            A, B = self.partials(u, v, order)
            return clifford_mul(c.coeffs, A, self.n), clifford_mul(c.coeffs, B, self.n)

        return SliceFunction(self.n, partials, name or f"{c!r}*{self.name}", self.domain, None, self.right)


def tfs1(seed: HolomorphicSeed | str, n: int, domain: AxialBox | None = None, check_points: int = 8) -> SliceFunction:
    """Intrinsic slice function ``alpha = u``, ``beta = v`` induced by a holomorphic seed.

    The seed is read on the upper half plane; values at ``v < 0`` come from
    the even/odd extension, so non-symmetric seeds are allowed.
    """
    if isinstance(seed, str):
        seed = seed_from_id(seed)
    if domain is None:
        domain = default_domain(seed)
    rng = np.random.default_rng(12345)
    us = rng.uniform(domain.u_min, domain.u_max, check_points)
    vs = rng.uniform(domain.v_min, domain.v_max, check_points)
    worst = max(seed.cr_residual(u, v, order=2) for u, v in zip(us, vs))
    if worst > CR_TOLERANCE:
        raise SeedNotHolomorphic(f"seed {seed.id} violates Cauchy-Riemann (residual {worst:.3g})")

    size = 1 << n

    def partials(u, v, order):
        sign = 1.0
        if v < 0:
            v, sign = -v, -1.0
        U, V = seed.uv_partials(u, v, order)
        if sign < 0:
            flip = (-1.0) ** np.arange(order + 1)
            U = U * flip[None, :]
            V = -V * flip[None, :]
        A = np.zeros((order + 1, order + 1, size))
        B = np.zeros((order + 1, order + 1, size))
        A[:, :, 0] = U
        B[:, :, 0] = V
        return A, B

    return SliceFunction(n, partials, name=seed.id, domain=domain, seed=seed)


def _power_derivatives(t0: float, p: float, order: int) -> list[float]:
    out = []
    coef = 1.0
    for k in range(order + 1):
        out.append(coef * t0 ** (p - k))
        coef *= p - k
    return out


def eval_jet(f: SliceFunction, x: Paravector, degree: int) -> Jet:
    """Jet at ``x`` of ``alpha(x_0, |vec x|) + (vec x / |vec x|) beta(x_0, |vec x|)``."""
    n = f.n
    if x.n != n:
        raise ValueError(f"point has {x.n} imaginary components, function expects {n}")
    if degree > MAX_DEGREE:
        raise ValueError(f"jet degree {degree} exceeds the maximum {MAX_DEGREE}")
    nvars = n + 1
    pt = x.as_array()
    r = x.vector_norm()
    if r < 1e-8:
        if degree > 0:
            raise OnRealAxis(f"|vec x| = {r:.3g}: the (u, v) chart is singular on the real axis")
        A, _ = f.partials(pt[0], 0.0, 0)
        return Jet.constant(Multivector(n, A[0, 0]), nvars, 0, n)

    A, B = f.partials(pt[0], r, degree)
    xs = [Jet.variable(j, pt[j], nvars, degree, n) for j in range(nvars)]
    r2 = xs[1] * xs[1]
    for j in range(2, nvars):
        r2 = r2 + xs[j] * xs[j]
    rr = compose_scalar(r2, _power_derivatives(r * r, 0.5, degree))
    rinv = compose_scalar(r2, _power_derivatives(r * r, -0.5, degree))
    du = xs[0] - pt[0]
    dv = rr - r
    dvpow = [Jet.constant(1.0, nvars, degree, n)]
    for _ in range(degree):
        dvpow.append(dvpow[-1] * dv)
    dv_cols = np.stack([p.coeffs[:, 0] for p in dvpow])  # (degree+1, M)
    inv_fact = np.array([1.0 / factorial(k) for k in range(degree + 1)])

    def compose(T):
        acc = None
        for a in range(degree, -1, -1):
            nb = degree - a + 1
            c = np.einsum("bm,bk->mk", dv_cols[:nb] * inv_fact[:nb, None], T[a, :nb]) * inv_fact[a]
            term = Jet(nvars, degree, n, c)
            acc = term if acc is None else term + du * acc
        return acc

    alpha = compose(A)
    beta = compose(B)
    vec = Jet(nvars, degree, n, _vector_coeffs(x, degree))
    unit = vec * rinv
    return alpha + (beta * unit if f.right else unit * beta)


def _vector_coeffs(x: Paravector, degree: int) -> np.ndarray:
    from .jets import paravector_jet

    c = paravector_jet(x, degree).coeffs.copy()
    c[:, 0] = 0.0
    return c


# Fueter-Sce pipeline


@dataclass(frozen=True)
class Sampler:
    """Point-wise jets of ``word`` applied to a slice function."""

    f: SliceFunction
    word: OperatorWord = OperatorWord()

    def __call__(self, x: Paravector, degree: int) -> Jet:
        jet = eval_jet(self.f, x, degree + self.word.order)
        return apply_word(self.word, jet, right=self.f.right)

    def value(self, x: Paravector) -> Multivector:
        return self(x, 0).value()

    def then(self, word: OperatorWord) -> Sampler:
        return Sampler(self.f, self.word + word)


def sce_exponent(n: int) -> int:
    if n % 2 == 0:
        raise EvenDimension(f"n = {n} is even: the Fueter-Sce map involves fractional Laplacians")
    return (n - 1) // 2


def tfs2(f: SliceFunction) -> Sampler:
    """Sampler of ``Delta_{n+1}^{(n-1)/2} f``."""
    h = sce_exponent(f.n)
    return Sampler(f, OperatorWord(["Delta"] * h))


@dataclass(frozen=True)
class FineStructure:
    name: str
    n: int
    steps: tuple  # OperatorWord per arrow
    spaces: tuple  # SpaceTag reached after each arrow

    @property
    def word(self) -> OperatorWord:
        out = OperatorWord()
        for s in self.steps:
            out = out + s
        return out

    def boundaries(self) -> list[int]:
        out, acc = [], 0
        for s in self.steps:
            acc += len(s)
            out.append(acc)
        return out


def _fs(name, n, steps, spaces):
    return FineStructure(name, n, tuple(OperatorWord(OperatorWord.parse(s).letters) for s in steps), tuple(spaces))


# Space labels follow the published diagrams verbatim.
STRUCTURES = (
    _fs("quaternionic-harmonic", 3, ["D", "Dbar"], [AH, AM]),
    _fs("quaternionic-polyanalytic", 3, ["Dbar", "D"], [AP2, AM]),
    _fs("dirac-D-Dbar-Dbar-D", 5, ["D", "Dbar", "Dbar", "D"], [ABH, AHC1, AP2, AM]),
    _fs("dirac-D-D-Dbar-Dbar", 5, ["D", "D", "Dbar", "Dbar"], [ABH, ANTI_HC1, AH, AM]),
    _fs("dirac-Dbar-D-Dbar-D", 5, ["Dbar", "D", "Dbar", "D"], [APC12, AHC1, AP2, AM]),
    _fs("dirac-Dbar-D-D-Dbar", 5, ["Dbar", "D", "D", "Dbar"], [APC12, AHC1, AH, AM]),
    _fs("dirac-Dbar-Dbar-D-D", 5, ["Dbar", "Dbar", "D", "D"], [APC12, AP3, AH, AM]),
    _fs("laplace", 5, ["Delta", "Delta"], [AHC1, AM]),
    _fs("polyanalytic", 5, ["Dbar Dbar", "D", "D"], [AP3, AP2, AM]),
    _fs("harmonic", 5, ["D", "Delta", "Dbar"], [ABH, AH, AM]),
)
STRUCTURES_BY_NAME = {s.name: s for s in STRUCTURES}


def structures_for(n: int) -> list[FineStructure]:
    return [s for s in STRUCTURES if s.n == n]


def _match(word: OperatorWord, n: int, structure: str | None):
    candidates = [STRUCTURES_BY_NAME[structure]] if structure else structures_for(n)
    for s in candidates:
        if s.n != n:
            continue
        full = s.word.letters
        if full[: len(word)] != word.letters:
            continue
        bounds = s.boundaries()
        if len(word) in bounds:
            return s, s.spaces[bounds.index(len(word))]
    return None


def chain(f: SliceFunction, word, structure: str | None = None) -> tuple[Sampler, SpaceTag]:
    """Intermediate function after ``word`` and the space its diagram assigns.

    ``word`` must end on an arrow of a registered fine structure for ``f.n``.
    Where two structures share a prefix with different labels, the first
    registered one wins unless ``structure`` names the other.
    """
    if not isinstance(word, OperatorWord):
        word = OperatorWord(word)
    if structure is not None and structure not in STRUCTURES_BY_NAME:
        raise UnknownChain(f"no fine structure named {structure!r}")
    hit = _match(word, f.n, structure)
    if hit is None:
        raise UnknownChain(f"word {word} is not a registered fine-structure prefix for n = {f.n}")
    return Sampler(f, word), hit[1]


def check_intrinsic(f: SliceFunction, samples: Sequence[Paravector], tol: float = 1e-12) -> bool:
    for x in samples:
        A, B = f.partials(x.x0, x.vector_norm(), 0)
        if np.abs(A[0, 0, 1:]).max(initial=0.0) >= tol or np.abs(B[0, 0, 1:]).max(initial=0.0) >= tol:
            return False
    return True
