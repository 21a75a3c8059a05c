"""Commuting paravector operators on R^m and their functional calculi.

An operator ``T = T_0 + e_1 T_1 + ... + e_n T_n`` is stored as ``n + 1``
real ``m x m`` matrices.  Operator-valued multivectors (elements of
``R_n (x) R^{m x m}``) are arrays of shape ``(2**n, m, m)``.

The calculi integrate ``kernel(s, T) ds_I f(s)`` over circles in a slice
plane ``C_I`` with the trapezoidal rule.  Resolvents live in
``span{1, I} (x) R^{m x m}`` and are handled as complex matrices with
``i -> I``.
"""
from __future__ import annotations

import hashlib
import threading
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .clifford import ImaginaryUnit, Multivector, Paravector, blade_table
from .errors import (
    ContourTouchesSpectrum,
    DimensionMismatch,
    JointDiagonalizationFailed,
    NonCommuting,
    NotSliceHyperholomorphic,
    SingularAtS,
)
from .jets import Jet, OperatorWord, apply_word, paravector_jet
from .kernels import closed_form_entry, closed_form_gate
from .parallel import pairwise_sum
from .slices import Exp, HolomorphicSeed, Monomial, Polynomial, SliceFunction, seed_from_id, tfs1

COMMUTATION_TOLERANCE = 1e-10
LEAKAGE_TOLERANCE = 1e-8
CONDITION_LIMIT = 1e12


class OperatorTuple:
    """Commuting real matrices ``(T_0, ..., T_n)``."""

    def __init__(self, matrices, check: bool = True):
        T = np.array(matrices, dtype=np.float64)
        if T.ndim != 3 or T.shape[1] != T.shape[2]:
            raise DimensionMismatch(f"expected n + 1 square matrices, got shape {T.shape}")
        if T.shape[0] < 2:
            raise DimensionMismatch("need at least T_0 and T_1")
        T.flags.writeable = False
        self.T = T
        if check:
            defect = self.commutation_defect()
            if defect >= COMMUTATION_TOLERANCE:
                raise NonCommuting(f"components do not commute (relative defect {defect:.3g})")

    @property
    def n(self) -> int:
        return self.T.shape[0] - 1

    @property
    def m(self) -> int:
        return self.T.shape[1]

    @classmethod
    def from_joint_eigenvalues(cls, eigs, basis=None) -> OperatorTuple:
        """``T_j = P diag(eigs[:, j]) P^{-1}`` for real joint eigenvalues ``eigs`` (m, n+1)."""
        eigs = np.asarray(eigs, dtype=np.float64)
        m = eigs.shape[0]
        P = np.eye(m) if basis is None else np.asarray(basis, dtype=np.float64)
        Pinv = np.linalg.inv(P)
        return cls([P @ np.diag(eigs[:, j]) @ Pinv for j in range(eigs.shape[1])])

    def key(self) -> bytes:
        return hashlib.sha1(self.T.tobytes()).digest()

    def commutation_defect(self) -> float:
        worst = 0.0
        norms = [np.linalg.norm(t, 2) for t in self.T]
        for i in range(self.n + 1):
            for j in range(i + 1, self.n + 1):
                if norms[i] == 0 or norms[j] == 0:
                    continue
                c = self.T[i] @ self.T[j] - self.T[j] @ self.T[i]
                worst = max(worst, np.linalg.norm(c, 2) / (norms[i] * norms[j]))
        return float(worst)

    def norm(self) -> float:
        """``max_j ||T_j||_2``."""
        return float(max(np.linalg.norm(t, 2) for t in self.T))

    def as_multivector(self) -> OperatorMultivector:
        c = np.zeros((1 << self.n, self.m, self.m))
        c[0] = self.T[0]
        for j in range(1, self.n + 1):
            c[1 << (j - 1)] = self.T[j]
        return OperatorMultivector(self.n, c)

    def modulus_squared(self) -> np.ndarray:
        """``T conj(T) = T_0^2 + sum_j T_j^2`` (grade zero under commutation)."""
        return sum(t @ t for t in self.T)

    def __repr__(self):
        return f"OperatorTuple(n={self.n}, m={self.m})"


class OperatorMultivector:
    """Element of ``R_n (x) R^{m x m}`` stored blade-wise."""

    __slots__ = ("n", "m", "coeffs")

    def __init__(self, n: int, coeffs):
        c = np.array(coeffs, dtype=np.float64)
        if c.ndim != 3 or c.shape[0] != 1 << n or c.shape[1] != c.shape[2]:
            raise DimensionMismatch(f"expected shape (2**{n}, m, m), got {c.shape}")
        c.flags.writeable = False
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "m", c.shape[1])
        object.__setattr__(self, "coeffs", c)

    def __setattr__(self, name, value):
        raise AttributeError("OperatorMultivector is immutable")

    @classmethod
    def identity(cls, n: int, m: int) -> OperatorMultivector:
        c = np.zeros((1 << n, m, m))
        c[0] = np.eye(m)
        return cls(n, c)

    @classmethod
    def from_multivector(cls, a: Multivector, m: int) -> OperatorMultivector:
        return cls(a.n, a.coeffs[:, None, None] * np.eye(m))

    @classmethod
    def from_complex(cls, Z: np.ndarray, unit: ImaginaryUnit) -> OperatorMultivector:
        """``Re Z + I Im Z``."""
        n = unit.n
        c = np.zeros((1 << n,) + Z.shape)
        c[0] = Z.real
        for j, d in enumerate(unit.direction):
            c[1 << j] = d * Z.imag
        return cls(n, c)

    def blade(self, mask: int) -> np.ndarray:
        return self.coeffs[mask]

    def _same(self, other: OperatorMultivector):
        if other.n != self.n or other.m != self.m:
            raise DimensionMismatch("operator multivectors have different shapes")

    def __add__(self, other):
        if isinstance(other, OperatorMultivector):
            self._same(other)
            return OperatorMultivector(self.n, self.coeffs + other.coeffs)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, OperatorMultivector):
            self._same(other)
            return OperatorMultivector(self.n, self.coeffs - other.coeffs)
        return NotImplemented

    def __neg__(self):
        return OperatorMultivector(self.n, -self.coeffs)

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return OperatorMultivector(self.n, self.coeffs * other)
        signs, masks = blade_table(self.n)
        out = np.zeros_like(self.coeffs)
        if isinstance(other, OperatorMultivector):
            self._same(other)
            live_b = [b for b in range(1 << self.n) if np.any(other.coeffs[b])]
            for a in range(1 << self.n):
                ca = self.coeffs[a]
                if not np.any(ca):
                    continue
                for b in live_b:
                    out[masks[a, b]] += signs[a, b] * (ca @ other.coeffs[b])
            return OperatorMultivector(self.n, out)
        if isinstance(other, Multivector):
            if other.n != self.n:
                raise DimensionMismatch("algebra dimensions differ")
            live_b = np.nonzero(other.coeffs)[0]
            for a in range(1 << self.n):
                ca = self.coeffs[a]
                if not np.any(ca):
                    continue
                for b in live_b:
                    out[masks[a, b]] += (signs[a, b] * other.coeffs[b]) * ca
            return OperatorMultivector(self.n, out)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return OperatorMultivector(self.n, self.coeffs * other)
        if isinstance(other, Multivector):
            return OperatorMultivector.from_multivector(other, self.m) * self
        return NotImplemented

    def __pow__(self, k: int):
        out = OperatorMultivector.identity(self.n, self.m)
        for _ in range(k):
            out = out * self
        return out

    def scalar_part(self) -> np.ndarray:
        return self.coeffs[0]

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def __repr__(self):
        live = [b for b in range(1 << self.n) if np.any(self.coeffs[b])]
        return f"OperatorMultivector(n={self.n}, m={self.m}, blades={live})"


def conjugate_tuple(T: OperatorTuple) -> OperatorMultivector:
    """``conj(T) = T_0 - T_1 e_1 - ... - T_n e_n``."""
    c = np.zeros((1 << T.n, T.m, T.m))
    c[0] = T.T[0]
    for j in range(1, T.n + 1):
        c[1 << (j - 1)] = -T.T[j]
    return OperatorMultivector(T.n, c)


def q_op(s: Paravector, T: OperatorTuple) -> OperatorMultivector:
    """``s^2 I - s (T + conj T) + T conj T``, assembled literally."""
    sm = s.to_multivector()
    Tm = T.as_multivector()
    Tb = conjugate_tuple(T)
    return OperatorMultivector.from_multivector(sm * sm, T.m) - sm * (Tm + Tb) + Tm * Tb


def _slice_coordinates(s: Paravector) -> tuple[float, float, ImaginaryUnit]:
    unit = s.unit()
    if unit is None:
        return s.x0, 0.0, ImaginaryUnit.basis(s.n, 1)
    return s.x0, s.vector_norm(), unit


def q_blocks(u: float, v: float, T: OperatorTuple) -> tuple[np.ndarray, np.ndarray]:
    """Real matrices ``A, B`` with ``Q_{c,s}(T) = A + I B`` for ``s = u + I v``."""
    eye = np.eye(T.m)
    A = (u * u - v * v) * eye - 2.0 * u * T.T[0] + T.modulus_squared()
    B = 2.0 * v * (u * eye - T.T[0])
    return A, B


_resolvent_lock = threading.Lock()
_resolvent_cache: dict = {}
_CACHE_LIMIT = 1 << 16


def q_inverse_complex(u: float, v: float, T: OperatorTuple) -> np.ndarray:
    """``Q_{c,s}(T)^{-1}`` as a complex matrix ``C + i E`` (``i`` standing for ``I``).

    Solves the real block system ``[[A, -B], [B, A]] [C; E] = [Id; 0]``.
    Results are cached per ``(T, u, v)``.
    """
    key = (T.key(), float(u), float(v))
    with _resolvent_lock:
        hit = _resolvent_cache.get(key)
    if hit is not None:
        return hit
    A, B = q_blocks(u, v, T)
    m = T.m
    block = np.block([[A, -B], [B, A]])
    cond = np.linalg.cond(block)
    if not cond < CONDITION_LIMIT:
        raise SingularAtS(f"Q_c,s(T) is numerically singular at s = {u} + I {v} (cond {cond:.3g})")
    rhs = np.vstack([np.eye(m), np.zeros((m, m))])
    sol = np.linalg.solve(block, rhs)
    Z = sol[:m] + 1j * sol[m:]
    Z.flags.writeable = False
    with _resolvent_lock:
        if len(_resolvent_cache) >= _CACHE_LIMIT:
            _resolvent_cache.clear()
        _resolvent_cache.setdefault(key, Z)
    return Z


def q_op_inverse(s: Paravector, T: OperatorTuple) -> OperatorMultivector:
    u, v, unit = _slice_coordinates(s)
    return OperatorMultivector.from_complex(q_inverse_complex(u, v, T), unit)


# S-spectrum


@dataclass(frozen=True)
class SpectrumReport:
    spheres: tuple  # (center, radius, multiplicity)
    residual: float
    scale: float
    joint_eigenvalues: np.ndarray = field(repr=False, compare=False)

    def points(self) -> list[complex]:
        """Intersections ``center + i radius`` with the upper slice half plane."""
        return [complex(c, r) for c, r, _ in self.spheres]


def sigma_min(u: float, v: float, T: OperatorTuple) -> float:
    A, B = q_blocks(u, v, T)
    return float(np.linalg.svd(A + 1j * B, compute_uv=False).min())


def _clean(x: float, scale: float) -> float:
    return 0.0 if abs(x) < 1e-14 * scale else float(x)


def s_spectrum(T: OperatorTuple, rng_seed: int = 0, probes: int = 16) -> SpectrumReport:
    """Spheres of the S-spectrum from joint eigenvalues of the components.

    A random real combination of the components is brought to complex
    Schur form; its unitary triangularizes every component, whose
    diagonals are the joint eigenvalues ``(t_0, ..., t_n)``.  Each tuple
    contributes the roots of ``z^2 - 2 t_0 z + sum_j t_j^2``, i.e. the
    sphere ``(Re z, |Im z|)``.
    """
    defect = T.commutation_defect()
    if defect >= COMMUTATION_TOLERANCE:
        raise NonCommuting(f"components do not commute (relative defect {defect:.3g})")
    rng = np.random.default_rng(rng_seed)
    weights = rng.standard_normal(T.n + 1)
    M = np.tensordot(weights, T.T, axes=1)
    _, V = np.linalg.eig(M)
    if np.linalg.cond(V) > 1e10:
        raise JointDiagonalizationFailed("random combination of the components is defective")
    _, Z = scipy.linalg.schur(M.astype(complex), output="complex")
    scale = max(T.norm(), 1e-300)
    eigs = np.empty((T.m, T.n + 1), dtype=complex)
    for j, t in enumerate(T.T):
        tri = Z.conj().T @ t @ Z
        leak = np.linalg.norm(np.tril(tri, -1)) / scale
        if leak > LEAKAGE_TOLERANCE:
            raise JointDiagonalizationFailed(f"component {j} is not triangularized (leakage {leak:.3g})")
        eigs[:, j] = np.diag(tri)

    found: list[list] = []
    tol = 1e-7 * max(scale, 1.0)
    for tup in eigs:
        root = np.sqrt(complex(np.sum(tup[1:] ** 2)))
        spheres = set()
        for z in (tup[0] + 1j * root, tup[0] - 1j * root):
            spheres.add((round(z.real / tol), round(abs(z.imag) / tol), z.real, abs(z.imag)))
        distinct = []
        for _, _, c, r in sorted(spheres):
            if not any(abs(c - c2) <= tol and abs(r - r2) <= tol for c2, r2 in distinct):
                distinct.append((c, r))
        for c, r in distinct:
            for entry in found:
                if abs(entry[0] - c) <= tol and abs(entry[1] - r) <= tol:
                    entry[2] += 1
                    break
            else:
                found.append([c, r, 1])
    found.sort(key=lambda e: (e[0], e[1]))
    spheres = tuple((_clean(c, scale), _clean(r, scale), k) for c, r, k in found)

    sq = max(scale * scale, 1.0)
    residual = 0.0
    for c, r, _ in spheres:
        for _ in range(probes):
            unit = ImaginaryUnit.random(T.n, rng)
            s = Paravector.from_slice(c, r, unit)
            u, v, _u = _slice_coordinates(s)
            residual = max(residual, sigma_min(u, v, T) / sq)
    return SpectrumReport(spheres, residual, scale, eigs)


def distance_to_spectrum(u: float, v: float, spectrum: SpectrumReport) -> float:
    return min((float(np.hypot(u - c, abs(v) - r)) for c, r, _ in spectrum.spheres), default=np.inf)


# contours


@dataclass(frozen=True)
class Circle:
    center: complex
    radius: float
    orientation: int = 1

    def winding(self, z: complex) -> int:
        return self.orientation if abs(z - self.center) < self.radius else 0

    def gap(self, z: complex) -> float:
        return abs(abs(z - self.center) - self.radius)


@dataclass(frozen=True)
class Contour:
    """Union of circles in the slice plane ``C_I``; complex numbers stand for ``u + I v``."""

    plane: ImaginaryUnit
    circles: tuple
    nodes: int = 256

    def winding(self, z: complex) -> int:
        return sum(c.winding(z) for c in self.circles)

    def gap(self, z: complex) -> float:
        return min(c.gap(z) for c in self.circles)

    def quadrature(self):
        """``(z_k, w_k)`` with ``sum_k w_k g(z_k) ~ (1/2 pi) int g(s) ds_I``.

        With ``s = c + R e^{I o theta}``, ``ds_I = ds (-I) = o (s - c) d theta``.
        """
        theta = 2.0 * np.pi * np.arange(self.nodes) / self.nodes
        out = []
        for c in self.circles:
            z = c.center + c.radius * np.exp(1j * c.orientation * theta)
            w = c.orientation * (z - c.center) / self.nodes
            out.extend(zip(z, w))
        return out

    def with_nodes(self, nodes: int) -> Contour:
        return Contour(self.plane, self.circles, nodes)

    def with_plane(self, plane: ImaginaryUnit) -> Contour:
        return Contour(plane, self.circles, self.nodes)

    def validate(self, spectrum: SpectrumReport, margin: float = 0.05):
        circles = self.circles
        for i, a in enumerate(circles):
            for b in circles[i + 1 :]:
                d = abs(a.center - b.center)
                if not (d > a.radius + b.radius or d < abs(a.radius - b.radius)):
                    raise ContourTouchesSpectrum(f"contour circles {a} and {b} intersect")
        for z0 in spectrum.points():
            for z in (z0, z0.conjugate()):
                for c in circles:
                    if c.gap(z) < margin * c.radius:
                        raise ContourTouchesSpectrum(f"spectral point {z} lies within {margin} R of {c}")
                if self.winding(z) != 1:
                    raise ContourTouchesSpectrum(f"spectral point {z} is not enclosed once (winding {self.winding(z)})")


def circle_contour(radius: float, center: float = 0.0, plane: ImaginaryUnit | None = None, nodes: int = 256, n: int = 3):
    plane = plane or ImaginaryUnit.basis(n, 1)
    return Contour(plane, (Circle(complex(center), float(radius)),), nodes)


def default_contour(spectrum: SpectrumReport, n: int, plane: ImaginaryUnit | None = None, nodes: int = 256) -> Contour:
    """One real-centred circle per sphere, merged when circles overlap.

    The sphere ``(c, r)`` meets ``C_I`` in ``c +- I r``; the circle centred
    at ``c`` with radius ``max(0.5, 1.5 r)`` encloses both with a margin of
    at least a third of its radius.
    """
    plane = plane or ImaginaryUnit.basis(n, 1)
    discs = sorted((float(c), max(0.5, 1.5 * r)) for c, r, _ in spectrum.spheres)
    changed = True
    while changed:
        changed = False
        for i in range(len(discs) - 1):
            (ca, ra), (cb, rb) = discs[i], discs[i + 1]
            # nested, overlapping or nearly touching circles become one enclosing both
            if cb - rb <= ca + ra + 0.05 * max(ra, rb):
                lo, hi = min(ca - ra, cb - rb), max(ca + ra, cb + rb)
                discs[i : i + 2] = [(0.5 * (lo + hi), 0.5 * (hi - lo))]
                changed = True
                break
    return Contour(plane, tuple(Circle(complex(c), r) for c, r in discs), nodes)


# functional calculi


def kind_word(kind, n: int) -> OperatorWord:
    """Kernel word for ``"S"``, ``"F"``, ``"fine:<word>"`` or an explicit word."""
    if isinstance(kind, OperatorWord):
        return kind
    if isinstance(kind, tuple) and kind and kind[0] == "fine":
        return OperatorWord(kind[1])
    if kind == "S":
        return OperatorWord()
    if kind == "F":
        from .slices import sce_exponent

        return OperatorWord(["Delta"] * sce_exponent(n))
    if isinstance(kind, str) and kind.startswith("fine:"):
        return OperatorWord.parse(kind[5:])
    raise ValueError(f"unknown calculus kind {kind!r}")


def as_slice_function(f, n: int) -> SliceFunction:
    if isinstance(f, SliceFunction):
        if f.n != n:
            raise DimensionMismatch(f"slice function lives in R_{f.n}, operator in R_{n}")
        return f
    if isinstance(f, str):
        f = seed_from_id(f)
    if isinstance(f, HolomorphicSeed):
        return tfs1(f, n)
    raise TypeError(f"cannot build a slice function from {f!r}")


def _check_function(f: SliceFunction, contour: Contour, nodes, tol: float = 1e-10):
    if f.seed is not None:
        for p in f.seed.poles:
            for z in (complex(p.real, abs(p.imag)), complex(p.real, -abs(p.imag))):
                if contour.winding(z) != 0 or contour.gap(z) < 0.05 * min(c.radius for c in contour.circles):
                    raise NotSliceHyperholomorphic(f"{f.name} has a pole at {p} inside or on the contour")
    step = max(1, len(nodes) // 32)
    for z, _ in nodes[::step]:
        r = f.cr_residual(z.real, z.imag)
        if r > tol:
            raise NotSliceHyperholomorphic(f"{f.name} violates Cauchy-Riemann at {z} (residual {r:.3g})")


def operator_kernel(word: OperatorWord, u: float, v: float, unit: ImaginaryUnit, T: OperatorTuple) -> OperatorMultivector:
    """Resolvent operator for the kernel ``word S_L^{-1}`` at ``s = u + I v``."""
    coef, power, prefactor = closed_form_entry(word, T.n)
    Z = np.linalg.matrix_power(q_inverse_complex(u, v, T), power) * coef
    out = OperatorMultivector.from_complex(Z, unit)
    if prefactor:
        s = OperatorMultivector.from_multivector(Paravector.from_slice(u, v, unit).to_multivector(), T.m)
        out = (s - conjugate_tuple(T)) * out
    return out


def functional_calculus(
    kind,
    f,
    T: OperatorTuple,
    contour: Contour | None = None,
    spectrum: SpectrumReport | None = None,
    check: bool = True,
) -> OperatorMultivector:
    """``(1/2 pi) int kernel(s, T) ds_I f(s)`` by the trapezoidal rule.

    ``kind`` is ``"S"`` (SC-resolvent), ``"F"`` (kernel ``Delta^{(n-1)/2}``),
    or ``"fine:<word>"`` for any word with a registered closed form.  The
    product order kernel * ds_I * f(s) is kept exactly.
    """
    n = T.n
    word = kind_word(kind, n)
    closed_form_gate(word, n)
    f = as_slice_function(f, n)
    if spectrum is None:
        spectrum = s_spectrum(T)
    if contour is None:
        contour = default_contour(spectrum, n)
    if contour.plane.n != n:
        raise DimensionMismatch("contour plane lives in a different algebra")
    nodes = contour.quadrature()
    if check:
        contour.validate(spectrum)
        _check_function(f, contour, nodes)

    unit = contour.plane
    coef, power, prefactor = closed_form_entry(word, n)
    Tbar = conjugate_tuple(T)
    terms = []
    for z, w in nodes:
        u, v = float(z.real), float(z.imag)
        Z = np.linalg.matrix_power(q_inverse_complex(u, v, T), power) * (coef * w)
        term = OperatorMultivector.from_complex(Z, unit)
        if prefactor:
            s = OperatorMultivector.from_multivector(Paravector.from_slice(u, v, unit).to_multivector(), T.m)
            term = (s - Tbar) * term
        term = term * f.in_plane(u, v, unit)
        terms.append(term.coeffs)
    return OperatorMultivector(n, pairwise_sum(terms))


# direct evaluation oracles


def operator_polynomial(jet: Jet, T: OperatorTuple) -> OperatorMultivector:
    """Substitute ``x_j -> T_j`` into the polynomial whose jet at the origin is ``jet``."""
    if jet.nvars != T.n + 1 or jet.n != T.n:
        raise DimensionMismatch("jet does not match the operator tuple")
    powers = [[np.eye(T.m)] for _ in range(T.n + 1)]
    for j in range(T.n + 1):
        for _ in range(jet.degree):
            powers[j].append(powers[j][-1] @ T.T[j])
    out = np.zeros((1 << T.n, T.m, T.m))
    for k, exp in enumerate(jet.basis.exps):
        c = jet.coeffs[k]
        if not np.any(c):
            continue
        mono = np.eye(T.m)
        for j, p in enumerate(exp):
            mono = mono @ powers[j][p]
        out += c[:, None, None] * mono
    return OperatorMultivector(T.n, out)


def operator_power_series(coeffs, T: OperatorTuple) -> OperatorMultivector:
    """``sum_k c_k T^k`` with real ``c_k``."""
    Tm = T.as_multivector()
    out = OperatorMultivector(T.n, np.zeros((1 << T.n, T.m, T.m)))
    power = OperatorMultivector.identity(T.n, T.m)
    for k, c in enumerate(coeffs):
        if k:
            power = power * Tm
        if c:
            out = out + power * float(c)
    return out


def direct_evaluation(seed, T: OperatorTuple, tol: float = 1e-18) -> OperatorMultivector:
    """Seed applied to ``T`` through its power series (polynomials and exp only)."""
    if isinstance(seed, str):
        seed = seed_from_id(seed)
    if isinstance(seed, Monomial):
        return operator_power_series([0.0] * seed.k + [1.0], T)
    if isinstance(seed, Polynomial):
        if any(c.imag for c in seed.coeffs):
            raise ValueError("direct evaluation needs real coefficients")
        return operator_power_series([c.real for c in seed.coeffs], T)
    if isinstance(seed, Exp):
        Tm = T.as_multivector()
        out = OperatorMultivector.identity(T.n, T.m)
        term = out
        for k in range(1, 400):
            term = (term * Tm) * (1.0 / k)
            out = out + term
            if term.norm() < tol * max(out.norm(), 1.0):
                break
        return out
    raise ValueError(f"no direct evaluation for {seed!r}")


def independence_checks(
    f, T: OperatorTuple, contours, kind="S", tolerance: float = 1e-8, reference: OperatorMultivector | None = None
) -> dict:
    """Compare the calculus over several valid contours (and an optional oracle)."""
    results = [functional_calculus(kind, f, T, c) for c in contours]
    scale = max(r.norm() for r in results)
    diffs = [(results[i] - results[j]).norm() / scale for i in range(len(results)) for j in range(i + 1, len(results))]
    report = {"max_pairwise": max(diffs, default=0.0)}
    if reference is not None:
        report["max_vs_reference"] = max((r - reference).norm() / max(reference.norm(), 1e-300) for r in results)
    report["passed"] = all(v < tolerance for k, v in report.items() if k.startswith("max"))
    return report


def seed_polynomial_jet(seed, n: int) -> Jet:
    """Jet at the origin of the intrinsic polynomial ``sum_k c_k x^k`` (exact for its degree)."""
    if isinstance(seed, str):
        seed = seed_from_id(seed)
    if isinstance(seed, Monomial):
        coeffs = [0.0] * seed.k + [1.0]
    elif isinstance(seed, Polynomial):
        if any(c.imag for c in seed.coeffs):
            raise ValueError("polynomial oracle needs real coefficients")
        coeffs = [c.real for c in seed.coeffs]
    else:
        raise ValueError(f"no polynomial oracle for {seed!r}")
    degree = max(len(coeffs) - 1, 0)
    X = paravector_jet(Paravector(0.0, [0.0] * n), degree)
    out = Jet.zeros(n + 1, degree, n)
    power = Jet.constant(1.0, n + 1, degree, n)
    for k, c in enumerate(coeffs):
        if k:
            power = power * X
        if c:
            out = out + power * float(c)
    return out


def calculus_oracle(kind, seed, T: OperatorTuple) -> OperatorMultivector:
    """Independent value of ``functional_calculus(kind, seed, T)``.

    Kind S uses power series in ``T``; other kinds apply their operator word
    to the polynomial symbolically (through an exact jet at the origin) and
    substitute ``x_j -> T_j``.
    """
    word = kind_word(kind, T.n)
    if not len(word):
        return direct_evaluation(seed, T)
    jet = seed_polynomial_jet(seed, T.n)
    if jet.degree < word.order:
        return OperatorMultivector(T.n, np.zeros((1 << T.n, T.m, T.m)))
    return operator_polynomial(apply_word(word, jet), T)
