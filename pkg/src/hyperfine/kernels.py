"""Pseudo Cauchy kernel, left slice Cauchy kernel and fine-structure kernels.

Every kernel is available through jets (differentiate ``x -> S_L^{-1}(s, x)``
exactly to the needed order).  A few words also have closed forms of the
type ``c * [(s - conj x)] * Q_{c,s}(x)^{-p}``; these are only used after a
self-test against the jet path has accepted them.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from .clifford import Multivector, Paravector
from .errors import OnSpectrumSphere, UnknownClosedForm
from .jets import Jet, OperatorWord, apply_word, jet_invert, paravector_jet

ADMISSIBILITY_MARGIN = 1e-10
CLOSED_FORM_TOLERANCE = 1e-10


@dataclass(frozen=True)
class KernelPoint:
    s: Paravector
    x: Paravector

    def __post_init__(self):
        if self.s.n != self.x.n:
            raise ValueError("s and x live in different algebras")

    @property
    def n(self) -> int:
        return self.s.n

    def sphere_distance(self) -> float:
        """Distance from ``x`` to the sphere ``[s]``."""
        return float(np.hypot(self.s.x0 - self.x.x0, self.s.vector_norm() - self.x.vector_norm()))

    def admissible(self) -> bool:
        return self.sphere_distance() > ADMISSIBILITY_MARGIN

    def require_admissible(self):
        if not self.admissible():
            raise OnSpectrumSphere(f"x lies on the sphere [s] (distance {self.sphere_distance():.3g})")


def _q_value(p: KernelPoint) -> Multivector:
    s = p.s.to_multivector()
    return s * s - s * (2.0 * p.x.x0) + p.x.norm() ** 2


def q_inv(p: KernelPoint) -> Multivector:
    """``(s^2 - 2 Re(x) s + |x|^2)^{-1}``, an element of the slice plane of ``s``."""
    p.require_admissible()
    w = _q_value(p)
    wb = w.conjugate()
    return wb / (w * wb).scalar_part


def s_left(p: KernelPoint) -> Multivector:
    """Left slice Cauchy kernel ``(s - conj x) Q_{c,s}(x)^{-1}``."""
    diff = p.s.to_multivector() - p.x.conjugate().to_multivector()
    return diff * q_inv(p)


def s_left_jet(s: Paravector, x: Paravector, degree: int) -> Jet:
    """Jet in ``x`` of ``x -> S_L^{-1}(s, x)`` at ``x``."""
    KernelPoint(s, x).require_admissible()
    n = x.n
    X = paravector_jet(x, degree)
    Xbar = Jet(X.nvars, degree, n, X.coeffs * np.where(np.arange(1 << n) == 0, 1.0, -1.0))
    sm = s.to_multivector()
    x0 = Jet.variable(0, x.x0, n + 1, degree, n)
    mod2 = x0 * x0
    for j in range(1, n + 1):
        xj = Jet.variable(j, x.vec[j - 1], n + 1, degree, n)
        mod2 = mod2 + xj * xj
    Q = (x0 * (-2.0)) * sm + mod2 + sm * sm
    return (sm - Xbar) * jet_invert(Q)


# closed forms: (coefficient, power of Q^{-1}, has (s - conj x) prefactor)
_CLOSED_FORMS = {
    (5, (0, 0, 0)): (1.0, 1, True),
    (5, (1, 0, 0)): (-4.0, 1, False),
    (5, (1, 0, 1)): (16.0, 2, False),
    (5, (0, 0, 2)): (64.0, 3, True),
    (3, (0, 0, 0)): (1.0, 1, True),
    (3, (1, 0, 0)): (-2.0, 1, False),
    (3, (0, 0, 1)): (-4.0, 2, True),
}

_gate_lock = threading.Lock()
_gate_results: dict = {}


def closed_form_entry(word: OperatorWord, n: int) -> tuple[float, int, bool]:
    key = (n, word.canonical())
    if key not in _CLOSED_FORMS:
        raise UnknownClosedForm(f"no closed form registered for word {word} at n = {n}")
    return _CLOSED_FORMS[key]


def closed_form_gate(word: OperatorWord, n: int) -> float:
    """Self-test a closed form against jets; returns the worst relative deviation.

    Raises ``UnknownClosedForm`` if the closed form is missing or disagrees.
    The result is memoised per ``(n, word)``.
    """
    key = (n, word.canonical())
    closed_form_entry(word, n)
    with _gate_lock:
        if key in _gate_results:
            worst = _gate_results[key]
        else:
            worst = _self_test(word, n)
            _gate_results[key] = worst
    if not worst < CLOSED_FORM_TOLERANCE:
        raise UnknownClosedForm(f"closed form for {word} at n = {n} failed its self-test (rel. deviation {worst:.3g})")
    return worst


def _self_test(word: OperatorWord, n: int, count: int = 12) -> float:
    rng = np.random.default_rng(20240601 + n)
    worst = 0.0
    for p in random_admissible_points(rng, n, count):
        a = _jet_kernel(word, p)
        b = _closed_kernel(word, p)
        worst = max(worst, (a - b).norm() / max(b.norm(), 1e-300))
    return worst


def random_admissible_points(rng: np.random.Generator, n: int, count: int, min_distance: float = 0.3):
    """Random ``(s, x)`` pairs with ``x`` at least ``min_distance`` from ``[s]``."""
    out = []
    while len(out) < count:
        s = Paravector(rng.uniform(-2, 2), rng.uniform(-1.5, 1.5, n))
        x = Paravector(rng.uniform(-1, 1), rng.uniform(-1, 1, n))
        p = KernelPoint(s, x)
        if p.sphere_distance() > min_distance and x.vector_norm() > 0.05:
            out.append(p)
    return out


def _jet_kernel(word: OperatorWord, p: KernelPoint, right: bool = False) -> Multivector:
    jet = s_left_jet(p.s, p.x, word.order)
    return apply_word(word, jet, right=right).value()


def _closed_kernel(word: OperatorWord, p: KernelPoint) -> Multivector:
    coef, power, prefactor = closed_form_entry(word, p.n)
    q = q_inv(p) ** power
    if prefactor:
        q = (p.s.to_multivector() - p.x.conjugate().to_multivector()) * q
    return q * coef


def fine_kernel(word, p: KernelPoint, via: str = "jet") -> Multivector:
    """``word`` applied in ``x`` to ``S_L^{-1}(s, x)``, at ``x``."""
    if not isinstance(word, OperatorWord):
        word = OperatorWord(word)
    p.require_admissible()
    if via == "jet":
        return _jet_kernel(word, p)
    if via == "closed_form":
        closed_form_gate(word, p.n)
        return _closed_kernel(word, p)
    raise ValueError(f"via must be 'jet' or 'closed_form', got {via!r}")
