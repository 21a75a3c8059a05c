import numpy as np
import pytest

from conftest import commuting_tuple, spheres_of
from hyperfine.clifford import ImaginaryUnit, Multivector, Paravector
from hyperfine.errors import (
    ContourTouchesSpectrum,
    DimensionMismatch,
    JointDiagonalizationFailed,
    NonCommuting,
    NotSliceHyperholomorphic,
    SingularAtS,
    UnknownClosedForm,
)
from hyperfine.jets import OperatorWord
from hyperfine.kernels import KernelPoint, fine_kernel, q_inv
from hyperfine.operators import (
    Circle,
    Contour,
    OperatorMultivector,
    OperatorTuple,
    calculus_oracle,
    circle_contour,
    conjugate_tuple,
    default_contour,
    direct_evaluation,
    functional_calculus,
    independence_checks,
    kind_word,
    operator_power_series,
    q_op,
    q_op_inverse,
    s_spectrum,
    sigma_min,
)
from hyperfine.slices import tfs1


def e1_tuple(n=3):
    T = [[[0.0]] for _ in range(n + 1)]
    T[1] = [[1.0]]
    return OperatorTuple(T)


def rel(a, b):
    return (a - b).norm() / max(b.norm(), 1e-300)


def test_conjugate_tuple_examples(rng):
    m = 3
    eye = OperatorTuple([np.eye(m)] + [np.zeros((m, m))] * 3)
    tb = conjugate_tuple(eye)
    assert np.array_equal(tb.blade(0), np.eye(m)) and not np.any(tb.coeffs[1:])

    A = rng.standard_normal((m, m))
    T = OperatorTuple([np.zeros((m, m)), A, np.zeros((m, m)), np.zeros((m, m))])
    assert np.array_equal(conjugate_tuple(T).blade(1), -A)

    T, _ = commuting_tuple(rng, 3, 4)
    half = (T.as_multivector() + conjugate_tuple(T)) * 0.5
    assert np.abs(half.blade(0) - T.T[0]).max() < 1e-15 and not np.any(half.coeffs[1:])


def test_t_times_conjugate_is_grade_zero(rng):
    T, _ = commuting_tuple(rng, 5, 4)
    prod = T.as_multivector() * conjugate_tuple(T)
    scale = T.norm() ** 2
    assert np.abs(prod.blade(0) - T.modulus_squared()).max() < 1e-13 * scale
    assert np.abs(prod.coeffs[1:]).max() < 1e-13 * scale


def test_operator_multivector_product_matches_clifford_for_scalar_matrices(rng):
    n = 3
    a, b = Multivector(n, rng.standard_normal(8)), Multivector(n, rng.standard_normal(8))
    A, B = OperatorMultivector.from_multivector(a, 2), OperatorMultivector.from_multivector(b, 2)
    assert np.abs((A * B).coeffs[:, 0, 0] - (a * b).coeffs).max() < 1e-14
    assert np.abs((A * b).coeffs[:, 0, 0] - (a * b).coeffs).max() < 1e-14
    assert np.abs((a * B).coeffs[:, 0, 0] - (a * b).coeffs).max() < 1e-14
    with pytest.raises(DimensionMismatch):
        A * OperatorMultivector.identity(n, 3)


def test_operator_multivector_associative(rng):
    n, m = 3, 3
    X, Y, Z = (OperatorMultivector(n, rng.standard_normal((8, m, m))) for _ in range(3))
    assert ((X * Y) * Z - X * (Y * Z)).norm() < 1e-12 * X.norm() * Y.norm() * Z.norm()


def test_q_op_examples(rng):
    m = 2
    t = 0.7
    T = OperatorTuple([t * np.eye(m)] + [np.zeros((m, m))] * 3)
    s = Paravector(2.0, [0, 0, 0])
    assert np.abs(q_op(s, T).blade(0) - (2.0 - t) ** 2 * np.eye(m)).max() < 1e-15

    s = Paravector(0.5, [0.3, -1.0, 0.2])
    q = q_op(s, e1_tuple())
    expected = s.to_multivector() * s.to_multivector() + 1.0
    assert np.abs(q.coeffs[:, 0, 0] - expected.coeffs).max() < 1e-15


def test_q_op_blades_come_from_s(rng):
    T, _ = commuting_tuple(rng, 3, 4)
    I = ImaginaryUnit.random(3, rng)
    s = Paravector.from_slice(0.4, 1.3, I)
    q = q_op(s, T)
    # blade content lies in span{1, I}
    vec = np.stack([q.blade(1 << j) for j in range(3)])
    assert np.abs(vec - np.asarray(I.direction)[:, None, None] * 2 * 1.3 * (0.4 * np.eye(4) - T.T[0])).max() < 1e-13
    assert np.abs(q.coeffs[[3, 5, 6, 7]]).max() < 1e-13
    # s and its mirror on the sphere give equal scalar blades
    mirror = Paravector(s.x0, [-v for v in s.vec])
    assert np.abs(q_op(mirror, T).blade(0) - q.blade(0)).max() < 1e-13


def test_q_op_inverse_examples(rng):
    one = OperatorTuple([[[1.0]], [[0.0]], [[0.0]], [[0.0]]])
    assert q_op_inverse(Paravector(2.0, [0, 0, 0]), one).coeffs.ravel()[0] == pytest.approx(1.0, abs=1e-15)
    val = q_op_inverse(Paravector(2.0, [0, 0, 0]), e1_tuple())
    assert val.coeffs.ravel()[0] == pytest.approx(0.2, abs=1e-15)
    assert not np.any(val.coeffs.ravel()[1:])


@pytest.mark.parametrize("n", [3, 5])
def test_q_op_inverse_is_inverse(rng, n):
    ident = OperatorMultivector.identity(n, 4)
    for _ in range(5):
        T, _ = commuting_tuple(rng, n, 4)
        s = Paravector(rng.uniform(-2, 2), rng.uniform(-2, 2, n))
        Q, Qi = q_op(s, T), q_op_inverse(s, T)
        assert (Q * Qi - ident).norm() < 1e-12 * max(1.0, Q.norm() * Qi.norm())
        assert (Qi * Q - ident).norm() < 1e-12 * max(1.0, Q.norm() * Qi.norm())


def test_q_op_inverse_singular_on_spectrum():
    with pytest.raises(SingularAtS):
        q_op_inverse(Paravector(0.0, [0.0, 0.0, 1.0]), e1_tuple())


def test_spectrum_examples():
    rep = s_spectrum(e1_tuple())
    assert rep.spheres == ((0.0, 1.0, 1),)
    T = OperatorTuple([np.diag([1.0, 2.0])] + [np.zeros((2, 2))] * 3)
    assert s_spectrum(T).spheres == ((1.0, 0.0, 1), (2.0, 0.0, 1))
    T = OperatorTuple([np.eye(2), np.diag([2.0, -2.0]), np.zeros((2, 2)), np.zeros((2, 2))])
    assert s_spectrum(T).spheres == ((1.0, 2.0, 2),)


def test_spectrum_brute_force_probe_for_e1():
    # s^2 + 1 is singular exactly on the unit sphere of imaginary units
    T = e1_tuple()
    grid = [(u, v) for u in np.linspace(-2, 2, 41) for v in np.linspace(0, 2, 21)]
    hits = [(u, v) for u, v in grid if sigma_min(u, v, T) < 1e-12]
    assert hits == [(0.0, 1.0)]


def test_spectrum_with_complex_joint_eigenvalues():
    # T_1 is a rotation generator: Q(s) = s^2 + T_1^2 = s^2 - 1 is singular at s = +-1
    R = np.array([[0.0, -1.0], [1.0, 0.0]])
    T = OperatorTuple([np.zeros((2, 2)), R, np.zeros((2, 2)), np.zeros((2, 2))])
    rep = s_spectrum(T)
    assert [(c, r) for c, r, _ in rep.spheres] == [(-1.0, 0.0), (1.0, 0.0)]
    assert rep.residual < 1e-14


@pytest.mark.parametrize("n", [3, 5])
def test_spectrum_of_random_tuples(rng, n):
    for m in (1, 3, 6):
        T, eigs = commuting_tuple(rng, n, m)
        rep = s_spectrum(T)
        got = sorted((c, r) for c, r, k in rep.spheres for _ in range(k))
        assert np.abs(np.array(got) - np.array(spheres_of(eigs))).max() < 1e-8
        assert rep.residual < 1e-6


def test_spectrum_regular_off_spheres(rng):
    eigs = np.array([[0.8, 0.6, 0.0, 0.0], [-0.7, 0.0, 0.5, 0.5], [0.0, 0.0, 0.0, 1.2]])
    T, _ = commuting_tuple(rng, 3, 3, eigs)
    rep = s_spectrum(T)
    scale = T.norm() ** 2
    count = 0
    while count < 50:
        u, v = rng.uniform(-2, 2), rng.uniform(0, 2)
        if min(np.hypot(u - c, v - r) for c, r, _ in rep.spheres) >= 0.1:
            assert sigma_min(u, v, T) > 1e-3 * scale
            count += 1


def test_noncommuting_rejected():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    B = A.T.copy()
    with pytest.raises(NonCommuting):
        OperatorTuple([np.eye(2), A, B, np.zeros((2, 2))])
    T = OperatorTuple([np.eye(2), A, B, np.zeros((2, 2))], check=False)
    with pytest.raises(NonCommuting):
        s_spectrum(T)


def test_defective_tuple_rejected():
    J = np.array([[1.0, 1.0], [0.0, 1.0]])
    with pytest.raises(JointDiagonalizationFailed):
        s_spectrum(OperatorTuple([J, np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 2))]))


def test_contour_validation():
    spectrum = s_spectrum(e1_tuple())
    plane = ImaginaryUnit.basis(3, 1)
    circle_contour(1.5, plane=plane).validate(spectrum)
    with pytest.raises(ContourTouchesSpectrum):
        circle_contour(0.5, plane=plane).validate(spectrum)
    with pytest.raises(ContourTouchesSpectrum):
        circle_contour(1.02, plane=plane).validate(spectrum)
    overlapping = Contour(plane, (Circle(0j, 2.0), Circle(1 + 0j, 2.0)))
    with pytest.raises(ContourTouchesSpectrum):
        overlapping.validate(spectrum)
    # a negatively oriented circle leaves the spectrum with winding -1
    with pytest.raises(ContourTouchesSpectrum):
        Contour(plane, (Circle(0j, 2.0, -1),)).validate(spectrum)


def test_default_contour_encloses_and_merges(rng):
    T = OperatorTuple([np.diag([-3.0, 3.0]), np.diag([0.1, 0.2]), np.zeros((2, 2)), np.zeros((2, 2))])
    spectrum = s_spectrum(T)
    C = default_contour(spectrum, 3)
    assert len(C.circles) == 2
    C.validate(spectrum)
    T = OperatorTuple([np.diag([-0.3, 0.3]), np.diag([0.1, 1.2]), np.zeros((2, 2)), np.zeros((2, 2))])
    spectrum = s_spectrum(T)
    C = default_contour(spectrum, 3)
    assert len(C.circles) == 1
    C.validate(spectrum)


def test_quadrature_weights_integrate_ds_i():
    # (1/2pi) int ds_I / (s - a) = 1 for a inside
    C = Contour(ImaginaryUnit.basis(3, 1), (Circle(0.5 + 0.2j, 1.3),), 64)
    total = sum(w / (z - 0.3) for z, w in C.quadrature())
    assert abs(total - 1.0) < 1e-14


def test_calculus_examples():
    T = e1_tuple()
    one = functional_calculus("S", "z^0", T, circle_contour(2.0, nodes=256))
    assert rel(one, OperatorMultivector.identity(3, 1)) < 1e-8
    sq = functional_calculus("S", "z^2", T)
    assert abs(sq.coeffs.ravel()[0] + 1.0) < 1e-12 and np.abs(sq.coeffs.ravel()[1:]).max() < 1e-12


@pytest.mark.parametrize("n", [3, 5])
def test_s_calculus_of_powers(rng, n):
    T, _ = commuting_tuple(rng, n, 4)
    for k in range(6):
        got = functional_calculus("S", f"z^{k}", T, default_contour(s_spectrum(T), n, nodes=512))
        assert rel(got, T.as_multivector() ** k) < 1e-8


def test_s_calculus_of_exp_and_reciprocal(rng):
    T, _ = commuting_tuple(rng, 3, 4)
    assert rel(functional_calculus("S", "exp", T), direct_evaluation("exp", T)) < 1e-10
    # 1 / (z - 4): the pole lies outside the default contour
    got = functional_calculus("S", "inv:4,0", T)
    Tm = T.as_multivector()
    shifted = Tm - OperatorMultivector.identity(3, 4) * 4.0
    assert rel(got * shifted, OperatorMultivector.identity(3, 4)) < 1e-10


def test_s_calculus_is_multiplicative_on_real_polynomials(rng):
    T, _ = commuting_tuple(rng, 3, 3)
    p, q = "poly:1,-0.5,2", "poly:0.3,1,0,-1"
    pq = "poly:" + ",".join(str(c) for c in np.polynomial.polynomial.polymul([1, -0.5, 2], [0.3, 1, 0, -1]))
    a, b, c = (functional_calculus("S", f, T) for f in (p, q, pq))
    assert rel(a * b, c) < 1e-7
    assert rel(a * b, b * a) < 1e-7


def test_s_calculus_with_complex_spectrum():
    R = np.array([[0.0, -1.0], [1.0, 0.0]])
    T = OperatorTuple([0.2 * np.eye(2), R, 0.5 * R, np.zeros((2, 2))])
    for k in range(4):
        assert rel(functional_calculus("S", f"z^{k}", T), T.as_multivector() ** k) < 1e-10


@pytest.mark.parametrize("kind", ["F", "fine:D", "fine:Delta,D", "fine:Delta,Delta"])
def test_n5_calculi_match_polynomial_oracle(rng, kind):
    T, _ = commuting_tuple(rng, 5, 3)
    for f in ("z^2", "z^4", "z^5", "poly:1,0,-2,1,0.5,0.25"):
        got = functional_calculus(kind, f, T)
        oracle = calculus_oracle(kind, f, T)
        assert (got - oracle).norm() < 1e-8 * max(oracle.norm(), 1.0)


@pytest.mark.parametrize("kind", ["F", "fine:D"])
def test_n3_calculi_match_polynomial_oracle(rng, kind):
    T, _ = commuting_tuple(rng, 3, 3)
    for f in ("z^3", "z^5"):
        got = functional_calculus(kind, f, T)
        oracle = calculus_oracle(kind, f, T)
        assert (got - oracle).norm() < 1e-8 * max(oracle.norm(), 1.0)


@pytest.mark.parametrize("word, power", [(["D"], 1), (["Delta", "D"], 2)])
def test_fine_calculus_consistent_with_jet_kernels(rng, word, power):
    # coefficients read off the jet-path kernel at x-level, then moved to
    # operator level through q_op_inverse powers and integrated node by node
    n = 5
    T, _ = commuting_tuple(rng, n, 3)
    f = tfs1("exp", n)
    C = default_contour(s_spectrum(T), n, nodes=128)
    x = Paravector(0.1, [0.2, -0.3, 0.1, 0.4, 0.0])
    unit = C.plane
    total = None
    for z, w in C.quadrature():
        s = Paravector.from_slice(z.real, z.imag, unit)
        p = KernelPoint(s, x)
        coef = fine_kernel(OperatorWord(word), p) * (q_inv(p) ** power).inverse()
        term = coef * (q_op_inverse(s, T) ** power)
        term = term * unit.complex_to_multivector(w) * f.in_plane(z.real, z.imag, unit)
        total = term if total is None else total + term
    got = functional_calculus("fine:" + ",".join(word), f, T, C)
    assert rel(got, total) < 1e-8


def test_unregistered_kind_rejected(rng):
    T, _ = commuting_tuple(rng, 5, 2)
    with pytest.raises(UnknownClosedForm):
        functional_calculus("fine:D,D", "z^2", T)
    with pytest.raises(ValueError):
        kind_word("G", 5)
    assert kind_word("F", 5) == OperatorWord(["Delta", "Delta"])


def test_function_checks():
    T = e1_tuple()
    with pytest.raises(NotSliceHyperholomorphic):
        functional_calculus("S", "inv:0.5,0", T, circle_contour(2.0))
    with pytest.raises(ContourTouchesSpectrum):
        functional_calculus("S", "z^2", T, circle_contour(0.5))
    with pytest.raises(DimensionMismatch):
        functional_calculus("S", tfs1("z", 5), T)


def test_independence_checks(rng):
    T, _ = commuting_tuple(rng, 3, 4)
    spectrum = s_spectrum(T)
    reach = max(abs(z) for z in spectrum.points())
    planes = [ImaginaryUnit.basis(3, 1), ImaginaryUnit([1.0, 1.0, 0.0], normalize=True)]
    rep = independence_checks("z^2", T, [default_contour(spectrum, 3, p) for p in planes], reference=T.as_multivector() ** 2)
    assert rep["passed"] and rep["max_pairwise"] < 1e-8 and rep["max_vs_reference"] < 1e-8
    r1, r2 = reach + 0.5, 2 * reach + 1.0
    rep = independence_checks("z^2", T, [circle_contour(r1), circle_contour(r2)])
    assert rep["max_pairwise"] < 1e-8
    C = circle_contour(r1)
    rep = independence_checks("exp", T, [C.with_nodes(128), C.with_nodes(256)])
    assert rep["max_pairwise"] < 1e-10


def test_trapezoid_convergence_is_geometric(rng):
    T, _ = commuting_tuple(rng, 3, 3)
    ref = direct_evaluation("exp", T)
    spectrum = s_spectrum(T)
    C = default_contour(spectrum, 3)
    errors = [rel(functional_calculus("S", "exp", T, C.with_nodes(N), spectrum), ref) for N in (32, 64, 128, 256)]
    for e1, e2 in zip(errors, errors[1:]):
        if e1 < 1e-12:
            break
        assert e1 / e2 > 10


def test_power_series_helper(rng):
    T, _ = commuting_tuple(rng, 3, 2)
    Tm = T.as_multivector()
    got = operator_power_series([1.0, 0.0, 2.0], T)
    assert rel(got, OperatorMultivector.identity(3, 2) + Tm * Tm * 2.0) < 1e-14
