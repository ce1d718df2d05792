import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact.generators import nil_gauge, odd_gauge, random_flat, random_hom_form
from artifact.graded_core import GradedVectorSpace
from artifact.poly_forms import (
    FormError,
    GaugeElement,
    GaugeError,
    PolyForm,
    SuperconnectionMC,
    evaluate,
    exterior_derivative,
    gauge_act,
    mc_form,
    mc_residual,
    pullback_affine,
    wedge,
)
from artifact.simplex_geom import AffineSimplexMap, face_map, front_face

seeds = st.integers(0, 2**31 - 1)
TWO_TERM = GradedVectorSpace({-1: 1, 0: 1})
ODD = np.array([[0.0, 1.0], [0.0, 0.0]])  # degree -1 on TWO_TERM


def _random_form(rng, V, k, degree, deg=2):
    return PolyForm(V, k, random_hom_form(rng, V, V, k, degree, deg=deg, scale=1.0).terms)


def _random_affine(rng, k_src, k_tgt):
    pts = np.sort(rng.uniform(0, 1, (k_src + 1, k_tgt)), axis=1)[:, ::-1]
    return AffineSimplexMap.from_vertices(pts)


def test_repeated_covector_vanishes():
    a = PolyForm(TWO_TERM, 2, {((0,), (0, 0)): np.eye(2)})
    b = PolyForm(TWO_TERM, 2, {((0,), (0, 0)): ODD})
    assert not wedge(a, b).terms


def test_wedge_sign_from_odd_coefficient():
    A = np.diag([2.0, 3.0])
    a = PolyForm(TWO_TERM, 2, {((0,), (0, 0)): A})
    b = PolyForm(TWO_TERM, 2, {((1,), (0, 0)): ODD})
    # ODD passes dt_1 and picks up a minus sign
    np.testing.assert_array_equal(wedge(a, b).terms[((0, 1), (0, 0))], -A @ ODD)


def test_wedge_of_functions_is_pointwise_product(rng):
    V = GradedVectorSpace({0: 3})
    F, G = rng.uniform(-1, 1, (2, 3, 3))
    f = PolyForm(V, 1, {((), (1,)): F})
    g = PolyForm(V, 1, {((), (2,)): G})
    p = np.array([0.4])
    np.testing.assert_allclose(evaluate(wedge(f, g), p)[()], 0.4**3 * F @ G)


def test_derivative_examples():
    V = GradedVectorSpace({0: 2})
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert not exterior_derivative(PolyForm(V, 2, {((0,), (0, 0)): A})).terms
    d = exterior_derivative(PolyForm(V, 2, {((), (0, 1)): A}))
    assert d.terms.keys() == {((1,), (0, 0))}
    np.testing.assert_array_equal(d.terms[((1,), (0, 0))], A)
    d = exterior_derivative(PolyForm(V, 2, {((0,), (1, 1)): A}))
    assert d.terms.keys() == {((0, 1), (1, 0))}
    np.testing.assert_array_equal(d.terms[((0, 1), (1, 0))], -A)


def test_pullback_examples():
    V = GradedVectorSpace({0: 1})
    a = PolyForm(V, 2, {((1,), (1, 0)): [[1.0]]})
    assert pullback_affine(a, AffineSimplexMap.identity(2)).allclose(a)
    top = PolyForm(V, 2, {((0, 1), (0, 0)): [[5.0]]})
    assert not pullback_affine(top, front_face(1, 2)).terms
    pulled = pullback_affine(a, face_map(0, 1))
    assert pulled.allclose(PolyForm(V, 1, {((0,), (0,)): [[1.0]]}))


def test_evaluate_examples():
    V = GradedVectorSpace({0: 2})
    A = np.array([[1.0, 2.0], [0.0, 1.0]])
    const = PolyForm(V, 2, {((0,), (0, 0)): A})
    for p in ([0.9, 0.1], [0.5, 0.5]):
        np.testing.assert_array_equal(evaluate(const, p)[(0,)], A)
    lin = PolyForm(V, 1, {((0,), (1,)): A})
    np.testing.assert_array_equal(evaluate(lin, [0.5])[(0,)], 0.5 * A)
    both = evaluate(const.form_part(1) + PolyForm(V, 2, {((0,), (1, 0)): A}), [0.5, 0.25])
    np.testing.assert_allclose(both[(0,)], 1.5 * A)
    with pytest.raises(FormError):
        evaluate(lin, [1.5])


def test_mc_residual_examples(rng):
    V = GradedVectorSpace({0: 2})
    A, B = rng.uniform(-1, 1, (2, 2, 2))
    assert mc_residual(PolyForm(V, 1, {((0,), (0,)): A})) == 0.0
    W = GradedVectorSpace({0: 2, 1: 2})
    D = np.zeros((4, 4))
    D[2, 0] = 1.0  # e_1 -> f_1
    phi = np.zeros((4, 4))
    phi[1, 3] = 1.0  # f_2 -> e_2, degree -1
    assert mc_residual(PolyForm(W, 2, {((), (0, 0)): D, ((0, 1), (0, 0)): 0.7 * phi})) == 0.0
    curved = PolyForm(V, 2, {((0,), (0, 0)): A, ((1,), (0, 0)): B})
    assert mc_residual(curved) == pytest.approx(np.abs(A @ B - B @ A).max())
    with pytest.raises(FormError):
        SuperconnectionMC(curved)


def test_gauge_act_examples(rng):
    V = GradedVectorSpace({0: 2, 1: 2})
    om = random_flat(rng, V, 2)
    one = PolyForm.identity(V, 2)
    assert gauge_act(om, GaugeElement(one, one)).allclose(om)
    g = np.eye(4)
    g[:2, :2] += 0.3 * rng.uniform(-1, 1, (2, 2))
    gi = np.linalg.inv(g)
    const = GaugeElement(PolyForm.constant(V, 2, g), PolyForm.constant(V, 2, gi))
    assert gauge_act(om, const).max_abs_difference(om.conjugate(gi, g)) < 1e-12
    f = nil_gauge(rng, V, 2)
    pure = gauge_act(PolyForm.zero(V, 2), f)
    assert pure.allclose(wedge(f.inverse, exterior_derivative(f.f)))
    assert mc_form(pure).norm() < 1e-10


def test_gauge_rejects_bad_inverse_and_singular():
    V = GradedVectorSpace({0: 2})
    f = PolyForm.constant(V, 1, np.diag([1.0, 2.0]))
    with pytest.raises(GaugeError):
        GaugeElement(f, f)
    tiny = PolyForm.constant(V, 1, np.diag([1.0, 1e-9]))
    with pytest.raises(GaugeError):
        GaugeElement(tiny, PolyForm.constant(V, 1, np.diag([1.0, 1e9])))


@given(seeds, st.integers(1, 3), st.integers(-1, 2))
def test_d_squared_is_zero(seed, k, degree):
    a = _random_form(np.random.default_rng(seed), TWO_TERM, k, degree, deg=3)
    assert exterior_derivative(exterior_derivative(a)).norm() < 1e-12


@given(seeds, st.integers(1, 3), st.integers(-1, 2), st.integers(-1, 2))
def test_leibniz_rule(seed, k, da, db):
    rng = np.random.default_rng(seed)
    a = _random_form(rng, TWO_TERM, k, da)
    b = _random_form(rng, TWO_TERM, k, db)
    lhs = exterior_derivative(wedge(a, b))
    rhs = wedge(exterior_derivative(a), b) + wedge(a, exterior_derivative(b)).scale((-1) ** da)
    assert lhs.max_abs_difference(rhs) < 1e-12


@given(seeds, st.integers(1, 3), st.integers(1, 3))
def test_pullback_commutes_with_d_and_wedge(seed, k_src, k_tgt):
    rng = np.random.default_rng(seed)
    amap = _random_affine(rng, k_src, k_tgt)
    a = _random_form(rng, TWO_TERM, k_tgt, 1)
    b = _random_form(rng, TWO_TERM, k_tgt, 0)
    pa, pb = pullback_affine(a, amap), pullback_affine(b, amap)
    assert pullback_affine(exterior_derivative(a), amap).max_abs_difference(exterior_derivative(pa)) < 1e-10
    assert pullback_affine(wedge(a, b), amap).max_abs_difference(wedge(pa, pb)) < 1e-10


@settings(max_examples=10)
@given(seeds, st.integers(1, 2))
def test_gauge_action_is_right_action(seed, k):
    rng = np.random.default_rng(seed)
    V = GradedVectorSpace({0: 2, 1: 2})
    om = random_flat(rng, V, k)
    f, g = nil_gauge(rng, V, k), odd_gauge(rng, V, k)
    fg = GaugeElement(wedge(f.f, g.f), wedge(g.inverse, f.inverse))
    lhs = gauge_act(gauge_act(om, f), g)
    assert lhs.max_abs_difference(gauge_act(om, fg)) < 1e-10


@settings(max_examples=10)
@given(seeds, st.integers(1, 2))
def test_gauge_preserves_flatness(seed, k):
    rng = np.random.default_rng(seed)
    V = GradedVectorSpace({0: 1, 1: 2})
    om = SuperconnectionMC(random_flat(rng, V, k, odd=False))
    out = gauge_act(om, nil_gauge(rng, V, k))
    assert out.residual <= om.residual + 1e-9
