import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from artifact.chen_engine import ChenConfig, HomForm
from artifact.generators import nil_gauge, random_flat, random_flat_connection, random_hom_form
from artifact.graded_core import GradedVectorSpace
from artifact.holonomy import (
    FaceCompatibilityError,
    FormValuedComplex,
    HolonomyError,
    LieAlgebraRep,
    MorphismChainDatum,
    chain_gauge_defect,
    factorization_defect,
    functor_equation_residual,
    gauge_equivariance_defect,
    gauge_pushforward_defect,
    hol_morphism_chain,
    hol_object,
    integrate_rep,
    naturality_defect,
    pullback_lie_algebra_simplex,
)
from artifact.oracles import TransportProblem, brute_simplex_integral, parallel_transport_ode
from artifact.poly_forms import FormError, PolyForm
from artifact.scenes import sphere_scene, triangle_scene
from artifact.simplicial_reps import FiniteSimplicialSet, structure_residual, unitality_check

seeds = st.integers(0, 2**31 - 1)
SCALAR = GradedVectorSpace({0: 1})
TWO_TERM = GradedVectorSpace({0: 1, 1: 1})
PHI = np.array([[0.0, 1.0], [0.0, 0.0]])


def _scalar(k, index, exps=None, c=1.0):
    exps = (0,) * k if exps is None else exps
    return PolyForm(SCALAR, k, {(index, exps): [[c]]})


def _sl2():
    f = np.zeros((3, 3, 3))

    def bracket(a, b, c, v):
        f[c, a, b] = v
        f[c, b, a] = -v

    bracket(2, 0, 0, 2.0)   # [h, e] = 2e
    bracket(2, 1, 1, -2.0)  # [h, f] = -2f
    bracket(0, 1, 2, 1.0)   # [e, f] = h
    mats = {(0,): np.array([[0.0, 1.0], [0.0, 0.0]]),
            (1,): np.array([[0.0, 0.0], [1.0, 0.0]]),
            (2,): np.diag([1.0, -1.0])}
    return f, mats


def test_face_mismatch_names_simplex_and_face():
    cx = FiniteSimplicialSet([(0, 1, 2)])
    V = GradedVectorSpace({0: 1})
    forms = {(0, 1, 2): PolyForm.zero(V, 2), (1, 2): _scalar(1, (0,))}
    with pytest.raises(FaceCompatibilityError) as info:
        FormValuedComplex(cx, V, forms)
    assert info.value.simplex == (0, 1, 2) and info.value.face_index == 0


def test_non_flat_form_rejected():
    cx = FiniteSimplicialSet([(0, 1, 2)])
    V = GradedVectorSpace({0: 2})
    A, B = np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0, 0.0], [1.0, 0.0]])
    curved = PolyForm(V, 2, {((0,), (0, 0)): A, ((1,), (0, 0)): B})
    with pytest.raises(FormError):
        FormValuedComplex(cx, V, {(0, 1, 2): curved})


def test_missing_simplices_carry_zero_form():
    cx = FiniteSimplicialSet([(0, 1)])
    X = FormValuedComplex(cx, SCALAR, {})
    assert not X.form((0, 1)).terms


def test_ordinary_connection_matches_transport(rng):
    form = random_flat_connection(rng, 3, 1)
    H = hol_object(form).to_dense()
    ref = parallel_transport_ode(TransportProblem.from_form(form)).matrix
    assert np.linalg.norm(H - ref, 2) < 1e-6


def test_object_holonomy_examples():
    H = hol_object(PolyForm.zero(TWO_TERM, 2))
    assert H.degree == -1 and not H.to_dense().any()
    c = 1.7
    H = hol_object(PolyForm(TWO_TERM, 2, {((0, 1), (0, 0)): c * PHI}))
    np.testing.assert_allclose(H.to_dense(), -c / 2 * PHI, atol=1e-12)
    D = np.array([[0.0, 0.0], [1.0, 0.0]])
    np.testing.assert_array_equal(hol_object(PolyForm.constant(TWO_TERM, 0, D)).to_dense(), D)


def test_identity_morphism_maps_to_unit_cochain(rng):
    V = GradedVectorSpace({0: 2})
    for k in (0, 1, 2):
        om = random_flat_connection(rng, 2, k) if k else PolyForm.zero(V, 0)
        datum = MorphismChainDatum([om, om], [PolyForm.identity(V, k)])
        H = hol_morphism_chain(datum).to_dense()
        np.testing.assert_allclose(H, np.eye(2) if k == 0 else 0.0, atol=1e-10)


def test_chain_on_a_point(rng):
    V = GradedVectorSpace({0: 2})
    T1, T2 = rng.uniform(-1, 1, (2, 2, 2))
    z = PolyForm.zero(V, 0)
    one = hol_morphism_chain(MorphismChainDatum([z, z], [PolyForm.constant(V, 0, T1)]))
    np.testing.assert_array_equal(one.to_dense(), T1)
    two = hol_morphism_chain(MorphismChainDatum(
        [z, z, z], [PolyForm.constant(V, 0, T1), PolyForm.constant(V, 0, T2)]))
    assert two.degree == -1 and not two.to_dense().any()


def test_chain_degree(rng):
    V0, V1 = GradedVectorSpace({0: 1, 1: 1}), GradedVectorSpace({0: 1, 1: 2})
    oms = [random_flat(rng, V0, 1), random_flat(rng, V1, 1)]
    eta = random_hom_form(rng, V1, V0, 1, 1)
    assert hol_morphism_chain(MorphismChainDatum(oms, [eta])).degree == 0


def test_integrate_single_vertex():
    cx = FiniteSimplicialSet([(0,)])
    D = np.array([[0.0, 0.0], [1.0, 0.0]])
    rep = integrate_rep(FormValuedComplex(cx, TWO_TERM, {(0,): PolyForm.constant(TWO_TERM, 0, D)}))
    np.testing.assert_array_equal(rep((0,)), D)
    assert structure_residual(rep) == 0.0


def test_integrate_sphere_triangles_integrate_eta():
    X = sphere_scene()
    rep = integrate_rep(X)
    for t in X.complex.simplices(2):
        np.testing.assert_allclose(rep(t), -brute_simplex_integral(X.form(t)), atol=1e-12)
    assert unitality_check(rep) == (True, 0.0)


def test_integrate_reports_failing_simplex():
    X = triangle_scene()
    with pytest.raises(HolonomyError) as info:
        integrate_rep(X, ChenConfig(tol=1e-300, max_refine=0))
    assert info.value.simplex in X.complex.all_simplices()


def test_lie_abelian_line():
    A = np.array([[0.0, 1.0], [2.0, 0.0]])
    rep = LieAlgebraRep(np.zeros((1, 1, 1)), GradedVectorSpace({0: 2}), {(0,): A})
    om = pullback_lie_algebra_simplex(rep, [_scalar(1, (0,), c=0.5)])
    assert om.form.allclose(PolyForm(rep.space, 1, {((0,), (0,)): 0.5 * A}))


def test_lie_sl2_holonomy_is_exponential():
    f, mats = _sl2()
    rep = LieAlgebraRep(f, GradedVectorSpace({0: 2}), mats)
    assert rep.mc_residual() < 1e-14
    zero = PolyForm.zero(SCALAR, 1)
    om = pullback_lie_algebra_simplex(rep, [zero, zero, _scalar(1, (0,))])
    ref = parallel_transport_ode(TransportProblem.from_form(om.form)).matrix
    np.testing.assert_allclose(hol_object(om).to_dense(), expm(mats[(2,)]), atol=1e-9)
    np.testing.assert_allclose(ref, expm(mats[(2,)]), atol=1e-9)


def test_lie_ordinary_rep_on_triangle_has_no_higher_holonomy():
    f, mats = _sl2()
    rep = LieAlgebraRep(f, GradedVectorSpace({0: 2}), mats)
    # θ = g^{-1} dg-type flat form: θ^h = dt_1, θ^e = θ^f = 0 is flat
    zero = PolyForm.zero(SCALAR, 2)
    om = pullback_lie_algebra_simplex(rep, [zero, zero, _scalar(2, (0,))])
    assert not hol_object(om).to_dense().any()


def test_lie_rejects_bad_data():
    f, mats = _sl2()
    bad = dict(mats)
    bad[(2,)] = -mats[(2,)]
    rep = LieAlgebraRep(f, GradedVectorSpace({0: 2}), bad)
    assert rep.mc_residual() > 1.0
    zero = PolyForm.zero(SCALAR, 1)
    with pytest.raises(FormError):
        pullback_lie_algebra_simplex(rep, [zero, zero, _scalar(1, (0,))])
    good = LieAlgebraRep(f, GradedVectorSpace({0: 2}), mats)
    # dθ^h + [θ^e, θ^f] term: θ^e = dt_1, θ^f = dt_2, θ^h = 0 is not flat
    z2 = PolyForm.zero(SCALAR, 2)
    with pytest.raises(FormError):
        pullback_lie_algebra_simplex(good, [_scalar(2, (0,)), _scalar(2, (1,)), z2])


def test_lie_two_term_rep():
    phi = PHI
    rep = LieAlgebraRep(np.zeros((2, 2, 2)), TWO_TERM, {(0, 1): phi})
    assert rep.mc_residual() == 0.0
    om = pullback_lie_algebra_simplex(rep, [_scalar(2, (0,)), _scalar(2, (1,))])
    np.testing.assert_allclose(hol_object(om).to_dense(), -phi / 2, atol=1e-12)


@settings(max_examples=6)
@given(seeds, st.integers(1, 2))
def test_gauge_equivariance(seed, k):
    rng = np.random.default_rng(seed)
    V = GradedVectorSpace({0: 2, 1: 2})
    om = random_flat(rng, V, k)
    assert gauge_equivariance_defect(om, nil_gauge(rng, V, k)) < 1e-6


def test_gauge_equivariance_needs_function_gauge(rng):
    from artifact.generators import odd_gauge

    V = GradedVectorSpace({0: 2, 1: 2})
    with pytest.raises(ValueError):
        gauge_equivariance_defect(random_flat(rng, V, 1), odd_gauge(rng, V, 1))


def test_gauge_pushforward(rng):
    for k in (1, 2):
        assert gauge_pushforward_defect(nil_gauge(rng, GradedVectorSpace({0: 2, 1: 2}), k)) < 1e-8


def test_chain_gauge_naturality(rng):
    V = GradedVectorSpace({0: 2, 1: 2})
    oms = [random_flat(rng, V, 1), random_flat(rng, V, 1)]
    eta = random_hom_form(rng, V, V, 1, 0)
    gauges = [nil_gauge(rng, V, 1), nil_gauge(rng, V, 1)]
    assert chain_gauge_defect(oms, [eta], gauges) < 1e-6


@pytest.mark.parametrize("idx", [[0, 2], [1], [0, 0], [0, 1, 1], [0, 1, 2]])
def test_naturality_on_triangle(idx):
    X = triangle_scene()
    rep = integrate_rep(X)
    assert naturality_defect(X, rep, (0, 1, 2), idx) < 1e-6


def test_naturality_rejects_unsorted_indices():
    X = triangle_scene()
    with pytest.raises(ValueError):
        naturality_defect(X, integrate_rep(X), (0, 1, 2), [2, 0])


def test_functor_equation_single_morphism(rng):
    V0, V1 = GradedVectorSpace({0: 1, 1: 1}), GradedVectorSpace({0: 1, 1: 2})
    oms = [random_flat(rng, V0, 1), random_flat(rng, V1, 1)]
    for degree in (0, 1):
        eta = random_hom_form(rng, V1, V0, 1, degree)
        assert functor_equation_residual(oms, [eta]) < 1e-5


def test_factorization_small(rng):
    V = GradedVectorSpace({0: 2})
    forms = [PolyForm(V, 2, random_hom_form(rng, V, V, 2, 1).terms) for _ in range(2)]
    assert factorization_defect(forms) < 1e-6


def test_chain_rejects_wrong_spaces(rng):
    V0, V1 = GradedVectorSpace({0: 1}), GradedVectorSpace({0: 2})
    eta = HomForm(V0, V1, 1, {})
    with pytest.raises(ValueError):
        MorphismChainDatum([PolyForm.zero(V0, 1), PolyForm.zero(V1, 1)], [eta])
