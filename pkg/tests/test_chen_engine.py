import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact.chen_engine import (
    ChenConfig,
    TruncationError,
    chen_integrand,
    holonomy_series,
    psi_bar_components,
    psi_bar_n_eval,
    psi_bar_sign,
    psi_n_eval,
    series_tail_bound,
)
from artifact.generators import scalar_form
from artifact.graded_core import GradedVectorSpace
from artifact.oracles import brute_chen_integral
from artifact.poly_forms import PolyForm, pullback_affine
from artifact.simplex_geom import degeneracy_map

SCALAR = GradedVectorSpace({0: 1})
PAIR = GradedVectorSpace({0: 2})
TWO_TERM = GradedVectorSpace({0: 1, 1: 1})
PHI = np.array([[0.0, 1.0], [0.0, 0.0]])
A = np.array([[1.0, 2.0], [0.0, 3.0]])
B = np.array([[0.0, 1.0], [4.0, 0.0]])


def _dt(M, space=PAIR, k=1, index=(0,), exps=None):
    exps = (0,) * k if exps is None else exps
    return PolyForm(space, k, {(index, exps): M})


def _random_connection(rng, n, deg=2, scale=1.0):
    V = GradedVectorSpace({0: n})
    return PolyForm(V, 1, {((0,), (j,)): scale * rng.uniform(-1, 1, (n, n)) for j in range(deg + 1)})


def test_sign_factors():
    assert psi_bar_sign(1, 1) == -1
    assert psi_bar_sign(2, 1) == -1
    assert psi_bar_sign(1, 2) == 1
    assert [psi_bar_sign(k, 1) for k in range(5)] == [
        (-1) ** (k * (k - 1) // 2 + k) for k in range(5)]


def test_integrand_single_slot_on_interval():
    val = chen_integrand(1, 1, [_dt(A)], (np.array([0.3]), np.zeros(0)))
    np.testing.assert_array_equal(val, -A)


def test_integrand_two_slots_on_interval():
    val = chen_integrand(1, 2, [_dt(A), _dt(B)], (np.array([0.6, 0.3]), np.zeros(0)))
    np.testing.assert_allclose(val, A @ B)


def test_integrand_vanishes_with_function_slot():
    f = PolyForm(PAIR, 2, {((), (1, 0)): A})
    a = _dt(B, k=2)
    node = (np.array([0.7, 0.2]), np.array([0.35]))
    assert not chen_integrand(2, 2, [a, f], node).any()


def test_psi_one_examples():
    assert psi_n_eval([_dt([[1.0]], SCALAR)]).value[0, 0] == pytest.approx(-1.0)
    top = _dt([[3.0]], SCALAR, k=2, index=(0, 1))
    assert psi_n_eval([top]).value[0, 0] == pytest.approx(1.5)


def test_psi_two_on_interval():
    val = psi_n_eval([_dt(A), _dt(B)]).value
    np.testing.assert_allclose(val, A @ B / 2, atol=1e-12)


def test_psi_bar_examples():
    np.testing.assert_allclose(psi_bar_n_eval([_dt(A)]).value, A, atol=1e-14)
    c = 3.0
    top = _dt(c * PHI, TWO_TERM, k=2, index=(0, 1))
    np.testing.assert_allclose(psi_bar_n_eval([top]).value, -c / 2 * PHI, atol=1e-14)


def test_function_slot_kills_psi_bar(rng):
    f = PolyForm(PAIR, 2, {((), (1, 0)): A, ((), (0, 0)): B})
    a = _dt(B, k=2, index=(1,), exps=(1, 0))
    for word in ([f, a], [a, f], [a, f, a]):
        assert np.abs(psi_bar_n_eval(word).value).max() < 1e-12


def test_psi_bar_components_are_exponential_terms():
    comps = psi_bar_components(_dt(A), 5)
    term = np.eye(2)
    for n, c in enumerate(comps, start=1):
        term = term @ A / n
        np.testing.assert_allclose(c, term, atol=1e-10)


def test_holonomy_examples():
    np.testing.assert_allclose(holonomy_series(_dt(PHI)).to_dense(), [[1.0, 1.0], [0.0, 1.0]], atol=1e-9)
    np.testing.assert_array_equal(holonomy_series(PolyForm.zero(PAIR, 1)).to_dense(), np.eye(2))
    c = 2.5
    H = holonomy_series(_dt(c * PHI, TWO_TERM, k=2, index=(0, 1)))
    assert H.degree == -1
    np.testing.assert_allclose(H.to_dense(), -c / 2 * PHI, atol=1e-12)


def test_series_mode_matches_transport_mode(rng):
    a = _random_connection(rng, 3, scale=0.5)
    transport = holonomy_series(a).to_dense()
    series = holonomy_series(a, ChenConfig(mode="series", max_n=25)).to_dense()
    np.testing.assert_allclose(series, transport, atol=1e-8)


def test_series_mode_reports_truncation(rng):
    a = _random_connection(rng, 2, scale=3.0)
    with pytest.raises(TruncationError):
        holonomy_series(a, ChenConfig(mode="series", max_n=3))


def test_tail_bound_decreases_beyond_constant(rng):
    a = _random_connection(rng, 2)
    bounds = [series_tail_bound(a, n) for n in range(1, 40)]
    C = sum(np.linalg.norm(M, 2) for M in a.terms.values())
    start = int(np.ceil(C))
    assert all(x >= y for x, y in zip(bounds[start:], bounds[start + 1:]))
    assert bounds[-1] < 1e-10


def test_repeated_evaluation_is_bit_identical(rng):
    a = _random_connection(rng, 2)
    first = holonomy_series(a).to_dense()
    assert np.array_equal(first, holonomy_series(a).to_dense())


@pytest.mark.parametrize("degs", [(1, 1), (2, 0), (0, 2), (1, 0)])
def test_psi_two_matches_brute_force(degs, rng):
    forms = [scalar_form(rng, 2, p, deg=1) for p in degs]
    ours = psi_n_eval(forms, ChenConfig(tol=1e-10)).value
    ref = brute_chen_integral(forms, 2, panels=12, order=4)
    np.testing.assert_allclose(ours, ref, atol=1e-6)


@settings(max_examples=8)
@given(st.integers(0, 2**31 - 1), st.sampled_from([1, 2]))
def test_degenerate_pullbacks_vanish(seed, i):
    a = _random_connection(np.random.default_rng(seed), 2)
    pulled = pullback_affine(a, degeneracy_map(i, 2))
    comps = psi_bar_components(pulled, 4)
    assert max(np.abs(c).max() for c in comps) <= 1e-7
