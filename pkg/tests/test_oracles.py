from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.chen_engine import simplex_integral
from artifact.generators import scalar_form
from artifact.graded_core import GradedVectorSpace
from artifact.oracles import (
    TransportProblem,
    brute_simplex_integral,
    matrix_exponential,
    monomial_simplex_integral,
    parallel_transport_ode,
)
from artifact.poly_forms import PolyForm

NILPOTENT = np.array([[0.0, 1.0], [0.0, 0.0]])


def test_zero_connection_gives_identity():
    out = parallel_transport_ode(TransportProblem((np.zeros((3, 3)),)))
    np.testing.assert_array_equal(out.matrix, np.eye(3))


def test_constant_connection_is_exponential():
    out = parallel_transport_ode(TransportProblem((NILPOTENT,)))
    np.testing.assert_allclose(out.matrix, [[1.0, 1.0], [0.0, 1.0]], atol=1e-14)


def test_diagonal_linear_connection():
    out = parallel_transport_ode(TransportProblem((np.zeros((2, 2)), np.diag([1.0, 2.0]))))
    np.testing.assert_allclose(out.matrix, np.diag([np.exp(0.5), np.e]), atol=1e-12)


def test_forward_direction_differs_from_reversed():
    coeffs = (np.zeros((2, 2)), NILPOTENT, np.array([[0.0, 0.0], [1.0, 0.0]]))
    fwd = parallel_transport_ode(TransportProblem(coeffs, "forward")).matrix
    rev = parallel_transport_ode(TransportProblem(coeffs, "reversed")).matrix
    assert np.abs(fwd - rev).max() > 1e-3


def test_too_few_steps_rejected():
    with pytest.raises(ValueError):
        parallel_transport_ode(TransportProblem((NILPOTENT,)), steps=8)


def test_transport_problem_reads_form():
    V = GradedVectorSpace({0: 2})
    A, B = np.eye(2), NILPOTENT
    a = PolyForm(V, 1, {((0,), (0,)): A, ((0,), (2,)): B})
    p = TransportProblem.from_form(a)
    np.testing.assert_array_equal(p(0.25), A + 0.75**2 * B)


def test_step_halving_is_stable(rng):
    for n in (2, 3):
        coeffs = tuple(rng.uniform(-1, 1, (n, n)) for _ in range(3))
        p = TransportProblem(coeffs)
        coarse = parallel_transport_ode(p, 128).matrix
        fine = parallel_transport_ode(p, 256).matrix
        assert np.abs(coarse - fine).max() < 1e-9


def test_simplex_volumes_and_moment():
    assert monomial_simplex_integral((0, 0)) == Fraction(1, 2)
    assert monomial_simplex_integral((1, 0)) == Fraction(1, 3)
    assert monomial_simplex_integral((0, 0, 0)) == Fraction(1, 6)
    assert brute_simplex_integral({(1, 0): 1}, 2) == pytest.approx(1 / 3)


def test_matrix_exponential_nilpotent():
    np.testing.assert_allclose(matrix_exponential(NILPOTENT), [[1.0, 1.0], [0.0, 1.0]])


@given(st.integers(0, 2**31 - 1), st.integers(1, 3))
def test_exact_integral_agrees_with_quadrature(seed, k):
    form = scalar_form(np.random.default_rng(seed), k, k, deg=4)
    np.testing.assert_allclose(simplex_integral(form), brute_simplex_integral(form), atol=1e-12)
