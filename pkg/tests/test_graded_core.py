import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artifact.graded_core import (
    DimensionError,
    GradedMap,
    GradedVectorSpace,
    compose_graded,
    desuspension_sign,
    homogeneous_parts,
    koszul_sign,
    permutation_sign,
)


def _random_map(rng, source, target, degree):
    blocks = {k: rng.uniform(-1, 1, (target.dim(k + degree), source.dim(k)))
              for k in source.degrees() if target.dim(k + degree)}
    return GradedMap(source, target, degree, blocks)


def test_space_drops_zero_degrees_and_counts_total():
    V = GradedVectorSpace({0: 2, 1: 0, -1: 3})
    assert V.dims == {-1: 3, 0: 2}
    assert V.total_dim == 5
    assert V == GradedVectorSpace({-1: 3, 0: 2})


def test_negative_dimension_rejected():
    with pytest.raises(DimensionError):
        GradedVectorSpace({0: -1})


def test_suspension_shifts_degrees_and_preserves_dimension():
    V = GradedVectorSpace({0: 1, 1: 2})
    sV = V.shift()
    assert sV.dims == {-1: 1, 0: 2}
    assert V.shift().shift() == V.shift(2)
    assert sV.total_dim == V.total_dim


def test_block_shape_mismatch_rejected():
    V = GradedVectorSpace({0: 1, 1: 1})
    with pytest.raises(DimensionError):
        GradedMap(V, V, 1, {0: np.zeros((2, 1))})


def test_identity_composition_returns_map(rng):
    V = GradedVectorSpace({0: 2, 1: 1})
    W = GradedVectorSpace({0: 1, 1: 3})
    f = _random_map(rng, V, W, 1)
    out = compose_graded(GradedMap.identity(W), f)
    assert out.degree == 1
    np.testing.assert_array_equal(out.to_dense(), f.to_dense())


def test_composition_degrees_add(rng):
    V = GradedVectorSpace({0: 2, 1: 2})
    f = _random_map(rng, V, V, 1)
    g = _random_map(rng, V, V, -1)
    assert compose_graded(g, f).degree == 0


def test_two_degree_space_kills_degree_two_composite():
    V = GradedVectorSpace({0: 1, 1: 1})
    f = GradedMap(V, V, -1, {1: [[2.0]]})
    g = GradedMap(V, V, -1, {1: [[3.0]]})
    gf = compose_graded(g, f)
    assert gf.degree == -2
    assert not gf.to_dense().any()


def test_compose_requires_matching_spaces(rng):
    V = GradedVectorSpace({0: 2})
    W = GradedVectorSpace({0: 3})
    with pytest.raises(DimensionError):
        compose_graded(GradedMap.identity(V), GradedMap.identity(W))


def test_from_dense_rejects_off_degree_entries():
    V = GradedVectorSpace({0: 1, 1: 1})
    with pytest.raises(DimensionError):
        GradedMap.from_dense(np.ones((2, 2)), V, V, 0)


def test_homogeneous_parts_reassemble():
    V = GradedVectorSpace({0: 1, 1: 2})
    M = np.arange(9.0).reshape(3, 3)
    parts = homogeneous_parts(M, V)
    assert set(parts) == {-1, 0, 1}
    np.testing.assert_array_equal(sum(parts.values()), M)


def test_koszul_sign_examples():
    assert koszul_sign([0, 2], [4]) == 1
    assert koszul_sign([1], [1]) == -1
    assert desuspension_sign([1, 2, 1]) == 1


def test_desuspension_sign_matches_closed_formula():
    for degs in itertools.product(range(-2, 3), repeat=3):
        n = len(degs)
        want = (-1) ** sum(d * (n - i) for i, d in enumerate(degs, start=1))
        assert desuspension_sign(degs) == want


@given(st.integers(0, 2**31 - 1))
def test_compose_graded_is_associative(seed):
    rng = np.random.default_rng(seed)
    spaces = [GradedVectorSpace({d: int(rng.integers(0, 3)) for d in (-1, 0, 1)}) for _ in range(4)]
    degs = rng.integers(-1, 2, 3)
    f = _random_map(rng, spaces[0], spaces[1], int(degs[0]))
    g = _random_map(rng, spaces[1], spaces[2], int(degs[1]))
    h = _random_map(rng, spaces[2], spaces[3], int(degs[2]))
    left = compose_graded(h, compose_graded(g, f)).to_dense()
    right = compose_graded(compose_graded(h, g), f).to_dense()
    np.testing.assert_allclose(left, right, atol=1e-12)


def _crossing_sign(degrees, perm):
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign *= (-1) ** (degrees[perm[i]] * degrees[perm[j]])
    return sign


@given(st.lists(st.integers(-3, 3), min_size=1, max_size=6), st.randoms(use_true_random=False))
def test_permutation_sign_is_multiplicative(degrees, rnd):
    n = len(degrees)
    p = list(range(n))
    rnd.shuffle(p)
    q = list(range(n))
    rnd.shuffle(q)
    permuted = [degrees[i] for i in p]
    composite = [p[i] for i in q]
    assert permutation_sign(degrees, p) == _crossing_sign(degrees, p)
    assert permutation_sign(degrees, composite) == (
        permutation_sign(degrees, p) * permutation_sign(permuted, q))


@given(st.lists(st.integers(-3, 3), max_size=4), st.lists(st.integers(-3, 3), max_size=4))
def test_block_swap_sign_matches_permutation(a, b):
    degrees = a + b
    perm = list(range(len(a), len(a) + len(b))) + list(range(len(a)))
    assert koszul_sign(a, b) == permutation_sign(degrees, perm)
