"""Seeded random test data: flat superconnections, gauges, forms and A∞ components.

Every generator takes a ``numpy.random.Generator`` so that scenes and
reports are reproducible from a seed.
"""

from __future__ import annotations

import itertools

import numpy as np

from .chen_engine import HomForm
from .graded_core import GradedVectorSpace
from .poly_forms import GaugeElement, PolyForm, gauge_act, wedge


def scalar_form(rng, k, p, deg=2, scale=1.0):
    """Random scalar ``p``-form on ``Δ_k`` with polynomial degree at most ``deg``."""
    S = GradedVectorSpace({0: 1})
    terms = {}
    for I in itertools.combinations(range(k), p):
        for e in itertools.product(range(deg + 1), repeat=k):
            if sum(e) <= deg:
                terms[(I, e)] = [[scale * rng.uniform(-1, 1)]]
    return PolyForm(S, k, terms)


def nil_gauge(rng, V, k, deg=2, factors=3, scale=1.0):
    """Product of ``1 + X`` with ``X`` a polynomial times a rank-one nilpotent in one degree block."""
    N = V.total_dim
    one = PolyForm.identity(V, k)
    f, finv = one, one
    degs = V.basis_degrees()
    blocks = [d for d in V.degrees() if V.dim(d) >= 2]
    if not blocks:
        return GaugeElement(f, finv)
    for _ in range(factors):
        d = blocks[rng.integers(len(blocks))]
        sel = (degs == d).astype(float)
        u = rng.uniform(-1, 1, N) * sel
        v = rng.uniform(-1, 1, N) * sel
        v -= (v @ u) / (u @ u) * u
        M = scale * np.outer(u, v)
        terms = {((), e): rng.uniform(-1, 1) * M
                 for e in itertools.product(range(deg + 1), repeat=k) if sum(e) <= deg}
        X = PolyForm(V, k, terms)
        f = wedge(f, one + X)
        finv = wedge(one - X, finv)
    return GaugeElement(f, finv)


def odd_gauge(rng, V, k, scale=1.0):
    """``1 + θ ⊗ M`` with ``θ`` a scalar 1-form and ``M`` of degree -1 (squares to zero)."""
    N = V.total_dim
    mask = (V.basis_degrees()[:, None] - V.basis_degrees()[None, :]) == -1
    X = PolyForm.from_scalar(V, scalar_form(rng, k, 1), scale * rng.uniform(-1, 1, (N, N)) * mask)
    one = PolyForm.identity(V, k)
    return GaugeElement(one + X, one - X)


def constant_differential(rng, V):
    """A random degree +1 map with square zero (only adjacent degrees, rank limited)."""
    N = V.total_dim
    D = np.zeros((N, N))
    degs = V.degrees()
    for d in degs:
        if V.dim(d + 1) == 0:
            continue
        rows, cols = V.slice(d + 1), V.slice(d)
        D[rows, cols] = rng.uniform(-1, 1, (V.dim(d + 1), V.dim(d)))
    # make D square to zero by killing the image of each block in the next block's domain
    for d in degs:
        nxt = V.slice(d + 1)
        prev = V.slice(d)
        if V.dim(d + 1) and V.dim(d + 2):
            A = D[V.slice(d + 2), nxt]
            B = D[nxt, prev]
            # project the columns of B onto the kernel of A
            _, s, vt = np.linalg.svd(A)
            r = int((s > 1e-12).sum())
            K = vt[r:].T
            D[nxt, prev] = K @ (K.T @ B)
    return D


def random_flat(rng, V, k, odd_scale=0.6, nil_scale=0.6, odd=True):
    """Flat superconnection on ``Δ_k``: a constant differential gauged twice."""
    om = PolyForm.constant(V, k, constant_differential(rng, V))
    if odd and k > 0:
        om = gauge_act(om, odd_gauge(rng, V, k, odd_scale))
    om = gauge_act(om, nil_gauge(rng, V, k, scale=nil_scale))
    return om


def random_flat_connection(rng, n, k, scale=0.6):
    """Ordinary flat connection ``g^{-1} dg`` on a degree-0 bundle of rank ``n``."""
    V = GradedVectorSpace({0: n})
    return gauge_act(PolyForm.zero(V, k), nil_gauge(rng, V, k, scale=scale))


def random_hom_form(rng, source, target, k, degree, deg=1, scale=0.5):
    """Homogeneous ``Hom(source, target)``-valued form of total degree ``degree``."""
    sd = source.basis_degrees()
    td = target.basis_degrees()
    terms = {}
    for p in range(k + 1):
        mask = (td[:, None] - sd[None, :]) == degree - p
        if not mask.any():
            continue
        for I in itertools.combinations(range(k), p):
            for e in itertools.product(range(deg + 1), repeat=k):
                if sum(e) <= deg:
                    terms[(I, e)] = scale * rng.uniform(-1, 1, mask.shape) * mask
    return HomForm(source, target, k, terms)


def degree_mask(out_deg, in_deg, n, shift):
    """Boolean mask of entries ``(o, i_1..i_n)`` with suspended degree change ``shift``."""
    so = np.asarray(out_deg) - 1
    si = np.asarray(in_deg) - 1
    tot = so.reshape((-1,) + (1,) * n)
    ins = sum(si.reshape((1,) * (i + 1) + (-1,) + (1,) * (n - i - 1)) for i in range(n))
    return (tot - ins) == shift


def random_morphism_components(rng, out_deg, in_deg, n_max, scale=0.3, linear=None):
    """Random degree-0 components ``ψ_1..ψ_{n_max}`` (``ψ_1`` defaults to near-identity)."""
    maps = {}
    d_out, d_in = len(out_deg), len(in_deg)
    for n in range(1, n_max + 1):
        mask = degree_mask(out_deg, in_deg, n, 0)
        T = scale * rng.uniform(-1, 1, mask.shape) * mask
        if n == 1:
            T = (np.eye(d_out, d_in) if linear is None else linear) + T
        maps[n] = T
    return maps
