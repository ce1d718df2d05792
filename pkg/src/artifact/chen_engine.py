"""Gugenheim's map ``ψ = S ∘ Chen`` and its sign twist ``ψ̄`` on simplices.

Evaluation strategy
-------------------
Pull a form ``a`` back along a path family ``[0,1] x I^m -> Δ_k`` and keep
the part containing ``dt``; write it as ``dt ∧ β(t)`` with
``β = Σ_S β_S dx_S``.  Moving every ``dt_i`` to the front costs exactly the
desuspension sign in Chen's definition, so

    ψ_n(s a_1 ⊗ … ⊗ s a_n) = ∫_{I^m} [ ∫_{t_1 >= … >= t_n} β_1(t_1) ⋯ β_n(t_n) ]_top

where products are taken in ``𝒜 = End V ⊗ Λ(dx_1..dx_m)`` with the Koszul
rule, and ``[·]_top`` is the coefficient of ``dx_1∧…∧dx_m``.  The time-ordered
integrals of all word lengths are generated at once by the linear ODE
``G' = -β G`` in a faithful matrix representation of ``𝒜``; distinct forms
and fixed word lengths are separated by placing the inputs on the
superdiagonal of a larger block space.  The ODE is integrated piecewise
between the kinks of the family with a sixth-order Magnus scheme, and the
cube coordinates ``x`` by Gauss-Legendre quadrature on ordering sectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from itertools import combinations, permutations

import numpy as np
from scipy.linalg import expm

from .graded_core import GradedMap, GradedVectorSpace, desuspension_sign, homogeneous_parts
from .poly_forms import PolyForm, merge_sign
from .simplex_geom import (
    AffineSimplexMap,
    IgusaFamily,
    NonSmoothPointError,
    PathFamily,
    theta_jacobian,
    theta_path,
)

__all__ = [
    "ChenConfig",
    "AccuracyError",
    "TruncationError",
    "CochainValue",
    "SeriesResult",
    "psi_bar_sign",
    "chen_integrand",
    "family_chen",
    "word_series",
    "psi_n_eval",
    "psi_bar_n_eval",
    "psi_bar_components",
    "psi_bar_words",
    "holonomy_series",
    "series_tail_bound",
    "simplex_integral",
]


class AccuracyError(RuntimeError):
    """Quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, estimate: float):
        super().__init__(message)
        self.estimate = estimate


class TruncationError(RuntimeError):
    """Truncated series tail is not below the tolerance."""

    def __init__(self, message: str, bound: float):
        super().__init__(message)
        self.bound = bound


@dataclass(frozen=True)
class ChenConfig:
    """Numerical settings for iterated integrals.

    ``quad_order`` is the Gauss order per cube axis, ``t_steps`` the number of
    Magnus steps per smooth piece of the path.  Each refinement level adds 4
    to the order and doubles the steps; the difference between the last two
    levels is the reported error estimate.
    """

    max_n: int = 8
    tol: float = 1e-8
    quad_order: int = 8
    subdivide_t: bool = True
    jitter_seed: int = 0
    t_steps: int = 2
    max_refine: int = 3
    mode: str = "transport"
    strict: bool = True

    def __post_init__(self):
        if self.max_n < 1:
            raise ValueError("max_n must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.quad_order < 2:
            raise ValueError("quad_order must be >= 2")
        if self.mode not in ("transport", "series"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class CochainValue:
    """Value of a cochain on the fundamental k-simplex, with its error estimate."""

    k: int
    value: np.ndarray
    error: float = 0.0
    degree: int | None = None

    def as_graded_map(self, space: GradedVectorSpace, target: GradedVectorSpace | None = None,
                      atol: float = 1e-9) -> GradedMap:
        target = space if target is None else target
        deg = self.degree if self.degree is not None else 0
        parts = homogeneous_parts(self.value, target, space)
        stray = max((np.abs(v).max() for d, v in parts.items() if d != deg), default=0.0)
        if stray > atol:
            raise ValueError(f"cochain value has off-degree entries ({stray:.3e})")
        return GradedMap.from_dense(parts.get(deg, np.zeros_like(self.value)), space, target, deg)


@dataclass(frozen=True)
class SeriesResult:
    matrix: np.ndarray
    error: float
    tail_bound: float = 0.0
    truncated_at: int | None = None


def psi_bar_sign(k: int, n: int) -> int:
    """``ψ̄_n = (-1)^{k(k-1)/2 + k + n - 1} ψ_n`` on cochains of degree k."""
    return -1 if (k * (k - 1) // 2 + k + n - 1) % 2 else 1


# ------------------------------------------------------------ exterior bits

@lru_cache(maxsize=None)
def _subsets(m: int) -> tuple:
    return tuple(S for r in range(m + 1) for S in combinations(range(m), r))


@lru_cache(maxsize=None)
def _wedge_tables(m: int):
    """``E_T`` matrices of left wedge multiplication by ``dx_T`` on Λ(R^m)."""
    subs = _subsets(m)
    index = {S: i for i, S in enumerate(subs)}
    tables = {}
    for T in subs:
        E = np.zeros((len(subs), len(subs)))
        for S in subs:
            sign, K = merge_sign(T, S)
            if sign:
                E[index[K], index[S]] = sign
        tables[T] = E
    return subs, tables


# ---------------------------------------------------------------- quadrature

@lru_cache(maxsize=None)
def _gauss(order: int):
    g, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (g + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def _sector_rule(m: int, order: int, sectors: bool):
    """Nodes and weights on ``I^m``; with ``sectors`` each ordering simplex separately."""
    if m == 0:
        return np.zeros((1, 0)), np.ones(1)
    g, w = _gauss(order)
    mesh = np.stack(np.meshgrid(*([g] * m), indexing="ij"), -1).reshape(-1, m)
    wm = np.prod(np.stack(np.meshgrid(*([w] * m), indexing="ij"), -1).reshape(-1, m), axis=1)
    if not sectors or m == 1:
        return mesh, wm
    # Duffy map of the cube onto {1 >= u_1 >= ... >= u_m >= 0}
    u = np.cumprod(mesh, axis=1)
    jac = np.prod(mesh ** np.arange(m - 1, -1, -1)[None, :], axis=1)
    nodes, weights = [], []
    for perm in permutations(range(m)):
        x = np.empty_like(u)
        x[:, list(perm)] = u
        nodes.append(x)
        weights.append(wm * jac)
    return np.concatenate(nodes), np.concatenate(weights)


def _jitter(x: np.ndarray, seed: int) -> np.ndarray:
    """Deterministically move nodes off ties between cube coordinates."""
    if x.shape[1] == 0:
        return x
    ext = np.concatenate([x, np.zeros((x.shape[0], 1))], axis=1)
    diffs = np.abs(ext[:, :, None] - ext[:, None, :])
    iu = np.triu_indices(ext.shape[1], 1)
    bad = np.any(diffs[:, iu[0], iu[1]] < 1e-10, axis=1)
    if not np.any(bad):
        return x
    rng = np.random.default_rng(seed)
    x = x.copy()
    x[bad] = np.clip(x[bad] + 1e-8 * rng.uniform(0.5, 1.0, size=x[bad].shape), 0.0, 1.0)
    return x


_C1 = 0.5 - math.sqrt(15) / 10
_C3 = 0.5 + math.sqrt(15) / 10


def _comm(a, b):
    return a @ b - b @ a


def _magnus6(A1, A2, A3, h):
    """Sixth-order Magnus exponent from values at the three Gauss nodes."""
    h = h[:, None, None]
    a1 = h * A2
    a2 = (math.sqrt(15) / 3) * h * (A3 - A1)
    a3 = (10.0 / 3.0) * h * (A3 - 2 * A2 + A1)
    c1 = _comm(a1, a2)
    c2 = -(1.0 / 60.0) * _comm(a1, 2 * a3 + c1)
    return a1 + a3 / 12.0 + (1.0 / 240.0) * _comm(-20 * a1 - a3 + c1, a2 + c2)


def _beta_generator(form: PolyForm, family: PathFamily, t: np.ndarray, x: np.ndarray):
    """``-L(β)`` at the given nodes in the representation of 𝒜 on Λ ⊗ W."""
    m = family.m
    subs, tables = _wedge_tables(m)
    N = form.space.total_dim
    P = form.space.parity()
    y, J = family.evaluate(t, x)
    y = np.clip(y, 0.0, 1.0)
    coeffs = form.coefficient_arrays(y)
    Q = t.shape[0]
    D = len(subs) * N
    gen = np.zeros((Q, D, D))
    for S in subs:
        beta = np.zeros((Q, N, N))
        cols = (0,) + tuple(1 + s for s in S)
        for I, arr in coeffs.items():
            if len(I) != len(S) + 1:
                continue
            det = np.linalg.det(J[:, list(I)][:, :, list(cols)]) if len(I) > 1 else J[:, I[0], 0]
            beta += det[:, None, None] * arr
        if len(S) % 2:
            beta = beta @ P
        E = tables[S]
        rows, colsE = np.nonzero(E)
        for r, c in zip(rows, colsE):
            gen[:, r * N:(r + 1) * N, c * N:(c + 1) * N] -= E[r, c] * beta
    return gen


def _transport_once(form: PolyForm, family: PathFamily, order: int, steps: int,
                    subdivide: bool, seed: int) -> np.ndarray:
    """``∫_{I^m} [G(1)]_top dx`` for ``G' = -β G``, ``G(0) = 1`` (unit included)."""
    m = family.m
    subs, _ = _wedge_tables(m)
    N = form.space.total_dim
    D = len(subs) * N
    x, wx = _sector_rule(m, order, family.needs_sectors)
    x = _jitter(x, seed)
    out = np.zeros((N, N))
    # keep the generator array near _CHUNK_BYTES
    pieces = family.breakpoints(x[:1]).shape[1] - 1 if subdivide else 1
    per_node = 3 * steps * pieces * D * D * 8
    chunk = max(1, int(_CHUNK_BYTES // per_node))
    for start in range(0, x.shape[0], chunk):
        sl = slice(start, start + chunk)
        out += _transport_chunk(form, family, x[sl], wx[sl], steps, subdivide, m, subs, N, D)
    return out


_CHUNK_BYTES = 2e8


def _transport_chunk(form, family, x, wx, steps, subdivide, m, subs, N, D):
    Q = x.shape[0]
    if subdivide:
        bps = family.breakpoints(x)
    else:
        bps = np.tile(np.array([0.0, 1.0]), (Q, 1))
    # node layout: piece p, step s, gauss node g
    edges = []
    for p in range(bps.shape[1] - 1):
        a, b = bps[:, p], bps[:, p + 1]
        for s in range(steps):
            edges.append((a + (b - a) * s / steps, a + (b - a) * (s + 1) / steps))
    nsteps = len(edges)
    lo = np.stack([e[0] for e in edges], axis=1)  # (Q, nsteps)
    hi = np.stack([e[1] for e in edges], axis=1)
    h = hi - lo
    tn = np.stack([lo + c * h for c in (_C1, 0.5, _C3)], axis=2)  # (Q, nsteps, 3)
    flat_t = tn.reshape(-1)
    flat_x = np.repeat(x, nsteps * 3, axis=0)
    gen = _beta_generator(form, family, flat_t, flat_x).reshape(Q, nsteps, 3, D, D)
    Y = np.zeros((Q, D, N))
    Y[:, :N, :] = np.eye(N)
    for s in range(nsteps):
        Om = _magnus6(gen[:, s, 0], gen[:, s, 1], gen[:, s, 2], h[:, s])
        Y = np.einsum("qab,qbc->qac", expm(Om), Y)
    top = len(subs) - 1
    Gtop = Y[:, top * N:(top + 1) * N, :]
    if m % 2:
        Gtop = Gtop @ form.space.parity()
    if m == 0:
        Gtop = Gtop - np.eye(N)[None]
    return np.einsum("q,qab->ab", wx, Gtop)


def _generator_scale(form: PolyForm, family: PathFamily) -> float:
    """Largest generator norm on a coarse probe grid, used to size Magnus steps."""
    x, _ = _sector_rule(family.m, 3, family.needs_sectors)
    x = _jitter(x, 0)
    t = np.linspace(0.01, 0.99, 17)
    flat_t = np.tile(t, x.shape[0])
    flat_x = np.repeat(x, t.size, axis=0)
    gen = _beta_generator(form, family, flat_t, flat_x)
    return float(np.abs(gen).sum(axis=2).max()) if gen.size else 0.0


def family_chen(form: PolyForm, family: PathFamily, cfg: ChenConfig = ChenConfig()) -> SeriesResult:
    """``Σ_n (-1)^n ∫_{I^m} Chen_n(form)`` along a path family, without the unit.

    ``form`` lives on the target simplex of the family.  Refinement stops
    once two successive levels agree to ``cfg.tol`` (relative to the size of
    the result, floored at 1).
    """
    if family.target_dim != form.dim:
        raise ValueError("family and form live on different simplices")
    if not form.terms:
        N = form.space.total_dim
        return SeriesResult(np.zeros((N, N)), 0.0)
    prev = None
    err = np.inf
    base = max(cfg.t_steps, int(math.ceil(_generator_scale(form, family) / family.target_dim)))
    for level in range(cfg.max_refine + 1):
        order = cfg.quad_order + 4 * level
        steps = base * 2 ** level
        cur = _transport_once(form, family, order, steps, cfg.subdivide_t, cfg.jitter_seed)
        if prev is not None:
            err = float(np.abs(cur - prev).max())
            if err <= cfg.tol * max(1.0, float(np.abs(cur).max())):
                return SeriesResult(cur, err)
        prev = cur
    if cfg.strict:
        raise AccuracyError(f"iterated integral did not converge (estimate {err:.3e})", err)
    return SeriesResult(prev, err)


# ---------------------------------------------------------- word assembly

@dataclass(frozen=True)
class _FlatSpace:
    """Stand-in value space with an explicit parity vector (blocks kept contiguous)."""

    degrees: tuple

    @property
    def total_dim(self):
        return len(self.degrees)

    def parity(self):
        return np.diag((-1.0) ** np.asarray(self.degrees))

    def basis_degrees(self):
        return np.asarray(self.degrees, dtype=int)


def word_series(slots, dim: int, family: PathFamily | None = None,
                cfg: ChenConfig = ChenConfig()) -> tuple[np.ndarray, float, list]:
    """Transport on a block-bidiagonal form.

    ``slots`` is a list of ``n+1`` diagonal entries and ``n`` superdiagonal
    entries given as ``(diag, upper)``.  Diagonal entry ``i`` is a
    :class:`PolyForm` on ``V_i``; upper entry ``i`` is a :class:`HomForm`
    from ``V_{i+1}`` to ``V_i`` or ``None``.  Blocks are kept contiguous, so
    the parity operator of the block space is block-diagonal.

    Returns the full transported matrix ``Σ_n (-1)^n ψ_n(words)``, its error
    estimate and the block offsets.
    """
    diag, upper = slots
    spaces = [d.space for d in diag]
    offsets = np.cumsum([0] + [s.total_dim for s in spaces])
    degrees = tuple(int(x) for s in spaces for x in s.basis_degrees())
    flat = _FlatSpace(degrees)
    total = offsets[-1]
    terms: dict = {}

    for i, d in enumerate(diag):
        if d is None:
            continue
        for key, M in d.terms.items():
            block = np.zeros((total, total))
            block[offsets[i]:offsets[i + 1], offsets[i]:offsets[i + 1]] = M
            terms[key] = terms[key] + block if key in terms else block
    for i, u in enumerate(upper):
        if u is None:
            continue
        rows, cols = spaces[i].total_dim, spaces[i + 1].total_dim
        for key, M in u.terms.items():
            if M.shape != (rows, cols):
                raise ValueError(f"connecting form {i + 1} has shape {M.shape}, expected {(rows, cols)}")
            block = np.zeros((total, total))
            block[offsets[i]:offsets[i] + rows, offsets[i + 1]:offsets[i + 1] + cols] = M
            terms[key] = terms[key] + block if key in terms else block
    form = _RawForm(flat, dim, terms)
    fam = family if family is not None else IgusaFamily(dim)
    res = family_chen(form, fam, cfg)
    return res.matrix, res.error, list(offsets)


class _RawForm:
    """Minimal form container for block spaces (duck-types what the engine needs)."""

    def __init__(self, space, dim, terms):
        self.space = space
        self.dim = dim
        self.terms = {k: np.asarray(v, float) for k, v in terms.items() if np.any(v)}

    def coefficient_arrays(self, points):
        return PolyForm.coefficient_arrays(self, points)


@dataclass(frozen=True)
class HomForm:
    """A ``Hom(V_src, V_tgt)``-valued polynomial form with rectangular coefficients."""

    source: GradedVectorSpace
    target: GradedVectorSpace
    dim: int
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (I, e), M in dict(self.terms).items():
            M = np.array(M, dtype=float)
            if M.shape != (self.target.total_dim, self.source.total_dim):
                raise ValueError("coefficient shape does not match the spaces")
            clean[(tuple(I), tuple(e))] = M
        object.__setattr__(self, "terms", clean)

    @classmethod
    def from_endo(cls, form: PolyForm) -> "HomForm":
        return cls(form.space, form.space, form.dim, dict(form.terms))


def _as_hom(u, src, tgt):
    if u is None:
        return None
    if isinstance(u, HomForm):
        return u
    if isinstance(u, PolyForm) and u.space == src == tgt:
        return HomForm.from_endo(u)
    raise TypeError("connecting forms must be HomForm instances (or endomorphism forms)")


def _k0_value(slots) -> np.ndarray:
    """On a point only ψ̄_1 survives: the 0-form part of the block form."""
    diag, upper = slots
    spaces = [d.space for d in diag]
    offsets = np.cumsum([0] + [s.total_dim for s in spaces])
    total = offsets[-1]
    out = np.zeros((total, total))
    pt = np.zeros((1, 0))
    for i, d in enumerate(diag):
        for I, arr in d.coefficient_arrays(pt).items():
            if I == ():
                out[offsets[i]:offsets[i + 1], offsets[i]:offsets[i + 1]] += arr[0]
    for i, u in enumerate(upper):
        if u is None:
            continue
        for (I, _), M in u.terms.items():
            if I == ():
                out[offsets[i]:offsets[i + 1], offsets[i + 1]:offsets[i + 2]] += M
    return out


def psi_bar_words(diag, upper, cfg: ChenConfig = ChenConfig(),
                  family: PathFamily | None = None) -> tuple[np.ndarray, float, list]:
    """``Σ_N ψ̄_N`` over all words in a block-bidiagonal form, on the fundamental simplex.

    The ``(i, j)`` block of the result collects the words that start in
    block row ``i`` and end in block column ``j``.  Diagonal blocks include
    no unit.  ``upper`` entries are :class:`HomForm` or ``None``.
    """
    diag = list(diag)
    upper = [_as_hom(u, diag[i + 1].space, diag[i].space) for i, u in enumerate(upper)]
    dim = diag[0].dim
    if dim == 0:
        slots = (diag, upper)
        val = _k0_value(slots)
        return val, 0.0, list(np.cumsum([0] + [d.space.total_dim for d in diag]))
    mat, err, offsets = word_series((diag, upper), dim, family, cfg)
    k = family.m + 1 if family is not None else dim
    sign = -1 if (k * (k + 1) // 2 + 1) % 2 else 1
    return sign * mat, err, offsets


# -------------------------------------------------------- public evaluators

def simplex_integral(form: PolyForm, order: int | None = None) -> np.ndarray:
    """``∫_{Δ_k}`` of the top-degree part by Duffy-mapped Gauss quadrature."""
    k = form.dim
    N = form.space.total_dim
    top = tuple(range(k))
    sub = PolyForm(form.space, k, {key: M for key, M in form.terms.items() if key[0] == top})
    if not sub.terms:
        return np.zeros((N, N))
    if k == 0:
        return sub.coefficient_arrays(np.zeros((1, 0)))[()][0]
    q = order or (sub.max_poly_degree() + k) // 2 + 2
    g, w = _gauss(q)
    mesh = np.stack(np.meshgrid(*([g] * k), indexing="ij"), -1).reshape(-1, k)
    wm = np.prod(np.stack(np.meshgrid(*([w] * k), indexing="ij"), -1).reshape(-1, k), axis=1)
    pts = np.cumprod(mesh, axis=1)
    jac = np.prod(mesh ** np.arange(k - 1, -1, -1)[None, :], axis=1)
    vals = sub.coefficient_arrays(pts)[top]
    return np.einsum("p,pab->ab", wm * jac, vals)


def _form_degree(a: PolyForm) -> int:
    return a.degree()


def chen_integrand(k: int, n: int, forms, node) -> np.ndarray:
    """Literal top coefficient of the Chen integrand on ``Δ_n × I^{k-1}``.

    The forms are pulled back slot by slot through Igusa's family, wedged in
    the exterior algebra on ``(t_1..t_n, x_1..x_{k-1})`` and multiplied by the
    desuspension sign.  End V coefficients follow the tensor-product rule
    ``(-1)^{Σ_i [a_i] Σ_{j>i} |e_j|}`` with coefficients composed in order.
    """
    forms = list(forms)
    if len(forms) != n:
        raise ValueError("number of forms does not match n")
    t, x = node
    t = np.asarray(t, float).reshape(n)
    x = np.asarray(x, float).reshape(k - 1)
    m = k - 1
    N = forms[0].space.total_dim
    # each slot expands into (form degree p, endo degree e, covector key, matrix)
    slots = []
    for i, a in enumerate(forms):
        y = np.asarray(theta_path(k, x, t[i]).t)
        J = theta_jacobian(k, x, t[i])
        cols = [i] + [n + l for l in range(m)]
        entries = []
        for I, arr in a.coefficient_arrays(y[None, :]).items():
            for e, M in homogeneous_parts(arr[0], a.space).items():
                for C in combinations(range(1 + m), len(I)):
                    det = float(np.linalg.det(J[np.ix_(I, C)])) if I else 1.0
                    if det == 0.0:
                        continue
                    key = tuple(cols[c] for c in C)
                    sign, skey = merge_sign((), tuple(sorted(key)))
                    # key is already increasing because cols is increasing
                    entries.append((len(I), e, skey, det * M))
        slots.append(entries)
    top = tuple(range(n + m))
    total = np.zeros((N, N))
    # depth-first expansion over the choice of term in each slot
    stack = [(0, (), np.eye(N), 1, [], [])]
    while stack:
        i, key, mat, sign, pdegs, edegs = stack.pop()
        if i == n:
            if key != top:
                continue
            shifted = [p - 1 for p in pdegs]
            tensor = 1
            for a_idx in range(n):
                if shifted[a_idx] % 2 and sum(edegs[a_idx + 1:]) % 2:
                    tensor = -tensor
            total += sign * tensor * desuspension_sign(shifted) * mat
            continue
        for p, e, skey, M in slots[i]:
            s2, merged = merge_sign(key, skey)
            if not s2:
                continue
            stack.append((i + 1, merged, mat @ M, sign * s2, pdegs + [p], edegs + [e]))
    return total


def _check_forms(forms):
    forms = list(forms)
    if not forms:
        raise ValueError("at least one form is required")
    dim, space = forms[0].dim, forms[0].space
    for f in forms:
        if f.dim != dim or f.space != space:
            raise ValueError("forms must share domain and value space")
    return forms, dim, space


def _cochain_degree(forms) -> int | None:
    try:
        return sum(f.degree() - 1 for f in forms) + 1
    except Exception:
        return None


def psi_n_eval(forms, cfg: ChenConfig = ChenConfig(), family: PathFamily | None = None) -> CochainValue:
    """``ψ_n(s a_1 ⊗ … ⊗ s a_n)`` on the fundamental simplex ``[Δ_k]``.

    For ``n = 1`` this is ``(-1)^k ∫_{Δ_k} a`` (point evaluation of the
    0-form part when ``k = 0``); for ``n > 1`` the iterated integral along
    Igusa's family, computed with the block trick.
    """
    forms, k, space = _check_forms(forms)
    n = len(forms)
    N = space.total_dim
    if family is None and n == 1:
        if k == 0:
            val = forms[0].coefficient_arrays(np.zeros((1, 0))).get((), np.zeros((1, N, N)))[0]
        else:
            val = (-1) ** k * simplex_integral(forms[0])
        return CochainValue(k, val, 0.0, None)
    if k == 0 and family is None:
        return CochainValue(0, np.zeros((N, N)), 0.0, None)
    diag = [PolyForm.zero(space, k) for _ in range(n + 1)]
    upper = [HomForm.from_endo(a) for a in forms]
    mat, err, offsets = word_series((diag, upper), k, family, cfg)
    block = mat[offsets[0]:offsets[1], offsets[n]:offsets[n + 1]]
    return CochainValue(k if family is None else family.m + 1, (-1) ** n * block, err, None)


def psi_bar_n_eval(forms, cfg: ChenConfig = ChenConfig(), family: PathFamily | None = None) -> CochainValue:
    """``ψ̄_n`` on ``[Δ_k]``: ``ψ_n`` times ``(-1)^{k(k-1)/2 + k + n - 1}``."""
    forms = list(forms)
    val = psi_n_eval(forms, cfg, family)
    return replace(val, value=psi_bar_sign(val.k, len(forms)) * val.value)


def psi_bar_components(omega: PolyForm, max_n: int, cfg: ChenConfig = ChenConfig(),
                       family: PathFamily | None = None) -> list[np.ndarray]:
    """``[ψ̄_1((sω)^1), …, ψ̄_N((sω)^N)]`` on the fundamental simplex.

    One transport on ``V^{N+1}`` with ``ω`` on every superdiagonal block
    separates the word lengths.
    """
    k = omega.dim
    N = omega.space.total_dim
    if k == 0 and family is None:
        first = omega.coefficient_arrays(np.zeros((1, 0))).get((), np.zeros((1, N, N)))[0]
        return [first] + [np.zeros((N, N)) for _ in range(max_n - 1)]
    diag = [PolyForm.zero(omega.space, k) for _ in range(max_n + 1)]
    upper = [HomForm.from_endo(omega) for _ in range(max_n)]
    mat, err, offsets = word_series((diag, upper), k, family, cfg)
    kk = family.m + 1 if family is not None else k
    out = []
    for n in range(1, max_n + 1):
        block = mat[offsets[0]:offsets[1], offsets[n]:offsets[n + 1]]
        out.append(psi_bar_sign(kk, n) * (-1) ** n * block)
    return out


def series_tail_bound(omega: PolyForm, n: int) -> float:
    """Bound on ``Σ_{j>n} ‖ψ̄_j((sω)^j)‖`` by ``Σ_{j>n} C^j / j!``.

    ``C`` bounds the pulled-back integrand: coefficient norms times the
    largest Jacobian minor of Igusa's family (entries at most ``k``).
    """
    k = omega.dim
    C = 0.0
    for (I, e), M in omega.terms.items():
        p = len(I)
        C += np.linalg.norm(M, 2) * math.factorial(max(p, 1)) * max(k, 1) ** p
    tail, term = 0.0, 1.0
    for j in range(1, n + 60):
        term *= C / j
        if j > n:
            tail += term
    return float(tail)


def holonomy_series(omega, cfg: ChenConfig = ChenConfig()) -> GradedMap:
    """``Hol = Σ_{n>=1} ψ̄_n((sω)^{⊗n})`` on ``[Δ_k]`` as a degree ``1-k`` map.

    For ``k = 1`` the unit cochain is included, so the result is the
    parallel transport.  ``cfg.mode == "series"`` truncates at ``max_n`` and
    checks the factorial tail bound; the default transport mode sums all
    word lengths.
    """
    form = omega.form if hasattr(omega, "form") else omega
    return holonomy_matrix(form, cfg).as_graded_map(form.space)


def holonomy_matrix(form: PolyForm, cfg: ChenConfig = ChenConfig()) -> CochainValue:
    k = form.dim
    N = form.space.total_dim
    if k == 0:
        val = form.coefficient_arrays(np.zeros((1, 0))).get((), np.zeros((1, N, N)))[0]
        return CochainValue(0, val, 0.0, 1)
    if cfg.mode == "series":
        bound = series_tail_bound(form, cfg.max_n)
        if bound > cfg.tol and cfg.strict:
            raise TruncationError(f"series tail bound {bound:.3e} exceeds tol at n={cfg.max_n}", bound)
        comps = psi_bar_components(form, cfg.max_n, cfg)
        val = sum(comps)
        err = bound
    else:
        mat, err, _ = psi_bar_words([form], [], cfg)
        val = mat
    if k == 1:
        val = val + np.eye(N)
    return CochainValue(k, val, err, 1 - k)
