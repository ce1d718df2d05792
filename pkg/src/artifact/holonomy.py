"""Holonomies of flat superconnections and of chains of morphisms.

Every holonomy is read off from one transport computation on a block
bidiagonal form (see :func:`artifact.chen_engine.psi_bar_words`): the
``(i, j)`` block collects all words that start in ``V_i`` and end in ``V_j``,
so a single pass yields object holonomies, morphism-chain holonomies and all
their sub-chains.

The module also assembles holonomies over a :class:`FormValuedComplex` into a
:class:`~artifact.simplicial_reps.SimplicialRep`, pulls Lie-algebra
representations back along flat connections, and provides the residual
helpers used to test gauge equivariance, naturality and the functor
equations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .chen_engine import (ChenConfig, CochainValue, HomForm, holonomy_matrix, psi_bar_words,
                          psi_n_eval)
from .graded_core import GradedMap, GradedVectorSpace, homogeneous_parts
from .poly_forms import (FormError, GaugeElement, PolyForm, SuperconnectionMC, exterior_derivative,
                         gauge_act, mc_residual, merge_sign, pullback_affine, simplex_grid, wedge)
from .simplex_geom import AffineSimplexMap, face_map, simplex_from_vertices, vertex
from .simplicial_reps import (FiniteSimplicialSet, SimplicialRep, cochain_differential,
                              cochain_product)

__all__ = [
    "FaceCompatibilityError",
    "HolonomyError",
    "FormValuedComplex",
    "MorphismChainDatum",
    "hol_object",
    "hol_object_value",
    "hol_morphism_chain",
    "integrate_rep",
    "LieAlgebraRep",
    "pullback_lie_algebra_simplex",
    "block_embedding",
    "chain_cochains",
    "twisted_form_differential",
    "functor_equation_residual",
    "gauge_equivariance_defect",
    "chain_gauge_defect",
    "gauge_pushforward_defect",
    "naturality_defect",
    "psi_morphism_residual",
    "factorization_defect",
    "DEFAULT_DIM_CAP",
]

DEFAULT_DIM_CAP = 3


class FaceCompatibilityError(ValueError):
    """A form does not restrict to the form of one of its faces."""

    def __init__(self, simplex, face_index: int, defect: float):
        super().__init__(f"form on simplex {simplex} does not restrict to face {face_index} "
                         f"(max coefficient difference {defect:.3e})")
        self.simplex = simplex
        self.face_index = face_index
        self.defect = defect


class HolonomyError(RuntimeError):
    """A holonomy could not be computed; ``simplex`` names the culprit."""

    def __init__(self, simplex, cause: Exception):
        super().__init__(f"holonomy of simplex {simplex} failed: {cause}")
        self.simplex = simplex
        self.cause = cause


# ------------------------------------------------------------------ scenes

def _simplex_map(sigma_vertices_in_parent: Sequence[int], parent_dim: int) -> AffineSimplexMap:
    return simplex_from_vertices([vertex(i, parent_dim) for i in sigma_vertices_in_parent])


@dataclass
class FormValuedComplex:
    """A Maurer-Cartan form on each nondegenerate simplex, compatible with faces.

    Parameters
    ----------
    complex : FiniteSimplicialSet
    space : GradedVectorSpace
        Fibre over every vertex (bundles over a simplex are trivial).
    forms : mapping simplex -> PolyForm or SuperconnectionMC
        Missing simplices carry the zero form.
    mc_tol, face_tol : float
        Tolerances for the Maurer-Cartan and face checks.
    """

    complex: FiniteSimplicialSet
    space: GradedVectorSpace
    forms: Mapping = field(default_factory=dict)
    mc_tol: float = 1e-9
    face_tol: float = 1e-10

    def __post_init__(self):
        clean = {}
        for s, f in dict(self.forms).items():
            s = tuple(s)
            if s not in self.complex:
                raise ValueError(f"simplex {s} is not in the complex")
            form = f.form if isinstance(f, SuperconnectionMC) else f
            if form.dim != len(s) - 1:
                raise FormError(f"form on {s} lives on a {form.dim}-simplex")
            if form.space != self.space:
                raise FormError(f"form on {s} has value space {form.space}, expected {self.space}")
            clean[s] = form
        self.forms = clean
        for s in self.complex.all_simplices():
            form = self.form(s)
            if not form.is_homogeneous(1):
                raise FormError(f"form on {s} is not of total degree 1")
            res = mc_residual(form)
            if res > self.mc_tol:
                raise FormError(f"form on {s} violates the Maurer-Cartan equation (residual {res:.3e})")
            k = len(s) - 1
            for i in range(k + 1) if k > 0 else ():
                face = FiniteSimplicialSet.face(s, i)
                restricted = pullback_affine(form, face_map(i, k - 1))
                defect = restricted.max_abs_difference(self.form(face))
                if defect > self.face_tol * max(1.0, form.norm()):
                    raise FaceCompatibilityError(s, i, defect)

    def form(self, s) -> PolyForm:
        s = tuple(s)
        f = self.forms.get(s)
        return f if f is not None else PolyForm.zero(self.space, len(s) - 1)


@dataclass
class MorphismChainDatum:
    """Representations ``ω^0..ω^n`` on one simplex and connecting forms ``η^1..η^n``.

    ``η^i`` is ``Hom(V_i, V_{i-1})``-valued; square endomorphism forms are
    accepted when ``V_i = V_{i-1}``.
    """

    omegas: Sequence[PolyForm]
    etas: Sequence

    def __post_init__(self):
        self.omegas = list(self.omegas)
        if len(self.etas) != len(self.omegas) - 1:
            raise ValueError("a chain of n morphisms needs n + 1 representations")
        k = self.omegas[0].dim
        etas = []
        for i, eta in enumerate(self.etas, start=1):
            src, tgt = self.omegas[i].space, self.omegas[i - 1].space
            if isinstance(eta, PolyForm):
                if eta.space != src or src != tgt:
                    raise ValueError(f"connecting form {i} must be a HomForm from V_{i} to V_{i - 1}")
                eta = HomForm.from_endo(eta)
            if (eta.source, eta.target) != (src, tgt):
                raise ValueError(f"connecting form {i} has the wrong source or target")
            if eta.dim != k:
                raise ValueError(f"connecting form {i} lives on a different simplex")
            etas.append(eta)
        for om in self.omegas:
            if om.dim != k:
                raise ValueError("all representations must live on the same simplex")
        self.etas = etas

    @property
    def k(self) -> int:
        return self.omegas[0].dim

    @property
    def n(self) -> int:
        return len(self.etas)

    def degrees(self) -> list[int]:
        return [_hom_degree(e) for e in self.etas]

    def assembled(self) -> tuple[GradedVectorSpace, list, PolyForm]:
        """Block-triangular ``Ω = Σ ω^i + Σ η^i`` on ``V_0 ⊕ … ⊕ V_n``."""
        W, idx = block_embedding([om.space for om in self.omegas])
        form = PolyForm.zero(W, self.k)
        for i, om in enumerate(self.omegas):
            form = form + _embed_form(om.terms, W, idx[i], idx[i], self.k)
        for i, eta in enumerate(self.etas, start=1):
            form = form + _embed_form(eta.terms, W, idx[i - 1], idx[i], self.k)
        return W, idx, form

    def pullback(self, amap: AffineSimplexMap) -> "MorphismChainDatum":
        oms = [pullback_affine(om, amap) for om in self.omegas]
        etas = [_pullback_hom(e, amap) for e in self.etas]
        return MorphismChainDatum(oms, etas)


def _hom_degree(eta: HomForm) -> int:
    degs = set()
    for (I, _), M in eta.terms.items():
        degs.update(len(I) + d for d in homogeneous_parts(M, eta.target, eta.source))
    if len(degs) > 1:
        raise FormError(f"connecting form is not homogeneous (degrees {sorted(degs)})")
    return degs.pop() if degs else 0


def block_embedding(spaces: Sequence[GradedVectorSpace]) -> tuple[GradedVectorSpace, list]:
    """``W = ⊕ V_i`` and, for each summand, the positions of its basis in ``W``."""
    W = GradedVectorSpace({})
    for V in spaces:
        W = W.direct_sum(V)
    used = {d: 0 for d in W.degrees()}
    idx = []
    for V in spaces:
        pos = []
        for d in V.degrees():
            start = W.offset(d) + used[d]
            pos.extend(range(start, start + V.dim(d)))
            used[d] += V.dim(d)
        idx.append(np.asarray(pos, dtype=int))
    return W, idx


def _embed(M, W: GradedVectorSpace, rows, cols) -> np.ndarray:
    out = np.zeros((W.total_dim, W.total_dim))
    out[np.ix_(rows, cols)] = M
    return out


def _embed_form(terms, W, rows, cols, k) -> PolyForm:
    return PolyForm(W, k, {key: _embed(M, W, rows, cols) for key, M in terms.items()})


def _extract_hom(form: PolyForm, rows, cols, source, target) -> HomForm:
    return HomForm(source, target, form.dim,
                   {key: M[np.ix_(rows, cols)] for key, M in form.terms.items()
                    if np.any(M[np.ix_(rows, cols)])})


def _pullback_hom(eta: HomForm, amap: AffineSimplexMap) -> HomForm:
    W, idx = block_embedding([eta.target, eta.source])
    big = _embed_form(eta.terms, W, idx[0], idx[1], eta.dim)
    pb = pullback_affine(big, amap)
    return _extract_hom(pb, idx[0], idx[1], eta.source, eta.target)


# -------------------------------------------------------------- holonomies

def _form_of(omega) -> PolyForm:
    return omega.form if isinstance(omega, SuperconnectionMC) else omega


def hol_object_value(omega, cfg: ChenConfig = ChenConfig()) -> CochainValue:
    """``Hol(σ, E)`` as a dense matrix with its error estimate."""
    return holonomy_matrix(_form_of(omega), cfg)


def hol_object(omega, cfg: ChenConfig = ChenConfig()) -> GradedMap:
    """``Hol(σ, E): E_{v_k} → E_{v_0}`` of degree ``1 - k``.

    For ``k = 1`` the unit is included (parallel transport); for ``k = 0``
    the result is the 0-form part of ``ω``.
    """
    form = _form_of(omega)
    return hol_object_value(form, cfg).as_graded_map(form.space)


def hol_morphism_chain(datum: MorphismChainDatum, cfg: ChenConfig = ChenConfig()) -> GradedMap:
    """``Hol(σ, φ_1, …, φ_n): V_n|_{v_k} → V_0|_{v_0}`` of degree ``Σ[φ_i] - k + 1``."""
    mat, _, offsets = psi_bar_words(datum.omegas, datum.etas, cfg)
    n = datum.n
    block = mat[offsets[0]:offsets[1], offsets[n]:offsets[n + 1]]
    degree = sum(d - 1 for d in datum.degrees()) - datum.k + 1
    src, tgt = datum.omegas[n].space, datum.omegas[0].space
    parts = homogeneous_parts(block, tgt, src)
    stray = max((np.abs(v).max() for d, v in parts.items() if d != degree), default=0.0)
    if stray > 1e-8:
        raise FormError(f"chain holonomy has entries off degree {degree} ({stray:.3e})")
    return GradedMap.from_dense(parts.get(degree, np.zeros_like(block)), src, tgt, degree)


def integrate_rep(X: FormValuedComplex, cfg: ChenConfig = ChenConfig(),
                  dim_cap: int = DEFAULT_DIM_CAP) -> SimplicialRep:
    """``F_k(σ) = Hol(σ, E)`` for every nondegenerate σ of dimension at most ``dim_cap``."""
    values = {}
    for s in X.complex.all_simplices(dim_cap):
        try:
            val = hol_object_value(X.form(s), cfg)
        except Exception as exc:  # report the failing simplex
            raise HolonomyError(s, exc) from exc
        values[s] = val.as_graded_map(X.space).to_dense()
    return SimplicialRep(X.complex, X.space, values)


# ------------------------------------------------------ Lie algebra reps

def _ce_differential_of_generator(f: np.ndarray, c: int) -> dict:
    """``d ξ^c = -Σ_{a<b} f^c_{ab} ξ^a ξ^b``."""
    g = f.shape[0]
    out = {}
    for a, b in combinations(range(g), 2):
        coef = -f[c, a, b]
        if coef:
            out[(a, b)] = coef
    return out


@dataclass
class LieAlgebraRep:
    """Representation up to homotopy of a Lie algebra as an MC element of ``End V ⊗ CE(𝔤)``.

    ``structure_constants[c, a, b] = f^c_{ab}`` with ``[e_a, e_b] = f^c_{ab} e_c``.
    ``components[A]`` is ``R(e_{a_1} ∧ … ∧ e_{a_j})`` for sorted multi-indices
    ``A``; it must have degree ``1 - j``.  ``differential`` is ``∂ ∈ End^1 V``.
    """

    structure_constants: np.ndarray
    space: GradedVectorSpace
    components: Mapping = field(default_factory=dict)
    differential: np.ndarray | None = None

    def __post_init__(self):
        f = np.asarray(self.structure_constants, float)
        g = f.shape[0]
        if f.shape != (g, g, g) or not np.allclose(f, -np.transpose(f, (0, 2, 1))):
            raise ValueError("structure constants must be antisymmetric of shape (g, g, g)")
        self.structure_constants = f
        N = self.space.total_dim
        self.differential = np.zeros((N, N)) if self.differential is None else np.asarray(self.differential, float)
        clean = {}
        for A, M in dict(self.components).items():
            A = tuple(int(a) for a in A)
            if list(A) != sorted(set(A)) or any(not 0 <= a < g for a in A):
                raise ValueError(f"bad multi-index {A}")
            if len(A) > g:
                raise ValueError("multi-index longer than dim g")
            clean[A] = np.asarray(M, float)
        self.components = clean

    @property
    def dim(self) -> int:
        return self.structure_constants.shape[0]

    def ce_element(self) -> dict:
        out = {(): self.differential}
        out.update(self.components)
        return out

    def mc_residual(self) -> float:
        """Largest entry of ``d_CE R + R·R`` in ``End V ⊗ Λ𝔤*``."""
        P = self.space.parity()
        R = self.ce_element()
        out: dict = {}

        def add(key, M):
            out[key] = out[key] + M if key in out else M

        for A, M in R.items():
            PM = P @ M @ P  # Koszul sign of d passing the coefficient
            for pos, c in enumerate(A):
                sign_pos = -1 if pos % 2 else 1
                for (a, b), coef in _ce_differential_of_generator(self.structure_constants, c).items():
                    word = A[:pos] + (a, b) + A[pos + 1:]
                    if len(set(word)) < len(word):
                        continue
                    order = sorted(range(len(word)), key=lambda r: word[r])
                    s = _perm_sign(order)
                    add(tuple(sorted(word)), sign_pos * s * coef * PM)
        for A, M in R.items():
            for B, M2 in R.items():
                sign, K = merge_sign(A, B)
                if not sign:
                    continue
                right = (P @ M2 @ P) if len(A) % 2 else M2
                add(K, sign * (M @ right))
        return max((float(np.abs(v).max()) for v in out.values()), default=0.0)


def _perm_sign(order) -> int:
    sign = 1
    order = list(order)
    for i in range(len(order)):
        for j in range(i + 1, len(order)):
            if order[i] > order[j]:
                sign = -sign
    return sign


def _flatness_residual(f: np.ndarray, theta: Sequence[PolyForm]) -> float:
    worst = 0.0
    g = f.shape[0]
    for c in range(g):
        expr = exterior_derivative(theta[c])
        for a, b in combinations(range(g), 2):
            if f[c, a, b]:
                expr = expr + wedge(theta[a], theta[b]).scale(f[c, a, b])
        pts = simplex_grid(expr.dim, 4)
        for arr in expr.coefficient_arrays(pts).values():
            worst = max(worst, float(np.abs(arr).max()))
    return worst


def pullback_lie_algebra_simplex(rep: LieAlgebraRep, theta: Sequence[PolyForm],
                                 tol: float = 1e-9) -> SuperconnectionMC:
    """``ω = ∂ + Σ_A R(e_A) θ^{a_1} ∧ … ∧ θ^{a_j}`` for a flat 𝔤-valued 1-form ``θ``.

    ``theta`` lists the scalar component 1-forms ``θ^a``; flatness means
    ``dθ^c + Σ_{a<b} f^c_{ab} θ^a ∧ θ^b = 0``.
    """
    theta = list(theta)
    g = rep.dim
    if len(theta) != g:
        raise ValueError(f"expected {g} component forms, got {len(theta)}")
    k = theta[0].dim
    for th in theta:
        if th.space.total_dim != 1 or th.dim != k:
            raise ValueError("components of θ must be scalar forms on one simplex")
        if any(len(I) != 1 for I, _ in th.terms):
            raise ValueError("components of θ must be 1-forms")
    res = _flatness_residual(rep.structure_constants, theta)
    if res > tol:
        raise FormError(f"θ is not flat (residual {res:.3e})")
    rres = rep.mc_residual()
    if rres > tol:
        raise FormError(f"representation data violates the Maurer-Cartan equation ({rres:.3e})")
    V = rep.space
    omega = PolyForm.constant(V, k, rep.differential)
    one = PolyForm.identity(PolyForm.zero(theta[0].space, k).space, k)
    for A, M in rep.components.items():
        prod = one
        for a in A:
            prod = wedge(prod, theta[a])
        omega = omega + PolyForm.from_scalar(V, prod, M)
    return SuperconnectionMC(omega, tol=max(1e-8, tol))


# ------------------------------------------------- cochains of a chain

def chain_cochains(omegas: Sequence[PolyForm], etas: Sequence, cfg: ChenConfig = ChenConfig(),
                   ) -> tuple[GradedVectorSpace, list, FiniteSimplicialSet, dict]:
    """``ψ̄^V(Ω)`` on every face of ``Δ_k``, as ``W × W`` matrices.

    ``W = V_0 ⊕ … ⊕ V_n``; the value on a face is the full block matrix
    (diagonal blocks are the object cochains without unit, block ``(i, j)``
    is the holonomy of the sub-chain ``φ_{i+1} … φ_j``).
    """
    datum = MorphismChainDatum(omegas, etas)
    k = datum.k
    W, idx = block_embedding([om.space for om in datum.omegas])
    cx = FiniteSimplicialSet.standard(k)
    order = np.concatenate(idx)
    values = {}
    for s in cx.all_simplices():
        sub = datum if s == tuple(range(k + 1)) else datum.pullback(_simplex_map(s, k))
        mat, _, _ = psi_bar_words(sub.omegas, sub.etas, cfg)
        full = np.zeros((W.total_dim, W.total_dim))
        full[np.ix_(order, order)] = mat
        values[s] = full
    return W, idx, cx, values


def _block(values: dict, idx, i: int, j: int) -> dict:
    """Keep only block ``(i, j)`` of each value (still embedded in ``W``)."""
    out = {}
    for s, M in values.items():
        B = np.zeros_like(M)
        B[np.ix_(idx[i], idx[j])] = M[np.ix_(idx[i], idx[j])]
        out[s] = B
    return out


def _diag(values: dict, idx) -> dict:
    out = {}
    for s, M in values.items():
        B = np.zeros_like(M)
        for ix in idx:
            B[np.ix_(ix, ix)] = M[np.ix_(ix, ix)]
        out[s] = B
    return out


def _add(*cochains, signs=None) -> dict:
    signs = signs or [1] * len(cochains)
    out: dict = {}
    for c, sg in zip(cochains, signs):
        for s, M in c.items():
            out[s] = out[s] + sg * M if s in out else sg * M
    return out


def _twisted_cochain_differential(c: dict, alpha: dict, degree: int, cx, W) -> dict:
    """``D c + α ∪̄ c - (-1)^{|c|} c ∪̄ α`` in ``End W ⊗ C̄``."""
    return _add(cochain_differential(c, cx, W), cochain_product(alpha, c, cx, W),
                cochain_product(c, alpha, cx, W), signs=[1, 1, -(-1) ** degree])


def twisted_form_differential(eta: HomForm, omega_target: PolyForm, omega_source: PolyForm) -> HomForm:
    """``d η + ω_target η - (-1)^{|η|} η ω_source`` for ``η: V_source → V_target``."""
    deg = _hom_degree(eta)
    W, idx = block_embedding([eta.target, eta.source])
    k = eta.dim
    E = _embed_form(eta.terms, W, idx[0], idx[1], k)
    Om = _embed_form(omega_target.terms, W, idx[0], idx[0], k) + _embed_form(omega_source.terms, W, idx[1], idx[1], k)
    out = exterior_derivative(E) + wedge(Om, E) - wedge(E, Om).scale((-1) ** deg)
    return _extract_hom(out, idx[0], idx[1], eta.source, eta.target)


def _hom_product(a: HomForm, b: HomForm) -> HomForm:
    """``a ∧ b`` for ``b: V_2 → V_1`` and ``a: V_1 → V_0``."""
    W, idx = block_embedding([a.target, a.source, b.source])
    k = a.dim
    A = _embed_form(a.terms, W, idx[0], idx[1], k)
    B = _embed_form(b.terms, W, idx[1], idx[2], k)
    return _extract_hom(wedge(A, B), idx[0], idx[2], b.source, a.target)


def _max_entry(c: dict) -> float:
    return max((float(np.abs(M).max()) for M in c.values()), default=0.0)


def functor_equation_residual(omegas: Sequence[PolyForm], etas: Sequence,
                              cfg: ChenConfig = ChenConfig()) -> float:
    """Defect of the A∞ functor equation for ``n = len(etas)`` in ``{1, 2}``.

    Both sides live in ``Hom(V_n, V_0) ⊗ C̄(Δ_k)`` and are compared on every
    face of ``Δ_k``.  With ``[x] = |x| - 1``:

    * ``n = 1``: ``D_α H(η) = H(d_ω η)``
    * ``n = 2``: ``D_α H(η_1, η_2) + (-1)^{[η_1]} H(η_1) ∪̄ H(η_2)
      = H(d_ω η_1, η_2) + (-1)^{[η_1]} H(η_1, d_ω η_2) + (-1)^{[η_1]} H(η_1 η_2)``
    """
    datum = MorphismChainDatum(omegas, etas)
    n = datum.n
    if n not in (1, 2):
        raise ValueError("functor equations are implemented for chains of length 1 and 2")
    oms, ets = datum.omegas, datum.etas
    degs = datum.degrees()
    W, idx, cx, vals = chain_cochains(oms, ets, cfg)
    alpha = _diag(vals, idx)
    H = _block(vals, idx, 0, n)
    c_deg = sum(d - 1 for d in degs) + 1
    lhs = _twisted_cochain_differential(H, alpha, c_deg, cx, W)

    def chain_block(om_list, et_list, i, j):
        W2, idx2, _, v2 = chain_cochains(om_list, et_list, cfg)
        # re-embed into the big W (summands are listed in the same order)
        out = {}
        picks = [0, n] if len(om_list) == 2 and n == 2 else list(range(len(om_list)))
        for s, M in v2.items():
            B = np.zeros((W.total_dim, W.total_dim))
            B[np.ix_(idx[picks[i]], idx[picks[j]])] = M[np.ix_(idx2[i], idx2[j])]
            out[s] = B
        return out

    if n == 1:
        d_eta = twisted_form_differential(ets[0], oms[0], oms[1])
        rhs = chain_block(oms, [d_eta], 0, 1)
        return _max_entry(_add(lhs, rhs, signs=[1, -1]))
    s1 = (-1) ** (degs[0] - 1)
    H1 = _block(vals, idx, 0, 1)
    H2 = _block(vals, idx, 1, 2)
    lhs = _add(lhs, cochain_product(H1, H2, cx, W), signs=[1, s1])
    r1 = chain_block(oms, [twisted_form_differential(ets[0], oms[0], oms[1]), ets[1]], 0, 2)
    r2 = chain_block(oms, [ets[0], twisted_form_differential(ets[1], oms[1], oms[2])], 0, 2)
    r3 = chain_block([oms[0], oms[2]], [_hom_product(ets[0], ets[1])], 0, 1)
    rhs = _add(r1, r2, r3, signs=[1, s1, s1])
    return _max_entry(_add(lhs, rhs, signs=[1, -1]))


# --------------------------------------------------------- gauge checks

def gauge_equivariance_defect(omega, gauge: GaugeElement, cfg: ChenConfig = ChenConfig()) -> float:
    """``max |Hol(ω • f) - f(v_0)^{-1} Hol(ω) f(v_k)|`` for a function-valued gauge ``f``."""
    form = _form_of(omega)
    k = form.dim
    if any(len(I) for I, _ in gauge.f.terms):
        raise ValueError("the vertex formula needs a gauge without higher form components")
    H = hol_object_value(form, cfg).value
    H2 = hol_object_value(gauge_act(form, gauge), cfg).value
    want = gauge.inverse_at(vertex(0, k)) @ H @ gauge.at(vertex(k, k))
    return float(np.abs(H2 - want).max())


def chain_gauge_defect(omegas: Sequence[PolyForm], etas: Sequence, gauges: Sequence[GaugeElement],
                       cfg: ChenConfig = ChenConfig()) -> float:
    """Gauge naturality of chain holonomies.

    Gauging every representation ``ω^i`` by ``f_i`` and every connecting
    form by ``η^i ↦ f_{i-1}^{-1} η^i f_i`` conjugates the ψ̄-cochain of the
    block form by the vertex values of ``f = ⊕ f_i``.
    """
    datum = MorphismChainDatum(omegas, etas)
    k = datum.k
    W, idx, Om = datum.assembled()
    F = PolyForm.zero(W, k)
    Finv = PolyForm.zero(W, k)
    for i, g in enumerate(gauges):
        F = F + _embed_form(g.f.terms, W, idx[i], idx[i], k)
        Finv = Finv + _embed_form(g.inverse.terms, W, idx[i], idx[i], k)
    big = GaugeElement(F, Finv)
    Om2 = gauge_act(Om, big)
    spaces = [om.space for om in datum.omegas]
    new_oms = [_extract_square(Om2, idx[i], spaces[i]) for i in range(len(spaces))]
    new_etas = [_extract_hom(Om2, idx[i - 1], idx[i], spaces[i], spaces[i - 1]) for i in range(1, len(spaces))]
    order = np.concatenate(idx)
    m1, _, _ = psi_bar_words(datum.omegas, datum.etas, cfg)
    m2, _, _ = psi_bar_words(new_oms, new_etas, cfg)
    A = np.zeros_like(m1)
    B = np.zeros_like(m2)
    A[np.ix_(order, order)] = m1
    B[np.ix_(order, order)] = m2
    if k == 1:
        A = A + np.eye(W.total_dim)
        B = B + np.eye(W.total_dim)
    want = big.inverse_at(vertex(0, k)) @ A @ big.at(vertex(k, k))
    return float(np.abs(B - want).max())


def gauge_pushforward_defect(gauge: GaugeElement, cfg: ChenConfig = ChenConfig()) -> float:
    """``ψ̄(u_f)`` versus ``u_{ψ_1(f)} = ψ_1(f)^{-1} ∪̄ D ψ_1(f)`` on all faces of ``Δ_k``.

    ``u_f = f^{-1} df`` for a function-valued gauge ``f``; ``ψ_1(f)`` is the
    0-cochain of vertex values.
    """
    f = gauge.f
    if any(len(I) for I, _ in f.terms):
        raise ValueError("the vertex formula needs a gauge without higher form components")
    k, V = f.dim, f.space
    u = wedge(gauge.inverse, exterior_derivative(f))
    _, _, cx, vals = chain_cochains([u], [], cfg)
    fv = {(i,): gauge.at(vertex(i, k)) for i in range(k + 1)}
    fi = {(i,): gauge.inverse_at(vertex(i, k)) for i in range(k + 1)}
    want = cochain_product(fi, cochain_differential(fv, cx, V), cx, V)
    keys = set(vals) | set(want)
    N = V.total_dim
    zero = np.zeros((N, N))
    return float(max(np.abs(vals.get(s, zero) - want.get(s, zero)).max() for s in keys))


def _extract_square(form: PolyForm, ix, space: GradedVectorSpace) -> PolyForm:
    return PolyForm(space, form.dim, {key: M[np.ix_(ix, ix)] for key, M in form.terms.items()})


# ------------------------------------------------------------ naturality

def naturality_defect(X: FormValuedComplex, rep: SimplicialRep, sigma, vertex_indices: Sequence[int],
                      cfg: ChenConfig = ChenConfig()) -> float:
    """Compare ``Hol(a^* ω_σ)`` with the rep on ``a(σ)`` for a vertex map ``a``.

    ``vertex_indices`` is a weakly increasing list of vertex positions in
    ``σ``; repeats give degenerate simplices, where the unital values apply.
    """
    sigma = tuple(sigma)
    idx = list(vertex_indices)
    if idx != sorted(idx):
        raise ValueError("vertex indices must be weakly increasing")
    k = len(sigma) - 1
    amap = _simplex_map(idx, k)
    pulled = pullback_affine(X.form(sigma), amap)
    val = hol_object_value(pulled, cfg).value
    image = tuple(sigma[i] for i in idx)
    return float(np.abs(val - rep(image)).max())


# ----------------------------------------- A∞ equations of the ψ morphism

def psi_morphism_residual(forms: Sequence[PolyForm], complex_: FiniteSimplicialSet, positions: Mapping,
                          cfg: ChenConfig = ChenConfig(tol=1e-7)) -> float:
    """Defect of the A∞ morphism equation for ``ψ: (Ω, -d, ∧) → (C, δ, ∪)`` at ``n = len(forms)``.

    The forms live on a simplex ``Δ_m``; ``positions`` sends each vertex of
    the test complex to a point of ``Δ_m``, and each simplex is mapped in
    affinely.  Source operations: ``b_1(sa) = -s(da)``,
    ``b_2(sa ⊗ sb) = (-1)^{[a]} s(a ∧ b)``; target operations:
    ``b'_1(sc) = s(δc)``, ``b'_2(sc ⊗ sc') = (-1)^{[c]} s(c ∪ c')``.
    """
    forms = list(forms)
    n = len(forms)
    dims = [f.degree() for f in forms]
    maps = {s: simplex_from_vertices([positions[v] for v in s]) for s in complex_.all_simplices()}
    cache: dict = {}

    def psi(word) -> dict:
        """``s^{-1} ψ_r(s a_1 ⊗ … ⊗ s a_r)`` as a scalar cochain."""
        key = tuple(id(w) for w in word)
        if key in cache:
            return cache[key][1]
        kdeg = sum(w.degree() - 1 for w in word) + 1
        out = {}
        for s in complex_.simplices(kdeg) if kdeg >= 0 else ():
            pulled = [pullback_affine(w, maps[s]) for w in word]
            if any(not p.terms for p in pulled):
                continue
            out[s] = float(psi_n_eval(pulled, cfg).value[0, 0])
        cache[key] = (word, out)
        return out

    def delta(c: dict) -> dict:
        out: dict = {}
        for s in complex_.all_simplices():
            acc = 0.0
            for i in range(len(s)):
                acc += (-1) ** i * c.get(FiniteSimplicialSet.face(s, i), 0.0)
            if acc:
                out[s] = acc
        return out

    def cupc(c1: dict, c2: dict) -> dict:
        out: dict = {}
        for s in complex_.all_simplices():
            acc = 0.0
            for i in range(len(s)):
                acc += c1.get(s[:i + 1], 0.0) * c2.get(s[i:], 0.0)
            if acc:
                out[s] = acc
        return out

    def add(acc: dict, c: dict, sign: float):
        for s, v in c.items():
            acc[s] = acc.get(s, 0.0) + sign * v

    lhs: dict = {}
    for i in range(n):  # b_1 in slot i
        sign = (-1) ** sum(d - 1 for d in dims[:i])
        da = exterior_derivative(forms[i]).scale(-1.0)
        if da.terms:
            add(lhs, psi(forms[:i] + [da] + forms[i + 1:]), sign)
    for i in range(n - 1):  # b_2 on slots i, i+1
        sign = (-1) ** sum(d - 1 for d in dims[:i]) * (-1) ** (dims[i] - 1)
        prod = wedge(forms[i], forms[i + 1])
        if prod.terms:
            add(lhs, psi(forms[:i] + [prod] + forms[i + 2:]), sign)
    rhs: dict = {}
    add(rhs, delta(psi(forms)), 1.0)
    for l in range(1, n):
        c1 = psi(forms[:l])
        c2 = psi(forms[l:])
        sign = (-1) ** sum(d - 1 for d in dims[:l])
        add(rhs, cupc(c1, c2), sign)
    keys = set(lhs) | set(rhs)
    return max((abs(lhs.get(s, 0.0) - rhs.get(s, 0.0)) for s in keys), default=0.0)


# --------------------------------------------------------- factorization

def factorization_defect(forms: Sequence[PolyForm], cfg: ChenConfig = ChenConfig()) -> float:
    """Chen integral along the concatenated path ``μ_1(Θ_(1), Θ_(1))`` in ``Δ_2`` versus
    ``Σ_l Chen(V_1^* a_1 … a_l) · Chen(U_1^* a_{l+1} … a_n)``.

    Inputs are 1-forms on ``Δ_2`` (the only degree that survives on a path).
    """
    from .simplex_geom import ConcatFamily, IgusaFamily, back_face, front_face

    forms = list(forms)
    n = len(forms)
    N = forms[0].space.total_dim
    fam = ConcatFamily(1, 2, IgusaFamily(1), IgusaFamily(1))
    lhs = psi_n_eval(forms, cfg, fam).value
    V = front_face(1, 2)
    U = back_face(1, 2)
    first = [pullback_affine(a, V) for a in forms]
    second = [pullback_affine(a, U) for a in forms]

    def chen(word):
        if not word:
            return np.eye(N)
        return psi_n_eval(word, cfg).value

    rhs = np.zeros((N, N))
    for l in range(n + 1):
        rhs = rhs + chen(first[:l]) @ chen(second[l:])
    return float(np.abs(lhs - rhs).max())
