"""Finite simplicial sets, Hom-valued cochains and representations up to homotopy.

Simplicial sets are generated from ordered simplicial complexes: a simplex
is a tuple of vertices listed in the global vertex order.  Degenerate
simplices are tuples with a repeated vertex; they are never stored, and
unital cochains take their forced values on them (``id`` on ``s_0 x``,
zero elsewhere) unless an explicit override is recorded.

Front and back faces follow the usual conventions: ``back_i σ`` keeps the
first ``i + 1`` vertices and ``front_j σ`` the last ``j + 1``, so the cup
product is ``(F ∪ G)(σ) = Σ_i F(σ[:i+1]) G(σ[i:])``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Hashable, Iterable, Mapping

import numpy as np

from .graded_core import DimensionError, GradedMap, GradedVectorSpace, homogeneous_parts

__all__ = [
    "FiniteSimplicialSet",
    "HomCochain",
    "SimplicialRep",
    "MorphismCochain",
    "cup",
    "structure_defects",
    "structure_residual",
    "morphism_differential",
    "compose_morphisms",
    "identity_morphism",
    "trivial_rep",
    "mc_to_rep",
    "rep_to_mc",
    "cochain_differential",
    "cochain_product",
    "cochain_mc_residual",
    "twisted_cochain_dims",
    "twisted_differential_matrix",
    "twisted_cohomology",
    "unitality_check",
]

Simplex = tuple


# ---------------------------------------------------------------- complexes

class FiniteSimplicialSet:
    """Nondegenerate simplices of an ordered simplicial complex.

    Parameters
    ----------
    simplices : iterable of vertex tuples
        Generating simplices; all their faces are added.
    vertex_order : sequence, optional
        Global vertex order.  Defaults to sorted vertex labels.
    """

    def __init__(self, simplices: Iterable[Iterable[Hashable]], vertex_order=None):
        gens = [tuple(s) for s in simplices]
        verts = {v for s in gens for v in s}
        if vertex_order is None:
            vertex_order = sorted(verts)
        self.vertices = tuple(vertex_order)
        self._rank = {v: i for i, v in enumerate(self.vertices)}
        if len(self._rank) != len(self.vertices):
            raise ValueError("vertex order lists a vertex twice")
        missing = verts - set(self._rank)
        if missing:
            raise ValueError(f"vertices {sorted(map(str, missing))} are not in the vertex order")
        closed: set = set((v,) for v in self.vertices)
        for s in gens:
            if len(set(s)) != len(s):
                raise ValueError(f"generating simplex {s} repeats a vertex")
            s = self.normalize(s)
            for r in range(1, len(s) + 1):
                closed.update(combinations(s, r))
        by_dim: dict = {}
        for s in closed:
            by_dim.setdefault(len(s) - 1, []).append(s)
        self._simplices = {k: tuple(sorted(v, key=self._key)) for k, v in sorted(by_dim.items())}
        self._all = set(closed)

    # construction helpers ------------------------------------------------
    @classmethod
    def standard(cls, n: int) -> "FiniteSimplicialSet":
        """All faces of the standard n-simplex on vertices ``0..n``."""
        return cls([tuple(range(n + 1))])

    def _key(self, s):
        return tuple(self._rank[v] for v in s)

    def normalize(self, s) -> Simplex:
        """Sort the vertices of a simplex into the global order."""
        return tuple(sorted(s, key=lambda v: self._rank[v]))

    # queries ---------------------------------------------------------------
    @property
    def dim(self) -> int:
        return max(self._simplices) if self._simplices else -1

    def simplices(self, k: int) -> tuple:
        return self._simplices.get(k, ())

    def all_simplices(self, max_dim: int | None = None) -> list:
        top = self.dim if max_dim is None else min(max_dim, self.dim)
        return [s for k in range(top + 1) for s in self.simplices(k)]

    def count(self) -> list[int]:
        return [len(self.simplices(k)) for k in range(self.dim + 1)]

    def __contains__(self, s) -> bool:
        return tuple(s) in self._all

    def is_degenerate(self, s) -> bool:
        return any(a == b for a, b in zip(s, s[1:]))

    @staticmethod
    def face(s: Simplex, i: int) -> Simplex:
        """``d_i``: drop vertex ``i``."""
        return s[:i] + s[i + 1:]

    @staticmethod
    def degeneracy(s: Simplex, i: int) -> Simplex:
        """``s_i``: repeat vertex ``i``."""
        return s[:i + 1] + s[i:]

    @staticmethod
    def back(s: Simplex, i: int) -> Simplex:
        """First ``i + 1`` vertices (``d_{i+1} ∘ … ∘ d_k``)."""
        return s[:i + 1]

    @staticmethod
    def front(s: Simplex, j: int) -> Simplex:
        """Last ``j + 1`` vertices (``d_0^{k-j}``)."""
        return s[len(s) - 1 - j:]

    def check_identities(self) -> bool:
        """``d_i d_j = d_{j-1} d_i`` for ``i < j`` and closure under faces."""
        for k in range(1, self.dim + 1):
            for s in self.simplices(k):
                for j in range(k + 1):
                    if self.face(s, j) not in self._all:
                        return False
                    for i in range(j):
                        if self.face(self.face(s, j), i) != self.face(self.face(s, i), j - 1):
                            return False
        return True

    def degenerate_simplices(self, max_dim: int) -> list:
        """Single degeneracies ``s_i σ`` of nondegenerate σ, up to dimension ``max_dim``."""
        out = []
        for s in self.all_simplices(max_dim - 1):
            for i in range(len(s)):
                out.append(self.degeneracy(s, i))
        return out


# ---------------------------------------------------------------- cochains

def _space_map(spaces, complex_: FiniteSimplicialSet) -> dict:
    if isinstance(spaces, GradedVectorSpace):
        return {v: spaces for v in complex_.vertices}
    spaces = dict(spaces)
    missing = [v for v in complex_.vertices if v not in spaces]
    if missing:
        raise ValueError(f"no graded space for vertices {missing}")
    return spaces


@dataclass
class HomCochain:
    """Formal sum ``φ_0 + φ_1 + …`` with ``φ_k(σ) ∈ Hom^{n-k}(S_{v_k}, T_{v_0})``.

    ``degree`` is ``n``.  ``values`` holds nondegenerate simplices (and
    optional overrides on degenerate ones).  With ``unit=True`` the value on
    ``s_0 x`` defaults to the identity, as for unital representations.
    """

    complex: FiniteSimplicialSet
    source: Mapping
    target: Mapping
    degree: int
    values: dict = field(default_factory=dict)
    unit: bool = False

    def __post_init__(self):
        self.source = _space_map(self.source, self.complex)
        self.target = _space_map(self.target, self.complex)
        clean = {}
        for s, M in dict(self.values).items():
            s = tuple(s)
            M = np.array(M, dtype=float)
            shape = self.shape(s)
            if M.shape != shape:
                raise DimensionError(f"value on {s} has shape {M.shape}, expected {shape}")
            clean[s] = M
        self.values = clean

    def shape(self, s) -> tuple:
        return (self.target[s[0]].total_dim, self.source[s[-1]].total_dim)

    def __call__(self, s) -> np.ndarray:
        s = tuple(s)
        M = self.values.get(s)
        if M is not None:
            return M
        if self.unit and len(s) == 2 and s[0] == s[1]:
            return np.eye(self.source[s[0]].total_dim)
        return np.zeros(self.shape(s))

    def component_degree(self, s) -> int:
        return self.degree - (len(s) - 1)

    def degree_defect(self) -> float:
        """Largest entry of any value that has the wrong Hom degree."""
        worst = 0.0
        for s, M in self.values.items():
            parts = homogeneous_parts(M, self.target[s[0]], self.source[s[-1]])
            want = self.component_degree(s)
            for d, part in parts.items():
                if d != want:
                    worst = max(worst, float(np.abs(part).max()))
        return worst

    def graded(self, s) -> GradedMap:
        s = tuple(s)
        return GradedMap.from_dense(self(s), self.source[s[-1]], self.target[s[0]],
                                    self.component_degree(s), atol=1e-9)

    def max_abs_difference(self, other: "HomCochain", max_dim: int | None = None) -> float:
        worst = 0.0
        for s in self.complex.all_simplices(max_dim):
            worst = max(worst, float(np.abs(self(s) - other(s)).max(initial=0.0)))
        return worst


class SimplicialRep(HomCochain):
    """Representation up to homotopy: ``F_k(σ) ∈ Hom^{1-k}(E_{v_k}, E_{v_0})``.

    Parameters
    ----------
    complex : FiniteSimplicialSet
    spaces : GradedVectorSpace or mapping vertex -> GradedVectorSpace
    values : mapping simplex -> matrix
        ``F_0`` on vertices, ``F_1`` on edges and so on.  Simplices that
        are not listed carry zero (``F_1`` of an unlisted edge is zero, not
        the identity).
    unital : bool
        Use the forced unital values on degenerate simplices.
    degree_tol : float
        Entries of the wrong Hom degree above this raise ``DimensionError``.
    """

    def __init__(self, complex: FiniteSimplicialSet, spaces, values=None, unital: bool = True,
                 degree_tol: float = 1e-9):
        super().__init__(complex, spaces, spaces, 1, dict(values or {}), unit=unital)
        bad = self.degree_defect()
        if bad > degree_tol:
            raise DimensionError(f"structure operator has entries of the wrong degree ({bad:.3e})")

    @property
    def spaces(self) -> dict:
        return self.source

    @property
    def unital(self) -> bool:
        return self.unit


class MorphismCochain(HomCochain):
    """Degree-``n`` element of ``RHom(E, E')`` (normalized: zero on degenerate simplices)."""

    def __init__(self, complex, source, target, degree: int, values=None):
        super().__init__(complex, source, target, degree, dict(values or {}), unit=False)


def cup(F: HomCochain, G: HomCochain, sigma) -> np.ndarray:
    """``(F ∪ G)(σ) = Σ_i F(back_i σ) G(front_{k-i} σ)`` summed over all splittings."""
    s = tuple(sigma)
    out = None
    for i in range(len(s)):
        term = F(s[:i + 1]) @ G(s[i:])
        out = term if out is None else out + term
    return out


# ----------------------------------------------------- structure equations

def structure_defects(rep: HomCochain, max_dim: int | None = None) -> dict:
    """Left side of the structure equations on every nondegenerate simplex.

    ``Σ_{j=1}^{k-1} (-1)^j F(d_j σ) + Σ_{j=0}^{k} (-1)^{j+1} F(back_j σ) F(front_{k-j} σ)``.
    """
    out = {}
    for s in rep.complex.all_simplices(max_dim):
        k = len(s) - 1
        acc = np.zeros(rep.shape(s))
        for j in range(1, k):
            acc += (-1) ** j * rep(FiniteSimplicialSet.face(s, j))
        for j in range(k + 1):
            acc += (-1) ** (j + 1) * (rep(s[:j + 1]) @ rep(s[j:]))
        out[s] = acc
    return out


def _opnorm(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, 2)) if M.size else 0.0


def structure_residual(rep: HomCochain, max_dim: int | None = None) -> float:
    """Largest operator norm of the structure-equation defect."""
    return max((_opnorm(M) for M in structure_defects(rep, max_dim).values()), default=0.0)


def morphism_differential(phi: HomCochain, source: HomCochain, target: HomCochain) -> MorphismCochain:
    """``𝔇φ`` for ``φ ∈ RHom^n(E, E')``; ``source`` is ``E`` and ``target`` is ``E'``."""
    n = phi.degree
    cx = phi.complex
    values = {}
    for s in cx.all_simplices():
        k = len(s) - 1
        acc = np.zeros(phi.shape(s))
        for j in range(k + 1):
            acc += (-1) ** (j * n) * (target(s[:j + 1]) @ phi(s[j:]))
            acc += (-1) ** (n + j + 1) * (phi(s[:j + 1]) @ source(s[j:]))
        for j in range(1, k):
            acc += (-1) ** (j + n) * phi(FiniteSimplicialSet.face(s, j))
        if np.any(acc):
            values[s] = acc
    return MorphismCochain(cx, phi.source, phi.target, n + 1, values)


def compose_morphisms(phi2: HomCochain, phi1: HomCochain) -> MorphismCochain:
    """``(φ'∘φ)_k = Σ_{i+j=k} (-1)^{jn} φ'_j ∪ φ_i`` with ``n = deg φ``."""
    n = phi1.degree
    cx = phi1.complex
    values = {}
    for s in cx.all_simplices():
        k = len(s) - 1
        acc = np.zeros((phi2.target[s[0]].total_dim, phi1.source[s[-1]].total_dim))
        for j in range(k + 1):
            acc += (-1) ** (j * n) * (phi2(s[:j + 1]) @ phi1(s[j:]))
        if np.any(acc):
            values[s] = acc
    return MorphismCochain(cx, phi1.source, phi2.target, n + phi2.degree, values)


def identity_morphism(rep: HomCochain) -> MorphismCochain:
    vals = {(v,): np.eye(rep.source[v].total_dim) for v in rep.complex.vertices}
    return MorphismCochain(rep.complex, rep.source, rep.source, 0, vals)


def trivial_rep(complex_: FiniteSimplicialSet, space: GradedVectorSpace | None = None) -> SimplicialRep:
    """``F_0 = 0``, ``F_1 = id`` on every edge, higher operators zero."""
    space = GradedVectorSpace({0: 1}) if space is None else space
    vals = {e: np.eye(space.total_dim) for e in complex_.simplices(1)}
    return SimplicialRep(complex_, space, vals)


# ----------------------------------------------- Maurer-Cartan dictionary

def mc_to_rep(complex_: FiniteSimplicialSet, space: GradedVectorSpace, alpha: Mapping) -> SimplicialRep:
    """``F = 1 + α`` for an End V-valued normalized cochain ``α`` of total degree 1."""
    vals = {tuple(s): np.array(M, float) for s, M in alpha.items()}
    for e in complex_.simplices(1):
        vals[e] = vals.get(e, 0.0) + np.eye(space.total_dim)
    return SimplicialRep(complex_, space, vals)


def rep_to_mc(rep: SimplicialRep) -> dict:
    """Inverse of :func:`mc_to_rep`: subtract the unit cochain on edges."""
    out = {}
    for s, M in rep.values.items():
        if len(s) == 2 and s[0] != s[1]:
            M = M - np.eye(M.shape[0])
        if np.any(M):
            out[s] = M
    return out


def _parity_pow(P: np.ndarray, k: int) -> np.ndarray:
    return P if k % 2 else np.eye(P.shape[0])


def cochain_differential(c: Mapping, complex_: FiniteSimplicialSet, space: GradedVectorSpace) -> dict:
    """``D(φ ⊗ η) = (-1)^{|φ|} φ ⊗ δ̄η`` with ``δ̄ = (-1)^k δ`` on k-cochains."""
    P = space.parity()
    N = space.total_dim
    out = {}
    for s in complex_.all_simplices():
        k = len(s) - 2  # degree of the cochain being differentiated
        if k < 0:
            continue
        acc = np.zeros((N, N))
        for i in range(k + 2):
            M = c.get(FiniteSimplicialSet.face(s, i))
            if M is not None:
                acc += (-1) ** i * M
        acc = (-1) ** k * (P @ acc @ P)
        if np.any(acc):
            out[s] = acc
    return out


def cochain_product(a: Mapping, b: Mapping, complex_: FiniteSimplicialSet, space: GradedVectorSpace) -> dict:
    """``(α ∪̄ β)(σ) = (-1)^{k(l'+k')} α(first k+1 vertices) β(last k'+1 vertices)``."""
    P = space.parity()
    N = space.total_dim
    out = {}
    for s in complex_.all_simplices():
        acc = np.zeros((N, N))
        for i in range(len(s)):
            A = a.get(s[:i + 1])
            B = b.get(s[i:])
            if A is None or B is None:
                continue
            j = len(s) - 1 - i
            Pi = _parity_pow(P, i)
            acc += (-1) ** (i * j) * (A @ Pi @ B @ Pi)
        if np.any(acc):
            out[s] = acc
    return out


def cochain_mc_residual(alpha: Mapping, complex_: FiniteSimplicialSet, space: GradedVectorSpace) -> float:
    """Largest operator norm of ``Dα + α ∪̄ α`` over the nondegenerate simplices."""
    alpha = {tuple(s): np.asarray(M, float) for s, M in alpha.items()}
    d = cochain_differential(alpha, complex_, space)
    p = cochain_product(alpha, alpha, complex_, space)
    worst = 0.0
    for s in set(d) | set(p):
        M = d.get(s, 0.0) + p.get(s, 0.0)
        worst = max(worst, _opnorm(np.atleast_2d(M)))
    return worst


# ------------------------------------------------------ twisted cohomology

def _cochain_basis(rep: HomCochain, n: int) -> list:
    """Basis of ``RHom^n(ℝ, E)``: pairs (simplex, basis index in E_{v_0}^{n-k})."""
    out = []
    for s in rep.complex.all_simplices():
        k = len(s) - 1
        space = rep.target[s[0]]
        sl = space.slice(n - k)
        for r in range(sl.start, sl.stop):
            out.append((s, r))
    return out


def twisted_cochain_dims(rep: HomCochain, degrees: Iterable[int]) -> dict:
    return {n: len(_cochain_basis(rep, n)) for n in degrees}


def twisted_differential_matrix(rep: HomCochain, n: int, unit_rep: HomCochain | None = None) -> np.ndarray:
    """Matrix of ``𝔇: RHom^n(ℝ, E) → RHom^{n+1}(ℝ, E)`` in the simplex/basis basis."""
    cx = rep.complex
    unit_rep = trivial_rep(cx) if unit_rep is None else unit_rep
    src = _cochain_basis(rep, n)
    tgt = _cochain_basis(rep, n + 1)
    index = {b: i for i, b in enumerate(tgt)}
    D = np.zeros((len(tgt), len(src)))
    one = {v: GradedVectorSpace({0: 1}) for v in cx.vertices}
    for col, (s, r) in enumerate(src):
        M = np.zeros((rep.target[s[0]].total_dim, 1))
        M[r, 0] = 1.0
        phi = MorphismCochain(cx, one, rep.target, n, {s: M})
        dphi = morphism_differential(phi, unit_rep, rep)
        for t, val in dphi.values.items():
            for rr in np.nonzero(val[:, 0])[0]:
                key = (t, int(rr))
                if key not in index:
                    raise DimensionError(f"differential leaves the degree {n + 1} cochains at {key}")
                D[index[key], col] = val[rr, 0]
    return D


def _rank(M: np.ndarray, rel: float = 1e-8) -> int:
    if M.size == 0:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > rel * sv[0]))


def twisted_cohomology(rep: HomCochain, max_degree: int | None = None, min_degree: int | None = None,
                       rel_tol: float = 1e-8) -> dict:
    """Betti numbers of ``RHom(ℝ, E)`` by degree.

    The total differential is assembled densely and ranks use singular-value
    thresholding at ``rel_tol · σ_max``.
    """
    cx = rep.complex
    degs = [d for v in cx.vertices for d in rep.target[v].degrees()]
    lo = min(degs) if min_degree is None else min_degree
    hi = max(degs) + cx.dim if max_degree is None else max_degree
    unit = trivial_rep(cx)
    dims = twisted_cochain_dims(rep, range(lo - 1, hi + 2))
    ranks = {n: _rank(twisted_differential_matrix(rep, n, unit), rel_tol) for n in range(lo - 1, hi + 1)}
    return {n: dims[n] - ranks[n] - ranks[n - 1] for n in range(lo, hi + 1)}


# --------------------------------------------------------------- unitality

def unitality_check(rep: HomCochain, max_dim: int | None = None, tol: float = 0.0) -> tuple[bool, float]:
    """Compare values on single degeneracies with ``F_1(s_0 x) = id`` and ``F_k(s_i σ) = 0``."""
    cx = rep.complex
    top = cx.dim + 1 if max_dim is None else max_dim
    worst = 0.0
    for s in cx.degenerate_simplices(top):
        val = rep(s)
        if len(s) == 2:
            want = np.eye(rep.source[s[0]].total_dim)
        else:
            want = np.zeros_like(val)
        worst = max(worst, float(np.abs(val - want).max(initial=0.0)))
    return worst <= tol, worst
