"""Endomorphism-valued polynomial differential forms on Δ_m and I^m.

A :class:`PolyForm` is an element of ``End V ⊗ Ω`` stored as a dictionary
``(I, exps) -> matrix`` meaning ``matrix ⊗ t^exps dt_I`` with ``I`` a sorted
tuple of 0-based coordinate indices.  The algebra structure uses the Koszul
rule for ``e ⊗ a``::

    (e ⊗ a)(e' ⊗ a') = (-1)^{|a||e'|} ee' ⊗ a∧a'
    d(e ⊗ a)         = (-1)^{|e|} e ⊗ da

Both signs are realised with the parity operator ``P`` of ``V`` so that
coefficient matrices need not be homogeneous: ``(-1)^{|a||e'|} e' =
P^{|a|} e' P^{|a|}`` and ``(-1)^{|e|} e = P e P``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Mapping

import numpy as np

from .graded_core import GradedVectorSpace, homogeneous_parts
from .simplex_geom import AffineSimplexMap

__all__ = [
    "FormError",
    "GaugeError",
    "Poly",
    "PolyForm",
    "SuperconnectionMC",
    "GaugeElement",
    "wedge",
    "exterior_derivative",
    "pullback_affine",
    "evaluate",
    "mc_residual",
    "mc_form",
    "gauge_act",
    "simplex_grid",
    "merge_sign",
]


class FormError(ValueError):
    """Domain or value-space mismatch, or a point outside the domain."""


class GaugeError(ValueError):
    """Near-singular or inconsistent gauge element."""


def merge_sign(I: tuple, J: tuple):
    """Return ``(sign, K)`` with ``dt_I ∧ dt_J = sign · dt_K``; sign 0 if they overlap."""
    if set(I) & set(J):
        return 0, ()
    inv = sum(1 for a in I for b in J if a > b)
    return (-1 if inv % 2 else 1), tuple(sorted(I + J))


# ------------------------------------------------------------------ scalars

Poly = dict  # exps tuple -> float


def _poly_mul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for ea, ca in p.items():
        for eb, cb in q.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0.0) + ca * cb
    return out


def _poly_pow(p: Poly, n: int, nvars: int) -> Poly:
    out: Poly = {(0,) * nvars: 1.0}
    for _ in range(n):
        out = _poly_mul(out, p)
    return out


# ------------------------------------------------------------------- forms

@dataclass(frozen=True)
class PolyForm:
    """``Σ matrix ⊗ t^exps dt_I`` on a simplex or cube of dimension ``dim``."""

    space: GradedVectorSpace
    dim: int
    terms: Mapping[tuple, np.ndarray] = field(default_factory=dict)
    domain: str = "simplex"

    def __post_init__(self):
        if self.domain not in ("simplex", "cube"):
            raise FormError(f"unknown domain {self.domain!r}")
        N = self.space.total_dim
        clean = {}
        for (I, exps), mat in dict(self.terms).items():
            I = tuple(int(i) for i in I)
            exps = tuple(int(e) for e in exps)
            if list(I) != sorted(set(I)) or any(not 0 <= i < self.dim for i in I):
                raise FormError(f"bad form index {I} on a {self.dim}-dimensional domain")
            if len(exps) != self.dim or any(e < 0 for e in exps):
                raise FormError(f"bad exponent {exps}")
            mat = np.array(mat, dtype=float)
            if mat.shape != (N, N):
                raise FormError(f"coefficient shape {mat.shape}, expected {(N, N)}")
            key = (I, exps)
            if key in clean:
                mat = clean[key] + mat
            clean[key] = mat
        clean = {k: v for k, v in sorted(clean.items()) if np.any(v)}
        for v in clean.values():
            v.setflags(write=False)
        object.__setattr__(self, "terms", clean)

    # constructors ----------------------------------------------------
    @classmethod
    def zero(cls, space, dim, domain="simplex") -> "PolyForm":
        return cls(space, dim, {}, domain)

    @classmethod
    def constant(cls, space, dim, matrix, form_index=(), exps=None, domain="simplex"):
        exps = (0,) * dim if exps is None else tuple(exps)
        return cls(space, dim, {(tuple(form_index), exps): matrix}, domain)

    @classmethod
    def identity(cls, space, dim, domain="simplex") -> "PolyForm":
        return cls.constant(space, dim, np.eye(space.total_dim), domain=domain)

    @classmethod
    def coordinate(cls, space, dim, j, domain="simplex") -> "PolyForm":
        exps = tuple(1 if i == j else 0 for i in range(dim))
        return cls.constant(space, dim, np.eye(space.total_dim), (), exps, domain)

    @classmethod
    def from_scalar(cls, space, scalar: "PolyForm", matrix) -> "PolyForm":
        """``matrix ⊗ a`` for a scalar-valued form ``a`` (value space ℝ)."""
        matrix = np.asarray(matrix, float)
        return cls(space, scalar.dim,
                   {key: c[0, 0] * matrix for key, c in scalar.terms.items()}, scalar.domain)

    # basic algebra ---------------------------------------------------
    def _check(self, other: "PolyForm"):
        if (self.space, self.dim, self.domain) != (other.space, other.dim, other.domain):
            raise FormError("forms live on different domains or value spaces")

    def __add__(self, other: "PolyForm") -> "PolyForm":
        self._check(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out[k] + v if k in out else v
        return PolyForm(self.space, self.dim, out, self.domain)

    def __neg__(self) -> "PolyForm":
        return self.scale(-1.0)

    def __sub__(self, other: "PolyForm") -> "PolyForm":
        return self + (-other)

    def scale(self, c: float) -> "PolyForm":
        return PolyForm(self.space, self.dim, {k: c * v for k, v in self.terms.items()},
                        self.domain)

    def __mul__(self, other: "PolyForm") -> "PolyForm":
        return wedge(self, other)

    def map_coefficients(self, fn) -> "PolyForm":
        return PolyForm(self.space, self.dim, {k: fn(v) for k, v in self.terms.items()},
                        self.domain)

    def conjugate(self, left: np.ndarray, right: np.ndarray) -> "PolyForm":
        """``left · self · right`` for constant degree-0 matrices."""
        return self.map_coefficients(lambda v: left @ v @ right)

    def form_part(self, p: int) -> "PolyForm":
        return PolyForm(self.space, self.dim,
                        {k: v for k, v in self.terms.items() if len(k[0]) == p}, self.domain)

    def endo_part(self, e: int) -> "PolyForm":
        out = {}
        for k, v in self.terms.items():
            part = homogeneous_parts(v, self.space).get(e)
            if part is not None:
                out[k] = part
        return PolyForm(self.space, self.dim, out, self.domain)

    def total_degrees(self) -> set:
        degs = set()
        for (I, _), v in self.terms.items():
            degs.update(len(I) + e for e in homogeneous_parts(v, self.space))
        return degs

    def is_homogeneous(self, degree: int | None = None) -> bool:
        degs = self.total_degrees()
        if not degs:
            return True
        return len(degs) == 1 and (degree is None or degs == {degree})

    def degree(self) -> int:
        degs = self.total_degrees()
        if len(degs) > 1:
            raise FormError(f"form is not homogeneous (degrees {sorted(degs)})")
        return degs.pop() if degs else 0

    def max_poly_degree(self) -> int:
        return max((sum(e) for _, e in self.terms), default=0)

    def norm(self) -> float:
        """Sum of coefficient operator norms; bounds sup |coefficient| on the domain."""
        return float(sum(np.linalg.norm(v, 2) for v in self.terms.values()))

    def allclose(self, other: "PolyForm", atol: float = 1e-12) -> bool:
        return self.max_abs_difference(other) <= atol

    def max_abs_difference(self, other: "PolyForm") -> float:
        self._check(other)
        diff = self - other
        return max((float(np.abs(v).max()) for v in diff.terms.values()), default=0.0)

    def coefficient_arrays(self, points: np.ndarray) -> dict:
        """Coefficients at many points: ``{I: array (P, N, N)}``."""
        points = np.atleast_2d(np.asarray(points, float))
        P = points.shape[0]
        N = self.space.total_dim
        grouped: dict = {}
        for (I, exps), v in self.terms.items():
            grouped.setdefault(I, []).append((exps, v))
        out = {}
        for I, items in grouped.items():
            E = np.array([e for e, _ in items], dtype=int).reshape(len(items), self.dim)
            M = np.stack([v for _, v in items])
            mono = np.prod(points[:, None, :] ** E[None, :, :], axis=2) if self.dim else np.ones((P, len(items)))
            out[I] = np.einsum("pt,tab->pab", mono, M)
        return out


def _parity_power(P: np.ndarray, n: int) -> np.ndarray | None:
    return P if n % 2 else None


def _group_by_index(form: PolyForm) -> dict:
    """``{I: (exps array (T, dim), matrices (T, N, N))}``."""
    grouped: dict = {}
    for (I, e), M in form.terms.items():
        grouped.setdefault(I, ([], []))
        grouped[I][0].append(e)
        grouped[I][1].append(M)
    return {I: (np.array(es, dtype=np.int64).reshape(len(es), form.dim), np.stack(ms))
            for I, (es, ms) in grouped.items()}


_WEDGE_CHUNK = 1 << 22  # floats per batched product


def wedge(a: PolyForm, b: PolyForm) -> PolyForm:
    """Product in ``End V ⊗ Ω``: ``(e⊗α)(e'⊗β) = (-1)^{|α||e'|} ee' ⊗ α∧β``."""
    a._check(b)
    if not a.terms or not b.terms:
        return PolyForm.zero(a.space, a.dim, a.domain)
    P = a.space.parity()
    N = a.space.total_dim
    ga, gb = _group_by_index(a), _group_by_index(b)
    gb_odd = {J: (E, P @ M @ P) for J, (E, M) in gb.items()}
    pieces: dict = {}
    for I, (Ea, Ma) in ga.items():
        right = gb_odd if len(I) % 2 else gb
        for J, (Eb, Mb) in right.items():
            sign, K = merge_sign(I, J)
            if not sign:
                continue
            step = max(1, _WEDGE_CHUNK // max(1, len(Eb) * N * N))
            for lo in range(0, len(Ea), step):
                prod = sign * np.einsum("iab,jbc->ijac", Ma[lo:lo + step], Mb)
                exps = Ea[lo:lo + step, None, :] + Eb[None, :, :]
                rows = exps.shape[0] * exps.shape[1]
                pieces.setdefault(K, []).append((exps.reshape(rows, a.dim), prod.reshape(rows, N, N)))
    out: dict = {}
    for K, chunks in pieces.items():
        exps = np.concatenate([e for e, _ in chunks])
        mats = np.concatenate([m for _, m in chunks])
        uniq, inv = np.unique(exps, axis=0, return_inverse=True)
        acc = np.zeros((len(uniq), N, N))
        np.add.at(acc, inv.reshape(-1), mats)
        for e, M in zip(map(tuple, uniq.tolist()), acc):
            out[(K, e)] = M
    return PolyForm(a.space, a.dim, out, a.domain)


def exterior_derivative(a: PolyForm) -> PolyForm:
    """``d(e ⊗ α) = (-1)^{|e|} e ⊗ dα`` with the de Rham differential on the domain."""
    P = a.space.parity()
    out: dict = {}
    for (I, exps), A in a.terms.items():
        PAP = P @ A @ P
        for j in range(a.dim):
            if exps[j] == 0 or j in I:
                continue
            sign, K = merge_sign((j,), I)
            e2 = list(exps)
            e2[j] -= 1
            key = (K, tuple(e2))
            val = (sign * exps[j]) * PAP
            out[key] = out[key] + val if key in out else val
    return PolyForm(a.space, a.dim, out, a.domain)


@lru_cache(maxsize=4096)
def _pullback_monomial(exps: tuple, A_bytes: bytes, b_bytes: bytes, tdim: int, sdim: int):
    A = np.frombuffer(A_bytes).reshape(tdim, sdim)
    b = np.frombuffer(b_bytes)
    poly: Poly = {(0,) * sdim: 1.0}
    for i, e in enumerate(exps):
        if e == 0:
            continue
        lin: Poly = {}
        if b[i] != 0.0:
            lin[(0,) * sdim] = float(b[i])
        for j in range(sdim):
            if A[i, j] != 0.0:
                key = tuple(1 if jj == j else 0 for jj in range(sdim))
                lin[key] = float(A[i, j])
        poly = _poly_mul(poly, _poly_pow(lin, e, sdim))
    return tuple((k, v) for k, v in poly.items() if v != 0.0)


def pullback_affine(a: PolyForm, amap: AffineSimplexMap) -> PolyForm:
    """Exact pullback of a polynomial form along an affine map into its domain."""
    if amap.target_dim != a.dim:
        raise FormError(f"map targets Δ_{amap.target_dim}, form lives on dimension {a.dim}")
    A = np.ascontiguousarray(amap.matrix)
    b = np.ascontiguousarray(amap.offset)
    s = amap.source_dim
    out: dict = {}
    for (I, exps), M in a.terms.items():
        if len(I) > s:
            continue
        poly = _pullback_monomial(exps, A.tobytes(), b.tobytes(), a.dim, s)
        if not poly:
            continue
        for C in combinations(range(s), len(I)):
            det = float(np.linalg.det(A[np.ix_(I, C)])) if I else 1.0
            if det == 0.0:
                continue
            for e, c in poly:
                key = (C, e)
                val = (det * c) * M
                out[key] = out[key] + val if key in out else val
    return PolyForm(a.space, s, out, "simplex")


def _in_domain(a: PolyForm, p: np.ndarray, tol: float = 1e-9) -> bool:
    if a.domain == "cube":
        return bool(np.all(p >= -tol) and np.all(p <= 1 + tol))
    seq = np.concatenate([[1.0], p, [0.0]])
    return bool(np.all(np.diff(seq) <= tol))


def evaluate(a: PolyForm, p) -> dict:
    """Exterior element at ``p``: ``{I: matrix}``."""
    p = np.asarray(p, float).reshape(a.dim)
    if not _in_domain(a, p):
        raise FormError(f"point {tuple(p)} outside the {a.domain} of dimension {a.dim}")
    return {I: arr[0] for I, arr in a.coefficient_arrays(p[None, :]).items()}


@lru_cache(maxsize=32)
def simplex_grid(dim: int, order: int = 5) -> np.ndarray:
    """Tensor Gauss points of the given order mapped onto Δ_dim (Duffy map)."""
    if dim == 0:
        return np.zeros((1, 0))
    g, _ = np.polynomial.legendre.leggauss(order)
    g = 0.5 * (g + 1.0)
    mesh = np.stack(np.meshgrid(*([g] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    pts = np.cumprod(mesh, axis=1)
    pts.setflags(write=False)
    return pts


def _sup_norm_on_grid(a: PolyForm, order: int = 5) -> float:
    if not a.terms:
        return 0.0
    pts = simplex_grid(a.dim, order) if a.domain == "simplex" else None
    if pts is None:
        g, _ = np.polynomial.legendre.leggauss(order)
        g = 0.5 * (g + 1.0)
        pts = np.stack(np.meshgrid(*([g] * a.dim), indexing="ij"), -1).reshape(-1, a.dim)
    worst = 0.0
    for arr in a.coefficient_arrays(pts).values():
        worst = max(worst, float(np.abs(arr).max()))
    return worst


def mc_form(omega: PolyForm) -> PolyForm:
    """The curvature ``dω + ω∧ω`` as an exact polynomial form."""
    return exterior_derivative(omega) + wedge(omega, omega)


def mc_residual(omega: PolyForm, order: int = 5) -> float:
    """Max entry of ``dω + ω∧ω`` over a fixed Gauss grid of the domain."""
    return _sup_norm_on_grid(mc_form(omega), order)


# --------------------------------------------------------- checked wrappers

@dataclass(frozen=True)
class SuperconnectionMC:
    """A total-degree-1 Maurer-Cartan form ``ω`` on Δ_k (checked on construction)."""

    form: PolyForm
    residual: float = 0.0
    tol: float = 1e-9

    def __post_init__(self):
        if not self.form.is_homogeneous(1):
            raise FormError(f"superconnection must have total degree 1, got {sorted(self.form.total_degrees())}")
        res = mc_residual(self.form)
        object.__setattr__(self, "residual", res)
        if res > self.tol:
            raise FormError(f"Maurer-Cartan residual {res:.3e} exceeds {self.tol:.1e}")

    @property
    def k(self) -> int:
        return self.form.dim

    @property
    def space(self) -> GradedVectorSpace:
        return self.form.space

    def component(self, p: int) -> PolyForm:
        return self.form.form_part(p)


@dataclass(frozen=True)
class GaugeElement:
    """Total-degree-0 polynomial gauge ``f`` with an explicitly supplied inverse."""

    f: PolyForm
    inverse: PolyForm
    condition: float = 0.0
    max_condition: float = 1e8

    def __post_init__(self):
        if not self.f.is_homogeneous(0) or not self.inverse.is_homogeneous(0):
            raise GaugeError("gauge elements must have total degree 0")
        one = PolyForm.identity(self.f.space, self.f.dim, self.f.domain)
        err = max(wedge(self.f, self.inverse).max_abs_difference(one),
                  wedge(self.inverse, self.f).max_abs_difference(one))
        if err > 1e-10:
            raise GaugeError(f"supplied inverse is wrong (error {err:.3e})")
        pts = simplex_grid(self.f.dim, 5)
        vals = self.f.form_part(0).coefficient_arrays(pts).get(())
        if vals is None:
            raise GaugeError("gauge element has no invertible 0-form part")
        cond = float(np.max(np.linalg.cond(vals)))
        object.__setattr__(self, "condition", cond)
        if not np.isfinite(cond) or cond > self.max_condition:
            raise GaugeError(f"gauge element is near-singular (condition {cond:.3e})")

    def at(self, p) -> np.ndarray:
        """Value of the 0-form part at a point."""
        return evaluate(self.f.form_part(0), p).get((), np.zeros((self.f.space.total_dim,) * 2))

    def inverse_at(self, p) -> np.ndarray:
        return evaluate(self.inverse.form_part(0), p).get((), np.zeros((self.f.space.total_dim,) * 2))


def gauge_act(omega, gauge: GaugeElement):
    """Right gauge action ``ω • f = f⁻¹ ω f + f⁻¹ df``.

    Accepts a :class:`SuperconnectionMC` (returns one) or a bare :class:`PolyForm`.
    """
    form = omega.form if isinstance(omega, SuperconnectionMC) else omega
    f, finv = gauge.f, gauge.inverse
    out = wedge(wedge(finv, form), f) + wedge(finv, exterior_derivative(f))
    if isinstance(omega, SuperconnectionMC):
        return SuperconnectionMC(out, tol=max(omega.tol, omega.residual + 1e-9))
    return out
