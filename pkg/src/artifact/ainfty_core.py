"""Finite-dimensional A∞ algebras and morphisms with dense multilinear data.

Everything is stored on the suspension ``sA``.  A basis vector of ``A`` of
degree ``p`` has suspended degree ``[p] = p - 1``.  An ``n``-ary operation is
an array of shape ``(d_out, d_in, …, d_in)`` (``n`` input axes), acting on
``sa_1 ⊗ … ⊗ sa_n`` by contraction.

Conventions
-----------
* ``(id^i ⊗ b_j ⊗ id^k)(x_1 ⊗ … ⊗ x_n)`` carries ``(-1)^{[x_1] + … + [x_i]}``.
* A dga becomes an A∞ algebra through ``b_1(sa) = s(da)`` and
  ``b_2(sa ⊗ sb) = (-1)^{[a]} s(ab)``.
* Morphisms have degree 0, so tensor products of their components carry no
  signs.
* Operations above the stored arity are treated as zero; every check runs up
  to ``n_max`` inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from itertools import combinations, product
from typing import Mapping

import numpy as np

from .graded_core import GradedVectorSpace

__all__ = [
    "AInftyError",
    "DivergenceError",
    "Dga",
    "AInftyAlgebraData",
    "AInftyMorphismData",
    "matrix_dga",
    "exterior_dga",
    "tensor_dga",
    "dga_to_ainfty",
    "strict_morphism",
    "structure_residual_algebra",
    "morphism_residual",
    "compose_ainfty",
    "identity_morphism",
    "inverse_morphism",
    "transport_structure",
    "mc_residual_ainfty",
    "mc_pushforward",
    "twist_algebra",
    "twist_morphism",
    "tensor_with_algebra",
    "tensor_with_morphism",
    "conjugation_morphism",
    "gauge_mc_element",
    "DEFAULT_N_MAX",
]

DEFAULT_N_MAX = 6


class AInftyError(ValueError):
    """Malformed A∞ data."""


class DivergenceError(RuntimeError):
    """A Maurer-Cartan series did not terminate or shrink within ``n_max`` terms."""


def _compositions(n: int, parts: int | None = None):
    """Ordered tuples of positive integers summing to ``n``."""
    if n == 0:
        if parts in (None, 0):
            yield ()
        return
    if parts == 0:
        return
    for first in range(1, n + 1):
        rest = None if parts is None else parts - 1
        for tail in _compositions(n - first, rest):
            yield (first,) + tail


def _sign_vector(susp_parity: np.ndarray, count: int) -> np.ndarray:
    """``(-1)^{[x_1] + … + [x_count]}`` over the flattened basis of ``(sA)^{⊗count}``."""
    if count == 0:
        return np.ones(1)
    return reduce(np.kron, [susp_parity] * count)


# ------------------------------------------------------------------ dgas

@dataclass
class Dga:
    """A finite-dimensional dga in a basis.

    Parameters
    ----------
    degrees : array of int
        Degree of each basis vector.
    mult : ndarray, shape (d, d, d)
        ``e_a e_b = Σ_c mult[c, a, b] e_c``.
    diff : ndarray, shape (d, d)
        ``d e_a = Σ_c diff[c, a] e_c``.
    unit : ndarray, shape (d,), optional
    """

    degrees: np.ndarray
    mult: np.ndarray
    diff: np.ndarray
    unit: np.ndarray | None = None

    def __post_init__(self):
        self.degrees = np.asarray(self.degrees, dtype=int)
        d = self.degrees.size
        self.mult = np.asarray(self.mult, float)
        self.diff = np.asarray(self.diff, float)
        if self.mult.shape != (d, d, d) or self.diff.shape != (d, d):
            raise AInftyError("multiplication or differential has the wrong shape")
        if self.unit is not None:
            self.unit = np.asarray(self.unit, float)

    @property
    def dim(self) -> int:
        return self.degrees.size

    def product(self, a, b) -> np.ndarray:
        return np.einsum("cab,a,b->c", self.mult, a, b)

    def d(self, a) -> np.ndarray:
        return self.diff @ a

    def axiom_residual(self) -> float:
        """Largest defect of ``d² = 0``, associativity and the graded Leibniz rule."""
        m, D, deg = self.mult, self.diff, self.degrees
        res = np.abs(D @ D).max() if D.size else 0.0
        left = np.einsum("ecd,cab->eabd", m, m)
        right = np.einsum("eac,cbd->eabd", m, m)
        res = max(res, np.abs(left - right).max())
        sign = (-1.0) ** deg
        leib = (np.einsum("ec,cab->eab", D, m)
                - np.einsum("ecb,ca->eab", m, D)
                - np.einsum("eac,cb->eab", m, D) * sign[None, :, None])
        res = max(res, np.abs(leib).max())
        if self.unit is not None:
            u = self.unit
            eye = np.eye(self.dim)
            res = max(res, np.abs(np.einsum("cab,a->cb", m, u) - eye).max(),
                      np.abs(np.einsum("cab,b->ca", m, u) - eye).max())
        return float(res)


def matrix_dga(space: GradedVectorSpace, differential: np.ndarray | None = None) -> Dga:
    """``End V`` with composition and ``d a = D a - (-1)^{|a|} a D`` for ``D ∈ End^1 V``, ``D² = 0``."""
    N = space.total_dim
    bd = space.basis_degrees()
    D = np.zeros((N, N)) if differential is None else np.asarray(differential, float)
    deg = np.array([bd[i] - bd[j] for i in range(N) for j in range(N)])
    d = N * N
    mult = np.zeros((d, d, d))
    for i, j, l in product(range(N), repeat=3):
        mult[i * N + l, i * N + j, j * N + l] = 1.0
    diff = np.zeros((d, d))
    for i, j in product(range(N), repeat=2):
        E = np.zeros((N, N))
        E[i, j] = 1.0
        out = D @ E - (-1.0) ** deg[i * N + j] * E @ D
        diff[:, i * N + j] = out.ravel()
    unit = np.eye(N).ravel()
    return Dga(deg, mult, diff, unit)


def exterior_dga(m: int, structure_constants: np.ndarray | None = None) -> Dga:
    """``Λ[ξ^1, …, ξ^m]`` with ``|ξ| = 1``; with structure constants, the Chevalley-Eilenberg differential.

    ``d ξ^c = -Σ_{a<b} f^c_{ab} ξ^a ξ^b``.
    """
    subsets = [tuple(s) for r in range(m + 1) for s in _sorted_subsets(m, r)]
    index = {s: i for i, s in enumerate(subsets)}
    d = len(subsets)
    deg = np.array([len(s) for s in subsets])
    mult = np.zeros((d, d, d))
    for A in subsets:
        for B in subsets:
            if set(A) & set(B):
                continue
            word = A + B
            sign = _perm_parity(word)
            mult[index[tuple(sorted(word))], index[A], index[B]] = sign
    diff = np.zeros((d, d))
    if structure_constants is not None:
        f = np.asarray(structure_constants, float)
        gen_d = {}
        for c in range(m):
            v = np.zeros(d)
            for a in range(m):
                for b in range(a + 1, m):
                    v[index[(a, b)]] -= f[c, a, b]
            gen_d[c] = v
        # extend as a derivation
        for A in subsets:
            out = np.zeros(d)
            for pos, c in enumerate(A):
                left = _basis(index, A[:pos], d)
                right = _basis(index, A[pos + 1:], d)
                term = np.einsum("cab,a,b->c", mult, np.einsum("cab,a,b->c", mult, left, gen_d[c]), right)
                out += (-1) ** pos * term
            diff[:, index[A]] = out
    unit = np.zeros(d)
    unit[0] = 1.0
    return Dga(deg, mult, diff, unit)


def _sorted_subsets(m, r):
    return combinations(range(m), r)


def _basis(index, A, d):
    v = np.zeros(d)
    v[index[tuple(A)]] = 1.0
    return v


def _perm_parity(word) -> int:
    sign = 1
    w = list(word)
    for i in range(len(w)):
        for j in range(i + 1, len(w)):
            if w[i] > w[j]:
                sign = -sign
    return sign


def tensor_dga(E: Dga, A: Dga) -> Dga:
    """``E ⊗ A`` with ``(e⊗a)(e'⊗a') = (-1)^{|a||e'|} ee' ⊗ aa'`` and
    ``d(e⊗a) = de⊗a + (-1)^{|e|} e⊗da``.  Basis index ``e * dim A + a``."""
    dE, dA = E.dim, A.dim
    deg = (E.degrees[:, None] + A.degrees[None, :]).ravel()
    sign = (-1.0) ** np.outer(A.degrees, E.degrees)  # [a, e']
    mult = np.einsum("xeg,yab,ag->xyeagb", E.mult, A.mult, sign).reshape(dE * dA, dE * dA, dE * dA)
    eye_E, eye_A = np.eye(dE), np.eye(dA)
    diff = (np.einsum("xe,ya->xyea", E.diff, eye_A)
            + np.einsum("xe,ya,e->xyea", eye_E, A.diff, (-1.0) ** E.degrees)).reshape(dE * dA, dE * dA)
    unit = None
    if E.unit is not None and A.unit is not None:
        unit = np.kron(E.unit, A.unit)
    return Dga(deg, mult, diff, unit)


# ------------------------------------------------------------ A∞ data

@dataclass
class AInftyAlgebraData:
    """``b_n: (sA)^{⊗n} → sA`` for ``n = 1..``; ``ops[n]`` has shape ``(d,) * (n + 1)``."""

    degrees: np.ndarray
    ops: Mapping[int, np.ndarray] = field(default_factory=dict)
    n_max: int = DEFAULT_N_MAX

    def __post_init__(self):
        self.degrees = np.asarray(self.degrees, dtype=int)
        d = self.dim
        clean = {}
        for n, T in dict(self.ops).items():
            T = np.asarray(T, float)
            if n < 1 or T.shape != (d,) * (n + 1):
                raise AInftyError(f"operation b_{n} has shape {T.shape}")
            clean[int(n)] = T
        self.ops = clean

    @property
    def dim(self) -> int:
        return self.degrees.size

    @property
    def susp_parity(self) -> np.ndarray:
        return (-1.0) ** (self.degrees - 1)

    def op(self, n: int) -> np.ndarray:
        T = self.ops.get(n)
        return T if T is not None else np.zeros((self.dim,) * (n + 1))

    def flat(self, n: int) -> np.ndarray:
        return self.op(n).reshape(self.dim, self.dim ** n)

    def degree_defect(self) -> float:
        """Entries of ``b_n`` that do not have suspended degree ``+1``."""
        sd = self.degrees - 1
        worst = 0.0
        for n, T in self.ops.items():
            tot = sd.reshape((-1,) + (1,) * n)
            ins = sum(sd.reshape((1,) * (i + 1) + (-1,) + (1,) * (n - i - 1)) for i in range(n))
            bad = (tot - ins) != 1
            if np.any(bad & (T != 0)):
                worst = max(worst, float(np.abs(T[bad]).max()))
        return worst


@dataclass
class AInftyMorphismData:
    """``ψ_n: (sA)^{⊗n} → sB``; ``maps[n]`` has shape ``(d_B,) + (d_A,) * n``."""

    source_degrees: np.ndarray
    target_degrees: np.ndarray
    maps: Mapping[int, np.ndarray] = field(default_factory=dict)
    n_max: int = DEFAULT_N_MAX

    def __post_init__(self):
        self.source_degrees = np.asarray(self.source_degrees, dtype=int)
        self.target_degrees = np.asarray(self.target_degrees, dtype=int)
        dA, dB = self.source_degrees.size, self.target_degrees.size
        clean = {}
        for n, T in dict(self.maps).items():
            T = np.asarray(T, float)
            if n < 1 or T.shape != (dB,) + (dA,) * n:
                raise AInftyError(f"component ψ_{n} has shape {T.shape}")
            clean[int(n)] = T
        self.maps = clean

    def comp(self, n: int) -> np.ndarray:
        T = self.maps.get(n)
        if T is not None:
            return T
        return np.zeros((self.target_degrees.size,) + (self.source_degrees.size,) * n)

    def flat(self, n: int) -> np.ndarray:
        return self.comp(n).reshape(self.target_degrees.size, self.source_degrees.size ** n)


def dga_to_ainfty(A: Dga, n_max: int = DEFAULT_N_MAX) -> AInftyAlgebraData:
    """``b_1(sa) = s(da)``, ``b_2(sa⊗sb) = (-1)^{[a]} s(ab)``."""
    sign = (-1.0) ** (A.degrees - 1)
    return AInftyAlgebraData(A.degrees, {1: A.diff, 2: A.mult * sign[None, :, None]}, n_max)


def strict_morphism(matrix: np.ndarray, source_degrees, target_degrees,
                    n_max: int = DEFAULT_N_MAX) -> AInftyMorphismData:
    return AInftyMorphismData(source_degrees, target_degrees, {1: np.asarray(matrix, float)}, n_max)


def identity_morphism(A: AInftyAlgebraData) -> AInftyMorphismData:
    return strict_morphism(np.eye(A.dim), A.degrees, A.degrees, A.n_max)


# ------------------------------------------------------------- engines

def _insert(outer_flat_by_arity, b: AInftyAlgebraData, n: int, d_out: int) -> np.ndarray:
    """``Σ_{i+j+k=n} outer_{i+1+k} ∘ (id^i ⊗ b_j ⊗ id^k)`` as a ``(d_out, d^n)`` matrix."""
    d = b.dim
    par = b.susp_parity
    out = np.zeros((d_out, d ** n))
    for j in range(1, n + 1):
        bj = b.flat(j)
        if not bj.any():
            continue
        for i in range(0, n - j + 1):
            k = n - i - j
            outer = outer_flat_by_arity(i + 1 + k)
            if outer is None or not outer.any():
                continue
            O = outer.reshape(d_out, d ** i, d, d ** k)
            term = np.einsum("oamc,mb->oabc", O, bj) * _sign_vector(par, i)[None, :, None, None]
            out += term.reshape(d_out, d ** n)
    return out


def _apply_components(outer: np.ndarray, parts, comps, d_mid: int, d_in: int) -> np.ndarray:
    """``outer(c_{p_1} ⊗ … ⊗ c_{p_r})`` for degree-0 components (no signs).

    ``outer`` has shape ``(d_out, d_mid^r)``; ``comps(p)`` has shape
    ``(d_mid, d_in^p)``.  Returns ``(d_out, d_in^{Σp})``.
    """
    d_out = outer.shape[0]
    T = outer.reshape(d_out, -1)
    done = 1
    rest = len(parts)
    for p in parts:
        rest -= 1
        T = T.reshape(d_out, done, d_mid, d_mid ** rest)
        T = np.einsum("oamc,mb->oabc", T, comps(p))
        done *= d_in ** p
        T = T.reshape(d_out, done * d_mid ** rest)
    return T.reshape(d_out, done)


def _push(outer_flat, comps_flat, n: int, d_mid: int, d_in: int) -> np.ndarray:
    """``Σ_r Σ_{p_1+…+p_r=n} outer_r(c_{p_1} ⊗ … ⊗ c_{p_r})``."""
    out = None
    for parts in _compositions(n):
        o = outer_flat(len(parts))
        if o is None or not o.any():
            continue
        term = _apply_components(o, parts, comps_flat, d_mid, d_in)
        out = term if out is None else out + term
    return out


def structure_residual_algebra(A: AInftyAlgebraData, n_max: int | None = None) -> float:
    """``max_n max |Σ b_{i+1+k}(id^i ⊗ b_j ⊗ id^k)|`` over ``n ≤ n_max``."""
    n_max = n_max or A.n_max
    worst = 0.0
    for n in range(1, n_max + 1):
        R = _insert(lambda r: A.flat(r) if r <= n_max else None, A, n, A.dim)
        worst = max(worst, float(np.abs(R).max()))
    return worst


def morphism_residual(psi: AInftyMorphismData, A: AInftyAlgebraData, B: AInftyAlgebraData,
                      n_max: int | None = None) -> float:
    """``Σ ψ(id ⊗ b ⊗ id) - Σ b'(ψ ⊗ … ⊗ ψ)`` up to arity ``n_max``."""
    n_max = n_max or min(psi.n_max, A.n_max, B.n_max)
    dA, dB = A.dim, B.dim
    worst = 0.0
    for n in range(1, n_max + 1):
        lhs = _insert(psi.flat, A, n, dB)
        rhs = _push(B.flat, psi.flat, n, dB, dA)
        diff = lhs - (rhs if rhs is not None else 0.0)
        worst = max(worst, float(np.abs(diff).max()))
    return worst


def compose_ainfty(psi2: AInftyMorphismData, psi1: AInftyMorphismData,
                   n_max: int | None = None) -> AInftyMorphismData:
    """``(ψ' ∘ ψ)_n = Σ ψ'_r(ψ_{i_1} ⊗ … ⊗ ψ_{i_r})``."""
    n_max = n_max or min(psi1.n_max, psi2.n_max)
    dA, dB, dC = psi1.source_degrees.size, psi1.target_degrees.size, psi2.target_degrees.size
    maps = {}
    for n in range(1, n_max + 1):
        M = _push(psi2.flat, psi1.flat, n, dB, dA)
        maps[n] = (M if M is not None else np.zeros((dC, dA ** n))).reshape((dC,) + (dA,) * n)
    return AInftyMorphismData(psi1.source_degrees, psi2.target_degrees, maps, n_max)


def inverse_morphism(psi: AInftyMorphismData, n_max: int | None = None) -> AInftyMorphismData:
    """Coalgebra inverse of a morphism with invertible linear part."""
    n_max = n_max or psi.n_max
    dA, dB = psi.source_degrees.size, psi.target_degrees.size
    if dA != dB:
        raise AInftyError("only square linear parts can be inverted")
    inv1 = np.linalg.inv(psi.flat(1))
    phi = {1: inv1.reshape(dA, dB)}
    for n in range(2, n_max + 1):
        # Σ_r ψ_r(φ_{i_1} ⊗ …) = 0 for n ≥ 2; the r = 1 term is ψ_1 φ_n
        cur = AInftyMorphismData(psi.target_degrees, psi.source_degrees, phi, n_max)
        rest = np.zeros((dB, dB ** n))
        for parts in _compositions(n):
            if len(parts) == 1:
                continue
            rest += _apply_components(psi.flat(len(parts)), parts, cur.flat, dB, dB)
        phi[n] = (-inv1 @ rest).reshape((dA,) + (dB,) * n)
    return AInftyMorphismData(psi.target_degrees, psi.source_degrees, phi, n_max)


def transport_structure(B: AInftyAlgebraData, phi: AInftyMorphismData,
                        n_max: int | None = None) -> AInftyAlgebraData:
    """The A∞ structure on the target of ``φ: B → A`` making ``φ`` a morphism.

    Solves ``Σ φ(id ⊗ b ⊗ id) = Σ b^A(φ ⊗ … ⊗ φ)`` arity by arity; needs an
    invertible linear part.
    """
    n_max = n_max or min(B.n_max, phi.n_max)
    dA = phi.target_degrees.size
    dB = B.dim
    inv1 = np.linalg.inv(phi.flat(1))
    ops: dict = {}
    A = AInftyAlgebraData(phi.target_degrees, ops, n_max)
    for n in range(1, n_max + 1):
        lhs = _insert(phi.flat, B, n, dA)
        for parts in _compositions(n):
            if len(parts) == n:
                continue
            lhs -= _apply_components(A.flat(len(parts)), parts, phi.flat, dA, dB)
        inv_n = reduce(np.kron, [inv1] * n)
        ops[n] = (lhs @ inv_n).reshape((dA,) * (n + 1))
        A = AInftyAlgebraData(phi.target_degrees, ops, n_max)
    return A


# ------------------------------------------------------ Maurer-Cartan

def _power(x: np.ndarray, n: int) -> np.ndarray:
    return reduce(np.kron, [x] * n) if n else np.ones(1)


def mc_residual_ainfty(A: AInftyAlgebraData, x: np.ndarray, n_max: int | None = None) -> float:
    """``|Σ_{n ≤ n_max} b_n(x^{⊗n})|``; ``x`` must have suspended degree 0 (degree 1 in ``A``)."""
    n_max = n_max or A.n_max
    x = np.asarray(x, float)
    if np.any(x[A.degrees != 1]):
        raise AInftyError("a Maurer-Cartan element must have degree 1")
    total = sum(A.flat(n) @ _power(x, n) for n in range(1, n_max + 1))
    return float(np.abs(total).max())


def mc_pushforward(psi: AInftyMorphismData, x: np.ndarray, n_max: int | None = None,
                   tol: float = 1e-12) -> np.ndarray:
    """``ψ(x) = Σ_n ψ_n(x^{⊗n})``; raises :class:`DivergenceError` unless the terms die out."""
    n_max = n_max or psi.n_max
    x = np.asarray(x, float)
    out = np.zeros(psi.target_degrees.size)
    last = None
    for n in range(1, n_max + 1):
        last = psi.flat(n) @ _power(x, n)
        out = out + last
    stored = max(psi.maps) if psi.maps else 0
    if stored >= n_max and last is not None and np.abs(last).max() > tol:
        raise DivergenceError(f"term {n_max} of the pushforward is {np.abs(last).max():.3e}")
    return out


def _insert_x(flat_by_arity, x, n: int, extra: int, d_out: int, d: int) -> np.ndarray:
    """``Σ_{l_0+…+l_n = extra} T_{n+extra}(x^{l_0} ⊗ a_1 ⊗ x^{l_1} ⊗ … ⊗ a_n ⊗ x^{l_n})``."""
    T = flat_by_arity(n + extra)
    if T is None or not T.any():
        return np.zeros((d_out, d ** n))
    out = np.zeros((d_out, d ** n))
    for ls in product(range(extra + 1), repeat=n + 1):
        if sum(ls) != extra:
            continue
        M = T.reshape((d_out,) + (d,) * (n + extra))
        # contract x into the slots belonging to the l's, left to right
        axes = []
        pos = 1
        for slot, l in enumerate(ls):
            axes.extend(range(pos, pos + l))
            pos += l
            if slot < n:
                pos += 1
        for ax in sorted(axes, reverse=True):
            M = np.tensordot(M, x, axes=([ax], [0]))
        out += M.reshape(d_out, d ** n)
    return out


def _depth(n_max: int, depth: int | None) -> int:
    depth = n_max // 2 if depth is None else depth
    if not 0 <= depth < n_max:
        raise AInftyError("insertion depth must lie in [0, n_max)")
    return depth


def twist_algebra(A: AInftyAlgebraData, x: np.ndarray, n_max: int | None = None,
                  tol: float = 1e-10, depth: int | None = None) -> AInftyAlgebraData:
    """``(b_x)_n = Σ b_{n+Σl}(x^{l_0} ⊗ a_1 ⊗ … ⊗ a_n ⊗ x^{l_n})`` for a Maurer-Cartan ``x``.

    ``x`` must satisfy the MC equation within ``tol``.  Operations of ``A``
    are known up to arity ``n_max``; terms with more than ``depth`` copies of
    ``x`` are assumed to vanish (``x`` nilpotent), so the twisted structure
    is exact up to arity ``n_max - depth``, which becomes its ``n_max``.
    """
    n_max = n_max or A.n_max
    depth = _depth(n_max, depth)
    res = mc_residual_ainfty(A, x, n_max)
    if res > tol:
        raise AInftyError(f"twisting element violates the Maurer-Cartan equation ({res:.3e})")
    d = A.dim
    ops = {}
    for n in range(1, n_max + 1):
        acc = np.zeros((d, d ** n))
        for extra in range(0, n_max - n + 1):
            acc += _insert_x(lambda r: A.flat(r) if r <= n_max else None, x, n, extra, d, d)
        ops[n] = acc.reshape((d,) * (n + 1))
    return AInftyAlgebraData(A.degrees, ops, n_max - depth)


def twist_morphism(psi: AInftyMorphismData, x: np.ndarray, n_max: int | None = None,
                   depth: int | None = None) -> AInftyMorphismData:
    """``(ψ_x)_n = Σ ψ_{n+Σl}(x^{l_0} ⊗ a_1 ⊗ … ⊗ a_n ⊗ x^{l_n})``, a morphism ``A_x → B_{ψ(x)}``.

    Truncation follows :func:`twist_algebra`.
    """
    n_max = n_max or psi.n_max
    depth = _depth(n_max, depth)
    dA, dB = psi.source_degrees.size, psi.target_degrees.size
    maps = {}
    for n in range(1, n_max + 1):
        acc = np.zeros((dB, dA ** n))
        for extra in range(0, n_max - n + 1):
            acc += _insert_x(lambda r: psi.flat(r) if r <= n_max else None, x, n, extra, dB, dA)
        maps[n] = acc.reshape((dB,) + (dA,) * n)
    return AInftyMorphismData(psi.source_degrees, psi.target_degrees, maps, n_max - depth)


# --------------------------------------------------------------- tensor

def _tensor_sign(E_deg: np.ndarray, A_deg: np.ndarray, n: int, with_e_parity: bool) -> np.ndarray:
    """Sign over ``(e_1..e_n, a_1..a_n)`` index grids.

    ``(-1)^{Σ_i [a_i](|e_{i+1}| + … + |e_n|)}``, times ``(-1)^{Σ|e_i|}`` for
    odd operations.
    """
    dE, dA = E_deg.size, A_deg.size
    shape = (dE,) * n + (dA,) * n
    expo = np.zeros(shape, dtype=int)
    for i in range(n):
        a_deg = (A_deg - 1).reshape((1,) * (n + i) + (dA,) + (1,) * (n - i - 1))
        for j in range(i + 1, n):
            e_deg = E_deg.reshape((1,) * j + (dE,) + (1,) * (2 * n - j - 1))
            expo = expo + a_deg * e_deg
    if with_e_parity:
        for j in range(n):
            expo = expo + E_deg.reshape((1,) * j + (dE,) + (1,) * (2 * n - j - 1))
    return (-1.0) ** expo


def _iterated_product(E: Dga, n: int) -> np.ndarray:
    """``e_1 ⋯ e_n`` as an array of shape ``(d_E,) * (n + 1)``."""
    P = np.eye(E.dim)
    for _ in range(n - 1):
        P = np.einsum("cab,a...->cb...", E.mult, P)
        P = np.moveaxis(P, 1, -1)
    return P


def _tensor_component(E: Dga, T: np.ndarray, n: int, in_deg: np.ndarray, odd: bool) -> np.ndarray:
    """Assemble ``±(e_1⋯e_n) ⊗ T(a_1..a_n)`` on the ``E ⊗`` bases (index ``e * d + a``)."""
    dE = E.dim
    d_out, d_in = T.shape[0], in_deg.size
    P = _iterated_product(E, n)  # (dE_out, e1..en)
    S = _tensor_sign(E.degrees, in_deg, n, odd)  # (e1..en, a1..an)
    full = np.einsum(P, [0] + list(range(2, n + 2)), T, [1] + list(range(n + 2, 2 * n + 2)),
                     S, list(range(2, 2 * n + 2)), list(range(2 * n + 2)))
    order = [0, 1]
    for i in range(n):
        order += [2 + i, n + 2 + i]
    full = np.transpose(full, order)
    return full.reshape((dE * d_out,) + (dE * d_in,) * n)


def tensor_with_algebra(E: Dga, A: AInftyAlgebraData) -> AInftyAlgebraData:
    """A∞ structure on ``E ⊗ A`` for a dga ``E``.

    ``b_n(s(e_1⊗a_1) … s(e_n⊗a_n)) = ±s(e_1⋯e_n ⊗ c)`` with ``sc = b_n(sa_1…sa_n)``
    and sign ``(-1)^{Σ_i [a_i](|e_{i+1}|+…+|e_n|) + Σ|e_i|}``; ``b_1`` also
    gets ``s(de ⊗ a)``.
    """
    deg = (E.degrees[:, None] + A.degrees[None, :]).ravel()
    ops = {}
    for n in range(1, A.n_max + 1):
        T = A.op(n)
        if T.any():
            ops[n] = _tensor_component(E, T, n, A.degrees, odd=True)
    dA = A.dim
    dE_part = np.einsum("xe,ya->xyea", E.diff, np.eye(dA)).reshape(E.dim * dA, E.dim * dA)
    ops[1] = ops.get(1, np.zeros((E.dim * dA,) * 2)) + dE_part
    return AInftyAlgebraData(deg, ops, A.n_max)


def tensor_with_morphism(E: Dga, psi: AInftyMorphismData) -> AInftyMorphismData:
    """``id_E ⊗ ψ``: ``(-1)^{Σ_i [a_i](|e_{i+1}|+…+|e_n|)} (e_1⋯e_n) ⊗ ψ_n(…)``."""
    src = (E.degrees[:, None] + psi.source_degrees[None, :]).ravel()
    tgt = (E.degrees[:, None] + psi.target_degrees[None, :]).ravel()
    maps = {}
    for n in range(1, psi.n_max + 1):
        T = psi.comp(n)
        if T.any():
            maps[n] = _tensor_component(E, T, n, psi.source_degrees, odd=False)
    return AInftyMorphismData(src, tgt, maps, psi.n_max)


# ------------------------------------------------------------------ gauges

def _left_right(A: Dga):
    """Matrices of left and right multiplication, indexed ``[c, b, a]``."""
    return np.transpose(A.mult, (0, 2, 1)), A.mult


def gauge_mc_element(A: Dga, f: np.ndarray, f_inv: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """``u_f = f^{-1} df`` for an invertible degree-0 element ``f``."""
    f, f_inv = np.asarray(f, float), np.asarray(f_inv, float)
    if A.unit is None:
        raise AInftyError("gauge elements need a unital algebra")
    if np.any(f[A.degrees != 0]) or np.any(f_inv[A.degrees != 0]):
        raise AInftyError("gauge elements must have degree 0")
    defect = max(np.abs(A.product(f, f_inv) - A.unit).max(), np.abs(A.product(f_inv, f) - A.unit).max())
    if defect > tol:
        raise AInftyError(f"supplied inverse is off by {defect:.3e}")
    return A.product(f_inv, A.d(f))


def conjugation_morphism(A: Dga, f: np.ndarray, f_inv: np.ndarray,
                         n_max: int = DEFAULT_N_MAX) -> AInftyMorphismData:
    """Strict morphism ``a ↦ f^{-1} a f`` from ``A`` to ``A`` twisted by ``u_f``."""
    M = np.einsum("cxb,xpa,p,b->ca", A.mult, A.mult, np.asarray(f_inv, float), np.asarray(f, float))
    return strict_morphism(M, A.degrees, A.degrees, n_max)
