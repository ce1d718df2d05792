"""Finite-dimensional graded vector spaces, homogeneous maps and Koszul signs.

Basis vectors of a :class:`GradedVectorSpace` are ordered by ascending degree,
so every linear map between two such spaces has a canonical dense matrix.
Most of the package works with those dense matrices directly and uses the
parity operator ``P = diag((-1)^deg)`` to realise Koszul signs on possibly
inhomogeneous operators.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "DimensionError",
    "GradedVectorSpace",
    "GradedMap",
    "compose_graded",
    "koszul_sign",
    "permutation_sign",
    "desuspension_sign",
    "endo_degree_mask",
    "homogeneous_parts",
    "DEFAULT_DEGREE_WINDOW",
]

DEFAULT_DEGREE_WINDOW = (-4, 4)


class DimensionError(ValueError):
    """Raised when block shapes or spaces do not match."""


@dataclass(frozen=True)
class GradedVectorSpace:
    """A finite graded real vector space ``V = ⊕_k V^k``.

    Parameters
    ----------
    dims : mapping int -> int
        Dimension of each degree. Zero entries are dropped.
    """

    dims: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for deg, dim in dict(self.dims).items():
            deg, dim = int(deg), int(dim)
            if dim < 0:
                raise DimensionError(f"negative dimension {dim} in degree {deg}")
            if dim:
                clean[deg] = dim
        object.__setattr__(self, "dims", dict(sorted(clean.items())))

    def __hash__(self):
        return hash(tuple(self.dims.items()))

    def __eq__(self, other):
        return isinstance(other, GradedVectorSpace) and self.dims == other.dims

    def __repr__(self):
        inner = ", ".join(f"{d}: {n}" for d, n in self.dims.items())
        return f"GradedVectorSpace({{{inner}}})"

    @classmethod
    def concentrated(cls, dim: int, degree: int = 0) -> "GradedVectorSpace":
        return cls({degree: dim})

    def dim(self, degree: int) -> int:
        return self.dims.get(int(degree), 0)

    @property
    def total_dim(self) -> int:
        return sum(self.dims.values())

    def degrees(self) -> list[int]:
        return list(self.dims)

    def offset(self, degree: int) -> int:
        """Index of the first basis vector of the given degree."""
        return sum(n for d, n in self.dims.items() if d < degree)

    def slice(self, degree: int) -> slice:
        start = self.offset(degree)
        return slice(start, start + self.dim(degree))

    def basis_degrees(self) -> np.ndarray:
        out = [d for d, n in self.dims.items() for _ in range(n)]
        return np.asarray(out, dtype=int)

    def parity(self) -> np.ndarray:
        """Diagonal parity operator ``(-1)^deg``."""
        return np.diag((-1.0) ** self.basis_degrees())

    def shift(self, k: int = 1) -> "GradedVectorSpace":
        """Suspension ``s^k V`` with ``(sV)^j = V^{j+1}``."""
        return GradedVectorSpace({d - k: n for d, n in self.dims.items()})

    def direct_sum(self, other: "GradedVectorSpace") -> "GradedVectorSpace":
        out = dict(self.dims)
        for d, n in other.dims.items():
            out[d] = out.get(d, 0) + n
        return GradedVectorSpace(out)

    def within(self, window: tuple[int, int] = DEFAULT_DEGREE_WINDOW) -> bool:
        lo, hi = window
        return all(lo <= d <= hi for d in self.dims)


def endo_degree_mask(target: GradedVectorSpace, source: GradedVectorSpace,
                     degree: int) -> np.ndarray:
    """Boolean mask of matrix entries allowed for a map of the given degree."""
    rows = target.basis_degrees()
    cols = source.basis_degrees()
    return (rows[:, None] - cols[None, :]) == degree


def homogeneous_parts(matrix: np.ndarray, target: GradedVectorSpace,
                      source: GradedVectorSpace | None = None) -> dict[int, np.ndarray]:
    """Split a dense matrix into its homogeneous components by degree."""
    source = target if source is None else source
    rows = target.basis_degrees()
    cols = source.basis_degrees()
    diff = rows[:, None] - cols[None, :]
    out = {}
    for d in np.unique(diff):
        part = np.where(diff == d, matrix, 0.0)
        if np.any(part):
            out[int(d)] = part
    return out


@dataclass(frozen=True)
class GradedMap:
    """Degree-homogeneous linear map stored as one block per source degree.

    ``blocks[k]`` has shape ``(target.dim(k + degree), source.dim(k))``.
    Missing blocks are zero.
    """

    source: GradedVectorSpace
    target: GradedVectorSpace
    degree: int
    blocks: Mapping[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for k, block in dict(self.blocks).items():
            k = int(k)
            block = np.array(block, dtype=float)
            block.setflags(write=False)
            shape = (self.target.dim(k + self.degree), self.source.dim(k))
            if block.shape != shape:
                raise DimensionError(
                    f"block for source degree {k} has shape {block.shape}, expected {shape}")
            if block.size:
                clean[k] = block
        object.__setattr__(self, "blocks", clean)

    @classmethod
    def zero(cls, source, target, degree=0) -> "GradedMap":
        return cls(source, target, degree, {})

    @classmethod
    def identity(cls, space: GradedVectorSpace) -> "GradedMap":
        return cls(space, space, 0, {d: np.eye(n) for d, n in space.dims.items()})

    @classmethod
    def from_dense(cls, matrix, source: GradedVectorSpace, target: GradedVectorSpace,
                   degree: int, atol: float = 1e-12) -> "GradedMap":
        """Extract the degree-``degree`` blocks; off-degree entries must vanish."""
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (target.total_dim, source.total_dim):
            raise DimensionError(f"matrix shape {matrix.shape} does not match spaces")
        mask = endo_degree_mask(target, source, degree)
        stray = np.abs(np.where(mask, 0.0, matrix)).max(initial=0.0)
        if stray > atol:
            raise DimensionError(f"matrix has entries of degree != {degree} (max {stray:.3g})")
        blocks = {}
        for k in source.degrees():
            if target.dim(k + degree):
                blocks[k] = matrix[target.slice(k + degree), source.slice(k)]
        return cls(source, target, degree, blocks)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.target.total_dim, self.source.total_dim))
        for k, block in self.blocks.items():
            out[self.target.slice(k + self.degree), self.source.slice(k)] = block
        return out

    def norm(self) -> float:
        return float(np.linalg.norm(self.to_dense(), 2)) if self.blocks else 0.0

    def __add__(self, other: "GradedMap") -> "GradedMap":
        if (self.source, self.target, self.degree) != (other.source, other.target, other.degree):
            raise DimensionError("cannot add maps with different signatures")
        return GradedMap.from_dense(self.to_dense() + other.to_dense(),
                                    self.source, self.target, self.degree)

    def scale(self, c: float) -> "GradedMap":
        return GradedMap(self.source, self.target, self.degree,
                         {k: c * b for k, b in self.blocks.items()})


def compose_graded(g: GradedMap, f: GradedMap) -> GradedMap:
    """Return ``g ∘ f``; its degree is ``g.degree + f.degree``."""
    if f.target != g.source:
        raise DimensionError(f"cannot compose: {f.target} != {g.source}")
    degree = g.degree + f.degree
    blocks = {}
    for k, fb in f.blocks.items():
        gb = g.blocks.get(k + f.degree)
        if gb is not None and g.target.dim(k + degree):
            blocks[k] = gb @ fb
    return GradedMap(f.source, g.target, degree, blocks)


def koszul_sign(degree_sequence_a: Sequence[int], degree_sequence_b: Sequence[int]) -> int:
    """Sign for moving the block of symbols ``b`` past the block ``a``.

    ``a_1 ... a_p b_1 ... b_q  ->  b_1 ... b_q a_1 ... a_p`` picks up
    ``(-1)^{(Σa)(Σb)}``.
    """
    return -1 if (sum(degree_sequence_a) * sum(degree_sequence_b)) % 2 else 1


def permutation_sign(degrees: Sequence[int], perm: Sequence[int]) -> int:
    """Koszul sign of reordering graded symbols.

    ``perm[j]`` is the original position of the symbol placed at slot ``j``.
    Every pair that changes relative order contributes ``(-1)^{|x||y|}``.
    """
    sign = 1
    for i, j in combinations(range(len(perm)), 2):
        if perm[i] > perm[j] and degrees[perm[i]] % 2 and degrees[perm[j]] % 2:
            sign = -sign
    return sign


def desuspension_sign(suspended_degrees: Iterable[int]) -> int:
    """Sign relating ``(s^{-1})^{⊗n}(sa_1 ⊗ … ⊗ sa_n)`` to ``a_1 ⊗ … ⊗ a_n``.

    The i-th desuspension passes ``sa_1 … sa_{i-1}``; the total is
    ``(-1)^{Σ [a_i](n-i)}``.
    """
    degs = list(suspended_degrees)
    sign = 1
    for i in range(len(degs)):
        sign *= koszul_sign([1], degs[:i])
    return sign
