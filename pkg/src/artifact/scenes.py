"""Bundled test scenes: an interval, a triangle with a two-term complex, the octahedral sphere."""

from __future__ import annotations

import numpy as np

from .generators import random_flat, random_flat_connection
from .graded_core import GradedVectorSpace
from .holonomy import FormValuedComplex
from .poly_forms import PolyForm, pullback_affine
from .simplex_geom import face_map
from .simplicial_reps import FiniteSimplicialSet

__all__ = [
    "OCTAHEDRON_POSITIONS",
    "octahedron_triangles",
    "restrict_to_faces",
    "interval_scene",
    "triangle_scene",
    "ordinary_triangle_scene",
    "sphere_scene",
    "sphere_orientations",
    "SPHERE_SPACE",
    "SPHERE_PHI",
]

OCTAHEDRON_POSITIONS = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]],
                                dtype=float)
SPHERE_SPACE = GradedVectorSpace({0: 1, 1: 1})
SPHERE_PHI = np.array([[0.0, 1.0], [0.0, 0.0]])  # ℝ[-1] → ℝ, degree -1


def octahedron_triangles() -> list[tuple]:
    """One triangle per octant: vertex ``0|1`` on the x axis, ``2|3`` on y, ``4|5`` on z."""
    return [(0 if sx > 0 else 1, 2 if sy > 0 else 3, 4 if sz > 0 else 5)
            for sx in (1, -1) for sy in (1, -1) for sz in (1, -1)]


def restrict_to_faces(complex_: FiniteSimplicialSet, forms: dict) -> dict:
    """Fill in forms on faces by restricting from the first listed cofacet."""
    out = {tuple(s): f for s, f in forms.items()}
    for k in range(complex_.dim, 0, -1):
        for s in complex_.simplices(k):
            if s not in out:
                continue
            for i in range(k + 1):
                face = FiniteSimplicialSet.face(s, i)
                if face not in out:
                    out[face] = pullback_affine(out[s], face_map(i, k - 1))
    return out


def interval_scene(seed: int = 7, rank: int = 2) -> FormValuedComplex:
    """One edge with a random polynomial connection ``a(t) dt`` on a degree-0 bundle."""
    rng = np.random.default_rng(seed)
    V = GradedVectorSpace({0: rank})
    terms = {((0,), (j,)): rng.uniform(-1, 1, (rank, rank)) for j in range(3)}
    cx = FiniteSimplicialSet([(0, 1)])
    return FormValuedComplex(cx, V, restrict_to_faces(cx, {(0, 1): PolyForm(V, 1, terms)}))


def triangle_scene(seed: int = 11) -> FormValuedComplex:
    """One triangle carrying a random flat superconnection on ``ℝ ⊕ ℝ[-1]``-type data."""
    rng = np.random.default_rng(seed)
    V = GradedVectorSpace({0: 2, 1: 2})
    cx = FiniteSimplicialSet([(0, 1, 2)])
    return FormValuedComplex(cx, V, restrict_to_faces(cx, {(0, 1, 2): random_flat(rng, V, 2)}))


def ordinary_triangle_scene(seed: int = 13, rank: int = 2) -> FormValuedComplex:
    """Flat ordinary connection ``g^{-1}dg`` on one triangle (degree-0 bundle)."""
    rng = np.random.default_rng(seed)
    cx = FiniteSimplicialSet([(0, 1, 2)])
    form = random_flat_connection(rng, rank, 2)
    return FormValuedComplex(cx, form.space, restrict_to_faces(cx, {(0, 1, 2): form}))


def sphere_orientations(positions=OCTAHEDRON_POSITIONS) -> dict:
    """``±1`` per triangle: the sign of the determinant of its vertex positions."""
    pts = np.asarray(positions, float)
    return {t: float(np.sign(np.linalg.det(pts[list(t)]))) for t in octahedron_triangles()}


def sphere_scene(total_mass: float = 4 * np.pi, twisted: bool = True) -> FormValuedComplex:
    """Octahedral sphere with ``ω = η ⊗ φ`` on each triangle, ``η = c dt_1∧dt_2``.

    Each triangle gets mass ``total_mass / 8`` with the sign of its
    orientation, so ``c = ±2 · total_mass / 8``.  ``twisted=False`` gives the
    zero form (the untwisted control).
    """
    cx = FiniteSimplicialSet(octahedron_triangles())
    forms = {}
    for t, eps in sphere_orientations().items():
        c = eps * 2.0 * total_mass / 8.0 if twisted else 0.0
        forms[t] = PolyForm(SPHERE_SPACE, 2, {((0, 1), (0, 0)): c * SPHERE_PHI})
    return FormValuedComplex(cx, SPHERE_SPACE, restrict_to_faces(cx, forms))
