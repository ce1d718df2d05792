"""Geometry of the ordered simplex and of Igusa's cube-to-simplex path families.

The k-simplex is ``{1 >= t_1 >= ... >= t_k >= 0}`` with vertices
``v_i = (1,...,1,0,...,0)`` (``i`` ones).  Affine maps between simplices are
stored as ``y = A t + b`` and are usually built from vertex images.

A *path family* is a map ``[0,1] x I^m -> Δ_K``.  It exposes vectorised
values, a.e. Jacobians with respect to ``(t, x_1..x_m)`` and the list of
``t`` breakpoints between which it is smooth.  The quadrature in
:mod:`artifact.chen_engine` only talks to this interface.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GeometryError",
    "NonSmoothPointError",
    "SimplexPoint",
    "CubePoint",
    "AffineSimplexMap",
    "vertex",
    "face_map",
    "degeneracy_map",
    "back_face",
    "front_face",
    "vertex_map",
    "simplex_from_vertices",
    "pi_cube_to_simplex",
    "theta_path",
    "theta_jacobian",
    "theta_map",
    "theta_map_jacobian",
    "cube_face_minus",
    "cube_face_plus",
    "lemma_reparametrization",
    "mu_concat",
    "PathFamily",
    "IgusaFamily",
    "ConcatFamily",
    "ComposedFamily",
]

ORDER_TOL = 1e-12
TIE_TOL = 1e-10


class GeometryError(ValueError):
    """Invalid index, point outside a domain or endpoint mismatch."""


class NonSmoothPointError(GeometryError):
    """The requested Jacobian sits on the non-smooth locus of a path family."""


@dataclass(frozen=True)
class SimplexPoint:
    t: tuple

    def __post_init__(self):
        t = tuple(float(v) for v in self.t)
        seq = (1.0,) + t + (0.0,)
        if any(seq[i] < seq[i + 1] - ORDER_TOL for i in range(len(seq) - 1)):
            raise GeometryError(f"{t} is not in the simplex")
        object.__setattr__(self, "t", t)

    @property
    def k(self) -> int:
        return len(self.t)


@dataclass(frozen=True)
class CubePoint:
    x: tuple

    def __post_init__(self):
        x = tuple(float(v) for v in self.x)
        if any(v < -ORDER_TOL or v > 1 + ORDER_TOL for v in x):
            raise GeometryError(f"{x} is not in the cube")
        object.__setattr__(self, "x", x)

    @property
    def m(self) -> int:
        return len(self.x)


def vertex(i: int, k: int) -> np.ndarray:
    """The i-th vertex of Δ_k."""
    if not 0 <= i <= k:
        raise GeometryError(f"vertex index {i} out of range for Δ_{k}")
    return np.array([1.0] * i + [0.0] * (k - i))


@dataclass(frozen=True)
class AffineSimplexMap:
    """Affine map ``Δ_source -> Δ_target``, ``y = matrix @ t + offset``."""

    source_dim: int
    target_dim: int
    matrix: np.ndarray = field(repr=False)
    offset: np.ndarray = field(repr=False)

    def __post_init__(self):
        A = np.asarray(self.matrix, dtype=float).reshape(self.target_dim, self.source_dim)
        b = np.asarray(self.offset, dtype=float).reshape(self.target_dim)
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "offset", b)

    @classmethod
    def from_vertices(cls, images) -> "AffineSimplexMap":
        """Map sending ``v_j`` to ``images[j]`` (rows in target coordinates)."""
        P = np.asarray(images, dtype=float)
        if P.ndim != 2:
            raise GeometryError("vertex images must form a 2d array")
        s = P.shape[0] - 1
        A = (P[1:] - P[:-1]).T if s else np.zeros((P.shape[1], 0))
        return cls(s, P.shape[1], A, P[0])

    @classmethod
    def identity(cls, k: int) -> "AffineSimplexMap":
        return cls(k, k, np.eye(k), np.zeros(k))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return t @ self.matrix.T + self.offset

    def vertex_images(self) -> np.ndarray:
        return np.array([self(vertex(i, self.source_dim)) for i in range(self.source_dim + 1)])

    def compose(self, inner: "AffineSimplexMap") -> "AffineSimplexMap":
        """``self ∘ inner``."""
        if inner.target_dim != self.source_dim:
            raise GeometryError("dimension mismatch in composition")
        return AffineSimplexMap(inner.source_dim, self.target_dim,
                                self.matrix @ inner.matrix,
                                self.matrix @ inner.offset + self.offset)

    def is_into_simplex(self, tol: float = 1e-9) -> bool:
        for p in self.vertex_images():
            seq = np.concatenate([[1.0], p, [0.0]])
            if np.any(np.diff(seq) > tol):
                return False
        return True

    def allclose(self, other: "AffineSimplexMap", tol: float = 0.0) -> bool:
        return (self.source_dim == other.source_dim and self.target_dim == other.target_dim
                and np.allclose(self.matrix, other.matrix, atol=tol, rtol=0)
                and np.allclose(self.offset, other.offset, atol=tol, rtol=0))


def simplex_from_vertices(images) -> AffineSimplexMap:
    amap = AffineSimplexMap.from_vertices(images)
    if not amap.is_into_simplex():
        raise GeometryError("vertex images leave the target simplex")
    return amap


def face_map(i: int, k: int) -> AffineSimplexMap:
    """``∂_i : Δ_k -> Δ_{k+1}``; it misses vertex ``i`` of Δ_{k+1}."""
    if not 0 <= i <= k + 1:
        raise GeometryError(f"face index {i} out of range for Δ_{k}")
    keep = [j for j in range(k + 2) if j != i]
    return AffineSimplexMap.from_vertices([vertex(j, k + 1) for j in keep])


def degeneracy_map(i: int, k: int) -> AffineSimplexMap:
    """``ε_i : Δ_k -> Δ_{k-1}`` dropping the coordinate ``t_i``."""
    if not 1 <= i <= k:
        raise GeometryError(f"degeneracy index {i} out of range for Δ_{k}")
    A = np.delete(np.eye(k), i - 1, axis=0)
    return AffineSimplexMap(k, k - 1, A, np.zeros(k - 1))


def front_face(i: int, k: int) -> AffineSimplexMap:
    """``V_i : Δ_i -> Δ_k``, ``t ↦ (t, 0, ..., 0)``; vertices ``v_0..v_i``."""
    if not 0 <= i <= k:
        raise GeometryError(f"front face index {i} out of range for Δ_{k}")
    return AffineSimplexMap.from_vertices([vertex(j, k) for j in range(i + 1)])


def back_face(i: int, k: int) -> AffineSimplexMap:
    """``U_i : Δ_i -> Δ_k``, ``t ↦ (1, ..., 1, t)``; vertices ``v_{k-i}..v_k``."""
    if not 0 <= i <= k:
        raise GeometryError(f"back face index {i} out of range for Δ_{k}")
    return AffineSimplexMap.from_vertices([vertex(j, k) for j in range(k - i, k + 1)])


def vertex_map(i: int, k: int) -> AffineSimplexMap:
    """Inclusion of the point ``v_i`` as the composite of a front and a back face."""
    return front_face(i, k).compose(back_face(0, i))


# ---------------------------------------------------------------- Igusa maps

def pi_cube_to_simplex(k: int, x) -> SimplexPoint:
    """``π_k(x)_i = max(x_i, ..., x_k)``."""
    x = CubePoint(tuple(x)).x
    if len(x) != k:
        raise GeometryError(f"expected {k} cube coordinates, got {len(x)}")
    t = np.maximum.accumulate(np.asarray(x[::-1]))[::-1] if k else np.zeros(0)
    return SimplexPoint(tuple(t))


def _theta_eval(k: int, t: np.ndarray, x: np.ndarray, with_jacobian: bool):
    """Vectorised Igusa path ``Θ_(k)(x)(t)`` and its a.e. Jacobian.

    On segment ``i`` (``(k-i)/k <= t <= (k-i+1)/k``) the cube path sits at
    ``(x_1..x_{i-1}, s, 0..0)`` with ``s = x_i (k-i+1-kt)`` and ``x_k = 1``.
    """
    P = t.shape[0]
    xe = np.concatenate([x, np.ones((P, 1))], axis=1)  # (P, k)
    seg = np.clip(k - np.floor(k * t).astype(int), 1, k)  # 1-based segment
    rows = np.arange(P)
    lin = k - seg + 1 - k * t
    s = xe[rows, seg - 1] * lin
    cols = np.arange(k)[None, :]
    cube = np.where(cols < (seg - 1)[:, None], xe, 0.0)
    cube[rows, seg - 1] = s
    # reverse cumulative max with argmax
    y = np.empty((P, k))
    arg = np.empty((P, k), dtype=int)
    cur = np.full(P, -np.inf)
    cur_arg = np.full(P, k - 1)
    for j in range(k - 1, -1, -1):
        better = cube[:, j] > cur
        cur = np.where(better, cube[:, j], cur)
        cur_arg = np.where(better, j, cur_arg)
        y[:, j] = cur
        arg[:, j] = cur_arg
    if not with_jacobian:
        return y, None
    # derivative of each cube coordinate w.r.t. (t, x_1..x_{k-1})
    dcube = np.zeros((P, k, k))
    m = k - 1
    for l in range(m):
        dcube[:, l, 1 + l] = (l < seg - 1).astype(float)
    dcube[rows, seg - 1, :] = 0.0
    dcube[rows, seg - 1, 0] = -k * xe[rows, seg - 1]
    inner = seg < k
    dcube[rows[inner], seg[inner] - 1, seg[inner]] = lin[inner]
    J = dcube[rows[:, None], arg, :]
    return y, J


def theta_path(k: int, x, t: float) -> SimplexPoint:
    """Point ``Θ_(k)(x)(t)`` of Igusa's path, running from ``v_k`` to ``v_0``."""
    if k < 1:
        raise GeometryError("theta_path needs k >= 1")
    x = np.asarray(CubePoint(tuple(x)).x, dtype=float)
    if x.shape != (k - 1,):
        raise GeometryError(f"expected {k - 1} cube coordinates")
    if not -ORDER_TOL <= t <= 1 + ORDER_TOL:
        raise GeometryError("time outside [0, 1]")
    y, _ = _theta_eval(k, np.array([float(t)]), x[None, :], False)
    return SimplexPoint(tuple(np.clip(y[0], 0.0, 1.0)))


def _theta_ties(k: int, x: np.ndarray, t: float) -> bool:
    if k > 1 and np.any(np.abs(k * t - np.round(k * t)) < TIE_TOL) and 0 < t < 1:
        return True
    xe = np.concatenate([x, [1.0]])
    seg = int(np.clip(k - np.floor(k * t), 1, k))
    s = xe[seg - 1] * (k - seg + 1 - k * t)
    vals = np.concatenate([xe[:seg - 1], [s]])
    diffs = np.abs(vals[:, None] - vals[None, :])[np.triu_indices(len(vals), 1)]
    return bool(np.any(diffs < TIE_TOL))


def theta_jacobian(k: int, x, t: float) -> np.ndarray:
    """``∂(t_1..t_k)/∂(t, x_1..x_{k-1})`` at a point of general position."""
    x = np.asarray(CubePoint(tuple(x)).x, dtype=float)
    if x.shape != (k - 1,):
        raise GeometryError(f"expected {k - 1} cube coordinates")
    if _theta_ties(k, x, float(t)):
        raise NonSmoothPointError(f"Θ_({k}) is not smooth at x={tuple(x)}, t={t}")
    _, J = _theta_eval(k, np.array([float(t)]), x[None, :], True)
    return J[0]


def theta_map(k: int, u) -> SimplexPoint:
    """Adjoint map ``Θ_k : I^k -> Δ_k`` with ``u = (t, x_1, ..., x_{k-1})``."""
    u = tuple(u)
    return theta_path(k, u[1:], u[0])


def theta_map_jacobian(k: int, u) -> np.ndarray:
    u = tuple(u)
    return theta_jacobian(k, u[1:], u[0])


def cube_face_minus(i: int, x) -> tuple:
    """``∂_i^-: I^{k-2} -> I^{k-1}`` inserting 0 at position i."""
    x = tuple(x)
    return x[:i - 1] + (0.0,) + x[i - 1:]


def cube_face_plus(i: int, x) -> tuple:
    """``∂_i^+: I^{k-2} -> I^{k-1}`` inserting 1 at position i."""
    x = tuple(x)
    return x[:i - 1] + (1.0,) + x[i - 1:]


def lemma_reparametrization(i: int, k: int, t: float) -> float:
    """Reparametrization ``φ_i`` with ``Θ_(k)(∂_i^- x)(t) = ∂_i Θ_(k-1)(x)(φ_i(t))``.

    Inserting ``x_i = 0`` makes segment ``i`` of the path stationary; the
    other segments are rescaled from length ``1/k`` to ``1/(k-1)``.
    """
    if not 1 <= i <= k - 1:
        raise GeometryError(f"cube face index {i} out of range for k={k}")
    if t <= (k - i) / k:
        return k * t / (k - 1)
    if t <= (k - i + 1) / k:
        return (k - i) / (k - 1)
    return (k * t - 1) / (k - 1)


def mu_concat(i: int, k: int, alpha, beta):
    """Concatenation ``μ_i(α, β)``: first ``U_{k-i}∘β`` then ``V_i∘α``.

    ``alpha`` and ``beta`` are callables ``[0,1] -> Δ_i`` and ``[0,1] -> Δ_{k-i}``.
    """
    if not 1 <= i <= k - 1:
        raise GeometryError(f"concatenation index {i} out of range for k={k}")
    U = back_face(k - i, k)
    V = front_face(i, k)
    a0, a1 = np.atleast_1d(alpha(0.0)), np.atleast_1d(alpha(1.0))
    b0, b1 = np.atleast_1d(beta(0.0)), np.atleast_1d(beta(1.0))
    if (np.abs(a0 - vertex(i, i)).max(initial=0) > 1e-9 or np.abs(a1).max(initial=0) > 1e-9
            or np.abs(b0 - vertex(k - i, k - i)).max(initial=0) > 1e-9
            or np.abs(b1).max(initial=0) > 1e-9):
        raise GeometryError("concatenated paths must run from the last vertex to v_0")
    cut = (k - i) / k

    def path(t: float) -> np.ndarray:
        if t <= cut:
            return U(np.atleast_1d(beta(k * t / (k - i))))
        return V(np.atleast_1d(alpha(k / i * (t - cut))))

    return path


# ------------------------------------------------------------- path families

class PathFamily:
    """Interface of a map ``[0,1] x I^m -> Δ_K`` used by the Chen quadrature."""

    m: int
    target_dim: int
    # whether I^m has to be split into ordering sectors for smoothness
    needs_sectors: bool = False

    def evaluate(self, t: np.ndarray, x: np.ndarray):
        """Return ``(y, J)`` with shapes ``(P, K)`` and ``(P, K, 1+m)``."""
        raise NotImplementedError

    def breakpoints(self, x: np.ndarray) -> np.ndarray:
        """Sorted ``t`` breakpoints, shape ``(Q, B)``, including 0 and 1."""
        raise NotImplementedError


class IgusaFamily(PathFamily):
    """The family ``Θ_(k): I^{k-1} -> Path(Δ_k, v_k, v_0)``."""

    needs_sectors = True

    def __init__(self, k: int):
        if k < 1:
            raise GeometryError("Igusa families need k >= 1")
        self.k = k
        self.m = k - 1
        self.target_dim = k

    def evaluate(self, t, x):
        return _theta_eval(self.k, np.asarray(t, float), np.asarray(x, float), True)

    def breakpoints(self, x):
        x = np.asarray(x, float)
        Q, k = x.shape[0], self.k
        pts = [np.zeros(Q), np.ones(Q)] + [np.full(Q, j / k) for j in range(1, k)]
        xe = np.concatenate([x, np.ones((Q, 1))], axis=1)
        for i in range(2, k + 1):
            lo, hi = (k - i) / k, (k - i + 1) / k
            for j in range(1, i):
                with np.errstate(divide="ignore", invalid="ignore"):
                    tk = (k - i + 1 - xe[:, j - 1] / xe[:, i - 1]) / k
                tk = np.where(np.isfinite(tk), np.clip(tk, lo, hi), lo)
                pts.append(tk)
        return np.sort(np.stack(pts, axis=1), axis=1)


class ConcatFamily(PathFamily):
    """``μ_i ∘ (F × G)`` for path families ``F`` in Δ_i and ``G`` in Δ_{k-i}.

    The cube coordinates are ``(x', x'')`` with ``x'`` feeding ``F``.
    """

    def __init__(self, i: int, k: int, first: PathFamily, second: PathFamily):
        if first.target_dim != i or second.target_dim != k - i:
            raise GeometryError("family dimensions do not match the concatenation")
        self.i, self.k = i, k
        self.first, self.second = first, second
        self.m = first.m + second.m
        self.target_dim = k
        self.needs_sectors = first.needs_sectors or second.needs_sectors
        self._U = back_face(k - i, k)
        self._V = front_face(i, k)

    def evaluate(self, t, x):
        t = np.asarray(t, float)
        x = np.asarray(x, float)
        i, k = self.i, self.k
        P = t.shape[0]
        cut = (k - i) / k
        ma = self.first.m
        y = np.zeros((P, k))
        J = np.zeros((P, k, 1 + self.m))
        lo = t <= cut
        if np.any(lo):
            tb = k * t[lo] / (k - i)
            yb, Jb = self.second.evaluate(tb, x[lo][:, ma:])
            y[lo] = yb @ self._U.matrix.T + self._U.offset
            JU = np.einsum("ab,pbc->pac", self._U.matrix, Jb)
            J[lo, :, 0] = JU[:, :, 0] * (k / (k - i))
            J[np.ix_(lo, np.arange(k), 1 + ma + np.arange(self.second.m))] = JU[:, :, 1:]
        hi = ~lo
        if np.any(hi):
            ta = k / i * (t[hi] - cut)
            ya, Ja = self.first.evaluate(ta, x[hi][:, :ma])
            y[hi] = ya @ self._V.matrix.T + self._V.offset
            JV = np.einsum("ab,pbc->pac", self._V.matrix, Ja)
            J[hi, :, 0] = JV[:, :, 0] * (k / i)
            J[np.ix_(hi, np.arange(k), 1 + np.arange(ma))] = JV[:, :, 1:]
        return y, J

    def breakpoints(self, x):
        x = np.asarray(x, float)
        i, k = self.i, self.k
        cut = (k - i) / k
        bb = self.second.breakpoints(x[:, self.first.m:]) * cut
        ba = cut + self.first.breakpoints(x[:, :self.first.m]) * (i / k)
        return np.sort(np.concatenate([bb, ba], axis=1), axis=1)


class ComposedFamily(PathFamily):
    """An affine simplex map applied after a path family."""

    def __init__(self, amap: AffineSimplexMap, inner: PathFamily):
        if amap.source_dim != inner.target_dim:
            raise GeometryError("affine map does not match family target")
        self.amap, self.inner = amap, inner
        self.m = inner.m
        self.target_dim = amap.target_dim
        self.needs_sectors = inner.needs_sectors

    def evaluate(self, t, x):
        y, J = self.inner.evaluate(t, x)
        A = self.amap.matrix
        return y @ A.T + self.amap.offset, np.einsum("ab,pbc->pac", A, J)

    def breakpoints(self, x):
        return self.inner.breakpoints(x)
