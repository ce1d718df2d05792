"""Independent ground truth: ODE transport, exact simplex integrals, brute-force Chen.

Nothing here imports the Chen engine.  The brute-force iterated integral
re-derives Igusa's path from its list of corner points, differentiates it by
finite differences and wedges the pulled-back forms literally in the exterior
algebra of ``Δ_n × I^{k-1}``, so it is a check on the sign bookkeeping of
the fast transport method rather than a copy of it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np
from scipy.linalg import expm

from .graded_core import desuspension_sign, permutation_sign
from .poly_forms import PolyForm

__all__ = [
    "TransportProblem",
    "TransportResult",
    "parallel_transport_ode",
    "brute_simplex_integral",
    "monomial_simplex_integral",
    "matrix_exponential",
    "igusa_path_reference",
    "brute_chen_integral",
]


@dataclass(frozen=True)
class TransportProblem:
    """Polynomial connection ``a(t) = Σ_j coeffs[j] t^j`` on ``[0, 1]``.

    ``direction="reversed"`` integrates along the path ``t ↦ 1 - t`` used by
    the holonomy of an edge; ``"forward"`` uses ``a(t)`` itself.
    """

    coeffs: tuple
    direction: str = "reversed"

    def __post_init__(self):
        mats = tuple(np.array(c, dtype=float) for c in self.coeffs)
        if not mats:
            raise ValueError("empty connection")
        if self.direction not in ("reversed", "forward"):
            raise ValueError(f"unknown direction {self.direction!r}")
        object.__setattr__(self, "coeffs", mats)

    @classmethod
    def from_form(cls, a: PolyForm, direction: str = "reversed") -> "TransportProblem":
        """Read ``a(t) dt`` off a 1-form on the 1-simplex."""
        deg = max((e[0] for (_, e) in a.terms), default=0)
        N = a.space.total_dim
        coeffs = [np.zeros((N, N)) for _ in range(deg + 1)]
        for (I, e), M in a.terms.items():
            if I == (0,):
                coeffs[e[0]] = coeffs[e[0]] + M
        return cls(tuple(coeffs), direction)

    def __call__(self, t: float) -> np.ndarray:
        s = 1.0 - t if self.direction == "reversed" else t
        out = np.zeros_like(self.coeffs[0])
        for c in reversed(self.coeffs):
            out = out * s + c
        return out


@dataclass(frozen=True)
class TransportResult:
    matrix: np.ndarray
    error_estimate: float
    steps: int


def _rk4(p: TransportProblem, steps: int) -> np.ndarray:
    N = p.coeffs[0].shape[0]
    H = np.eye(N)
    h = 1.0 / steps
    for i in range(steps):
        t = i * h
        k1 = p(t) @ H
        k2 = p(t + h / 2) @ (H + h / 2 * k1)
        k3 = p(t + h / 2) @ (H + h / 2 * k2)
        k4 = p(t + h) @ (H + h * k3)
        H = H + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return H


def parallel_transport_ode(p: TransportProblem, steps: int = 256) -> TransportResult:
    """Solve ``dH/dt = a(1-t) H``, ``H_0 = id`` with classical RK4.

    The error estimate compares ``steps`` and ``2·steps`` (Richardson, order 4);
    the returned matrix is the extrapolated value.
    """
    if steps < 16:
        raise ValueError("at least 16 steps are required")
    coarse = _rk4(p, steps)
    fine = _rk4(p, 2 * steps)
    corr = (fine - coarse) / 15.0
    return TransportResult(fine + corr, float(np.abs(corr).max()), 2 * steps)


def monomial_simplex_integral(exps) -> Fraction:
    """``∫_{1>=t_1>=...>=t_k>=0} t^exps`` as an exact fraction.

    Integrating innermost first gives ``Π_j 1/(exps_j + ... + exps_k + k - j + 1)``.
    """
    exps = list(exps)
    k = len(exps)
    out = Fraction(1)
    tail = 0
    for j in range(k - 1, -1, -1):
        tail += exps[j]
        out /= tail + (k - j)
    return out


def brute_simplex_integral(form, k: int | None = None):
    """Exact ``∫_{Δ_k}`` of a polynomial top form.

    ``form`` is either a :class:`PolyForm` (matrix result) or a mapping
    ``exps -> coefficient`` for the coefficient of ``dt_1∧…∧dt_k``.
    """
    if isinstance(form, PolyForm):
        k = form.dim
        top = tuple(range(k))
        N = form.space.total_dim
        out = np.zeros((N, N))
        for (I, e), M in form.terms.items():
            if I == top:
                out += float(monomial_simplex_integral(e)) * M
        return out
    total = Fraction(0)
    acc = 0.0
    for e, c in dict(form).items():
        if k is not None and len(e) != k:
            raise ValueError("exponent length does not match k")
        if isinstance(c, (int, Fraction)):
            total += c * monomial_simplex_integral(e)
        else:
            acc += float(c) * float(monomial_simplex_integral(e))
    return float(total) + acc


def matrix_exponential(A) -> np.ndarray:
    return expm(np.asarray(A, dtype=float))


# ------------------------------------------------------- brute-force Chen

def igusa_path_reference(k: int, t: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Igusa's path from its definition: walk the cube corners backwards, then take maxima."""
    t = np.asarray(t, float)
    x = np.asarray(x, float).reshape(t.shape[0], k - 1)
    P = t.shape[0]
    xs = np.concatenate([x, np.ones((P, 1))], axis=1)
    corners = np.zeros((P, k + 1, k))
    for j in range(1, k + 1):
        corners[:, j, :] = corners[:, j - 1, :]
        corners[:, j, j - 1] = xs[:, j - 1]
    u = k * (1.0 - t)
    j = np.clip(np.floor(u).astype(int), 0, k - 1)
    frac = (u - j)[:, None]
    rows = np.arange(P)
    cube = corners[rows, j] + frac * (corners[rows, j + 1] - corners[rows, j])
    return np.maximum.accumulate(cube[:, ::-1], axis=1)[:, ::-1]


def _fd_jacobian(k: int, t: np.ndarray, x: np.ndarray, h: float = 1e-7) -> np.ndarray:
    P = t.shape[0]
    m = k - 1
    J = np.zeros((P, k, 1 + m))
    J[:, :, 0] = (igusa_path_reference(k, t + h, x) - igusa_path_reference(k, t - h, x)) / (2 * h)
    for l in range(m):
        e = np.zeros(m)
        e[l] = h
        J[:, :, 1 + l] = (igusa_path_reference(k, t, x + e) - igusa_path_reference(k, t, x - e)) / (2 * h)
    return J


def _composite_gauss(dim: int, panels: int, order: int):
    g, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    nodes = ((edges[:-1, None] + edges[1:, None]) / 2 + (edges[1:, None] - edges[:-1, None]) / 2 * g).ravel()
    weights = ((edges[1:, None] - edges[:-1, None]) / 2 * w).ravel()
    if dim == 0:
        return np.zeros((1, 0)), np.ones(1)
    mesh = np.stack(np.meshgrid(*([nodes] * dim), indexing="ij"), -1).reshape(-1, dim)
    wmesh = np.prod(np.stack(np.meshgrid(*([weights] * dim), indexing="ij"), -1).reshape(-1, dim), axis=1)
    return mesh, wmesh


def brute_chen_integral(forms, k: int, panels: int = 24, order: int = 3,
                        psi_bar: bool = False, chunk: int = 20000) -> np.ndarray:
    """``ψ_n(s a_1 ⊗ … ⊗ s a_n)`` on the fundamental k-simplex, by brute force.

    Valid for scalar forms or forms whose coefficients all have endomorphism
    degree 0 (no Koszul signs between coefficients and covectors).  The
    integrand is the coefficient of ``dt_1…dt_n dx_1…dx_{k-1}`` in the literal
    wedge of pulled-back forms, multiplied by the desuspension sign.
    """
    forms = list(forms)
    n = len(forms)
    m = k - 1
    N = forms[0].space.total_dim
    degs = [f.degree() for f in forms]
    shifted = [d - 1 for d in degs]
    pre = desuspension_sign(shifted)
    if k == 0:
        if n == 1 and degs[0] == 0:
            return forms[0].coefficient_arrays(np.zeros((1, 0))).get((), np.zeros((1, N, N)))[0]
        return np.zeros((N, N))
    nodes, weights = _composite_gauss(n + m, panels, order)
    value = np.zeros((N, N))
    for start in range(0, len(weights), chunk):
        sl = slice(start, start + chunk)
        value += _brute_chunk(forms, k, n, m, N, nodes[sl], weights[sl])
    value = pre * value
    if psi_bar:
        kdeg = sum(shifted) + 1
        value = value * (-1) ** (kdeg * (kdeg + 1) // 2 + n - 1)
    return value


def _brute_chunk(forms, k, n, m, N, nodes, weights):
    u = nodes[:, :n]
    tt = np.cumprod(u, axis=1)  # Duffy: t_1 = u_1, t_i = t_{i-1} u_i
    jac = np.prod(u ** np.arange(n - 1, -1, -1)[None, :], axis=1) if n else np.ones(len(nodes))
    xx = nodes[:, n:]
    weights = weights * jac
    top = tuple(range(n + m))
    # each slot: exterior element over the coordinates (t_1..t_n, x_1..x_m)
    slot_elems = []
    for i, a in enumerate(forms):
        y = igusa_path_reference(k, tt[:, i], xx)
        J = _fd_jacobian(k, tt[:, i], xx)
        cols = [i] + [n + l for l in range(m)]
        coeffs = a.coefficient_arrays(y)
        elem = {}
        for I, arr in coeffs.items():
            for C in combinations(range(1 + m), len(I)):
                det = np.linalg.det(J[:, list(I)][:, :, list(C)]) if I else np.ones(len(y))
                key = tuple(cols[c] for c in C)
                order_ = sorted(range(len(key)), key=lambda r: key[r])
                sign = permutation_sign([1] * len(key), order_)
                skey = tuple(sorted(key))
                val = sign * det[:, None, None] * arr
                elem[skey] = elem[skey] + val if skey in elem else val
        slot_elems.append(elem)
    acc = {(): np.broadcast_to(np.eye(N), (len(weights), N, N)).copy()}
    for elem in slot_elems:
        new = {}
        for K, A in acc.items():
            for L, B in elem.items():
                if set(K) & set(L):
                    continue
                merged = K + L
                order_ = sorted(range(len(merged)), key=lambda r: merged[r])
                sign = permutation_sign([1] * len(merged), order_)
                key = tuple(sorted(merged))
                val = sign * np.einsum("pab,pbc->pac", A, B)
                new[key] = new[key] + val if key in new else val
        acc = new
    integrand = acc.get(top)
    if integrand is None:
        return np.zeros((N, N))
    return np.einsum("p,pab->ab", weights, integrand)
