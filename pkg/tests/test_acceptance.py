"""Acceptance criteria, one test per criterion.

Run with ``pytest tests/test_acceptance.py -v``; the terminal summary lists a
PASS/FAIL line for every criterion.
"""

import itertools
import subprocess
import sys
import time

import numpy as np
import pytest

from artifact.chen_engine import ChenConfig, holonomy_series, psi_bar_components, psi_n_eval
from artifact.cli import format_report, parse_scenario, run_command
from artifact.generators import nil_gauge, random_flat, random_hom_form, scalar_form
from artifact.graded_core import GradedVectorSpace
from artifact.holonomy import (
    factorization_defect,
    functor_equation_residual,
    gauge_equivariance_defect,
    integrate_rep,
    psi_morphism_residual,
)
from artifact.oracles import TransportProblem, _composite_gauss, brute_simplex_integral, parallel_transport_ode
from artifact.poly_forms import PolyForm, pullback_affine
from artifact.scenes import interval_scene, ordinary_triangle_scene, sphere_scene, triangle_scene
from artifact.simplex_geom import _theta_eval, degeneracy_map, vertex
from artifact.simplicial_reps import FiniteSimplicialSet, structure_residual, twisted_cohomology

SEED = 20240611


def _random_connection(rng, n, deg=2):
    V = GradedVectorSpace({0: n})
    return PolyForm(V, 1, {((0,), (j,)): rng.uniform(-1, 1, (n, n)) for j in range(deg + 1)})


@pytest.mark.criterion(1, "parallel transport anchor")
def test_parallel_transport_anchor():
    rng = np.random.default_rng(SEED)
    start = time.perf_counter()
    worst = 0.0
    for trial in range(10):
        a = _random_connection(rng, 2 if trial < 5 else 3)
        ours = holonomy_series(a).to_dense()
        ref = parallel_transport_ode(TransportProblem.from_form(a)).matrix
        worst = max(worst, np.linalg.norm(ours - ref, 2))
    elapsed = time.perf_counter() - start
    assert worst <= 1e-6
    assert elapsed < 10.0


@pytest.mark.criterion(2, "constant connection closed form")
def test_constant_connection_closed_form():
    V = GradedVectorSpace({0: 2})
    a = PolyForm(V, 1, {((0,), (0,)): np.array([[0.0, 1.0], [0.0, 0.0]])})
    np.testing.assert_allclose(holonomy_series(a).to_dense(), [[1.0, 1.0], [0.0, 1.0]], atol=1e-9, rtol=0)


@pytest.mark.criterion(3, "degenerate vanishing")
def test_degenerate_vanishing():
    rng = np.random.default_rng(SEED + 3)
    worst = 0.0
    for trial in range(10):
        a = _random_connection(rng, 2)
        pulled = pullback_affine(a, degeneracy_map(1 + trial % 2, 2))
        comps = psi_bar_components(pulled, 4)
        worst = max(worst, max(np.abs(c).max() for c in comps))
    assert worst <= 1e-6


@pytest.mark.criterion(4, "gauge equivariance")
def test_gauge_equivariance():
    rng = np.random.default_rng(SEED + 4)
    V = GradedVectorSpace({0: 2, 1: 2})
    worst = 0.0
    for trial in range(10):
        k = 1 + trial % 2
        worst = max(worst, gauge_equivariance_defect(random_flat(rng, V, k), nil_gauge(rng, V, k)))
    assert worst <= 1e-6


@pytest.mark.criterion(5, "structure equations of integrated representations")
def test_structure_equations_of_integration():
    for X in (interval_scene(), triangle_scene(), sphere_scene()):
        assert structure_residual(integrate_rep(X)) <= 1e-5


@pytest.mark.criterion(6, "A-infinity morphism equations for the Chen map")
def test_chen_map_is_ainfty_morphism():
    rng = np.random.default_rng(SEED + 6)
    cx = FiniteSimplicialSet.standard(3)
    positions = {0: vertex(0, 2), 1: np.array([0.7, 0.2]), 2: vertex(1, 2), 3: vertex(2, 2)}
    words = [(p,) for p in range(3)]
    words += list(itertools.product(range(3), repeat=2))
    words += [(1, 1, 0), (1, 0, 1), (0, 1, 1), (1, 1, 1), (2, 1, 0)]
    worst = 0.0
    for degs in words:
        forms = [scalar_form(rng, 2, p, deg=2) for p in degs]
        worst = max(worst, psi_morphism_residual(forms, cx, positions))
    assert worst <= 1e-6


@pytest.mark.criterion(7, "A-infinity functor equations")
def test_functor_equations():
    rng = np.random.default_rng(SEED + 7)
    V0, V1, V2 = GradedVectorSpace({0: 1, 1: 1}), GradedVectorSpace({0: 1, 1: 2}), GradedVectorSpace({-1: 1, 0: 1})
    worst = 0.0
    for k in (1, 2):
        oms = [random_flat(rng, V, k) for V in (V0, V1, V2)]
        for d in (0, 1):
            worst = max(worst, functor_equation_residual(oms[:2], [random_hom_form(rng, V1, V0, k, d)]))
        for d1, d2 in ((0, 0), (1, 0), (0, 1)):
            etas = [random_hom_form(rng, V1, V0, k, d1), random_hom_form(rng, V2, V1, k, d2)]
            worst = max(worst, functor_equation_residual(oms, etas))
    assert worst <= 1e-5


@pytest.mark.criterion(8, "factorization on the triangle")
def test_factorization():
    rng = np.random.default_rng(SEED + 8)
    V = GradedVectorSpace({0: 2})
    worst = 0.0
    for trial in range(10):
        n = 1 + trial % 3
        forms = [PolyForm(V, 2, random_hom_form(rng, V, V, 2, 1).terms) for _ in range(n)]
        worst = max(worst, factorization_defect(forms))
    assert worst <= 1e-6


@pytest.mark.criterion(9, "sphere demonstration")
def test_sphere_demo():
    start = time.perf_counter()
    X = sphere_scene(4 * np.pi)
    rep = integrate_rep(X)
    tris = X.complex.simplices(2)
    hol_mass = sum(np.linalg.norm(rep(t), 2) for t in tris)
    ref_mass = sum(np.linalg.norm(brute_simplex_integral(X.form(t)), 2) for t in tris)
    assert ref_mass == pytest.approx(4 * np.pi, rel=1e-12)
    assert abs(hol_mass - ref_mass) / ref_mass <= 1e-3
    betti = twisted_cohomology(rep, min_degree=0, max_degree=3)
    assert [betti[d] for d in range(4)] == [1, 0, 0, 1]
    control = integrate_rep(sphere_scene(4 * np.pi, twisted=False))
    assert twisted_cohomology(control, min_degree=0, max_degree=3)[2] >= 1
    assert time.perf_counter() - start < 60.0


def _crude_cube_integral(form, k, panels):
    """``∫_{I^k} Θ_k^* α`` by composite Gauss on the cube, blind to the kinks of ``Θ_k``."""
    nodes, weights = _composite_gauss(k, panels, 4)
    y, J = _theta_eval(k, nodes[:, 0], nodes[:, 1:], True)
    f = np.zeros(len(weights))
    for (_, exps), c in form.terms.items():
        f += c[0, 0] * np.prod(y ** np.array(exps), axis=1)
    return float(np.sum(weights * f * np.linalg.det(J)))


@pytest.mark.criterion(10, "degree of the cube-to-simplex map")
def test_theta_degree():
    rng = np.random.default_rng(SEED + 10)
    for trial in range(5):
        k = 1 + trial % 3
        form = scalar_form(rng, k, k, deg=3)
        ref = (-1) ** k * brute_simplex_integral(form)[0, 0]
        cube = psi_n_eval([form], ChenConfig(tol=1e-10)).value[0, 0]
        assert abs(cube - ref) <= 1e-6
        if k <= 2:
            # independent pullback quadrature: error must shrink toward the same value
            coarse, fine = (abs(_crude_cube_integral(form, k, p) - ref) for p in (8, 32))
            assert fine <= max(coarse / 4, 1e-12)


@pytest.mark.criterion(11, "ordinary representations")
def test_ordinary_representations():
    X = ordinary_triangle_scene()
    rep = integrate_rep(X)
    for s in X.complex.simplices(2):
        assert not np.any(rep(s))
    for e in X.complex.simplices(1):
        ref = parallel_transport_ode(TransportProblem.from_form(X.form(e))).matrix
        assert np.linalg.norm(rep(e) - ref, 2) <= 1e-6


@pytest.mark.criterion(12, "A-infinity algebra suite")
def test_ainfty_suite():
    report = run_command("verify-ainfty", None)
    tolerance = {c["name"]: c["tolerance"] for c in report["checks"]}
    assert all(t <= 1e-8 for t in tolerance.values())
    assert report["status"] == "pass", [c for c in report["checks"] if not c["pass"]]


def _all_reports() -> str:
    out = []
    for name in ("interval_transport", "triangle_two_term", "ordinary_triangle", "sphere_octahedron"):
        sc = parse_scenario(name)
        for cmd in ("holonomy", "check-rep", "cohomology"):
            out.append(format_report(run_command(cmd, sc), "json"))
    out.append(format_report(run_command("sphere-demo", parse_scenario("sphere_octahedron")), "text"))
    out.append(format_report(run_command("verify-ainfty", None), "json"))
    return "".join(out)


@pytest.mark.criterion(13, "deterministic reports")
def test_determinism():
    assert _all_reports() == _all_reports()
    cmd = [sys.executable, "-m", "artifact.cli", "holonomy", "triangle_two_term", "--format", "text"]
    runs = [subprocess.run(cmd, capture_output=True, check=True).stdout for _ in range(2)]
    assert runs[0] == runs[1] and runs[0]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
