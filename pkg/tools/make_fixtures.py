"""Regenerate the bundled scenario fixtures from the seeded scene builders."""

import json
from pathlib import Path

import numpy as np

from artifact.cli import scenario_document
from artifact.generators import nil_gauge
from artifact.graded_core import GradedVectorSpace
from artifact.holonomy import FormValuedComplex, integrate_rep
from artifact.poly_forms import PolyForm
from artifact.scenes import (OCTAHEDRON_POSITIONS, interval_scene, ordinary_triangle_scene, sphere_scene,
                             triangle_scene)
from artifact.simplicial_reps import FiniteSimplicialSet

OUT = Path(__file__).resolve().parents[1] / "src" / "artifact" / "fixtures"


def write(name, doc):
    (OUT / f"{name}.json").write_text(json.dumps(doc, indent=1) + "\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    X = interval_scene()
    g = nil_gauge(np.random.default_rng(3), X.space, 1)
    write("interval_transport", scenario_document(
        X, "interval_transport", "One edge with a random quadratic connection on a rank-2 bundle.",
        gauges=[((0, 1), g)]))
    write("triangle_two_term", scenario_document(
        triangle_scene(), "triangle_two_term",
        "One triangle with a flat superconnection on a two-term complex (degrees 0 and 1)."))
    write("ordinary_triangle", scenario_document(
        ordinary_triangle_scene(), "ordinary_triangle", "Flat ordinary connection on one triangle."))
    pos = {v: OCTAHEDRON_POSITIONS[v] for v in range(6)}
    sphere = sphere_scene()
    write("sphere_octahedron", scenario_document(
        sphere, "sphere_octahedron",
        "Octahedral sphere, V = R + R[-1], eta of total mass 4 pi times the degree -1 map phi.",
        positions=pos, expected_betti={0: 1, 1: 0, 2: 0, 3: 1}))

    # negative fixture: two triangles whose forms disagree on the shared edge
    V = GradedVectorSpace({0: 1})
    cx = FiniteSimplicialSet([(0, 1, 2), (1, 2, 3)])
    a = PolyForm(V, 2, {((0,), (0, 0)): [[1.0]], ((1,), (0, 0)): [[0.5]]})
    b = PolyForm(V, 2, {((0,), (0, 0)): [[-0.25]], ((1,), (0, 0)): [[2.0]]})
    doc = {"version": 1, "name": "bad_face_mismatch",
           "description": "Forms on two triangles that restrict differently to the shared edge (1,2).",
           "space": {"0": 1}, "simplices": [[0, 1, 2], [1, 2, 3]],
           "forms": [{"simplex": [0, 1, 2], "terms": [{"dt": [0], "exps": [0, 0], "coef": [[1.0]]},
                                                      {"dt": [1], "exps": [0, 0], "coef": [[0.5]]}]},
                     {"simplex": [1, 2, 3], "terms": [{"dt": [0], "exps": [0, 0], "coef": [[-0.25]]},
                                                      {"dt": [1], "exps": [0, 0], "coef": [[2.0]]}]}]}
    del a, b, cx
    write("bad_face_mismatch", doc)

    # negative fixture: the sphere representation with one edge operator perturbed
    rep = integrate_rep(sphere)
    vals = {s: rep(s) for s in rep.complex.all_simplices() if np.any(rep(s))}
    vals[(0, 2)] = vals[(0, 2)] + np.diag([0.05, 0.0])
    write("bad_perturbed_rep", scenario_document(
        FormValuedComplex(sphere.complex, sphere.space, {}), "bad_perturbed_rep",
        "Sphere representation values with F_1 on edge (0,2) perturbed; violates the structure equations.",
        rep_values=vals))


if __name__ == "__main__":
    main()
