"""Command line front end: scenario loading, command dispatch and reports.

Scenarios are JSON files validated against :data:`SCENARIO_SCHEMA` (see
``docs/scenario_format.md``).  Every command produces a report with a list of
checks; the process exits with 0 iff every check passes.  Failure classes
map to exit codes: 2 for schema problems, 3 for accuracy or truncation
failures, 4 for violated invariants (including failed checks).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .ainfty_core import (AInftyMorphismData, compose_ainfty, conjugation_morphism, dga_to_ainfty,
                          exterior_dga, gauge_mc_element, inverse_morphism, matrix_dga,
                          mc_pushforward, mc_residual_ainfty, morphism_residual, strict_morphism,
                          structure_residual_algebra, tensor_dga, tensor_with_algebra,
                          tensor_with_morphism, transport_structure, twist_algebra, twist_morphism)
from .chen_engine import AccuracyError, ChenConfig, TruncationError
from .generators import nil_gauge, random_morphism_components
from .graded_core import DimensionError, GradedVectorSpace
from .holonomy import (DEFAULT_DIM_CAP, FaceCompatibilityError, FormValuedComplex, HolonomyError,
                       gauge_equivariance_defect, gauge_pushforward_defect, hol_object_value,
                       integrate_rep)
from .oracles import TransportProblem, brute_simplex_integral, parallel_transport_ode
from .poly_forms import FormError, GaugeElement, GaugeError, PolyForm
from .scenes import restrict_to_faces
from .simplicial_reps import (FiniteSimplicialSet, SimplicialRep, structure_residual,
                              twisted_cohomology, unitality_check)

__all__ = [
    "SCENARIO_SCHEMA",
    "SCHEMA_VERSION",
    "ScenarioError",
    "InvariantError",
    "Scenario",
    "parse_scenario",
    "load_scenario_dict",
    "scenario_document",
    "resolve_scenario_path",
    "run_command",
    "format_report",
    "main",
    "EXIT_OK",
    "EXIT_SCHEMA",
    "EXIT_ACCURACY",
    "EXIT_INVARIANT",
]

SCHEMA_VERSION = 1
EXIT_OK, EXIT_SCHEMA, EXIT_ACCURACY, EXIT_INVARIANT = 0, 2, 3, 4

STRUCTURE_TOL = 1e-5
TRANSPORT_TOL = 1e-6
GAUGE_TOL = 1e-6
AINFTY_TOL = 1e-10
PROP44_TOL = 1e-8
SPHERE_REL_TOL = 1e-3

_MATRIX = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}
_VERTEX = {"type": ["integer", "string"]}
_SIMPLEX = {"type": "array", "items": _VERTEX, "minItems": 1}
_TERM = {
    "type": "object",
    "required": ["dt", "exps", "coef"],
    "additionalProperties": False,
    "properties": {
        "dt": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "exps": {"type": "array", "items": {"type": "integer", "minimum": 0}},
        "coef": _MATRIX,
    },
}
_DEGREE_COUNTS = {
    "type": "object",
    "patternProperties": {"^-?[0-9]+$": {"type": "integer", "minimum": 0}},
    "additionalProperties": False,
}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "artifact scenario",
    "type": "object",
    "required": ["version", "space", "simplices"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "description": {"type": "string"},
        "space": _DEGREE_COUNTS,
        "simplices": {"type": "array", "items": _SIMPLEX, "minItems": 1},
        "vertex_order": {"type": "array", "items": _VERTEX},
        "forms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["simplex", "terms"],
                "additionalProperties": False,
                "properties": {"simplex": _SIMPLEX, "terms": {"type": "array", "items": _TERM}},
            },
        },
        "rep_values": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["simplex", "matrix"],
                "additionalProperties": False,
                "properties": {"simplex": _SIMPLEX, "matrix": _MATRIX},
            },
        },
        "gauges": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["simplex", "f", "inverse"],
                "additionalProperties": False,
                "properties": {
                    "simplex": _SIMPLEX,
                    "f": {"type": "array", "items": _TERM},
                    "inverse": {"type": "array", "items": _TERM},
                },
            },
        },
        "positions": {"type": "object", "additionalProperties": {"type": "array", "items": {"type": "number"}}},
        "expected_betti": _DEGREE_COUNTS,
        "config": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "max_n": {"type": "integer", "minimum": 1},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "quad_order": {"type": "integer", "minimum": 1},
                "subdivide_t": {"type": "boolean"},
                "jitter_seed": {"type": "integer"},
                "dim_cap": {"type": "integer", "minimum": 0},
                "mode": {"enum": ["transport", "series"]},
            },
        },
    },
}


class ScenarioError(ValueError):
    """Malformed scenario file (exit code 2)."""


class InvariantError(ValueError):
    """Scenario data violates a mathematical invariant (exit code 4)."""


@dataclass
class Scenario:
    name: str
    space: GradedVectorSpace
    complex: FiniteSimplicialSet
    scene: FormValuedComplex | None
    rep: SimplicialRep | None = None
    gauges: list = field(default_factory=list)
    positions: dict = field(default_factory=dict)
    expected_betti: dict | None = None
    config: dict = field(default_factory=dict)


# ------------------------------------------------------------- loading

def _fixture_path(name: str) -> Path | None:
    stem = name[:-5] if name.endswith(".json") else name
    ref = resources.files("artifact") / "fixtures" / f"{stem}.json"
    return Path(str(ref)) if ref.is_file() else None


def resolve_scenario_path(path: str) -> Path:
    """A file path, or the name of a bundled fixture."""
    p = Path(path)
    if p.is_file():
        return p
    fx = _fixture_path(path)
    if fx is None:
        raise ScenarioError(f"{path}: no such file or bundled fixture")
    return fx


def _vertex_key(v):
    return v if isinstance(v, int) else str(v)


def _terms(raw, k: int, N: int, where: str) -> dict:
    out = {}
    for j, term in enumerate(raw):
        dt, exps, coef = tuple(term["dt"]), tuple(term["exps"]), np.asarray(term["coef"], float)
        loc = f"{where}.terms[{j}]"
        if len(exps) != k:
            raise ScenarioError(f"{loc}.exps: expected {k} exponents, got {len(exps)}")
        if list(dt) != sorted(set(dt)) or any(i >= k for i in dt):
            raise ScenarioError(f"{loc}.dt: indices must be increasing and below {k}")
        if coef.shape != (N, N):
            raise ScenarioError(f"{loc}.coef: expected a {N}x{N} matrix, got shape {coef.shape}")
        key = (dt, exps)
        out[key] = out[key] + coef if key in out else coef
    return out


def _simplex(cx: FiniteSimplicialSet, raw, where: str) -> tuple:
    s = tuple(_vertex_key(v) for v in raw)
    if s not in cx:
        raise ScenarioError(f"{where}.simplex: {list(s)} is not a simplex of the complex "
                            f"(vertices must be listed in the global order)")
    return s


def load_scenario_dict(data: dict, source: str = "<scenario>") -> Scenario:
    """Validate and resolve a parsed scenario document."""
    validator = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ScenarioError(f"{source}: field {path}: {e.message}")
    V = GradedVectorSpace({int(d): n for d, n in data["space"].items()})
    N = V.total_dim
    gens = [tuple(_vertex_key(v) for v in s) for s in data["simplices"]]
    order = [_vertex_key(v) for v in data["vertex_order"]] if "vertex_order" in data else None
    try:
        cx = FiniteSimplicialSet(gens, order)
    except ValueError as exc:
        raise ScenarioError(f"{source}: field simplices: {exc}") from exc

    forms = {}
    for j, item in enumerate(data.get("forms", [])):
        where = f"{source}: forms[{j}]"
        s = _simplex(cx, item["simplex"], where)
        forms[s] = PolyForm(V, len(s) - 1, _terms(item["terms"], len(s) - 1, N, where))
    cfg = dict(data.get("config", {}))
    scene = None
    if forms or "rep_values" not in data:
        try:
            scene = FormValuedComplex(cx, V, restrict_to_faces(cx, forms))
        except FaceCompatibilityError as exc:
            raise InvariantError(f"{source}: {exc}") from exc
        except FormError as exc:
            raise InvariantError(f"{source}: {exc}") from exc

    rep = None
    if "rep_values" in data:
        vals = {}
        for j, item in enumerate(data["rep_values"]):
            where = f"{source}: rep_values[{j}]"
            s = _simplex(cx, item["simplex"], where)
            M = np.asarray(item["matrix"], float)
            if M.shape != (N, N):
                raise ScenarioError(f"{where}.matrix: expected a {N}x{N} matrix, got shape {M.shape}")
            vals[s] = M
        try:
            rep = SimplicialRep(cx, V, vals)
        except DimensionError as exc:
            raise InvariantError(f"{source}: rep_values: {exc}") from exc

    gauges = []
    for j, item in enumerate(data.get("gauges", [])):
        where = f"{source}: gauges[{j}]"
        s = _simplex(cx, item["simplex"], where)
        k = len(s) - 1
        try:
            g = GaugeElement(PolyForm(V, k, _terms(item["f"], k, N, where + ".f")),
                             PolyForm(V, k, _terms(item["inverse"], k, N, where + ".inverse")))
        except (GaugeError, FormError) as exc:
            raise InvariantError(f"{where}: {exc}") from exc
        gauges.append((s, g))

    positions = {}
    for v, p in data.get("positions", {}).items():
        key = int(v) if v.lstrip("-").isdigit() else v
        if key not in cx.vertices:
            raise ScenarioError(f"{source}: field positions/{v}: unknown vertex")
        positions[key] = np.asarray(p, float)
    expected = None
    if "expected_betti" in data:
        expected = {int(d): n for d, n in data["expected_betti"].items()}
    return Scenario(data.get("name", Path(source).stem), V, cx, scene, rep, gauges, positions, expected, cfg)


def parse_scenario(path) -> Scenario:
    """Read, validate and resolve a scenario file (or a bundled fixture name)."""
    p = resolve_scenario_path(str(path))
    text = p.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{p}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return load_scenario_dict(data, str(p.name))


def _terms_doc(form: PolyForm) -> list:
    return [{"dt": list(I), "exps": list(e), "coef": np.asarray(M, float).tolist()}
            for (I, e), M in sorted(form.terms.items())]


def scenario_document(scene: FormValuedComplex, name: str, description: str = "", *,
                      positions: dict | None = None, expected_betti: dict | None = None,
                      rep_values: dict | None = None, gauges=(), config: dict | None = None,
                      top_only: bool = True) -> dict:
    """Serialize a scene into a scenario document (inverse of :func:`load_scenario_dict`).

    With ``top_only`` only maximal simplices carry forms; faces are restored
    by restriction on load.
    """
    cx = scene.complex
    maximal = [s for s in cx.all_simplices()
               if not any(set(s) < set(t) for t in cx.simplices(len(s)))] if len(cx.all_simplices()) else []
    doc: dict = {"version": SCHEMA_VERSION, "name": name}
    if description:
        doc["description"] = description
    doc["space"] = {str(d): n for d, n in scene.space.dims.items()}
    doc["simplices"] = [list(s) for s in maximal]
    listed = maximal if top_only else cx.all_simplices()
    doc["forms"] = [{"simplex": list(s), "terms": _terms_doc(scene.form(s))}
                    for s in listed if scene.form(s).terms]
    if rep_values is not None:
        doc["rep_values"] = [{"simplex": list(s), "matrix": np.asarray(M, float).tolist()}
                             for s, M in rep_values.items()]
    if gauges:
        doc["gauges"] = [{"simplex": list(s), "f": _terms_doc(g.f), "inverse": _terms_doc(g.inverse)}
                         for s, g in gauges]
    if positions is not None:
        doc["positions"] = {str(v): list(map(float, p)) for v, p in positions.items()}
    if expected_betti is not None:
        doc["expected_betti"] = {str(d): int(n) for d, n in expected_betti.items()}
    if config:
        doc["config"] = dict(config)
    return doc


# ------------------------------------------------------------ reporting

def _num(x) -> float:
    """Round to 12 significant digits so reports do not carry last-bit noise."""
    x = float(x)
    return float(f"{x:.12g}") if np.isfinite(x) else x


def _mat(M) -> list:
    return [[_num(v) + 0.0 for v in row] for row in np.asarray(M, float)]


def _check(name: str, value: float, tol: float, ok: bool | None = None) -> dict:
    value = _num(value)
    return {"name": name, "value": value, "tolerance": tol, "pass": bool(value <= tol) if ok is None else bool(ok)}


def _opnorm(M) -> float:
    M = np.asarray(M, float)
    return float(np.linalg.norm(M, 2)) if M.size else 0.0


def _simplex_label(s) -> str:
    return "(" + ",".join(str(v) for v in s) + ")"


def _config(scenario: Scenario | None, flags: dict) -> tuple[ChenConfig, int]:
    base = dict(scenario.config) if scenario is not None else {}
    for key in ("max_n", "tol", "quad_order", "jitter_seed"):
        if flags.get(key) is not None:
            base[key] = flags[key]
    if flags.get("no_subdivide"):
        base["subdivide_t"] = False
    dim_cap = flags.get("dim_cap") if flags.get("dim_cap") is not None else base.pop("dim_cap", DEFAULT_DIM_CAP)
    base.pop("dim_cap", None)
    try:
        return ChenConfig(**base), int(dim_cap)
    except ValueError as exc:
        raise ScenarioError(f"configuration: {exc}") from exc


def _rep_of(scenario: Scenario, cfg: ChenConfig, dim_cap: int) -> SimplicialRep:
    if scenario.rep is not None:
        return scenario.rep
    return integrate_rep(scenario.scene, cfg, dim_cap)


def _cmd_holonomy(sc: Scenario, cfg: ChenConfig, dim_cap: int, flags: dict) -> dict:
    if sc.scene is None:
        raise InvariantError("holonomy needs forms; the scenario only lists representation values")
    rows, checks = [], []
    for s in sc.complex.all_simplices(dim_cap):
        try:
            val = hol_object_value(sc.scene.form(s), cfg)
        except (AccuracyError, TruncationError):
            raise
        except Exception as exc:
            raise HolonomyError(s, exc) from exc
        rows.append({"simplex": _simplex_label(s), "dim": len(s) - 1,
                     "degree": 1 - (len(s) - 1), "matrix": _mat(val.value), "error_estimate": _num(val.error)})
        if len(s) == 2:
            ref = parallel_transport_ode(TransportProblem.from_form(sc.scene.form(s)))
            checks.append(_check(f"transport{_simplex_label(s)}", _opnorm(val.value - ref.matrix), TRANSPORT_TOL))
    for s, g in sc.gauges:
        checks.append(_check(f"gauge{_simplex_label(s)}", gauge_equivariance_defect(sc.scene.form(s), g, cfg),
                             GAUGE_TOL))
    return {"holonomies": rows, "checks": checks}


def _cmd_check_rep(sc: Scenario, cfg: ChenConfig, dim_cap: int, flags: dict) -> dict:
    rep = _rep_of(sc, cfg, dim_cap)
    res = structure_residual(rep)
    ok, worst = unitality_check(rep)
    checks = [_check("structure_residual", res, STRUCTURE_TOL), _check("unitality", worst, 0.0, ok)]
    return {"source": "rep_values" if sc.rep is not None else "integrated",
            "structure_residual": _num(res), "checks": checks}


def _cohomology_range(rep: SimplicialRep) -> tuple[int, int]:
    degs = [d for v in rep.complex.vertices for d in rep.target[v].degrees()]
    return min(degs), max(degs) + rep.complex.dim


def _cmd_cohomology(sc: Scenario, cfg: ChenConfig, dim_cap: int, flags: dict) -> dict:
    rep = _rep_of(sc, cfg, dim_cap)
    lo, hi = _cohomology_range(rep)
    betti = twisted_cohomology(rep, min_degree=lo, max_degree=hi)
    res = structure_residual(rep)
    checks = [_check("structure_residual", res, STRUCTURE_TOL)]
    if sc.expected_betti is not None:
        mismatch = sum(abs(betti.get(d, 0) - n) for d, n in sc.expected_betti.items())
        checks.append(_check("expected_betti", mismatch, 0))
    return {"betti": {str(d): int(n) for d, n in sorted(betti.items())}, "checks": checks}


def sphere_demo_report(sc: Scenario, cfg: ChenConfig, dim_cap: int) -> dict:
    """The sphere demonstration on a 2-dimensional scene with ``η ⊗ φ`` forms."""
    X = sc.scene
    if X is None or sc.complex.dim != 2:
        raise InvariantError("sphere-demo needs a 2-dimensional scene with forms")
    rep = integrate_rep(X, cfg, dim_cap)
    tris = sc.complex.simplices(2)
    hol_mass = sum(_opnorm(rep(t)) for t in tris)
    ref_mass = sum(_opnorm(brute_simplex_integral(X.form(t))) for t in tris)
    rel = abs(hol_mass - ref_mass) / max(ref_mass, 1e-300)
    lo, hi = _cohomology_range(rep)
    betti = twisted_cohomology(rep, min_degree=lo, max_degree=hi)
    control = FormValuedComplex(sc.complex, sc.space, {})
    betti0 = twisted_cohomology(integrate_rep(control, cfg, dim_cap), min_degree=lo, max_degree=hi)
    want = {d: 0 for d in range(lo, hi + 1)}
    want.update(sc.expected_betti or {0: 1, 1: 0, 2: 0, 3: 1})
    mismatch = sum(abs(betti.get(d, 0) - n) for d, n in want.items())
    checks = [
        _check("structure_residual", structure_residual(rep), STRUCTURE_TOL),
        _check("eta_mass_relative_error", rel, SPHERE_REL_TOL),
        _check("twisted_betti_mismatch", mismatch, 0),
        _check("untwisted_h2_positive", betti0.get(2, 0), 0, betti0.get(2, 0) >= 1),
    ]
    return {
        "triangles": len(tris),
        "holonomy_mass": _num(hol_mass),
        "reference_mass": _num(ref_mass),
        "twisted_betti": {str(d): int(n) for d, n in sorted(betti.items())},
        "untwisted_betti": {str(d): int(n) for d, n in sorted(betti0.items())},
        "checks": checks,
    }


def _cmd_sphere(sc: Scenario, cfg: ChenConfig, dim_cap: int, flags: dict) -> dict:
    return sphere_demo_report(sc, cfg, dim_cap)


def _strict_gauge_checks(rng) -> dict:
    """Gauge identities for the strict unital morphism ``id_Λ ⊗ (a ↦ g^{-1} a g)``.

    ``V = ℝ^2 ⊕ ℝ[-1]`` with ``D = r`` from degree 0 to degree 1; the degree-0
    automorphism ``g`` commutes with ``D``, so conjugation is a dga map.
    """
    V = GradedVectorSpace({0: 2, 1: 1})
    r = np.array([1.0, 0.3])
    D = np.zeros((3, 3))
    D[2, :2] = r
    g = np.zeros((3, 3))
    g[:2, :2] = 2.0 * np.eye(2) + np.outer([0.3, -1.0], rng.uniform(-0.5, 0.5, 2))
    g[2, 2] = 2.0
    g_inv = np.linalg.inv(g)
    Bd = matrix_dga(V, D)
    rho = np.zeros((9, 9))
    for a in range(9):
        unit_vec = np.zeros(9)
        unit_vec[a] = 1.0
        rho[:, a] = (g_inv @ unit_vec.reshape(3, 3) @ g).ravel()
    E = exterior_dga(1)
    T = tensor_dga(E, Bd)
    Tinf = dga_to_ainfty(T, 3)
    strict = tensor_with_morphism(E, strict_morphism(rho, Bd.degrees, Bd.degrees, 3))
    f = T.unit.copy()
    mask = T.degrees == 0
    f[mask] += 0.3 * rng.uniform(-1, 1, int(mask.sum()))
    f_inv = np.linalg.solve(np.einsum("cab,a->cb", T.mult, f), T.unit)
    s1 = strict.flat(1)
    f_img, finv_img = s1 @ f, s1 @ f_inv
    u_f = gauge_mc_element(T, f, f_inv)
    left = compose_ainfty(twist_morphism(strict, u_f, depth=1), conjugation_morphism(T, f, f_inv, 2), 2)
    right = compose_ainfty(conjugation_morphism(T, f_img, finv_img, 2), strict, 2)
    return {
        "strict": morphism_residual(strict, Tinf, Tinf),
        "inverse": float(np.abs(T.product(f_img, finv_img) - T.unit).max()),
        "pushforward": float(np.abs(mc_pushforward(strict, u_f) - gauge_mc_element(T, f_img, finv_img)).max()),
        "square": max(float(np.abs(left.flat(n) - right.flat(n)).max()) for n in (1, 2)),
        "conjugation": morphism_residual(conjugation_morphism(T, f, f_inv, 3), Tinf,
                                         twist_algebra(Tinf, u_f, depth=1)),
    }


def ainfty_suite(seed: int = 0, n_max: int = 6) -> dict:
    """Residuals of the A∞ constructions on seeded random truncated data."""
    rng = np.random.default_rng(seed)
    V = GradedVectorSpace({0: 1, 1: 1})
    D = np.zeros((2, 2))
    D[1, 0] = 1.0
    Bd = matrix_dga(V, D)
    B = dga_to_ainfty(Bd, n_max)
    phi = AInftyMorphismData(B.degrees, B.degrees, random_morphism_components(rng, B.degrees, B.degrees, n_max),
                             n_max)
    A = transport_structure(B, phi)
    psi = inverse_morphism(phi)
    ident = compose_ainfty(phi, psi)
    id_defect = max(float(np.abs(ident.flat(n) - (np.eye(B.dim) if n == 1 else 0.0)).max())
                    for n in range(1, n_max + 1))
    E = exterior_dga(1)
    EA, EB = tensor_with_algebra(E, A), tensor_with_algebra(E, B)
    Epsi, Ephi = tensor_with_morphism(E, psi), tensor_with_morphism(E, phi)
    T = tensor_dga(E, Bd)
    # a gauge of the form 1 + ξ ⊗ b keeps every Maurer-Cartan series finite
    b = np.zeros(Bd.dim)
    b[1] = rng.uniform(0.5, 1.0)  # the degree -1 matrix unit
    X = np.kron(np.array([0.0, 1.0]), b)
    y = gauge_mc_element(T, T.unit + X, T.unit - X)
    xA = mc_pushforward(Ephi, y)
    EAx, EBy = twist_algebra(EA, xA, depth=1), twist_algebra(EB, y, depth=1)
    twisted_psi = twist_morphism(Epsi, xA, depth=1)
    gauge = _strict_gauge_checks(rng)
    engine = gauge_pushforward_defect(nil_gauge(rng, GradedVectorSpace({0: 2, 1: 1}), 1))
    checks = [
        _check("dga_structure", structure_residual_algebra(B), AINFTY_TOL),
        _check("transported_structure", structure_residual_algebra(A), AINFTY_TOL),
        _check("morphism", morphism_residual(phi, B, A), AINFTY_TOL),
        _check("inverse_morphism", morphism_residual(psi, A, B), AINFTY_TOL),
        _check("composition_identity", id_defect, AINFTY_TOL),
        _check("tensor_structure", structure_residual_algebra(EA), AINFTY_TOL),
        _check("tensor_morphism", morphism_residual(Epsi, EA, EB), AINFTY_TOL),
        _check("pushforward_mc", mc_residual_ainfty(EA, xA), AINFTY_TOL),
        _check("pushforward_roundtrip", float(np.abs(mc_pushforward(Epsi, xA) - y).max()), AINFTY_TOL),
        _check("twist_structure", structure_residual_algebra(EAx), AINFTY_TOL),
        _check("twist_morphism", morphism_residual(twisted_psi, EAx, EBy), AINFTY_TOL),
        _check("strict_morphism", gauge["strict"], AINFTY_TOL),
        _check("gauge_inverse_image", gauge["inverse"], PROP44_TOL),
        _check("gauge_pushforward", gauge["pushforward"], PROP44_TOL),
        _check("gauge_square", gauge["square"], PROP44_TOL),
        _check("conjugation_morphism", gauge["conjugation"], PROP44_TOL),
        _check("forms_gauge_pushforward", engine, PROP44_TOL),
    ]
    return {"seed": seed, "n_max": n_max, "checks": checks}


def _cmd_ainfty(sc: Scenario | None, cfg: ChenConfig, dim_cap: int, flags: dict) -> dict:
    seed = flags.get("jitter_seed") or 0
    return ainfty_suite(seed=seed, n_max=flags.get("max_n") or 6)


COMMANDS = {
    "holonomy": _cmd_holonomy,
    "check-rep": _cmd_check_rep,
    "cohomology": _cmd_cohomology,
    "sphere-demo": _cmd_sphere,
    "verify-ainfty": _cmd_ainfty,
}
_DEFAULT_SCENARIO = {"sphere-demo": "sphere_octahedron"}


def run_command(cmd: str, scenario: Scenario | None, flags: dict | None = None) -> dict:
    """Run one command and return its report (checks included)."""
    flags = dict(flags or {})
    if cmd not in COMMANDS:
        raise ValueError(f"unknown command {cmd!r}")
    if scenario is None and cmd != "verify-ainfty":
        raise ScenarioError(f"command {cmd} needs a scenario")
    cfg, dim_cap = _config(scenario, flags)
    body = COMMANDS[cmd](scenario, cfg, dim_cap, flags)
    checks = body.pop("checks")
    report = {
        "command": cmd,
        "scenario": scenario.name if scenario is not None else None,
        "config": {"max_n": cfg.max_n, "tol": cfg.tol, "quad_order": cfg.quad_order,
                   "subdivide_t": cfg.subdivide_t, "jitter_seed": cfg.jitter_seed, "mode": cfg.mode,
                   "dim_cap": dim_cap},
        "results": body,
        "checks": checks,
        "status": "pass" if all(c["pass"] for c in checks) else "fail",
    }
    return report


def format_report(report: dict, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    lines = [f"command: {report['command']}", f"scenario: {report['scenario']}"]
    res = report.get("results", {})
    for row in res.get("holonomies", []):
        lines.append(f"  hol {row['simplex']} (degree {row['degree']}, err {row['error_estimate']:.2e})")
        for r in row["matrix"]:
            lines.append("      " + " ".join(f"{v: .9f}" for v in r))
    for key in ("betti", "twisted_betti", "untwisted_betti"):
        if key in res:
            lines.append(f"  {key}: " + ", ".join(f"H^{d}={n}" for d, n in res[key].items()))
    for key in ("structure_residual", "holonomy_mass", "reference_mass"):
        if key in res:
            lines.append(f"  {key}: {res[key]:.6e}")
    lines.append(f"  {'check':<32} {'value':>14} {'tolerance':>10}  result")
    for c in report["checks"]:
        lines.append(f"  {c['name']:<32} {c['value']:>14.6e} {c['tolerance']:>10.1e}  "
                     f"{'PASS' if c['pass'] else 'FAIL'}")
    lines.append(f"status: {report['status']}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ main

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="artifact", description="Holonomies of flat superconnections "
                                "and representations up to homotopy on finite simplicial complexes.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("scenario", nargs="?", help="scenario JSON file or bundled fixture name")
    p.add_argument("--max-n", type=int, dest="max_n")
    p.add_argument("--tol", type=float)
    p.add_argument("--quad-order", type=int, dest="quad_order")
    p.add_argument("--no-subdivide", action="store_true", dest="no_subdivide")
    p.add_argument("--seed", type=int, dest="jitter_seed")
    p.add_argument("--dim-cap", type=int, dest="dim_cap")
    p.add_argument("--format", choices=["json", "text"], default="json")
    p.add_argument("--out", help="write the report here instead of stdout")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    flags = {k: getattr(args, k) for k in ("max_n", "tol", "quad_order", "no_subdivide", "jitter_seed", "dim_cap")}
    try:
        name = args.scenario or _DEFAULT_SCENARIO.get(args.command)
        scenario = parse_scenario(name) if name else None
        report = run_command(args.command, scenario, flags)
    except ScenarioError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (AccuracyError, TruncationError) as exc:
        print(f"accuracy error: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except HolonomyError as exc:
        code = EXIT_ACCURACY if isinstance(exc.cause, (AccuracyError, TruncationError)) else EXIT_INVARIANT
        print(f"{'accuracy' if code == EXIT_ACCURACY else 'invariant'} error: {exc}", file=sys.stderr)
        return code
    except (InvariantError, FormError, GaugeError, DimensionError) as exc:
        print(f"invariant error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    text = format_report(report, args.format)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if report["status"] == "pass" else EXIT_INVARIANT


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
