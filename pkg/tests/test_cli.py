import json

import numpy as np
import pytest

from artifact.cli import (
    EXIT_ACCURACY,
    EXIT_INVARIANT,
    EXIT_OK,
    EXIT_SCHEMA,
    InvariantError,
    ScenarioError,
    format_report,
    load_scenario_dict,
    main,
    parse_scenario,
    run_command,
    scenario_document,
)
from artifact.oracles import TransportProblem, parallel_transport_ode
from artifact.scenes import triangle_scene


def test_interval_fixture_parses():
    sc = parse_scenario("interval_transport")
    assert sc.complex.count() == [2, 1]
    assert sc.scene is not None


def test_sphere_fixture_counts():
    assert parse_scenario("sphere_octahedron").complex.count() == [6, 12, 8]


def test_face_mismatch_fixture_names_simplex_and_face():
    with pytest.raises(InvariantError, match=r"simplex \(1, 2, 3\).*face 2"):
        parse_scenario("bad_face_mismatch")


def test_schema_errors_name_the_field(tmp_path):
    with pytest.raises(ScenarioError, match="space"):
        load_scenario_dict({"version": 1, "space": {"x": 1}, "simplices": [[0, 1]]})
    with pytest.raises(ScenarioError, match="version"):
        load_scenario_dict({"version": 99, "space": {"0": 1}, "simplices": [[0, 1]]})
    bad = tmp_path / "broken.json"
    bad.write_text('{"version": 1,\n "space": }')
    with pytest.raises(ScenarioError, match="line 2"):
        parse_scenario(bad)


def test_holonomy_report_matches_transport():
    sc = parse_scenario("interval_transport")
    report = run_command("holonomy", sc)
    assert report["status"] == "pass"
    edge = next(r for r in report["results"]["holonomies"] if r["dim"] == 1)
    ref = parallel_transport_ode(TransportProblem.from_form(sc.scene.form(sc.complex.simplices(1)[0]))).matrix
    assert np.abs(np.array(edge["matrix"]) - ref).max() < 1e-6


def test_sphere_cohomology_report():
    report = run_command("cohomology", parse_scenario("sphere_octahedron"))
    betti = report["results"]["betti"]
    assert [betti.get(str(d), 0) for d in range(4)] == [1, 0, 0, 1]
    assert report["status"] == "pass"


def test_scenario_document_roundtrip(tmp_path):
    X = triangle_scene()
    path = tmp_path / "tri.json"
    path.write_text(json.dumps(scenario_document(X, "tri")))
    sc = parse_scenario(path)
    s = X.complex.simplices(2)[0]
    assert sc.scene.form(s).allclose(X.form(s))


@pytest.mark.parametrize("argv, code", [
    (["holonomy", "interval_transport"], EXIT_OK),
    (["holonomy", "triangle_two_term"], EXIT_OK),
    (["check-rep", "ordinary_triangle"], EXIT_OK),
    (["cohomology", "sphere_octahedron"], EXIT_OK),
    (["check-rep", "bad_perturbed_rep"], EXIT_INVARIANT),
    (["holonomy", "bad_face_mismatch"], EXIT_INVARIANT),
    (["holonomy", "no_such_scenario"], EXIT_SCHEMA),
    (["holonomy", "interval_transport", "--quad-order", "1"], EXIT_SCHEMA),
    (["holonomy", "interval_transport", "--tol", "1e-16", "--quad-order", "2", "--no-subdivide"], EXIT_ACCURACY),
])
def test_exit_codes(argv, code, capsys):
    assert main(argv) == code


def test_perturbed_rep_reports_residual(capsys):
    assert main(["check-rep", "bad_perturbed_rep"]) == EXIT_INVARIANT
    report = json.loads(capsys.readouterr().out)
    assert report["status"] == "fail"
    assert report["results"]["structure_residual"] > 1e-5


def test_text_format_and_out_file(tmp_path, capsys):
    out = tmp_path / "report.txt"
    assert main(["holonomy", "interval_transport", "--format", "text", "--out", str(out)]) == EXIT_OK
    assert capsys.readouterr().out == ""
    text = out.read_text()
    assert "status: pass" in text and "transport" in text


def test_reports_are_byte_identical(capsys):
    runs = []
    for _ in range(2):
        main(["holonomy", "triangle_two_term", "--seed", "3"])
        runs.append(capsys.readouterr().out)
    assert runs[0] == runs[1]
    sc = parse_scenario("triangle_two_term")
    assert format_report(run_command("check-rep", sc), "text") == format_report(run_command("check-rep", sc), "text")
