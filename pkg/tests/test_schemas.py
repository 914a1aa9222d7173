import csv
import json
import math

import numpy as np
import pytest
from pydantic import ValidationError

from conftest import fixture_path
from errors import BadMatching, ProblemIOError, TargetInvalid
from flow import FlowConfig, flow_newton, uniform_target
from schemas import (
    TRACE_COLUMNS,
    PackingIn,
    ProblemFile,
    dumps,
    finite_or_none,
    load_problem,
    packing_to_problem,
    read_problem,
    write_json,
    write_trace_csv,
)


def test_read_fixture():
    pf = read_problem(fixture_path("torus2"))
    assert pf.mesh.num_vertices == 2
    assert pf.target.curvature == "uniform"
    problem = load_problem(pf)
    assert problem.packing.tri.num_edges == 6
    assert problem.coords == "euclidean"
    assert problem.target == pytest.approx([0.0, 0.0])
    assert problem.overrides == {}


def test_missing_target_stays_none():
    problem = load_problem(read_problem(fixture_path("sphere3")))
    assert problem.target is None


def test_read_errors(tmp_path):
    with pytest.raises(ProblemIOError) as err:
        read_problem(tmp_path / "nope.json")
    assert err.value.exit_code == 3

    broken = tmp_path / "broken.json"
    broken.write_text("{ not json")
    with pytest.raises(ProblemIOError):
        read_problem(broken)

    incomplete = tmp_path / "incomplete.json"
    incomplete.write_text(json.dumps({"mesh": {"num_vertices": 1, "faces": [[0, 0, 0]]}}))
    with pytest.raises(ProblemIOError) as err:
        read_problem(incomplete)
    assert err.value.details["errors"]


def test_bad_gluing_fails_on_load():
    with pytest.raises(BadMatching):
        load_problem(read_problem(fixture_path("bad_twins")))


def test_packing_needs_matching_edge_array():
    with pytest.raises(ValidationError):
        PackingIn(radii=[1.0])
    with pytest.raises(ValidationError):
        PackingIn(coords="hyperbolic", inv_dist=[2.0], radii=[1.0])
    with pytest.raises(ValidationError):
        PackingIn(inv_dist=[2.0], lengths=[1.0], radii=[1.0])


def test_hyperbolic_problem_loads():
    raw = json.loads(fixture_path("torus1").read_text())
    raw["packing"] = {"coords": "hyperbolic", "lengths": [math.acosh(2.0)] * 3, "radii": [1.0]}
    problem = load_problem(ProblemFile.model_validate(raw))
    assert problem.coords == "hyperbolic"
    np.testing.assert_allclose(problem.packing.inv_dist, [2.0] * 3)


def test_explicit_target_and_config():
    raw = json.loads(fixture_path("torus2").read_text())
    raw["target"] = {"curvature": [0.25, -0.25]}
    raw["config"] = {"method": "euler", "tol": 1e-8}
    problem = load_problem(ProblemFile.model_validate(raw))
    assert problem.target == pytest.approx([0.25, -0.25])
    assert problem.overrides == {"method": "euler", "tol": 1e-8}

    raw["target"] = {"curvature": [1.0, 1.0]}
    with pytest.raises(TargetInvalid):
        load_problem(ProblemFile.model_validate(raw))


def test_packing_to_problem_round_trip(torus2):
    pk = torus2.with_radii([0.8, 1.1])
    back = load_problem(packing_to_problem(pk)).packing
    assert back.tri.signature() == pk.tri.signature()
    assert back.tri.edge_ids == pk.tri.edge_ids
    np.testing.assert_array_equal(back.inv_dist, pk.inv_dist)
    np.testing.assert_array_equal(back.radii, pk.radii)

    hyp = load_problem(packing_to_problem(pk, coords="hyperbolic")).packing
    np.testing.assert_allclose(hyp.inv_dist, pk.inv_dist, rtol=1e-12)


def test_write_json_and_read_back(tmp_path, torus2):
    path = tmp_path / "out.json"
    write_json(packing_to_problem(torus2), path)
    text = path.read_text()
    assert "config" not in json.loads(text)
    assert load_problem(read_problem(path)).packing.radii.tolist() == torus2.radii.tolist()
    assert dumps(packing_to_problem(torus2)) + "\n" == text


def test_write_json_bad_path(tmp_path, torus2):
    with pytest.raises(ProblemIOError):
        write_json(packing_to_problem(torus2), tmp_path / "missing" / "out.json")


def test_trace_csv(tmp_path, torus2):
    _, trace = flow_newton(torus2, uniform_target(torus2.tri), FlowConfig())
    path = tmp_path / "trace.csv"
    write_trace_csv(trace, path)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0].keys()) == TRACE_COLUMNS
    assert len(rows) == len(trace.steps)
    assert float(rows[-1]["max_err"]) == trace.steps[-1].max_err
    assert int(rows[0]["iter"]) == 0


def test_finite_or_none():
    assert finite_or_none(np.array([1.5, np.nan])) == [1.5, None]
