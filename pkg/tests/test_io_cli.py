"""Config parsing, OBJ/CSV round trips, diagnostics and the CLI."""
import copy
import json
import math

import numpy as np
import pytest

from ksurf import (
    ConfigError,
    CurvatureFamily,
    CurvatureSpec,
    IterationConfig,
    SurgerySpec,
    build_report,
    export_mesh,
    import_mesh,
    insert_branch_point,
    parse_config,
    trimesh_from_obj,
    validate_complex,
)
from ksurf.cli import main

from conftest import build_patched


def test_parse_config_defaults():
    cfg = parse_config("")
    assert cfg.curvature.family is CurvatureFamily.CONSTANT
    assert cfg.curvature.epsilon == 0.0
    assert cfg.schedule == [0.0]
    assert (cfg.n, cfg.I, cfg.J) == (2, 20, 20)
    assert cfg.angles is None
    assert cfg.surgery == []
    assert cfg.out_mesh == "surface.obj"
    it = cfg.iteration_config()
    assert isinstance(it, IterationConfig)
    assert it.tol == 1e-4 and it.max_iters == 100


FULL_CONFIG = """
curvature:
  family: RING
  epsilon: 2.0
  schedule: [0.5, 1.0, 2.0]
  params:
    ring_radius: 0.4
    ring_gain: 10.0
sectors:
  n: 3
  angles: [1.0, 1.0, 1.0, 1.0, 1.0, 1.2831853071795862]
grid:
  I: 8
  J: 6
  u_max: 0.75
  v_max: 0.5
iteration:
  tol: 0.00001
  max_iters: 40
surgery:
  - {sector: 1, b: 3, m: 5, size: 3}
output:
  mesh: m.obj
  csv: m.csv
  report: m.txt
seed: 7
"""


def test_parse_config_full():
    cfg = parse_config(FULL_CONFIG)
    assert cfg.curvature.family is CurvatureFamily.RING
    assert cfg.curvature.ring_radius == 0.4
    assert cfg.curvature.ring_gain == 10.0
    assert cfg.schedule == [0.5, 1.0, 2.0]
    assert cfg.n == 3 and len(cfg.angles) == 6
    assert (cfg.I, cfg.J, cfg.u_max, cfg.v_max) == (8, 6, 0.75, 0.5)
    assert cfg.tol == 1e-5 and cfg.max_iters == 40
    assert cfg.surgery == [SurgerySpec(sector=1, b=3, m=5, spacing=None, size=3)]
    assert (cfg.out_mesh, cfg.out_csv, cfg.out_report) == ("m.obj", "m.csv", "m.txt")
    assert cfg.seed == 7


@pytest.mark.parametrize("text,fragment", [
    ("bogus: 1", "unknown top-level"),
    ("curvature: {family: SPHERICAL}", "curvature.family"),
    ("curvature: {epsilon: -1.0}", "nonnegative"),
    ("curvature: {epsilon: 2.0, schedule: [2.0, 1.0]}", "nondecreasing"),
    ("curvature: {epsilon: 2.0, schedule: [1.0]}", "end at epsilon"),
    ("sectors: {n: 1}", "at least 2"),
    ("sectors: {n: 2, angles: [1.0, 1.0]}", "2*n"),
    ("grid: {I: 0}", "at least 1"),
    ("grid: {u_max: -0.5}", "positive"),
    ("iteration: {tol: 0.0}", "positive"),
    ("iteration: {max_iters: 0}", "at least 1"),
    ("surgery: [{b: 2, m: 4}]", "odd"),
    ("surgery: [{m: 3}]", "missing required"),
    ("grid: {I: true}", "expected int"),
    ("- a\n- b", "mapping"),
    ("curvature: {family: [1,2}", "cannot parse"),
])
def test_parse_config_rejects(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(text)


def test_export_import_roundtrip(tmp_path):
    cx = build_patched("LINEAR", 1.0, 2, 0.5, 6)
    obj1 = tmp_path / "a.obj"
    csv1 = tmp_path / "a.csv"
    export_mesh(cx, obj1, csv1)

    back = import_mesh(obj1, csv1)
    assert len(back.sectors) == len(cx.sectors)
    for s, t in zip(cx.sectors, back.sectors):
        assert s.parity is t.parity
        np.testing.assert_array_equal(s.positions, t.positions)
        np.testing.assert_array_equal(s.normals, t.normals)
        np.testing.assert_array_equal(s.rho, t.rho)
        np.testing.assert_array_equal(s.geo_dist, t.geo_dist)
    rep = validate_complex(back)
    assert rep.passed, [c.detail for c in rep.checks if not c.passed]

    obj2 = tmp_path / "b.obj"
    csv2 = tmp_path / "b.csv"
    export_mesh(back, obj2, csv2)
    assert obj1.read_bytes() == obj2.read_bytes()
    assert csv1.read_bytes() == csv2.read_bytes()


def test_export_meta_and_branch_points(tmp_path):
    base = build_patched("CONSTANT", 0.0, 2, 1.0, 8, tol=1e-8)
    cx = insert_branch_point(
        base, SurgerySpec(sector=0, b=4, m=3),
        CurvatureSpec(CurvatureFamily.CONSTANT),
        IterationConfig(tol=1e-8, max_iters=100, epsilon_schedule=[0.0]))
    obj = tmp_path / "s.obj"
    export_mesh(cx, obj, tmp_path / "s.csv")
    meta = json.loads(obj.read_text().splitlines()[0].removeprefix("#meta "))
    assert meta["version"] == 1
    assert len(meta["sectors"]) == 7
    assert meta["branch_points"] == [{
        "sector": 0, "i": 4, "j": 4, "incident_sectors": 4, "expected_quads": 6}]
    back = import_mesh(obj, tmp_path / "s.csv")
    assert back.branch_points == cx.branch_points
    assert validate_complex(back).passed


def test_trimesh_from_obj_matches_export(tmp_path):
    cx = build_patched("LINEAR", 1.0, 2, 0.5, 6)
    obj = tmp_path / "m.obj"
    export_mesh(cx, obj, tmp_path / "m.csv")
    m = trimesh_from_obj(obj)
    from ksurf import global_vertex_ids, triangulate_complex
    direct = triangulate_complex(cx)
    assert m.n_vertices == direct.n_vertices
    assert m.tris.shape == direct.tris.shape
    np.testing.assert_array_equal(m.vertices, direct.vertices)


def test_build_report_on_clean_complex(pseudosphere_n2):
    rep = build_report(pseudosphere_n2)
    assert rep.max_compatibility < 1e-12
    assert rep.max_tangency < 1e-12
    assert rep.max_edge_length < 1e-12
    assert rep.gluing_pos_max == 0.0
    assert rep.gluing_normal_max == 0.0
    assert rep.boundary_arc_err < 1e-6
    I = pseudosphere_n2.sectors[0].I
    assert rep.n_quads == 4 * I * I
    text = rep.to_text()
    for token in ("compatibility", "gluing", "boundary arc"):
        assert token in text
    d = rep.to_dict()
    assert d["n_vertices"] == rep.n_vertices


def test_report_sees_tampering(pseudosphere_n2):
    cx = copy.deepcopy(pseudosphere_n2)
    cx.sectors[2].positions[5, 0] += np.array([0.0, 2e-4, 0.0])
    rep = build_report(cx)
    assert rep.gluing_pos_max == pytest.approx(2e-4, rel=1e-9)


BASE_CLI_CONFIG = """
curvature:
  family: LINEAR
  epsilon: 1.0
grid:
  I: 6
  u_max: 0.5
  v_max: 0.5
iteration:
  tol: 0.0001
  max_iters: 100
"""


def _write_cfg(tmp_path, text=BASE_CLI_CONFIG, name="run.yaml"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_cli_generate_and_validate(tmp_path, capsys):
    cfg = _write_cfg(tmp_path)
    obj = tmp_path / "out.obj"
    assert main(["generate", "--config", str(cfg), "--out", str(obj), "--quiet"]) == 0
    csv_path = tmp_path / "out.csv"
    report_path = tmp_path / "out.report.txt"
    assert obj.exists() and csv_path.exists() and report_path.exists()
    assert main(["validate", "--mesh", str(obj), "--csv", str(csv_path),
                 "--quiet"]) == 0
    out = capsys.readouterr().out
    assert "gluing_coincidence: ok" in out


def test_cli_generate_is_deterministic(tmp_path):
    cfg = _write_cfg(tmp_path)
    a = tmp_path / "a.obj"
    b = tmp_path / "b.obj"
    assert main(["generate", "--config", str(cfg), "--out", str(a), "--quiet"]) == 0
    assert main(["generate", "--config", str(cfg), "--out", str(b), "--quiet"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_cli_overrides(tmp_path):
    cfg = _write_cfg(tmp_path)
    obj = tmp_path / "o.obj"
    code = main(["generate", "--config", str(cfg), "--out", str(obj),
                 "--grid", "5", "--sectors", "3", "--epsilon", "0.5", "--quiet"])
    assert code == 0
    meta = json.loads(obj.read_text().splitlines()[0].removeprefix("#meta "))
    assert len(meta["sectors"]) == 6
    assert all(s["shape"] == [5, 5] for s in meta["sectors"])
    assert meta["history"][-1]["epsilon"] == 0.5


def test_cli_validate_flags_tampered_csv(tmp_path):
    cfg = _write_cfg(tmp_path)
    obj = tmp_path / "t.obj"
    assert main(["generate", "--config", str(cfg), "--out", str(obj), "--quiet"]) == 0
    csv_path = tmp_path / "t.csv"
    lines = csv_path.read_text().splitlines()
    parts = lines[40].split(",")
    parts[7] = "%.17g" % (float(parts[7]) + 0.5)
    lines[40] = ",".join(parts)
    csv_path.write_text("\n".join(lines) + "\n")
    assert main(["validate", "--mesh", str(obj), "--csv", str(csv_path),
                 "--quiet"]) == 2


def test_cli_config_errors(tmp_path):
    bad = _write_cfg(tmp_path, "curvature: {family: NOPE}\n", "bad.yaml")
    assert main(["generate", "--config", str(bad), "--quiet"]) == 1
    assert main(["generate", "--config", str(tmp_path / "missing.yaml"),
                 "--quiet"]) == 1
    # flag validation
    cfg = _write_cfg(tmp_path)
    assert main(["generate", "--config", str(cfg), "--tol", "-1", "--quiet"]) == 1
    assert main(["generate", "--config", str(cfg), "--grid", "abc", "--quiet"]) == 1


def test_cli_numerical_failure(tmp_path):
    coarse = _write_cfg(tmp_path, """
curvature: {family: CONSTANT}
grid: {I: 2, u_max: 3.0, v_max: 3.0}
""", "coarse.yaml")
    assert main(["generate", "--config", str(coarse),
                 "--out", str(tmp_path / "c.obj"), "--quiet"]) == 2


def test_cli_distance(tmp_path):
    cfg = _write_cfg(tmp_path)
    obj = tmp_path / "d.obj"
    assert main(["generate", "--config", str(cfg), "--out", str(obj), "--quiet"]) == 0
    out_csv = tmp_path / "dist.csv"
    assert main(["distance", "--mesh", str(obj), "--out", str(out_csv),
                 "--quiet"]) == 0
    rows = out_csv.read_text().splitlines()
    assert rows[0] == "vertex_index,D"
    d = np.array([float(r.split(",")[1]) for r in rows[1:]])
    assert d.min() == 0.0
    assert np.isfinite(d).all()
    # a second source pins its own vertex to zero
    two_csv = tmp_path / "dist2.csv"
    assert main(["distance", "--mesh", str(obj), "--source", "0",
                 "--source", str(len(d) - 1), "--out", str(two_csv),
                 "--quiet"]) == 0
    d2 = np.array([float(r.split(",")[1]) for r in two_csv.read_text().splitlines()[1:]])
    assert d2[0] == 0.0 and d2[-1] == 0.0
    assert len(d2) == len(d)
    assert main(["distance", "--mesh", str(obj), "--source", "999999",
                 "--quiet"]) == 1


def test_cli_surgery(tmp_path):
    cfg = _write_cfg(tmp_path, BASE_CLI_CONFIG + """
surgery:
  - {sector: 0, b: 3, m: 3}
""", "surgery.yaml")
    obj = tmp_path / "s.obj"
    assert main(["surgery", "--config", str(cfg), "--out", str(obj), "--quiet"]) == 0
    meta = json.loads(obj.read_text().splitlines()[0].removeprefix("#meta "))
    assert len(meta["branch_points"]) == 1
    assert len(meta["sectors"]) == 7
    # surgery subcommand requires cuts in the config
    plain = _write_cfg(tmp_path, BASE_CLI_CONFIG, "plain.yaml")
    assert main(["surgery", "--config", str(plain), "--quiet"]) == 1
