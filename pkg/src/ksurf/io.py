"""Config parsing, mesh export/import and diagnostics reporting.

Configs are YAML (JSON also parses) with top-level keys ``curvature``,
``sectors``, ``grid``, ``iteration``, ``surgery`` and ``output``. Meshes
export as OBJ (one ``v`` and one ``vn`` line per deduplicated vertex, quads
as ``f`` faces with vertex//normal indices, full double precision) plus a
CSV sidecar with one row per sector node carrying the grid indices, the
deduplicated vertex index and the per-node scalars. A ``#meta`` comment in
the OBJ records sector shapes, parities, the origin and branch points so
the complex can be reimported losslessly.
"""
from __future__ import annotations

import csv
import io as _io
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .amsler import (
    CurvatureFamily,
    CurvatureSpec,
    IterationConfig,
    auto_schedule,
)
from .geodesic import TriMesh, fast_march, trimesh_from_quads, triangulate_complex
from .lelieuvre import compatibility_residual, quad_residuals
from .mesh import (
    BranchPoint,
    GluingMap,
    Parity,
    SectorGrid,
    SurfaceComplex,
    global_vertex_ids,
    quad_corner_indices,
    quad_corners,
    validate_complex,
)
from .vectors import angle_between

logger = logging.getLogger(__name__)

FLOAT_FMT = "%.17g"

CSV_COLUMNS = ["sector_id", "i", "j", "vertex_index",
               "x", "y", "z", "nx", "ny", "nz", "D", "K", "rho"]


class ConfigError(Exception):
    """Invalid or unparseable run configuration."""


@dataclass
class RunConfig:
    curvature: CurvatureSpec
    schedule: list
    n: int = 2
    angles: list | None = None
    I: int = 20
    J: int = 20
    u_max: float = 1.0
    v_max: float = 1.0
    tol: float = 1e-4
    max_iters: int = 100
    surgery: list = field(default_factory=list)
    out_mesh: str = "surface.obj"
    out_csv: str = "surface.csv"
    out_report: str = "report.txt"
    seed: int = 0

    def iteration_config(self) -> IterationConfig:
        return IterationConfig(tol=self.tol, max_iters=self.max_iters,
                               epsilon_schedule=tuple(self.schedule))


def _expect(mapping, key, types, path, default=None, required=False):
    if key not in mapping:
        if required:
            raise ConfigError(f"{path}.{key}: missing required key")
        return default
    val = mapping[key]
    if types is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, types if isinstance(types, tuple) else (types,)) \
            or isinstance(val, bool):
        raise ConfigError(f"{path}.{key}: expected {getattr(types, '__name__', types)}, "
                          f"got {type(val).__name__}")
    return val


def _expect_map(data, key, path):
    sub = data.get(key, {})
    if sub is None:
        sub = {}
    if not isinstance(sub, dict):
        raise ConfigError(f"{path}{key}: expected a mapping")
    return sub


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run configuration, filling defaults."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping")
    known = {"curvature", "sectors", "grid", "iteration", "surgery", "output", "seed"}
    for key in data:
        if key not in known:
            raise ConfigError(f"{key}: unknown top-level key")

    curv_map = _expect_map(data, "curvature", "")
    fam_name = _expect(curv_map, "family", str, "curvature", default="CONSTANT")
    try:
        family = CurvatureFamily(fam_name)
    except ValueError:
        names = "|".join(f.value for f in CurvatureFamily)
        raise ConfigError(f"curvature.family: expected one of {names}, got {fam_name!r}")
    epsilon = _expect(curv_map, "epsilon", float, "curvature", default=0.0)
    if epsilon < 0:
        raise ConfigError(f"curvature.epsilon: must be nonnegative, got {epsilon!r}")
    params = _expect_map(curv_map, "params", "curvature.")
    ring_radius = _expect(params, "ring_radius", float, "curvature.params", default=0.5)
    ring_gain = _expect(params, "ring_gain", float, "curvature.params", default=20.0)
    try:
        curv = CurvatureSpec(family=family, epsilon=epsilon,
                             ring_radius=ring_radius, ring_gain=ring_gain)
    except ValueError as exc:
        raise ConfigError(f"curvature: {exc}") from exc
    schedule = curv_map.get("schedule")
    if schedule is None:
        schedule = auto_schedule(epsilon)
    else:
        if not isinstance(schedule, list) or not schedule \
                or not all(isinstance(x, (int, float)) and not isinstance(x, bool)
                           for x in schedule):
            raise ConfigError("curvature.schedule: expected a nonempty list of numbers")
        schedule = [float(x) for x in schedule]
        if any(b < a for a, b in zip(schedule, schedule[1:])):
            raise ConfigError("curvature.schedule: must be nondecreasing")
        if schedule[-1] != epsilon:
            raise ConfigError(
                f"curvature.schedule: must end at epsilon ({epsilon!r}), "
                f"got {schedule[-1]!r}")

    sectors = _expect_map(data, "sectors", "")
    n = _expect(sectors, "n", int, "sectors", default=2)
    if n < 2:
        raise ConfigError(f"sectors.n: must be at least 2, got {n}")
    angles = sectors.get("angles")
    if angles is not None:
        if not isinstance(angles, list) \
                or not all(isinstance(a, (int, float)) and not isinstance(a, bool)
                           for a in angles):
            raise ConfigError("sectors.angles: expected a list of numbers")
        angles = [float(a) for a in angles]
        if len(angles) != 2 * n:
            raise ConfigError(
                f"sectors.angles: expected 2*n = {2 * n} angles, got {len(angles)}")

    grid = _expect_map(data, "grid", "")
    I = _expect(grid, "I", int, "grid", default=20)
    J = _expect(grid, "J", int, "grid", default=I)
    u_max = _expect(grid, "u_max", float, "grid", default=1.0)
    v_max = _expect(grid, "v_max", float, "grid", default=1.0)
    if I < 1 or J < 1:
        raise ConfigError(f"grid: sizes must be at least 1, got I={I}, J={J}")
    if u_max <= 0 or v_max <= 0:
        raise ConfigError("grid: u_max and v_max must be positive")

    iteration = _expect_map(data, "iteration", "")
    tol = _expect(iteration, "tol", float, "iteration", default=1e-4)
    max_iters = _expect(iteration, "max_iters", int, "iteration", default=100)
    if tol <= 0:
        raise ConfigError(f"iteration.tol: must be positive, got {tol!r}")
    if max_iters < 1:
        raise ConfigError(f"iteration.max_iters: must be at least 1, got {max_iters}")

    surgery_list = data.get("surgery", [])
    if surgery_list is None:
        surgery_list = []
    if not isinstance(surgery_list, list):
        raise ConfigError("surgery: expected a list of cut specifications")
    cuts = []
    from .surgery import SurgerySpec
    for idx, entry in enumerate(surgery_list):
        path = f"surgery[{idx}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"{path}: expected a mapping")
        sector = _expect(entry, "sector", int, path, default=0)
        b = _expect(entry, "b", int, path, required=True)
        m = _expect(entry, "m", int, path, required=True)
        if m % 2 == 0:
            raise ConfigError(f"{path}.m: must be odd, got {m}")
        spacing = _expect(entry, "spacing", float, path, default=None)
        size = _expect(entry, "size", int, path, default=None)
        try:
            cuts.append(SurgerySpec(sector=sector, b=b, m=m, spacing=spacing, size=size))
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    output = _expect_map(data, "output", "")
    out_mesh = _expect(output, "mesh", str, "output", default="surface.obj")
    out_csv = _expect(output, "csv", str, "output", default="surface.csv")
    out_report = _expect(output, "report", str, "output", default="report.txt")
    seed = _expect(data, "seed", int, "", default=0)

    return RunConfig(
        curvature=curv, schedule=schedule, n=n, angles=angles,
        I=I, J=J, u_max=u_max, v_max=v_max,
        tol=tol, max_iters=max_iters, surgery=cuts,
        out_mesh=out_mesh, out_csv=out_csv, out_report=out_report, seed=seed,
    )


def _fmt(x: float) -> str:
    return FLOAT_FMT % x


def _meta_dict(cx: SurfaceComplex) -> dict:
    return {
        "version": 1,
        "origin": list(cx.origin),
        "sectors": [
            {"id": s.sector_id, "shape": [s.I, s.J], "parity": s.parity.value}
            for s in cx.sectors
        ],
        "branch_points": [
            {"sector": bp.sector, "i": bp.i, "j": bp.j,
             "incident_sectors": bp.incident_sectors,
             "expected_quads": bp.expected_quads}
            for bp in cx.branch_points
        ],
        "history": [
            {"epsilon": rec.epsilon, "iterations": rec.iterations,
             "changes": list(rec.changes)}
            for rec in cx.history
        ],
    }


def export_mesh(cx: SurfaceComplex, obj_path, csv_path=None) -> tuple:
    """Write the OBJ mesh and the per-node CSV sidecar. Returns both paths."""
    obj_path = str(obj_path)
    if csv_path is None:
        csv_path = obj_path.rsplit(".", 1)[0] + ".csv"
    csv_path = str(csv_path)

    ids, n_verts, back_refs = global_vertex_ids(cx)

    out = _io.StringIO()
    out.write("#meta " + json.dumps(_meta_dict(cx), sort_keys=True) + "\n")
    for v in range(n_verts):
        sid, i, j = back_refs[v][0]
        p = cx.sectors[sid].positions[i, j]
        out.write(f"v {_fmt(p[0])} {_fmt(p[1])} {_fmt(p[2])}\n")
    for v in range(n_verts):
        sid, i, j = back_refs[v][0]
        nrm = cx.sectors[sid].normals[i, j]
        out.write(f"vn {_fmt(nrm[0])} {_fmt(nrm[1])} {_fmt(nrm[2])}\n")
    for sid, s in enumerate(cx.sectors):
        for (qi, qj) in s.quads():
            f0, f1, f2, f12 = quad_corner_indices(s.parity, qi, qj)
            cycle = [ids[sid][idx] + 1 for idx in (f0, f1, f12, f2)]
            out.write("f " + " ".join(f"{c}//{c}" for c in cycle) + "\n")
    with open(obj_path, "w", newline="\n") as fh:
        fh.write(out.getvalue())

    rows = _io.StringIO()
    rows.write(",".join(CSV_COLUMNS) + "\n")
    for sid, s in enumerate(cx.sectors):
        for i in range(s.I + 1):
            for j in range(s.J + 1):
                if not s.valid[i, j]:
                    continue
                p = s.positions[i, j]
                nrm = s.normals[i, j]
                rho = float(s.rho[i, j])
                K = -(rho ** -2.0)
                vals = [str(sid), str(i), str(j), str(ids[sid][i, j]),
                        _fmt(p[0]), _fmt(p[1]), _fmt(p[2]),
                        _fmt(nrm[0]), _fmt(nrm[1]), _fmt(nrm[2]),
                        _fmt(float(s.geo_dist[i, j])), _fmt(K), _fmt(rho)]
                rows.write(",".join(vals) + "\n")
    with open(csv_path, "w", newline="\n") as fh:
        fh.write(rows.getvalue())
    logger.info("exported %d vertices to %s / %s", n_verts, obj_path, csv_path)
    return obj_path, csv_path


def import_mesh(obj_path, csv_path) -> SurfaceComplex:
    """Rebuild a SurfaceComplex from an exported OBJ + CSV pair.

    Gluings are reconstructed from nodes sharing a deduplicated vertex
    index; grid data comes from the CSV, structure from the #meta comment.
    """
    meta = None
    with open(obj_path) as fh:
        for line in fh:
            if line.startswith("#meta "):
                meta = json.loads(line[len("#meta "):])
                break
    if meta is None:
        raise ConfigError(f"{obj_path}: missing #meta line, not a ksurf export")

    sectors = []
    for entry in meta["sectors"]:
        I, J = entry["shape"]
        grid = SectorGrid.empty(I, J, Parity(entry["parity"]), entry["id"])
        grid.valid[:, :] = False
        sectors.append(grid)
    cx = SurfaceComplex(sectors=sectors, origin=tuple(meta["origin"]))
    for bp in meta.get("branch_points", []):
        cx.branch_points.append(BranchPoint(
            sector=bp["sector"], i=bp["i"], j=bp["j"],
            incident_sectors=bp["incident_sectors"],
            expected_quads=bp["expected_quads"]))
    from .amsler import StageRecord
    for rec in meta.get("history", []):
        cx.history.append(StageRecord(epsilon=rec["epsilon"],
                                      iterations=rec["iterations"],
                                      changes=list(rec["changes"])))

    by_vid = {}
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_COLUMNS:
            raise ConfigError(f"{csv_path}: unexpected CSV columns {reader.fieldnames}")
        for row in reader:
            sid, i, j = int(row["sector_id"]), int(row["i"]), int(row["j"])
            s = cx.sectors[sid]
            s.valid[i, j] = True
            s.positions[i, j] = (float(row["x"]), float(row["y"]), float(row["z"]))
            s.normals[i, j] = (float(row["nx"]), float(row["ny"]), float(row["nz"]))
            s.rho[i, j] = float(row["rho"])
            s.geo_dist[i, j] = float(row["D"])
            by_vid.setdefault(int(row["vertex_index"]), []).append((sid, i, j))

    for s in cx.sectors:
        s.positions[~s.valid] = np.nan
        s.normals[~s.valid] = np.nan
        s.rho[~s.valid] = np.nan
        s.geo_dist[~s.valid] = math.inf

    pair_maps = {}
    for vid in sorted(by_vid):
        refs = by_vid[vid]
        if len(refs) < 2:
            continue
        first = refs[0]
        for other in refs[1:]:
            key = (first[0], other[0])
            g = pair_maps.setdefault(key, GluingMap(
                sector_a=key[0], sector_b=key[1], nodes_a=[], nodes_b=[]))
            g.nodes_a.append((first[1], first[2]))
            g.nodes_b.append((other[1], other[2]))
    cx.gluings = [pair_maps[k] for k in sorted(pair_maps)]
    return cx


def trimesh_from_obj(path) -> TriMesh:
    """Triangulate the quads of an exported OBJ for distance queries."""
    vertices = []
    faces = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("v "):
                vertices.append([float(x) for x in line.split()[1:4]])
            elif line.startswith("f "):
                idx = [int(tok.split("/")[0]) - 1 for tok in line.split()[1:]]
                if len(idx) != 4:
                    raise ConfigError(f"{path}: expected quad faces, got {len(idx)} vertices")
                faces.append(idx)
    if not vertices or not faces:
        raise ConfigError(f"{path}: no mesh data found")
    verts = np.asarray(vertices, dtype=float)
    # Face cycles are (f0, f1, f12, f2); quad corner order is (f0, f1, f2, f12).
    quads = [(a, b, d, c) for (a, b, c, d) in faces]
    return trimesh_from_quads(verts, quads)


@dataclass
class DiagnosticsReport:
    """Residuals recomputed from surface data plus generation history."""

    max_compatibility: float
    max_tangency: float
    max_edge_length: float
    max_unit_norm: float
    gluing_pos_max: float
    gluing_normal_max: float
    boundary_arc_err: float
    obtuse_count: int
    singular_margin: float
    change_history: list
    n_vertices: int
    n_quads: int

    def to_dict(self) -> dict:
        return {
            "max_compatibility": self.max_compatibility,
            "max_tangency": self.max_tangency,
            "max_edge_length": self.max_edge_length,
            "max_unit_norm": self.max_unit_norm,
            "gluing_pos_max": self.gluing_pos_max,
            "gluing_normal_max": self.gluing_normal_max,
            "boundary_arc_err": self.boundary_arc_err,
            "obtuse_count": self.obtuse_count,
            "singular_margin": self.singular_margin,
            "change_history": self.change_history,
            "n_vertices": self.n_vertices,
            "n_quads": self.n_quads,
        }

    def to_text(self) -> str:
        lines = [
            "diagnostics report",
            f"  vertices: {self.n_vertices}, quads: {self.n_quads}",
            f"  max compatibility residual: {self.max_compatibility:.3e}",
            f"  max edge tangency residual: {self.max_tangency:.3e}",
            f"  max edge length residual:   {self.max_edge_length:.3e}",
            f"  max unit-normal residual:   {self.max_unit_norm:.3e}",
            f"  gluing gaps (pos, normal):  {self.gluing_pos_max:.3e}, "
            f"{self.gluing_normal_max:.3e}",
            f"  boundary arc-length error:  {self.boundary_arc_err:.3e}",
            f"  obtuse triangles:           {self.obtuse_count}",
            f"  singular-edge margin:       {self.singular_margin:.6f}",
        ]
        for rec in self.change_history:
            changes = ", ".join(f"{c:.3e}" for c in rec["changes"])
            lines.append(
                f"  stage epsilon {rec['epsilon']:g}: {rec['iterations']} iterations "
                f"[{changes}]"
            )
        return "\n".join(lines) + "\n"


def build_report(cx: SurfaceComplex) -> DiagnosticsReport:
    """Recompute all diagnostics from the complex data (nothing cached)."""
    max_compat = 0.0
    max_tan = 0.0
    max_edge = 0.0
    max_unit = 0.0
    margin = math.inf
    n_quads = 0
    for s in cx.sectors:
        for (qi, qj) in s.quads():
            n_quads += 1
            quad = quad_corners(s, qi, qj)
            max_compat = max(max_compat, compatibility_residual(quad))
            res = quad_residuals(quad)
            max_tan = max(max_tan, res.tangency)
            max_edge = max(max_edge, res.edge_length)
            max_unit = max(max_unit, res.unit_norm)
            f0, f1, f2, f12 = quad
            for center, a, b in ((f0, f1, f2), (f12, f1, f2), (f1, f0, f12), (f2, f0, f12)):
                ang = angle_between(a.position - center.position,
                                    b.position - center.position)
                margin = min(margin, math.pi - ang)

    pos_max = 0.0
    nrm_max = 0.0
    for g in cx.gluings:
        sa, sb = cx.sectors[g.sector_a], cx.sectors[g.sector_b]
        for (ia, ja), (ib, jb) in g.pairs():
            pos_max = max(pos_max, float(np.linalg.norm(
                sa.positions[ia, ja] - sb.positions[ib, jb])))
            nrm_max = max(nrm_max, float(np.linalg.norm(
                sa.normals[ia, ja] - sb.normals[ib, jb])))

    mesh = triangulate_complex(cx)
    ids, _, back_refs = global_vertex_ids(cx)
    origin_vid = None
    target = tuple(cx.origin)
    for v, refs in enumerate(back_refs):
        if target in refs:
            origin_vid = v
            break
    arc_err = math.nan
    if origin_vid is not None:
        march = fast_march(mesh, [(origin_vid, 0.0)])
        arc_err = 0.0
        for sid, s in enumerate(cx.sectors):
            for side in ("row", "col"):
                if ids[sid][0, 0] != origin_vid:
                    continue
                arc = 0.0
                count = s.I if side == "row" else s.J
                for t in range(1, count + 1):
                    a = (t - 1, 0) if side == "row" else (0, t - 1)
                    b = (t, 0) if side == "row" else (0, t)
                    arc += float(np.linalg.norm(s.positions[b] - s.positions[a]))
                    arc_err = max(arc_err, abs(float(march.d[ids[sid][b]]) - arc))

    history = [{"epsilon": rec.epsilon, "iterations": rec.iterations,
                "changes": list(rec.changes)} for rec in cx.history]
    return DiagnosticsReport(
        max_compatibility=max_compat,
        max_tangency=max_tan,
        max_edge_length=max_edge,
        max_unit_norm=max_unit,
        gluing_pos_max=pos_max,
        gluing_normal_max=nrm_max,
        boundary_arc_err=arc_err,
        obtuse_count=mesh.obtuse_count,
        singular_margin=margin if margin < math.inf else math.nan,
        change_history=history,
        n_vertices=mesh.n_vertices,
        n_quads=n_quads,
    )


def write_report(report: DiagnosticsReport, text_path, json_path=None) -> None:
    with open(text_path, "w", newline="\n") as fh:
        fh.write(report.to_text())
    if json_path is not None:
        with open(json_path, "w", newline="\n") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
