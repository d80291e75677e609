"""Sector grids, gluing metadata and structural validation.

A surface is a collection of quad-graph sectors. Each sector stores per-node
position, unit normal, rescaled curvature rho = (-K)^(-1/2) and geodesic
distance on regular (I+1) x (J+1) arrays. Sectors are glued along shared
boundary curves; glued nodes are stored in both sectors and checked for
coincidence rather than shared by reference.

Grid conventions
----------------
Index i runs along the sector's first boundary ray, j along the second.
A sector's parity decides which asymptotic coordinate each index carries:
ODD sectors have u = i, v = j; EVEN sectors have u = j, v = i. Quads are
checkered by (i + j) % 2 inside a sector; globally the checkering must be
a consistent 2-coloring of the quad adjacency graph, which fails exactly
when a branch vertex has an odd number of incident quads.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .vectors import Vec3

logger = logging.getLogger(__name__)

UNSET_DISTANCE = math.inf

COINCIDENCE_TOL = 1e-10
UNIT_NORMAL_TOL = 1e-12


class Parity(Enum):
    ODD = "ODD"
    EVEN = "EVEN"

    def flipped(self) -> "Parity":
        return Parity.EVEN if self is Parity.ODD else Parity.ODD


@dataclass(frozen=True)
class VertexState:
    """Immutable view of one grid node."""

    position: Vec3
    normal: Vec3
    rho: float
    geo_dist: float

    def validate(self) -> None:
        if not np.all(np.isfinite(self.position)):
            raise ValueError("vertex position is not finite")
        n = float(self.normal @ self.normal)
        if abs(math.sqrt(n) - 1.0) > UNIT_NORMAL_TOL:
            raise ValueError(f"normal is not unit length: |N| = {math.sqrt(n)!r}")
        if not self.rho > 0.0:
            raise ValueError(f"rho must be positive, got {self.rho!r}")
        if self.geo_dist < 0.0:
            raise ValueError(f"geodesic distance must be nonnegative, got {self.geo_dist!r}")


@dataclass
class SectorGrid:
    """One quad-graph sector with per-node arrays.

    Arrays have shape (I+1, J+1, ...) where I and J count grid intervals.
    ``valid`` marks nodes that exist; branch-point surgery truncates a
    sector by invalidating the excised square.
    """

    positions: np.ndarray
    normals: np.ndarray
    rho: np.ndarray
    geo_dist: np.ndarray
    valid: np.ndarray
    parity: Parity
    sector_id: int = 0
    history: list = field(default_factory=list)

    @classmethod
    def empty(cls, I: int, J: int, parity: Parity, sector_id: int = 0) -> "SectorGrid":
        if I < 1 or J < 1:
            raise ValueError(f"sector needs at least one quad, got I={I}, J={J}")
        shape = (I + 1, J + 1)
        return cls(
            positions=np.full(shape + (3,), np.nan),
            normals=np.full(shape + (3,), np.nan),
            rho=np.full(shape, np.nan),
            geo_dist=np.full(shape, UNSET_DISTANCE),
            valid=np.ones(shape, dtype=bool),
            parity=parity,
            sector_id=sector_id,
        )

    @property
    def I(self) -> int:
        return self.positions.shape[0] - 1

    @property
    def J(self) -> int:
        return self.positions.shape[1] - 1

    def state(self, i: int, j: int) -> VertexState:
        if not (0 <= i <= self.I and 0 <= j <= self.J):
            raise IndexError(f"node ({i},{j}) outside grid {self.I}x{self.J}")
        return VertexState(
            position=self.positions[i, j].copy(),
            normal=self.normals[i, j].copy(),
            rho=float(self.rho[i, j]),
            geo_dist=float(self.geo_dist[i, j]),
        )

    def set_node(self, i: int, j: int, position: Vec3, normal: Vec3,
                 rho: float, geo_dist: float = UNSET_DISTANCE) -> None:
        self.positions[i, j] = position
        self.normals[i, j] = normal
        self.rho[i, j] = rho
        self.geo_dist[i, j] = geo_dist

    def copy(self) -> "SectorGrid":
        return SectorGrid(
            positions=self.positions.copy(),
            normals=self.normals.copy(),
            rho=self.rho.copy(),
            geo_dist=self.geo_dist.copy(),
            valid=self.valid.copy(),
            parity=self.parity,
            sector_id=self.sector_id,
            history=list(self.history),
        )

    def quad_valid(self, i: int, j: int) -> bool:
        """True when the quad with lower corner (i, j) has all four nodes."""
        return bool(self.valid[i:i + 2, j:j + 2].all())

    def quads(self):
        """Yield (i, j) lower corners of all existing quads."""
        for i in range(self.I):
            for j in range(self.J):
                if self.quad_valid(i, j):
                    yield (i, j)

    def boundary_mask(self) -> np.ndarray:
        """Nodes whose data is prescribed rather than swept (first row/column)."""
        m = np.zeros_like(self.valid)
        m[0, :] = True
        m[:, 0] = True
        return m & self.valid


def quad_corner_indices(parity: Parity, i: int, j: int):
    """Grid indices (f0, f1, f2, f12) of the quad with lower corner (i, j).

    f1 is the u-neighbor of f0 and f2 the v-neighbor, so the roles of the
    two adjacent corners swap with sector parity. f12 is always (i+1, j+1).
    """
    f0 = (i, j)
    f12 = (i + 1, j + 1)
    if parity is Parity.ODD:
        f1, f2 = (i + 1, j), (i, j + 1)
    else:
        f1, f2 = (i, j + 1), (i + 1, j)
    return f0, f1, f2, f12


def quad_corners(s: SectorGrid, i: int, j: int):
    """VertexStates (f0, f1, f2, f12) of quad (i, j), parity-aware."""
    if not (0 <= i < s.I and 0 <= j < s.J):
        raise IndexError(f"quad ({i},{j}) outside grid with {s.I}x{s.J} quads")
    return tuple(s.state(*idx) for idx in quad_corner_indices(s.parity, i, j))


@dataclass
class GluingMap:
    """Identification of two boundary node runs in different sectors.

    ``nodes_a[t]`` in sector ``sector_a`` and ``nodes_b[t]`` in ``sector_b``
    are the same surface point. ``ray_direction`` records the shared ray for
    patched complexes; ``eta_sign`` is +1 when sector_b lies on the positive
    transverse side of the ray.
    """

    sector_a: int
    sector_b: int
    nodes_a: list
    nodes_b: list
    ray_direction: Vec3 | None = None
    eta_sign: int = 1
    label: str = ""

    def __post_init__(self) -> None:
        if len(self.nodes_a) != len(self.nodes_b):
            raise ValueError("glued node runs must have equal length")

    def pairs(self):
        return zip(self.nodes_a, self.nodes_b)


@dataclass
class InheritLink:
    """Dynamic boundary inheritance used by branch-point surgery.

    The destination nodes mirror the source nodes (position, normal, rho,
    geodesic distance) and must be re-copied whenever the source sector is
    re-swept during the outer iteration.
    """

    src_sector: int
    src_nodes: list
    dst_sector: int
    dst_nodes: list


@dataclass
class BranchPoint:
    sector: int
    i: int
    j: int
    incident_sectors: int
    expected_quads: int


@dataclass
class SurfaceComplex:
    sectors: list
    gluings: list = field(default_factory=list)
    branch_points: list = field(default_factory=list)
    origin: tuple = (0, 0, 0)
    inherits: list = field(default_factory=list)
    history: list = field(default_factory=list)
    boundary_refresh: object = None
    # sector_id -> callables(cx) run right after that sector is swept, used
    # to keep dependent boundary data anchored to the sector's current state
    post_sweep_hooks: dict = field(default_factory=dict)

    def sector(self, sector_id: int) -> SectorGrid:
        return self.sectors[sector_id]


def global_vertex_ids(cx: SurfaceComplex):
    """Deduplicate glued nodes into global vertex ids.

    Returns (ids, count, back_refs) where ids is a list of (I+1, J+1) int
    arrays per sector (-1 on invalid nodes), count the number of distinct
    vertices and back_refs a list mapping each vertex id to its (sector, i, j)
    occurrences in deterministic order.
    """
    keys = []
    offsets = []
    total = 0
    for s in cx.sectors:
        offsets.append(total)
        total += (s.I + 1) * (s.J + 1)

    parent = list(range(total))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    def flat(sector_id: int, i: int, j: int) -> int:
        s = cx.sectors[sector_id]
        return offsets[sector_id] + i * (s.J + 1) + j

    for g in cx.gluings:
        for (ia, ja), (ib, jb) in g.pairs():
            union(flat(g.sector_a, ia, ja), flat(g.sector_b, ib, jb))

    ids = []
    back_refs = []
    lookup = {}
    for sid, s in enumerate(cx.sectors):
        arr = np.full((s.I + 1, s.J + 1), -1, dtype=int)
        for i in range(s.I + 1):
            for j in range(s.J + 1):
                if not s.valid[i, j]:
                    continue
                root = find(flat(sid, i, j))
                if root not in lookup:
                    lookup[root] = len(back_refs)
                    back_refs.append([])
                vid = lookup[root]
                arr[i, j] = vid
                back_refs[vid].append((sid, i, j))
        ids.append(arr)
    return ids, len(back_refs), back_refs


def incident_quad_count(cx: SurfaceComplex, sector: int, i: int, j: int) -> int:
    """Number of quads (over all sectors) meeting the given node."""
    ids, _, _ = global_vertex_ids(cx)
    target = ids[sector][i, j]
    if target < 0:
        raise ValueError(f"node ({sector},{i},{j}) is not a valid vertex")
    count = 0
    for sid, s in enumerate(cx.sectors):
        for (qi, qj) in s.quads():
            corners = [(qi, qj), (qi + 1, qj), (qi, qj + 1), (qi + 1, qj + 1)]
            if any(ids[sid][a, b] == target for a, b in corners):
                count += 1
    return count


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float | int | None = None
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def __str__(self) -> str:
        lines = []
        for c in self.checks:
            status = "ok" if c.passed else "FAIL"
            extra = f" ({c.detail})" if c.detail else ""
            lines.append(f"{c.name}: {status}{extra}")
        return "\n".join(lines)


def _edge_label(parity: Parity, axis: str) -> str:
    """Asymptotic label of a grid edge running along the given index axis."""
    if parity is Parity.ODD:
        return "u" if axis == "i" else "v"
    return "v" if axis == "i" else "u"


def validate_complex(cx: SurfaceComplex) -> ValidationReport:
    """Structural checks for a surface complex.

    Verifies unit normals, gluing coincidence, consistent u/v edge labels
    across sectors, 2-colorability of the quad adjacency graph, and quad
    incidence counts (4 at interior vertices, recorded counts at branch
    points).
    """
    checks = []

    worst_norm = 0.0
    bad_state = ""
    for s in cx.sectors:
        if s.valid.any():
            norms = np.linalg.norm(s.normals[s.valid], axis=-1)
            finite = np.isfinite(norms)
            if not finite.all():
                bad_state = f"sector {s.sector_id} has unset normals"
            elif norms.size:
                worst_norm = max(worst_norm, float(np.abs(norms - 1.0).max()))
            rhos = s.rho[s.valid]
            if not (np.isnan(rhos) | (rhos > 0)).all():
                bad_state = f"sector {s.sector_id} has nonpositive rho"
    checks.append(CheckResult(
        "vertex_states",
        passed=(not bad_state) and worst_norm < UNIT_NORMAL_TOL,
        value=worst_norm,
        detail=bad_state or f"max | |N| - 1 | = {worst_norm:.3e}",
    ))

    pos_max = 0.0
    nrm_max = 0.0
    for g in cx.gluings:
        sa, sb = cx.sectors[g.sector_a], cx.sectors[g.sector_b]
        for (ia, ja), (ib, jb) in g.pairs():
            dp = np.linalg.norm(sa.positions[ia, ja] - sb.positions[ib, jb])
            dn = np.linalg.norm(sa.normals[ia, ja] - sb.normals[ib, jb])
            pos_max = max(pos_max, float(dp))
            nrm_max = max(nrm_max, float(dn))
    checks.append(CheckResult(
        "gluing_coincidence",
        passed=pos_max < COINCIDENCE_TOL and nrm_max < COINCIDENCE_TOL,
        value=max(pos_max, nrm_max),
        detail=f"max position gap {pos_max:.3e}, normal gap {nrm_max:.3e}",
    ))

    ids, n_verts, back_refs = global_vertex_ids(cx)

    quads = []
    edge_labels = {}
    edge_quads = {}
    label_conflict = ""
    for sid, s in enumerate(cx.sectors):
        for (qi, qj) in s.quads():
            q = len(quads)
            quads.append((sid, qi, qj))
            c00 = ids[sid][qi, qj]
            c10 = ids[sid][qi + 1, qj]
            c01 = ids[sid][qi, qj + 1]
            c11 = ids[sid][qi + 1, qj + 1]
            edges = [
                (c00, c10, "i"), (c01, c11, "i"),
                (c00, c01, "j"), (c10, c11, "j"),
            ]
            for a, b, axis in edges:
                key = (min(a, b), max(a, b))
                lab = _edge_label(s.parity, axis)
                prev = edge_labels.setdefault(key, lab)
                if prev != lab and not label_conflict:
                    label_conflict = (
                        f"edge {key} labeled both {prev} and {lab} "
                        f"(sector {sid} quad ({qi},{qj}))"
                    )
                edge_quads.setdefault(key, []).append(q)
    checks.append(CheckResult(
        "edge_labels",
        passed=not label_conflict,
        detail=label_conflict or f"{len(edge_labels)} edges labeled consistently",
    ))

    color = [-1] * len(quads)
    conflict = ""
    for start in range(len(quads)):
        if color[start] != -1:
            continue
        color[start] = 0
        stack = [start]
        while stack:
            q = stack.pop()
            sid, qi, qj = quads[q]
            s = cx.sectors[sid]
            c00 = ids[sid][qi, qj]
            c10 = ids[sid][qi + 1, qj]
            c01 = ids[sid][qi, qj + 1]
            c11 = ids[sid][qi + 1, qj + 1]
            for a, b in ((c00, c10), (c01, c11), (c00, c01), (c10, c11)):
                key = (min(a, b), max(a, b))
                for nb in edge_quads[key]:
                    if nb == q:
                        continue
                    if color[nb] == -1:
                        color[nb] = 1 - color[q]
                        stack.append(nb)
                    elif color[nb] == color[q] and not conflict:
                        conflict = f"quads {quads[q]} and {quads[nb]} clash"
    checks.append(CheckResult(
        "two_coloring",
        passed=not conflict,
        detail=conflict or "quad graph is 2-colorable",
    ))

    vert_quads = [0] * n_verts
    for sid, s in enumerate(cx.sectors):
        for (qi, qj) in s.quads():
            for a, b in ((qi, qj), (qi + 1, qj), (qi, qj + 1), (qi + 1, qj + 1)):
                vert_quads[ids[sid][a, b]] += 1
    boundary_vert = [False] * n_verts
    for key, qs in edge_quads.items():
        if len(qs) == 1:
            boundary_vert[key[0]] = True
            boundary_vert[key[1]] = True
    branch_ids = {}
    for bp in cx.branch_points:
        branch_ids[ids[bp.sector][bp.i, bp.j]] = bp.expected_quads
    incidence_fail = ""
    for v in range(n_verts):
        if v in branch_ids:
            if vert_quads[v] != branch_ids[v]:
                incidence_fail = (
                    f"branch vertex {back_refs[v][0]} has {vert_quads[v]} quads, "
                    f"expected {branch_ids[v]}"
                )
                break
        elif not boundary_vert[v] and vert_quads[v] != 4:
            incidence_fail = (
                f"interior vertex {back_refs[v][0]} has {vert_quads[v]} quads"
            )
            break
    checks.append(CheckResult(
        "quad_incidence",
        passed=not incidence_fail,
        detail=incidence_fail or "interior vertices regular, branch counts match",
    ))

    report = ValidationReport(checks)
    if not report.passed:
        logger.warning("complex validation failed:\n%s", report)
    return report
