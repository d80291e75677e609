"""Surface generation with prescribed curvature as a function of distance.

The curvature law K(p) = K_eps(D(p)) couples the surface to the geodesic
distance D from its center, so generation iterates: sweep the sectors for
fixed per-node rho, fast-march D on the result, re-evaluate rho, repeat
until the maximum vertex displacement between sweeps drops below the
tolerance. The seed surface is always the constant-curvature (K = -1)
sweep of the same boundary data. Large epsilon targets are reached by
continuation: each stage re-initializes the boundary normals for its
epsilon and reuses the previous stage's surface as the starting iterate.

Boundary data along a straight ray with direction s and spacing h:
positions march evenly, D is exact arc length, and normals follow

    N_{l+1} = Rot(delta_l; a) N_l,  delta_l = arcsin(h / sqrt(rho_l rho_{l+1})),

with rotation axis a = -s for u-rays and a = +s for v-rays, which makes the
signed Lelieuvre edge relations hold exactly along the boundary.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .geodesic import MarchResult, TriMesh, fast_march, triangulate_complex
from .lelieuvre import sweep_sector
from .mesh import (
    BranchPoint,
    GluingMap,
    Parity,
    SectorGrid,
    SurfaceComplex,
)
from .vectors import Vec3, rotate_about, unit, vec

logger = logging.getLogger(__name__)

Z_AXIS = vec(0.0, 0.0, 1.0)


class GridTooCoarseError(Exception):
    """Grid spacing exceeds what the prescribed curvature admits."""


class NonConvergenceError(Exception):
    def __init__(self, message: str, epsilon: float, changes: list):
        super().__init__(message)
        self.epsilon = epsilon
        self.changes = changes


class CurvatureFamily(Enum):
    CONSTANT = "CONSTANT"
    LINEAR = "LINEAR"
    RING = "RING"


@dataclass(frozen=True)
class CurvatureSpec:
    """Negative curvature as a function of geodesic distance.

    CONSTANT: K = -1 everywhere (epsilon is ignored).
    LINEAR:   K = -(1 + eps * D).
    RING:     K = -1 for D <= ring_radius, else
              K = -(1 + eps * (ring_gain * (D - ring_radius))^2).
    """

    family: CurvatureFamily
    epsilon: float = 0.0
    ring_radius: float = 0.5
    ring_gain: float = 20.0

    def __post_init__(self) -> None:
        if self.epsilon < 0.0:
            raise ValueError(f"epsilon must be nonnegative, got {self.epsilon!r}")
        if self.ring_radius <= 0.0 or self.ring_gain <= 0.0:
            raise ValueError("ring parameters must be positive")

    def with_epsilon(self, eps: float) -> "CurvatureSpec":
        return replace(self, epsilon=eps)


def eval_curvature(spec: CurvatureSpec, D):
    """K at distance D; accepts scalars or arrays."""
    D = np.asarray(D, dtype=float)
    if spec.family is CurvatureFamily.CONSTANT:
        K = np.full_like(D, -1.0)
    elif spec.family is CurvatureFamily.LINEAR:
        K = -(1.0 + spec.epsilon * D)
    else:
        bump = spec.ring_gain * (D - spec.ring_radius)
        K = np.where(D <= spec.ring_radius, -1.0, -(1.0 + spec.epsilon * bump * bump))
    return float(K) if K.ndim == 0 else K


def eval_rho(spec: CurvatureSpec, D):
    """rho = (-K)^(-1/2) at distance D."""
    K = eval_curvature(spec, D)
    return np.asarray(-K, dtype=float) ** -0.5 if np.ndim(K) else float((-K) ** -0.5)


def auto_schedule(target: float) -> list:
    """Geometric continuation schedule with ratio <= 2 ending at target."""
    if target <= 1.0:
        return [target]
    halvings = max(0, math.floor(math.log2(target)))
    return [target / 2.0 ** e for e in range(halvings, -1, -1)]


@dataclass(frozen=True)
class SectorSpec:
    """Geometry of one principal sector: two rays in the z = 0 plane."""

    phi1: float = math.pi / 2.0
    u_max: float = 1.0
    v_max: float = 1.0
    I: int = 20
    J: int = 20

    def __post_init__(self) -> None:
        if not 0.0 < self.phi1 < math.pi:
            raise ValueError(f"phi1 must lie in (0, pi), got {self.phi1!r}")
        if self.u_max <= 0.0 or self.v_max <= 0.0:
            raise ValueError("ray extents must be positive")
        if self.I < 1 or self.J < 1:
            raise ValueError("grid sizes must be at least 1")

    def directions(self) -> tuple:
        s_a = vec(1.0, 0.0, 0.0)
        s_b = vec(math.cos(self.phi1), math.sin(self.phi1), 0.0)
        return s_a, s_b


@dataclass(frozen=True)
class IterationConfig:
    tol: float = 1e-4
    max_iters: int = 100
    epsilon_schedule: tuple | None = None

    def __post_init__(self) -> None:
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.epsilon_schedule is not None:
            sched = tuple(self.epsilon_schedule)
            if not sched:
                raise ValueError("epsilon schedule must be nonempty")
            if any(b < a for a, b in zip(sched, sched[1:])):
                raise ValueError("epsilon schedule must be nondecreasing")
            object.__setattr__(self, "epsilon_schedule", sched)


@dataclass
class StageRecord:
    epsilon: float
    iterations: int
    changes: list


@dataclass
class RayData:
    positions: np.ndarray
    normals: np.ndarray
    rho: np.ndarray
    D: np.ndarray


def ray_boundary_data(start: Vec3, direction: Vec3, normal0: Vec3, spacing: float,
                      count: int, curv: CurvatureSpec, d0: float = 0.0,
                      kind: str = "u") -> RayData:
    """Boundary data along a straight ray of ``count`` intervals.

    ``kind`` selects the asymptotic label of the ray, which fixes the
    rotation axis sign (-direction for u, +direction for v). The start
    normal must be perpendicular to the ray.
    """
    if kind not in ("u", "v"):
        raise ValueError(f"ray kind must be 'u' or 'v', got {kind!r}")
    if spacing <= 0.0:
        raise ValueError("ray spacing must be positive")
    direction = unit(direction)
    if abs(float(direction @ normal0)) > 1e-8:
        raise ValueError("start normal must be perpendicular to the ray direction")

    D = d0 + spacing * np.arange(count + 1)
    rho = eval_rho(curv, D)
    args = spacing / np.sqrt(rho[:-1] * rho[1:])
    if np.any(args > 1.0):
        worst = float(args.max())
        raise GridTooCoarseError(
            f"grid too coarse for prescribed curvature: spacing {spacing:g} needs "
            f"arcsin({worst:g})"
        )
    deltas = np.arcsin(args)

    positions = start[None, :] + spacing * np.arange(count + 1)[:, None] * direction[None, :]
    axis = -direction if kind == "u" else direction
    normals = np.zeros((count + 1, 3))
    normals[0] = normal0
    for l in range(count):
        normals[l + 1] = rotate_about(normals[l], axis, float(deltas[l]))
    return RayData(positions=positions, normals=normals, rho=np.asarray(rho), D=np.asarray(D))


def init_boundary(spec: SectorSpec, curv: CurvatureSpec, sector_id: int = 0) -> SectorGrid:
    """Fresh ODD-parity sector with its two boundary rays initialized.

    Row (i, 0) runs along the u-ray s_a, column (0, j) along the v-ray s_b,
    both starting at the origin with normal (0, 0, 1). Boundary D is exact
    arc length. Interior nodes are left unset.
    """
    s_a, s_b = spec.directions()
    grid = SectorGrid.empty(spec.I, spec.J, Parity.ODD, sector_id)
    _write_ray(grid, "row", ray_boundary_data(
        vec(0, 0, 0), s_a, Z_AXIS, spec.u_max / spec.I, spec.I, curv, 0.0, "u"))
    _write_ray(grid, "col", ray_boundary_data(
        vec(0, 0, 0), s_b, Z_AXIS, spec.v_max / spec.J, spec.J, curv, 0.0, "v"))
    return grid


def _write_ray(grid: SectorGrid, side: str, data: RayData) -> None:
    n = data.positions.shape[0]
    if side == "row":
        if n != grid.I + 1:
            raise ValueError("ray length does not match the grid row")
        grid.positions[:, 0] = data.positions
        grid.normals[:, 0] = data.normals
        grid.rho[:, 0] = data.rho
        grid.geo_dist[:, 0] = data.D
    else:
        if n != grid.J + 1:
            raise ValueError("ray length does not match the grid column")
        grid.positions[0, :] = data.positions
        grid.normals[0, :] = data.normals
        grid.rho[0, :] = data.rho
        grid.geo_dist[0, :] = data.D


@dataclass
class ProviderResult:
    per_sector: list
    march: MarchResult | None = None
    mesh: TriMesh | None = None


def origin_vertex(cx: SurfaceComplex, mesh: TriMesh) -> int:
    target = tuple(cx.origin)
    for v, refs in enumerate(mesh.back_refs):
        if target in refs:
            return v
    raise ValueError(f"origin node {cx.origin} not found in the triangulation")


def geodesic_provider(cx: SurfaceComplex) -> ProviderResult:
    """Fast-march D from the complex origin on the current geometry."""
    mesh = triangulate_complex(cx)
    src = origin_vertex(cx, mesh)
    march = fast_march(mesh, [(src, 0.0)])
    per_sector = [np.full((s.I + 1, s.J + 1), math.inf) for s in cx.sectors]
    for v, refs in enumerate(mesh.back_refs):
        for (sid, i, j) in refs:
            per_sector[sid][i, j] = march.d[v]
    return ProviderResult(per_sector=per_sector, march=march, mesh=mesh)


def _apply_inherits(cx: SurfaceComplex, dst: int) -> None:
    for link in cx.inherits:
        if link.dst_sector != dst:
            continue
        src = cx.sectors[link.src_sector]
        grid = cx.sectors[dst]
        for (si, sj), (di, dj) in zip(link.src_nodes, link.dst_nodes):
            grid.positions[di, dj] = src.positions[si, sj]
            grid.normals[di, dj] = src.normals[si, sj]
            grid.rho[di, dj] = src.rho[si, sj]
            grid.geo_dist[di, dj] = src.geo_dist[si, sj]


def run_stage(cx: SurfaceComplex, curv: CurvatureSpec, cfg: IterationConfig,
              provider=None, seed_sectors=None) -> StageRecord:
    """One outer iteration stage at fixed epsilon.

    Optionally seeds the listed sectors with a constant-curvature sweep,
    then alternates fast-marched distance fields with re-sweeps until the
    maximum vertex displacement drops below cfg.tol.
    """
    provider = provider or geodesic_provider
    if seed_sectors:
        for sid in seed_sectors:
            _apply_inherits(cx, sid)
            s = cx.sectors[sid]
            cx.sectors[sid] = sweep_sector(s, np.ones_like(s.rho))

    changes = []
    for iteration in range(1, cfg.max_iters + 1):
        prov = provider(cx)
        for sid, s in enumerate(cx.sectors):
            interior = s.valid & ~s.boundary_mask()
            s.geo_dist[interior] = prov.per_sector[sid][interior]

        change = 0.0
        for sid in range(len(cx.sectors)):
            _apply_inherits(cx, sid)
            s = cx.sectors[sid]
            rho_field = np.full_like(s.rho, np.nan)
            rho_field[s.valid] = eval_rho(curv, s.geo_dist[s.valid])
            boundary = s.boundary_mask()
            rho_field[boundary] = s.rho[boundary]
            swept = sweep_sector(s, rho_field)
            interior = s.valid & ~boundary
            if interior.any():
                disp = np.linalg.norm(swept.positions[interior] - s.positions[interior], axis=-1)
                change = max(change, float(disp.max()))
            cx.sectors[sid] = swept
            for hook in cx.post_sweep_hooks.get(sid, ()):
                hook(cx)
        changes.append(change)
        logger.info("epsilon %g iteration %d: change %.3e", curv.epsilon, iteration, change)
        if change < cfg.tol:
            return StageRecord(epsilon=curv.epsilon, iterations=iteration, changes=changes)
    raise NonConvergenceError(
        f"no convergence after {cfg.max_iters} iterations at epsilon {curv.epsilon:g} "
        f"(last change {changes[-1]:.3e})",
        epsilon=curv.epsilon,
        changes=changes,
    )


def _resolve_schedule(curv: CurvatureSpec, cfg: IterationConfig) -> list:
    if cfg.epsilon_schedule is not None:
        sched = list(cfg.epsilon_schedule)
        if sched[-1] != curv.epsilon:
            raise ValueError(
                f"epsilon schedule must end at the target epsilon {curv.epsilon!r}, "
                f"got {sched[-1]!r}"
            )
        return sched
    return auto_schedule(curv.epsilon)


def continuation_on_complex(cx: SurfaceComplex, curv: CurvatureSpec,
                            cfg: IterationConfig, provider=None) -> SurfaceComplex:
    """Run the epsilon schedule on an initialized complex, warm-starting stages."""
    schedule = _resolve_schedule(curv, cfg)
    for si, eps in enumerate(schedule):
        curv_s = curv.with_epsilon(eps)
        if cx.boundary_refresh is not None:
            cx.boundary_refresh(cx, curv_s)
        seed = list(range(len(cx.sectors))) if si == 0 else None
        rec = run_stage(cx, curv_s, cfg, provider, seed_sectors=seed)
        cx.history.append(rec)
        logger.info("stage epsilon %g converged in %d iterations", eps, rec.iterations)
    return cx


def single_sector_complex(spec: SectorSpec, curv: CurvatureSpec) -> SurfaceComplex:
    cx = SurfaceComplex(sectors=[init_boundary(spec, curv, 0)], origin=(0, 0, 0))

    def refresh(cx2: SurfaceComplex, curv2: CurvatureSpec) -> None:
        fresh = init_boundary(spec, curv2, 0)
        old = cx2.sectors[0]
        old.positions[:, 0] = fresh.positions[:, 0]
        old.normals[:, 0] = fresh.normals[:, 0]
        old.rho[:, 0] = fresh.rho[:, 0]
        old.geo_dist[:, 0] = fresh.geo_dist[:, 0]
        old.positions[0, :] = fresh.positions[0, :]
        old.normals[0, :] = fresh.normals[0, :]
        old.rho[0, :] = fresh.rho[0, :]
        old.geo_dist[0, :] = fresh.geo_dist[0, :]

    cx.boundary_refresh = refresh
    return cx


def generate_sector(spec: SectorSpec, curv: CurvatureSpec,
                    cfg: IterationConfig | None = None,
                    distance_provider=None) -> SectorGrid:
    """Converged single sector at curv.epsilon (no continuation)."""
    cfg = cfg or IterationConfig()
    cx = single_sector_complex(spec, curv)
    rec = run_stage(cx, curv, cfg, distance_provider, seed_sectors=[0])
    cx.history.append(rec)
    grid = cx.sectors[0]
    grid.history = list(cx.history)
    return grid


def continuation(spec: SectorSpec, curv: CurvatureSpec, cfg: IterationConfig,
                 distance_provider=None) -> SectorGrid:
    """Single sector driven through the epsilon schedule."""
    cx = single_sector_complex(spec, curv)
    continuation_on_complex(cx, curv, cfg, distance_provider)
    grid = cx.sectors[0]
    grid.history = list(cx.history)
    return grid


def symmetric_angles(n: int) -> list:
    """2n equal sector angles pi / n."""
    if n < 2:
        raise ValueError("need at least 4 sectors (n >= 2)")
    return [math.pi / n] * (2 * n)


def _validate_angles(angles) -> list:
    angles = [float(a) for a in angles]
    if len(angles) < 4 or len(angles) % 2 != 0:
        raise ValueError(
            f"need an even number of at least 4 sector angles, got {len(angles)}"
        )
    for a in angles:
        if not 0.0 < a < math.pi:
            raise ValueError(f"sector angles must lie in (0, pi), got {a!r}")
    total = sum(angles)
    if abs(total - 2.0 * math.pi) > 1e-12:
        raise ValueError(f"sector angles must sum to 2*pi, got {total!r}")
    return angles


def build_patched_complex(angles, spec: SectorSpec, curv: CurvatureSpec) -> SurfaceComplex:
    """2n sectors sharing boundary rays around a common center.

    Ray k sits at the cumulative angle of the preceding sectors; rays with
    even index (0-based) carry u, odd rays carry v, and sector parities
    alternate starting from ODD. Each ray's boundary data is computed once
    and written into both adjacent sectors, so gluing coincidence is exact.
    """
    angles = _validate_angles(angles)
    m = len(angles)

    sectors = []
    for k in range(m):
        if k % 2 == 0:
            grid = SectorGrid.empty(spec.I, spec.J, Parity.ODD, k)
        else:
            grid = SectorGrid.empty(spec.J, spec.I, Parity.EVEN, k)
        sectors.append(grid)

    cx = SurfaceComplex(sectors=sectors, origin=(0, 0, 0))
    _fill_patched_boundaries(cx, angles, spec, curv)

    for k in range(m):
        prev = (k - 1) % m
        count = (spec.I if k % 2 == 0 else spec.J) + 1
        cx.gluings.append(GluingMap(
            sector_a=prev,
            sector_b=k,
            nodes_a=[(0, t) for t in range(count)],
            nodes_b=[(t, 0) for t in range(count)],
            ray_direction=_ray_direction(angles, k),
            eta_sign=1,
            label="u" if k % 2 == 0 else "v",
        ))

    if m != 4:
        cx.branch_points.append(BranchPoint(
            sector=0, i=0, j=0, incident_sectors=m, expected_quads=m,
        ))

    def refresh(cx2: SurfaceComplex, curv2: CurvatureSpec) -> None:
        _fill_patched_boundaries(cx2, angles, spec, curv2)

    cx.boundary_refresh = refresh
    return cx


def _ray_direction(angles, k: int) -> Vec3:
    phi = sum(angles[:k])
    return vec(math.cos(phi), math.sin(phi), 0.0)


def _fill_patched_boundaries(cx: SurfaceComplex, angles, spec: SectorSpec,
                             curv: CurvatureSpec) -> None:
    m = len(angles)
    rays = []
    for k in range(m):
        if k % 2 == 0:
            data = ray_boundary_data(vec(0, 0, 0), _ray_direction(angles, k), Z_AXIS,
                                     spec.u_max / spec.I, spec.I, curv, 0.0, "u")
        else:
            data = ray_boundary_data(vec(0, 0, 0), _ray_direction(angles, k), Z_AXIS,
                                     spec.v_max / spec.J, spec.J, curv, 0.0, "v")
        rays.append(data)
    for k in range(m):
        _write_ray(cx.sectors[k], "row", rays[k])
        _write_ray(cx.sectors[k], "col", rays[(k + 1) % m])


def patch_sectors(angles, spec: SectorSpec, curv: CurvatureSpec,
                  cfg: IterationConfig | None = None,
                  distance_provider=None) -> SurfaceComplex:
    """Generate a full 2n-sector complex through the epsilon schedule."""
    cfg = cfg or IterationConfig()
    cx = build_patched_complex(angles, spec, curv)
    return continuation_on_complex(cx, curv, cfg, distance_provider)
