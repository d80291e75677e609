"""Branch-point surgery: replace a sector corner by a fan of new sectors.

Cutting the square {b <= i, j <= I} out of a converged square sector and
gluing m new sectors into the opened corner turns the node (b, b) into a
branch vertex with m + 3 incident quads (the three surviving target quads
plus one corner quad per new sector). m must be odd: sector parities
alternate around the branch vertex, and an even m leaves no consistent
u/v labeling (equivalently, the quad graph loses 2-colorability).

The fan axes are straight rays from r_bb in the cut-corner tangent plane,
splitting the angle theta_b between the two cut boundary curves into m
equal parts. Sector 1 inherits the remaining row (b+a, b) of the target as
its first boundary curve, sector m inherits the column (b, b+c); interior
sectors run between consecutive straight axes. After insertion the whole
complex is re-converged, re-copying the inherited curves from the target
after each of its sweeps.
"""
from __future__ import annotations

import copy
import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .amsler import (
    CurvatureSpec,
    IterationConfig,
    _apply_inherits,
    ray_boundary_data,
    run_stage,
)
from .mesh import (
    BranchPoint,
    GluingMap,
    InheritLink,
    Parity,
    SectorGrid,
    SurfaceComplex,
    validate_complex,
)
from .vectors import Vec3, angle_between, rotate_about, unit

logger = logging.getLogger(__name__)

SINGULAR_ANGLE_TOL = 1e-6


@dataclass(frozen=True)
class SurgerySpec:
    """Cut parameters: target sector, cut index b, new sector count m.

    ``spacing`` is the grid step along the new straight axes (defaults to
    the target's local edge length at the cut corner) and ``size`` the
    number of intervals along them (defaults to I - b, matching the excised
    square).
    """

    sector: int
    b: int
    m: int
    spacing: float | None = None
    size: int | None = None

    def __post_init__(self) -> None:
        if self.sector < 0:
            raise ValueError("target sector id must be nonnegative")
        if self.b < 1:
            raise ValueError("cut index b must be at least 1")
        if self.m < 3:
            raise ValueError(f"need at least 3 new sectors, got m={self.m}")
        if self.spacing is not None and self.spacing <= 0.0:
            raise ValueError("axis spacing must be positive")
        if self.size is not None and self.size < 1:
            raise ValueError("axis grid size must be at least 1")


def _corner_frame(s: SectorGrid, b: int):
    r_bb = s.positions[b, b]
    e_row = s.positions[b + 1, b] - r_bb
    e_col = s.positions[b, b + 1] - r_bb
    if float(e_row @ e_row) == 0.0 or float(e_col @ e_col) == 0.0:
        raise ValueError(f"zero-length edge at the cut corner ({b},{b})")
    theta = angle_between(e_row, e_col)
    return r_bb, unit(e_row), unit(e_col), theta


def split_angle_axes(s: SectorGrid, b: int, m: int) -> list:
    """m - 1 unit directions splitting the cut-corner angle into m parts.

    The directions lie in the tangent plane at (b, b), rotated from the
    outgoing row edge toward the outgoing column edge about the vertex
    normal. Warns when the corner angle is within 1e-6 of pi (the cut
    touches a singular edge).
    """
    if not (1 <= b < min(s.I, s.J)):
        raise ValueError(f"cut index b={b} outside 1 <= b < {min(s.I, s.J)}")
    r_bb, e_row, e_col, theta = _corner_frame(s, b)
    if theta >= math.pi - SINGULAR_ANGLE_TOL:
        warnings.warn(
            f"cut corner angle {theta:.6f} is within {SINGULAR_ANGLE_TOL:g} of pi",
            RuntimeWarning, stacklevel=2,
        )
    N = s.normals[b, b]
    sign = 1.0 if float(N @ np.cross(e_row, e_col)) >= 0.0 else -1.0
    return [rotate_about(e_row, sign * N, k * theta / m) for k in range(1, m)]


def _axis_boundary_data(target: SectorGrid, b: int, m: int, spacing: float,
                        m_ax: int, parities, curv: CurvatureSpec) -> list:
    """Boundary data for the m-1 straight split axes, from the current corner."""
    axes = split_angle_axes(target, b, m)
    r_bb = target.positions[b, b].copy()
    n_bb = target.normals[b, b].copy()
    d_bb = float(target.geo_dist[b, b])
    data = []
    for l in range(1, m):
        label = "v" if parities[l] is Parity.ODD else "u"
        data.append(ray_boundary_data(
            r_bb, axes[l - 1], n_bb, spacing, m_ax, curv, d0=d_bb, kind=label))
    return data


def _write_axis_boundaries(cx: SurfaceComplex, fan_ids, axis_data) -> None:
    m = len(fan_ids)
    for k in range(1, m + 1):
        grid = cx.sectors[fan_ids[k - 1]]
        if k > 1:
            data = axis_data[k - 2]
            grid.positions[:, 0] = data.positions
            grid.normals[:, 0] = data.normals
            grid.rho[:, 0] = data.rho
            grid.geo_dist[:, 0] = data.D
        if k < m:
            data = axis_data[k - 1]
            grid.positions[0, :] = data.positions
            grid.normals[0, :] = data.normals
            grid.rho[0, :] = data.rho
            grid.geo_dist[0, :] = data.D


def insert_branch_point(cx: SurfaceComplex, spec: SurgerySpec, curv: CurvatureSpec,
                        cfg: IterationConfig | None = None,
                        distance_provider=None,
                        _skip_checks: bool = False) -> SurfaceComplex:
    """Insert a branch point into a converged complex and re-converge.

    Returns a new complex; the input is not modified. Raises ValueError for
    even m (no consistent edge labeling exists), QuadError subclasses or
    NonConvergenceError on numerical failure.
    """
    cfg = cfg or IterationConfig()
    if not _skip_checks and spec.m % 2 == 0:
        raise ValueError(
            f"m={spec.m} is even: sector parities around the branch vertex cannot "
            "be labeled consistently (m must be odd)"
        )
    if spec.sector >= len(cx.sectors):
        raise ValueError(f"no sector {spec.sector} in the complex")

    cx = copy.deepcopy(cx)
    target = cx.sectors[spec.sector]
    if target.I != target.J:
        raise ValueError("surgery requires a square target sector")
    if not target.valid.all():
        raise ValueError("surgery target was already truncated")
    if not np.all(np.isfinite(target.positions)):
        raise ValueError("surgery target must be fully generated")

    b = spec.b
    I = target.I
    if not 1 <= b < I:
        raise ValueError(f"cut index b={b} outside 1 <= b < {I}")
    m = spec.m
    m_u = I - b
    m_ax = spec.size if spec.size is not None else m_u

    axes = split_angle_axes(target, b, m)
    spacing = spec.spacing
    if spacing is None:
        spacing = float(np.linalg.norm(
            target.positions[b + 1, b] - target.positions[b, b]))

    # Straight-axis boundary data, shared by the two sectors flanking each axis.
    parities = [target.parity if k % 2 == 1 else target.parity.flipped()
                for k in range(m + 1)]  # parities[k] for new sector k, 1-based
    axis_data = _axis_boundary_data(target, b, m, spacing, m_ax, parities, curv)

    # Truncate the target. Poison the excised square so stale data cannot leak.
    target.valid[b + 1:, b + 1:] = False
    target.positions[b + 1:, b + 1:] = np.nan
    target.normals[b + 1:, b + 1:] = np.nan
    target.rho[b + 1:, b + 1:] = np.nan
    target.geo_dist[b + 1:, b + 1:] = math.inf

    row_nodes = [(b + a, b) for a in range(m_u + 1)]
    col_nodes = [(b, b + c) for c in range(m_u + 1)]
    row_label = "u" if target.parity is Parity.ODD else "v"
    col_label = "v" if target.parity is Parity.ODD else "u"

    new_ids = []
    for k in range(1, m + 1):
        if k == 1:
            grid = SectorGrid.empty(m_u, m_ax, parities[k], len(cx.sectors))
        elif k == m:
            grid = SectorGrid.empty(m_ax, m_u, parities[k], len(cx.sectors))
        else:
            grid = SectorGrid.empty(m_ax, m_ax, parities[k], len(cx.sectors))
        cx.sectors.append(grid)
        new_ids.append(grid.sector_id)
    _write_axis_boundaries(cx, new_ids, axis_data)

    fan_first, fan_last = new_ids[0], new_ids[-1]
    cx.inherits.append(InheritLink(
        src_sector=spec.sector, src_nodes=row_nodes,
        dst_sector=fan_first, dst_nodes=[(a, 0) for a in range(m_u + 1)],
    ))
    cx.inherits.append(InheritLink(
        src_sector=spec.sector, src_nodes=col_nodes,
        dst_sector=fan_last, dst_nodes=[(0, c) for c in range(m_u + 1)],
    ))
    cx.gluings.append(GluingMap(
        sector_a=spec.sector, sector_b=fan_first,
        nodes_a=row_nodes, nodes_b=[(a, 0) for a in range(m_u + 1)],
        label=row_label,
    ))
    cx.gluings.append(GluingMap(
        sector_a=spec.sector, sector_b=fan_last,
        nodes_a=col_nodes, nodes_b=[(0, c) for c in range(m_u + 1)],
        label=col_label,
    ))
    for k in range(1, m):
        cx.gluings.append(GluingMap(
            sector_a=new_ids[k - 1], sector_b=new_ids[k],
            nodes_a=[(0, t) for t in range(m_ax + 1)],
            nodes_b=[(t, 0) for t in range(m_ax + 1)],
            ray_direction=axes[k - 1],
            label="v" if parities[k] is Parity.ODD else "u",
        ))

    cx.branch_points.append(BranchPoint(
        sector=spec.sector, i=b, j=b,
        incident_sectors=m + 1, expected_quads=m + 3,
    ))

    for sid in new_ids:
        _apply_inherits(cx, sid)

    # The fans' straight axes are anchored at the corner vertex, which keeps
    # moving while the enlarged complex re-converges. Recompute them from the
    # target's current state right after each of its sweeps.
    target_id = spec.sector
    fan_ids = tuple(new_ids)
    hook_parities = tuple(parities)

    def refresh_axes(cx2: SurfaceComplex) -> None:
        data = _axis_boundary_data(cx2.sectors[target_id], b, m, spacing,
                                   m_ax, hook_parities, curv)
        _write_axis_boundaries(cx2, fan_ids, data)

    cx.post_sweep_hooks.setdefault(target_id, []).append(refresh_axes)

    cx.boundary_refresh = None
    rec = run_stage(cx, curv, cfg, distance_provider, seed_sectors=new_ids)
    cx.history.append(rec)

    if not _skip_checks:
        report = validate_complex(cx)
        if not report.passed:
            raise RuntimeError(f"surgery produced an invalid complex:\n{report}")
    logger.info("inserted branch point at sector %d (%d,%d) with m=%d",
                spec.sector, b, b, m)
    return cx
