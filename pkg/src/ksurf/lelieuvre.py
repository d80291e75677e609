"""Discrete Lelieuvre quad updates and sector sweeps.

Every vertex carries a unit normal N and a rescaled curvature value
rho = (-K)^(-1/2) > 0. The scaled normal nu = sqrt(rho) N satisfies the
discrete Lelieuvre relations along grid edges:

    r_u-next - r = + nu_u-next x nu      (edges along the u direction)
    r_v-next - r = - nu_v-next x nu      (edges along the v direction)

Given three corners of a quad and the target rho at the fourth, the closure
condition (nu12 + nu0) x (nu1 + nu2) = 0 together with |nu12|^2 = rho12
determines nu12 = C w - nu0 with w = nu1 + nu2 and

    C = (1 + sqrt(1 + alpha)) <w, nu0> / |w|^2,
    alpha = |w|^2 (rho12 - rho0) / <w, nu0>^2.

The branch with "+" keeps continuity with the constant-curvature update
(a Householder reflection of N0 across span(N1 + N2)), which is the
rho == const specialization of the same formula.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .mesh import Parity, SectorGrid, quad_corner_indices
from .vectors import Vec3

logger = logging.getLogger(__name__)

DEGENERATE_TOL = 1e-12
FLAT_QUAD_TOL = 1e-12


class QuadError(Exception):
    """Base class for per-quad solve failures. Carries an optional location."""

    def __init__(self, message: str, location: tuple | None = None):
        self.location = location
        if location is not None:
            message = f"{message} at sector {location[0]} quad ({location[1]},{location[2]})"
        super().__init__(message)


class DegenerateQuadError(QuadError):
    pass


class UnsolvableQuadError(QuadError):
    pass


def scale_normal(N: Vec3, K: float) -> Vec3:
    """Lelieuvre normal nu = (-K)^(-1/4) N = sqrt(rho) N for K < 0."""
    if not K < 0.0:
        raise ValueError(f"curvature must be negative, got {K!r}")
    return (-K) ** -0.25 * N


@dataclass
class QuadSolveInputs:
    """Known data of a quad: corners f0, f1 (u-neighbor), f2 (v-neighbor).

    rho12 is the prescribed rescaled curvature at the unknown corner f12.
    """

    r0: Vec3
    r1: Vec3
    r2: Vec3
    N0: Vec3
    N1: Vec3
    N2: Vec3
    rho0: float = 1.0
    rho1: float = 1.0
    rho2: float = 1.0
    rho12: float = 1.0

    def validate(self) -> None:
        for name in ("N0", "N1", "N2"):
            N = getattr(self, name)
            if abs(math.sqrt(float(N @ N)) - 1.0) > 1e-12:
                raise ValueError(f"{name} is not unit length")
        for name in ("rho0", "rho1", "rho2", "rho12"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass
class QuadSolveOutputs:
    N12: Vec3
    r12: Vec3
    C: float
    alpha: float


def _closure(nu0: Vec3, nu1: Vec3, nu2: Vec3, rho0: float, rho12: float,
             location: tuple | None = None):
    """Solve for nu12 = C (nu1 + nu2) - nu0 with |nu12|^2 = rho12.

    Returns (nu12, C, alpha). alpha is NaN on the degenerate branch where
    <w, nu0> vanishes and the quadratic collapses to C^2 |w|^2 = rho12 - rho0.
    """
    w = nu1 + nu2
    w2 = float(w @ w)
    scale = math.sqrt(float(nu1 @ nu1)) + math.sqrt(float(nu2 @ nu2))
    if w2 <= (DEGENERATE_TOL * scale) ** 2:
        raise DegenerateQuadError("degenerate quad: nu1 + nu2 vanishes", location)
    d = float(w @ nu0)
    norm0 = math.sqrt(float(nu0 @ nu0))
    if abs(d) > DEGENERATE_TOL * math.sqrt(w2) * norm0:
        alpha = w2 * (rho12 - rho0) / (d * d)
        radicand = 1.0 + alpha
        if radicand < 0.0:
            raise UnsolvableQuadError(
                f"quad unsolvable: curvature variation too large (1 + alpha = {radicand:.3e})",
                location,
            )
        C = (1.0 + math.sqrt(radicand)) * d / w2
    else:
        t = (rho12 - rho0) / w2
        if t < 0.0:
            raise UnsolvableQuadError(
                "quad unsolvable: rho decreases across a quad with <nu1 + nu2, nu0> = 0",
                location,
            )
        C = math.sqrt(t)
        alpha = math.nan
    return C * w - nu0, C, alpha


def quad_update_constant(q: QuadSolveInputs) -> QuadSolveOutputs:
    """Fourth corner of a pseudospherical (K = -1) quad.

    N12 is the Householder reflection of N0 across span(N1 + N2):
    N12 = (2 <N1 + N2, N0> / |N1 + N2|^2) (N1 + N2) - N0, and
    r12 = r2 + N12 x N2. All rho values are treated as 1.
    """
    q.validate()
    if (np.linalg.norm(q.N1 - q.N0) < FLAT_QUAD_TOL
            and np.linalg.norm(q.N2 - q.N0) < FLAT_QUAD_TOL):
        warnings.warn("flat quad: coincident normals give zero edge vectors",
                      RuntimeWarning, stacklevel=2)
    nu12, C, alpha = _closure(q.N0, q.N1, q.N2, 1.0, 1.0)
    r12 = q.r2 + np.cross(nu12, q.N2)
    return QuadSolveOutputs(N12=nu12, r12=r12, C=C, alpha=alpha)


def quad_update_variable(q: QuadSolveInputs) -> QuadSolveOutputs:
    """Fourth corner of a quad with prescribed rho at all corners."""
    q.validate()
    nu0 = math.sqrt(q.rho0) * q.N0
    nu1 = math.sqrt(q.rho1) * q.N1
    nu2 = math.sqrt(q.rho2) * q.N2
    nu12, C, alpha = _closure(nu0, nu1, nu2, q.rho0, q.rho12)
    N12 = nu12 / math.sqrt(q.rho12)
    r12 = q.r2 + np.cross(nu12, nu2)
    return QuadSolveOutputs(N12=N12, r12=r12, C=C, alpha=alpha)


def _scaled_normals(quad) -> list:
    return [math.sqrt(v.rho) * v.normal for v in quad]


def compatibility_residual(quad) -> float:
    """| (nu12 + nu0) x (nu1 + nu2) | for a quad of VertexStates (f0, f1, f2, f12)."""
    nu0, nu1, nu2, nu12 = _scaled_normals(quad)
    return float(np.linalg.norm(np.cross(nu12 + nu0, nu1 + nu2)))


@dataclass
class QuadResiduals:
    tangency: float
    edge_length: float
    unit_norm: float

    def max(self) -> float:
        return max(self.tangency, self.edge_length, self.unit_norm)


def quad_residuals(quad) -> QuadResiduals:
    """Asymptotic-quad residuals from stored data only.

    tangency: max |<edge, N_endpoint>| over the four edges and both endpoints.
    edge_length: max | |edge| - sqrt(rho_a rho_b) |Na x Nb| |.
    unit_norm: max | |N| - 1 | over the corners.
    """
    f0, f1, f2, f12 = quad
    edges = [(f0, f1), (f0, f2), (f1, f12), (f2, f12)]
    tangency = 0.0
    edge_length = 0.0
    for a, b in edges:
        e = b.position - a.position
        tangency = max(tangency, abs(float(e @ a.normal)), abs(float(e @ b.normal)))
        target = math.sqrt(a.rho * b.rho) * float(np.linalg.norm(np.cross(a.normal, b.normal)))
        edge_length = max(edge_length, abs(float(np.linalg.norm(e)) - target))
    unit_norm = max(abs(float(np.linalg.norm(v.normal)) - 1.0) for v in quad)
    return QuadResiduals(tangency=tangency, edge_length=edge_length, unit_norm=unit_norm)


def sweep_sector(s: SectorGrid, rho_field: np.ndarray) -> SectorGrid:
    """Fill the sector interior from its first row and column.

    ``rho_field`` prescribes rho per node for this sweep; all four corner
    rho values of a quad are read from it, so the field must agree with the
    stored boundary rho on the first row/column. Interior nodes are written
    in lexicographic wavefront order; each result depends only on nodes with
    smaller indices, so the order does not affect the output. Boundary nodes
    are left untouched. Quad solve failures are re-raised annotated with the
    sector id and quad indices.
    """
    if rho_field.shape != s.rho.shape:
        raise ValueError("rho_field shape does not match the sector grid")
    boundary = s.boundary_mask()
    if not np.all(np.isfinite(s.positions[boundary])):
        raise ValueError(f"sector {s.sector_id} boundary is not initialized")

    out = s.copy()
    pos = out.positions
    nrm = out.normals
    parity = s.parity
    for i in range(1, s.I + 1):
        for j in range(1, s.J + 1):
            if not s.valid[i, j]:
                continue
            f0, f1, f2, _ = quad_corner_indices(parity, i - 1, j - 1)
            rho0 = float(rho_field[f0])
            rho12 = float(rho_field[i, j])
            nu0 = math.sqrt(rho0) * nrm[f0]
            nu1 = math.sqrt(float(rho_field[f1])) * nrm[f1]
            nu2 = math.sqrt(float(rho_field[f2])) * nrm[f2]
            nu12, _, _ = _closure(nu0, nu1, nu2, rho0, rho12,
                                  location=(s.sector_id, i - 1, j - 1))
            pos[i, j] = pos[f2] + np.cross(nu12, nu2)
            nrm[i, j] = nu12 / math.sqrt(rho12)
            out.rho[i, j] = rho12
    return out
