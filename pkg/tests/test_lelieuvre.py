"""Quad closure solver: frozen root oracles, sign conventions, failure modes."""
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ksurf import (
    CurvatureFamily,
    CurvatureSpec,
    DegenerateQuadError,
    QuadSolveInputs,
    SectorSpec,
    UnsolvableQuadError,
    VertexState,
    compatibility_residual,
    init_boundary,
    quad_corner_indices,
    quad_corners,
    quad_residuals,
    quad_update_constant,
    quad_update_variable,
    scale_normal,
    sweep_sector,
)

from conftest import build_patched

Z = np.array([0.0, 0.0, 1.0])


def unit(x, y, z):
    v = np.array([float(x), float(y), float(z)])
    return v / np.linalg.norm(v)


# The closure normal is nu12 = t (nu1 + nu2) - nu0 where t is the root of
# |t w - nu0|^2 = rho12 lying above the parabola vertex <w, nu0>/|w|^2.
# The frozen values below come from a separate bisection root-finder
# (200 halvings on that bracket), not from the closed-form solve under test.
BISECTION_CASES = [
    (
        Z, unit(math.sin(0.2), 0.0, math.cos(0.2)), unit(0.0, math.sin(0.2), math.cos(0.2)),
        1.0, 1.0, 1.0, 1.0,
        0.99979732969236279,
        (0.19862906642067091, 0.19862906642067091, 0.95973589489281119),
    ),
    (
        Z, unit(0.3, 0.1, 0.95), unit(-0.1, 0.25, 0.96),
        1.0, 0.9, 0.8, 0.7,
        0.99346005980682728,
        (0.19326985635160984, 0.31693297002742843, 0.74980014346185686),
    ),
    (
        unit(0.1, -0.2, 0.97), unit(0.4, 0.1, 0.91), unit(-0.2, 0.3, 0.93),
        2.0, 1.5, 1.8, 1.2,
        0.9129111332026334,
        (0.060002711736513115, 0.76443340316569564, 0.78233065049809825),
    ),
]


@pytest.mark.parametrize("N0,N1,N2,rho0,rho1,rho2,rho12,t,nu12", BISECTION_CASES)
def test_closure_matches_bisection_root(N0, N1, N2, rho0, rho1, rho2, rho12, t, nu12):
    nu0 = math.sqrt(rho0) * N0
    nu1 = math.sqrt(rho1) * N1
    nu2 = math.sqrt(rho2) * N2
    q = QuadSolveInputs(
        r0=np.zeros(3), r1=np.cross(nu1, nu0), r2=-np.cross(nu2, nu0),
        N0=N0, N1=N1, N2=N2, rho0=rho0, rho1=rho1, rho2=rho2, rho12=rho12)
    out = quad_update_variable(q)
    assert out.C == pytest.approx(t, rel=1e-12)
    np.testing.assert_allclose(out.N12 * math.sqrt(rho12), np.array(nu12), atol=2e-14)
    assert float(out.N12 @ out.N12) == pytest.approx(1.0, abs=1e-12)


def test_symmetric_tilt_closed_form():
    # Two normals tilted by the same angle a toward x and y: the update has
    # the closed form N12 = (2cs, 2cs, 3c^2 - 1) / (1 + c^2).
    a = 0.2
    c, s = math.cos(a), math.sin(a)
    q = QuadSolveInputs(
        r0=np.zeros(3), r1=np.zeros(3), r2=np.zeros(3),
        N0=Z, N1=unit(s, 0, c), N2=unit(0, s, c))
    out = quad_update_constant(q)
    expected = np.array([2 * c * s, 2 * c * s, 3 * c * c - 1.0]) / (1.0 + c * c)
    np.testing.assert_allclose(out.N12, expected, atol=1e-15)


def test_constant_update_is_householder_reflection():
    N0, N1, N2 = Z, unit(0.2, -0.1, 1.0), unit(-0.15, 0.3, 1.0)
    q = QuadSolveInputs(r0=np.zeros(3), r1=np.zeros(3), r2=np.zeros(3),
                        N0=N0, N1=N1, N2=N2)
    out = quad_update_constant(q)
    w = N1 + N2
    reflected = 2.0 * float(w @ N0) / float(w @ w) * w - N0
    np.testing.assert_allclose(out.N12, reflected, atol=1e-15)
    # the variable-rho solver reduces to the same answer when rho == 1
    out_v = quad_update_variable(q)
    np.testing.assert_allclose(out_v.N12, out.N12, atol=1e-15)
    np.testing.assert_allclose(out_v.r12, out.r12, atol=1e-15)


@given(
    x1=st.floats(-0.35, 0.35), y1=st.floats(-0.35, 0.35),
    x2=st.floats(-0.35, 0.35), y2=st.floats(-0.35, 0.35),
    rho0=st.floats(0.7, 1.4), rho1=st.floats(0.7, 1.4),
    rho2=st.floats(0.7, 1.4), factor=st.floats(0.85, 1.15),
)
@settings(max_examples=60, deadline=None)
def test_route_independence_random(x1, y1, x2, y2, rho0, rho1, rho2, factor):
    """r12 must come out the same along u-then-v and v-then-u."""
    N1, N2 = unit(x1, y1, 1.0), unit(x2, y2, 1.0)
    rho12 = factor * rho0
    nu0 = math.sqrt(rho0) * Z
    nu1 = math.sqrt(rho1) * N1
    nu2 = math.sqrt(rho2) * N2
    q = QuadSolveInputs(
        r0=np.zeros(3), r1=np.cross(nu1, nu0), r2=-np.cross(nu2, nu0),
        N0=Z, N1=N1, N2=N2, rho0=rho0, rho1=rho1, rho2=rho2, rho12=rho12)
    out = quad_update_variable(q)
    nu12 = math.sqrt(rho12) * out.N12
    via_u_then_v = q.r1 - np.cross(nu12, nu1)
    via_v_then_u = q.r2 + np.cross(nu12, nu2)
    np.testing.assert_allclose(via_u_then_v, via_v_then_u, atol=1e-13)
    np.testing.assert_allclose(out.r12, via_v_then_u, atol=1e-13)
    assert abs(float(nu12 @ nu12) - rho12) < 1e-12
    assert float(np.linalg.norm(np.cross(nu12 + nu0, nu1 + nu2))) < 1e-12


def test_solved_quad_has_tiny_residuals():
    N0, N1, N2 = Z, unit(0.25, 0.05, 1.0), unit(-0.1, 0.2, 1.0)
    rho0, rho1, rho2, rho12 = 1.0, 1.1, 0.95, 1.05
    nu0 = math.sqrt(rho0) * N0
    nu1 = math.sqrt(rho1) * N1
    nu2 = math.sqrt(rho2) * N2
    q = QuadSolveInputs(
        r0=np.zeros(3), r1=np.cross(nu1, nu0), r2=-np.cross(nu2, nu0),
        N0=N0, N1=N1, N2=N2, rho0=rho0, rho1=rho1, rho2=rho2, rho12=rho12)
    out = quad_update_variable(q)
    quad = (
        VertexState(q.r0, N0, rho0, 0.0),
        VertexState(q.r1, N1, rho1, 0.0),
        VertexState(q.r2, N2, rho2, 0.0),
        VertexState(out.r12, out.N12, rho12, 0.0),
    )
    assert quad_residuals(quad).max() < 1e-13
    assert compatibility_residual(quad) < 1e-13


def test_perpendicular_branch_solves_and_rejects():
    # w = nu1 + nu2 perpendicular to nu0: the quadratic loses its linear
    # term, so rho12 >= rho0 is required.
    s, c = math.sin(0.3), math.cos(0.3)
    N0 = np.array([1.0, 0.0, 0.0])
    N1, N2 = unit(0.0, s, c), unit(0.0, -s, c)
    q = QuadSolveInputs(r0=np.zeros(3), r1=np.zeros(3), r2=np.zeros(3),
                        N0=N0, N1=N1, N2=N2, rho12=1.2)
    out = quad_update_variable(q)
    assert math.isnan(out.alpha)
    assert abs(float(out.N12 @ out.N12) - 1.0) < 1e-12
    nu12 = math.sqrt(1.2) * out.N12
    assert abs(float(nu12 @ nu12) - 1.2) < 1e-12
    q_bad = QuadSolveInputs(r0=np.zeros(3), r1=np.zeros(3), r2=np.zeros(3),
                            N0=N0, N1=N1, N2=N2, rho12=0.8)
    with pytest.raises(UnsolvableQuadError):
        quad_update_variable(q_bad)


def test_opposite_normals_are_degenerate():
    s, c = math.sin(0.4), math.cos(0.4)
    q = QuadSolveInputs(r0=np.zeros(3), r1=np.zeros(3), r2=np.zeros(3),
                        N0=Z, N1=unit(s, 0, c), N2=unit(-s, 0, -c))
    with pytest.raises(DegenerateQuadError):
        quad_update_variable(q)


def test_large_curvature_drop_is_unsolvable():
    a = math.radians(85.0)
    q = QuadSolveInputs(
        r0=np.zeros(3), r1=np.zeros(3), r2=np.zeros(3),
        N0=Z, N1=unit(math.sin(a), 0, math.cos(a)), N2=unit(0, math.sin(a), math.cos(a)),
        rho12=0.1)
    with pytest.raises(UnsolvableQuadError, match="curvature variation"):
        quad_update_variable(q)


def test_input_validation():
    base = dict(r0=np.zeros(3), r1=np.zeros(3), r2=np.zeros(3),
                N0=Z, N1=unit(0.1, 0, 1), N2=unit(0, 0.1, 1))
    with pytest.raises(ValueError, match="unit length"):
        quad_update_variable(QuadSolveInputs(**{**base, "N0": 1.1 * Z}))
    with pytest.raises(ValueError, match="positive"):
        quad_update_variable(QuadSolveInputs(**base, rho12=-1.0))


def test_scale_normal():
    N = unit(0.3, -0.2, 1.0)
    np.testing.assert_allclose(scale_normal(N, -1.0), N, atol=0)
    np.testing.assert_allclose(scale_normal(N, -4.0), N / math.sqrt(2.0), atol=1e-16)
    for bad in (0.0, 2.5):
        with pytest.raises(ValueError):
            scale_normal(N, bad)


def test_flat_quad_warns():
    q = QuadSolveInputs(r0=np.zeros(3), r1=np.zeros(3), r2=np.zeros(3),
                        N0=Z, N1=Z.copy(), N2=Z.copy())
    with pytest.warns(RuntimeWarning, match="flat quad"):
        out = quad_update_constant(q)
    np.testing.assert_allclose(out.N12, Z, atol=0)


def test_sweep_fills_interior_and_keeps_boundary():
    spec = SectorSpec(u_max=0.5, v_max=0.5, I=5, J=4)
    g = init_boundary(spec, CurvatureSpec(CurvatureFamily.CONSTANT))
    before_row = g.positions[0, :].copy()
    before_col = g.positions[:, 0].copy()
    out = sweep_sector(g, np.ones_like(g.rho))
    assert np.isfinite(out.positions).all()
    assert np.array_equal(out.positions[0, :], before_row)
    assert np.array_equal(out.positions[:, 0], before_col)
    worst = max(quad_residuals(quad_corners(out, i, j)).max()
                for i in range(out.I) for j in range(out.J))
    assert worst < 1e-12
    # input grid is untouched
    assert np.isnan(g.positions[1:, 1:]).all()


def test_sweep_rejects_bad_inputs():
    spec = SectorSpec(u_max=0.5, v_max=0.5, I=3, J=3)
    g = init_boundary(spec, CurvatureSpec(CurvatureFamily.CONSTANT))
    with pytest.raises(ValueError, match="shape"):
        sweep_sector(g, np.ones((2, 2)))
    from ksurf import Parity, SectorGrid
    empty = SectorGrid.empty(3, 3, Parity.ODD)
    with pytest.raises(ValueError, match="boundary"):
        sweep_sector(empty, np.ones_like(empty.rho))


def test_sweep_annotates_failure_location():
    spec = SectorSpec(u_max=0.25, v_max=0.25, I=2, J=2)
    g = init_boundary(spec, CurvatureSpec(CurvatureFamily.CONSTANT), sector_id=7)
    rho = np.ones_like(g.rho)
    rho[1, 1] = 1e-9
    with pytest.raises(UnsolvableQuadError) as exc:
        sweep_sector(g, rho)
    assert exc.value.location == (7, 0, 0)


@pytest.mark.parametrize("sector_id", [0, 1])
def test_edge_signs_on_converged_sectors(sector_id):
    """u-edges are +nu_next x nu, v-edges -nu_next x nu, in both parities."""
    cx = build_patched("LINEAR", 1.0, 2, 0.5, 6)
    s = cx.sectors[sector_id]
    nu = np.sqrt(s.rho)[..., None] * s.normals
    worst = 0.0
    for i in range(s.I):
        for j in range(s.J):
            f0, f1, f2, f12 = quad_corner_indices(s.parity, i, j)
            for a, b, sign in ((f0, f1, 1.0), (f0, f2, -1.0),
                               (f2, f12, 1.0), (f1, f12, -1.0)):
                e = s.positions[b] - s.positions[a]
                worst = max(worst, float(np.linalg.norm(
                    e - sign * np.cross(nu[b], nu[a]))))
    assert worst < 1e-12
