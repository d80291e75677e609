"""Geodesic distance on triangulated complexes via fast marching.

Quads are split into two triangles each, choosing the diagonal that
minimizes the maximum triangle angle (ties go to the grid diagonal
(i, j) -> (i+1, j+1), which runs along u + v for either parity). The
marching update unfolds, for a vertex i of a triangle (i, j, k) with both
j and k already accepted, the source point and the target into the plane
of the edge (j, k) on opposite sides, takes the straight-line distance in
that configuration, and clamps it by the two edge paths:

    D_i = min( |(x_i, y_i+) - (x_o, y_o-)| , D_j + D_ij , D_k + D_ik ).

A negative discriminant (the accepted pair cannot be unfolded) falls back
to the edge terms. Triangles with a single accepted vertex contribute edge
terms only, which also seeds the march around the sources.
"""
from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .mesh import SurfaceComplex, global_vertex_ids

logger = logging.getLogger(__name__)

OBTUSE_TOL = 1e-9

FAR, CONSIDERED, ACCEPTED = 0, 1, 2


@dataclass
class TriMesh:
    """Triangle mesh with per-vertex incidence and provenance.

    ``tri_lengths[t, a]`` is the length of the edge of triangle t opposite
    its local vertex a. ``back_refs[v]`` lists the (sector, i, j) grid nodes
    deduplicated into vertex v.
    """

    vertices: np.ndarray
    tris: np.ndarray
    tri_lengths: np.ndarray
    vert_tris: list
    back_refs: list
    obtuse_tris: list = field(default_factory=list)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def obtuse_count(self) -> int:
        return len(self.obtuse_tris)

    def edges(self):
        """Deduplicated (a, b, length) triangle edges with a < b."""
        seen = {}
        for t in range(self.tris.shape[0]):
            va, vb, vc = (int(x) for x in self.tris[t])
            for (a, b, opp) in ((vb, vc, 0), (va, vc, 1), (va, vb, 2)):
                key = (min(a, b), max(a, b))
                seen.setdefault(key, float(self.tri_lengths[t, opp]))
        return [(a, b, l) for (a, b), l in seen.items()]


def _tri_angles(pa, pb, pc) -> tuple:
    """Angles at corners a, b, c of a triangle given by positions."""
    ab = np.linalg.norm(pb - pa)
    ac = np.linalg.norm(pc - pa)
    bc = np.linalg.norm(pc - pb)
    if min(ab, ac, bc) == 0.0:
        raise ValueError("degenerate triangle with a zero-length edge")

    def ang(opposite, s1, s2):
        c = (s1 * s1 + s2 * s2 - opposite * opposite) / (2.0 * s1 * s2)
        return math.acos(min(1.0, max(-1.0, c)))

    return ang(bc, ab, ac), ang(ac, ab, bc), ang(ab, ac, bc)


def split_quad(p00, p10, p01, p11):
    """Choose the diagonal for one quad.

    Returns (tris, max_angle) where tris are two corner-index triples into
    (00, 10, 01, 11) order. The grid diagonal 00-11 wins ties.
    """
    opt_a = ((0, 1, 3), (0, 3, 2))
    opt_b = ((0, 1, 2), (1, 3, 2))
    pts = (p00, p10, p01, p11)
    angles = []
    for opt in (opt_a, opt_b):
        worst = 0.0
        for tri in opt:
            worst = max(worst, max(_tri_angles(*(pts[c] for c in tri))))
        angles.append(worst)
    if angles[1] < angles[0]:
        return opt_b, angles[1]
    return opt_a, angles[0]


def triangulate_complex(cx: SurfaceComplex) -> TriMesh:
    """Deduplicate glued nodes and split every quad into two triangles."""
    ids, n_verts, back_refs = global_vertex_ids(cx)
    vertices = np.zeros((n_verts, 3))
    for v, refs in enumerate(back_refs):
        sid, i, j = refs[0]
        vertices[v] = cx.sectors[sid].positions[i, j]

    quads = []
    for sid, s in enumerate(cx.sectors):
        for (qi, qj) in s.quads():
            quads.append((
                ids[sid][qi, qj], ids[sid][qi + 1, qj],
                ids[sid][qi, qj + 1], ids[sid][qi + 1, qj + 1],
            ))
    return trimesh_from_quads(vertices, quads, back_refs=back_refs)


def trimesh_from_quads(vertices: np.ndarray, quads, back_refs=None) -> TriMesh:
    """Split quads (corner order 00, 10, 01, 11) into a marchable TriMesh."""
    n_verts = vertices.shape[0]
    tris = []
    obtuse = []
    for corners in quads:
        pts = tuple(vertices[c] for c in corners)
        opt, worst = split_quad(*pts)
        for tri in opt:
            tris.append(tuple(corners[c] for c in tri))
        if worst > math.pi / 2.0 + OBTUSE_TOL:
            obtuse.extend([len(tris) - 2, len(tris) - 1])

    tris_arr = np.array(tris, dtype=int)
    n_tris = tris_arr.shape[0]
    tri_lengths = np.zeros((n_tris, 3))
    for t in range(n_tris):
        pa, pb, pc = (vertices[v] for v in tris_arr[t])
        tri_lengths[t] = (
            np.linalg.norm(pc - pb),
            np.linalg.norm(pc - pa),
            np.linalg.norm(pb - pa),
        )
    vert_tris = [[] for _ in range(n_verts)]
    for t in range(n_tris):
        for v in tris_arr[t]:
            vert_tris[int(v)].append(t)

    if obtuse:
        logger.warning("triangulation has %d obtuse triangles", len(obtuse))
    return TriMesh(
        vertices=vertices,
        tris=tris_arr,
        tri_lengths=tri_lengths,
        vert_tris=vert_tris,
        back_refs=back_refs if back_refs is not None else [[] for _ in range(n_verts)],
        obtuse_tris=obtuse,
    )


def _unfold(Dj: float, Dk: float, Dij: float, Dik: float, Djk: float):
    """Candidate distance and a flag marking the edge-term fallback.

    The two unfolded points are placed on opposite sides of the jk-axis
    (source below, target above), which is the configuration giving the
    largest straight-line suggestion; the result is clamped by the edge
    paths through j and k.
    """
    edge_bound = min(Dj + Dij, Dk + Dik)
    # Heron-style factored discriminants for the two circle intersections.
    disc_o = (Djk - (Dj - Dk)) * (Djk + (Dj - Dk)) * ((Dj + Dk) - Djk) * ((Dj + Dk) + Djk)
    disc_i = (Djk - (Dij - Dik)) * (Djk + (Dij - Dik)) * ((Dij + Dik) - Djk) * ((Dij + Dik) + Djk)
    scale = (Dj + Dk + Dij + Dik + Djk) ** 4
    if disc_o < 0.0:
        if disc_o < -1e-12 * scale:
            return edge_bound, True
        disc_o = 0.0
    if disc_i < 0.0:
        if disc_i < -1e-12 * scale:
            return edge_bound, True
        disc_i = 0.0
    inv = 1.0 / (2.0 * Djk)
    x_o = (Dk * Dk - Dj * Dj + Djk * Djk) * inv
    y_o = -math.sqrt(disc_o) * inv
    x_i = (Dik * Dik - Dij * Dij + Djk * Djk) * inv
    y_i = math.sqrt(disc_i) * inv
    through = math.hypot(x_i - x_o, y_i - y_o)
    return min(through, edge_bound), False


def unfold_candidate(Dj: float, Dk: float, Dij: float, Dik: float, Djk: float) -> float:
    """Distance suggestion for a vertex from one triangle.

    Dj, Dk are accepted values at the far corners, Dij, Dik, Djk the
    triangle edge lengths (j-k is the far edge).
    """
    if Djk <= 0.0 or Dij <= 0.0 or Dik <= 0.0:
        raise ValueError("triangle edges must have positive length")
    return _unfold(Dj, Dk, Dij, Dik, Djk)[0]


@dataclass
class MarchState:
    """Mutable fast-marching state: labels, values and the considered queue."""

    d: np.ndarray
    labels: np.ndarray
    heap: list = field(default_factory=list)


@dataclass
class MarchResult:
    d: np.ndarray
    order: list
    pops: int = 0
    pushes: int = 0
    fallbacks: int = 0
    unreachable: list = field(default_factory=list)


def _update_records(m: TriMesh):
    """Per-vertex list of (j, k, Dij, Dik, Djk) update stencils."""
    records = [[] for _ in range(m.n_vertices)]
    for t in range(m.tris.shape[0]):
        vs = [int(v) for v in m.tris[t]]
        ls = m.tri_lengths[t]
        for a in range(3):
            i = vs[a]
            j, k = (vs[(a + 1) % 3], vs[(a + 2) % 3])
            Dij = float(ls[(a + 2) % 3])
            Dik = float(ls[(a + 1) % 3])
            Djk = float(ls[a])
            records[i].append((j, k, Dij, Dik, Djk))
    return records


def fast_march(m: TriMesh, sources) -> MarchResult:
    """Geodesic distance from weighted sources.

    ``sources`` is an iterable of (vertex, D0) pairs; source values are
    fixed. Returns per-vertex distances along with the acceptance order and
    queue operation counters. Vertices in components without a source keep
    D = inf and are listed as unreachable.
    """
    n = m.n_vertices
    state = MarchState(d=np.full(n, math.inf), labels=np.full(n, FAR, dtype=np.int8))
    records = _update_records(m)
    result = MarchResult(d=state.d, order=[])

    fixed = set()
    for v, d0 in sources:
        v = int(v)
        if d0 < 0.0:
            raise ValueError("source distances must be nonnegative")
        if state.d[v] > d0:
            state.d[v] = d0
        fixed.add(v)
    for v in sorted(fixed):
        state.labels[v] = CONSIDERED
        heapq.heappush(state.heap, (float(state.d[v]), v))
        result.pushes += 1

    neighbors = [set() for _ in range(n)]
    for t in range(m.tris.shape[0]):
        a, b, c = (int(v) for v in m.tris[t])
        neighbors[a].update((b, c))
        neighbors[b].update((a, c))
        neighbors[c].update((a, b))
    neighbors = [sorted(nb) for nb in neighbors]

    labels = state.labels
    d = state.d
    while state.heap:
        dv, v = heapq.heappop(state.heap)
        result.pops += 1
        if labels[v] == ACCEPTED or dv != d[v]:
            continue
        labels[v] = ACCEPTED
        result.order.append(v)
        for nb in neighbors[v]:
            if labels[nb] == ACCEPTED or nb in fixed:
                continue
            best = math.inf
            for (j, k, Dij, Dik, Djk) in records[nb]:
                lj = labels[j] == ACCEPTED
                lk = labels[k] == ACCEPTED
                if lj and lk:
                    cand, fell_back = _unfold(d[j], d[k], Dij, Dik, Djk)
                    if fell_back:
                        result.fallbacks += 1
                elif lj:
                    cand = d[j] + Dij
                elif lk:
                    cand = d[k] + Dik
                else:
                    continue
                if cand < best:
                    best = cand
            if best < d[nb]:
                d[nb] = best
                labels[nb] = CONSIDERED
                heapq.heappush(state.heap, (best, nb))
                result.pushes += 1

    result.unreachable = [v for v in range(n) if labels[v] != ACCEPTED]
    return result


def dijkstra_bound(m: TriMesh, sources) -> np.ndarray:
    """Edge-graph Dijkstra distances, an upper bound for fast_march."""
    n = m.n_vertices
    adj = [[] for _ in range(n)]
    for a, b, length in m.edges():
        adj[a].append((b, length))
        adj[b].append((a, length))

    dist = np.full(n, math.inf)
    heap = []
    for v, d0 in sources:
        v = int(v)
        if dist[v] > d0:
            dist[v] = d0
            heapq.heappush(heap, (float(d0), v))
    done = np.zeros(n, dtype=bool)
    while heap:
        dv, v = heapq.heappop(heap)
        if done[v]:
            continue
        done[v] = True
        for nb, length in adj[v]:
            nd = dv + length
            if nd < dist[nb]:
                dist[nb] = nd
                heapq.heappush(heap, (nd, nb))
    return dist
