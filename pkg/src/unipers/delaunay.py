"""Delaunay triangulations in the plane and in space.

Qhull (through ``scipy.spatial``) supplies an initial triangulation.  In 2D
every interior edge is then certified with the exact, symbolically perturbed
in-circle test and flipped until the triangulation is the unique Delaunay
triangulation of the perturbed point set, so cocircular inputs always get
the same diagonal.  In 3D each interior facet is certified with the exact
in-sphere test; cospherical ties are accepted as they come.
"""
from __future__ import annotations

import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay as _Qhull
from scipy.spatial import QhullError

from . import predicates as P
from .errors import DegeneracyError


@dataclass(frozen=True)
class Triangulation:
    points: np.ndarray
    simplices: np.ndarray        # (m, d+1) vertex indices, each row sorted
    duplicates: np.ndarray       # (k, 2) pairs (dropped index, kept index)

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def _dedupe(points):
    _, first, inverse = np.unique(points, axis=0, return_index=True, return_inverse=True)
    inverse = np.asarray(inverse).ravel()
    keep = np.sort(first)
    rep = first[inverse]
    dup = np.nonzero(rep != np.arange(len(points)))[0]
    return keep, np.column_stack([dup, rep[dup]]).astype(np.int64)


def delaunay(points, *, repair: bool = True) -> Triangulation:
    pts = np.ascontiguousarray(points, dtype=np.float64)
    n, d = pts.shape
    if d not in (2, 3):
        raise DegeneracyError(f"Delaunay is supported in dimension 2 or 3, got {d}")
    keep, dups = _dedupe(pts)
    sub = pts[keep]
    if len(sub) < d + 1 or np.linalg.matrix_rank(sub - sub[0]) < d:
        raise DegeneracyError("all points are affinely dependent; no full-dimensional triangulation")
    try:
        tri = _Qhull(sub, qhull_options="Qbb Qc Qz Q12 Qt")
    except QhullError as exc:
        raise DegeneracyError(f"Qhull failed: {exc}") from None
    simplices = keep[tri.simplices]
    if d == 2:
        simplices = _orient_ccw(pts, simplices)
        missing = np.setdiff1d(keep, simplices.ravel())
        if len(missing):
            simplices = _insert_points(pts, simplices, missing)
        if repair:
            simplices = _lawson_repair(pts, simplices)
    else:
        if len(np.setdiff1d(keep, simplices.ravel())):
            raise DegeneracyError("Qhull dropped input points from the 3D triangulation")
        if repair:
            bad = _verify_3d(pts, simplices)
            if bad:
                warnings.warn(f"{bad} interior facets violate the empty-sphere test", RuntimeWarning)
    simplices = np.sort(simplices, axis=1)
    order = np.lexsort(simplices.T[::-1])
    return Triangulation(pts, simplices[order], dups)


def _orient_ccw(pts, tri):
    tri = tri.copy()
    sign, certain = P.orient2d_batch(pts, tri)
    for i in np.nonzero(~certain)[0]:
        sign[i] = P.orient2d(*pts[tri[i]])
    if np.any(sign == 0):
        # Qhull's "Qt" may emit flat triangles on degenerate input; drop them
        tri = tri[sign != 0]
        sign = sign[sign != 0]
    neg = sign < 0
    tri[neg, 1], tri[neg, 2] = tri[neg, 2].copy(), tri[neg, 1].copy()
    return tri


def _lawson_repair(pts, tri):
    """Flip non-Delaunay edges until every interior edge passes the perturbed
    in-circle test.  ``tri`` rows are counter-clockwise."""
    tri = [list(t) for t in tri]
    edge_map = {}
    for t, (a, b, c) in enumerate(tri):
        for u, v in ((a, b), (b, c), (c, a)):
            edge_map[(u, v)] = t

    # vectorised pre-screen: only uncertain or violating edges enter the queue
    pairs = []
    for (u, v), t in edge_map.items():
        if u < v and (v, u) in edge_map:
            pairs.append((t, edge_map[(v, u)], u, v))
    queue = deque()
    if pairs:
        arr = np.array(pairs, dtype=np.int64)
        tris = np.array(tri, dtype=np.int64)
        opp = np.array([_opposite(tri[t2], v, u) for _, t2, u, v in pairs], dtype=np.int64)
        sign, certain = P.incircle_batch(pts, tris[arr[:, 0]], opp)
        for k in np.nonzero(~certain | (sign > 0))[0]:
            queue.append((int(arr[k, 2]), int(arr[k, 3])))

    flips = 0
    limit = 50 * len(tri) + 1000
    while queue:
        u, v = queue.popleft()
        t1 = edge_map.get((u, v))
        t2 = edge_map.get((v, u))
        if t1 is None or t2 is None:
            continue
        a = _opposite(tri[t1], u, v)
        b = _opposite(tri[t2], v, u)
        # triangle t1 = (u, v, a) ccw; test b against its circumcircle
        if P.incircle_sos(pts, u, v, a, b) <= 0:
            continue
        # flip uv -> ab: new triangles (a, u, b) and (b, v, a) are ccw
        for x, y in ((u, v), (v, a), (a, u)):
            edge_map.pop((x, y), None)
        for x, y in ((v, u), (u, b), (b, v)):
            edge_map.pop((x, y), None)
        tri[t1] = [a, u, b]
        tri[t2] = [b, v, a]
        for t in (t1, t2):
            p, q, r = tri[t]
            for x, y in ((p, q), (q, r), (r, p)):
                edge_map[(x, y)] = t
        for x, y in ((u, b), (b, v), (v, a), (a, u)):
            queue.append((min(x, y), max(x, y)))
        flips += 1
        if flips > limit:
            raise DegeneracyError("edge flipping did not converge")
    return np.array(tri, dtype=np.int64)


def _insert_points(pts, tri, missing):
    """Split the triangle (or the two triangles sharing the edge) that
    contains each missing point; the flip pass restores the Delaunay
    property afterwards."""
    tri = [list(t) for t in tri]
    for q in missing:
        q = int(q)
        for t, (a, b, c) in enumerate(tri):
            s = [P.orient2d(pts[a], pts[b], pts[q]),
                 P.orient2d(pts[b], pts[c], pts[q]),
                 P.orient2d(pts[c], pts[a], pts[q])]
            if min(s) < 0:
                continue
            if 0 not in s:
                tri[t] = [a, b, q]
                tri.extend([[b, c, q], [c, a, q]])
                break
            # q on edge (u, v) of t; split t and its neighbour across uv
            k = s.index(0)
            u, v = ((a, b), (b, c), (c, a))[k]
            w = _opposite(tri[t], u, v)
            tri[t] = [u, q, w]
            tri.append([q, v, w])
            for t2, tt in enumerate(tri):
                if t2 != t and u in tt and v in tt:
                    x = _opposite(tt, v, u)
                    tri[t2] = [v, q, x]
                    tri.append([q, u, x])
                    break
            break
        else:
            raise DegeneracyError(f"point {q} lies outside the triangulation")
    return np.array(tri, dtype=np.int64)


def _opposite(t, u, v):
    for w in t:
        if w != u and w != v:
            return w
    raise DegeneracyError("degenerate triangle in triangulation")


def _verify_3d(pts, tets):
    faces = {}
    for t, tet in enumerate(tets):
        for j in range(4):
            face = tuple(sorted(int(x) for k, x in enumerate(tet) if k != j))
            faces.setdefault(face, []).append((t, int(tet[j])))
    bad = 0
    for face, owners in faces.items():
        if len(owners) != 2:
            continue
        (t1, _), (_, apex) = owners
        a, b, c, d = (pts[i] for i in tets[t1])
        o = P.orient3d(a, b, c, d)
        if o == 0:
            continue
        if P.insphere(a, b, c, d, pts[apex]) * o > 0:
            bad += 1
    return bad


def is_delaunay(tri: Triangulation) -> bool:
    """Brute-force check: no input point lies strictly inside any simplex's
    circumcircle (circumsphere), using exact predicates."""
    pts = tri.points
    n = len(pts)
    for s in tri.simplices:
        if tri.dim == 2:
            a, b, c = (pts[i] for i in s)
            o = P.orient2d(a, b, c)
            sign, certain = P.incircle_batch(pts, np.tile(s, (n, 1)), np.arange(n))
            for q in range(n):
                if q in s:
                    continue
                val = int(sign[q]) if certain[q] else P.incircle(a, b, c, pts[q])
                if val * o > 0:
                    return False
        else:
            a, b, c, d = (pts[i] for i in s)
            o = P.orient3d(a, b, c, d)
            for q in range(n):
                if q in s:
                    continue
                if P.insphere(a, b, c, d, pts[q]) * o > 0:
                    return False
    return True
