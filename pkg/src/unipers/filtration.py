"""Vietoris-Rips and Delaunay-alpha filtrations.

A :class:`Filtration` stores one block per simplex dimension.  Each block is
sorted by ``(value, vertices)`` and the global order is the merge of the
blocks by ``(value, dimension, vertices)``.  Reduction only ever compares
simplices of the same dimension, so it works on per-block ranks; the global
order is materialised only when asked for.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np
from scipy.spatial import ConvexHull, cKDTree
from scipy.spatial import QhullError

from . import _kernels
from . import predicates as P
from .delaunay import delaunay
from .errors import DegeneracyError, InputError, ParameterError, StructuralError

RIPS = "rips"
ALPHA = "alpha"
DEFAULT_RIPS_MAX_DIM = 3


class DistanceMatrix:
    """Dense symmetric matrix of Euclidean distances."""

    def __init__(self, entries):
        d = np.asarray(entries, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise InputError(f"distance matrix must be square, got shape {d.shape}")
        if np.any(np.diag(d) != 0) or np.any(d != d.T) or np.any(d < 0):
            raise InputError("distance matrix must be symmetric, nonnegative, with zero diagonal")
        d.setflags(write=False)
        self.entries = d

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __getitem__(self, idx):
        return self.entries[idx]


def _points_of(cloud):
    return cloud.points if hasattr(cloud, "points") else np.asarray(cloud, dtype=np.float64)


def pairwise_distances(cloud) -> DistanceMatrix:
    pts = _points_of(cloud)
    if len(pts) < 1:
        raise InputError("need at least one point")
    diff = pts[:, None, :] - pts[None, :, :]
    return DistanceMatrix(np.sqrt(np.sum(diff * diff, axis=-1)))


def _edge_lengths(pts, i, j):
    diff = pts[i] - pts[j]
    return np.sqrt(np.sum(diff * diff, axis=-1))


def enclosing_radius(dm) -> float:
    """``min_i max_j d(i, j)``.

    Accepts a :class:`DistanceMatrix` or a point cloud; for clouds the
    farthest point is searched among convex-hull vertices only.
    """
    if isinstance(dm, DistanceMatrix):
        return float(dm.entries.max(axis=1).min())
    pts = _points_of(dm)
    if len(pts) == 1:
        return 0.0
    cand = np.arange(len(pts))
    if pts.shape[1] <= 6 and len(pts) > 64:
        try:
            cand = ConvexHull(pts).vertices
        except QhullError:
            pass
    best = math.inf
    for start in range(0, len(pts), 4096):
        block = pts[start:start + 4096]
        diff = block[:, None, :] - pts[cand][None, :, :]
        far = np.sqrt(np.sum(diff * diff, axis=-1)).max(axis=1)
        best = min(best, float(far.min()))
    return best


@dataclass(frozen=True)
class SimplexBlock:
    vertices: np.ndarray     # (m, p+1) int64, rows ascending
    values: np.ndarray       # (m,) float64

    def __len__(self):
        return len(self.values)


def _sort_block(verts, vals):
    order = np.lexsort(tuple(verts[:, c] for c in range(verts.shape[1] - 1, -1, -1)) + (vals,))
    return SimplexBlock(np.ascontiguousarray(verts[order]), np.ascontiguousarray(vals[order]))


def _comb_keys(verts, n):
    """Combinatorial-number-system key of each sorted row; None on overflow."""
    p1 = verts.shape[1]
    if p1 * math.comb(max(n, p1), p1) >= 2 ** 62:
        return None
    key = np.zeros(len(verts), dtype=np.int64)
    for c in range(p1):
        v = verts[:, c].astype(np.int64)
        term = np.ones(len(v), dtype=np.int64)
        # C(v, t+1) = C(v, t) * (v - t) / (t + 1), exact at every step
        for t in range(c + 1):
            term = term * (v - t) // (t + 1)
        key += term
    return key


@dataclass(frozen=True)
class Filtration:
    blocks: tuple
    complex_type: str
    tau: float
    max_dim: int
    n_points: int
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __len__(self):
        return sum(len(b) for b in self.blocks)

    def block(self, p) -> SimplexBlock:
        if p < len(self.blocks):
            return self.blocks[p]
        return SimplexBlock(np.empty((0, p + 1), dtype=np.int64), np.empty(0))

    def counts(self):
        return [len(b) for b in self.blocks]

    def boundary(self, p) -> np.ndarray:
        """Rank of each facet of every ``p``-simplex within block ``p - 1``."""
        if p in self._cache:
            return self._cache[p]
        blk = self.block(p)
        if p == 0 or len(blk) == 0:
            out = np.empty((len(blk), max(p, 0) + 1 if p else 0), dtype=np.int64)
            if p:
                out = np.empty((0, p + 1), dtype=np.int64)
            self._cache[p] = out
            return out
        lower = self.block(p - 1)
        facets = [np.delete(blk.vertices, c, axis=1) for c in range(p, -1, -1)]
        keys_lower = _comb_keys(lower.vertices, self.n_points)
        out = np.empty((len(blk), p + 1), dtype=np.int64)
        if keys_lower is not None:
            order = np.argsort(keys_lower, kind="stable")
            sorted_keys = keys_lower[order]
            for c, fv in enumerate(facets):
                k = _comb_keys(fv, self.n_points)
                pos = np.searchsorted(sorted_keys, k)
                pos = np.minimum(pos, len(sorted_keys) - 1)
                if np.any(sorted_keys[pos] != k):
                    raise StructuralError(f"a facet of some {p}-simplex is missing from the filtration")
                out[:, c] = order[pos]
        else:
            lookup = {tuple(r): i for i, r in enumerate(lower.vertices.tolist())}
            for c, fv in enumerate(facets):
                try:
                    out[:, c] = [lookup[tuple(r)] for r in fv.tolist()]
                except KeyError:
                    raise StructuralError(f"a facet of some {p}-simplex is missing from the filtration") from None
        self._cache[p] = out
        return out

    def order(self):
        """Global filtration order as arrays ``(dims, local_ranks)``."""
        if "order" not in self._cache:
            if not self.blocks:
                empty = np.empty(0, dtype=np.int64)
                self._cache["order"] = (empty, empty)
                return self._cache["order"]
            dims = np.concatenate([np.full(len(b), p, dtype=np.int64) for p, b in enumerate(self.blocks)])
            ranks = np.concatenate([np.arange(len(b), dtype=np.int64) for b in self.blocks])
            vals = np.concatenate([b.values for b in self.blocks])
            perm = np.lexsort((ranks, dims, vals))
            self._cache["order"] = (dims[perm], ranks[perm])
        return self._cache["order"]

    def __iter__(self) -> Iterator[tuple]:
        dims, ranks = self.order()
        for p, r in zip(dims.tolist(), ranks.tolist()):
            b = self.blocks[p]
            yield tuple(b.vertices[r].tolist()), p, float(b.values[r])

    def simplices(self):
        return list(self)

    def check(self):
        """Raise :class:`StructuralError` unless every face precedes its cofaces
        and no value exceeds ``tau``."""
        for p, blk in enumerate(self.blocks):
            if len(blk) and blk.values.max() > self.tau:
                raise StructuralError(f"a {p}-simplex has value above tau={self.tau}")
            if len(blk) > 1 and np.any(np.diff(blk.values) < 0):
                raise StructuralError(f"block {p} is not sorted by value")
            if p == 0 or len(blk) == 0:
                continue
            bnd = self.boundary(p)
            face_vals = self.blocks[p - 1].values[bnd]
            if np.any(face_vals > blk.values[:, None]):
                raise StructuralError(f"a {p}-simplex enters before one of its faces")

    def dump(self, path=None) -> str:
        """Text dump, one ``value dim v0 ... vk`` line per simplex in order."""
        lines = [" ".join([repr(v), str(p)] + [str(x) for x in verts]) for verts, p, v in self]
        text = "\n".join(lines) + ("\n" if lines else "")
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    def truncate(self, tau: float) -> "Filtration":
        blocks = []
        for blk in self.blocks:
            keep = blk.values <= tau
            blocks.append(SimplexBlock(blk.vertices[keep], blk.values[keep]))
        return Filtration(tuple(blocks), self.complex_type, float(tau), self.max_dim, self.n_points)


def from_simplices(simplices, complex_type="custom", tau=math.inf, n_points=None) -> Filtration:
    """Build a filtration from ``(vertices, value)`` pairs in any order."""
    by_dim = {}
    for verts, val in simplices:
        verts = tuple(sorted(int(v) for v in verts))
        by_dim.setdefault(len(verts) - 1, []).append((verts, float(val)))
    if not by_dim:
        return Filtration((), complex_type, tau, 0, n_points or 0)
    top = max(by_dim)
    blocks = []
    for p in range(top + 1):
        items = by_dim.get(p, [])
        verts = np.array([v for v, _ in items], dtype=np.int64).reshape(-1, p + 1)
        vals = np.array([x for _, x in items], dtype=np.float64)
        blocks.append(_sort_block(verts, vals))
    if n_points is None:
        n_points = int(max(int(b.vertices.max()) for b in blocks if len(b)) + 1)
    f = Filtration(tuple(blocks), complex_type, tau, top, n_points)
    return f


def _upper_csr(n, ei, ej, w):
    order = np.lexsort((ej, ei))
    ei, ej, w = ei[order], ej[order], w[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, ei + 1, 1)
    return np.cumsum(indptr), np.ascontiguousarray(ej, dtype=np.int64), np.ascontiguousarray(w)


def _rips_edges(source, tau):
    if isinstance(source, DistanceMatrix):
        n = source.n
        ii, jj = np.triu_indices(n, 1)
        w = source.entries[ii, jj]
        keep = w <= tau
        return n, ii[keep].astype(np.int64), jj[keep].astype(np.int64), w[keep]
    pts = _points_of(source)
    n = len(pts)
    if n < 2:
        return n, np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0)
    if math.isinf(tau):
        ii, jj = np.triu_indices(n, 1)
    else:
        pairs = cKDTree(pts).query_pairs(tau * (1 + 1e-12) + 1e-300, output_type="ndarray")
        pairs = np.sort(pairs, axis=1)
        ii, jj = pairs[:, 0], pairs[:, 1]
    w = _edge_lengths(pts, ii, jj)
    keep = w <= tau
    return n, ii[keep].astype(np.int64), jj[keep].astype(np.int64), w[keep]


def build_rips(source, tau: Optional[float] = None, max_dim: int = 2) -> Filtration:
    """Vietoris-Rips filtration truncated at ``tau``.

    ``source`` is a :class:`DistanceMatrix` or a point cloud (the latter uses
    a k-d tree and never forms the dense matrix).  Simplex values are
    diameters, i.e. the longest edge.  ``tau=None`` uses the enclosing radius.
    """
    if max_dim < 1:
        raise ParameterError(f"max_dim must be >= 1, got {max_dim}")
    if max_dim > DEFAULT_RIPS_MAX_DIM:
        raise ParameterError(f"Rips is limited to max_dim <= {DEFAULT_RIPS_MAX_DIM}; "
                             "use build_rips_unbounded for higher dimensions")
    return build_rips_unbounded(source, tau, max_dim)


def build_rips_unbounded(source, tau=None, max_dim=2) -> Filtration:
    if tau is None:
        tau = enclosing_radius(source)
    if not tau > 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    n, ei, ej, w = _rips_edges(source, tau)
    blocks = [SimplexBlock(np.arange(n, dtype=np.int64)[:, None], np.zeros(n))]
    blocks.append(_sort_block(np.column_stack([ei, ej]).reshape(-1, 2), w))
    indptr, indices, weights = _upper_csr(n, ei, ej, w)
    cliques, vals = np.column_stack([ei, ej]).reshape(-1, 2), w
    for p in range(2, max_dim + 1):
        cliques, vals = _kernels.extend_cliques(cliques, vals, indptr, indices, weights)
        blocks.append(_sort_block(cliques, vals))
    return Filtration(tuple(blocks), RIPS, float(tau), max_dim, n)


def circumradius(pts) -> float:
    """Radius of the smallest sphere through all of ``pts`` (k+1 affinely
    independent points); its centre lies in their affine hull."""
    pts = np.asarray(pts, dtype=np.float64)
    if len(pts) == 1:
        return 0.0
    if len(pts) == 2:
        diff = pts[1] - pts[0]
        return float(np.sqrt(np.sum(diff * diff))) / 2
    _, r2 = _batch_circum(pts, np.arange(len(pts))[None, :])
    if not np.isfinite(r2[0]):
        raise DegeneracyError("circumsphere of affinely dependent points")
    return float(np.sqrt(r2[0]))


def _batch_circum(pts, simplices):
    """Squared circumradii and centres of many simplices at once."""
    P0 = pts[simplices[:, 0]]
    A = pts[simplices[:, 1:]] - P0[:, None, :]
    G = np.einsum("mik,mjk->mij", A, A)
    rhs = 0.5 * np.einsum("mik,mik->mi", A, A)
    lam = np.linalg.solve(G, rhs[..., None])[..., 0]
    off = np.einsum("mi,mik->mk", lam, A)
    return P0 + off, np.einsum("mk,mk->m", off, off)


def _attached(pts, simplices, centers, r2, apex):
    """Whether ``apex`` lies strictly inside the smallest circumsphere of each
    simplex.  Near-ties are settled with exact arithmetic."""
    diff = pts[apex] - centers
    d2 = np.einsum("mk,mk->m", diff, diff)
    gap = d2 - r2
    scale = d2 + r2
    inside = gap < 0
    unsure = np.abs(gap) <= 1e-10 * scale
    for i in np.nonzero(unsure)[0]:
        inside[i] = _exact_inside(pts, simplices[i], apex[i])
    return inside


def _exact_inside(pts, simplex, q):
    from fractions import Fraction
    V = [[Fraction(float(x)) for x in pts[v]] for v in simplex]
    Q = [Fraction(float(x)) for x in pts[q]]
    k = len(V) - 1
    A = [[V[i + 1][t] - V[0][t] for t in range(len(Q))] for i in range(k)]
    G = [[sum(A[i][t] * A[j][t] for t in range(len(Q))) for j in range(k)] for i in range(k)]
    rhs = [sum(a * a for a in A[i]) / 2 for i in range(k)]
    lam = _solve_exact(G, rhs)
    center = [V[0][t] + sum(lam[i] * A[i][t] for i in range(k)) for t in range(len(Q))]
    r2 = sum((V[0][t] - center[t]) ** 2 for t in range(len(Q)))
    d2 = sum((Q[t] - center[t]) ** 2 for t in range(len(Q)))
    return d2 < r2


def _solve_exact(G, rhs):
    k = len(G)
    M = [row[:] + [rhs[i]] for i, row in enumerate(G)]
    for c in range(k):
        piv = next(r for r in range(c, k) if M[r][c] != 0)
        M[c], M[piv] = M[piv], M[c]
        for r in range(k):
            if r != c and M[r][c] != 0:
                f = M[r][c] / M[c][c]
                M[r] = [x - f * y for x, y in zip(M[r], M[c])]
    return [M[i][k] / M[i][i] for i in range(k)]


def build_alpha(cloud, tau: float = math.inf) -> Filtration:
    """Alpha filtration with radius (not squared radius) values.

    Top simplices get their circumradius.  A lower simplex that has a
    cofacet apex strictly inside its smallest circumsphere takes the minimum
    value over its cofacets; otherwise it keeps its own circumradius.
    Duplicate points are attached to their twin by a zero-length edge.
    """
    pts = _points_of(cloud)
    n, d = pts.shape
    if d not in (2, 3):
        raise DegeneracyError(f"alpha complexes need ambient dimension 2 or 3, got {d}")
    tri = delaunay(pts)
    top = tri.simplices
    blocks_v = {d: top}
    blocks_f = {}
    c, r2 = _batch_circum(pts, top)
    blocks_f[d] = np.sqrt(r2)
    for p in range(d - 1, 0, -1):
        up = blocks_v[p + 1]
        faces = np.concatenate([np.delete(up, j, axis=1) for j in range(p + 2)])
        apex = np.concatenate([up[:, j] for j in range(p + 2)])
        owner = np.tile(np.arange(len(up)), p + 2)
        uniq, inv = np.unique(faces, axis=0, return_inverse=True)
        inv = np.asarray(inv).ravel()
        if p == 1:
            diff = pts[uniq[:, 1]] - pts[uniq[:, 0]]
            fr2 = np.sum(diff * diff, axis=1) / 4
            fc = 0.5 * (pts[uniq[:, 0]] + pts[uniq[:, 1]])
            own = np.sqrt(np.sum(diff * diff, axis=1)) / 2
        else:
            fc, fr2 = _batch_circum(pts, uniq)
            own = np.sqrt(fr2)
        att = _attached(pts, uniq[inv], fc[inv], fr2[inv], apex)
        attached = np.zeros(len(uniq), dtype=bool)
        np.logical_or.at(attached, inv, att)
        cof_min = np.full(len(uniq), np.inf)
        np.minimum.at(cof_min, inv, blocks_f[p + 1][owner])
        vals = np.where(attached, cof_min, own)
        # values never exceed a cofacet's
        vals = np.minimum(vals, cof_min)
        blocks_v[p] = uniq
        blocks_f[p] = vals
    blocks_v[0] = np.arange(n, dtype=np.int64)[:, None]
    blocks_f[0] = np.zeros(n)
    if len(tri.duplicates):
        extra = np.sort(tri.duplicates, axis=1)
        blocks_v[1] = np.concatenate([blocks_v[1], extra])
        blocks_f[1] = np.concatenate([blocks_f[1], np.zeros(len(extra))])
    blocks = []
    for p in range(d + 1):
        keep = blocks_f[p] <= tau
        blocks.append(_sort_block(blocks_v[p][keep].astype(np.int64), blocks_f[p][keep]))
    return Filtration(tuple(blocks), ALPHA, float(tau), d, n)
