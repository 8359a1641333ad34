"""Persistence pairs over Z/2 and per-degree persistence diagrams."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import InputError, StructuralError, UnsupportedDegreeError

INF = math.inf


@dataclass(frozen=True)
class PersistencePairs:
    """Pairing of a filtration.

    ``pairs[k]`` is an ``(m, 2)`` int array of ``(birth_rank, death_rank)``,
    ranks taken within blocks ``k`` and ``k + 1``; ``death_rank == -1`` marks
    a class that never dies inside the filtration.
    """
    filtration: object
    pairs: dict

    def degree(self, k):
        return self.pairs.get(k, np.empty((0, 2), dtype=np.int64))

    def values(self, k):
        """``(births, deaths)`` float arrays for degree ``k`` (deaths may be inf)."""
        pr = self.degree(k)
        f = self.filtration
        births = f.block(k).values[pr[:, 0]] if len(pr) else np.empty(0)
        deaths = np.full(len(pr), INF)
        fin = pr[:, 1] >= 0
        if np.any(fin):
            deaths[fin] = f.block(k + 1).values[pr[fin, 1]]
        return births, deaths

    def as_simplex_pairs(self):
        """Set of ``(k, birth_vertices, death_vertices or None)`` for oracle
        comparison."""
        out = set()
        f = self.filtration
        for k, pr in self.pairs.items():
            bv = f.block(k).vertices
            dv = f.block(k + 1).vertices
            for b, d in pr.tolist():
                out.add((k, tuple(bv[b].tolist()), tuple(dv[d].tolist()) if d >= 0 else None))
        return out


def _dims_to_reduce(degrees, top):
    dims = set()
    for k in degrees:
        if k < 0:
            raise UnsupportedDegreeError(f"negative degree {k}")
        if k <= top:
            dims.add(k)
        if k + 1 <= top:
            dims.add(k + 1)
    return sorted(dims, reverse=True)


def reduce_twist(f, degrees=None, check=True) -> PersistencePairs:
    """Column reduction by decreasing dimension with clearing.

    Once the ``p``-columns are reduced, every row that became a pivot is a
    positive ``(p-1)``-simplex whose own column must reduce to zero, so it is
    skipped.  Edge columns go through union-find, which yields the same
    pairing as reducing them.
    """
    top = len(f.blocks) - 1
    if degrees is None:
        degrees = range(0, max(top, 0) + 1)
    degrees = sorted(set(int(k) for k in degrees))
    if check:
        f.check()
    lows = {}
    cleared = {}
    for p in _dims_to_reduce(degrees, top):
        m = len(f.block(p))
        skip = cleared.get(p, np.zeros(m, dtype=bool))
        if p == 0:
            low = np.full(m, -1, dtype=np.int64)
        elif p == 1:
            low = _kernels.reduce_edges_union_find(f.block(1).vertices, len(f.block(0)), skip)
        else:
            low = _kernels.reduce_block(f.boundary(p), len(f.block(p - 1)), skip)
        lows[p] = low
        clear = np.zeros(len(f.block(p - 1)), dtype=bool) if p > 0 else None
        if p > 0:
            clear[low[low >= 0]] = True
            cleared[p - 1] = clear
    pairs = {}
    for k in degrees:
        if k > top:
            continue
        m = len(f.block(k))
        positive = np.ones(m, dtype=bool) if k == 0 else (lows[k] < 0)
        death = np.full(m, -1, dtype=np.int64)
        if k + 1 in lows:
            up = lows[k + 1]
            cols = np.nonzero(up >= 0)[0]
            death[up[cols]] = cols
        births = np.nonzero(positive)[0]
        pairs[k] = np.column_stack([births, death[births]]).astype(np.int64)
    return PersistencePairs(f, pairs)


def reduce_naive(f, check=True) -> PersistencePairs:
    """Textbook left-to-right reduction on the full boundary matrix.

    Pure Python, meant as an oracle for filtrations of a few hundred simplices.
    """
    if check:
        f.check()
    dims, ranks = f.order()
    pos = {}
    for g, (p, r) in enumerate(zip(dims.tolist(), ranks.tolist())):
        pos[(p, r)] = g
    columns = []
    for p, r in zip(dims.tolist(), ranks.tolist()):
        if p == 0:
            columns.append(set())
        else:
            columns.append({pos[(p - 1, int(x))] for x in f.boundary(p)[r]})
    for g, col in enumerate(columns):
        if any(x >= g for x in col):
            raise StructuralError("a face appears after its coface")
    low_owner = {}
    lows = [-1] * len(columns)
    for j, col in enumerate(columns):
        while col:
            low = max(col)
            if low in low_owner:
                col ^= columns[low_owner[low]]
            else:
                low_owner[low] = j
                lows[j] = low
                break
    pairs = {}
    paired_birth = {}
    for j, low in enumerate(lows):
        if low >= 0:
            paired_birth[low] = j
    for g, col in enumerate(columns):
        if col:
            continue
        p, r = int(dims[g]), int(ranks[g])
        d = paired_birth.get(g)
        pairs.setdefault(p, []).append((r, int(ranks[d]) if d is not None else -1))
    out = {}
    for p in range(len(f.blocks)):
        arr = np.array(sorted(pairs.get(p, [])), dtype=np.int64).reshape(-1, 2)
        out[p] = arr
    return PersistencePairs(f, out)


@dataclass(frozen=True)
class PersistenceDiagram:
    k: int
    births: np.ndarray
    deaths: np.ndarray
    tau: float
    n_points: int
    complex_type: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.births)

    @property
    def pairs(self):
        return list(zip(self.births.tolist(), self.deaths.tolist()))

    @property
    def finite(self):
        return np.isfinite(self.deaths)

    @property
    def n_infinite(self):
        return int(np.count_nonzero(~self.finite))

    def finite_part(self) -> "PersistenceDiagram":
        keep = self.finite
        return PersistenceDiagram(self.k, self.births[keep], self.deaths[keep], self.tau,
                                  self.n_points, self.complex_type, self.meta)

    def lifetimes(self):
        return self.deaths - self.births

    def sorted(self) -> "PersistenceDiagram":
        order = np.lexsort((np.arange(len(self.births)), self.deaths, self.births))
        return PersistenceDiagram(self.k, self.births[order], self.deaths[order], self.tau,
                                  self.n_points, self.complex_type, self.meta)

    def to_csv(self, path=None) -> str:
        d = self.sorted()
        lines = ["k,birth,death"]
        for b, x in zip(d.births.tolist(), d.deaths.tolist()):
            lines.append(f"{self.k},{b!r},{'inf' if math.isinf(x) else repr(x)}")
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def read_diagram_csv(path, tau=INF, n_points=0):
    """Parse a diagram CSV (``k,birth,death``) into per-degree diagrams."""
    rows = {}
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "k,birth,death":
            raise InputError(f"{path}: expected header 'k,birth,death', got {header!r}")
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            try:
                k, b, d = line.strip().split(",")
                rows.setdefault(int(k), []).append((float(b), INF if d == "inf" else float(d)))
            except ValueError:
                raise InputError(f"{path}:{lineno}: malformed row {line.strip()!r}") from None
    return {k: PersistenceDiagram(k, np.array([r[0] for r in v]), np.array([r[1] for r in v]), tau, n_points)
            for k, v in rows.items()}


def extract_diagram(pairs: PersistencePairs, k: int, tau=None, n=None,
                    allow_degree_zero: bool = False) -> PersistenceDiagram:
    """Degree-``k`` diagram with zero-persistence pairs removed."""
    if k == 0 and not allow_degree_zero:
        raise UnsupportedDegreeError("degree 0 is not supported; the statistics are defined for k >= 1")
    if k < 0:
        raise UnsupportedDegreeError(f"negative degree {k}")
    f = pairs.filtration
    births, deaths = pairs.values(k)
    keep = deaths > births
    return PersistenceDiagram(k, births[keep], deaths[keep],
                              f.tau if tau is None else tau,
                              f.n_points if n is None else n,
                              getattr(f, "complex_type", ""))


def rips_h1_pairs(source, tau=None):
    """Degree-1 Rips pairs without materialising triangles.

    Reduces edge coboundaries in reverse filtration order, generating
    cofacets on the fly; persistent cohomology yields the same pairs as the
    homology reduction.  Returns ``(edges, births, deaths, death_triangles)``
    for every degree-1 birth edge; essential classes have ``inf`` death and
    triangle ``(-1, -1, -1)``.
    """
    from .filtration import _rips_edges, enclosing_radius

    if tau is None:
        tau = enclosing_radius(source)
    n, ei, ej, w = _rips_edges(source, tau)
    order = np.lexsort((ej, ei, w))
    edges = np.ascontiguousarray(np.column_stack([ei[order], ej[order]]), dtype=np.int64)
    vals = w[order]
    uniq, erank = np.unique(vals, return_inverse=True)
    erank = np.asarray(erank, dtype=np.int64).ravel()
    negative = _kernels.reduce_edges_union_find(edges, n, np.zeros(len(edges), dtype=bool)) >= 0
    rows = np.concatenate([edges[:, 0], edges[:, 1]])
    cols = np.concatenate([edges[:, 1], edges[:, 0]])
    ranks = np.concatenate([erank, erank])
    csr = np.lexsort((cols, rows))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, rows + 1, 1)
    indptr = np.cumsum(indptr)
    dv, dk = _kernels.rips_h1_cohomology(n, edges, erank, indptr,
                                         np.ascontiguousarray(cols[csr]),
                                         np.ascontiguousarray(ranks[csr]), negative)
    born = dv != -1
    ess = dv == -2
    deaths = np.full(int(born.sum()), INF)
    fin = ~ess[born]
    deaths[fin] = uniq[dv[born][fin]]
    key = dk[born]
    tri = np.full((len(key), 3), -1, dtype=np.int64)
    tri[fin, 0] = key[fin] // (n * n)
    tri[fin, 1] = (key[fin] // n) % n
    tri[fin, 2] = key[fin] % n
    return edges[born], vals[born], deaths, tri


def rips_h1_diagram(source, tau=None) -> PersistenceDiagram:
    """Degree-1 Rips diagram via :func:`rips_h1_pairs`."""
    from .filtration import RIPS, enclosing_radius, _points_of, DistanceMatrix

    if tau is None:
        tau = enclosing_radius(source)
    _, births, deaths, _ = rips_h1_pairs(source, tau)
    keep = deaths > births
    n = source.n if isinstance(source, DistanceMatrix) else len(_points_of(source))
    return PersistenceDiagram(1, births[keep], deaths[keep], float(tau), n, RIPS)


def diagram(f, k: int) -> PersistenceDiagram:
    """Shortcut: reduce only what degree ``k`` needs and extract it."""
    return extract_diagram(reduce_twist(f, {k}), k)


def compute_diagram(cloud, complex_type: str, k: int, tau=None, max_dim=None) -> PersistenceDiagram:
    """Degree-``k`` diagram of a point cloud (or distance matrix for Rips).

    Rips in degree 1 goes through :func:`rips_h1_diagram`; everything else
    builds the filtration and runs :func:`reduce_twist`.  ``tau=None`` means
    the enclosing radius for Rips and no truncation for alpha.
    """
    from .filtration import build_alpha, build_rips, build_rips_unbounded, DEFAULT_RIPS_MAX_DIM

    if k < 1:
        raise UnsupportedDegreeError("degree 0 is not supported; the statistics are defined for k >= 1")
    ct = complex_type.lower()
    if ct == "rips":
        if k == 1 and max_dim is None:
            return rips_h1_diagram(cloud, tau)
        md = k + 1 if max_dim is None else max_dim
        builder = build_rips if md <= DEFAULT_RIPS_MAX_DIM else build_rips_unbounded
        f = builder(cloud, tau, md)
    elif ct in ("alpha", "cech"):
        f = build_alpha(cloud, math.inf if tau is None else tau)
    else:
        from .errors import ParameterError
        raise ParameterError(f"unknown complex type {complex_type!r}; expected rips or alpha")
    return extract_diagram(reduce_twist(f, {k}, check=False), k)
