"""Compiled inner loops for clique enumeration and column reduction."""
import numpy as np
from numba import njit


@njit(cache=True)
def _find_sorted(arr, lo, hi, x):
    # position of x in arr[lo:hi] (sorted ascending) or -1
    while lo < hi:
        mid = (lo + hi) >> 1
        v = arr[mid]
        if v < x:
            lo = mid + 1
        elif v > x:
            hi = mid
        else:
            return mid
    return -1


@njit(cache=True)
def extend_cliques(cliques, values, indptr, indices, weights):
    """Extend every sorted clique ``c`` by each vertex ``k > c[-1]`` adjacent
    to all of ``c``.  ``indptr/indices/weights`` is the upper-triangular CSR
    adjacency (neighbours ``> i`` in ascending order, with edge lengths).

    Returns the new cliques and their values (max pairwise distance).
    """
    m, w = cliques.shape
    count = 0
    for r in range(m):
        last = cliques[r, w - 1]
        for pos in range(indptr[last], indptr[last + 1]):
            k = indices[pos]
            ok = True
            for t in range(w - 1):
                c = cliques[r, t]
                if _find_sorted(indices, indptr[c], indptr[c + 1], k) < 0:
                    ok = False
                    break
            if ok:
                count += 1
    out = np.empty((count, w + 1), dtype=np.int64)
    vals = np.empty(count, dtype=np.float64)
    q = 0
    for r in range(m):
        last = cliques[r, w - 1]
        for pos in range(indptr[last], indptr[last + 1]):
            k = indices[pos]
            v = max(values[r], weights[pos])
            ok = True
            for t in range(w - 1):
                c = cliques[r, t]
                loc = _find_sorted(indices, indptr[c], indptr[c + 1], k)
                if loc < 0:
                    ok = False
                    break
                if weights[loc] > v:
                    v = weights[loc]
            if ok:
                for t in range(w):
                    out[q, t] = cliques[r, t]
                out[q, w] = k
                vals[q] = v
                q += 1
    return out, vals


@njit(cache=True)
def _sift_up(h, i):
    x = h[i]
    while i > 0:
        parent = (i - 1) >> 1
        if h[parent] >= x:
            break
        h[i] = h[parent]
        i = parent
    h[i] = x


@njit(cache=True)
def _sift_down(h, size, i):
    x = h[i]
    while True:
        child = 2 * i + 1
        if child >= size:
            break
        if child + 1 < size and h[child + 1] > h[child]:
            child += 1
        if h[child] <= x:
            break
        h[i] = h[child]
        i = child
    h[i] = x


@njit(cache=True)
def _pop(h, size):
    top = h[0]
    size -= 1
    if size > 0:
        h[0] = h[size]
        _sift_down(h, size, 0)
    return top, size


@njit(cache=True)
def _pivot(h, size):
    # cancel equal pairs at the top; leaves the true pivot on top
    while size > 0:
        top, size = _pop(h, size)
        if size > 0 and h[0] == top:
            _, size = _pop(h, size)
            continue
        h[size] = top
        _sift_up(h, size)
        size += 1
        return top, size
    return -1, size


@njit(cache=True)
def _drain(h, size, out):
    # pop the whole heap into out (descending), cancelling pairs
    n = 0
    while size > 0:
        top, size = _pop(h, size)
        if size > 0 and h[0] == top:
            _, size = _pop(h, size)
            continue
        out[n] = top
        n += 1
    return n


@njit(cache=True)
def reduce_block(bnd, n_rows, skip):
    """Z/2 column reduction of one dimension block.

    ``bnd[j]`` lists the row ranks of column ``j`` (any order).  Columns with
    ``skip[j]`` set are known to reduce to zero (clearing) and are not
    touched.  Returns ``low`` (pivot row per column, -1 for zero columns).
    """
    m, w = bnd.shape
    low = np.full(m, -1, dtype=np.int64)
    owner = np.full(n_rows, -1, dtype=np.int64)
    # reduced columns that differ from their boundary live in a flat store
    store_ptr = np.full(m, -1, dtype=np.int64)
    store_len = np.zeros(m, dtype=np.int64)
    store = np.empty(max(16, 4 * w), dtype=np.int64)
    store_used = 0
    heap = np.empty(64, dtype=np.int64)
    scratch = np.empty(64, dtype=np.int64)
    for j in range(m):
        if skip[j]:
            continue
        size = 0
        for t in range(w):
            if size >= heap.shape[0]:
                heap = np.concatenate((heap, np.empty(heap.shape[0], dtype=np.int64)))
            heap[size] = bnd[j, t]
            _sift_up(heap, size)
            size += 1
        touched = False
        canon = size
        while True:
            piv, size = _pivot(heap, size)
            if piv < 0:
                break
            other = owner[piv]
            if other < 0:
                owner[piv] = j
                low[j] = piv
                if touched:
                    if scratch.shape[0] < size:
                        scratch = np.empty(2 * size, dtype=np.int64)
                    cnt = _drain(heap, size, scratch)
                    while store_used + cnt > store.shape[0]:
                        store = np.concatenate((store, np.empty(store.shape[0], dtype=np.int64)))
                    store[store_used:store_used + cnt] = scratch[:cnt]
                    store_ptr[j] = store_used
                    store_len[j] = cnt
                    store_used += cnt
                break
            touched = True
            if store_ptr[other] < 0:
                for t in range(w):
                    if size >= heap.shape[0]:
                        heap = np.concatenate((heap, np.empty(heap.shape[0], dtype=np.int64)))
                    heap[size] = bnd[other, t]
                    _sift_up(heap, size)
                    size += 1
            else:
                start = store_ptr[other]
                for t in range(store_len[other]):
                    if size >= heap.shape[0]:
                        heap = np.concatenate((heap, np.empty(heap.shape[0], dtype=np.int64)))
                    heap[size] = store[start + t]
                    _sift_up(heap, size)
                    size += 1
            if size > 2 * canon + 64:
                # lazy entries piled up: rewrite the heap in canonical form;
                # a descending array is already a valid max-heap
                if scratch.shape[0] < size:
                    scratch = np.empty(2 * size, dtype=np.int64)
                cnt = _drain(heap, size, scratch)
                heap[:cnt] = scratch[:cnt]
                size = cnt
                canon = cnt
    return low


@njit(cache=True)
def _uf_find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def reduce_edges_union_find(edges, n_vertices, skip):
    """Pivot of each edge column via union-find with the elder rule.

    ``edges`` holds vertex ranks.  Gives the same pairing as column
    reduction: an edge is negative exactly when it joins two components and
    then kills the younger one (larger rank root).
    """
    m = edges.shape[0]
    parent = np.arange(n_vertices)
    low = np.full(m, -1, dtype=np.int64)
    for j in range(m):
        if skip[j]:
            continue
        ru = _uf_find(parent, edges[j, 0])
        rv = _uf_find(parent, edges[j, 1])
        if ru == rv:
            continue
        if ru < rv:
            parent[rv] = ru
            low[j] = rv
        else:
            parent[ru] = rv
            low[j] = ru
    return low


# ---------------------------------------------------------------------------
# Rips degree-1 pairs by coboundary reduction with cofacets generated on the
# fly.  Triangles are keyed by (value rank, i*n*n + j*n + k), which is the
# (value, lexicographic) filtration order.


@njit(cache=True, inline="always")
def _klt(v1, k1, v2, k2):
    return v1 < v2 or (v1 == v2 and k1 < k2)


@njit(cache=True)
def _hpush(hv, hk, size, v, k):
    if size >= hv.shape[0]:
        nv = np.empty(2 * hv.shape[0], dtype=np.int64)
        nk = np.empty(2 * hv.shape[0], dtype=np.int64)
        nv[:size] = hv[:size]
        nk[:size] = hk[:size]
        hv, hk = nv, nk
    i = size
    while i > 0:
        parent = (i - 1) >> 1
        if not _klt(v, k, hv[parent], hk[parent]):
            break
        hv[i] = hv[parent]
        hk[i] = hk[parent]
        i = parent
    hv[i] = v
    hk[i] = k
    return hv, hk, size + 1


@njit(cache=True)
def _hpop(hv, hk, size):
    v0, k0 = hv[0], hk[0]
    size -= 1
    if size > 0:
        v, k = hv[size], hk[size]
        i = 0
        while True:
            c = 2 * i + 1
            if c >= size:
                break
            if c + 1 < size and _klt(hv[c + 1], hk[c + 1], hv[c], hk[c]):
                c += 1
            if not _klt(hv[c], hk[c], v, k):
                break
            hv[i] = hv[c]
            hk[i] = hk[c]
            i = c
        hv[i] = v
        hk[i] = k
    return v0, k0, size


@njit(cache=True)
def _hpivot(hv, hk, size):
    # smallest entry after cancelling equal pairs; it stays in the heap
    while size > 0:
        v, k, size = _hpop(hv, hk, size)
        if size > 0 and hv[0] == v and hk[0] == k:
            _, _, size = _hpop(hv, hk, size)
            continue
        hv, hk, size = _hpush(hv, hk, size, v, k)
        return v, k, hv, hk, size
    return -1, -1, hv, hk, size


@njit(cache=True)
def _push_cofacets(hv, hk, size, a, b, wab_rank, n, indptr, indices, wrank):
    # triangles {a, b, c} for every common neighbour c of a and b
    la, ha = indptr[a], indptr[a + 1]
    lb, hb = indptr[b], indptr[b + 1]
    pa, pb = la, lb
    while pa < ha and pb < hb:
        ca, cb = indices[pa], indices[pb]
        if ca < cb:
            pa += 1
        elif cb < ca:
            pb += 1
        else:
            c = ca
            v = wab_rank
            if wrank[pa] > v:
                v = wrank[pa]
            if wrank[pb] > v:
                v = wrank[pb]
            x, y, z = a, b, c
            if z < y:
                y, z = z, y
            if y < x:
                x, y = y, x
            if z < y:
                y, z = z, y
            hv, hk, size = _hpush(hv, hk, size, v, (x * n + y) * n + z)
            pa += 1
            pb += 1
    return hv, hk, size


@njit(cache=True)
def _edge_before(r1, a1, b1, r2, a2, b2):
    # filtration order on edges: (value rank, lower vertex, upper vertex)
    if r1 != r2:
        return r1 < r2
    if a1 != a2:
        return a1 < a2
    return b1 < b2


@njit(cache=True)
def _apparent_cofacet(a, b, rab, n, indptr, indices, wrank):
    """Smallest cofacet of edge ``ab`` if ``ab`` is its largest facet, else
    ``(-1, -1)``.  Such a pair is apparent: no other column can reach that
    cofacet, so no reduction is needed."""
    la, ha = indptr[a], indptr[a + 1]
    lb, hb = indptr[b], indptr[b + 1]
    pa, pb = la, lb
    best_v = -1
    best_k = -1
    best_c = -1
    best_ra = 0
    best_rb = 0
    while pa < ha and pb < hb:
        ca, cb = indices[pa], indices[pb]
        if ca < cb:
            pa += 1
        elif cb < ca:
            pb += 1
        else:
            c = ca
            v = rab
            if wrank[pa] > v:
                v = wrank[pa]
            if wrank[pb] > v:
                v = wrank[pb]
            x, y, z = a, b, c
            if z < y:
                y, z = z, y
            if y < x:
                x, y = y, x
            if z < y:
                y, z = z, y
            k = (x * n + y) * n + z
            if best_v < 0 or _klt(v, k, best_v, best_k):
                best_v, best_k, best_c = v, k, c
                best_ra, best_rb = wrank[pa], wrank[pb]
                if v == rab:
                    # no cofacet is below rab and keys grow with c here
                    break
            pa += 1
            pb += 1
    if best_v < 0:
        return -1, -1
    c = best_c
    if not _edge_before(best_ra, min(a, c), max(a, c), rab, a, b):
        return -1, -1
    if not _edge_before(best_rb, min(b, c), max(b, c), rab, a, b):
        return -1, -1
    return best_v, best_k


@njit(cache=True)
def rips_h1_cohomology(n, edges, erank, indptr, indices, wrank, negative):
    """Degree-1 persistence pairs of a Rips filtration.

    ``edges`` (m, 2) are sorted in filtration order with value ranks
    ``erank``; ``indptr/indices/wrank`` is the symmetric CSR adjacency with
    value ranks per entry; ``negative`` flags edges that kill a component.
    Returns ``(death_vrank, death_key)`` per edge, ``-1`` for an edge that
    is not a birth, ``-2`` for an essential birth.
    """
    m = edges.shape[0]
    death_v = np.full(m, -1, dtype=np.int64)
    death_k = np.full(m, -1, dtype=np.int64)
    owner = dict()
    owner[np.int64(-1)] = np.int64(-1)
    # reduction columns (edge lists) for columns that needed additions
    red_ptr = np.full(m, -1, dtype=np.int64)
    red_len = np.zeros(m, dtype=np.int64)
    store = np.empty(1024, dtype=np.int64)
    used = 0
    hv = np.empty(256, dtype=np.int64)
    hk = np.empty(256, dtype=np.int64)
    col = np.empty(64, dtype=np.int64)
    for e in range(m - 1, -1, -1):
        if negative[e]:
            continue
        v, k = _apparent_cofacet(edges[e, 0], edges[e, 1], erank[e], n, indptr, indices, wrank)
        if v >= 0:
            owner[k] = e
            death_v[e] = v
            death_k[e] = k
            continue
        size = 0
        ncol = 1
        col[0] = e
        hv, hk, size = _push_cofacets(hv, hk, size, edges[e, 0], edges[e, 1], erank[e],
                                      n, indptr, indices, wrank)
        while True:
            v, k, hv, hk, size = _hpivot(hv, hk, size)
            if v < 0:
                death_v[e] = -2
                break
            other = owner[k] if k in owner else np.int64(-1)
            if other < 0:
                owner[k] = e
                death_v[e] = v
                death_k[e] = k
                if ncol > 1:
                    while used + ncol > store.shape[0]:
                        ns = np.empty(2 * store.shape[0], dtype=np.int64)
                        ns[:used] = store[:used]
                        store = ns
                    store[used:used + ncol] = col[:ncol]
                    red_ptr[e] = used
                    red_len[e] = ncol
                    used += ncol
                break
            if red_ptr[other] < 0:
                cnt = 1
            else:
                cnt = red_len[other]
            if ncol + cnt > col.shape[0]:
                nc = np.empty(2 * (ncol + cnt), dtype=np.int64)
                nc[:ncol] = col[:ncol]
                col = nc
            for t in range(cnt):
                f = other if red_ptr[other] < 0 else store[red_ptr[other] + t]
                col[ncol] = f
                ncol += 1
                hv, hk, size = _push_cofacets(hv, hk, size, edges[f, 0], edges[f, 1], erank[f],
                                              n, indptr, indices, wrank)
            if ncol > 64 and ncol > 2 * cnt:
                # cancel repeated edges in the reduction column
                srt = np.sort(col[:ncol])
                q = 0
                i = 0
                while i < ncol:
                    if i + 1 < ncol and srt[i] == srt[i + 1]:
                        i += 2
                    else:
                        col[q] = srt[i]
                        q += 1
                        i += 1
                ncol = q
    return death_v, death_k
