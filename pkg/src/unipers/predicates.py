"""Exact orientation and in-sphere predicates.

Each predicate first evaluates the determinant in floating point together
with a forward error bound (Shewchuk's stage-A bounds).  When the magnitude
does not clear the bound the determinant is recomputed exactly over the
rationals; every double is a dyadic rational, so the exact stage never
rounds.

``incircle_sos`` resolves exact cocircularity with a symbolic perturbation
of the lifting map: point ``i`` is lifted to ``|p_i|^2 + eps**(i+1)``, so the
point with the smallest index carries the dominant perturbation.
"""
from fractions import Fraction

import numpy as np

_EPS = np.finfo(float).eps / 2
CCW_ERRBOUND = (3.0 + 16.0 * _EPS) * _EPS
ICC_ERRBOUND = (10.0 + 96.0 * _EPS) * _EPS
O3D_ERRBOUND = (7.0 + 56.0 * _EPS) * _EPS
ISP_ERRBOUND = (16.0 + 224.0 * _EPS) * _EPS

_exact_calls = 0


def exact_call_count():
    """Number of times a predicate fell through to exact arithmetic."""
    return _exact_calls


def _sign(x):
    return int(x > 0) - int(x < 0)


def _det(m):
    """Exact determinant of a small square matrix of Fractions (Laplace)."""
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    total = Fraction(0)
    for j in range(n):
        if m[0][j] == 0:
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = m[0][j] * _det(minor)
        total += term if j % 2 == 0 else -term
    return total


def _frac(p):
    return [Fraction(float(c)) for c in p]


def orient2d_exact(a, b, c):
    global _exact_calls
    _exact_calls += 1
    a, b, c = _frac(a), _frac(b), _frac(c)
    return _sign((a[0] - c[0]) * (b[1] - c[1]) - (a[1] - c[1]) * (b[0] - c[0]))


def orient2d(a, b, c):
    """+1 if a, b, c turn counter-clockwise, -1 if clockwise, 0 if collinear."""
    detleft = (a[0] - c[0]) * (b[1] - c[1])
    detright = (a[1] - c[1]) * (b[0] - c[0])
    det = detleft - detright
    if abs(det) > CCW_ERRBOUND * (abs(detleft) + abs(detright)):
        return _sign(det)
    return orient2d_exact(a, b, c)


def incircle_exact(a, b, c, d):
    global _exact_calls
    _exact_calls += 1
    rows = []
    d = _frac(d)
    for p in (a, b, c):
        p = _frac(p)
        dx, dy = p[0] - d[0], p[1] - d[1]
        rows.append([dx, dy, dx * dx + dy * dy])
    return _sign(_det(rows))


def incircle(a, b, c, d):
    """+1 if d lies inside the circle through a, b, c (given counter-clockwise),
    -1 outside, 0 on it.  The sign flips when a, b, c are clockwise."""
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    bc = bdx * cdy - cdx * bdy
    ca = cdx * ady - adx * cdy
    ab = adx * bdy - bdx * ady
    det = alift * bc + blift * ca + clift * ab
    permanent = ((abs(bdx * cdy) + abs(cdx * bdy)) * alift
                 + (abs(cdx * ady) + abs(adx * cdy)) * blift
                 + (abs(adx * bdy) + abs(bdx * ady)) * clift)
    if abs(det) > ICC_ERRBOUND * permanent:
        return _sign(det)
    return incircle_exact(a, b, c, d)


def incircle_sos(pts, ia, ib, ic, id_):
    """Perturbed in-circle test on indices into ``pts``; never returns 0 when
    ``ia, ib, ic`` are not collinear."""
    s = incircle(pts[ia], pts[ib], pts[ic], pts[id_])
    if s != 0:
        return s
    # The lifted determinant is linear in each lift; the coefficient of the
    # lift of point q is +-orient2d of the other three (cofactor expansion of
    # the 4x4 determinant with rows (x, y, x^2+y^2, 1)).
    idx = [ia, ib, ic, id_]
    for pos in sorted(range(4), key=lambda p: idx[p]):
        others = [idx[j] for j in range(4) if j != pos]
        o = orient2d(pts[others[0]], pts[others[1]], pts[others[2]])
        if o != 0:
            cof = o if pos % 2 == 0 else -o
            return _REF_FACTOR * cof
    return 0


def _det4_lift_sign(pts4):
    rows = []
    for p in pts4:
        f = _frac(p)
        rows.append([f[0], f[1], f[0] * f[0] + f[1] * f[1], Fraction(1)])
    return _sign(_det(rows))


# incircle and the 4x4 lifted determinant agree up to this constant sign
_REF = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.25, 0.25)]
_REF_FACTOR = incircle_exact(*_REF) * _det4_lift_sign(_REF)


def orient3d_exact(a, b, c, d):
    global _exact_calls
    _exact_calls += 1
    d = _frac(d)
    rows = [[x - y for x, y in zip(_frac(p), d)] for p in (a, b, c)]
    return _sign(_det(rows))


def orient3d(a, b, c, d):
    """Sign of det[a-d, b-d, c-d]; positive when d lies below the plane of
    a, b, c oriented counter-clockwise when viewed from above."""
    adx, ady, adz = a[0] - d[0], a[1] - d[1], a[2] - d[2]
    bdx, bdy, bdz = b[0] - d[0], b[1] - d[1], b[2] - d[2]
    cdx, cdy, cdz = c[0] - d[0], c[1] - d[1], c[2] - d[2]
    bdxcdy, cdxbdy = bdx * cdy, cdx * bdy
    cdxady, adxcdy = cdx * ady, adx * cdy
    adxbdy, bdxady = adx * bdy, bdx * ady
    det = adz * (bdxcdy - cdxbdy) + bdz * (cdxady - adxcdy) + cdz * (adxbdy - bdxady)
    permanent = ((abs(bdxcdy) + abs(cdxbdy)) * abs(adz)
                 + (abs(cdxady) + abs(adxcdy)) * abs(bdz)
                 + (abs(adxbdy) + abs(bdxady)) * abs(cdz))
    if abs(det) > O3D_ERRBOUND * permanent:
        return _sign(det)
    return orient3d_exact(a, b, c, d)


def insphere_exact(a, b, c, d, e):
    global _exact_calls
    _exact_calls += 1
    e = _frac(e)
    rows = []
    for p in (a, b, c, d):
        v = [x - y for x, y in zip(_frac(p), e)]
        rows.append(v + [v[0] * v[0] + v[1] * v[1] + v[2] * v[2]])
    return _sign(_det(rows))


def insphere(a, b, c, d, e):
    """+1 if e lies inside the sphere through a, b, c, d when
    ``orient3d(a, b, c, d) > 0``; the sign flips for the other orientation."""
    aex, aey, aez = a[0] - e[0], a[1] - e[1], a[2] - e[2]
    bex, bey, bez = b[0] - e[0], b[1] - e[1], b[2] - e[2]
    cex, cey, cez = c[0] - e[0], c[1] - e[1], c[2] - e[2]
    dex, dey, dez = d[0] - e[0], d[1] - e[1], d[2] - e[2]
    ab = aex * bey - bex * aey
    bc = bex * cey - cex * bey
    cd = cex * dey - dex * cey
    da = dex * aey - aex * dey
    ac = aex * cey - cex * aey
    bd = bex * dey - dex * bey
    abc = aez * bc - bez * ac + cez * ab
    bcd = bez * cd - cez * bd + dez * bc
    cda = cez * da + dez * ac + aez * cd
    dab = dez * ab + aez * bd + bez * da
    alift = aex * aex + aey * aey + aez * aez
    blift = bex * bex + bey * bey + bez * bez
    clift = cex * cex + cey * cey + cez * cez
    dlift = dex * dex + dey * dey + dez * dez
    det = (dlift * abc - clift * dab) + (blift * cda - alift * bcd)
    A = abs
    p_ab = A(aex * bey) + A(bex * aey)
    p_bc = A(bex * cey) + A(cex * bey)
    p_cd = A(cex * dey) + A(dex * cey)
    p_da = A(dex * aey) + A(aex * dey)
    p_ac = A(aex * cey) + A(cex * aey)
    p_bd = A(bex * dey) + A(dex * bey)
    permanent = ((p_cd * A(bez) + p_bd * A(cez) + p_bc * A(dez)) * alift
                 + (p_da * A(cez) + p_ac * A(dez) + p_cd * A(aez)) * blift
                 + (p_ab * A(dez) + p_bd * A(aez) + p_da * A(bez)) * clift
                 + (p_bc * A(aez) + p_ac * A(bez) + p_ab * A(cez)) * dlift)
    if abs(det) > ISP_ERRBOUND * permanent:
        return _sign(det)
    return insphere_exact(a, b, c, d, e)


def incircle_batch(pts, tri, query):
    """Vectorised float in-circle signs with certainty mask.

    Returns ``(sign, certain)`` arrays for query point ``pts[query[i]]``
    against triangle ``pts[tri[i]]``.
    """
    a, b, c, d = pts[tri[:, 0]], pts[tri[:, 1]], pts[tri[:, 2]], pts[query]
    ad, bd, cd = a - d, b - d, c - d
    alift = np.einsum("ij,ij->i", ad, ad)
    blift = np.einsum("ij,ij->i", bd, bd)
    clift = np.einsum("ij,ij->i", cd, cd)
    bc = bd[:, 0] * cd[:, 1] - cd[:, 0] * bd[:, 1]
    ca = cd[:, 0] * ad[:, 1] - ad[:, 0] * cd[:, 1]
    ab = ad[:, 0] * bd[:, 1] - bd[:, 0] * ad[:, 1]
    det = alift * bc + blift * ca + clift * ab
    permanent = ((np.abs(bd[:, 0] * cd[:, 1]) + np.abs(cd[:, 0] * bd[:, 1])) * alift
                 + (np.abs(cd[:, 0] * ad[:, 1]) + np.abs(ad[:, 0] * cd[:, 1])) * blift
                 + (np.abs(ad[:, 0] * bd[:, 1]) + np.abs(bd[:, 0] * ad[:, 1])) * clift)
    certain = np.abs(det) > ICC_ERRBOUND * permanent
    return np.sign(det).astype(np.int8), certain


def orient2d_batch(pts, tri):
    a, b, c = pts[tri[:, 0]], pts[tri[:, 1]], pts[tri[:, 2]]
    detleft = (a[:, 0] - c[:, 0]) * (b[:, 1] - c[:, 1])
    detright = (a[:, 1] - c[:, 1]) * (b[:, 0] - c[:, 0])
    det = detleft - detright
    certain = np.abs(det) > CCW_ERRBOUND * (np.abs(detleft) + np.abs(detright))
    return np.sign(det).astype(np.int8), certain


def dot_sign(u, v):
    """Exact sign of the dot product of two difference vectors given as
    pairs ``(p, q)`` meaning ``p - q``."""
    (p1, q1), (p2, q2) = u, v
    terms = [(p1[i] - q1[i]) * (p2[i] - q2[i]) for i in range(len(p1))]
    s = sum(terms)
    bound = (len(p1) + 2) * 2 * _EPS * sum(abs(t) for t in terms)
    if abs(s) > bound:
        return _sign(s)
    global _exact_calls
    _exact_calls += 1
    fp1, fq1, fp2, fq2 = _frac(p1), _frac(q1), _frac(p2), _frac(q2)
    return _sign(sum((fp1[i] - fq1[i]) * (fp2[i] - fq2[i]) for i in range(len(fp1))))
