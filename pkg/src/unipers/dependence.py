"""Pairwise dependence between ℓ-values of a single diagram.

Each trial draws a fresh cloud, computes its diagram, picks ``m`` ℓ-values
in random order and stores them as one row.  Covariance and distance
covariance matrices of the resulting ``N × m`` sample are then compared with
rows of iid LGumbel draws.
"""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import universality as U
from .errors import DomainError, InsufficientDataError, ParameterError
from .rng import derive_seed, stream

MAX_RETRIES = 10


@dataclass(frozen=True)
class LVectorSample:
    vectors: np.ndarray          # (N, m)
    seeds: list = field(default_factory=list)
    retries: int = 0
    source: str = ""

    @property
    def N(self):
        return self.vectors.shape[0]

    @property
    def m(self):
        return self.vectors.shape[1]


def _trial(args):
    make_cloud, diagram_fn, complex_type, m, seed, trial = args
    for attempt in range(MAX_RETRIES + 1):
        s = derive_seed(seed, "dependence", trial, attempt)
        dgm = diagram_fn(make_cloud(s))
        pis = U.pi_values(dgm, exclude_infinite=True)
        if len(pis) >= max(m, 2):
            lv = U.l_values(pis, complex_type).values
            perm = stream(s, "permutation").permutation(len(lv))
            return lv[perm[:m]], s, attempt
    raise InsufficientDataError(
        f"trial {trial}: diagram had fewer than {m} finite pairs after {MAX_RETRIES} retries")


def collect_l_vectors(make_cloud, diagram_fn, complex_type: str, N: int, m: int, seed: int,
                      workers: int = 1) -> LVectorSample:
    """``N`` rows of ``m`` randomly ordered ℓ-values, one diagram per row.

    ``make_cloud(seed)`` returns a point cloud and ``diagram_fn(cloud)`` its
    degree-``k`` diagram.  A diagram with fewer than ``m`` finite pairs is
    regenerated from a fresh derived seed, at most ten times.
    """
    if N < 1 or m < 1:
        raise ParameterError("N and m must be positive")
    jobs = [(make_cloud, diagram_fn, complex_type, m, seed, t) for t in range(N)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            out = list(ex.map(_trial, jobs, chunksize=max(1, N // (8 * workers))))
    else:
        out = [_trial(j) for j in jobs]
    rows = np.array([o[0] for o in out])
    return LVectorSample(rows, [o[1] for o in out], sum(o[2] for o in out), complex_type)


def synthetic_lgumbel(N: int, m: int, seed: int) -> LVectorSample:
    """Rows of iid LGumbel draws: the independence baseline."""
    rng = stream(seed, "iid-lgumbel")
    return LVectorSample(U.lgumbel_sample(rng, (N, m)), [int(seed)], 0, "iid-lgumbel")


def _rows(s):
    return s.vectors if isinstance(s, LVectorSample) else np.asarray(s, dtype=np.float64)


def covariance_matrix(s) -> np.ndarray:
    X = _rows(s)
    if X.shape[0] < 2:
        raise InsufficientDataError("covariance needs N >= 2")
    return np.cov(X, rowvar=False, ddof=1).reshape(X.shape[1], X.shape[1])


def _offdiag_abs(M):
    iu = np.triu_indices(M.shape[0], 1)
    return np.abs(M[iu])


def correlation_matrix(s) -> np.ndarray:
    C = covariance_matrix(s)
    sd = np.sqrt(np.diag(C))
    if np.any(sd == 0):
        raise DomainError(f"column(s) {np.nonzero(sd == 0)[0].tolist()} have zero variance; correlation undefined")
    return C / np.outer(sd, sd)


def correlation_summary(s):
    """``(mean, max)`` of the absolute off-diagonal correlations."""
    off = _offdiag_abs(correlation_matrix(s))
    return float(off.mean()), float(off.max())


def _centered(x):
    x = np.asarray(x, dtype=np.float64).ravel()
    a = np.abs(x[:, None] - x[None, :])
    return a - a.mean(axis=0)[None, :] - a.mean(axis=1)[:, None] + a.mean()


def distance_covariance(x, y) -> float:
    """Sample distance covariance (V-statistic, plain double centering)."""
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if len(x) != len(y) or len(x) < 2:
        raise InsufficientDataError("distance covariance needs two samples of equal length >= 2")
    v = float(np.mean(_centered(x) * _centered(y)))
    return float(np.sqrt(max(v, 0.0)))


def distance_correlation(x, y) -> float:
    A, B = _centered(x), _centered(y)
    vxy = max(float(np.mean(A * B)), 0.0)
    vxx, vyy = float(np.mean(A * A)), float(np.mean(B * B))
    if vxx <= 0 or vyy <= 0:
        return 0.0
    return float(np.sqrt(vxy / np.sqrt(vxx * vyy)))


def dcov_matrix(s) -> np.ndarray:
    """Distance covariance on the diagonal, distance correlation off it."""
    X = _rows(s)
    if X.shape[0] < 2:
        raise InsufficientDataError("distance covariance needs N >= 2")
    m = X.shape[1]
    cents = [_centered(X[:, j]) for j in range(m)]
    V = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            V[i, j] = V[j, i] = max(float(np.mean(cents[i] * cents[j])), 0.0)
    D = np.sqrt(V)
    diag = np.diag(V).copy()
    for i in range(m):
        for j in range(m):
            if i != j:
                den = np.sqrt(diag[i] * diag[j])
                D[i, j] = np.sqrt(V[i, j] / den) if den > 0 else 0.0
    return D


def summary(s) -> dict:
    mc, xc = correlation_summary(s)
    off = _offdiag_abs(dcov_matrix(s))
    X = _rows(s)
    return {"mean_corr": mc, "max_corr": xc, "mean_dcorr": float(off.mean()),
            "max_dcorr": float(off.max()), "N": int(X.shape[0]), "m": int(X.shape[1])}


def write_matrix(path, M):
    np.savetxt(path, M, delimiter=",", fmt="%.17g")


def summary_json(s) -> str:
    return json.dumps(summary(s), indent=2, sort_keys=True)
