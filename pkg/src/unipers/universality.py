"""π-values, ℓ-values and the left-skewed Gumbel reference law.

The ℓ-transform is ``ℓ = A loglog π + B`` with ``A = 1`` for Rips and
``A = 1/2`` for Čech/alpha, and ``B = -λ - A·mean(loglog π)`` so that the
ℓ-values of every diagram average to ``-λ``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InfiniteCycleError, InsufficientDataError, ParameterError

EULER_GAMMA = 0.5772156649


def a_constant(complex_type: str) -> float:
    ct = complex_type.lower()
    if ct == "rips":
        return 1.0
    if ct in ("alpha", "cech", "čech"):
        return 0.5
    raise ParameterError(f"unknown complex type {complex_type!r}; expected rips or alpha")


@dataclass(frozen=True)
class PiValueSet:
    values: np.ndarray
    k: int = 1
    complex_type: str = ""
    tau: float = math.inf
    n: int = 0
    n_infinite: int = 0

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class LValueSet:
    values: np.ndarray
    A: float
    B: float
    Lbar: float
    source: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.values)


def pi_values(dgm, exclude_infinite: bool = False) -> PiValueSet:
    """``death / birth`` for every pair of a diagram.

    Infinite pairs have no π-value.  By default their presence is an error;
    with ``exclude_infinite`` they are dropped and counted.
    """
    deaths = np.asarray(dgm.deaths, dtype=np.float64)
    births = np.asarray(dgm.births, dtype=np.float64)
    fin = np.isfinite(deaths)
    n_inf = int(np.count_nonzero(~fin))
    if n_inf and not exclude_infinite:
        raise InfiniteCycleError(
            f"{n_inf} infinite cycle(s) in the diagram; resolve them with inference.threshold_search "
            "or pass exclude_infinite=True")
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = deaths[fin] / births[fin]
    return PiValueSet(vals, dgm.k, getattr(dgm, "complex_type", ""), dgm.tau, dgm.n_points, n_inf)


def l_values(pi, complex_type: str = None, exclude_top: int = 0) -> LValueSet:
    """ℓ-values with ``B`` fitted so that their mean is ``-λ``.

    ``exclude_top`` drops the ``m`` largest π-values first (manual removal of
    known signal in toy studies).
    """
    if isinstance(pi, PiValueSet):
        vals = np.asarray(pi.values, dtype=np.float64)
        ct = complex_type or pi.complex_type
        src = {"k": pi.k, "complex_type": ct, "tau": pi.tau, "n": pi.n, "n_infinite": pi.n_infinite}
    else:
        vals = np.asarray(pi, dtype=np.float64)
        ct = complex_type
        src = {"complex_type": ct}
    if ct is None or ct == "":
        raise ParameterError("complex type is required to choose A")
    A = a_constant(ct)
    if exclude_top:
        if exclude_top < 0:
            raise ParameterError("exclude_top must be nonnegative")
        vals = np.sort(vals)[:max(len(vals) - exclude_top, 0)]
    if len(vals) < 2:
        raise InsufficientDataError(f"need at least 2 π-values, got {len(vals)}")
    if np.any(~(vals > 1)):
        raise DomainError("every π-value must exceed 1 for loglog to be defined")
    ll = np.log(np.log(vals))
    Lbar = float(np.mean(ll))
    B = -EULER_GAMMA - A * Lbar
    return LValueSet(A * ll + B, A, B, Lbar, src)


def ell(pi, A, B):
    """ℓ-value of individual π-values under fixed constants."""
    return A * np.log(np.log(np.asarray(pi, dtype=np.float64))) + B


# -- the reference law --------------------------------------------------------

def lgumbel_cdf(x):
    return -np.expm1(-np.exp(np.asarray(x, dtype=np.float64)))


def lgumbel_sf(x):
    return np.exp(-np.exp(np.asarray(x, dtype=np.float64)))


def lgumbel_pdf(x):
    x = np.asarray(x, dtype=np.float64)
    return np.exp(x - np.exp(x))


def lgumbel_quantile(q):
    q = np.asarray(q, dtype=np.float64)
    if np.any((q <= 0) | (q >= 1)):
        raise DomainError("quantile level must lie in (0, 1)")
    return np.log(-np.log1p(-q))


def lgumbel_sample(rng, size):
    """Draws by inversion from a numpy Generator."""
    u = rng.random(size)
    # 1 - u lies in (0, 1]; guard the measure-zero endpoint
    return np.log(-np.log(np.where(u > 0, u, np.finfo(float).tiny)))


# -- diagnostics ----------------------------------------------------------------

def _need_two(values):
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or len(v) < 2:
        raise InsufficientDataError("need at least 2 values")
    return v


@dataclass(frozen=True)
class ECDF:
    x: np.ndarray      # sorted distinct jump points
    F: np.ndarray      # value at and right of each jump

    def __call__(self, t):
        idx = np.searchsorted(self.x, np.asarray(t, dtype=np.float64), side="right")
        return np.where(idx > 0, self.F[np.maximum(idx - 1, 0)], 0.0)

    def rows(self):
        return list(zip(self.x.tolist(), self.F.tolist()))


def ecdf(values) -> ECDF:
    v = np.sort(_need_two(values))
    x, counts = np.unique(v, return_counts=True)
    return ECDF(x, np.cumsum(counts) / len(v))


def qq_against_lgumbel(values):
    """``(theoretical, empirical)`` quantile pairs with plotting positions
    ``(i - 0.5) / m``."""
    v = np.sort(_need_two(values))
    m = len(v)
    theo = lgumbel_quantile((np.arange(1, m + 1) - 0.5) / m)
    return np.column_stack([theo, v])


def silverman_bandwidth(v):
    v = np.asarray(v, dtype=np.float64)
    sd = np.std(v, ddof=1) if len(v) > 1 else 0.0
    iqr = np.subtract(*np.percentile(v, [75, 25])) / 1.34 if len(v) > 1 else 0.0
    spread = min(sd, iqr) if iqr > 0 else sd
    h = 0.9 * spread * len(v) ** (-0.2)
    return h if h > 0 else 1.0


def kde(values, bandwidth=None, grid=None, points: int = 512):
    """Gaussian kernel density estimate sampled on ``grid``.

    Without ``bandwidth`` Silverman's rule is used.  Returns ``(x, f)``.
    """
    v = np.asarray(values, dtype=np.float64).ravel()
    if len(v) < 1:
        raise InsufficientDataError("need at least 1 value")
    h = silverman_bandwidth(v) if bandwidth is None else float(bandwidth)
    if not h > 0:
        raise ParameterError("bandwidth must be positive")
    if grid is None:
        grid = np.linspace(v.min() - 3 * h, v.max() + 3 * h, points)
    x = np.asarray(grid, dtype=np.float64)
    f = np.zeros_like(x)
    for start in range(0, len(v), 4096):
        z = (x[:, None] - v[None, start:start + 4096]) / h
        f += np.exp(-0.5 * z * z).sum(axis=1)
    return x, f / (len(v) * h * math.sqrt(2 * math.pi))


def ks_statistic(values, cdf):
    """Two-sided Kolmogorov-Smirnov distance to a continuous CDF, taking both
    one-sided gaps at every jump."""
    v = np.sort(_need_two(values))
    m = len(v)
    F = cdf(v)
    upper = np.arange(1, m + 1) / m - F
    lower = F - np.arange(0, m) / m
    return float(max(upper.max(), lower.max(), 0.0))


def ks_to_lgumbel(values) -> float:
    return ks_statistic(values, lgumbel_cdf)


def ks_two_sample(x, y) -> float:
    """Sup distance between two empirical CDFs."""
    x = np.sort(_need_two(x))
    y = np.sort(_need_two(y))
    grid = np.concatenate([x, y])
    fx = np.searchsorted(x, grid, side="right") / len(x)
    fy = np.searchsorted(y, grid, side="right") / len(y)
    return float(np.max(np.abs(fx - fy)))


def estimate_B(dgm, complex_type: str = None, exclude_infinite: bool = True) -> float:
    ct = complex_type or getattr(dgm, "complex_type", None)
    return l_values(pi_values(dgm, exclude_infinite=exclude_infinite), ct).B


def lifetimes(dgm):
    """``death - birth`` for finite pairs."""
    fin = np.isfinite(dgm.deaths)
    return dgm.deaths[fin] - dgm.births[fin]


def pimax_scale(n, k: int = 1):
    """``(log n / log log n) ** (1/k)``, the growth rate of the largest π."""
    n = np.asarray(n, dtype=np.float64)
    return (np.log(n) / np.log(np.log(n))) ** (1.0 / k)


def report(dgm, complex_type: str = None, exclude_top: int = 0) -> dict:
    """Scalar summary ``{A, B, Lbar, ks, n_pairs, n_infinite}``."""
    pi = pi_values(dgm, exclude_infinite=True)
    lv = l_values(pi, complex_type, exclude_top=exclude_top)
    return {"A": lv.A, "B": lv.B, "Lbar": lv.Lbar, "ks": ks_to_lgumbel(lv.values),
            "n_pairs": int(len(pi)), "n_infinite": pi.n_infinite}


def write_rows(path, header, rows):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for r in rows:
            fh.write(",".join(repr(float(x)) for x in r) + "\n")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")
