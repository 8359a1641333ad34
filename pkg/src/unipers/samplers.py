"""Seeded point-cloud generators.

Every sampler is a pure function of its parameters and ``seed``; the random
stream is derived from ``(seed, model_tag)`` so two models sharing a seed
still draw independent numbers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InputError, IntegrationError, ParameterError
from .rng import stream

IID_KINDS = ("box", "ball", "annulus", "sphere", "beta", "normal", "cauchy")
MANIFOLD_KINDS = ("torus", "klein", "projective", "henneberg", "linkage")

MAX_REJECTION_ATTEMPTS = 10_000


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    model_tag: str
    seed: int
    intrinsic_dim: Optional[int] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise InputError(f"points must be an (n, D) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InputError("point coordinates must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.n

    def scaled(self, c: float) -> "PointCloud":
        return PointCloud(self.points * c, self.model_tag, self.seed,
                          self.intrinsic_dim, dict(self.params, scale=c))

    def to_csv(self, path, header: bool = False) -> None:
        with open(path, "w") as fh:
            if header:
                fh.write(",".join(f"x{i}" for i in range(self.ambient_dim)) + "\n")
            for row in self.points:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


@dataclass(frozen=True)
class IidModel:
    """An iid sampling model in dimension ``dim``.

    ``a``/``b`` are the Beta shape parameters; ``r_in``/``r_out`` the annulus
    radii.  Unused fields are ignored by the other kinds.
    """
    kind: str
    dim: int = 2
    r_in: float = 0.5
    r_out: float = 1.0
    a: float = 3.0
    b: float = 1.0

    def __post_init__(self):
        if self.kind not in IID_KINDS:
            raise ParameterError(f"unknown iid model {self.kind!r}; expected one of {IID_KINDS}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ParameterError(f"dim must be a positive integer, got {self.dim}")
        if self.kind == "annulus" and not 0 < self.r_in < self.r_out:
            raise ParameterError(f"annulus needs 0 < r_in < r_out, got r_in={self.r_in}, r_out={self.r_out}")
        if self.kind == "beta" and not (self.a > 0 and self.b > 0):
            raise ParameterError(f"beta needs a > 0 and b > 0, got a={self.a}, b={self.b}")

    @property
    def tag(self) -> str:
        if self.kind == "annulus":
            return f"annulus{self.dim}[{self.r_in},{self.r_out}]"
        if self.kind == "beta":
            return f"beta{self.dim}[{self.a},{self.b}]"
        return f"{self.kind}{self.dim}"


@dataclass(frozen=True)
class ManifoldModel:
    kind: str
    R1: float = 2.0
    R2: float = 1.0

    def __post_init__(self):
        if self.kind not in MANIFOLD_KINDS:
            raise ParameterError(f"unknown manifold model {self.kind!r}; expected one of {MANIFOLD_KINDS}")
        if self.kind == "torus" and not self.R1 > self.R2 > 0:
            raise ParameterError(f"torus needs R1 > R2 > 0, got R1={self.R1}, R2={self.R2}")

    @property
    def tag(self) -> str:
        if self.kind == "torus":
            return f"torus[{self.R1},{self.R2}]"
        return self.kind


@dataclass(frozen=True)
class LorenzParams:
    sigma: float = 45.0
    rho: float = 54.0
    beta: float = 10.0
    dt: float = 0.1
    substeps: int = 10
    initial: Optional[tuple] = None

    def __post_init__(self):
        if not (self.sigma > 0 and self.rho > 0 and self.beta > 0):
            raise ParameterError("sigma, rho and beta must be positive")
        if not self.dt > 0:
            raise ParameterError(f"dt must be positive, got {self.dt}")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise ParameterError(f"substeps must be a positive integer, got {self.substeps}")
        if self.initial is not None:
            init = np.asarray(self.initial, dtype=float)
            if init.shape != (3,) or np.any(init < 0) or np.any(init > 1):
                raise ParameterError("initial point must lie in [0,1]^3")


@dataclass(frozen=True)
class TriangleMesh:
    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        f = np.asarray(self.faces, dtype=np.int64)
        if v.ndim != 2 or f.ndim != 2 or f.shape[1] != 3:
            raise InputError("mesh needs (nv, D) vertices and (nf, 3) triangle faces")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise InputError("face references a vertex index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    def areas(self) -> np.ndarray:
        p0, p1, p2 = (self.vertices[self.faces[:, i]] for i in range(3))
        u, w = p1 - p0, p2 - p0
        # Gram determinant works in any ambient dimension
        uu = np.einsum("ij,ij->i", u, u)
        ww = np.einsum("ij,ij->i", w, w)
        uw = np.einsum("ij,ij->i", u, w)
        return 0.5 * np.sqrt(np.maximum(uu * ww - uw * uw, 0.0))


def read_off(path) -> TriangleMesh:
    """Parse an ASCII OFF file holding triangle faces."""
    with open(path) as fh:
        tokens = []
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                tokens.append(line)
    if not tokens or not tokens[0].startswith("OFF"):
        raise InputError(f"{path}: missing OFF header")
    head = tokens[0][3:].split()
    body = tokens[1:]
    if head:
        body = [" ".join(head)] + body
    if not body:
        raise InputError(f"{path}: missing counts line")
    try:
        nv, nf = (int(t) for t in body[0].split()[:2])
    except ValueError:
        raise InputError(f"{path}: malformed counts line {body[0]!r}") from None
    if len(body) < 1 + nv + nf:
        raise InputError(f"{path}: expected {nv} vertices and {nf} faces, file is truncated")
    try:
        verts = np.array([[float(t) for t in body[1 + i].split()[:3]] for i in range(nv)])
    except ValueError as exc:
        raise InputError(f"{path}: bad vertex line: {exc}") from None
    faces = []
    for j in range(nf):
        parts = body[1 + nv + j].split()
        if int(parts[0]) != 3:
            raise InputError(f"{path}: face {j} is not a triangle")
        faces.append([int(t) for t in parts[1:4]])
    return TriangleMesh(verts, np.array(faces, dtype=np.int64).reshape(-1, 3))


def _check_n(n):
    if int(n) != n or n < 1:
        raise ParameterError(f"n must be a positive integer, got {n}")
    return int(n)


def _rejection_ball(rng, n, d, r_in=0.0, r_out=1.0):
    """Uniform points in {r_in <= |x| <= r_out} by rejection from the cube."""
    out = np.empty((n, d))
    filled = 0
    attempts = 0
    # per-point cap: a batch of size m counts as m attempts for each unfilled slot
    while filled < n:
        need = n - filled
        batch = max(64, int(need * 1.5 / max(_acceptance_rate(d, r_in, r_out), 1e-6)))
        batch = min(batch, 1_000_000)
        cand = rng.uniform(-r_out, r_out, size=(batch, d))
        rad = np.sqrt(np.einsum("ij,ij->i", cand, cand))
        ok = cand[(rad <= r_out) & (rad >= r_in)]
        take = min(len(ok), need)
        out[filled:filled + take] = ok[:take]
        filled += take
        attempts += batch
        if filled < n and attempts > MAX_REJECTION_ATTEMPTS * n:
            raise ParameterError(
                f"rejection sampling exceeded {MAX_REJECTION_ATTEMPTS} attempts per point "
                f"(d={d}, r_in={r_in}, r_out={r_out})")
    return out


def _acceptance_rate(d, r_in, r_out):
    vol_ball = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
    return vol_ball * (1 - (r_in / r_out) ** d) / 2 ** d


def sample_iid(model: IidModel, n: int, seed: int) -> PointCloud:
    n = _check_n(n)
    rng = stream(seed, model.tag)
    d = model.dim
    kind = model.kind
    if kind == "box":
        pts = rng.random((n, d))
    elif kind == "ball":
        pts = _rejection_ball(rng, n, d)
    elif kind == "annulus":
        pts = _rejection_ball(rng, n, d, model.r_in, model.r_out)
    elif kind == "sphere":
        g = rng.standard_normal((n, d + 1))
        pts = g / np.linalg.norm(g, axis=1, keepdims=True)
    elif kind == "beta":
        pts = rng.beta(model.a, model.b, size=(n, d))
    elif kind == "normal":
        pts = rng.standard_normal((n, d))
    else:
        pts = rng.standard_cauchy((n, d))
    return PointCloud(pts, model.tag, seed, d, {"kind": kind})


def _linkage_p4(p3, p5, sign):
    q = 0.5 * (p3 + p5)
    diff = p5 - q
    h2 = np.einsum("ij,ij->i", diff, diff)
    h = np.sqrt(h2)
    scale = sign * np.sqrt(np.maximum(1.0 - h2, 0.0)) / h
    perp = np.stack([diff[:, 1], -diff[:, 0]], axis=1)
    return q + scale[:, None] * perp


def sample_manifold(model: ManifoldModel, n: int, seed: int) -> PointCloud:
    n = _check_n(n)
    rng = stream(seed, model.tag)
    kind = model.kind
    if kind == "projective":
        g = rng.standard_normal((n, 3))
        u, v, w = (g / np.linalg.norm(g, axis=1, keepdims=True)).T
        pts = np.stack([u * v, u * w, v * v - w * w, 2 * v * w], axis=1)
        return PointCloud(pts, model.tag, seed, 2)
    if kind == "linkage":
        return _sample_linkage(rng, n, seed, model.tag)
    phi = rng.uniform(0, 2 * np.pi, n)
    theta = rng.uniform(0, 2 * np.pi, n)
    if kind == "torus":
        ring = model.R1 + model.R2 * np.cos(phi)
        pts = np.stack([ring * np.cos(theta), ring * np.sin(theta), model.R2 * np.sin(phi)], axis=1)
    elif kind == "klein":
        pts = np.stack([(1 + np.cos(theta)) * np.cos(phi),
                        (1 + np.cos(theta)) * np.sin(phi),
                        np.sin(theta) * np.cos(phi / 2),
                        np.sin(theta) * np.sin(phi / 2)], axis=1)
    else:
        pts = np.stack([
            2 * np.cos(theta) * np.sinh(phi) - (2 / 3) * np.cos(3 * theta) * np.sinh(3 * phi),
            2 * np.sin(theta) * np.sinh(phi) + (2 / 3) * np.sin(3 * theta) * np.sinh(3 * phi),
            2 * np.cos(2 * theta) * np.cosh(2 * phi)], axis=1)
    return PointCloud(pts, model.tag, seed, 2, {"R1": model.R1, "R2": model.R2} if kind == "torus" else {})


def _sample_linkage(rng, n, seed, tag):
    pts = np.empty((n, 6))
    filled = 0
    rejected = 0
    while filled < n:
        m = max(64, 2 * (n - filled))
        phi = rng.uniform(0, 2 * np.pi, m)
        theta = rng.uniform(0, 2 * np.pi, m)
        p5 = np.stack([np.cos(phi), np.sin(phi)], axis=1)
        p3 = np.stack([1 + np.cos(theta), np.sin(theta)], axis=1)
        gap = np.linalg.norm(p3 - p5, axis=1)
        ok = gap <= 2.0
        rejected += int(np.count_nonzero(~ok))
        p3, p5 = p3[ok], p5[ok]
        # one sign draw per accepted proposal, independent of the angles
        sign = np.where(rng.random(len(p3)) < 0.5, 1.0, -1.0)
        p4 = _linkage_p4(p3, p5, sign)
        take = min(len(p3), n - filled)
        pts[filled:filled + take] = np.hstack([p3, p4, p5])[:take]
        filled += take
    return PointCloud(pts, tag, seed, 2, {"rejected": rejected})


def sample_stratified(p_plane: float, n: int, seed: int) -> PointCloud:
    if not 0 <= p_plane <= 1:
        raise ParameterError(f"p_plane must be in [0, 1], got {p_plane}")
    n = _check_n(n)
    rng = stream(seed, "stratified")
    on_plane = rng.random(n) < p_plane
    pts = rng.uniform(-1, 1, size=(n, 3))
    pts[on_plane, 2] = 0.0
    return PointCloud(pts, "stratified", seed, None, {"p_plane": p_plane})


def sample_mesh(mesh: TriangleMesh, n: int, seed: int, weighting: str = "area") -> PointCloud:
    """Sample points on a triangle mesh.

    ``weighting="area"`` picks triangles proportionally to their area, which
    gives the uniform surface measure.  ``"inverse-area"`` reproduces the
    literal "inversely proportional" rule for comparison runs.
    """
    n = _check_n(n)
    areas = mesh.areas()
    valid = areas > 0
    if not np.any(valid):
        raise InputError("mesh has no triangle with positive area")
    if weighting == "area":
        w = np.where(valid, areas, 0.0)
    elif weighting == "inverse-area":
        w = np.zeros_like(areas)
        w[valid] = 1.0 / areas[valid]
    else:
        raise ParameterError(f"unknown weighting {weighting!r}")
    rng = stream(seed, "mesh", weighting)
    tri = rng.choice(len(w), size=n, p=w / w.sum())
    # reflect the unit square onto the simplex
    u = rng.random((n, 2))
    flip = u.sum(axis=1) > 1
    u[flip] = 1 - u[flip]
    f = mesh.faces[tri]
    v = mesh.vertices
    pts = (v[f[:, 0]] * (1 - u[:, :1] - u[:, 1:]) + v[f[:, 1]] * u[:, :1] + v[f[:, 2]] * u[:, 1:])
    return PointCloud(pts, "mesh", seed, 2, {"weighting": weighting, "triangles": tri})


def sample_brownian(d: int, n: int, seed: int) -> PointCloud:
    n = _check_n(n)
    if int(d) != d or d < 1:
        raise ParameterError(f"d must be a positive integer, got {d}")
    rng = stream(seed, f"brownian{d}")
    steps = rng.standard_normal((n, d))
    return PointCloud(np.cumsum(steps, axis=0), f"brownian{d}", seed, None)


def _lorenz_rhs(s, sigma, rho, beta):
    x, y, z = s
    return np.array([sigma * (y - x), x * (rho - z) - y, x * y - beta * z])


def sample_lorenz(params: LorenzParams, n: int, seed: int) -> PointCloud:
    """Lorenz trajectory sampled every ``dt`` time units.

    Each output step is advanced by ``params.substeps`` classical RK4 steps of
    size ``dt / substeps``; a single RK4 step of 0.1 is unstable for the
    default parameters.
    """
    n = _check_n(n)
    rng = stream(seed, "lorenz")
    init = rng.random(3) if params.initial is None else np.asarray(params.initial, float)
    h = params.dt / params.substeps
    sig, rho, beta = params.sigma, params.rho, params.beta
    out = np.empty((n, 3))
    s = init.astype(float)
    out[0] = s
    with np.errstate(over="ignore", invalid="ignore"):   # blow-up is reported below
        for i in range(1, n):
            for _ in range(params.substeps):
                k1 = _lorenz_rhs(s, sig, rho, beta)
                k2 = _lorenz_rhs(s + 0.5 * h * k1, sig, rho, beta)
                k3 = _lorenz_rhs(s + 0.5 * h * k2, sig, rho, beta)
                k4 = _lorenz_rhs(s + h * k3, sig, rho, beta)
                s = s + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(s)):
                raise IntegrationError(f"Lorenz integration produced a non-finite state at step {i}")
            out[i] = s
    return PointCloud(out, "lorenz", seed, None, {"sigma": sig, "rho": rho, "beta": beta, "dt": params.dt})


def sample_perturbed_grid(d: int, side: int, sigma: float, seed: int) -> PointCloud:
    if int(side) != side or side < 2:
        raise ParameterError(f"side must be an integer >= 2, got {side}")
    if sigma < 0:
        raise ParameterError(f"sigma must be nonnegative, got {sigma}")
    if int(d) != d or d < 1:
        raise ParameterError(f"d must be a positive integer, got {d}")
    axis = np.linspace(0.0, 1.0, int(side))
    grid = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    rng = stream(seed, f"grid{d}")
    pts = grid + sigma * rng.standard_normal(grid.shape) if sigma > 0 else grid.copy()
    return PointCloud(pts, f"grid{d}", seed, d, {"side": side, "sigma": sigma})


def sample_cut_annulus(width: float, n: int, seed: int, r_in: float = 0.4, r_out: float = 1.0) -> PointCloud:
    """Planar annulus with the strip ``{x > 0, |y| < width/2}`` removed.

    The result is contractible for any ``width > 0``.
    """
    n = _check_n(n)
    if not 0 < r_in < r_out:
        raise ParameterError(f"need 0 < r_in < r_out, got {r_in}, {r_out}")
    if not 0 <= width < 2 * r_out:
        raise ParameterError(f"width must be in [0, {2 * r_out}), got {width}")
    rng = stream(seed, f"cut-annulus[{width},{r_in},{r_out}]")
    pts = np.empty((n, 2))
    filled = 0
    while filled < n:
        cand = _rejection_ball(rng, 2 * (n - filled) + 16, 2, r_in, r_out)
        keep = cand[~((cand[:, 0] > 0) & (np.abs(cand[:, 1]) < width / 2))]
        take = min(len(keep), n - filled)
        pts[filled:filled + take] = keep[:take]
        filled += take
    return PointCloud(pts, "cut-annulus", seed, 2, {"width": width, "r_in": r_in, "r_out": r_out})


def sample_figure8(neck: float, n: int, seed: int, r_in: float = 0.4, r_out: float = 1.0) -> PointCloud:
    """Union of two planar annuli whose outer disks overlap in a lens of
    width ``neck`` along the x axis (centers at ``±(r_out - neck/2)``)."""
    n = _check_n(n)
    if not 0 < r_in < r_out:
        raise ParameterError(f"need 0 < r_in < r_out, got {r_in}, {r_out}")
    if not 0 <= neck < 2 * (r_out - r_in):
        raise ParameterError(f"neck must be in [0, {2 * (r_out - r_in)}), got {neck}")
    c = r_out - neck / 2
    rng = stream(seed, f"figure8[{neck},{r_in},{r_out}]")
    pts = np.empty((n, 2))
    filled = 0
    lo = np.array([-c - r_out, -r_out])
    hi = np.array([c + r_out, r_out])
    while filled < n:
        cand = rng.uniform(lo, hi, size=(4 * (n - filled) + 16, 2))
        dl = np.hypot(cand[:, 0] + c, cand[:, 1])
        dr = np.hypot(cand[:, 0] - c, cand[:, 1])
        inside = (dl <= r_out) | (dr <= r_out)
        hole = (dl < r_in) | (dr < r_in)
        keep = cand[inside & ~hole]
        take = min(len(keep), n - filled)
        pts[filled:filled + take] = keep[:take]
        filled += take
    return PointCloud(pts, "figure8", seed, 2, {"neck": neck, "r_in": r_in, "r_out": r_out})


def read_signal(path) -> np.ndarray:
    """One real number per line; blank lines are skipped."""
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            try:
                values.append(float(s))
            except ValueError:
                raise InputError(f"{path}:{lineno}: not a number: {s!r}") from None
    return np.array(values)


def delay_embed(signal, d: int, delta: int = 1, tau: int = 1) -> PointCloud:
    """Time-delay embedding ``X_i = (V[i*delta], V[i*delta + tau], ...)``."""
    v = np.asarray(signal, dtype=np.float64).ravel()
    for name, val in (("d", d), ("delta", delta), ("tau", tau)):
        if int(val) != val or val < 1:
            raise ParameterError(f"{name} must be a positive integer, got {val}")
    span = (d - 1) * tau
    if len(v) < span + 1:
        raise InputError(f"signal has {len(v)} samples; at least {span + 1} are needed for d={d}, tau={tau}")
    count = (len(v) - span - 1) // delta + 1
    idx = np.arange(count)[:, None] * delta + np.arange(d)[None, :] * tau
    return PointCloud(v[idx], "delay", 0, None, {"d": d, "delta": delta, "tau": tau})
