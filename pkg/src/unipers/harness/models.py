"""Picklable model specifications: ``ModelSpec(seed) -> PointCloud``."""
from __future__ import annotations

from dataclasses import dataclass, field

from .. import samplers as S
from ..errors import ConfigError, ParameterError

# sampler name -> allowed parameter names (besides n)
SAMPLER_PARAMS = {
    "iid": {"kind", "dim", "r_in", "r_out", "a", "b"},
    "manifold": {"kind", "R1", "R2"},
    "stratified": {"p_plane"},
    "mesh": {"path", "weighting"},
    "brownian": {"dim"},
    "lorenz": {"sigma", "rho", "beta", "dt", "substeps"},
    "grid": {"dim", "side", "sigma"},
    "cut_annulus": {"width", "r_in", "r_out"},
    "figure8": {"neck", "r_in", "r_out"},
    "signal": {"path", "dim", "delta", "lag"},
    "csv": {"path", "header"},
}


@dataclass(frozen=True)
class ModelSpec:
    sampler: str
    n: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sampler not in SAMPLER_PARAMS:
            raise ConfigError(f"unknown sampler {self.sampler!r}; expected one of {sorted(SAMPLER_PARAMS)}")
        extra = set(self.params) - SAMPLER_PARAMS[self.sampler]
        if extra:
            raise ConfigError(f"unknown key(s) for sampler {self.sampler!r}: {sorted(extra)}")
        if self.sampler not in ("grid", "signal", "csv") and not (isinstance(self.n, int) and self.n >= 1):
            raise ConfigError(f"sampler {self.sampler!r} needs a positive integer n, got {self.n!r}")

    def __call__(self, seed: int):
        p = dict(self.params)
        s = self.sampler
        try:
            if s == "iid":
                return S.sample_iid(S.IidModel(**p), self.n, seed)
            if s == "manifold":
                return S.sample_manifold(S.ManifoldModel(**p), self.n, seed)
            if s == "stratified":
                return S.sample_stratified(p.get("p_plane", 0.5), self.n, seed)
            if s == "mesh":
                return S.sample_mesh(S.read_off(p["path"]), self.n, seed, p.get("weighting", "area"))
            if s == "brownian":
                return S.sample_brownian(p.get("dim", 2), self.n, seed)
            if s == "lorenz":
                return S.sample_lorenz(S.LorenzParams(**p), self.n, seed)
            if s == "grid":
                return S.sample_perturbed_grid(p.get("dim", 2), p.get("side", 10), p.get("sigma", 0.0), seed)
            if s == "cut_annulus":
                return S.sample_cut_annulus(p.get("width", 0.25), self.n, seed,
                                            p.get("r_in", 0.4), p.get("r_out", 1.0))
            if s == "figure8":
                return S.sample_figure8(p.get("neck", 0.1), self.n, seed, p.get("r_in", 0.4), p.get("r_out", 1.0))
            if s == "signal":
                cloud = S.delay_embed(S.read_signal(p["path"]), p.get("dim", 3), p.get("delta", 1), p.get("lag", 1))
                return cloud
            if s == "csv":
                from .io import ingest_pointcloud_csv
                return ingest_pointcloud_csv(p["path"], header=p.get("header", False))
        except KeyError as exc:
            raise ConfigError(f"sampler {s!r} needs parameter {exc.args[0]!r}") from None
        except TypeError as exc:
            raise ParameterError(f"sampler {s!r}: {exc}") from None
        raise ConfigError(f"unknown sampler {s!r}")

    def as_dict(self):
        return {"sampler": self.sampler, "n": self.n, **self.params}
