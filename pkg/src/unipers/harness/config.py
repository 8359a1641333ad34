"""Strict experiment configuration.

Configs are TOML documents.  Every table has a closed set of keys; anything
else is rejected with the offending key named, so a typo cannot silently
change an experiment.  See the README for the full grammar.
"""
from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import dataclass, field, asdict

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..errors import ConfigError
from .models import ModelSpec

ANALYSES = ("pi_cdf", "l_cdf", "kde", "qq", "ks", "B", "test", "threshold_search",
            "dependence", "pimax_scaling")
COMPLEXES = ("rips", "alpha")

TOP_KEYS = {"name", "seed", "seeds", "output", "complex", "degrees", "tau", "alpha", "analyses",
            "exclude_top", "model", "threshold", "dependence", "pimax"}
THRESHOLD_KEYS = {"tau0", "policy"}
DEPENDENCE_KEYS = {"N", "m"}
PIMAX_KEYS = {"ns"}


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    complex_type: str = "rips"
    degrees: tuple = (1,)
    tau: object = "auto"           # "auto", "inf" or a positive float
    seeds: tuple = (0,)
    analyses: tuple = ("ks", "B")
    alpha: float = 0.05
    output: str = "runs"
    name: str = "experiment"
    exclude_top: int = 0
    threshold: dict = field(default_factory=lambda: {"tau0": None, "policy": "earliest"})
    dependence: dict = field(default_factory=lambda: {"N": 100, "m": 25})
    pimax: dict = field(default_factory=lambda: {"ns": [1000, 10000]})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"] = self.model.as_dict()
        d["degrees"] = list(self.degrees)
        d["seeds"] = list(self.seeds)
        d["analyses"] = list(self.analyses)
        return d

    def digest(self) -> str:
        """sha256 of the canonical JSON form (output directory excluded)."""
        d = self.to_dict()
        d.pop("output")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    def tau_value(self):
        if self.tau == "auto":
            return "auto"
        if self.tau == "inf":
            return math.inf
        return float(self.tau)


def _check_keys(table, allowed, where):
    extra = sorted(set(table) - allowed)
    if extra:
        raise ConfigError(f"unknown key {extra[0]!r} in {where}" + (f" (also {extra[1:]})" if extra[1:] else ""))


def _seeds(raw):
    if isinstance(raw, bool):
        raise ConfigError("seeds must be integers")
    if isinstance(raw, int):
        return (raw,)
    if isinstance(raw, list) and raw and all(isinstance(s, int) and not isinstance(s, bool) for s in raw):
        return tuple(raw)
    if isinstance(raw, str) and ".." in raw:
        lo, hi = raw.split("..", 1)
        try:
            lo, hi = int(lo), int(hi)
        except ValueError:
            raise ConfigError(f"bad seed range {raw!r}; expected 'a..b'") from None
        if hi < lo:
            raise ConfigError(f"empty seed range {raw!r}")
        return tuple(range(lo, hi + 1))
    raise ConfigError(f"seeds must be an integer, a list of integers or a range 'a..b', got {raw!r}")


def config_from_dict(d: dict, base_dir=None) -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ConfigError("config must be a table")
    _check_keys(d, TOP_KEYS, "the top level")
    if "model" not in d or not isinstance(d["model"], dict):
        raise ConfigError("missing [model] table")
    model = dict(d["model"])
    sampler = model.pop("sampler", None)
    if sampler is None:
        raise ConfigError("[model] needs a 'sampler' key")
    n = model.pop("n", 0)
    spec = ModelSpec(sampler, n, model)
    if "seed" in d and "seeds" in d:
        raise ConfigError("give either 'seed' or 'seeds', not both")
    seeds = _seeds(d.get("seeds", d.get("seed", 0)))
    ct = d.get("complex", "rips")
    if ct not in COMPLEXES:
        raise ConfigError(f"unknown complex {ct!r}; expected one of {COMPLEXES}")
    degrees = d.get("degrees", [1])
    if isinstance(degrees, int):
        degrees = [degrees]
    if not degrees or not all(isinstance(k, int) and k >= 1 for k in degrees):
        raise ConfigError(f"degrees must be integers >= 1, got {degrees!r}")
    tau = d.get("tau", "auto")
    if isinstance(tau, str):
        if tau not in ("auto", "inf"):
            raise ConfigError(f"tau must be 'auto', 'inf' or a positive number, got {tau!r}")
    elif isinstance(tau, bool) or not isinstance(tau, (int, float)) or not tau > 0:
        raise ConfigError(f"tau must be 'auto', 'inf' or a positive number, got {tau!r}")
    analyses = d.get("analyses", ["ks", "B"])
    if not isinstance(analyses, list):
        raise ConfigError("analyses must be a list")
    for a in analyses:
        if a not in ANALYSES:
            raise ConfigError(f"unknown analysis {a!r}; expected one of {ANALYSES}")
    alpha = d.get("alpha", 0.05)
    if not isinstance(alpha, (int, float)) or not 0 < alpha < 1:
        raise ConfigError(f"alpha must lie in (0, 1), got {alpha!r}")
    thr = {"tau0": None, "policy": "earliest"}
    if "threshold" in d:
        _check_keys(d["threshold"], THRESHOLD_KEYS, "[threshold]")
        thr.update(d["threshold"])
        if thr["policy"] not in ("earliest", "latest"):
            raise ConfigError(f"threshold policy must be 'earliest' or 'latest', got {thr['policy']!r}")
    dep = {"N": 100, "m": 25}
    if "dependence" in d:
        _check_keys(d["dependence"], DEPENDENCE_KEYS, "[dependence]")
        dep.update(d["dependence"])
    pim = {"ns": [1000, 10000]}
    if "pimax" in d:
        _check_keys(d["pimax"], PIMAX_KEYS, "[pimax]")
        pim.update(d["pimax"])
    exclude_top = d.get("exclude_top", 0)
    if not isinstance(exclude_top, int) or exclude_top < 0:
        raise ConfigError("exclude_top must be a nonnegative integer")
    return ExperimentConfig(spec, ct, tuple(degrees), tau, seeds, tuple(analyses), float(alpha),
                            str(d.get("output", "runs")), str(d.get("name", "experiment")),
                            exclude_top, thr, dep, pim)


def parse_config(text: str) -> ExperimentConfig:
    try:
        d = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config syntax error: {exc}") from None
    return config_from_dict(d)


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
