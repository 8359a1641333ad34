"""Experiment runner: config in, fixed-layout artifact directory out.

Layout of a run directory::

    manifest.json            config, config hash, seeds, versions, wall time, file hashes
    summary.json             one scalar per requested analysis (averaged over seeds)
    seed_<s>/diagram.csv     k,birth,death for every requested degree
    seed_<s>/lvalues.csv     k,birth,death,pi,l for the finite pairs
    seed_<s>/report.json     universality report and, if requested, the test report
    seed_<s>/<analysis>_k<k>.csv   pi_cdf, l_cdf, kde, qq
    seed_<s>/threshold.json  threshold-search report with trace
    dependence/...           cov.csv, dcov.csv, dependence.json
    pimax.csv                n,seed,pimax,g
"""
from __future__ import annotations

import hashlib
import itertools
import json
import math
import os
import platform
import shutil
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import replace

import numpy as np
from scipy.spatial import cKDTree

from .. import dependence as DEP
from .. import inference as INF
from .. import universality as U
from ..errors import ConfigError, UniPersError
from ..filtration import enclosing_radius
from ..persistence import compute_diagram
from .config import ExperimentConfig, config_from_dict

AUTO_FACTOR = 2.5
AUTO_GROWTH = 1.25
AUTO_EXTENSIONS = 4


class ExperimentError(UniPersError):
    """A stage of an experiment failed; carries the stage, seed and the
    exit code of the underlying error."""

    def __init__(self, stage, seed, cause):
        self.stage, self.seed, self.cause = stage, seed, cause
        self.exit_code = getattr(cause, "exit_code", 1)
        super().__init__(f"stage {stage!r} failed for seed {seed}: {type(cause).__name__}: {cause}")


@contextmanager
def _stage(name, seed):
    try:
        yield
    except ExperimentError:
        raise
    except Exception as exc:        # noqa: BLE001 - every failure is reported with its stage
        raise ExperimentError(name, seed, exc) from exc


def noise_tau(points, factor: float = AUTO_FACTOR) -> float:
    """Truncation radius that covers the bulk of the noise cycles.

    ``factor`` times the median distance to the ``ceil(log n)``-th nearest
    neighbour, the length scale at which a random geometric graph connects.
    """
    pts = np.asarray(points, dtype=np.float64)
    n = len(pts)
    k = max(2, math.ceil(math.log(max(n, 2))))
    if n <= k + 1:
        return enclosing_radius(pts)
    dist, _ = cKDTree(pts).query(pts, k=k + 1)
    return min(factor * float(np.median(dist[:, k])), enclosing_radius(pts))


def diagram_for(cloud, complex_type: str, k: int, tau="auto"):
    """Diagram with the ``tau`` conventions of the config.

    ``"auto"`` for Rips starts at :func:`noise_tau` and grows the radius by
    25% (at most four times, never past the enclosing radius) while
    infinite cycles remain.  Alpha is cheap enough to run untruncated.
    """
    pts = cloud.points if hasattr(cloud, "points") else np.asarray(cloud, dtype=np.float64)
    if complex_type == "alpha":
        t = math.inf if tau in ("auto", "inf") else float(tau)
        return compute_diagram(pts, "alpha", k, t)
    if tau == "inf":
        return compute_diagram(pts, "rips", k, None)
    if tau != "auto":
        return compute_diagram(pts, "rips", k, float(tau))
    er = enclosing_radius(pts)
    t = noise_tau(pts)
    for _ in range(AUTO_EXTENSIONS + 1):
        D = compute_diagram(pts, "rips", k, t)
        if D.n_infinite == 0 or t >= er:
            return D
        t = min(t * AUTO_GROWTH, er)
    return D


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _json(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=U._json_default) + "\n"


def _diagram_rows(dgms):
    lines = ["k,birth,death"]
    for D in dgms:
        lines.extend(D.to_csv().splitlines()[1:])
    return "\n".join(lines) + "\n"


def _csv(header, rows):
    return header + "\n" + "".join(",".join(repr(float(x)) for x in r) + "\n" for r in rows)


def _versions():
    import numba
    import scipy
    from .. import __version__
    return {"unipers": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "numba": numba.__version__, "python": platform.python_version()}


class _DiagramFn:
    """Picklable ``cloud -> diagram`` for the dependence trials."""

    def __init__(self, complex_type, k, tau):
        self.complex_type, self.k, self.tau = complex_type, k, tau

    def __call__(self, cloud):
        return diagram_for(cloud, self.complex_type, self.k, self.tau)


def _run_seed(cfg: ExperimentConfig, seed: int, sdir: str) -> dict:
    os.makedirs(sdir, exist_ok=True)
    with _stage("sample", seed):
        cloud = cfg.model(seed)
    dgms = {}
    for k in cfg.degrees:
        with _stage(f"persistence[k={k}]", seed):
            dgms[k] = diagram_for(cloud, cfg.complex_type, k, cfg.tau_value())
    _write(os.path.join(sdir, "diagram.csv"), _diagram_rows(dgms.values()))
    out = {"seed": seed, "degrees": {}}
    lrows = ["k,birth,death,pi,l"]
    report = {"universality": {}}
    for k, D in dgms.items():
        with _stage(f"universality[k={k}]", seed):
            fin = D.finite_part().sorted()
            pis = U.pi_values(fin)
            lv = U.l_values(pis, cfg.complex_type, exclude_top=cfg.exclude_top)
            rep = U.report(D, cfg.complex_type, exclude_top=cfg.exclude_top)
            rep["tau"] = D.tau
            report["universality"][str(k)] = rep
            ell = U.ell(pis.values, lv.A, lv.B)
            for b, d, p, l in zip(fin.births, fin.deaths, pis.values, ell):
                lrows.append(f"{k},{float(b)!r},{float(d)!r},{float(p)!r},{float(l)!r}")
            out["degrees"][k] = {"ks": rep["ks"], "B": rep["B"], "n_pairs": rep["n_pairs"],
                                 "n_infinite": rep["n_infinite"]}
            tag = f"_k{k}"
            if "pi_cdf" in cfg.analyses:
                _write(os.path.join(sdir, f"pi_cdf{tag}.csv"), _csv("x,F", U.ecdf(pis.values).rows()))
            if "l_cdf" in cfg.analyses:
                _write(os.path.join(sdir, f"l_cdf{tag}.csv"), _csv("x,F", U.ecdf(lv.values).rows()))
            if "kde" in cfg.analyses:
                x, f = U.kde(lv.values)
                _write(os.path.join(sdir, f"kde{tag}.csv"), _csv("x,f", zip(x, f)))
            if "qq" in cfg.analyses:
                _write(os.path.join(sdir, f"qq{tag}.csv"),
                       _csv("theoretical,empirical", U.qq_against_lgumbel(lv.values)))
        if "test" in cfg.analyses:
            with _stage(f"test[k={k}]", seed):
                tr = INF.signal_cycles(D, cfg.complex_type, cfg.alpha, B=lv.B, allow_infinite=True)
                report.setdefault("test", {})[str(k)] = tr.as_dict()
                out["degrees"][k]["n_significant"] = tr.n_significant
        if "threshold_search" in cfg.analyses:
            with _stage(f"threshold_search[k={k}]", seed):
                tau0 = cfg.threshold.get("tau0") or noise_tau(cloud.points)
                _, trep, trace = INF.threshold_search(cloud.points, cfg.complex_type, k, cfg.alpha,
                                                      tau0, cfg.threshold.get("policy", "earliest"))
                thr = trep.as_dict()
                thr["final_tau"] = trace.final_tau
                thr["policy"] = trace.policy
                thr["iterations"] = trace.iterations
                report.setdefault("threshold", {})[str(k)] = {"final_tau": trace.final_tau,
                                                               "n_significant": trep.n_significant}
                _write(os.path.join(sdir, "threshold.json"), _json(thr))
                out["degrees"][k]["final_tau"] = trace.final_tau
    _write(os.path.join(sdir, "lvalues.csv"), "\n".join(lrows) + "\n")
    _write(os.path.join(sdir, "report.json"), _json(report))
    return out


def _run_dependence(cfg, root):
    ddir = os.path.join(root, "dependence")
    os.makedirs(ddir, exist_ok=True)
    seed = cfg.seeds[0]
    with _stage("dependence", seed):
        N, m = int(cfg.dependence["N"]), int(cfg.dependence["m"])
        s = DEP.collect_l_vectors(cfg.model, _DiagramFn(cfg.complex_type, cfg.degrees[0], cfg.tau_value()),
                                  cfg.complex_type, N, m, seed)
        base = DEP.synthetic_lgumbel(N, m, seed)
        DEP.write_matrix(os.path.join(ddir, "cov.csv"), DEP.covariance_matrix(s))
        DEP.write_matrix(os.path.join(ddir, "dcov.csv"), DEP.dcov_matrix(s))
        summ = {"diagrams": DEP.summary(s), "iid_lgumbel": DEP.summary(base), "retries": s.retries}
        _write(os.path.join(ddir, "dependence.json"), _json(summ))
    return summ


def _run_pimax(cfg, root):
    rows = []
    with _stage("pimax_scaling", cfg.seeds[0]):
        for n in cfg.pimax["ns"]:
            spec = replace(cfg.model, n=int(n))
            for seed in cfg.seeds:
                D = diagram_for(spec(seed), cfg.complex_type, cfg.degrees[0],
                                cfg.tau_value())
                pis = U.pi_values(D, exclude_infinite=True).values
                rows.append((n, seed, float(pis.max()), float(U.pimax_scale(n, cfg.degrees[0]))))
    _write(os.path.join(root, "pimax.csv"), _csv("n,seed,pimax,g", rows))
    return rows


def _summarise(cfg, per_seed, dep, pimax):
    k = cfg.degrees[0]
    vals = [r["degrees"][k] for r in per_seed]
    summ = {}
    for a in cfg.analyses:
        if a in ("pi_cdf", "l_cdf", "kde", "qq"):
            summ[a] = float(np.mean([v["n_pairs"] for v in vals]))
        elif a == "ks":
            summ[a] = float(np.mean([v["ks"] for v in vals]))
        elif a == "B":
            summ[a] = float(np.mean([v["B"] for v in vals]))
        elif a == "test":
            summ[a] = float(np.mean([v["n_significant"] for v in vals]))
        elif a == "threshold_search":
            summ[a] = float(np.mean([v["final_tau"] for v in vals]))
        elif a == "dependence":
            summ[a] = dep["diagrams"]["mean_corr"]
        elif a == "pimax_scaling":
            top = max(r[0] for r in pimax)
            summ[a] = float(np.median([r[2] / r[3] for r in pimax if r[0] == top]))
    return summ


def _file_hashes(root):
    out = {}
    for dirpath, _, files in os.walk(root):
        for f in sorted(files):
            p = os.path.join(dirpath, f)
            rel = os.path.relpath(p, root)
            if rel == "manifest.json":
                continue
            with open(p, "rb") as fh:
                out[rel.replace(os.sep, "/")] = hashlib.sha256(fh.read()).hexdigest()
    return dict(sorted(out.items()))


def run_experiment(cfg: ExperimentConfig, output: str = None) -> dict:
    """Run every seed and analysis of ``cfg`` into ``output`` (default
    ``cfg.output``).  On failure the directory is removed and an
    :class:`ExperimentError` naming the stage and seed is raised."""
    root = output or cfg.output
    created = not os.path.exists(root)
    if not created and os.listdir(root):
        raise ConfigError(f"output directory {root!r} exists and is not empty")
    os.makedirs(root, exist_ok=True)
    t0 = time.perf_counter()
    try:
        per_seed = [_run_seed(cfg, s, os.path.join(root, f"seed_{s}")) for s in cfg.seeds]
        dep = _run_dependence(cfg, root) if "dependence" in cfg.analyses else None
        pim = _run_pimax(cfg, root) if "pimax_scaling" in cfg.analyses else None
        summ = _summarise(cfg, per_seed, dep, pim)
        _write(os.path.join(root, "summary.json"), _json(summ))
        manifest = {"config": cfg.to_dict(), "config_hash": cfg.digest(), "seeds": list(cfg.seeds),
                    "versions": _versions(), "wall_time_s": time.perf_counter() - t0,
                    "files": _file_hashes(root)}
        _write(os.path.join(root, "manifest.json"), _json(manifest))
    except BaseException:
        if created:
            shutil.rmtree(root, ignore_errors=True)
        else:
            for entry in os.listdir(root):
                p = os.path.join(root, entry)
                shutil.rmtree(p, ignore_errors=True) if os.path.isdir(p) else os.remove(p)
        raise
    return summ


def config_from_manifest(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)["config"]
    model = d.pop("model")
    d["model"] = model
    d["complex"] = d.pop("complex_type")
    return config_from_dict(d)


def _set_path(d, path, value):
    keys = path.split(".")
    cur = d
    for k in keys[:-1]:
        cur = cur.setdefault(k, {})
    cur[keys[-1]] = value


def _cell_job(args):
    cfg_dict, out = args
    cfg = config_from_dict(cfg_dict)
    try:
        return run_experiment(cfg, out), None
    except UniPersError as exc:
        return None, str(exc)


def sweep(template: dict, grid: dict, output: str, workers: int = 1) -> list:
    """Run ``template`` once per cell of the cartesian ``grid``.

    ``grid`` maps dotted config paths (``"model.r_in"``) to value lists.
    Each cell runs into ``output/cell_<i>``; failures are recorded and the
    sweep continues.  Writes ``aggregate.csv`` with one row per
    (cell, analysis) and returns the rows.
    """
    if not grid or any(not isinstance(v, list) or not v for v in grid.values()):
        raise ConfigError("sweep grid must map each parameter to a nonempty list")
    keys = sorted(grid)
    cells = list(itertools.product(*(grid[k] for k in keys)))
    base = json.loads(json.dumps(template))
    base.pop("output", None)
    analyses = base.get("analyses", ["ks", "B"])
    config_from_dict(dict(base, output=output))          # validate the template once
    os.makedirs(output, exist_ok=True)
    jobs = []
    for i, cell in enumerate(cells):
        d = json.loads(json.dumps(base))
        for k, v in zip(keys, cell):
            _set_path(d, k, v)
        jobs.append((d, os.path.join(output, f"cell_{i}")))
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            results = list(ex.map(_cell_job, jobs))
    else:
        results = [_cell_job(j) for j in jobs]
    rows = []
    for i, (cell, (summ, err)) in enumerate(zip(cells, results)):
        for a in analyses:
            rows.append({"cell": i, **dict(zip(keys, cell)), "analysis": a,
                         "value": None if summ is None else summ.get(a),
                         "error": "" if err is None else err})
    header = ["cell", *keys, "analysis", "value", "error"]
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(_cell_str(r[h]) for h in header))
    _write(os.path.join(output, "aggregate.csv"), "\n".join(lines) + "\n")
    return rows


def _cell_str(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    s = str(v)
    return '"' + s.replace('"', '""') + '"' if ("," in s or '"' in s or "\n" in s) else s
