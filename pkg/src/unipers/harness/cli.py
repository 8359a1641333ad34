"""Command-line interface: ``unipers <subcommand> ...``.

Exit codes: 0 success, 2 configuration/usage error, 3 data error,
4 numeric or integration error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .. import dependence as DEP
from .. import inference as INF
from .. import universality as U
from ..errors import ConfigError, UniPersError
from ..persistence import read_diagram_csv
from .config import load_config
from .io import ingest_pointcloud_csv
from .models import SAMPLER_PARAMS, ModelSpec
from .runner import diagram_for, noise_tau, run_experiment, config_from_manifest, sweep


def _value(text):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    if text in ("true", "false"):
        return text == "true"
    return text


def _params(pairs):
    out = {}
    for p in pairs or []:
        if "=" not in p:
            raise ConfigError(f"--param expects key=value, got {p!r}")
        k, v = p.split("=", 1)
        out[k.strip()] = _value(v.strip())
    return out


def _emit(args, text, default_name):
    if args.out:
        path = args.out
        if os.path.isdir(path):
            path = os.path.join(path, default_name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _tau(text):
    if text in (None, "auto", "inf"):
        return text or "auto"
    return float(text)


def _load_cloud(path, header):
    return ingest_pointcloud_csv(path, header=header)


def _diagram_from(args):
    dg = read_diagram_csv(args.diagram)
    if args.k not in dg:
        raise ConfigError(f"{args.diagram} has no degree-{args.k} rows")
    D = dg[args.k]
    return type(D)(D.k, D.births, D.deaths, args.tau_value if args.tau_value else math.inf,
                   0, args.complex)


def cmd_sample(args):
    spec = ModelSpec(args.sampler, args.n, _params(args.param))
    cloud = spec(args.seed)
    rows = "".join(",".join(repr(float(v)) for v in r) + "\n" for r in cloud.points)
    if args.header:
        rows = ",".join(f"x{i}" for i in range(cloud.ambient_dim)) + "\n" + rows
    _emit(args, rows, "cloud.csv")


def cmd_ingest(args):
    cloud = _load_cloud(args.input, args.header)
    info = {"n": cloud.n, "ambient_dim": cloud.ambient_dim, "model_tag": cloud.model_tag}
    _emit(args, json.dumps(info, indent=2) + "\n", "ingest.json")


def cmd_persist(args):
    cloud = _load_cloud(args.input, args.header)
    dgms = [diagram_for(cloud, args.complex, k, _tau(args.tau)) for k in args.k]
    lines = ["k,birth,death"]
    for D in dgms:
        lines.extend(D.to_csv().splitlines()[1:])
    text = "\n".join(lines) + "\n"
    if args.format == "json":
        text = json.dumps([{"k": D.k, "tau": D.tau, "n_points": D.n_points,
                            "pairs": [[b, "inf" if math.isinf(d) else d] for b, d in D.pairs]}
                           for D in dgms], indent=2) + "\n"
    _emit(args, text, "diagram.csv" if args.format == "csv" else "diagram.json")


def cmd_analyze(args):
    D = _diagram_from(args)
    pis = U.pi_values(D, exclude_infinite=True)
    lv = U.l_values(pis, args.complex, exclude_top=args.exclude_top)
    rep = U.report(D, args.complex, exclude_top=args.exclude_top)
    if args.format == "json" or not args.out:
        _emit(args, json.dumps(rep, indent=2, sort_keys=True) + "\n", "report.json")
        return
    os.makedirs(args.out, exist_ok=True)
    U.write_rows(os.path.join(args.out, "pi_cdf.csv"), "x,F", U.ecdf(pis.values).rows())
    U.write_rows(os.path.join(args.out, "l_cdf.csv"), "x,F", U.ecdf(lv.values).rows())
    x, f = U.kde(lv.values)
    U.write_rows(os.path.join(args.out, "kde.csv"), "x,f", zip(x, f))
    U.write_rows(os.path.join(args.out, "qq.csv"), "theoretical,empirical", U.qq_against_lgumbel(lv.values))
    with open(os.path.join(args.out, "report.json"), "w") as fh:
        fh.write(json.dumps(rep, indent=2, sort_keys=True) + "\n")


def cmd_test(args):
    D = _diagram_from(args)
    rep = INF.signal_cycles(D, args.complex, args.alpha, allow_infinite=args.tau_value is not None)
    if args.format == "csv":
        rows = ["birth,death,pi,l,p,significant"]
        for c in rep.cycles:
            rows.append(f"{float(c.birth)!r},{'inf' if math.isinf(c.death) else repr(float(c.death))},"
                        f"{float(c.pi)!r},{float(c.l)!r},{float(c.p)!r},{int(c.significant)}")
        _emit(args, "\n".join(rows) + "\n", "test.csv")
    else:
        _emit(args, rep.to_json() + "\n", "report.json")


def cmd_threshold(args):
    cloud = _load_cloud(args.input, args.header)
    tau0 = args.tau0 if args.tau0 else noise_tau(cloud.points)
    D, rep, trace = INF.threshold_search(cloud.points, args.complex, args.k, args.alpha, tau0, args.policy)
    out = rep.as_dict()
    out["final_tau"] = trace.final_tau
    out["policy"] = trace.policy
    out["iterations"] = trace.iterations
    _emit(args, json.dumps(out, indent=2, default=U._json_default) + "\n", "report.json")


def cmd_dependence(args):
    if args.synthetic:
        s = DEP.synthetic_lgumbel(args.N, args.m, args.seed)
    else:
        from .runner import _DiagramFn
        spec = ModelSpec(args.sampler, args.n, _params(args.param))
        s = DEP.collect_l_vectors(spec, _DiagramFn(args.complex, args.k, _tau(args.tau)), args.complex,
                                  args.N, args.m, args.seed, workers=args.workers)
    summ = DEP.summary(s)
    if args.out and args.format == "csv":
        os.makedirs(args.out, exist_ok=True)
        DEP.write_matrix(os.path.join(args.out, "cov.csv"), DEP.covariance_matrix(s))
        DEP.write_matrix(os.path.join(args.out, "dcov.csv"), DEP.dcov_matrix(s))
        with open(os.path.join(args.out, "dependence.json"), "w") as fh:
            fh.write(json.dumps(summ, indent=2, sort_keys=True) + "\n")
    else:
        _emit(args, json.dumps(summ, indent=2, sort_keys=True) + "\n", "dependence.json")


def cmd_run(args):
    if args.manifest:
        cfg = config_from_manifest(args.config)
    else:
        cfg = load_config(args.config)
    summ = run_experiment(cfg, args.out)
    sys.stdout.write(json.dumps(summ, indent=2, sort_keys=True) + "\n")


def cmd_sweep(args):
    import sys as _sys
    if _sys.version_info >= (3, 11):
        import tomllib
    else:
        import tomli as tomllib
    with open(args.config, "rb") as fh:
        template = tomllib.load(fh)
    with open(args.grid, "rb") as fh:
        grid = tomllib.load(fh)
    if set(grid) != {"grid"}:
        raise ConfigError("grid file must contain exactly one [grid] table")
    if not args.out:
        raise ConfigError("sweep needs --out")
    rows = sweep(template, grid["grid"], args.out, workers=args.workers)
    sys.stdout.write(f"{len(rows)} aggregate rows written to {os.path.join(args.out, 'aggregate.csv')}\n")


def build_parser():
    def global_flags(parser, suppress):
        # flags are accepted before or after the subcommand; the copy on each
        # subparser must not overwrite a value given before it
        d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
        parser.add_argument("--seed", type=int, default=d(0), help="top-level seed (default 0)")
        parser.add_argument("--out", default=d(None), help="output file or directory (default stdout)")
        parser.add_argument("--workers", type=int, default=d(1), help="worker processes for sweeps and trials")
        parser.add_argument("--format", choices=("csv", "json"), default=d("csv"))

    glob = argparse.ArgumentParser(add_help=False)
    global_flags(glob, True)
    p = argparse.ArgumentParser(prog="unipers", description="Universal persistence statistics toolkit.")
    global_flags(p, False)
    sub = p.add_subparsers(dest="command", required=True)

    def complex_args(sp, k_multi=False):
        sp.add_argument("--complex", choices=("rips", "alpha"), default="rips")
        if k_multi:
            sp.add_argument("--k", type=int, nargs="+", default=[1])
        else:
            sp.add_argument("--k", type=int, default=1)

    sp = sub.add_parser("sample", parents=[glob], help="draw a point cloud")
    sp.add_argument("sampler", choices=sorted(SAMPLER_PARAMS))
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--param", action="append", metavar="KEY=VALUE", help="sampler parameter (repeatable)")
    sp.add_argument("--header", action="store_true")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("ingest", parents=[glob], help="validate a point-cloud CSV")
    sp.add_argument("input")
    sp.add_argument("--header", action="store_true")
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("persist", parents=[glob], help="persistence diagram of a point-cloud CSV")
    sp.add_argument("input")
    sp.add_argument("--header", action="store_true")
    complex_args(sp, k_multi=True)
    sp.add_argument("--tau", default="auto", help="'auto', 'inf' or a radius")
    sp.set_defaults(func=cmd_persist)

    for name, func, hlp in (("analyze", cmd_analyze, "π/ℓ statistics of a diagram CSV"),
                            ("test", cmd_test, "per-cycle significance test of a diagram CSV")):
        sp = sub.add_parser(name, parents=[glob], help=hlp)
        sp.add_argument("diagram")
        complex_args(sp)
        sp.add_argument("--tau", dest="tau_value", type=float, default=None,
                        help="truncation radius the diagram was computed with (bounds infinite cycles)")
        if name == "analyze":
            sp.add_argument("--exclude-top", type=int, default=0)
        else:
            sp.add_argument("--alpha", type=float, default=0.05)
        sp.set_defaults(func=func)

    sp = sub.add_parser("threshold", parents=[glob], help="threshold search for infinite cycles")
    sp.add_argument("input")
    sp.add_argument("--header", action="store_true")
    complex_args(sp)
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--tau0", type=float, default=None)
    sp.add_argument("--policy", choices=("earliest", "latest"), default="earliest")
    sp.set_defaults(func=cmd_threshold)

    sp = sub.add_parser("dependence", parents=[glob], help="covariance and distance covariance of ℓ-vectors")
    sp.add_argument("sampler", nargs="?", default="iid")
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--param", action="append", metavar="KEY=VALUE")
    complex_args(sp)
    sp.add_argument("--tau", default="auto")
    sp.add_argument("--N", type=int, default=100)
    sp.add_argument("--m", type=int, default=25)
    sp.add_argument("--synthetic", action="store_true", help="iid LGumbel rows instead of diagrams")
    sp.set_defaults(func=cmd_dependence)

    sp = sub.add_parser("run", parents=[glob], help="run an experiment config")
    sp.add_argument("config")
    sp.add_argument("--manifest", action="store_true", help="CONFIG is a manifest.json to re-run")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", parents=[glob], help="run a config over a parameter grid")
    sp.add_argument("config")
    sp.add_argument("grid")
    sp.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UniPersError as exc:
        sys.stderr.write(f"unipers: error: {exc}\n")
        return exc.exit_code
    except (OSError, ValueError) as exc:
        sys.stderr.write(f"unipers: error: {exc}\n")
        return 3
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"unipers: error: {exc}\n")
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
