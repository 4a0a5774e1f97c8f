"""Command-line front end.

Every subcommand writes its outputs plus ``manifest.txt`` into ``--out-dir``.
A manifest is itself a config file: ``ebpred rerun manifest.txt`` (or
``ebpred <cmd> --config manifest.txt``) repeats the run.
"""

import argparse
import itertools
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, EBPredError
from .io import (
    git_blob_hash,
    load_csv,
    load_dataset,
    read_config,
    toy_dataset,
    write_config,
    write_csv,
    write_json,
)
from .posterior import HyperParams, InverseGamma, Known, enumerate_posterior, exact_inclusion_probs
from .predictive import bvm_diagnostic, prediction_interval, sample_predictive
from .sampler import McmcSettings, ModelSpaceTarget, inclusion_probs, run_chain, state_frequencies
from .simulate import (
    SimSetting,
    figure1_data,
    run_experiment,
    run_split_benchmark,
)

COMMANDS = ("fit", "predict", "simulate", "enumerate", "bench-splits")
# never written to manifests: they locate outputs rather than define the run
_NOT_IN_MANIFEST = {"config", "out_dir", "threads", "func"}
_INPUT_KEYS = ("x", "y", "xnew", "draws")


def _default_threads():
    try:
        return max(1, int(os.environ.get("EBPRED_THREADS", "1")))
    except ValueError:
        return 1


def _add_common(sub, data=True):
    sub.add_argument("--config", help="key=value config file; explicit flags override it")
    sub.add_argument("--out-dir", default="ebpred-out")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--threads", type=int, default=_default_threads())
    if data:
        sub.add_argument("--x", help="CSV of covariates (n x p)")
        sub.add_argument("--y", help="CSV holding the response")
        sub.add_argument("--y-col", default="0", help="response column index or header name")


def _add_hyper(sub):
    sub.add_argument("--alpha", type=float, default=0.99)
    sub.add_argument("--gamma", type=float, default=0.005)
    sub.add_argument("--a", type=float, default=0.05)
    sub.add_argument("--c", type=float, default=1.0)
    sub.add_argument("--R", type=int, default=None, help="max model size (default rank of X)")
    sub.add_argument("--sigma2", type=float, default=None, help="known error variance; omit for inverse-gamma mode")
    sub.add_argument("--ig-a0", type=float, default=0.01)
    sub.add_argument("--ig-b0", type=float, default=4.0)
    sub.add_argument("--force", action="store_true", help="allow alpha + gamma > 1")


def _add_mcmc(sub, iters=20_000, burnin=5_000):
    sub.add_argument("--iters", type=int, default=iters)
    sub.add_argument("--burnin", type=int, default=burnin)
    sub.add_argument("--thin", type=int, default=1)


def build_parser():
    parser = argparse.ArgumentParser(prog="ebpred", description="Empirical-Bayes sparse regression prediction.")
    parser.add_argument("--version", action="version", version=f"ebpred {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("fit", help="run the configuration sampler and summarize it")
    _add_common(p)
    _add_hyper(p)
    _add_mcmc(p)
    p.add_argument("--draw-sigma2", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = subs.add_parser("predict", help="predictive draws and intervals at new rows")
    _add_common(p)
    _add_hyper(p)
    _add_mcmc(p)
    p.add_argument("--xnew", help="CSV of query rows (d x p)")
    p.add_argument("--draws", help="CSV of precomputed draws (one column per query); skips fitting")
    p.add_argument("--m", type=int, default=10_000)
    p.add_argument("--level", type=float, default=0.95)
    p.set_defaults(func=cmd_predict)

    p = subs.add_parser("simulate", help="replicated AR(1) experiments")
    _add_common(p, data=False)
    _add_hyper(p)
    _add_mcmc(p)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", type=int, nargs="+", default=[125], help="one or more dimensions")
    p.add_argument("--A", type=float, nargs="+", default=[2.0], help="one or more signal sizes")
    p.add_argument("--r", type=float, nargs="+", default=[0.2], help="one or more AR(1) correlations")
    p.add_argument("--reps", type=int, default=250)
    p.add_argument("--noise-sd", type=float, default=1.0)
    p.add_argument("--signal-positions", type=int, nargs="+", default=[3, 4, 15, 22, 25])
    p.add_argument("--index-base", type=int, choices=(0, 1), default=1, help="base of --signal-positions")
    p.add_argument("--test-batch", type=int, default=1)
    p.add_argument("--m", type=int, default=10_000)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--figure1", action="store_true", help="emit predictive-vs-oracle density data instead")
    p.set_defaults(func=cmd_simulate)

    p = subs.add_parser("enumerate", help="exact posterior over all small configurations")
    _add_common(p)
    _add_hyper(p)
    p.add_argument("--toy", action="store_true", help="use the bundled 8 x 5 example data")
    p.set_defaults(func=cmd_enumerate)

    p = subs.add_parser("bench-splits", help="repeated train/test split MSPE")
    _add_common(p)
    _add_hyper(p)
    _add_mcmc(p)
    p.add_argument("--train-frac", type=float, default=0.75)
    p.add_argument("--splits", type=int, default=20)
    p.add_argument("--no-standardize", dest="standardize", action="store_false")
    p.set_defaults(func=cmd_bench_splits)

    p = subs.add_parser("rerun", help="repeat a run from its manifest")
    p.add_argument("manifest")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=None)
    return parser, subs


def _apply_config(parser, subs, args, argv):
    cfg = read_config(args.config)
    cmd = cfg.pop("command", args.command)
    if cmd != args.command:
        raise ConfigError(f"config is for {cmd!r}, not {args.command!r}")
    sub = subs.choices[args.command]
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        if key in ("version",) or key.startswith("input_hash."):
            continue
        if key not in known or key in _NOT_IN_MANIFEST:
            raise ConfigError(f"unknown config key {key!r} for {args.command}")
        action = known[key]
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            defaults[key] = value.lower() in ("1", "true", "yes")
        elif action.nargs in ("+", "*"):
            convert = action.type or str
            defaults[key] = [convert(v) for v in value.replace(",", " ").split()]
        elif action.type is not None:
            defaults[key] = action.type(value)
        else:
            defaults[key] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _hyperparams(args):
    mode = Known(args.sigma2) if args.sigma2 is not None else InverseGamma(args.ig_a0, args.ig_b0)
    return HyperParams(alpha=args.alpha, gamma=args.gamma, a=args.a, c=args.c, R=args.R, sigma_mode=mode, force=args.force)


def _mcmc(args, draw_sigma2=False):
    return McmcSettings(iters=args.iters, burnin=args.burnin, thin=args.thin, seed=args.seed, draw_sigma2=draw_sigma2)


def _dataset(args):
    if not (args.x and args.y):
        raise ConfigError("--x and --y are required")
    return load_dataset(args.x, args.y, args.y_col)


def _write_manifest(out, args):
    cfg = {k: v for k, v in vars(args).items() if k not in _NOT_IN_MANIFEST}
    cfg["version"] = __version__
    for key in _INPUT_KEYS:
        path = cfg.get(key)
        if path:
            cfg[f"input_hash.{key}"] = git_blob_hash(path)
    write_config(out / "manifest.txt", cfg)


def cmd_fit(args, out):
    data = _dataset(args)
    target = ModelSpaceTarget(data, _hyperparams(args))
    chain = run_chain(target, _mcmc(args, args.draw_sigma2))
    incl = inclusion_probs(chain, data.p)
    write_csv(out / "inclusion.csv", ["index", "prob"], enumerate(incl))
    freqs = sorted(state_frequencies(chain).items(), key=lambda kv: (-kv[1], len(kv[0]), kv[0]))
    summary = {
        "n": data.n,
        "p": data.p,
        "R": target.R,
        "iters": args.iters,
        "burnin": args.burnin,
        "thin": args.thin,
        "seed": args.seed,
        "retained": len(chain),
        "acceptance_rate": chain.acceptance_rate,
        "mean_size": float(np.mean([len(S) for S in chain.states])),
        "top_models": [{"indices": list(S), "freq": f} for S, f in freqs[:20]],
    }
    if chain.sigma2_draws is not None:
        summary["sigma2_mean"] = float(chain.sigma2_draws.mean())
    write_json(out / "chain_summary.json", summary)
    print(f"fit: acceptance={chain.acceptance_rate:.3f} top={list(freqs[0][0])} freq={freqs[0][1]:.3f}")


def cmd_predict(args, out):
    if args.draws:
        D, _ = load_csv(args.draws)
    else:
        if not args.xnew:
            raise ConfigError("predict needs --xnew (or --draws)")
        data = _dataset(args)
        Xnew, _ = load_csv(args.xnew)
        target = ModelSpaceTarget(data, _hyperparams(args))
        chain = run_chain(target, _mcmc(args))
        rng = np.random.default_rng([args.seed, 2])
        D = np.column_stack([sample_predictive(chain, target, x, args.m, rng).draws for x in Xnew])
    intervals = []
    for j in range(D.shape[1]):
        lo, hi = prediction_interval(D[:, j], args.level)
        intervals.append({"row": j, "point": float(D[:, j].mean()), "lo": lo, "hi": hi, "level": args.level})
    if not args.draws:
        write_csv(out / "draws.csv", [f"row_{j}" for j in range(D.shape[1])], D.tolist())
    write_json(out / "intervals.json", intervals)
    for iv in intervals:
        print(f"row {iv['row']}: point={iv['point']:.4g} interval=({iv['lo']:.4g}, {iv['hi']:.4g})")


def cmd_simulate(args, out):
    positions = [j - args.index_base for j in args.signal_positions]
    hp = _hyperparams(args)
    mcmc = _mcmc(args)
    header = None
    rows, timing = [], []
    for p, A, r in itertools.product(args.p, args.A, args.r):
        setting = SimSetting(
            n=args.n, p=p, A=A, r=r, signal_positions=positions, reps=args.reps,
            noise_sd=args.noise_sd, seed=args.seed, test_batch=args.test_batch,
        )
        if args.figure1:
            _figure1(setting, hp, mcmc, args, out)
            return
        report = run_experiment(setting, hp, mcmc, m=args.m, threads=args.threads, level=args.level)
        row = report.row()
        header = list(row)
        rows.append([row[k] for k in header])
        timing.append([p, A, r, report.wall_clock])
        print(
            f"p={p} A={A:g} r={r:g}: mspe={report.mspe:.3f} coverage={report.coverage:.3f} "
            f"length={report.mean_length:.3f} oracle_length={report.oracle_length:.3f} ({report.wall_clock:.1f}s)"
        )
    write_csv(out / "simulate.csv", header, rows)
    write_csv(out / "timing.csv", ["p", "A", "r", "wall_clock_s"], timing)


def _figure1(setting, hp, mcmc, args, out):
    fig = figure1_data(setting, hp, mcmc, m=args.m)
    write_csv(out / "figure1_density.csv", ["y", "oracle_density"], zip(fig["grid"], fig["density"]))
    write_csv(out / "figure1_draws.csv", ["draw"], ([d] for d in fig["draws"]))
    diag = bvm_diagnostic(
        fig["chain"], fig["target"], setting.signal_positions, fig["x"], args.m, np.random.default_rng([args.seed, 3])
    )
    write_json(out / "figure1_diagnostic.json", diag)
    print(f"figure1: ks={diag['ks']:.4f} mean_abs_diff={diag['mean_abs_diff']:.4f}")


def cmd_enumerate(args, out):
    data = toy_dataset() if args.toy else _dataset(args)
    post = enumerate_posterior(data, _hyperparams(args))
    write_csv(
        out / "posterior.csv",
        ["size", "indices", "prob"],
        ([len(S), " ".join(map(str, S)), prob] for S, prob in post),
    )
    write_csv(out / "inclusion.csv", ["index", "prob"], enumerate(exact_inclusion_probs(post, data.p)))
    best = max(post, key=lambda sp: sp[1])
    print(f"enumerate: {len(post)} configurations, mode={list(best[0])} prob={best[1]:.4f}")


def cmd_bench_splits(args, out):
    data = _dataset(args)
    res = run_split_benchmark(
        data, args.train_frac, args.splits, _hyperparams(args), _mcmc(args), seed=args.seed, standardize=args.standardize
    )
    write_csv(out / "splits.csv", ["split", "n_train", "n_test", "mspe"], ([r["split"], r["n_train"], r["n_test"], r["mspe"]] for r in res))
    mean = float(np.mean([r["mspe"] for r in res]))
    write_json(out / "summary.json", {"mean_mspe": mean, "splits": len(res)})
    print(f"bench-splits: mean mspe={mean:.4f} over {len(res)} splits")


def _error(exc):
    code = getattr(exc, "code", type(exc).__name__)
    msg = str(exc).replace("\n", " ")
    print(f"EBPRED_ERROR code={code} message={json.dumps(msg)}", file=sys.stderr)


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "rerun":
            cfg = read_config(args.manifest)
            if cfg.get("command") not in COMMANDS:
                raise ConfigError(f"{args.manifest} is not a manifest")
            argv = [cfg["command"], "--config", args.manifest]
            if args.out_dir:
                argv += ["--out-dir", args.out_dir]
            args = parser.parse_args(argv)
        if args.config:
            args = _apply_config(parser, subs, args, argv)
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_manifest(out, args)
        args.func(args, out)
    except EBPredError as exc:
        _error(exc)
        return 2
    except (OSError, ValueError) as exc:
        _error(exc)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
