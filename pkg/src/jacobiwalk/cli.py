"""``jacobiwalk`` command-line interface.

Results go to standard output (and files under ``--out-dir``); progress
and errors go to standard error.  Exit codes: 0 success, 2 configuration
or domain error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import clt, config, limits
from .errors import ConfigError, DomainError, JacobiWalkError
from .hypergroup import QuadratureSpec, convolve_point_expect, convolve_sample, moment_fn
from .sampling import stream
from .specfun import JacobiParams, jacobi_phi_integral, jacobi_phi_series
from .walk import (HyperbolicSpaceSpec, WalkConfig, default_threads, hyperbolic_params,
                   simulate_walk, write_finals_csv)

log = logging.getLogger("jacobiwalk")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _fmt_complex(z: complex) -> str:
    return f"{z.real:.15g}{z.imag:+.15g}j"


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _parse_floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}") from None


def _params_from_flags(args) -> JacobiParams:
    hyper = args.field_dim is not None or args.k is not None
    plain = args.alpha is not None or args.beta is not None
    if hyper and plain:
        raise ConfigError("give either --alpha/--beta or --field-dim/--k, not both")
    if hyper:
        if args.field_dim is None or args.k is None:
            raise ConfigError("--field-dim and --k go together")
        return hyperbolic_params(HyperbolicSpaceSpec(args.field_dim, args.k))
    if args.alpha is None or args.beta is None:
        raise ConfigError("parameters missing: give --alpha and --beta (or --field-dim and --k)")
    return JacobiParams(args.alpha, args.beta)


def _dump_json(obj, path: Path | None = None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is not None:
        path.write_text(text)
    return text


def _outputs(doc: dict, args, default_prefix: str):
    out = doc.setdefault("output", {})
    if args.out_dir is not None:
        out["dir"] = args.out_dir
    if args.prefix is not None:
        out["prefix"] = args.prefix
    directory = Path(out.get("dir", "."))
    directory.mkdir(parents=True, exist_ok=True)
    return directory, out.get("prefix", default_prefix)


def _resolved(doc: dict, directory: Path, prefix: str) -> None:
    """Re-validate the config after flag overrides and store it with the results."""
    config.validate(doc)
    _dump_json(doc, directory / f"{prefix}_config.json")


# -- subcommands ----------------------------------------------------------


def cmd_eval(args) -> int:
    p = _params_from_flags(args)
    if args.route == "series":
        val = jacobi_phi_series(p, args.lam, args.t)
    else:
        quad = QuadratureSpec(args.order, args.order)
        val = jacobi_phi_integral(p, args.lam, args.t, quad)
    print(_fmt_complex(complex(val)))
    return EXIT_OK


_FUNCTIONS = {
    "identity": lambda p, lam: (lambda z: z),
    "phi": lambda p, lam: (lambda z: jacobi_phi_series(p, lam, z)),
    "m1": lambda p, lam: (lambda z: moment_fn(p, 1, z, check=False)),
}


def cmd_convolve(args) -> int:
    p = _params_from_flags(args)
    if args.mode == "expect":
        f = _FUNCTIONS[args.function](p, args.lam)
        val = complex(convolve_point_expect(p, args.s, args.t, f))
        print(_fmt_complex(val))
        return EXIT_OK
    rng = stream(args.seed, 0)
    z = convolve_sample(p, args.s, args.t, rng, size=args.count)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["distance"])
    for x in z:
        w.writerow([repr(float(x))])
    return EXIT_OK


def cmd_moments(args) -> int:
    p = _params_from_flags(args)
    ts = np.asarray(args.t, dtype=float)
    vals = np.atleast_1d(moment_fn(p, args.order, ts))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["t", f"m_{args.order}"])
    for t, v in zip(ts, vals):
        w.writerow([repr(float(t)), repr(float(v))])
    return EXIT_OK


def _load(args, kind: str) -> dict:
    doc = copy.deepcopy(config.load(args.config))
    if doc["experiment"]["type"] != kind:
        raise ConfigError(f"config describes a {doc['experiment']['type']!r} experiment, "
                          f"not {kind!r}")
    if getattr(args, "seed", None) is not None:
        doc["seed"] = args.seed
    return doc


def cmd_walk(args) -> int:
    doc = _load(args, "walk")
    exp = doc["experiment"]
    for flag, key in (("replicas", "replicas"), ("steps", "steps"),
                      ("compression_exponent", "compression_exponent")):
        if getattr(args, flag) is not None:
            exp[key] = getattr(args, flag)
    directory, prefix = _outputs(doc, args, "walk")
    if args.paths:
        doc["output"]["paths_csv"] = True
    _resolved(doc, directory, prefix)
    cfg = WalkConfig(config.params_of(doc), config.nu_of(doc), exp.get("compression_exponent", 0.0),
                     exp["steps"], exp["replicas"], doc.get("seed", config.DEFAULT_SEED))
    keep = bool(doc["output"].get("paths_csv", False))
    log.info("walk: %d replicas x %d steps", cfg.replicas, cfg.steps)
    res = simulate_walk(cfg, threads=args.threads, keep_paths=keep)
    finals_name = f"{prefix}_finals.csv"
    write_finals_csv(directory / finals_name, res.finals)
    summary = {
        "config": doc,
        "finals_csv": finals_name,
        "count": int(res.finals.size),
        "mean": float(np.mean(res.finals)),
        "std": float(np.std(res.finals, ddof=1)) if res.finals.size > 1 else 0.0,
        "min": float(np.min(res.finals)),
        "max": float(np.max(res.finals)),
    }
    if keep:
        paths_name = f"{prefix}_paths.csv"
        with open(directory / paths_name, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([f"step_{m}" for m in range(cfg.steps + 1)])
            for row in res.paths:
                w.writerow([repr(float(x)) for x in row])
        summary["paths_csv"] = paths_name
    sys.stdout.write(_dump_json(summary, directory / f"{prefix}_summary.json"))
    return EXIT_OK


def _run_limits(doc: dict, threads) -> limits.LimitReport:
    exp = doc["experiment"]
    check = exp["check"]
    quad = config.quad_of(doc)
    lam = exp.get("lambda", 1.0)
    slope = {"slope_max": exp["slope_max"]} if "slope_max" in exp else {}
    if check == "alpha_limit":
        config.require(exp, "t_grid", "alpha_grid")
        beta = doc["params"].get("beta")
        if beta is None:
            raise ConfigError("alpha_limit needs params.beta")
        return limits.prop_alpha_limit(beta, lam, config.grid(exp["t_grid"]),
                                       list(config.grid(exp["alpha_grid"])), threads=threads, **slope)
    if check == "coupled_limit":
        config.require(exp, "c", "d_shift", "t_grid", "beta_grid")
        return limits.prop_coupled_limit(exp["c"], exp["d_shift"], lam, config.grid(exp["t_grid"]),
                                         list(config.grid(exp["beta_grid"])), threads=threads,
                                         **slope)
    p = config.params_of(doc)
    if check == "bessel_limit":
        config.require(exp, "T", "n_grid")
        return limits.prop_bessel_limit(p, lam, exp["T"], exp["n_grid"], threads=threads, **slope)
    if check == "moment_phase":
        config.require(exp, "lambda_grid", "t_grid")
        return limits.prop_moment_phase(p, config.grid(exp["lambda_grid"]),
                                        config.grid(exp["t_grid"]), quad, threads=threads)
    if check == "exp_phase":
        config.require(exp, "lambda_grid", "t_grid")
        return limits.cor_exp_phase(p, config.grid(exp["lambda_grid"]), config.grid(exp["t_grid"]),
                                    bound=exp.get("bound"), threads=threads)
    if check == "m1_bounds":
        config.require(exp, "t_grid")
        extra = {k: exp[k] for k in ("flat_window", "flat_tol") if k in exp}
        return limits.m1_bounds(p, config.grid(exp["t_grid"]), quad=quad, **extra)
    config.require(exp, "t", "a", "r", "n_grid")
    return limits.taylor_residual(p, lam, exp["t"], exp["a"], exp["r"], exp["n_grid"],
                                  threads=threads)


def cmd_limits(args) -> int:
    doc = _load(args, "limits")
    directory, prefix = _outputs(doc, args, "limits")
    _resolved(doc, directory, prefix)
    log.info("limits: %s", doc["experiment"]["check"])
    rep = _run_limits(doc, args.threads)
    rep.write_csv(directory / f"{prefix}.csv")
    summary = rep.summary()
    summary["csv"] = f"{prefix}.csv"
    sys.stdout.write(_dump_json(summary, directory / f"{prefix}.json"))
    return EXIT_OK


def _schedule(exp: dict):
    config.require(exp, "schedule")
    s = exp["schedule"]
    return clt.power_schedule(s["coefficient"], s["power"])


def _run_clt(doc: dict, threads, keep: bool):
    exp = doc["experiment"]
    theorem = exp["theorem"]
    seed = doc.get("seed", config.DEFAULT_SEED)
    nu = config.nu_of(doc)
    quad = config.quad_of(doc)
    opt = {k: exp[k] for k in ("ks_max",) if k in exp}
    if theorem == "growing_alpha":
        beta = doc["params"].get("beta")
        if beta is None:
            raise ConfigError("growing_alpha needs params.beta")
        return clt.clt_growing_alpha(beta, _schedule(exp), nu, exp["n_grid"], exp["replicas"],
                                     seed, threads=threads, keep_samples=keep, **opt)
    if theorem == "growing_coupled":
        config.require(exp, "c", "d_shift")
        return clt.clt_growing_coupled(exp["c"], exp["d_shift"], _schedule(exp), nu,
                                       exp["n_grid"], exp["replicas"], seed, threads=threads,
                                       keep_samples=keep, **opt)
    p = config.params_of(doc)
    r = exp.get("compression_exponent", 0.0)
    cfg = WalkConfig(p, nu, r, max(exp["n_grid"]), exp["replicas"], seed)
    if theorem == "fixed":
        if "slope_max" in exp:
            opt["slope_max"] = exp["slope_max"]
        return clt.clt_fixed_params(cfg, exp["n_grid"], quad=quad, threads=threads,
                                    keep_samples=keep, **opt)
    if theorem == "rayleigh":
        return clt.clt_rayleigh(cfg, exp["n_grid"], threads=threads, keep_samples=keep, **opt)
    if theorem == "regimes":
        if "bias_allowance" in exp:
            opt["bias_allowance"] = exp["bias_allowance"]
        return clt.clt_regimes(cfg, exp["n_grid"], regime=exp.get("regime", "auto"),
                               threads=threads, keep_samples=keep, **opt)
    config.require(exp, "c_grid")
    return clt.tail_bound_check(cfg, list(config.grid(exp["c_grid"])), exp["n_grid"], quad,
                                threads=threads)


def cmd_clt(args) -> int:
    doc = _load(args, "clt")
    exp = doc["experiment"]
    if args.replicas is not None:
        exp["replicas"] = args.replicas
    if args.regime is not None:
        if exp["theorem"] != "regimes":
            raise ConfigError("--regime applies to the 'regimes' theorem only")
        exp["regime"] = args.regime if args.regime == "auto" else int(args.regime)
    directory, prefix = _outputs(doc, args, "clt")
    if args.samples:
        doc["output"]["samples_csv"] = True
    _resolved(doc, directory, prefix)
    keep = bool(doc["output"].get("samples_csv", False))
    log.info("clt: %s", exp["theorem"])
    rep = _run_clt(doc, args.threads, keep)
    if isinstance(rep, dict):
        out = rep
    else:
        out = rep.to_dict()
        if keep and rep.samples:
            rep.write_samples_csv(directory / f"{prefix}_samples.csv")
            out["samples_csv"] = f"{prefix}_samples.csv"
    out["config_file"] = f"{prefix}_config.json"
    sys.stdout.write(_dump_json(out, directory / f"{prefix}.json"))
    return EXIT_OK


# -- parser ---------------------------------------------------------------


def _param_flags(sp) -> None:
    g = sp.add_argument_group("parameters")
    g.add_argument("--alpha", type=float)
    g.add_argument("--beta", type=float)
    g.add_argument("--field-dim", type=int, choices=(1, 2, 4),
                   help="hyperbolic space over R (1), C (2) or H (4)")
    g.add_argument("--k", type=int, help="dimension over the field, >= 2")


def _threads(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("--threads must be >= 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=_threads, default=None,
                        help="worker threads (default: $JACOBIWALK_THREADS or all cores)")
    common.add_argument("-v", "--verbose", action="store_true", help="progress on stderr")

    ap = argparse.ArgumentParser(prog="jacobiwalk", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    e = sub.add_parser("eval", parents=[common], help="evaluate a Jacobi function")
    _param_flags(e)
    e.add_argument("--lambda", dest="lam", type=_parse_complex, required=True)
    e.add_argument("--t", type=float, required=True)
    e.add_argument("--route", choices=("series", "integral"), default="series")
    e.add_argument("--order", type=int, default=48, help="starting quadrature order")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("convolve", parents=[common], help="point convolution delta_s * delta_t")
    _param_flags(c)
    c.add_argument("--s", type=float, required=True)
    c.add_argument("--t", type=float, required=True)
    c.add_argument("--mode", choices=("expect", "sample"), default="expect")
    c.add_argument("--function", choices=sorted(_FUNCTIONS), default="identity")
    c.add_argument("--lambda", dest="lam", type=_parse_complex, default=0j)
    c.add_argument("--count", type=int, default=1000)
    c.add_argument("--seed", type=int, default=config.DEFAULT_SEED)
    c.set_defaults(func=cmd_convolve)

    m = sub.add_parser("moments", parents=[common], help="moment functions m_k on a t list")
    _param_flags(m)
    m.add_argument("--order", type=int, default=1, help="moment order k >= 1")
    m.add_argument("--t", type=_parse_floats, required=True, help="comma-separated t values")
    m.set_defaults(func=cmd_moments)

    for name, fn, helptext in (("walk", cmd_walk, "simulate a Jacobi random walk"),
                               ("limits", cmd_limits, "certify a limit proposition"),
                               ("clt", cmd_clt, "run a central limit experiment")):
        s = sub.add_parser(name, parents=[common], help=helptext)
        s.add_argument("--config", required=True, help="JSON experiment file")
        s.add_argument("--out-dir")
        s.add_argument("--prefix")
        if name in ("walk", "clt"):
            s.add_argument("--seed", type=int)
            s.add_argument("--replicas", type=int)
        if name == "walk":
            s.add_argument("--steps", type=int)
            s.add_argument("--compression-exponent", type=float)
            s.add_argument("--paths", action="store_true", help="also write full trajectories")
        if name == "clt":
            s.add_argument("--regime", choices=("auto", "1", "2", "3"))
            s.add_argument("--samples", action="store_true",
                           help="also write the normalized samples as CSV")
        s.set_defaults(func=fn)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(stream=sys.stderr, format="%(name)s: %(message)s",
                        level=logging.INFO if args.verbose else logging.WARNING)
    try:
        if args.threads is None and args.command in ("walk", "limits", "clt"):
            args.threads = default_threads()
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"jacobiwalk: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, JacobiWalkError) as exc:
        print(f"jacobiwalk: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
