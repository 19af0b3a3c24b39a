"""Command-line interface.

    levykm simulate            --model M.json --samples N --dt H --seed S --out data.csv
    levykm estimate-levy       --data data.csv --out levy.json [--eps --m --N --bins lo:hi]
    levykm estimate-drift      --data data.csv --levy levy.json --out drift.json
    levykm estimate-diffusion  --data data.csv --levy levy.json --out diffusion.json
    levykm pipeline            --model M.json --samples N --dt H --seed S --out DIR
    levykm error-scan          --model M.json --vary M --values 1e5,1e6 --out scan.csv

Failures print a JSON object on stderr and exit with status 1.
"""

import argparse
import json
import sys

from . import io
from .learner import LearnConfig, learn_diffusion, learn_drift
from .levy_estimator import EstimationConfig, estimate_levy
from .pipeline import SCAN_MODES, RunConfig, error_scan, run_pipeline, simulate, write_scan_csv


def _bins(text):
    try:
        lo, hi = (int(t) for t in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError("--bins expects lo:hi, e.g. 10:25") from None
    if not 1 <= lo <= hi:
        raise argparse.ArgumentTypeError("--bins needs 1 <= lo <= hi")
    return tuple(range(lo, hi + 1))


def _dict_degree(text):
    kind, _, deg = text.partition(":")
    if kind != "poly" or not deg.isdigit():
        raise argparse.ArgumentTypeError("--dict expects poly:<degree>")
    return int(deg)


def _values(text):
    try:
        return [float(v) for v in text.split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError("--values expects comma-separated numbers") from None


def _add_levy_flags(p, eps_default=0.5):
    p.add_argument("--eps", type=float, default=eps_default, help="inner jump threshold")
    p.add_argument("--m", type=float, default=5.0, help="geometric interval ratio")
    p.add_argument("--N", type=int, default=1, help="intervals per sign minus one")
    p.add_argument("--bins", type=_bins, default=tuple(range(10, 26)),
                   help="range of bin counts Nc, inclusive (default 10:25)")


def _add_fit_flags(p, degree):
    p.add_argument("--dict", dest="degree", type=_dict_degree, default=degree,
                   help=f"polynomial dictionary (default poly:{degree})")
    p.add_argument("--method", choices=("sindy", "ssr"), default=None,
                   help="sparse solver (default: ssr with binning for n <= 3, sindy otherwise)")
    p.add_argument("--kcv", type=int, default=5, help="cross-validation folds")
    p.add_argument("--lambda", dest="lam", type=float, default=0.05, help="SINDy threshold")


def _add_sim_flags(p):
    p.add_argument("--model", required=True)
    p.add_argument("--samples", type=int, default=10 ** 6)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trajectories", type=int, default=None,
                   help="number of trajectories (trajectory mode)")
    p.add_argument("--T", type=float, default=None, help="trajectory duration")
    p.add_argument("--workers", type=int, default=1)


def build_parser():
    parser = argparse.ArgumentParser(prog="levykm", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a pair dataset")
    _add_sim_flags(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("estimate-levy", help="estimate alpha, beta and sigma")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", default=None, help="take the estimation window from this model")
    _add_levy_flags(p)
    _add_fit_flags(p, 4)

    for name in ("estimate-drift", "estimate-diffusion"):
        p = sub.add_parser(name, help=f"learn the {name.split('-')[1]} term")
        p.add_argument("--data", required=True)
        p.add_argument("--levy", default=None, help="levy.json; omit for data without jumps")
        p.add_argument("--out", required=True)
        p.add_argument("--eps", type=float, default=1.0, help="cube half-width")
        _add_fit_flags(p, 3)

    p = sub.add_parser("pipeline", help="simulate (or load) and run every stage")
    _add_sim_flags(p)
    p.add_argument("--data", default=None)
    p.add_argument("--out", required=True)
    _add_levy_flags(p)
    p.add_argument("--learn-eps", type=float, default=1.0, help="cube half-width for drift/diffusion")
    _add_fit_flags(p, 3)

    p = sub.add_parser("error-scan", help="jump-law errors over data size or time step")
    _add_sim_flags(p)
    p.add_argument("--vary", choices=SCAN_MODES, required=True)
    p.add_argument("--values", type=_values, required=True,
                   help="M values (modes M, Mh-fixed) or 1/h values (mode h)")
    p.add_argument("--seeds", type=int, default=1, help="number of seeds to average")
    p.add_argument("--out", required=True)
    _add_levy_flags(p)
    return parser


def _learn_config(args, eps):
    method = {"sindy": "sindy", "ssr": "auto", None: "auto"}[args.method]
    return LearnConfig(epsilon=eps, method=method, degree=args.degree, kcv=args.kcv,
                       lam=args.lam)


def _estimation_config(args, model=None):
    kw = {}
    if model is not None:
        kw = {"z_min": tuple(b[0] for b in model.domain), "z_max": tuple(b[1] for b in model.domain)}
    return EstimationConfig(epsilon=args.eps, m=args.m, N=args.N, Nc_list=args.bins, **kw)


def _sigma_fit_options(args):
    return {"method": args.method or "ssr", "degree": args.degree, "kcv": args.kcv,
            "lam": args.lam}


def _run_config(args):
    return RunConfig(model=args.model, M=args.samples, h=args.dt, seed=args.seed,
                     M0=args.trajectories, T=args.T, workers=args.workers)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        _dispatch(args)
    except Exception as exc:  # noqa: BLE001 - reported as machine-readable JSON
        err = {"error": type(exc).__name__, "message": str(exc)}
        if getattr(exc, "stage", None):
            err["stage"] = exc.stage
        sys.stderr.write(json.dumps(err) + "\n")
        return 1
    return 0


def _dispatch(args):
    cmd = args.command
    if cmd == "simulate":
        cfg = _run_config(args)
        cfg.validate()
        io.save_dataset(simulate(cfg.resolved_model(), cfg), args.out)
    elif cmd == "estimate-levy":
        data = io.load_dataset(args.data)
        model = io.load_model(args.model) if args.model else None
        est = estimate_levy(data, _estimation_config(args, model), fit=True,
                            fit_options=_sigma_fit_options(args))
        io.write_json(io.levy_to_dict(est), args.out)
    elif cmd in ("estimate-drift", "estimate-diffusion"):
        data = io.load_dataset(args.data)
        levy = io.levy_from_dict(io.read_json(args.levy)) if args.levy else None
        cfg = _learn_config(args, args.eps)
        if cmd == "estimate-drift":
            io.write_json(io.drift_to_dict(learn_drift(data, levy, cfg)), args.out)
        else:
            io.write_json(io.diffusion_to_dict(learn_diffusion(data, levy, cfg)), args.out)
    elif cmd == "pipeline":
        cfg = _run_config(args)
        cfg.data = args.data
        cfg.out = args.out
        # the estimation window defaults to the model domain inside run_pipeline
        cfg.estimation = _estimation_config(args)
        cfg.learn = _learn_config(args, args.learn_eps)
        cfg.sigma_fit = _sigma_fit_options(args)
        cfg.sigma_fit["degree"] = 4
        run_pipeline(cfg)
    elif cmd == "error-scan":
        cfg = _run_config(args)
        model = cfg.resolved_model()
        cfg.model = model
        cfg.estimation = _estimation_config(args, model)
        rows = error_scan(cfg, args.vary, args.values, seeds=range(args.seed, args.seed + args.seeds))
        write_scan_csv(rows, args.out, model.n)


if __name__ == "__main__":
    sys.exit(main())
