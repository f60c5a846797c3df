"""``orffkit`` command-line workbench.

Exit codes: 0 success, 2 invalid arguments, 3 convergence failure,
4 resource guard exceeded.
"""

import argparse
import json
import sys

import numpy as np

from . import bounds
from .errors import ConvergenceError, InvalidParameterError, OrffError, ResourceError, UnsupportedError
from .features import build_feature_map
from .kernels import KernelSpec
from .learn import SolverConfig, fit, load_model, save_model
from .workbench import data, experiments

EXIT_OK, EXIT_INVALID, EXIT_CONVERGENCE, EXIT_RESOURCE = 0, 2, 3, 4
KERNELS = ("dec", "curl", "div")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _seed(text):
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must lie in [0, 2**64), got {text}")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _nonneg_float(text):
    value = float(text)
    if not value >= 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return value


def _add_kernel(p):
    p.add_argument("--kernel", choices=KERNELS, required=True)
    p.add_argument("--dim", type=_positive_int, required=True, help="input dimension d")
    p.add_argument("--sigma", type=_positive_float, required=True, help="Gaussian bandwidth")


def _timing_flag(p):
    p.add_argument("--no-timing", action="store_true",
                   help="write 0 in the seconds column so that outputs are byte-reproducible")


def build_parser():
    parser = argparse.ArgumentParser(prog="orffkit", description="Operator-valued random Fourier features.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("approx-error", help="sup-norm kernel approximation error versus D")
    _add_kernel(p)
    p.add_argument("--dmin", type=_positive_int, default=16)
    p.add_argument("--dmax", type=_positive_int, default=4096)
    p.add_argument("--pairs", type=_positive_int, default=100)
    p.add_argument("--seeds", type=_positive_int, default=10)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", required=True)
    _timing_flag(p)

    p = sub.add_parser("variance", help="empirical variance against its upper bound")
    _add_kernel(p)
    p.add_argument("--deltas", type=_positive_int, default=20)
    p.add_argument("--mc", type=_positive_int, default=10_000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", required=True)
    _timing_flag(p)

    p = sub.add_parser("bound", help="evaluate the uniform tail bound (JSON on stdout)")
    _add_kernel(p)
    p.add_argument("--eps", type=_positive_float, required=True)
    p.add_argument("--features", type=_positive_int, required=True)
    p.add_argument("--diameter", type=_positive_float, required=True)
    p.add_argument("--appendix-ubar", action="store_true")
    p.add_argument("--seed", type=_seed, default=0)

    p = sub.add_parser("synth", help="generate a synthetic data set")
    p.add_argument("--which", choices=("curl-field", "div-field", "dec"), required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--noisy", action="store_true")
    p.add_argument("--noise-sd", type=_nonneg_float, default=0.1, help="field noise level with --noisy")
    p.add_argument("--dgen", type=_positive_int, default=10_000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("fit", help="fit an ORFF ridge model")
    p.add_argument("--data", required=True)
    p.add_argument("--kernel", choices=KERNELS, required=True)
    p.add_argument("--features", type=_positive_int, required=True)
    p.add_argument("--lambda", dest="lam", type=_nonneg_float, required=True)
    p.add_argument("--solver", choices=("stein", "cg", "sgd", "dense"), default="cg")
    p.add_argument("--sigma", type=_positive_float, default=None,
                   help="bandwidth (default: median pairwise distance of the inputs)")
    p.add_argument("--tol", type=_positive_float, default=1e-8)
    p.add_argument("--max-iter", type=_positive_int, default=None)
    p.add_argument("--epochs", type=_positive_int, default=20)
    p.add_argument("--eta0", type=_positive_float, default=None)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--model", required=True)

    p = sub.add_parser("predict", help="predict with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("learning-curve", help="RMSE versus N on the decomposable benchmark")
    p.add_argument("--nmin", type=_positive_int, default=100)
    p.add_argument("--nmax", type=_positive_int, default=10_000)
    p.add_argument("--features", type=_positive_int, default=100)
    p.add_argument("--seeds", type=_positive_int, default=10)
    p.add_argument("--dgen", type=_positive_int, default=10_000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--no-ovk", action="store_true")
    p.add_argument("--out", required=True)
    _timing_flag(p)
    return parser


def _spec(args):
    return KernelSpec.make(args.kernel, args.dim, args.sigma)


def _cmd_approx_error(args):
    grid = experiments.power_grid(args.dmin, args.dmax)
    res = experiments.run_approx_error(_spec(args), grid, args.pairs, args.seeds, args.seed,
                                       record_time=not args.no_timing)
    res.to_csv(args.out)


def _cmd_variance(args):
    res = experiments.run_variance(_spec(args), args.deltas, args.mc, args.seed,
                                   record_time=not args.no_timing)
    res.to_csv(args.out)


def _cmd_bound(args):
    inputs = bounds.bound_inputs(_spec(args), args.features, args.diameter, args.eps, seed=args.seed)
    report = bounds.theorem_bound(inputs, appendix_ubar=args.appendix_ubar)
    json.dump(report.to_dict(), sys.stdout, indent=2)
    sys.stdout.write("\n")


def _cmd_synth(args):
    if args.which == "dec":
        ds = data.synth_dec(args.n, args.dgen, args.noisy, args.seed)
    else:
        curl, div = data.synth_fields(args.n, args.noise_sd if args.noisy else 0.0, args.seed)
        ds = curl if args.which == "curl-field" else div
    data.write_csv(ds, args.out)


def _cmd_fit(args):
    ds = data.read_csv(args.data)
    sigma = args.sigma if args.sigma is not None else data.jaakkola_sigma(ds.X, args.seed)
    if args.kernel == "dec":
        spec = KernelSpec.decomposable(np.eye(ds.p), ds.d, sigma)
    else:
        if ds.p != ds.d:
            raise InvalidParameterError(f"{args.kernel}-free kernels need as many outputs as inputs")
        spec = KernelSpec.make(args.kernel, ds.d, sigma)
    fmap = build_feature_map(spec, args.features, args.seed)
    config = SolverConfig(args.solver, tol=args.tol, max_iter=args.max_iter, eta0=args.eta0,
                          epochs=args.epochs, seed=args.seed)
    save_model(fit(fmap, ds.X, ds.Y, args.lam, config), args.model)


def _cmd_predict(args):
    model = load_model(args.model)
    ds = data.read_csv(args.data, require_outputs=False)
    pred = model.predict(ds.X)
    data.write_csv(data.Dataset(ds.X, pred), args.out)


def _cmd_learning_curve(args):
    grid = experiments.n_grid(args.nmin, args.nmax)
    res = experiments.run_learning_curve(grid, D=args.features, seeds=args.seeds, D_gen=args.dgen,
                                         seed=args.seed, with_ovk=not args.no_ovk,
                                         record_time=not args.no_timing)
    res.to_csv(args.out)


COMMANDS = {
    "approx-error": _cmd_approx_error, "variance": _cmd_variance, "bound": _cmd_bound,
    "synth": _cmd_synth, "fit": _cmd_fit, "predict": _cmd_predict,
    "learning-curve": _cmd_learning_curve,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (InvalidParameterError, UnsupportedError, OSError) as exc:
        print(f"orffkit: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConvergenceError as exc:
        print(f"orffkit: convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ResourceError as exc:
        print(f"orffkit: resource guard: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except OrffError as exc:
        print(f"orffkit: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
