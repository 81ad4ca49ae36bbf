"""Command-line entry point.

    lgmslice run --config PATH [--method M] [--seed S] [--chains K] [--burn B]
                 [--samples N] [--latent-updates U] [--out DIR] [--jobs J]
    lgmslice gen-synthetic --seed S [--n N] [--d D] --out PATH [--noise-free]
    lgmslice diagnose --traces GLOB

Exit codes: 0 ok, 1 configuration error, 2 numerical failure, 3 I/O error.
"""

import argparse
import glob
import json
import logging
import sys

from ..diagnostics import ChainTrace, DegenerateTrace, summarize
from ..gaussian import NotPositiveDefinite
from ..samplers import ShrinkExhausted
from .config import ConfigError, load_config
from .datasets import DataValidationError, ParseError, gen_synthetic, write_synthetic
from .runner import run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("lgmslice")


class _Parser(argparse.ArgumentParser):
    """Usage mistakes are configuration errors (exit 1), not argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, "%s: error: %s\n" % (self.prog, message))


def build_parser():
    p = _Parser(prog="lgmslice", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run MCMC chains and write traces plus a summary")
    r.add_argument("--config", help="YAML or JSON experiment file")
    r.add_argument("--method", help="one method or a comma-separated list")
    r.add_argument("--dataset", help="dataset preset (mining, synthetic) or a file path")
    r.add_argument("--kind", help="dataset kind when --dataset is a path")
    r.add_argument("--seed", type=int)
    r.add_argument("--chains", type=int)
    r.add_argument("--burn", type=int)
    r.add_argument("--samples", type=int)
    r.add_argument("--latent-updates", type=int, dest="latent_updates")
    r.add_argument("--out")
    r.add_argument("--jobs", type=int)
    r.add_argument("--no-time", action="store_true",
                   help="write elapsed_s = 0 so traces are byte-reproducible")

    g = sub.add_parser("gen-synthetic", help="write a synthetic regression dataset")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--n", type=int, default=200)
    g.add_argument("--d", type=int, default=10)
    g.add_argument("--noise-var", type=float, default=0.09)
    g.add_argument("--noise-free", action="store_true")
    g.add_argument("--out", required=True)

    d = sub.add_parser("diagnose", help="summarize existing trace files")
    d.add_argument("--traces", required=True, help="glob of <method>_chain<k>.jsonl files")
    return p


def _dataset_override(args):
    if args.dataset is None:
        return None
    if args.dataset in ("mining", "synthetic"):
        return {"preset": args.dataset}
    if args.kind is None:
        raise ConfigError("--dataset PATH needs --kind")
    return {"path": args.dataset, "kind": args.kind}


def cmd_run(args):
    overrides = {
        "methods": args.method, "seed": args.seed, "chains": args.chains, "burn": args.burn,
        "samples": args.samples, "latent_updates": args.latent_updates, "out": args.out,
        "jobs": args.jobs, "dataset": _dataset_override(args),
        "record_time": False if args.no_time else None,
    }
    cfg = load_config(args.config, overrides)
    summary = run_experiment(cfg)
    for method, entry in summary["methods"].items():
        print("%-12s chains=%d  ESS=%.1f  ESS/cov=%.4g  ESS/lik=%.4g" % (
            method, entry["chains"], entry["ess"]["mean"],
            entry["per_cov_construction"]["mean"], entry["per_lik_eval"]["mean"]))
    print("wrote %s" % cfg.out)


def cmd_gen_synthetic(args):
    bundle, truth = gen_synthetic(args.seed, n=args.n, d=args.d, noise_var=args.noise_var,
                                  noise_free=args.noise_free)
    write_synthetic(args.out, bundle, truth)
    print("wrote %s (%d points, %d dims)" % (args.out, bundle.n, bundle.X.shape[1]))


def cmd_diagnose(args):
    paths = sorted(glob.glob(args.traces))
    if not paths:
        raise FileNotFoundError("no trace files match %r" % args.traces)
    traces = []
    for path in paths:
        try:
            traces.append(ChainTrace.read_jsonl(path))
        except ValueError as err:
            raise ParseError(str(err), path) from None
    summary = summarize(traces)
    json.dump(summary, sys.stdout, indent=1, sort_keys=True, default=float)
    sys.stdout.write("\n")


COMMANDS = {"run": cmd_run, "gen-synthetic": cmd_gen_synthetic, "diagnose": cmd_diagnose}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        COMMANDS[args.command](args)
    except ConfigError as err:
        print("config error: %s" % err, file=sys.stderr)
        return EXIT_CONFIG
    except (NotPositiveDefinite, ShrinkExhausted, FloatingPointError, DegenerateTrace) as err:
        print("numerical failure: %s: %s" % (type(err).__name__, err), file=sys.stderr)
        return EXIT_NUMERIC
    except (OSError, ParseError, DataValidationError) as err:
        print("I/O error: %s" % err, file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
