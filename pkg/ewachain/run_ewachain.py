"""
run_ewachain.py

Command-line entry point (`run-ewachain`). Each subcommand runs a prefix of the per-seed
pipeline for every seed of the experiment:

    gen      generate the instance
    init     + thresholded lasso initializer
    sample   + sampler run
    oracle   + good events, assumptions, exact chain and spectral gap
    paths    + G-tree, edge loadings and the state-wise inequality checks
    mixing   + TV decay and mixing times
    suite    everything, plus event frequencies over all seeds

Configuration is layered: the packaged golden_config.json supplies the defaults, command-line
flags override them, and a --config file overrides both. Results go to ./RunResults/ unless
EWACHAIN_OUTPUT_DIR or the config's `outputs` field says otherwise.

Exit codes: 0 pass, 1 an enforced check failed, 2 invalid configuration, 3 resource cap.
"""
import argparse
import sys
from importlib import resources

from ewachain.errors import ConfigInvalid, ResourceCapExceeded
from ewachain.experiment import COMMANDS, ExperimentConfig, run_pipeline

# flag -> config field
FLAGS = {
    "n": int, "p": int, "s_star": int, "design": str, "design_file": str, "sigma": float,
    "alpha": float, "kappa": float, "beta": float, "D": float, "c": float, "L": float,
    "steps": int, "eps": float, "tv_steps": int, "outputs": str, "workers": int,
    "oracle_cap": int, "loading_cap": int, "enumeration_cap": int,
}


def golden_config():
    path = resources.files("ewachain").joinpath("golden_config.json")
    with resources.as_file(path) as config_path:
        return ExperimentConfig.from_json(config_path)


def build_parser():
    parser = argparse.ArgumentParser(prog="run-ewachain", description="Soft-boundary aggregation chain experiments.")
    parser.add_argument("command", choices=sorted(COMMANDS), help="Pipeline prefix to run.")
    parser.add_argument("--config", help="JSON experiment config; overrides the flags below.")
    parser.add_argument("--seeds", type=int, nargs="+", help="Seeds to run.")
    parser.add_argument("--eager", dest="lazy", action="store_false", default=None,
                        help="Run the sampler without the lazy holding step.")
    for name, kind in FLAGS.items():
        parser.add_argument(f"--{name.replace('_', '-')}", dest=name, type=kind, default=None)
    return parser


def config_from_args(args):
    ecfg = golden_config()
    overrides = {name: getattr(args, name) for name in list(FLAGS) + ["seeds", "lazy"] if getattr(args, name) is not None}
    if overrides:
        ecfg = ExperimentConfig.from_dict(overrides, base=ecfg)
    if args.config:
        ecfg = ExperimentConfig.from_json(args.config, base=ecfg)
    return ecfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        ecfg = config_from_args(args)
    except ConfigInvalid as e:
        print(f"Invalid configuration: {e}", file=sys.stderr)
        return 2
    try:
        status, summaries = run_pipeline(ecfg, args.command)
    except ConfigInvalid as e:
        print(f"Invalid configuration: {e}", file=sys.stderr)
        return 2
    except ResourceCapExceeded as e:
        print(f"Resource cap exceeded: {e}", file=sys.stderr)
        return 3
    for summary in summaries:
        failures = ", ".join(summary["failures"]) or "none"
        print(f"seed {summary['seed']}: status {summary['status']}, failed checks: {failures}")
    print(f"Results saved under {ecfg.output_dir()}")
    return status


if __name__ == "__main__":
    sys.exit(main())
