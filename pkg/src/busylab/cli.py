"""Command-line entry point.

Subcommands: cycles, tail, fit, profile, tilt, risk, joint, verify.  An
experiment comes from --preset or from a JSON --config file; --n, --seed,
--workers override the loaded values.  Results land in --out as CSV/JSON
with the resolved config embedded.  Module errors exit nonzero with a
machine-readable JSON error on stderr.
"""

import argparse
import json
import logging
import sys
from dataclasses import replace

from .errors import BusyLabError, ConfigError
from .experiments import (COMMAND_RUNNERS, ExperimentConfig, PRESETS,
                          load_preset, verify_outputs)
from .estimation import MODEL_LOGLOG, MODEL_STRETCHED


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="busylab",
        description="Monte Carlo laboratory for busy-cycle area functionals "
                    "of GI/GI/1 queues")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="progress logging to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="JSON experiment config file")
        p.add_argument("--preset", help=f"named preset ({', '.join(sorted(PRESETS))})")
        p.add_argument("--n", type=int, help="override n_cycles")
        p.add_argument("--seed", type=int, help="override master_seed")
        p.add_argument("--workers", type=int, help="override worker count")
        p.add_argument("--out", required=True, help="output directory")

    add_common(sub.add_parser("cycles", help="simulate cycles; per-cycle CSV + summary"))
    add_common(sub.add_parser("tail", help="tail estimates with overlaid asymptotics"))
    p_fit = sub.add_parser("fit", help="parametric tail fit")
    add_common(p_fit)
    p_fit.add_argument("--model", choices=[MODEL_STRETCHED, MODEL_LOGLOG],
                       help="override the fit model")
    p_prof = sub.add_parser("profile", help="conditional path profile")
    add_common(p_prof)
    p_prof.add_argument("--x-level", type=float,
                        help="explicit conditioning level (default: quantile)")
    add_common(sub.add_parser("tilt", help="importance-sampling bridge"))
    add_common(sub.add_parser("risk", help="finite-horizon negative-part integral"))
    p_joint = sub.add_parser("joint", help="bivariate parallel-server joint tails")
    add_common(p_joint)
    p_joint.add_argument("--b", type=float, help="service proportionality factor")
    p_joint.add_argument("--a", help="comma-separated joint-level factors")
    p_ver = sub.add_parser("verify", help="re-run an output directory and diff")
    p_ver.add_argument("--dir", required=True, help="directory to verify")
    return parser


def _load_config(args) -> ExperimentConfig:
    if bool(args.config) == bool(args.preset):
        raise ConfigError("exactly one of --config or --preset is required")
    if args.preset:
        command, cfg = load_preset(args.preset)
        if command != args.command and args.command not in ("cycles", "tail"):
            # presets are bound to a command; allow reuse only where harmless
            raise ConfigError(
                f"preset {args.preset!r} belongs to the {command!r} subcommand")
    else:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        cfg = ExperimentConfig.from_config(raw.get("config", raw))
    if args.n is not None:
        cfg = replace(cfg, n_cycles=args.n)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    if args.workers is not None:
        cfg = replace(cfg, workers=args.workers)
    return cfg


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(message)s")
    try:
        if args.command == "verify":
            report = verify_outputs(args.dir)
            print(json.dumps(report, indent=2, sort_keys=True))
            return 0 if report["ok"] else 1
        cfg = _load_config(args)
        runner = COMMAND_RUNNERS[args.command]
        if args.command == "fit":
            runner(cfg, model=args.model, out_dir=args.out)
        elif args.command == "profile":
            runner(cfg, x_level=args.x_level, out_dir=args.out)
        elif args.command == "joint":
            a_values = ([float(a) for a in args.a.split(",")]
                        if args.a else None)
            runner(cfg, b=args.b, a_values=a_values, out_dir=args.out)
        else:
            runner(cfg, out_dir=args.out)
        print(json.dumps({"ok": True, "out": args.out}, sort_keys=True))
        return 0
    except ConfigError as exc:
        json.dump({"error": "ConfigError", "messages": exc.violations},
                  sys.stderr, sort_keys=True)
        sys.stderr.write("\n")
        return 2
    except BusyLabError as exc:
        json.dump({"error": type(exc).__name__, "messages": [str(exc)]},
                  sys.stderr, sort_keys=True)
        sys.stderr.write("\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
