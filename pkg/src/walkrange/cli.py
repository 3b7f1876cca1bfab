"""Command-line entry point.

Settings come from, lowest precedence first: the config file, ``RWRANGE_*``
environment variables, ``--set KEY=VALUE`` options, then the named flags.
"""
import argparse
import os
from pathlib import Path
import sys

from .codec import CodecError, decode_range
from .geometry import inner_boundary
from .harness import (
    ENV_PREFIX,
    ConfigError,
    ExperimentConfig,
    load_config,
    read_results,
    report,
    run,
    write_outputs,
)

_SUBCOMMANDS = {
    "simulate": "simulate",
    "encode": "encode",
    "entropy": "entropy",
    "lemma-check": "lemma-check",
    "extract": "extract",
    "percolation": "percolation",
    "intersect": "intersection",
}
_FLAG_KEYS = ("seed", "reps", "out", "threads")


def _add_run_flags(p):
    p.add_argument("--config", metavar="PATH", help="key=value config file")
    p.add_argument("--seed", metavar="U64", help="master seed (required for Monte Carlo experiments)")
    p.add_argument("--reps", metavar="N", help="number of replicas")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--threads", metavar="N", help="worker processes; never changes results")
    p.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                   help="override any config key, e.g. --set n=1024 (repeatable)")


def build_parser():
    parser = argparse.ArgumentParser(prog="walkrange", description="Random walk range experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, experiment in _SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"run the {experiment} experiment")
        _add_run_flags(p)
    p = sub.add_parser("decode", help="decode an RWRC stream file")
    p.add_argument("stream", help="path to a .rwrc file")
    p.add_argument("--points", metavar="CSV", help="write the decoded range as x,y rows")
    p = sub.add_parser("report", help="summarise a results directory or results.csv")
    p.add_argument("path")
    return parser


def resolve_settings(args, experiment, environ=None):
    """Merge config file, environment, ``--set`` and flags into one raw mapping."""
    environ = os.environ if environ is None else environ
    config_path = args.config or environ.get(ENV_PREFIX + "CONFIG")
    values = load_config(config_path) if config_path else {}
    declared = values.get("experiment")
    if declared is not None and declared != experiment:
        raise ConfigError(f"config declares experiment {declared!r} but the command runs {experiment!r}")
    values["experiment"] = experiment
    for key in _FLAG_KEYS:
        env = environ.get(ENV_PREFIX + key.upper())
        if env is not None:
            values[key] = env
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        values[key.strip()] = value.strip()
    for key in _FLAG_KEYS:
        flag = getattr(args, key)
        if flag is not None:
            values[key] = flag
    return values


def _run_command(args):
    experiment = _SUBCOMMANDS[args.command]
    cfg = ExperimentConfig.from_mapping(resolve_settings(args, experiment))
    out = run(cfg)
    written = write_outputs(out, cfg.out)
    shown = [w for w in written if "/" not in w]
    more = len(written) - len(shown)
    print(f"{len(out.rows)} rows; wrote {', '.join(shown)}" + (f" and {more} more files" if more else "")
          + f" to {cfg.out}")
    for line in report(out.rows):
        print(line)
    return 0


def _decode_command(args):
    R, n = decode_range(Path(args.stream).read_bytes())
    print(f"n={n} range_size={len(R)} boundary_size={len(inner_boundary(R))} bbox={R.bbox}")
    if args.points:
        Path(args.points).write_text("x,y\n" + "".join(f"{x},{y}\n" for x, y in R))
    return 0


def _report_command(args):
    lines = report(read_results(args.path))
    for line in lines:
        print(line)
    return 1 if any(line.startswith("FAIL") for line in lines) else 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "decode":
            return _decode_command(args)
        if args.command == "report":
            return _report_command(args)
        return _run_command(args)
    except (ConfigError, CodecError, ValueError, OSError) as exc:
        print(f"walkrange: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
