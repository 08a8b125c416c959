"""Command line entry point.

    shesim --method replacement --L 10 --M 10 --N 5000 --stat vt --reps 500 \
           --out-report temporal.json

Exit codes: 0 success, 2 usage error, 3 invalid parameters or configuration,
4 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .harness import ExperimentConfig, ExperimentError, run_experiment
from .model import Grid, Parameters, DEFAULT_PARAMETERS

EXIT_USAGE = 2
EXIT_INVALID = 3
EXIT_RUNTIME = 4

DEFAULTS = {
    "sigma2": DEFAULT_PARAMETERS.sigma2,
    "theta2": DEFAULT_PARAMETERS.theta2,
    "theta1": DEFAULT_PARAMETERS.theta1,
    "theta0": DEFAULT_PARAMETERS.theta0,
    "N": 100,
    "M": 100,
    "T": 1.0,
    "L": None,
    "K": None,
    "cutoff": None,
    "method": "replacement",
    "init": "stationary",
    "stat": "none",
    "reps": 1,
    "seed": 0,
    "out_field": None,
    "out_report": None,
    "threads": 1,
}

KEY_TYPES = {
    "sigma2": float, "theta2": float, "theta1": float, "theta0": float,
    "N": int, "M": int, "T": float, "L": int, "K": int, "cutoff": int,
    "method": str, "init": str, "stat": str, "reps": int, "seed": int,
    "out_field": str, "out_report": str, "threads": int,
}


class UsageError(ValueError):
    pass


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="shesim",
        description="Sample the stochastic heat equation on a space-time grid and "
        "compute normalized quadratic variations over Monte Carlo reps.",
        argument_default=argparse.SUPPRESS,
    )
    ap.add_argument("--config", help="JSON file with any of the keys below; flags override it")
    g = ap.add_argument_group("model")
    for name in ("sigma2", "theta2", "theta1", "theta0"):
        g.add_argument(f"--{name}", type=float)
    g = ap.add_argument_group("grid")
    g.add_argument("--N", type=int, help="temporal steps (default 100)")
    g.add_argument("--M", type=int, help="spatial intervals (default 100)")
    g.add_argument("--T", type=float, help="time horizon (default 1)")
    g = ap.add_argument_group("method")
    g.add_argument("--method", choices=("replacement", "truncation", "oracle"))
    g.add_argument("--L", type=int, help="replacement cutoff multiplier (default 1)")
    g.add_argument("--K", type=int, help="number of retained modes for truncation")
    g.add_argument("--cutoff", type=int, help="series cutoff for the oracle")
    g.add_argument("--init", choices=("zero", "stationary"))
    g = ap.add_argument_group("experiment")
    g.add_argument("--stat", choices=("vt", "vsp", "none"))
    g.add_argument("--reps", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--threads", type=int)
    g.add_argument("--out-field", dest="out_field", help="CSV for the rep-0 field")
    g.add_argument("--out-report", dest="out_report", help="JSON report path")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def _load_config_file(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"config: cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config: top level must be an object")
    out = {}
    for key, value in data.items():
        norm = key.replace("-", "_")
        if norm not in KEY_TYPES:
            raise UsageError(f"config: unknown key {key!r}")
        if value is not None:
            try:
                value = KEY_TYPES[norm](value)
            except (TypeError, ValueError) as exc:
                raise UsageError(f"config: bad value for {key!r}: {value!r}") from exc
        out[norm] = value
    return out


def parse_cli(argv=None) -> ExperimentConfig:
    """Parse flags (and an optional JSON config file) into a configuration.

    Raises :class:`UsageError` for flag/method mismatches and ``ValueError``
    for invalid parameters; argparse itself exits on unknown flags.
    """
    ns = vars(build_parser().parse_args(argv))
    ns.pop("verbose", None)
    values = dict(DEFAULTS)
    given = set(ns) - {"config"}
    if "config" in ns:
        from_file = _load_config_file(ns["config"])
        values.update(from_file)
        given |= {k for k, v in from_file.items() if v is not None}
    values.update({k: v for k, v in ns.items() if k != "config"})

    method = values["method"]
    if method != "replacement" and "L" in given:
        raise UsageError(f"L: only valid with --method replacement (got {method})")
    if method != "truncation" and "K" in given:
        raise UsageError(f"K: only valid with --method truncation (got {method})")
    if method != "oracle" and "cutoff" in given:
        raise UsageError(f"cutoff: only valid with --method oracle (got {method})")
    if method == "truncation" and values["K"] is None:
        raise UsageError("K: required with --method truncation")

    params = Parameters(values["sigma2"], values["theta2"], values["theta1"], values["theta0"])
    grid = Grid(values["N"], values["M"], values["T"])
    return ExperimentConfig(
        parameters=params,
        grid=grid,
        init=values["init"],
        method=method,
        L=values["L"] if values["L"] is not None else 1,
        K=values["K"],
        cutoff=values["cutoff"],
        statistic=values["stat"],
        reps=values["reps"],
        seed=values["seed"],
        out_field=values["out_field"],
        out_report=values["out_report"],
        threads=values["threads"],
    )


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    logging.basicConfig(
        level=logging.INFO if ("-v" in argv or "--verbose" in argv) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = parse_cli(argv)
    except UsageError as exc:
        print(f"shesim: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"shesim: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        report = run_experiment(cfg)
    except (ExperimentError, OSError) as exc:
        print(f"shesim: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if cfg.out_report is None:
        sys.stdout.write(report.to_json())
    summary = report.summary
    if summary is not None:
        print(
            "mean {mean:+.4f}  variance {variance:.4f}  KS {ks_distance:.4f}  (n={n})".format(**summary),
            file=sys.stderr,
        )
    print(f"wall time {report.wall_time:.2f} s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
