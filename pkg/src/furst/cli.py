"""Command-line entry point: ``furst run | scan-slambda | validate``."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import BudgetExceeded, ConfigError, DomainError, FurstError, UndersampledError
from .experiments import ExperimentConfig, run

EXIT_OK, EXIT_FAILURE, EXIT_CONFIG, EXIT_RESOURCES, EXIT_DOMAIN = 0, 1, 2, 3, 4


def exit_code(err: FurstError) -> int:
    if isinstance(err, ConfigError):
        return EXIT_CONFIG
    if isinstance(err, (BudgetExceeded, UndersampledError)):
        return EXIT_RESOURCES
    if isinstance(err, DomainError):
        return EXIT_DOMAIN
    return EXIT_FAILURE


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="furst", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the experiment described by a JSON config")
    r.add_argument("--config", required=True)
    r.add_argument("--seed", type=int)
    r.add_argument("--out", help="override output_dir")
    s = sub.add_parser("scan-slambda", help="dimension scan over the S_lambda family")
    s.add_argument("--lambdas", required=True, help="comma-separated values, e.g. 2,3,1/4")
    s.add_argument("--out", required=True)
    s.add_argument("--seed", type=int)
    s.add_argument("--config", help="base config supplying estimator settings")
    v = sub.add_parser("validate", help="check a config against the schema")
    v.add_argument("--config", required=True)
    return p


def _read(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e


def _load(args) -> ExperimentConfig:
    data = _read(args.config) if args.config else {}
    if args.command == "scan-slambda":
        data.pop("generators", None)
        data.update(experiment="scan-slambda", lambda_grid=[t.strip() for t in args.lambdas.split(",") if t.strip()])
    if getattr(args, "out", None):
        data["output_dir"] = args.out
    if getattr(args, "seed", None) is not None:
        data["seed"] = args.seed
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _load(args)
        if args.command == "validate":
            print(f"ok: {cfg.experiment}")
            return EXIT_OK
        report = run(cfg)
    except FurstError as e:
        print(f"error [{e.code}]: {e}", file=sys.stderr)
        return exit_code(e)
    print(f"{cfg.experiment}: {len(report['rows'])} row(s) written to {cfg.output_dir}/table.csv")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
