"""Command-line interface.

Subcommands: ``synth`` (emit benchmark datasets), ``identify`` (full
pipeline run from a config file), ``simulate`` (free-run a saved model
against a data file), ``validate`` (residual tests for a saved model).

Exit codes: 0 success, 1 identification failure, 2 usage or configuration
error, 3 data or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__
from .benchmarks import Multitone, Prbs, WhiteNoise, dc_motor_reference, generate_signal
from .dataio import (
    RunConfig,
    apply_config_values,
    ingest_csv,
    load_model,
    parse_config_file,
    render_report,
    write_timeseries_csv,
)
from .errors import (
    ConfigError,
    DataError,
    DivergenceError,
    IdentificationError,
    InsufficientDataError,
    NarxidError,
)
from .pipeline import identify
from .search import SearchConfig
from .simulation import predict_one_step, simulate_free_run
from .validation import residual_tests

SYNTH_CASES = ("dc-motor-white", "dc-motor-multitone", "dc-motor-prbs")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="narxid",
        description="Polynomial ARX/NARX identification from input-output data",
    )
    parser.add_argument("--version", action="version", version=f"narxid {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate a benchmark dataset CSV")
    p_synth.add_argument("--case", choices=SYNTH_CASES, required=True)
    p_synth.add_argument("--n", type=int, default=1000, help="number of samples")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument(
        "--sample-period", type=float, default=0.01,
        help="multitone sampling period (seconds)",
    )
    p_synth.add_argument("--prbs-hold", type=int, default=5)
    p_synth.add_argument("--out", required=True, help="output CSV path")

    p_id = sub.add_parser("identify", help="run the identification pipeline")
    p_id.add_argument("--config", help="flat key=value config file")
    p_id.add_argument("--data", help="input CSV (overrides config)")
    p_id.add_argument("--u-column", dest="u_column")
    p_id.add_argument("--y-column", dest="y_column")
    p_id.add_argument("--train-start", dest="train_start", type=int)
    p_id.add_argument("--train-end", dest="train_end", type=int)
    p_id.add_argument("--na", dest="n_a", type=int)
    p_id.add_argument("--nb", dest="n_b", type=int)
    p_id.add_argument("--degree", type=int)
    p_id.add_argument("--constant", dest="include_constant", choices=["true", "false"])
    p_id.add_argument("--criterion", choices=["press", "err"])
    p_id.add_argument("--method", choices=["none", "1", "2", "3", "4"])
    p_id.add_argument("--arx-only", action="store_true", help="skip the nonlinear stage")
    p_id.add_argument("--max-iterations", dest="max_iterations", type=int)
    p_id.add_argument("--epsilon", type=float)
    p_id.add_argument("--max-terms", dest="max_terms", type=int)
    p_id.add_argument("--validation-max-lag", dest="validation_max_lag", type=int)
    p_id.add_argument("--out", dest="output_dir")
    p_id.add_argument("--seed", type=int)

    p_sim = sub.add_parser("simulate", help="free-run a saved model over a data file")
    p_sim.add_argument("--model", required=True)
    p_sim.add_argument("--data", required=True)
    p_sim.add_argument("--u-column", default="u")
    p_sim.add_argument("--y-column", default="y")
    p_sim.add_argument("--out", required=True, help="output CSV path")
    p_sim.add_argument(
        "--one-step", action="store_true",
        help="one-step-ahead prediction instead of free run",
    )

    p_val = sub.add_parser("validate", help="residual tests for a saved model")
    p_val.add_argument("--model", required=True)
    p_val.add_argument("--data", required=True)
    p_val.add_argument("--u-column", default="u")
    p_val.add_argument("--y-column", default="y")
    p_val.add_argument("--max-lag", type=int, default=0)
    p_val.add_argument("--out", required=True, help="output directory")
    return parser


def _cmd_synth(args) -> int:
    n = args.n
    if args.case == "dc-motor-white":
        u = generate_signal(WhiteNoise(length=n, seed=args.seed))
    elif args.case == "dc-motor-multitone":
        u = generate_signal(Multitone(length=n, sample_period=args.sample_period))
    else:
        # unsigned voltage drive: both levels keep the motor dynamics stable
        u = generate_signal(
            Prbs(length=n, levels=(0.0, 1.0), hold=args.prbs_hold, seed=args.seed)
        )
    y = dc_motor_reference(u)
    write_timeseries_csv(args.out, u, y)
    print(f"wrote {n} samples to {args.out}")
    return 0


def _run_config_from_args(args) -> RunConfig:
    cfg = parse_config_file(args.config) if args.config else RunConfig()
    overrides = {
        name: getattr(args, name)
        for name in (
            "data", "u_column", "y_column", "train_start", "train_end",
            "n_a", "n_b", "degree", "include_constant", "criterion", "method",
            "max_iterations", "epsilon", "max_terms", "validation_max_lag",
            "output_dir", "seed",
        )
        if getattr(args, name, None) is not None
    }
    cfg = apply_config_values(cfg, overrides, source="command line")
    if args.arx_only:
        cfg.want_narx = False
    if not cfg.data:
        raise ConfigError("no input data file given (config key 'data' or --data)")
    return cfg


def _cmd_identify(args) -> int:
    run = _run_config_from_args(args)
    data = ingest_csv(run.data, run.u_column, run.y_column)
    start = run.train_start
    end = run.train_end or len(data)
    if not (0 <= start < end <= len(data)):
        raise ConfigError(
            f"train range [{start}, {end}) invalid for record of length {len(data)}"
        )
    train = data.slice(start, end)
    search_cfg = SearchConfig(
        max_iterations=run.max_iterations,
        epsilon=run.epsilon,
        criterion=run.criterion_enum(),
        max_terms=run.max_terms or None,
        parallel_paths=run.parallel_paths,
    )
    report = identify(
        train,
        run.lag_spec(),
        method=run.method_enum(),
        cfg=search_cfg,
        want_narx=run.want_narx,
    )
    model = report.chosen_model
    predictions = predict_one_step(model, train)
    residuals = train.y[model.max_lag :] - predictions[model.max_lag :]
    max_lag = run.validation_max_lag or None
    validation = residual_tests(residuals, train.u[model.max_lag :], max_lag)
    written = render_report(report, validation, data, run.output_dir)
    print(f"chosen: {report.chosen}; {model.n_terms} terms; "
          f"artifacts in {run.output_dir}")
    for path in written:
        print(f"  {path}")
    return 0


def _cmd_simulate(args) -> int:
    model = load_model(args.model)
    data = ingest_csv(args.data, args.u_column, args.y_column)
    if len(data) <= model.max_lag:
        raise InsufficientDataError(
            f"model needs lags up to {model.max_lag}; record has {len(data)} samples"
        )
    if args.one_step:
        out = predict_one_step(model, data)
        diverged_at = None
    else:
        run = simulate_free_run(model, data.u, data.y[: model.max_output_lag])
        out, diverged_at = run.output, run.diverged_at
    with Path(args.out).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "measured", "predicted"])
        for i, (yi, pi) in enumerate(zip(data.y, out), start=1):
            writer.writerow([i, format(yi, ".17g"), format(pi, ".17g")])
    if diverged_at is not None:
        print(f"warning: simulation diverged at sample {diverged_at}", file=sys.stderr)
    print(f"wrote {args.out}")
    return 0


def _cmd_validate(args) -> int:
    model = load_model(args.model)
    data = ingest_csv(args.data, args.u_column, args.y_column)
    predictions = predict_one_step(model, data)
    residuals = data.y[model.max_lag :] - predictions[model.max_lag :]
    report = residual_tests(
        residuals, data.u[model.max_lag :], args.max_lag or None
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for test in report.tests:
        with (out / f"correlation_{test.name}.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["lag", "value", "lower", "upper"])
            for lag, value in zip(test.lags, test.values):
                writer.writerow([int(lag), format(value, ".17g"),
                                 format(-test.bound, ".17g"), format(test.bound, ".17g")])
    summary = {
        "passed": report.passed,
        "residual_variance": report.residual_variance,
        "tests": {t.name: t.passed for t in report.tests},
    }
    (out / "validation.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"validation {'passed' if report.passed else 'FAILED'}; results in {out}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "synth":
            return _cmd_synth(args)
        if args.command == "identify":
            return _cmd_identify(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "validate":
            return _cmd_validate(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IdentificationError as exc:
        print(f"identification failed: {exc}", file=sys.stderr)
        return 1
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NarxidError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
