"""CSV ingestion, run configuration, model serialization, report rendering.

The machine-readable report is JSON with a schema version; the saved-model
format stores canonical term strings with 17-significant-digit coefficients
so a load/simulate round trip is exact.  The run configuration is a flat
``key = value`` text file; command-line flags override file values.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .ofr import Criterion
from .pipeline import IdentificationReport, ReductionMethod
from .regression import IoData
from .simulation import Model
from .terms import LagSpec, parse_term
from .validation import ValidationReport

__all__ = [
    "ingest_csv",
    "write_timeseries_csv",
    "save_model",
    "load_model",
    "RunConfig",
    "parse_config_file",
    "render_report",
    "REPORT_SCHEMA",
    "MODEL_SCHEMA",
]

REPORT_SCHEMA = "narxid-report/1"
MODEL_SCHEMA = "narxid-model/1"


def ingest_csv(path, u_column: str = "u", y_column: str = "y") -> IoData:
    """Load aligned input/output samples from a headed CSV file."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DataError(f"{path}: empty file")
        missing = {u_column, y_column} - set(reader.fieldnames)
        if missing:
            raise DataError(f"{path}: missing column(s) {sorted(missing)}")
        u_vals, y_vals = [], []
        for i, row in enumerate(reader, start=2):  # 1-based incl. header
            for col, dest in ((u_column, u_vals), (y_column, y_vals)):
                cell = row.get(col)
                if cell is None or cell.strip() == "":
                    raise DataError(f"{path}: blank {col!r} cell at row {i}")
                try:
                    dest.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"{path}: non-numeric {col!r} cell at row {i}: {cell!r}"
                    ) from None
    if not u_vals:
        raise DataError(f"{path}: no data rows")
    return IoData(np.array(u_vals), np.array(y_vals))


def write_timeseries_csv(path, u, y) -> None:
    """Write a ``t,u,y`` CSV (t is the 1-based sample index)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "u", "y"])
        for i, (ui, yi) in enumerate(zip(u, y), start=1):
            writer.writerow([i, format(ui, ".17g"), format(yi, ".17g")])


def save_model(model: Model, path) -> None:
    """Serialize a model as JSON with full-precision coefficients."""
    doc = {
        "schema": MODEL_SCHEMA,
        "terms": list(model.term_strings()),
        "coefficients": [format(c, ".17g") for c in model.coefficients],
        "bias": format(model.bias, ".17g"),
        "lag_spec": (
            None if model.lag_spec is None else {
                "n_a": model.lag_spec.n_a,
                "n_b": model.lag_spec.n_b,
                "degree": model.lag_spec.degree,
                "include_constant": model.lag_spec.include_constant,
            }
        ),
        "provenance": _jsonable(model.provenance),
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_model(path) -> Model:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid model JSON: {exc}") from None
    if doc.get("schema") != MODEL_SCHEMA:
        raise DataError(f"{path}: unsupported model schema {doc.get('schema')!r}")
    terms = tuple(parse_term(s) for s in doc["terms"])
    coefficients = tuple(float(c) for c in doc["coefficients"])
    spec = None
    if doc.get("lag_spec"):
        ls = doc["lag_spec"]
        spec = LagSpec(ls["n_a"], ls["n_b"], ls["degree"], ls["include_constant"])
    return Model(
        terms, coefficients, bias=float(doc.get("bias", 0.0)), lag_spec=spec,
        provenance=doc.get("provenance"),
    )


@dataclass
class RunConfig:
    """User-facing knobs for one identification run."""

    data: str = ""
    u_column: str = "u"
    y_column: str = "y"
    train_start: int = 0
    train_end: int = 0  # 0 means "to the end of the record"
    n_a: int = 2
    n_b: int = 2
    degree: int = 2
    include_constant: bool = False
    criterion: str = "press"
    method: str = "none"
    want_narx: bool = True
    max_iterations: int = 10
    epsilon: float = 1e-2
    max_terms: int = 0  # 0 means the identifiability default
    parallel_paths: bool = False
    validation_max_lag: int = 0  # 0 means the default
    output_dir: str = "narxid-out"
    seed: int = 0

    def lag_spec(self) -> LagSpec:
        return LagSpec(self.n_a, self.n_b, self.degree, self.include_constant)

    def criterion_enum(self) -> Criterion:
        try:
            return Criterion(self.criterion.lower())
        except ValueError:
            raise ConfigError(f"unknown criterion {self.criterion!r}") from None

    def method_enum(self) -> ReductionMethod:
        return ReductionMethod.from_string(self.method)


_BOOL_STRINGS = {"true": True, "1": True, "yes": True,
                 "false": False, "0": False, "no": False}


def parse_config_file(path) -> RunConfig:
    """Parse a flat ``key = value`` config file ('#' starts a comment)."""
    path = Path(path)
    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        values[key.strip()] = val.strip().strip("\"'")
    return apply_config_values(RunConfig(), values, source=str(path))


def apply_config_values(cfg: RunConfig, values: dict, source: str = "override") -> RunConfig:
    known = {f.name: f.type for f in fields(RunConfig)}
    for key, val in values.items():
        if val is None:
            continue
        if key not in known:
            raise ConfigError(f"{source}: unknown config key {key!r}")
        current = getattr(cfg, key)
        if isinstance(current, bool):
            text = str(val).lower()
            if text not in _BOOL_STRINGS:
                raise ConfigError(f"{source}: {key} wants true/false, got {val!r}")
            setattr(cfg, key, _BOOL_STRINGS[text])
        elif isinstance(current, int):
            try:
                setattr(cfg, key, int(val))
            except ValueError:
                raise ConfigError(f"{source}: {key} wants an integer, got {val!r}") from None
        elif isinstance(current, float):
            try:
                setattr(cfg, key, float(val))
            except ValueError:
                raise ConfigError(f"{source}: {key} wants a number, got {val!r}") from None
        else:
            setattr(cfg, key, str(val))
    return cfg


def _jsonable(value):
    if value is None or isinstance(value, (bool, int, str)):
        return value
    if isinstance(value, float):
        return value
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    return str(value)


def _verdict_doc(verdict) -> dict:
    return {
        "stable": verdict.stable,
        "mean0": verdict.mean0,
        "var0": verdict.var0,
        "mean1": verdict.mean1,
        "var1": verdict.var1,
        "diverged": verdict.diverged,
        "bias_mean_ok": verdict.bias_mean_ok,
    }


def _stage_doc(stage) -> dict:
    best = stage.outcome.best
    return {
        "dictionary_size": len(stage.dictionary),
        "terms": [str(t) for t in best.model.terms],
        "coefficients": [format(c, ".17g") for c in best.model.coefficients],
        "bias": format(best.model.bias, ".17g"),
        "bic": best.bic,
        "msse": best.msse,
        "stability": _verdict_doc(best.verdict),
        "iterations": stage.outcome.iterations,
        "converged": stage.outcome.converged,
        "n_evaluations": stage.n_evaluations,
        "pool_size": len(stage.outcome.pool),
        "pool_unstable": sum(
            1 for e in stage.outcome.pool if not e.verdict.stable
        ),
    }


def report_document(
    report: IdentificationReport, validation: ValidationReport | None
) -> dict:
    """The machine-readable report as a JSON-serializable dict."""
    doc = {
        "schema": REPORT_SCHEMA,
        "chosen": report.chosen,
        "method": report.method.value,
        "lag_spec": {
            "n_a": report.lag_spec.n_a,
            "n_b": report.lag_spec.n_b,
            "degree": report.lag_spec.degree,
            "include_constant": report.lag_spec.include_constant,
        },
        "table": [
            {
                "term": row.term,
                "ms_press": row.ms_press,
                "err": row.err,
                "coefficient": format(row.coefficient, ".17g"),
            }
            for row in report.table
        ],
        "arx": _stage_doc(report.arx),
        "narx": None if report.narx is None else _stage_doc(report.narx),
        "notes": list(report.notes),
        "validation": None,
        "timings": {k: round(v, 6) for k, v in report.timings.items()},
    }
    if validation is not None:
        doc["validation"] = {
            "residual_variance": validation.residual_variance,
            "passed": validation.passed,
            "tests": [
                {
                    "name": t.name,
                    "bound": t.bound,
                    "fraction_inside": t.fraction_inside,
                    "passed": t.passed,
                    "degenerate": t.degenerate,
                }
                for t in validation.tests
            ],
        }
    return doc


def _format_float(x: float) -> str:
    return format(x, ".6g")


def render_report(
    report: IdentificationReport,
    validation: ValidationReport | None,
    data: IoData,
    out_dir,
) -> list[Path]:
    """Write all run artifacts into ``out_dir``; returns the written paths.

    Artifacts: a human-readable model table, the JSON report, the chosen
    model (loadable), measured-vs-simulated plot data, and one CSV per
    correlation test.
    """
    from .simulation import simulate_free_run

    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".writable"
        probe.touch()
        probe.unlink()
    except OSError as exc:
        raise DataError(f"output directory {out} is not writable: {exc}") from None

    written: list[Path] = []
    model = report.chosen_model

    table_path = out / "model_table.txt"
    lines = [
        f"chosen: {report.chosen} "
        f"(linear BIC {_format_float(report.arx.bic)}"
        + (
            f", nonlinear BIC {_format_float(report.narx.bic)})"
            if report.narx is not None
            else ")"
        ),
        "",
        f"{'term':<24} {'ms PRESS':>14} {'ERR':>14} {'coefficient':>16}",
    ]
    for row in report.table:
        lines.append(
            f"{row.term:<24} {_format_float(row.ms_press):>14} "
            f"{_format_float(row.err):>14} {row.coefficient:>16.10g}"
        )
    if model.bias and not any(r.term == "1" for r in report.table):
        lines.append(f"{'1':<24} {'':>14} {'':>14} {model.bias:>16.10g}")
    for note in report.notes:
        lines.append("")
        lines.append(f"note: {note}")
    table_path.write_text("\n".join(lines) + "\n")
    written.append(table_path)

    report_path = out / "report.json"
    report_path.write_text(
        json.dumps(report_document(report, validation), indent=2, sort_keys=True)
        + "\n"
    )
    written.append(report_path)

    model_path = out / "model.json"
    save_model(model, model_path)
    written.append(model_path)

    sim = simulate_free_run(model, data.u, data.y[: model.max_output_lag])
    sim_path = out / "simulation.csv"
    with sim_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "measured", "simulated", "residual"])
        for i, (yi, si) in enumerate(zip(data.y, sim.output), start=1):
            writer.writerow(
                [i, format(yi, ".17g"), format(si, ".17g"), format(yi - si, ".17g")]
            )
    written.append(sim_path)

    if validation is not None:
        for test in validation.tests:
            test_path = out / f"correlation_{test.name}.csv"
            with test_path.open("w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["lag", "value", "lower", "upper"])
                for lag, value in zip(test.lags, test.values):
                    writer.writerow(
                        [int(lag), format(value, ".17g"),
                         format(-test.bound, ".17g"), format(test.bound, ".17g")]
                    )
            written.append(test_path)
    return written
