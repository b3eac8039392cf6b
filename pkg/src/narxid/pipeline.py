"""End-to-end identification: linear stage, nonlinear stage, model choice.

The pipeline always identifies a linear (ARX) model first.  When a nonlinear
model is requested it builds the polynomial candidate dictionary, optionally
shrinks the search using one of four reduction methods, runs the iterative
search, and finally keeps the nonlinear model only if its BIC (on free-run
error) strictly beats the linear one.

Reduction methods (all optional):

* ``M1`` - restrict the nonlinear dictionary to monomials over the linear
  model's variables and seed every path from it.
* ``M2`` - seed the paths of the full dictionary from the terms of a
  deliberately overfit single-path model.
* ``M3`` - both: overfit seeding inside the restricted dictionary.
* ``M4`` - overfit seeding from the restricted dictionary, searching the
  full dictionary.

Candidate-evaluation counters and wall-clock timings are recorded per stage
so the cost of each method is observable.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple

from .errors import ConfigError
from .ofr import Criterion, back_substitute, default_max_terms, ofr_select
from .regression import IoData, RegressionProblem, build_problem
from .search import SearchConfig, SearchResult, iterative_ofr
from .terms import (
    Dictionary,
    LagSpec,
    Term,
    build_linear_dictionary,
    expand_dictionary,
    reduce_dictionary,
)

__all__ = [
    "ReductionMethod",
    "StageRecord",
    "TableRow",
    "IdentificationReport",
    "identify",
    "overfit_preselect",
]

logger = logging.getLogger(__name__)


class ReductionMethod(Enum):
    NONE = "none"
    M1 = "m1"
    M2 = "m2"
    M3 = "m3"
    M4 = "m4"

    @classmethod
    def from_string(cls, text: str) -> "ReductionMethod":
        key = str(text).strip().lower()
        aliases = {
            "none": cls.NONE, "0": cls.NONE,
            "m1": cls.M1, "1": cls.M1,
            "m2": cls.M2, "2": cls.M2,
            "m3": cls.M3, "3": cls.M3,
            "m4": cls.M4, "4": cls.M4,
        }
        if key not in aliases:
            raise ConfigError(f"unknown reduction method {text!r}")
        return aliases[key]


@dataclass(frozen=True)
class StageRecord:
    """One identification stage: its search outcome and bookkeeping."""

    outcome: SearchResult
    dictionary: Dictionary
    n_evaluations: int
    elapsed_s: float

    @property
    def bic(self) -> float:
        return self.outcome.best.bic

    @property
    def msse(self) -> float:
        return self.outcome.best.msse


class TableRow(NamedTuple):
    term: str
    ms_press: float
    err: float
    coefficient: float


@dataclass(frozen=True)
class IdentificationReport:
    """Everything a run produced: both stages, the choice, the term table."""

    arx: StageRecord
    narx: StageRecord | None
    chosen: str  # "ARX" | "NARX"
    table: tuple[TableRow, ...]
    lag_spec: LagSpec
    method: ReductionMethod
    timings: dict = field(default_factory=dict)
    notes: tuple[str, ...] = ()

    @property
    def chosen_stage(self) -> StageRecord:
        return self.narx if self.chosen == "NARX" else self.arx

    @property
    def chosen_model(self):
        return self.chosen_stage.outcome.model


def overfit_preselect(
    dictionary: Dictionary, problem: RegressionProblem, size: int
) -> list[Term]:
    """Terms of a deliberately overfit single-path model, as path seeds.

    Runs one ERR-driven path with the term cap raised to ``size``; the
    result is a cheap, likely superset-ish sketch of the relevant terms.
    """
    if size > len(dictionary):
        raise ConfigError(
            f"overfit size {size} exceeds dictionary size {len(dictionary)}"
        )
    path = ofr_select(
        problem, criterion=Criterion.ERR, forced_first=None, max_terms=size
    )
    return [dictionary[i] for i in path.term_indices]


def _overfit_size(n_arx_terms: int, dictionary: Dictionary, problem, cfg: SearchConfig) -> int:
    cap = cfg.max_terms or default_max_terms(len(dictionary), problem.n_rows)
    return max(1, min(2 * n_arx_terms + 5, cap, len(dictionary)))


def identify(
    data: IoData,
    spec: LagSpec,
    method: ReductionMethod = ReductionMethod.NONE,
    cfg: SearchConfig = SearchConfig(),
    want_narx: bool = True,
) -> IdentificationReport:
    """Run the full identification pipeline on ``data``.

    The linear stage searches the degree-1 dictionary seeded by all of its
    terms.  The nonlinear stage (when ``want_narx``) searches the degree-
    ``spec.degree`` dictionary under the chosen reduction method.  The
    returned report's ``chosen`` field is "NARX" only when the nonlinear
    model exists, is genuinely different from the linear one, and has
    strictly lower BIC.
    """
    timings: dict[str, float] = {}
    notes: list[str] = []

    linear_spec = replace(spec, degree=1)
    d_linear = build_linear_dictionary(linear_spec)
    t0 = time.perf_counter()
    arx_outcome = iterative_ofr(d_linear, None, data, cfg)
    timings["arx_s"] = time.perf_counter() - t0
    arx_stage = StageRecord(
        arx_outcome, d_linear, arx_outcome.n_evaluations, timings["arx_s"]
    )
    logger.debug(
        "linear stage: %d terms, bic %.3f",
        arx_outcome.model.n_terms, arx_stage.bic,
    )

    narx_stage = None
    chosen = "ARX"
    if want_narx and spec.degree > 1:
        t0 = time.perf_counter()
        d_full = expand_dictionary(
            (t for t in d_linear if not t.is_constant),
            spec.degree,
            spec.include_constant,
        )
        narx_evals = 0
        arx_model = arx_outcome.model
        if method is ReductionMethod.NONE:
            search_dict, preselect = d_full, None
        else:
            if not arx_model.terms:
                raise ConfigError(
                    "linear stage selected no lagged terms; "
                    f"reduction method {method.value} cannot proceed"
                )
            d_reduced = reduce_dictionary(
                arx_model.terms, spec.degree, spec.include_constant
            )
            if method is ReductionMethod.M1:
                search_dict, preselect = d_reduced, None
            else:
                overfit_dict = d_full if method is ReductionMethod.M2 else d_reduced
                overfit_problem = build_problem(data, overfit_dict)
                size = _overfit_size(
                    arx_model.n_terms, overfit_dict, overfit_problem, cfg
                )
                sketch = ofr_select(
                    overfit_problem, criterion=Criterion.ERR, max_terms=size
                )
                narx_evals += sketch.n_evaluated
                seeds = [overfit_dict[i] for i in sketch.term_indices]
                search_dict = (
                    d_reduced if method is ReductionMethod.M3 else d_full
                )
                preselect = [t for t in seeds if t in search_dict] or None

        narx_outcome = iterative_ofr(search_dict, preselect, data, cfg)
        narx_evals += narx_outcome.n_evaluations
        timings["narx_s"] = time.perf_counter() - t0
        narx_stage = StageRecord(
            narx_outcome, search_dict, narx_evals, timings["narx_s"]
        )

        arx_set = frozenset(arx_model.terms)
        narx_set = frozenset(narx_outcome.model.terms)
        if narx_set == arx_set:
            notes.append("nonlinear stage returned the linear term set")
        elif narx_stage.bic < arx_stage.bic:
            chosen = "NARX"
        if method in (ReductionMethod.M1, ReductionMethod.M3):
            notes.append(
                "reduced-dictionary search: term sets can differ from the "
                "full search when the data is noisy"
            )

    chosen_stage = narx_stage if chosen == "NARX" else arx_stage
    table = _model_table(chosen_stage)
    return IdentificationReport(
        arx=arx_stage,
        narx=narx_stage,
        chosen=chosen,
        table=table,
        lag_spec=spec,
        method=method,
        timings=timings,
        notes=tuple(notes),
    )


def _model_table(stage: StageRecord) -> tuple[TableRow, ...]:
    """Per-term metric rows for the stage winner, in dictionary order."""
    path = stage.outcome.best.path
    dictionary = stage.dictionary
    theta = back_substitute(path)
    rows = [
        (step.term_index,
         TableRow(str(dictionary[step.term_index]), step.ms_press, step.err, float(coef)))
        for step, coef in zip(path.steps, theta)
    ]
    rows.sort(key=lambda r: r[0])
    return tuple(r[1] for r in rows)
