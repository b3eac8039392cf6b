"""Iterative multi-path term search with simulation-based model choice.

One iteration runs an OFR path per seed term, turning each path into a
candidate model; candidates are screened by the constant-input stability
probe, scored by BIC on the mean squared free-run error over the training
record, and the winner's terms become the next iteration's seed set.  The
incumbent best across iterations is returned, so the result can only improve
as iterations proceed.  Iterations end when the winning term set repeats or
the iteration cap is reached.

Model scoring is deterministic: BIC ties break toward fewer terms, then
toward the earlier seed position.  Free-run errors below a numerical floor
(relative to the output scale) are clamped before ranking so that parsimony,
not floating-point noise, decides between models that are all numerically
exact.
"""

from __future__ import annotations

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError, IdentificationError
from .ofr import Criterion, SelectionPath, StopRule, back_substitute, ofr_select
from .regression import IoData, RegressionProblem, build_problem
from .simulation import Model, StabilityVerdict, simulate_free_run, stability_probe
from .terms import Dictionary, Term

__all__ = [
    "SearchConfig",
    "PoolEntry",
    "ModelPool",
    "SearchResult",
    "bic_of",
    "iterative_ofr",
    "build_model",
]

logger = logging.getLogger(__name__)

# Free-run MSSE values below this fraction of the target's mean square are
# indistinguishable from floating-point noise; clamp before BIC ranking.
MSSE_FLOOR_REL = 1e-24


@dataclass(frozen=True)
class SearchConfig:
    """Knobs for the iterative search.

    ``epsilon`` is the stability probe's variance threshold; ``max_terms``
    of None uses the identifiability default; ``parallel_paths`` runs the
    per-seed paths of one iteration on a thread pool (results are joined in
    seed order, so the outcome is identical either way).
    """

    max_iterations: int = 10
    epsilon: float = 1e-2
    criterion: Criterion = Criterion.PRESS
    max_terms: int | None = None
    parallel_paths: bool = False
    stop: StopRule = StopRule()
    n_sim: int = 1000
    n_settle: int = 200

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class PoolEntry:
    """One candidate model with its screening and scoring record."""

    model: Model
    seed_term: Term | None
    verdict: StabilityVerdict
    msse: float
    bic: float
    iteration: int = 0
    path: SelectionPath | None = field(default=None, compare=False)

    @property
    def selectable(self) -> bool:
        return self.verdict.stable and np.isfinite(self.bic)


@dataclass
class ModelPool:
    """All candidate models examined by a search, stable or not.

    Unstable entries are retained for reporting but never selected.
    """

    entries: list[PoolEntry] = field(default_factory=list)

    def stable(self) -> list[PoolEntry]:
        return [e for e in self.entries if e.selectable]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


@dataclass(frozen=True)
class SearchResult:
    """Outcome of :func:`iterative_ofr`."""

    pool: ModelPool
    best: PoolEntry
    iterations: int
    n_evaluations: int
    converged: bool
    iteration_bics: tuple[float, ...]

    @property
    def model(self) -> Model:
        return self.best.model


def bic_of(msse: float, n_samples: int, n_params: int) -> float:
    """Bayesian information criterion on the simulated error variance.

    ``n ln(msse + guard) + k ln(n)`` with a tiny additive guard against
    log(0).  Only the ranking matters, so the constant convention is fixed
    here and used consistently.
    """
    if msse < 0:
        raise ValueError("msse must be non-negative")
    if n_samples <= n_params:
        raise ValueError("need more samples than parameters")
    return float(n_samples * np.log(msse + 1e-300) + n_params * np.log(n_samples))


def data_fingerprint(data: IoData) -> str:
    digest = hashlib.sha256()
    digest.update(np.ascontiguousarray(data.u).tobytes())
    digest.update(np.ascontiguousarray(data.y).tobytes())
    return digest.hexdigest()[:16]


def build_model(
    dictionary: Dictionary,
    path: SelectionPath,
    criterion: Criterion,
    data_hash: str | None = None,
    lag_spec=None,
) -> Model:
    """Turn a finished path into a :class:`Model`.

    Coefficients come from back substitution; a selected constant candidate
    is folded into the model bias.
    """
    theta = back_substitute(path)
    terms: list[Term] = []
    coefficients: list[float] = []
    bias = 0.0
    for step, coef in zip(path.steps, theta):
        term = dictionary[step.term_index]
        if term.is_constant:
            bias += float(coef)
        else:
            terms.append(term)
            coefficients.append(float(coef))
    provenance = {
        "criterion": criterion.value,
        "selection": tuple(
            (str(dictionary[s.term_index]), s.err, s.ms_press, s.g)
            for s in path.steps
        ),
        "stop_reason": path.stop_reason,
        "data_hash": data_hash,
    }
    return Model(
        tuple(terms), tuple(coefficients), bias=bias, lag_spec=lag_spec,
        provenance=provenance,
    )


def _score_entry(
    dictionary: Dictionary,
    path: SelectionPath,
    seed_term: Term | None,
    data: IoData,
    problem: RegressionProblem,
    cfg: SearchConfig,
    iteration: int,
    msse_floor: float,
    data_hash: str,
) -> PoolEntry | None:
    if not path.steps:
        return None
    model = build_model(dictionary, path, cfg.criterion, data_hash)
    verdict = stability_probe(model, cfg.epsilon, cfg.n_sim, cfg.n_settle)
    n = problem.n_rows
    k = len(path.steps)
    msse = float("inf")
    bic = float("inf")
    if verdict.stable:
        run = simulate_free_run(model, data.u, data.y[: model.max_output_lag])
        if not run.diverged:
            err = data.y[problem.offset :] - run.output[problem.offset :]
            msse = float(np.mean(err**2))
            if n > k:
                bic = bic_of(max(msse, msse_floor), n, k)
    return PoolEntry(model, seed_term, verdict, msse, bic, iteration, path)


def iterative_ofr(
    dictionary: Dictionary,
    preselect: Sequence[Term] | None,
    data: IoData,
    cfg: SearchConfig = SearchConfig(),
) -> SearchResult:
    """Search orthogonalization paths seeded by ``preselect`` terms.

    ``preselect`` of None or empty seeds the first iteration with the whole
    dictionary.  Raises :class:`IdentificationError` (carrying the pool)
    when no iteration produces a stable candidate.
    """
    problem = build_problem(data, dictionary)
    data_hash = data_fingerprint(data)
    msse_floor = MSSE_FLOOR_REL * float(np.mean(problem.target**2))
    seeds = list(dict.fromkeys(preselect)) if preselect else list(dictionary.terms)
    seen_sets: set[frozenset[Term]] = set()
    pool = ModelPool()
    incumbent: PoolEntry | None = None
    incumbent_key: tuple | None = None
    n_evaluations = 0
    iteration_bics: list[float] = []
    converged = False
    iterations = 0

    for iteration in range(cfg.max_iterations):
        iterations = iteration + 1
        try:
            seed_indices = [dictionary.index(t) for t in seeds]
        except KeyError as exc:
            raise ConfigError(f"preselect term not in dictionary: {exc}") from None

        def run_path(i: int) -> SelectionPath:
            return ofr_select(
                problem,
                criterion=cfg.criterion,
                forced_first=i,
                max_terms=cfg.max_terms,
                stop=cfg.stop,
            )

        if cfg.parallel_paths and len(seed_indices) > 1:
            with ThreadPoolExecutor() as pool_exec:
                paths = list(pool_exec.map(run_path, seed_indices))
        else:
            paths = [run_path(i) for i in seed_indices]

        iteration_best: PoolEntry | None = None
        iteration_best_key: tuple | None = None
        for order, (seed, path) in enumerate(zip(seeds, paths)):
            n_evaluations += path.n_evaluated
            entry = _score_entry(
                dictionary, path, seed, data, problem, cfg, iteration,
                msse_floor, data_hash,
            )
            if entry is None:
                continue
            pool.entries.append(entry)
            if not entry.selectable:
                continue
            key = (entry.bic, entry.model.n_terms, order)
            if iteration_best_key is None or key < iteration_best_key:
                iteration_best, iteration_best_key = entry, key

        if iteration_best is None:
            logger.debug("iteration %d produced no stable model", iteration)
            break

        iteration_bics.append(iteration_best.bic)
        if incumbent_key is None or iteration_best_key[:2] < incumbent_key[:2]:
            incumbent, incumbent_key = iteration_best, iteration_best_key

        term_set = frozenset(
            dictionary[i] for i in iteration_best.path.term_indices
        )
        if term_set in seen_sets:
            converged = True
            break
        seen_sets.add(term_set)
        seeds = list(
            dict.fromkeys(dictionary[i] for i in iteration_best.path.term_indices)
        )

    if incumbent is None:
        raise IdentificationError(
            "no stable candidate model in any iteration", pool=pool
        )
    return SearchResult(
        pool, incumbent, iterations, n_evaluations, converged,
        tuple(iteration_bics),
    )
