"""Global optimizers for the practical pooling problem.

Five stochastic metaheuristics run under one shared protocol so comparisons
are fair: identical seeded starting populations, the same stall-based
convergence rule (best value unimproved beyond 1e-12 absolute for
``stall_limit`` consecutive iterations), and the same hard iteration cap. An
iteration is one update-of-best opportunity: a generation for DE/PSO/ABC, one
proposal/acceptance cycle for GSA, one improvisation for HS.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .distributions import FrechetParams, frechet_layer_expectation, frechet_quantile
from .pool import FeasibleBox, LayerSpec, TailModel

logger = logging.getLogger(__name__)

ALGORITHMS = ("gsa", "de", "abc", "hs", "pso")

_IMPROVEMENT_TOL = 1e-12


@dataclass(frozen=True)
class OptimizerConfig:
    """Shared protocol settings plus the algorithm selection.

    Attributes:
        bounds: Compact search box (every edge finite).
        algorithm: One of ``ALGORITHMS``; GSA is the default.
        seed: Drives both the common starting population and the algorithm's
            own move stream.
        stall_limit: Consecutive iterations without improvement that count as
            convergence.
        max_iterations: Hard stop.
        population_size: Starting-candidate count shared by all algorithms;
            defaults to max(20, 10 * dim).
        algorithm_params: Per-algorithm hyperparameter overrides.
        keep_trace: Record (iteration, best_value) pairs.
    """

    bounds: FeasibleBox
    algorithm: str = "gsa"
    seed: int = 0
    stall_limit: int = 500
    max_iterations: int = 10_000
    population_size: Optional[int] = None
    algorithm_params: dict = field(default_factory=dict)
    keep_trace: bool = False

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(
                f"unknown algorithm {self.algorithm!r}; choose from {ALGORITHMS}")
        if not self.stall_limit < self.max_iterations:
            raise ValueError("stall_limit must be smaller than max_iterations")

    def resolved_population(self, dim: int) -> int:
        return self.population_size or max(20, 10 * dim)


@dataclass(frozen=True)
class OptimizerRun:
    """Result of one optimizer run under the shared protocol."""

    best_point: np.ndarray
    best_value: float
    iterations_used: int
    converged: bool
    wall_time: float
    algorithm: str
    seed: int
    initial_population: np.ndarray
    trace: Optional[List[Tuple[int, float]]] = None


@dataclass(frozen=True)
class ComparisonReport:
    """Times and errors of each algorithm on each problem.

    ``errors[j, k]`` is the attained objective value minus the row minimum,
    so every problem row contains at least one exact zero.
    """

    problems: List[str]
    algorithms: List[str]
    times: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    converged: np.ndarray

    def ecdf_points(self, metric: str, algorithm: str) -> Tuple[np.ndarray, np.ndarray]:
        """Step-function support points (x, F) of the empirical CDF."""
        data = {"time": self.times, "error": self.errors}[metric]
        k = self.algorithms.index(algorithm)
        x = np.sort(data[:, k])
        f = np.arange(1, x.size + 1) / x.size
        return x, f

    def rows(self):
        for j, problem in enumerate(self.problems):
            for k, algorithm in enumerate(self.algorithms):
                yield {
                    "problem": problem,
                    "algorithm": algorithm,
                    "time_seconds": float(self.times[j, k]),
                    "error": float(self.errors[j, k]),
                    "value": float(self.values[j, k]),
                    "converged": bool(self.converged[j, k]),
                }

    def write_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.DictWriter(
                handle, fieldnames=["problem", "algorithm", "time_seconds",
                                    "error", "value", "converged"],
                lineterminator="\n")
            writer.writeheader()
            for row in self.rows():
                writer.writerow(row)

    def write_json(self, path):
        payload = {
            "problems": self.problems,
            "algorithms": self.algorithms,
            "times": self.times.tolist(),
            "values": self.values.tolist(),
            "errors": self.errors.tolist(),
            "converged": self.converged.astype(bool).tolist(),
        }
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True)
            handle.write("\n")


def initial_population(config: OptimizerConfig, dim: int) -> np.ndarray:
    """Seeded uniform starting candidates, identical for every algorithm.

    Only ``config.seed`` (never the algorithm) feeds this generator, which is
    what makes cross-algorithm comparisons fair.
    """
    lower, upper = config.bounds.lower, config.bounds.upper
    rng = np.random.default_rng(config.seed)
    return lower + (upper - lower) * rng.random((config.resolved_population(dim), dim))


class _Protocol:
    """Tracks the incumbent and applies the shared stopping rule."""

    def __init__(self, config: OptimizerConfig):
        self.config = config
        self.best_point: Optional[np.ndarray] = None
        self.best_value = np.inf
        self.iteration = 0
        self.stall = 0
        self.converged = False
        self.trace: Optional[List[Tuple[int, float]]] = \
            [] if config.keep_trace else None
        self._last_best = np.inf

    def offer(self, point: np.ndarray, value: float):
        if value < self.best_value:
            self.best_value = value
            self.best_point = np.array(point, dtype=float)

    def end_iteration(self) -> bool:
        """Close one iteration; True means keep going."""
        self.iteration += 1
        if self._last_best - self.best_value > _IMPROVEMENT_TOL:
            self.stall = 0
        else:
            self.stall += 1
        self._last_best = self.best_value
        if self.trace is not None:
            self.trace.append((self.iteration, self.best_value))
        if self.stall >= self.config.stall_limit:
            self.converged = True
            return False
        return self.iteration < self.config.max_iterations


def _move_rng(config: OptimizerConfig) -> np.random.Generator:
    return np.random.default_rng([config.seed, ALGORITHMS.index(config.algorithm)])


def _wrap(x: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    span = upper - lower
    return lower + np.mod(x - lower, span)


def _q_gaussian(rng: np.random.Generator, q: float, size) -> np.ndarray:
    """Standard q-Gaussian deviates via the generalized Box-Muller transform."""
    q_prime = (1.0 + q) / (3.0 - q)
    u1 = 1.0 - rng.random(size)  # (0, 1]
    u2 = rng.random(size)
    log_q = (u1 ** (1.0 - q_prime) - 1.0) / (1.0 - q_prime)
    return np.sqrt(-2.0 * log_q) * np.cos(2.0 * np.pi * u2)


def _run_gsa(objective, config, pop, rng, protocol):
    """Generalized simulated annealing with Tsallis visiting distribution.

    One iteration is one visit cycle: a full-vector heavy-tailed move followed
    by one move per coordinate, each passed through the generalized Metropolis
    rule. The per-coordinate moves give the fine late-stage refinement.
    """
    params = config.algorithm_params
    qv = params.get("visiting_shape", 2.62)
    qa = params.get("acceptance_shape", -5.0)
    t0 = params.get("initial_temperature", 5230.0)
    lower, upper = config.bounds.lower, config.bounds.upper
    dim = lower.size

    current = pop[0].copy()
    current_value = objective(current)
    protocol.offer(current, current_value)
    exponent = qv - 1.0
    while True:
        t = protocol.iteration
        t_visit = t0 * (2.0 ** exponent - 1.0) / ((t + 2.0) ** exponent - 1.0)
        t_accept = t_visit / (t + 1.0)
        sigma = t_visit ** (1.0 / (3.0 - qv))
        if protocol.best_value < current_value:
            # re-anneal from the incumbent so late cycles refine around it
            current = protocol.best_point.copy()
            current_value = protocol.best_value
        for move in range(dim + 1):
            if move == 0:
                step = sigma * _q_gaussian(rng, qv, dim)
            else:
                step = np.zeros(dim)
                step[move - 1] = sigma * _q_gaussian(rng, qv, 1)[0]
            candidate = _wrap(current + step, lower, upper)
            value = objective(candidate)
            protocol.offer(candidate, value)
            if value <= current_value:
                current, current_value = candidate, value
            elif np.isfinite(value) and np.isfinite(current_value):
                base = 1.0 - (1.0 - qa) * (value - current_value) / t_accept
                if base > 0 and rng.random() < base ** (1.0 / (1.0 - qa)):
                    current, current_value = candidate, value
        if not protocol.end_iteration():
            return


def _run_de(objective, config, pop, rng, protocol):
    """Differential evolution, rand/1/bin with dithered mutation weight."""
    params = config.algorithm_params
    f_low, f_high = params.get("mutation", (0.5, 1.0))
    crossover = params.get("crossover", 0.9)
    lower, upper = config.bounds.lower, config.bounds.upper

    population = pop.copy()
    size, dim = population.shape
    values = np.array([objective(x) for x in population])
    for x, v in zip(population, values):
        protocol.offer(x, v)
    while True:
        f_weight = rng.uniform(f_low, f_high)
        for i in range(size):
            choices = [j for j in range(size) if j != i]
            r1, r2, r3 = rng.choice(choices, size=3, replace=False)
            mutant = population[r1] + f_weight * (population[r2] - population[r3])
            cross = rng.random(dim) < crossover
            cross[rng.integers(dim)] = True
            trial = np.clip(np.where(cross, mutant, population[i]), lower, upper)
            trial_value = objective(trial)
            if trial_value <= values[i]:
                population[i], values[i] = trial, trial_value
                protocol.offer(trial, trial_value)
        if not protocol.end_iteration():
            return


def _run_pso(objective, config, pop, rng, protocol):
    """Particle swarm with inertia and cognitive/social pulls."""
    params = config.algorithm_params
    inertia = params.get("inertia", 0.7298)
    cognitive = params.get("cognitive", 1.49618)
    social = params.get("social", 1.49618)
    lower, upper = config.bounds.lower, config.bounds.upper
    span = upper - lower

    position = pop.copy()
    size, dim = position.shape
    velocity = np.zeros_like(position)
    v_max = params.get("velocity_fraction", 0.2) * span
    values = np.array([objective(x) for x in position])
    personal_best = position.copy()
    personal_value = values.copy()
    for x, v in zip(position, values):
        protocol.offer(x, v)
    while True:
        global_best = protocol.best_point
        r1 = rng.random((size, dim))
        r2 = rng.random((size, dim))
        velocity = (inertia * velocity
                    + cognitive * r1 * (personal_best - position)
                    + social * r2 * (global_best - position))
        velocity = np.clip(velocity, -v_max, v_max)
        position = np.clip(position + velocity, lower, upper)
        for i in range(size):
            value = objective(position[i])
            if value < personal_value[i]:
                personal_best[i], personal_value[i] = position[i].copy(), value
            protocol.offer(position[i], value)
        if not protocol.end_iteration():
            return


def _run_abc(objective, config, pop, rng, protocol):
    """Artificial bee colony over the shared starting food sources."""
    params = config.algorithm_params
    limit = params.get("scout_limit", 50)
    lower, upper = config.bounds.lower, config.bounds.upper

    sources = pop.copy()
    size, dim = sources.shape
    values = np.array([objective(x) for x in sources])
    trials = np.zeros(size, dtype=int)
    for x, v in zip(sources, values):
        protocol.offer(x, v)

    def neighbor(i):
        j = rng.integers(dim)
        k = rng.integers(size - 1)
        if k >= i:
            k += 1
        candidate = sources[i].copy()
        candidate[j] += rng.uniform(-1.0, 1.0) * (sources[i, j] - sources[k, j])
        return np.clip(candidate, lower, upper)

    def greedy(i, candidate):
        value = objective(candidate)
        protocol.offer(candidate, value)
        if value < values[i]:
            sources[i], values[i] = candidate, value
            trials[i] = 0
        else:
            trials[i] += 1

    while True:
        for i in range(size):
            greedy(i, neighbor(i))
        finite = np.isfinite(values)
        if finite.any():
            worst = values[finite].max()
            fitness = np.where(finite, worst - values + 1e-12, 0.0)
        else:
            fitness = np.ones(size)
        total = fitness.sum()
        probs = fitness / total if total > 0 else np.full(size, 1.0 / size)
        for i in rng.choice(size, size=size, p=probs):
            greedy(i, neighbor(i))
        for i in np.flatnonzero(trials > limit):
            sources[i] = lower + (upper - lower) * rng.random(dim)
            values[i] = objective(sources[i])
            trials[i] = 0
            protocol.offer(sources[i], values[i])
        if not protocol.end_iteration():
            return


def _run_hs(objective, config, pop, rng, protocol):
    """Harmony search; each improvisation is one iteration.

    The pitch bandwidth decays geometrically over the iteration budget so
    late improvisations refine instead of jittering at the initial scale.
    """
    params = config.algorithm_params
    memory_rate = params.get("memory_rate", 0.9)
    pitch_rate = params.get("pitch_rate", 0.35)
    bw_max = params.get("bandwidth_fraction", 0.05)
    bw_min = params.get("bandwidth_floor", 1e-7)
    lower, upper = config.bounds.lower, config.bounds.upper
    span = upper - lower
    # reach the bandwidth floor a third of the way through the budget
    decay = 3.0 * np.log(bw_min / bw_max) / config.max_iterations

    memory = pop.copy()
    size, dim = memory.shape
    values = np.array([objective(x) for x in memory])
    for x, v in zip(memory, values):
        protocol.offer(x, v)
    while True:
        bandwidth = span * max(bw_max * np.exp(decay * protocol.iteration), bw_min)
        harmony = np.empty(dim)
        for j in range(dim):
            if rng.random() < memory_rate:
                harmony[j] = memory[rng.integers(size), j]
                if rng.random() < pitch_rate:
                    harmony[j] += bandwidth[j] * rng.uniform(-1.0, 1.0)
            else:
                harmony[j] = lower[j] + (upper[j] - lower[j]) * rng.random()
        harmony = np.clip(harmony, lower, upper)
        value = objective(harmony)
        protocol.offer(harmony, value)
        worst = int(np.argmax(values))
        if value < values[worst]:
            memory[worst], values[worst] = harmony, value
        if not protocol.end_iteration():
            return


_RUNNERS = {
    "gsa": _run_gsa,
    "de": _run_de,
    "pso": _run_pso,
    "abc": _run_abc,
    "hs": _run_hs,
}


def minimize(objective: Callable[[np.ndarray], float],
             config: OptimizerConfig) -> OptimizerRun:
    """Run the configured metaheuristic under the shared protocol.

    The returned best point always lies inside the bounds and its value is
    re-evaluated on exit, so ``best_value == objective(best_point)`` holds for
    deterministic objectives.
    """
    lower, upper = config.bounds.lower, config.bounds.upper
    if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
        raise ValueError("search bounds must be finite on every coordinate; "
                         "truncate infinite box edges first")
    if np.any(lower >= upper):
        raise ValueError("search bounds must satisfy lower < upper")

    dim = lower.size
    pop = initial_population(config, dim)
    protocol = _Protocol(config)
    started = time.perf_counter()
    _RUNNERS[config.algorithm](objective, config, pop, _move_rng(config), protocol)
    elapsed = time.perf_counter() - started

    best_point = np.clip(protocol.best_point, lower, upper)
    return OptimizerRun(
        best_point=best_point,
        best_value=float(objective(best_point)),
        iterations_used=protocol.iteration,
        converged=protocol.converged,
        wall_time=elapsed,
        algorithm=config.algorithm,
        seed=config.seed,
        initial_population=pop,
        trace=protocol.trace,
    )


def compare_optimizers(problems: Sequence[Callable[[np.ndarray], float]],
                       algorithms: Sequence[str],
                       config: OptimizerConfig,
                       problem_names: Optional[Sequence[str]] = None,
                       ) -> ComparisonReport:
    """Run every algorithm on every problem under shared seeds and rules.

    Problem ``j`` uses seed ``config.seed + j`` for all algorithms, so their
    starting populations coincide bitwise.
    """
    if len(problems) < 1:
        raise ValueError("need at least one problem")
    if len(algorithms) < 2:
        raise ValueError("need at least two algorithms to compare")
    names = list(problem_names) if problem_names is not None else \
        [f"problem_{j}" for j in range(len(problems))]

    shape = (len(problems), len(algorithms))
    times = np.empty(shape)
    values = np.empty(shape)
    converged = np.zeros(shape, dtype=bool)
    for j, problem in enumerate(problems):
        for k, algorithm in enumerate(algorithms):
            run = minimize(problem, replace(config, algorithm=algorithm,
                                            seed=config.seed + j))
            times[j, k] = run.wall_time
            values[j, k] = run.best_value
            converged[j, k] = run.converged
    errors = np.abs(values - values.min(axis=1, keepdims=True))
    return ComparisonReport(problems=names, algorithms=list(algorithms),
                            times=times, values=values, errors=errors,
                            converged=converged)


def pool_objective(frechet: Sequence[FrechetParams], m: int, seed: int,
                   model: TailModel, p: float) -> Callable[[np.ndarray], float]:
    """Practical pooling objective: lambda -> total simulated DR.

    One loss sample of size ``m`` is frozen at construction and reused for
    every evaluation (common random numbers), making the objective
    deterministic. Degenerate pools (no coverage anywhere) evaluate to +inf so
    metaheuristics stay total.
    """
    n = len(frechet)
    if model.n != n:
        raise ValueError(
            f"model has {model.n} participants, sample spec has {n}")
    rank = int(np.floor(p * m))
    if rank < 1:
        raise ValueError(f"floor(p * m) must be >= 1, got p={p}, m={m}")

    uniforms = np.random.default_rng(seed).random((m, n))
    losses = np.empty((m, n), order="F")
    for i, params in enumerate(frechet):
        with np.errstate(divide="ignore"):
            losses[:, i] = params.scale * (-np.log(uniforms[:, i])) \
                ** (-1.0 / params.alpha)
    loss_rank_stat = np.array(
        [np.partition(losses[:, i], rank - 1)[rank - 1] for i in range(n)])

    quantiles = np.array([frechet_quantile(params, p) for params in frechet])
    a1 = model.alphas[0]
    attach = model.xi ** (a1 / model.alphas) * quantiles

    def objective(lam) -> float:
        lam = np.asarray(lam, dtype=float)
        limits = lam * attach
        widths = np.maximum(limits - attach, 0.0)
        expected = np.array([
            frechet_layer_expectation(params, LayerSpec(attach[i], attach[i] + widths[i]))
            for i, params in enumerate(frechet)])
        total_expected = expected.sum()
        if total_expected == 0.0:
            logger.debug("degenerate pool at lambda=%s: no expected coverage", lam)
            return np.inf
        layers = np.clip(losses - attach, 0.0, widths)
        aggregate = layers.sum(axis=1)
        aggregate_rank_stat = np.partition(aggregate, rank - 1)[rank - 1]

        total = 0.0
        for i in range(n):
            q = quantiles[i]
            if q <= attach[i]:
                retained = 1.0
            elif q <= limits[i]:
                retained = attach[i] / q
            else:
                retained = 1.0 - widths[i] / q
            share = (expected[i] / total_expected
                     * aggregate_rank_stat / loss_rank_stat[i])
            total += retained + share
        return total

    return objective
