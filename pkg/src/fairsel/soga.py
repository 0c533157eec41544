"""Elitist single-objective GA minimizing ``|SPD|`` of the wrapped classifier."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from fairsel.evolve import (
    EvolveConfig,
    Individual,
    crossover_single_point,
    generation_rng,
    lower_objective,
    mutate_bitflip,
    random_population,
    repair,
    tournament_select,
)


@dataclass
class SogaResult:
    best: Individual
    history: list[dict] = field(default_factory=list)
    evaluations_used: int = 0


def fitness_spd(record) -> float:
    """``|SPD|`` of an evaluation record; failed trainings score ``inf``."""
    return math.inf if getattr(record, "failed", False) else float(record.spd_abs)


def _evaluate(ind: Individual, evaluate: Callable) -> Individual:
    ind.record = evaluate(ind.chromosome)
    ind.objectives = (fitness_spd(ind.record),)
    return ind


def run_soga(
    config: EvolveConfig,
    evaluate: Callable[[np.ndarray], object],
    n_features: int,
    protected_index: int | None = None,
) -> SogaResult:
    """Run ``config.generations`` evaluated generations (the random one included).

    Each new generation holds the best individual seen so far plus children
    bred by tournament selection, single-point crossover, bit-flip mutation
    and repair.
    """
    fp = config.force_protected
    N = config.population_size
    rng = generation_rng(config.seed, 0)
    pop = [Individual(c) for c in random_population(config, n_features, rng, protected_index)]
    best: Individual | None = None
    history = []
    n_evals = 0

    for gen in range(config.generations):
        for ind in pop:
            if ind.objectives is None:
                _evaluate(ind, evaluate)
                n_evals += 1
        for ind in pop:
            if best is None or ind.objectives[0] < best.objectives[0]:
                best = ind
        scores = np.array([ind.objectives[0] for ind in pop])
        finite = scores[np.isfinite(scores)]
        history.append(
            {
                "generation": gen,
                "best_ever_spd_abs": best.objectives[0],
                "best_spd_abs": float(scores.min()),
                "mean_spd_abs": float(finite.mean()) if finite.size else math.inf,
            }
        )
        if gen == config.generations - 1:
            break

        rng = generation_rng(config.seed, gen + 1)
        nxt = [best]
        while len(nxt) < N:
            a = tournament_select(pop, config.tournament_size, lower_objective, rng)
            b = tournament_select(pop, config.tournament_size, lower_objective, rng)
            for c in crossover_single_point(a.chromosome, b.chromosome, config.crossover_rate, rng):
                c = repair(mutate_bitflip(c, config.mutation_rate, rng), fp, protected_index, rng)
                nxt.append(Individual(c))
        pop = nxt[:N]

    return SogaResult(best=best, history=history, evaluations_used=n_evals)
