"""NSGA-II over feature masks, minimizing ``(1 - F1, |SPD|)``."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from fairsel.evolve import (
    EvolveConfig,
    Individual,
    bits_to_int,
    bits_to_str,
    crossover_hux,
    crowded_better,
    generation_rng,
    mutate_bitflip,
    random_population,
    repair,
    tournament_select,
)

log = logging.getLogger(__name__)


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """True when ``a`` is no worse than ``b`` everywhere and strictly better somewhere."""
    strictly = False
    for x, y in zip(a, b):
        if x > y:
            return False
        if x < y:
            strictly = True
    return strictly


def _objective_matrix(population: Sequence[Individual]) -> np.ndarray:
    if any(ind.objectives is None for ind in population):
        raise ValueError("non-dominated sorting needs evaluated individuals")
    return np.array([ind.objectives for ind in population], dtype=float).reshape(len(population), -1)


def domination_matrix(F: np.ndarray) -> np.ndarray:
    """``D[i, j]`` is True when row ``i`` dominates row ``j``."""
    le = (F[:, None, :] <= F[None, :, :]).all(axis=2)
    lt = (F[:, None, :] < F[None, :, :]).any(axis=2)
    return le & lt


def non_dominated_ranks(F: np.ndarray) -> np.ndarray:
    """Front index of every row of ``F`` by dominance counting."""
    n = F.shape[0]
    rank = np.full(n, -1, dtype=int)
    if n == 0:
        return rank
    D = domination_matrix(F)
    count = D.sum(axis=0)
    current = np.flatnonzero(count == 0)
    r = 0
    while current.size:
        rank[current] = r
        count = count - D[current].sum(axis=0)
        count[rank >= 0] = -1
        current = np.flatnonzero(count == 0)
        r += 1
    return rank


def fast_non_dominated_sort(population: Sequence[Individual]) -> list[list[Individual]]:
    """Partition into fronts (rank 0 first) and set ``Individual.rank``."""
    ranks = non_dominated_ranks(_objective_matrix(population))
    fronts: list[list[Individual]] = [[] for _ in range(ranks.max() + 1 if len(ranks) else 0)]
    for ind, r in zip(population, ranks):
        ind.rank = int(r)
        fronts[r].append(ind)
    return fronts


def crowding_distance(front: Sequence[Individual]) -> None:
    """Assign crowding distances in place; boundary members get ``inf``."""
    n = len(front)
    if n == 0:
        return
    if n <= 2:
        for ind in front:
            ind.crowding = math.inf
        return
    F = _objective_matrix(front)
    tiebreak = np.array([bits_to_int(ind.chromosome) for ind in front], dtype=object)
    dist = np.zeros(n)
    for m in range(F.shape[1]):
        order = sorted(range(n), key=lambda i: (F[i, m], tiebreak[i]))
        lo, hi = F[order[0], m], F[order[-1], m]
        dist[order[0]] = dist[order[-1]] = math.inf
        if hi == lo:
            continue
        for prev, cur, nxt in zip(order, order[1:], order[2:]):
            dist[cur] += (F[nxt, m] - F[prev, m]) / (hi - lo)
    for ind, d in zip(front, dist):
        ind.crowding = float(d)


def rank_and_crowd(population: Sequence[Individual]) -> list[list[Individual]]:
    fronts = fast_non_dominated_sort(population)
    for front in fronts:
        crowding_distance(front)
    return fronts


def environmental_selection(pool: Sequence[Individual], target_size: int) -> list[Individual]:
    """Fill by front; cut the overflowing front by crowding, then by chromosome value."""
    if len(pool) < target_size:
        raise ValueError(f"cannot select {target_size} from a pool of {len(pool)}")
    chosen: list[Individual] = []
    for front in rank_and_crowd(pool):
        room = target_size - len(chosen)
        if room <= 0:
            break
        if len(front) <= room:
            chosen.extend(front)
        else:
            front = sorted(front, key=lambda ind: (-ind.crowding, bits_to_int(ind.chromosome)))
            chosen.extend(front[:room])
    return chosen


def eliminate_duplicates(
    chromosomes: Sequence[np.ndarray],
    rng,
    mutation_rate: float = 0.05,
    existing: Sequence[np.ndarray] = (),
    force_protected: bool = False,
    protected_index: int | None = None,
    max_attempts: int = 200,
) -> list[np.ndarray]:
    """Drop repeated chromosomes (and any already in ``existing``), then refill.

    Each empty slot is refilled with a bit-flipped, repaired copy of a random
    survivor until it is new.  The output is shorter than the input only when
    ``max_attempts`` tries per slot fail, i.e. the search space is exhausted.
    """
    seen = {bits_to_str(c) for c in existing}
    out: list[np.ndarray] = []
    for c in chromosomes:
        key = bits_to_str(c)
        if key not in seen:
            seen.add(key)
            out.append(np.asarray(c, dtype=bool))
    missing = len(chromosomes) - len(out)
    if not missing:
        return out
    sources = out or [np.asarray(c, dtype=bool) for c in chromosomes]
    if not sources:
        return out
    rate = max(mutation_rate, 1.0 / len(sources[0]))
    for _ in range(missing):
        for _ in range(max_attempts):
            parent = sources[int(rng.integers(len(sources)))]
            child = repair(mutate_bitflip(parent, rate, rng), force_protected, protected_index, rng)
            key = bits_to_str(child)
            if key not in seen:
                seen.add(key)
                out.append(child)
                break
        else:
            log.debug("duplicate refill gave up; search space looks exhausted")
            break
    return out


def hypervolume_2d(points, reference=(1.0, 1.0)) -> float:
    """Area dominated by ``points`` (minimization) and bounded by ``reference``."""
    rx, ry = reference
    pts = sorted((float(x), float(y)) for x, y in points if x < rx and y < ry)
    area, best_y = 0.0, ry
    for x, y in pts:
        if y >= best_y:
            continue
        area += (rx - x) * (best_y - y)
        best_y = y
    return area


@dataclass
class NsgaResult:
    front: list[Individual]
    population: list[Individual]
    history: list[dict] = field(default_factory=list)
    evaluations: int = 0


def _evaluate(chromosomes, evaluate: Callable) -> list[Individual]:
    pop = []
    for c in chromosomes:
        rec = evaluate(c)
        pop.append(Individual(chromosome=c, objectives=(1.0 - rec.f1, rec.spd_abs), record=rec))
    return pop


def _history_row(generation: int, pop: Sequence[Individual]) -> dict:
    F = _objective_matrix(pop)
    return {
        "generation": generation,
        "front_size": sum(1 for ind in pop if ind.rank == 0),
        "best_f1_loss": float(F[:, 0].min()),
        "mean_f1_loss": float(F[:, 0].mean()),
        "best_spd_abs": float(F[:, 1].min()),
        "mean_spd_abs": float(F[:, 1].mean()),
    }


def run_nsga2(
    config: EvolveConfig,
    evaluate: Callable[[np.ndarray], object],
    n_features: int,
    protected_index: int | None = None,
) -> NsgaResult:
    """Evolve feature masks with NSGA-II.

    ``evaluate`` maps a boolean mask to a record carrying ``f1`` and ``spd_abs``.
    ``config.generations`` counts evaluated populations, the initial one
    included.  Offspring: binary crowded tournaments, HUX with probability
    ``crossover_rate``, bit-flip mutation, repair, duplicate elimination
    against the parents, then (mu + lambda) environmental selection.
    """
    N = config.population_size
    fp = config.force_protected
    rng = generation_rng(config.seed, 0)
    chroms = random_population(config, n_features, rng, protected_index)
    chroms = eliminate_duplicates(chroms, rng, config.mutation_rate, (), fp, protected_index)
    pop = _evaluate(chroms, evaluate)
    n_evals = len(pop)
    rank_and_crowd(pop)
    history = [_history_row(0, pop)]

    for gen in range(1, config.generations):
        rng = generation_rng(config.seed, gen)
        children: list[np.ndarray] = []
        while len(children) < N:
            a = tournament_select(pop, config.tournament_size, crowded_better, rng)
            b = tournament_select(pop, config.tournament_size, crowded_better, rng)
            if rng.random() < config.crossover_rate:
                c1, c2 = crossover_hux(a.chromosome, b.chromosome, rng)
            else:
                c1, c2 = a.chromosome.copy(), b.chromosome.copy()
            for c in (c1, c2):
                c = mutate_bitflip(c, config.mutation_rate, rng)
                children.append(repair(c, fp, protected_index, rng))
        children = eliminate_duplicates(
            children[:N], rng, config.mutation_rate, [ind.chromosome for ind in pop], fp, protected_index
        )
        offspring = _evaluate(children, evaluate)
        n_evals += len(offspring)
        merged = pop + offspring
        pop = environmental_selection(merged, min(N, len(merged)))
        history.append(_history_row(gen, pop))

    front = [ind for ind in pop if ind.rank == 0]
    return NsgaResult(front=front, population=pop, history=history, evaluations=n_evals)
