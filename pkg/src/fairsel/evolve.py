"""Bit-string chromosomes and the genetic operators shared by both optimizers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from fairsel.errors import ConfigError


@dataclass(frozen=True)
class EvolveConfig:
    population_size: int = 40
    crossover_rate: float = 0.5
    mutation_rate: float = 0.05
    tournament_size: int = 2
    generations: int = 50
    seed: int = 0
    force_protected: bool = False

    def __post_init__(self):
        if self.population_size < 2 or self.population_size % 2:
            raise ConfigError("population_size must be an even number >= 2")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.tournament_size < 1 or self.generations < 1:
            raise ConfigError("tournament_size and generations must be positive")

    def to_dict(self) -> dict:
        return {
            "population_size": self.population_size,
            "crossover_rate": self.crossover_rate,
            "mutation_rate": self.mutation_rate,
            "tournament_size": self.tournament_size,
            "generations": self.generations,
            "seed": self.seed,
            "force_protected": self.force_protected,
        }


@dataclass(eq=False)
class Individual:
    chromosome: np.ndarray
    objectives: tuple[float, ...] | None = None
    rank: int | None = None
    crowding: float | None = None
    record: object = None
    extra: dict = field(default_factory=dict)

    @property
    def key(self) -> str:
        return bits_to_str(self.chromosome)


def bits_to_str(bits) -> str:
    return "".join("1" if b else "0" for b in bits)


def str_to_bits(s: str) -> np.ndarray:
    if not s or set(s) - {"0", "1"}:
        raise ValueError(f"not a bit string: {s!r}")
    return np.array([c == "1" for c in s], dtype=bool)


def bits_to_int(bits) -> int:
    """Chromosome as an unsigned big-endian integer (first gene most significant)."""
    return int(bits_to_str(bits), 2)


def generation_rng(seed: int, generation: int) -> np.random.Generator:
    return np.random.default_rng([seed, generation])


def repair(c, force_protected: bool, protected_index: int | None, rng) -> np.ndarray:
    """Force the protected gene on when asked; give an empty chromosome one random gene."""
    c = np.array(c, dtype=bool)
    if force_protected:
        if protected_index is None:
            raise ConfigError("force_protected needs a protected feature index")
        c[protected_index] = True
    if not c.any():
        c[int(rng.integers(c.size))] = True
    return c


def random_population(
    config: EvolveConfig, n_features: int, rng, protected_index: int | None = None
) -> list[np.ndarray]:
    if n_features < 1:
        raise ValueError("chromosomes need at least one gene")
    pop = []
    for _ in range(config.population_size):
        c = rng.random(n_features) < 0.5
        pop.append(repair(c, config.force_protected, protected_index, rng))
    return pop


def tournament_select(
    population: Sequence[Individual],
    k: int,
    better: Callable[[Individual, Individual], bool],
    rng,
) -> Individual:
    """Draw ``k`` contestants with replacement; the first-drawn wins ties."""
    if not population:
        raise ValueError("empty population")
    winner = None
    for _ in range(k):
        cand = population[int(rng.integers(len(population)))]
        if cand.objectives is None:
            raise ValueError("tournament over an unevaluated individual")
        if winner is None or better(cand, winner):
            winner = cand
    return winner


def lower_objective(a: Individual, b: Individual) -> bool:
    return a.objectives[0] < b.objectives[0]


def crowded_better(a: Individual, b: Individual) -> bool:
    if a.rank != b.rank:
        return a.rank < b.rank
    return a.crowding > b.crowding


def _check_pair(a, b):
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise ValueError(f"parent lengths differ: {a.size} vs {b.size}")
    return a, b


def crossover_single_point(a, b, rate: float, rng, cut: int | None = None):
    a, b = _check_pair(a, b)
    if a.size < 2:
        raise ValueError("single-point crossover needs length >= 2")
    if cut is None:
        if rng.random() >= rate:
            return a.copy(), b.copy()
        cut = int(rng.integers(1, a.size))
    c1 = np.concatenate([a[:cut], b[cut:]])
    c2 = np.concatenate([b[:cut], a[cut:]])
    return c1, c2


def crossover_hux(a, b, rng):
    """Exchange ``floor(d/2)`` of the ``d`` differing genes, chosen without replacement."""
    a, b = _check_pair(a, b)
    diff = np.flatnonzero(a != b)
    c1, c2 = a.copy(), b.copy()
    n_swap = diff.size // 2
    if n_swap:
        pos = rng.choice(diff, size=n_swap, replace=False)
        c1[pos], c2[pos] = b[pos], a[pos]
    return c1, c2


def mutate_bitflip(c, rate: float, rng) -> np.ndarray:
    c = np.asarray(c, dtype=bool)
    return c ^ (rng.random(c.size) < rate)


def hamming(a, b) -> int:
    return int(np.count_nonzero(np.asarray(a, dtype=bool) != np.asarray(b, dtype=bool)))


def space_size(n_features: int, force_protected: bool) -> int:
    """Number of distinct valid chromosomes."""
    return 2 ** (n_features - 1) if force_protected else 2**n_features - 1

