"""Genetic-algorithm selection of 5 spectral bands.

Each chromosome is an ordered list of five unique 1-based band indices in
the binned 116-band space. Fitness is the validation accuracy of a compact
CNN trained on just those bands (reduced epoch budget), memoized by band
set. The generational loop is tournament selection, two-point crossover,
then per-gene uniform integer mutation; offspring with duplicate or
out-of-range genes score 0 instead of being repaired, which keeps the
population size fixed. A hall of fame preserves the best chromosome ever
evaluated, so the reported best is non-decreasing across generations.

Runs are reproducible: one seeded generator drives every stochastic
operator, and each fitness evaluation derives its own training seed from
the run seed plus the band set, so concurrent evaluation cannot change
results.
"""
from __future__ import annotations

import hashlib
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import cnn
from .data import DegenerateDataset, LabeledSample, require_both_classes, stack_samples

log = logging.getLogger(__name__)

CHROMOSOME_LENGTH = 5
DEFAULT_BAND_RANGE = (7, 107)


class EmptySearchRange(ValueError):
    """Band range too small to hold five unique genes."""


class UnevaluatedFitness(ValueError):
    """Selection ran against a population with missing fitness values."""


@dataclass
class Chromosome:
    genes: tuple[int, ...]
    fitness: Optional[float] = None

    def __post_init__(self):
        self.genes = tuple(int(g) for g in self.genes)

    def key(self) -> tuple[int, ...]:
        """Canonical band set; fitness depends only on this."""
        return tuple(sorted(self.genes))

    def is_valid(self, band_range: tuple[int, int]) -> bool:
        lo, hi = band_range
        return (len(self.genes) == CHROMOSOME_LENGTH
                and len(set(self.genes)) == CHROMOSOME_LENGTH
                and all(lo <= g <= hi for g in self.genes))


def _default_fitness_train() -> cnn.TrainConfig:
    # reduced budget for the inner loop; final models train with the full one
    return cnn.TrainConfig(max_epochs=15, patience=3, val_fraction=0.2)


@dataclass
class GaConfig:
    population: int = 12
    generations: int = 8
    crossover_prob: float = 0.7
    mutation_prob: float = 0.2
    tournament_size: int = 3
    band_range: tuple[int, int] = DEFAULT_BAND_RANGE
    seed: int = 0
    fitness_train: cnn.TrainConfig = field(default_factory=_default_fitness_train)
    workers: int = 1

    def __post_init__(self):
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise ValueError(f"crossover_prob must be in [0,1], got {self.crossover_prob}")
        if not 0.0 <= self.mutation_prob <= 1.0:
            raise ValueError(f"mutation_prob must be in [0,1], got {self.mutation_prob}")
        if self.tournament_size > self.population:
            raise ValueError("tournament_size cannot exceed population")
        if self.population < 2 or self.generations < 1:
            raise ValueError("population must be >= 2 and generations >= 1")


@dataclass
class GenerationRecord:
    generation: int
    best_fitness: float
    mean_fitness: float
    min_fitness: float
    best: Chromosome
    best_so_far: float


@dataclass
class GaHistory:
    records: list[GenerationRecord] = field(default_factory=list)
    evaluations: int = 0
    cache_hits: int = 0


class FitnessCache:
    """Thread-safe memo of band set -> fitness."""

    def __init__(self):
        self._values: dict[tuple[int, ...], float] = {}
        self._lock = threading.Lock()
        self.hits = 0

    def get(self, key: tuple[int, ...]) -> Optional[float]:
        with self._lock:
            value = self._values.get(key)
            if value is not None:
                self.hits += 1
            return value

    def peek(self, key: tuple[int, ...]) -> Optional[float]:
        with self._lock:
            return self._values.get(key)

    def put(self, key: tuple[int, ...], value: float) -> None:
        with self._lock:
            self._values[key] = value

    def __len__(self) -> int:
        return len(self._values)


def derive_seed(base_seed: int, genes: Sequence[int]) -> int:
    """Stable per-band-set training seed; independent of evaluation order."""
    text = f"{base_seed}:{','.join(str(g) for g in sorted(genes))}"
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "little") % (2 ** 31)


def slice_bands(X: np.ndarray, genes: Sequence[int]) -> np.ndarray:
    """Select 1-based band indices (in canonical sorted order) from
    (N, bands, rows, cols) data."""
    idx = [g - 1 for g in sorted(genes)]
    return np.ascontiguousarray(X[:, idx, :, :])


def _evaluate_genes(X: np.ndarray, y: np.ndarray, genes: tuple[int, ...],
                    cfg: GaConfig) -> float:
    # per-band-set training seed, but one shared validation split per run:
    # otherwise the hall of fame collects whichever weak chromosome drew the
    # luckiest split (extreme-value bias), not the best band set
    train_cfg = replace(cfg.fitness_train, seed=derive_seed(cfg.seed, genes),
                        split_seed=cfg.seed)
    try:
        _, history = cnn.train(None, train_cfg, X=slice_bands(X, genes), y=y)
    except (cnn.NonFiniteLoss, DegenerateDataset) as exc:
        log.warning("fitness evaluation failed for bands %s: %s", genes, exc)
        return 0.0
    return float(history.best.val_acc)


def evaluate_fitness(chromosome: Chromosome, dataset: Sequence[LabeledSample],
                     cfg: GaConfig, cache: Optional[FitnessCache] = None) -> float:
    """Validation accuracy of a CNN trained on the chromosome's bands.

    Invalid chromosomes (duplicate or out-of-range genes) score 0 without
    any training.
    """
    X, y = stack_samples(dataset)
    return _fitness_with_cache(X, y, chromosome, cfg, cache or FitnessCache())


def _fitness_with_cache(X: np.ndarray, y: np.ndarray, chromosome: Chromosome,
                        cfg: GaConfig, cache: FitnessCache) -> float:
    lo, hi = cfg.band_range
    effective_range = (lo, min(hi, X.shape[1]))
    if not chromosome.is_valid(effective_range):
        return 0.0
    key = chromosome.key()
    hit = cache.get(key)
    if hit is not None:
        return hit
    value = _evaluate_genes(X, y, key, cfg)
    cache.put(key, value)
    return value


def two_point_crossover(a: Chromosome, b: Chromosome,
                        rng: np.random.Generator) -> tuple[Chromosome, Chromosome]:
    """Swap the segment between two cuts 1 <= p < q < 5; fitness is cleared.

    Offspring may carry duplicate genes; downstream evaluation penalizes
    them rather than repairing.
    """
    p, q = sorted(rng.choice(np.arange(1, CHROMOSOME_LENGTH), size=2, replace=False))
    child_a = a.genes[:p] + b.genes[p:q] + a.genes[q:]
    child_b = b.genes[:p] + a.genes[p:q] + b.genes[q:]
    return Chromosome(child_a), Chromosome(child_b)


def mutate_uniform_int(c: Chromosome, per_gene_prob: float,
                       band_range: tuple[int, int],
                       rng: np.random.Generator) -> Chromosome:
    """Each gene independently redrawn uniformly from the range with the
    given probability; fitness survives only if no gene changed value."""
    lo, hi = band_range
    genes = list(c.genes)
    changed = False
    for i in range(len(genes)):
        if rng.random() < per_gene_prob:
            fresh = int(rng.integers(lo, hi + 1))
            if fresh != genes[i]:
                changed = True
            genes[i] = fresh
    return Chromosome(tuple(genes), fitness=None if changed else c.fitness)


def tournament_select(population: Sequence[Chromosome], k: int,
                      rng: np.random.Generator) -> Chromosome:
    """Best of k draws with replacement; ties go to the earliest index."""
    for ch in population:
        if ch.fitness is None:
            raise UnevaluatedFitness(f"chromosome {ch.genes} has no fitness")
    draws = rng.integers(0, len(population), size=k)
    best_idx = min(sorted(set(int(d) for d in draws)),
                   key=lambda i: (-population[i].fitness, i))
    return population[best_idx]


def run_ga(dataset: Sequence[LabeledSample], cfg: GaConfig,
           X: Optional[np.ndarray] = None,
           y: Optional[np.ndarray] = None) -> tuple[Chromosome, GaHistory]:
    """Full generational loop; returns the hall-of-fame best and history."""
    if X is None or y is None:
        X, y = stack_samples(dataset)
    require_both_classes(y, min_per_class=2)
    lo, hi = cfg.band_range
    hi = min(hi, X.shape[1])
    if hi - lo + 1 < CHROMOSOME_LENGTH:
        raise EmptySearchRange(f"band range {lo}..{hi} holds fewer than "
                               f"{CHROMOSOME_LENGTH} bands")

    rng = np.random.default_rng(cfg.seed)
    cache = FitnessCache()
    history = GaHistory()
    hof: Optional[Chromosome] = None

    def evaluate_all(chromosomes: list[Chromosome]) -> None:
        pending = [c for c in chromosomes if c.fitness is None]
        uncached = [c for c in pending if cache.peek(c.key()) is None
                    and c.is_valid((lo, hi))]
        history.evaluations += len({c.key() for c in uncached})
        if cfg.workers > 1:
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                results = list(pool.map(
                    lambda c: _fitness_with_cache(X, y, c, cfg, cache), pending))
            for c, f in zip(pending, results):
                c.fitness = f
        else:
            for c in pending:
                c.fitness = _fitness_with_cache(X, y, c, cfg, cache)

    def update_hof(chromosomes: list[Chromosome]) -> None:
        nonlocal hof
        for c in chromosomes:
            if hof is None or c.fitness > hof.fitness:
                hof = Chromosome(c.genes, c.fitness)

    population = []
    values = np.arange(lo, hi + 1)
    for _ in range(cfg.population):
        genes = rng.choice(values, size=CHROMOSOME_LENGTH, replace=False)
        population.append(Chromosome(tuple(int(g) for g in genes)))
    evaluate_all(population)
    update_hof(population)

    for gen in range(1, cfg.generations + 1):
        parents = [tournament_select(population, cfg.tournament_size, rng)
                   for _ in range(cfg.population)]
        offspring: list[Chromosome] = []
        for i in range(0, cfg.population - 1, 2):
            a, b = parents[i], parents[i + 1]
            if rng.random() < cfg.crossover_prob:
                a, b = two_point_crossover(a, b, rng)
            else:
                a, b = Chromosome(a.genes, a.fitness), Chromosome(b.genes, b.fitness)
            offspring.extend([a, b])
        if len(offspring) < cfg.population:
            last = parents[-1]
            offspring.append(Chromosome(last.genes, last.fitness))
        offspring = [mutate_uniform_int(c, cfg.mutation_prob, (lo, hi), rng)
                     for c in offspring]
        evaluate_all(offspring)
        population = offspring
        update_hof(population)

        fitnesses = np.array([c.fitness for c in population])
        best_idx = int(np.argmax(fitnesses))
        history.records.append(GenerationRecord(
            generation=gen,
            best_fitness=float(fitnesses.max()),
            mean_fitness=float(fitnesses.mean()),
            min_fitness=float(fitnesses.min()),
            best=Chromosome(population[best_idx].genes, population[best_idx].fitness),
            best_so_far=float(hof.fitness),
        ))

    history.cache_hits = cache.hits
    return hof, history
