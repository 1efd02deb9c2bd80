"""Particle swarm search for the variable weights of the clustering distance.

The fitness of a weight vector is the total reconstruction error of the
windows after clustering them with those weights. Particles move freely in
``R^n``; each position is projected onto the simplex only when evaluated.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import InvalidConfigError
from .fcm import DEFAULT_MAX_ITER, DEFAULT_TOL, as_weight_vector, fit_fcm
from .reconstruction import reconstruct, reconstruction_error

_SUM_FLOOR = 1e-12
_CACHE_GRID = 1e-6


@dataclass(frozen=True)
class PsoConfig:
    particles: int = 500
    max_iter: int = 2000
    w_start: float = 0.9
    w_end: float = 0.4
    c1: float = 1.49
    c2: float = 1.49
    v_min: float = -0.25
    v_max: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.particles < 1 or self.max_iter < 1:
            raise InvalidConfigError("PSO needs at least one particle and one iteration")
        if not self.v_min < self.v_max:
            raise InvalidConfigError(f"v_min ({self.v_min}) must be below v_max ({self.v_max})")

    @classmethod
    def desk(cls, **overrides) -> "PsoConfig":
        """Reduced swarm for quick runs and CI."""
        return replace(cls(particles=30, max_iter=50), **overrides)

    def inertia(self, iteration: int) -> float:
        if self.max_iter == 1:
            return self.w_start
        frac = iteration / (self.max_iter - 1)
        return self.w_start + (self.w_end - self.w_start) * frac

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PsoResult:
    best_weights: np.ndarray
    best_fitness: float
    fitness_trace: list = field(default_factory=list)
    evaluations: int = 0


def project_to_simplex(raw) -> np.ndarray:
    """Clamp negatives to zero and rescale to unit sum (uniform if all vanish)."""
    z = np.clip(np.asarray(raw, dtype=float).reshape(-1), 0.0, None)
    total = z.sum()
    if total < _SUM_FLOOR:
        return np.full(z.size, 1.0 / z.size)
    return z / total


def particle_streams(seed, count: int) -> list:
    """Independent per-particle generators derived from ``(seed, index)``."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def pso_step(positions, velocities, pbests, gbest, iteration, config, rngs=None, r1=None, r2=None):
    """One synchronous velocity/position update for the whole swarm.

    ``r1`` and ``r2`` may be given explicitly; otherwise each particle draws
    its own per-dimension values from ``rngs[k]``.
    """
    z = np.asarray(positions, dtype=float)
    v = np.asarray(velocities, dtype=float)
    if r1 is None or r2 is None:
        draws = np.stack([g.random((2, z.shape[1])) for g in rngs])
        r1, r2 = draws[:, 0], draws[:, 1]
    w = config.inertia(iteration)
    v_new = (
        w * v
        + config.c1 * np.asarray(r1) * (np.asarray(pbests) - z)
        + config.c2 * np.asarray(r2) * (np.asarray(gbest) - z)
    )
    v_new = np.clip(v_new, config.v_min, config.v_max)
    return z + v_new, v_new


class WeightFitness:
    """Reconstruction error as a function of the weights, with a small cache.

    The clustering seed is fixed so fitness is a deterministic function of the
    weights. Weight vectors closer than 1e-6 per coordinate share a cache slot.
    """

    def __init__(self, W, c, m=2.0, fcm_seed=0, fcm_tol=DEFAULT_TOL, fcm_max_iter=DEFAULT_MAX_ITER):
        self.W = W
        self.c = c
        self.m = m
        self.fcm_seed = fcm_seed
        self.fcm_tol = fcm_tol
        self.fcm_max_iter = fcm_max_iter
        self.cache = {}
        self.evaluations = 0

    def evaluate(self, weights) -> float:
        lam = as_weight_vector(weights)
        model = fit_fcm(
            self.W, self.c, self.m, lam, seed=self.fcm_seed, tol=self.fcm_tol, max_iter=self.fcm_max_iter
        )
        return reconstruction_error(self.W, reconstruct(model.partition, model.centers, model.m))

    @staticmethod
    def key(lam) -> tuple:
        return tuple(np.round(np.asarray(lam) / _CACHE_GRID).astype(np.int64).tolist())

    def batch(self, weight_rows, workers: int = 1):
        """Evaluate rows in index order; returns ``(weights_used, fitness)`` pairs."""
        keys = [self.key(lam) for lam in weight_rows]
        todo = {}
        for k, lam in zip(keys, weight_rows):
            if k not in self.cache and k not in todo:
                todo[k] = lam
        if todo:
            items = list(todo.items())
            if workers > 1 and len(items) > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    values = list(pool.map(lambda kv: self.evaluate(kv[1]), items))
            else:
                values = [self.evaluate(lam) for _, lam in items]
            for (k, lam), f in zip(items, values):
                self.cache[k] = (np.array(lam), f)
            self.evaluations += len(items)
        return [self.cache[k] for k in keys]


def optimize_weights(
    W,
    c: int,
    m: float = 2.0,
    config: PsoConfig | None = None,
    fcm_seed=0,
    fcm_tol: float = DEFAULT_TOL,
    fcm_max_iter: int = DEFAULT_MAX_ITER,
    workers: int = 1,
) -> PsoResult:
    """Search the weight simplex for the lowest reconstruction error.

    Particle 0 starts at the uniform vector, so the result is never worse than
    unweighted clustering. A single-variable problem is evaluated once.
    """
    config = config or PsoConfig()
    items = getattr(W, "items", W)
    n = items.shape[1]
    fitness = WeightFitness(W, c, m, fcm_seed, fcm_tol, fcm_max_iter)

    if n == 1:
        (lam, f), = fitness.batch([np.ones(1)])
        return PsoResult(lam, f, [f], fitness.evaluations)

    M = config.particles
    rngs = particle_streams(config.seed, M)
    positions = np.empty((M, n))
    velocities = np.empty((M, n))
    for k, g in enumerate(rngs):
        positions[k] = g.random(n)
        velocities[k] = g.uniform(config.v_min, config.v_max, n)
    positions[0] = 1.0 / n

    def score(pos):
        return fitness.batch([project_to_simplex(z) for z in pos], workers)

    evaluated = score(positions)
    pbest = positions.copy()
    pbest_fit = np.array([f for _, f in evaluated])
    pbest_lam = [lam for lam, _ in evaluated]
    g = int(np.argmin(pbest_fit))
    gbest, gbest_fit, gbest_lam = pbest[g].copy(), pbest_fit[g], pbest_lam[g]
    trace = [float(gbest_fit)]

    for it in range(config.max_iter):
        positions, velocities = pso_step(positions, velocities, pbest, gbest, it, config, rngs)
        evaluated = score(positions)
        for k, (lam, f) in enumerate(evaluated):
            if f < pbest_fit[k]:
                pbest[k] = positions[k]
                pbest_fit[k] = f
                pbest_lam[k] = lam
        g = int(np.argmin(pbest_fit))
        if pbest_fit[g] < gbest_fit:
            gbest, gbest_fit, gbest_lam = pbest[g].copy(), pbest_fit[g], pbest_lam[g]
        trace.append(float(gbest_fit))

    return PsoResult(np.array(gbest_lam), float(gbest_fit), trace, fitness.evaluations)
