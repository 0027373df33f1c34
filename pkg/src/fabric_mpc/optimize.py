"""Derivative-free minimizers over flattened action sequences.

Both optimizers evaluate the objective on a whole population at a time
through ``batch``; by default that maps the scalar objective over rows.
Ties in cost are broken by sample index, so results never depend on how a
batch was evaluated.
"""

from __future__ import annotations

import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

Objective = Callable[[np.ndarray], float]
BatchObjective = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CemConfig:
    iterations: int = 10
    population: int = 2000
    elite_frac: float = 0.1
    alpha: float = 0.1
    init_mean: Sequence[float] | None = None
    init_var: Sequence[float] | None = None
    lower: float | None = None
    upper: float | None = None

    def __post_init__(self):
        if not 0 < self.elite_frac < 1:
            raise ValueError("elite_frac must be in (0, 1)")
        if self.population < 2 / self.elite_frac:
            raise ValueError("population must be at least 2 / elite_frac")
        if not 0 <= self.alpha < 1:
            raise ValueError("alpha must be in [0, 1)")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")

    @property
    def n_elite(self) -> int:
        return math.ceil(self.elite_frac * self.population)


@dataclass(frozen=True)
class CmaEsConfig:
    iterations: int = 250
    population: int = 12
    init_mean: Sequence[float] | None = None
    init_var: Sequence[float] | None = None
    lower: float | None = None
    upper: float | None = None

    def __post_init__(self):
        if self.population < 4:
            raise ValueError("population must be >= 4")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")


@dataclass
class OptTrace:
    best: list[float] = field(default_factory=list)
    mean: list[float] = field(default_factory=list)
    best_so_far: list[float] = field(default_factory=list)
    best_x: list[np.ndarray] = field(default_factory=list)
    restarts: list[int] = field(default_factory=list)

    def record(self, costs: np.ndarray, xs: np.ndarray) -> None:
        i = int(np.argmin(costs))
        self.best.append(float(costs[i]))
        self.mean.append(float(np.mean(costs)))
        if not self.best_so_far or costs[i] < self.best_so_far[-1]:
            self.best_so_far.append(float(costs[i]))
            self.best_x.append(xs[i].copy())
        else:
            self.best_so_far.append(self.best_so_far[-1])
            self.best_x.append(self.best_x[-1])

    @property
    def result(self) -> tuple[np.ndarray, float]:
        return self.best_x[-1].copy(), self.best_so_far[-1]


def _vector(v, dim: int, default: float) -> np.ndarray:
    if v is None:
        return np.full(dim, default)
    a = np.asarray(v, dtype=np.float64)
    if a.shape != (dim,):
        raise ValueError(f"expected {dim} values, got shape {a.shape}")
    return a.copy()


def _batch(objective: Objective | None, batch: BatchObjective | None) -> BatchObjective:
    if batch is not None:
        return batch
    if objective is None:
        raise ValueError("need an objective or a batch objective")
    return lambda xs: np.array([objective(x) for x in xs], dtype=np.float64)


def _clamp(xs: np.ndarray, lower, upper) -> np.ndarray:
    if lower is None and upper is None:
        return xs
    return np.clip(xs, lower, upper)


def cem_minimize(
    objective: Objective | None,
    dim: int,
    cfg: CemConfig,
    rng: np.random.Generator,
    batch: BatchObjective | None = None,
) -> tuple[np.ndarray, float, OptTrace]:
    """Cross-entropy method with a diagonal Gaussian.

    Each iteration refits the mean and per-coordinate variance to the
    ``ceil(elite_frac * population)`` cheapest samples and blends them with
    the previous values by ``alpha``.  Returns the best sample ever seen.
    """
    evaluate = _batch(objective, batch)
    mu = _vector(cfg.init_mean, dim, 0.0)
    var = _vector(cfg.init_var, dim, 0.25)
    trace = OptTrace()
    m = cfg.n_elite
    for _ in range(cfg.iterations):
        xs = mu + np.sqrt(var) * rng.standard_normal((cfg.population, dim))
        xs = _clamp(xs, cfg.lower, cfg.upper)
        costs = np.asarray(evaluate(xs), dtype=np.float64)
        trace.record(costs, xs)
        elite = xs[np.argsort(costs, kind="stable")[:m]]
        mu = (1 - cfg.alpha) * elite.mean(axis=0) + cfg.alpha * mu
        var = (1 - cfg.alpha) * elite.var(axis=0) + cfg.alpha * var
    x, f = trace.result
    return x, f, trace


class _CmaState:
    """Strategy parameters and dynamic state of one CMA-ES run."""

    def __init__(self, dim: int, lam: int, mean: np.ndarray, var: np.ndarray):
        self.dim = dim
        self.lam = lam
        mu = lam // 2
        w = math.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
        self.weights = w / w.sum()
        self.mu = mu
        self.mueff = 1.0 / np.sum(self.weights**2)
        n, mueff = dim, self.mueff
        self.cc = (4 + mueff / n) / (n + 4 + 2 * mueff / n)
        self.cs = (mueff + 2) / (n + mueff + 5)
        self.c1 = 2 / ((n + 1.3) ** 2 + mueff)
        self.cmu = min(1 - self.c1, 2 * (mueff - 2 + 1 / mueff) / ((n + 2) ** 2 + mueff))
        self.damps = 1 + 2 * max(0.0, math.sqrt((mueff - 1) / (n + 1)) - 1) + self.cs
        self.chin = math.sqrt(n) * (1 - 1 / (4 * n) + 1 / (21 * n * n))
        # initial per-coordinate variances enter as sigma^2 * diag(C)
        self.sigma = math.sqrt(float(np.mean(var)))
        self.C = np.diag(var / self.sigma**2)
        self.mean = mean.copy()
        self.pc = np.zeros(n)
        self.ps = np.zeros(n)
        self.gen = 0
        self._decompose()

    def _decompose(self) -> None:
        self.C = np.triu(self.C) + np.triu(self.C, 1).T
        vals, vecs = np.linalg.eigh(self.C)
        if not np.all(np.isfinite(vals)) or vals.min() <= 0:
            raise np.linalg.LinAlgError("covariance is not positive definite")
        self.D = np.sqrt(vals)
        self.B = vecs
        self.invsqrtC = vecs @ np.diag(1 / self.D) @ vecs.T

    def ask(self, rng: np.random.Generator) -> np.ndarray:
        z = rng.standard_normal((self.lam, self.dim))
        return self.mean + self.sigma * (z * self.D) @ self.B.T

    def tell(self, xs: np.ndarray, costs: np.ndarray) -> None:
        n = self.dim
        order = np.argsort(costs, kind="stable")[: self.mu]
        old = self.mean
        y = (xs[order] - old) / self.sigma
        yw = self.weights @ y
        self.mean = old + self.sigma * yw
        self.gen += 1
        self.ps = (1 - self.cs) * self.ps + math.sqrt(self.cs * (2 - self.cs) * self.mueff) * (self.invsqrtC @ yw)
        norm_ps = np.linalg.norm(self.ps)
        hsig = norm_ps / math.sqrt(1 - (1 - self.cs) ** (2 * self.gen)) / self.chin < 1.4 + 2 / (n + 1)
        self.pc = (1 - self.cc) * self.pc + hsig * math.sqrt(self.cc * (2 - self.cc) * self.mueff) * yw
        rank_mu = (y.T * self.weights) @ y
        delta = (1 - hsig) * self.cc * (2 - self.cc)
        self.C = (
            (1 - self.c1 - self.cmu) * self.C
            + self.c1 * (np.outer(self.pc, self.pc) + delta * self.C)
            + self.cmu * rank_mu
        )
        self.sigma *= math.exp((self.cs / self.damps) * (norm_ps / self.chin - 1))
        if not math.isfinite(self.sigma) or self.sigma <= 0:
            raise np.linalg.LinAlgError("step size degenerated")
        self._decompose()


def cmaes_minimize(
    objective: Objective | None,
    dim: int,
    cfg: CmaEsConfig,
    rng: np.random.Generator,
    batch: BatchObjective | None = None,
) -> tuple[np.ndarray, float, OptTrace]:
    """(mu/mu_w, lambda)-CMA-ES with rank-one and rank-mu covariance updates
    and cumulative step-size adaptation.

    If the covariance stops being positive definite the run restarts from
    the initial distribution on a fresh child generator; the iteration of
    each restart is listed in ``trace.restarts``.
    """
    evaluate = _batch(objective, batch)
    mean0 = _vector(cfg.init_mean, dim, 0.0)
    var0 = _vector(cfg.init_var, dim, 0.25)
    es = _CmaState(dim, cfg.population, mean0, var0)
    trace = OptTrace()
    for it in range(cfg.iterations):
        xs = _clamp(es.ask(rng), cfg.lower, cfg.upper)
        costs = np.asarray(evaluate(xs), dtype=np.float64)
        trace.record(costs, xs)
        try:
            es.tell(xs, costs)
        except np.linalg.LinAlgError:
            trace.restarts.append(it)
            rng = rng.spawn(1)[0]
            es = _CmaState(dim, cfg.population, mean0, var0)
    x, f = trace.result
    return x, f, trace
