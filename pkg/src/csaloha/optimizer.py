"""Grid search over access constants and contention length for maximum throughput."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .density_evolution import DEFAULT_MAX_ITER, DEFAULT_TOL, evolve, evolve_batch
from .model import AccessMatrix, SystemConfig, validate

# T values within this distance are treated as ties (float noise only)
TIE_TOL = 1e-12


class SearchError(ValueError):
    pass


class InfeasibleTargetError(Exception):
    """No evaluated grid point reaches the requested resolution probability."""

    def __init__(self, target: float, best_seen: float):
        super().__init__(f"no grid point reaches P_R >= {target} (best P_R seen {best_seen:.6g})")
        self.target = target
        self.best_seen = best_seen


@dataclass(frozen=True)
class AlphaGrid:
    """Coarse grid ``0, step, ..., alpha_max`` on every alpha_lj, followed by
    ``refinements`` local grids, each ``factor`` times finer, spanning one
    parent step on either side of the current best."""

    alpha_max: float = 8.0
    step: float = 0.1
    refinements: int = 2
    factor: int = 10
    max_iter: int = DEFAULT_MAX_ITER
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if not self.step > 0 or not self.alpha_max >= 0 or self.factor < 2 or self.refinements < 0:
            raise SearchError(f"bad grid spec {self}")

    def axis(self) -> np.ndarray:
        n = int(np.floor(self.alpha_max / self.step + 1e-9))
        return np.round(np.arange(n + 1) * self.step, 12)


@dataclass(frozen=True)
class Choice:
    alpha: AccessMatrix
    epsilon: float
    throughput: float
    resolution: float
    per_class_resolution: tuple[float, ...]

    @property
    def beta(self) -> tuple[float, ...]:
        return tuple(self.alpha.as_array().sum(axis=0).tolist())


@dataclass(frozen=True)
class SweepSample:
    epsilon: float
    alpha: AccessMatrix
    throughput: float
    resolution: float
    beta: tuple[float, ...]

    @property
    def m_over_n(self) -> float:
        return 1.0 + self.epsilon


@dataclass(frozen=True)
class OptimizationReport:
    best_alpha: AccessMatrix
    best_epsilon: float
    best_throughput: float
    best_resolution: float
    per_class_resolution: tuple[float, ...]
    sweep_samples: tuple[SweepSample, ...] = field(default=(), repr=False)

    @property
    def best_m_over_n(self) -> float:
        return 1.0 + self.best_epsilon

    @property
    def best_beta(self) -> tuple[float, ...]:
        return tuple(self.best_alpha.as_array().sum(axis=0).tolist())


class _Pool:
    """Evaluated (alpha, eps) points. Keeping everything lets constrained
    searches for several targets share one candidate set."""

    def __init__(self, template: SystemConfig, grid: AlphaGrid):
        self.template = template
        self.grid = grid
        self.alphas: list[np.ndarray] = []
        self.eps: list[np.ndarray] = []
        self.T: list[np.ndarray] = []
        self.PR: list[np.ndarray] = []
        self.PRl: list[np.ndarray] = []
        self._seen: set[tuple] = set()

    def add(self, alphas: np.ndarray, eps: float) -> None:
        keys = [(eps, *a.ravel().tolist()) for a in alphas]
        fresh = [i for i, k in enumerate(keys) if k not in self._seen]
        if not fresh:
            return
        self._seen.update(keys[i] for i in fresh)
        alphas = alphas[fresh]
        res = evolve_batch(self.template, alphas, eps, self.grid.max_iter, self.grid.tol)
        self.alphas.append(alphas)
        self.eps.append(np.full(len(alphas), eps))
        self.T.append(res.throughput)
        self.PR.append(res.aggregate_resolution)
        self.PRl.append(res.resolution_probs)

    def arrays(self):
        return (np.concatenate(self.alphas), np.concatenate(self.eps), np.concatenate(self.T),
                np.concatenate(self.PR), np.concatenate(self.PRl))

    def best(self, target: float | None = None, eps: float | None = None) -> Choice:
        alphas, epss, T, PR, PRl = self.arrays()
        mask = np.ones(len(T), dtype=bool)
        if eps is not None:
            mask &= epss == eps
        if not mask.any():
            raise SearchError("empty grid")
        if target is not None:
            feasible = mask & (PR >= target)
            if not feasible.any():
                raise InfeasibleTargetError(target, float(PR[mask].max()))
            mask = feasible
        idx = _argbest(T, alphas, mask)
        return Choice(
            AccessMatrix.from_array(alphas[idx]), float(epss[idx]), float(T[idx]), float(PR[idx]),
            tuple(PRl[idx].tolist()),
        )


def _argbest(T: np.ndarray, alphas: np.ndarray, mask: np.ndarray) -> int:
    """Max T; ties go to the smallest total alpha, then to the lexicographically
    smallest alpha so the answer never depends on evaluation order."""
    idx = np.flatnonzero(mask)
    tmax = T[idx].max()
    tied = idx[T[idx] >= tmax - TIE_TOL]
    sums = alphas[tied].reshape(len(tied), -1).sum(axis=1)
    tied = tied[sums <= sums.min() + TIE_TOL]
    if len(tied) > 1:
        flat = alphas[tied].reshape(len(tied), -1)
        tied = tied[np.lexsort(flat.T[::-1])]
    return int(tied[0])


def _coarse(template: SystemConfig, grid: AlphaGrid) -> np.ndarray:
    L, J = template.num_user_classes, template.num_slot_classes
    axis = grid.axis()
    if len(axis) == 0:
        raise SearchError("empty grid")
    pts = np.array(list(itertools.product(axis, repeat=L * J)), dtype=float)
    return pts.reshape(-1, L, J)


def _local(center: np.ndarray, step: float, grid: AlphaGrid) -> np.ndarray:
    fine = step / grid.factor
    offsets = np.arange(-grid.factor, grid.factor + 1) * fine
    axes = [np.unique(np.round(np.clip(c + offsets, 0.0, grid.alpha_max), 12)) for c in center.ravel()]
    return np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, *center.shape)


def _search(pool: _Pool, eps: float, target: float | None) -> Choice:
    grid = pool.grid
    pool.add(_coarse(pool.template, grid), eps)
    choice = pool.best(target, eps)
    step = grid.step
    for _ in range(grid.refinements):
        pool.add(_local(choice.alpha.as_array(), step, grid), eps)
        choice = pool.best(target, eps)
        step /= grid.factor
    return choice


def _eps_values(eps_range: Sequence[float], eps_steps: int) -> np.ndarray:
    lo, hi = map(float, eps_range)
    if not lo > -1.0:
        raise SearchError(f"eps lower bound {lo} must be > -1")
    if eps_steps < 1 or hi < lo:
        raise SearchError("empty eps range")
    if eps_steps == 1:
        return np.array([lo])
    return np.round(np.linspace(lo, hi, eps_steps), 12)


def optimize_alpha_at_eps(template: SystemConfig, epsilon: float, grid: AlphaGrid = AlphaGrid()) -> Choice:
    """Throughput-maximizing access matrix at fixed eps."""
    validate(template.with_epsilon(epsilon))
    return _search(_Pool(template, grid), float(epsilon), None)


def optimize_with_resolution_floor(
    template: SystemConfig, epsilon: float, target_pr: float, grid: AlphaGrid = AlphaGrid()
) -> Choice:
    """Like :func:`optimize_alpha_at_eps` but only points with P_R >= ``target_pr`` qualify.

    Raises :class:`InfeasibleTargetError` when no grid point qualifies.
    """
    if not 0.0 <= target_pr <= 1.0:
        raise SearchError(f"target P_R {target_pr} outside [0, 1]")
    validate(template.with_epsilon(epsilon))
    return _search(_Pool(template, grid), float(epsilon), float(target_pr))


def sweep_eps(
    template: SystemConfig,
    eps_range: Sequence[float],
    eps_steps: int,
    grid: AlphaGrid = AlphaGrid(),
) -> OptimizationReport:
    """Best alpha at each eps sample, and the global best over the sweep."""
    validate(template)
    samples = []
    best: Choice | None = None
    for eps in _eps_values(eps_range, eps_steps):
        c = optimize_alpha_at_eps(template, eps, grid)
        samples.append(SweepSample(c.epsilon, c.alpha, c.throughput, c.resolution, c.beta))
        # strict > keeps the smallest eps among exact ties
        if best is None or c.throughput > best.throughput + TIE_TOL:
            best = c
    return OptimizationReport(
        best.alpha, best.epsilon, best.throughput, best.resolution, best.per_class_resolution, tuple(samples)
    )


def resolution_floor_frontier(
    template: SystemConfig,
    targets: Sequence[float],
    eps_range: Sequence[float],
    eps_steps: int,
    grid: AlphaGrid = AlphaGrid(),
) -> list[Choice | None]:
    """Best (alpha, eps) under each P_R floor, jointly over an eps sweep.

    All targets are answered from one shared pool of evaluated points (the
    coarse grid at every eps plus the refinements requested by any target), so
    the returned throughput is exactly non-increasing in the target. ``None``
    marks an infeasible target.
    """
    validate(template)
    pool = _Pool(template, grid)
    eps_values = _eps_values(eps_range, eps_steps)
    coarse = _coarse(template, grid)
    for eps in eps_values:
        pool.add(coarse, eps)
    for target in targets:
        try:
            choice = pool.best(target)
        except InfeasibleTargetError:
            continue
        step = grid.step
        for _ in range(grid.refinements):
            pool.add(_local(choice.alpha.as_array(), step, grid), choice.epsilon)
            choice = pool.best(target, choice.epsilon)
            step /= grid.factor
    out: list[Choice | None] = []
    for target in targets:
        try:
            out.append(pool.best(target))
        except InfeasibleTargetError:
            out.append(None)
    return out


def recompute(template: SystemConfig, alpha: AccessMatrix, epsilon: float):
    """Reference (scalar) evaluation of a reported optimum."""
    return evolve(template.with_access(alpha).with_epsilon(epsilon))
