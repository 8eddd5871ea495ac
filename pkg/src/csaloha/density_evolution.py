"""And-or tree evaluation of unresolved-user probabilities with per-class packet loss.

The recursion, for user class l and slot class j, is

    r_j(i-1) = 1 - sum_m (alpha_mj / beta_j) (1 - e_m) prod_k omega_jk(1 - y_k(i-1))
    y_l(i)   = prod_j lambda_lj(r_j(i-1)),           y_l(0) = 1

with omega_jk(x) = exp(-alpha_kj (1 - x)) and, for frameless ALOHA,
lambda_lj(x) = exp(-(1 + eps) b_j alpha_lj / a_l (1 - x)).

``evolve`` is the reference implementation built on the degree-distribution
objects. ``evolve_batch`` runs the same arithmetic, in the same order, in a
compiled loop over many (alpha, eps) points and is what the optimizer uses.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .degree import expected_slot_degree, slot_degree_distribution, user_degree_distribution
from .model import SystemConfig, validate

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000


@dataclass(frozen=True)
class EvolutionResult:
    trajectories: tuple[tuple[float, ...], ...]
    resolution_probs: tuple[float, ...]
    aggregate_resolution: float
    throughput: float
    iterations_used: int
    converged: bool
    residual: float

    @property
    def final_y(self) -> tuple[float, ...]:
        return tuple(t[-1] for t in self.trajectories)


def _active_slot_classes(config: SystemConfig) -> list[int]:
    return [j for j in range(config.num_slot_classes) if expected_slot_degree(config, j) > 0.0]


def slot_message(config: SystemConfig, j: int, y: Sequence[float]) -> float:
    """Probability that a class-j slot sends an unresolved message given per-class ``y``."""
    beta = expected_slot_degree(config, j)
    if beta == 0.0:
        raise ValueError(f"slot class {j} receives no transmissions (beta_j = 0)")
    L = config.num_user_classes
    prod = 1.0
    for k in range(L):
        prod *= slot_degree_distribution(config, j, k).node_to_edge()(1.0 - y[k])
    s = 0.0
    for m in range(L):
        weight = slot_degree_distribution(config, j, m).derivative_at_one() / beta
        s += weight * (1.0 - config.user_classes[m].loss_prob) * prod
    return 1.0 - s


def _step(config: SystemConfig, y: Sequence[float], active: list[int]) -> list[float]:
    r = {j: slot_message(config, j, y) for j in active}
    out = []
    for l in range(config.num_user_classes):
        v = 1.0
        for j in active:
            v *= user_degree_distribution(config, l, j).node_to_edge()(r[j])
        out.append(v)
    return out


def throughput(config: SystemConfig, resolution_probs: Sequence[float]) -> float:
    """Expected resolved users per slot, P_R / (1 + eps)."""
    p_r = sum(u.fraction * p for u, p in zip(config.user_classes, resolution_probs, strict=True))
    return p_r / (1.0 + config.epsilon)


def fixed_point_residual(config: SystemConfig, y: Sequence[float]) -> float:
    """max_l |y_l - F_l(y)| where F is one step of the recursion."""
    nxt = _step(config, y, _active_slot_classes(config))
    return max(abs(a - b) for a, b in zip(y, nxt))


def evolve(config: SystemConfig, max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL) -> EvolutionResult:
    """Iterate from y(0) = 1 until the largest per-class change drops below ``tol``.

    Slot classes with no incoming transmissions are skipped: every user-side
    factor for such a class is the constant 1. Hitting ``max_iter`` is reported
    through ``converged=False``.
    """
    validate(config)
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    if not tol > 0:
        raise ValueError("tol must be > 0")
    L = config.num_user_classes
    active = _active_slot_classes(config)
    y = [1.0] * L
    traj = [[1.0] for _ in range(L)]
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        nxt = _step(config, y, active)
        delta = max(abs(a - b) for a, b in zip(nxt, y))
        y = nxt
        for l in range(L):
            traj[l].append(y[l])
        if delta < tol:
            converged = True
            break
    probs = tuple(1.0 - v for v in y)
    p_r = sum(u.fraction * p for u, p in zip(config.user_classes, probs))
    return EvolutionResult(
        trajectories=tuple(tuple(t) for t in traj),
        resolution_probs=probs,
        aggregate_resolution=p_r,
        throughput=p_r / (1.0 + config.epsilon),
        iterations_used=it,
        converged=converged,
        residual=fixed_point_residual(config, y),
    )


@numba.njit(cache=True)
def _batch_kernel(alphas, eps, a, e, b, max_iter, tol, y_out, iters_out, conv_out):
    P, L, J = alphas.shape
    y = np.empty(L)
    nxt = np.empty(L)
    r = np.empty(J)
    for p in range(P):
        for l in range(L):
            y[l] = 1.0
        it = 0
        converged = False
        while it < max_iter:
            it += 1
            for j in range(J):
                beta = 0.0
                for n in range(L):
                    beta += alphas[p, n, j]
                if beta == 0.0:
                    r[j] = -1.0
                    continue
                prod = 1.0
                for k in range(L):
                    prod *= np.exp(-alphas[p, k, j] * (1.0 - (1.0 - y[k])))
                s = 0.0
                for m in range(L):
                    s += alphas[p, m, j] / beta * (1.0 - e[m]) * prod
                r[j] = 1.0 - s
            delta = 0.0
            for l in range(L):
                v = 1.0
                for j in range(J):
                    if r[j] < 0.0:
                        continue
                    rate = (1.0 + eps[p]) * b[j] * alphas[p, l, j] / a[l]
                    v *= np.exp(-rate * (1.0 - r[j]))
                nxt[l] = v
                d = abs(v - y[l])
                if d > delta:
                    delta = d
            for l in range(L):
                y[l] = nxt[l]
            if delta < tol:
                converged = True
                break
        for l in range(L):
            y_out[p, l] = y[l]
        iters_out[p] = it
        conv_out[p] = converged


@dataclass(frozen=True)
class BatchResult:
    final_y: np.ndarray  # (P, L)
    resolution_probs: np.ndarray  # (P, L)
    aggregate_resolution: np.ndarray  # (P,)
    throughput: np.ndarray  # (P,)
    iterations_used: np.ndarray
    converged: np.ndarray


def evolve_batch(
    config: SystemConfig,
    alphas: np.ndarray,
    epsilons,
    max_iter: int = DEFAULT_MAX_ITER,
    tol: float = DEFAULT_TOL,
) -> BatchResult:
    """Final iterates for many access matrices (P, L, J) and eps values (scalar or (P,)).

    Class fractions and loss probabilities come from ``config``; its own access
    matrix and eps are ignored.
    """
    alphas = np.ascontiguousarray(alphas, dtype=np.float64)
    if alphas.ndim == 2:
        alphas = alphas[None]
    P, L, J = alphas.shape
    if (L, J) != (config.num_user_classes, config.num_slot_classes):
        raise ValueError(f"alpha block shape {(L, J)} does not match config")
    if np.any(alphas < 0):
        raise ValueError("negative access constant")
    eps = np.broadcast_to(np.asarray(epsilons, dtype=np.float64), (P,)).copy()
    if np.any(eps <= -1.0):
        raise ValueError("epsilon out of range (need > -1)")
    a = config.fractions
    y = np.empty((P, L))
    iters = np.empty(P, dtype=np.int64)
    conv = np.empty(P, dtype=np.bool_)
    _batch_kernel(alphas, eps, a, config.loss_probs, config.slot_fractions, int(max_iter), float(tol), y, iters, conv)
    probs = 1.0 - y
    p_r = probs @ a
    return BatchResult(y, probs, p_r, p_r / (1.0 + eps), iters, conv)
