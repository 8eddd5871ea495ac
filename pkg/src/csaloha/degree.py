"""Degree-distribution generating functions.

Two representations share one interface: the closed-form exponential
``x -> exp(-rate * (1 - x))`` (the Poisson limit used for both slots and
frameless-ALOHA users) and an explicit polynomial ``sum_d c_d x^d``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import SystemConfig

COEFF_TOL = 1e-9
DEFAULT_MAX_DEGREE = 60


class DegreeDistribution:
    def eval(self, x: float) -> float:
        raise NotImplementedError

    def derivative_at_one(self) -> float:
        raise NotImplementedError

    def node_to_edge(self) -> "DegreeDistribution":
        raise NotImplementedError

    def __call__(self, x: float) -> float:
        return self.eval(x)


@dataclass(frozen=True)
class Exponential(DegreeDistribution):
    """Poisson(rate) generating function; its own edge-oriented form."""

    rate: float

    def __post_init__(self):
        if not self.rate >= 0.0:
            raise ValueError(f"rate must be >= 0, got {self.rate}")

    def eval(self, x: float) -> float:
        return math.exp(-self.rate * (1.0 - x))

    def derivative_at_one(self) -> float:
        return self.rate

    def node_to_edge(self) -> "Exponential":
        # rate 0 included: the r -> 0 limit of the edge form is the constant 1
        return self

    def to_polynomial(self, max_degree: int = DEFAULT_MAX_DEGREE) -> "Polynomial":
        return poisson_polynomial(self.rate, max_degree)


@dataclass(frozen=True)
class Polynomial(DegreeDistribution):
    """Explicit distribution; ``coeffs[d]`` is the probability of degree d."""

    coeffs: tuple[float, ...]

    def __init__(self, coeffs: Sequence[float]):
        c = tuple(float(v) for v in coeffs)
        if not c:
            raise ValueError("empty coefficient list")
        if any(v < 0.0 for v in c):
            raise ValueError("negative coefficient in degree distribution")
        if abs(sum(c) - 1.0) > COEFF_TOL:
            raise ValueError(f"coefficients sum to {sum(c)!r}, not 1")
        object.__setattr__(self, "coeffs", c)

    def eval(self, x: float) -> float:
        # Horner
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def derivative_at_one(self) -> float:
        return float(sum(d * c for d, c in enumerate(self.coeffs)))

    def node_to_edge(self) -> "Polynomial":
        norm = self.derivative_at_one()
        if norm == 0.0:
            raise ValueError("edge-oriented form undefined: distribution has no edges")
        return Polynomial([d * c / norm for d, c in enumerate(self.coeffs)][1:])


def poisson_polynomial(rate: float, max_degree: int = DEFAULT_MAX_DEGREE) -> Polynomial:
    """Poisson(rate) masses for degrees 0..max_degree, renormalized after truncation."""
    if rate == 0.0:
        return Polynomial([1.0])
    d = np.arange(max_degree + 1)
    log_fact = np.array([math.lgamma(k + 1.0) for k in d])
    masses = np.exp(d * math.log(rate) - rate - log_fact)
    return Polynomial(masses / masses.sum())


def slot_degree_distribution(config: SystemConfig, j: int, l: int) -> Exponential:
    """Degree of a class-j slot with respect to user class l (node and edge forms coincide)."""
    return Exponential(config.access[l, j])


def user_degree_distribution(config: SystemConfig, l: int, j: int) -> Exponential:
    """Frameless ALOHA: degree of a class-l user with respect to slot class j."""
    rate = (1.0 + config.epsilon) * config.slot_classes[j].fraction * config.access[l, j] / config.user_classes[l].fraction
    return Exponential(rate)


def expected_slot_degree(config: SystemConfig, j: int) -> float:
    return float(sum(config.access[n, j] for n in range(config.num_user_classes)))
