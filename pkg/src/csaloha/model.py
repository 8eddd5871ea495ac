"""System parameters: user classes, slot classes, access constants and contention length."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

FRACTION_TOL = 1e-9


class ConfigError(ValueError):
    """Raised when a system configuration violates one of its invariants."""


@dataclass(frozen=True)
class UserClass:
    fraction: float
    loss_prob: float


@dataclass(frozen=True)
class SlotClass:
    fraction: float


@dataclass(frozen=True)
class AccessMatrix:
    """L x J matrix of access constants, row l = user class, column j = slot class."""

    alpha: tuple[tuple[float, ...], ...]

    @classmethod
    def from_array(cls, values) -> "AccessMatrix":
        arr = np.atleast_2d(np.asarray(values, dtype=float))
        return cls(tuple(tuple(float(v) for v in row) for row in arr))

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.alpha), (len(self.alpha[0]) if self.alpha else 0)

    def as_array(self) -> np.ndarray:
        return np.array(self.alpha, dtype=float).reshape(self.shape)

    def __getitem__(self, lj: tuple[int, int]) -> float:
        l, j = lj
        return self.alpha[l][j]


@dataclass(frozen=True)
class SystemConfig:
    user_classes: tuple[UserClass, ...]
    slot_classes: tuple[SlotClass, ...]
    access: AccessMatrix
    epsilon: float = 0.0
    name: str = field(default="", compare=False)

    @classmethod
    def build(
        cls,
        fractions: Sequence[float],
        loss_probs: Sequence[float],
        alpha,
        epsilon: float,
        slot_fractions: Sequence[float] = (1.0,),
        name: str = "",
    ) -> "SystemConfig":
        """Convenience constructor from plain sequences; ``alpha`` is L x J."""
        users = tuple(UserClass(float(a), float(e)) for a, e in zip(fractions, loss_probs, strict=True))
        slots = tuple(SlotClass(float(b)) for b in slot_fractions)
        arr = np.asarray(alpha, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(len(users), len(slots))
        return cls(users, slots, AccessMatrix.from_array(arr), float(epsilon), name)

    @property
    def num_user_classes(self) -> int:
        return len(self.user_classes)

    @property
    def num_slot_classes(self) -> int:
        return len(self.slot_classes)

    @property
    def fractions(self) -> np.ndarray:
        return np.array([u.fraction for u in self.user_classes])

    @property
    def loss_probs(self) -> np.ndarray:
        return np.array([u.loss_prob for u in self.user_classes])

    @property
    def slot_fractions(self) -> np.ndarray:
        return np.array([s.fraction for s in self.slot_classes])

    @property
    def slots_per_user(self) -> float:
        """M/N = 1 + epsilon."""
        return 1.0 + self.epsilon

    def with_access(self, alpha) -> "SystemConfig":
        if not isinstance(alpha, AccessMatrix):
            alpha = AccessMatrix.from_array(
                np.asarray(alpha, dtype=float).reshape(self.num_user_classes, self.num_slot_classes)
            )
        return replace(self, access=alpha)

    def with_epsilon(self, epsilon: float) -> "SystemConfig":
        return replace(self, epsilon=float(epsilon))

    def with_loss_probs(self, loss_probs: Sequence[float]) -> "SystemConfig":
        users = tuple(UserClass(u.fraction, float(e)) for u, e in zip(self.user_classes, loss_probs, strict=True))
        return replace(self, user_classes=users)


def validate(config: SystemConfig) -> None:
    """Raise :class:`ConfigError` naming the first violated invariant."""
    if not config.user_classes:
        raise ConfigError("no user classes")
    if not config.slot_classes:
        raise ConfigError("no slot classes")
    for l, u in enumerate(config.user_classes):
        if not 0.0 < u.fraction <= 1.0:
            raise ConfigError(f"user class {l}: fraction {u.fraction} not in (0, 1]")
        if not 0.0 <= u.loss_prob <= 1.0:
            raise ConfigError(f"user class {l}: loss_prob {u.loss_prob} not in [0, 1]")
    for j, s in enumerate(config.slot_classes):
        if not 0.0 < s.fraction <= 1.0:
            raise ConfigError(f"slot class {j}: fraction {s.fraction} not in (0, 1]")
    total = sum(u.fraction for u in config.user_classes)
    if abs(total - 1.0) > FRACTION_TOL:
        raise ConfigError(f"user fractions sum {total!r} != 1")
    total = sum(s.fraction for s in config.slot_classes)
    if abs(total - 1.0) > FRACTION_TOL:
        raise ConfigError(f"slot fractions sum {total!r} != 1")
    rows, cols = config.access.shape
    if rows != config.num_user_classes or any(len(r) != config.num_slot_classes for r in config.access.alpha):
        raise ConfigError(
            f"access matrix is {rows}x{cols}, expected "
            f"{config.num_user_classes}x{config.num_slot_classes}"
        )
    for l, row in enumerate(config.access.alpha):
        for j, a in enumerate(row):
            if not a >= 0.0 or not np.isfinite(a):
                raise ConfigError(f"access[{l}][{j}] = {a} is negative or not finite")
    if not config.epsilon > -1.0 or not np.isfinite(config.epsilon):
        raise ConfigError(f"epsilon out of range: {config.epsilon} (need > -1)")


def access_probability(config: SystemConfig, l: int, j: int, n: int) -> float:
    """Per-slot access probability alpha_lj / (a_l N) of a class-l user into a class-j slot."""
    if n < 1:
        raise ValueError(f"N must be >= 1, got {n}")
    p = config.access[l, j] / (config.user_classes[l].fraction * n)
    if p > 1.0:
        raise ConfigError(
            f"access probability {p:.6g} > 1 for user class {l}, slot class {j} at N={n}"
        )
    return p
