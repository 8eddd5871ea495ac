"""Finite-population frameless ALOHA with per-replica loss and iterative SIC."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ConfigError, SystemConfig, access_probability, validate


@dataclass(frozen=True)
class ContentionGraph:
    num_users: int
    num_slots: int
    user_class_of: np.ndarray
    slot_class_of: np.ndarray
    edge_user: np.ndarray
    edge_slot: np.ndarray
    lost: np.ndarray

    @property
    def num_edges(self) -> int:
        return len(self.edge_user)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return list(zip(self.edge_user.tolist(), self.edge_slot.tolist()))

    @classmethod
    def from_edges(cls, num_users, num_slots, edges, lost=None, user_class_of=None, slot_class_of=None):
        """Hand-built graph, mostly for tests. ``edges`` is a list of (user, slot)."""
        eu = np.array([u for u, _ in edges], dtype=np.int64)
        es = np.array([s for _, s in edges], dtype=np.int64)
        if len(set(edges)) != len(edges):
            raise ValueError("duplicate (user, slot) edge")
        if len(edges) and (eu.min() < 0 or eu.max() >= num_users or es.min() < 0 or es.max() >= num_slots):
            raise ValueError("edge references a missing user or slot")
        lost = np.zeros(len(edges), dtype=bool) if lost is None else np.asarray(lost, dtype=bool)
        uc = np.zeros(num_users, dtype=np.int64) if user_class_of is None else np.asarray(user_class_of)
        sc = np.zeros(num_slots, dtype=np.int64) if slot_class_of is None else np.asarray(slot_class_of)
        return cls(num_users, num_slots, uc, sc, eu, es, lost)

    def with_lost(self, lost) -> "ContentionGraph":
        return ContentionGraph(
            self.num_users, self.num_slots, self.user_class_of, self.slot_class_of,
            self.edge_user, self.edge_slot, np.asarray(lost, dtype=bool),
        )


@dataclass(frozen=True)
class TrialOutcome:
    resolved: np.ndarray
    resolved_fraction: float
    per_class_resolved_fraction: tuple[float, ...]
    throughput: float
    peel_rounds: int

    @property
    def resolved_count(self) -> int:
        return int(self.resolved.sum())


@dataclass(frozen=True)
class TrialStats:
    trials: int
    mean_resolved: float
    se_resolved: float
    mean_per_class: tuple[float, ...]
    mean_throughput: float
    se_throughput: float
    outcomes: tuple[TrialOutcome, ...]
    seeds: tuple[int, ...]


def class_sizes(fractions, total: int) -> np.ndarray:
    """Largest-remainder apportionment of ``total`` items; sizes always sum to ``total``."""
    fractions = np.asarray(fractions, dtype=float)
    exact = fractions * total
    sizes = np.floor(exact).astype(np.int64)
    short = total - int(sizes.sum())
    if short > 0:
        # stable sort: equal remainders go to the lower class index
        order = np.argsort(-(exact - sizes), kind="stable")
        sizes[order[:short]] += 1
    return sizes


def num_slots_for(config: SystemConfig, n: int) -> int:
    return int(round((1.0 + config.epsilon) * n))


def build_graph(config: SystemConfig, n: int, seed: int) -> ContentionGraph:
    """Random user/slot graph: every (user, slot) pair of classes (l, j) is an edge
    independently with probability alpha_lj / (a_l N); each edge is lost with
    probability e_l."""
    validate(config)
    L, J = config.num_user_classes, config.num_slot_classes
    if n < L:
        raise ConfigError(f"N={n} smaller than the number of user classes {L}")
    m = num_slots_for(config, n)
    if m < 1:
        raise ConfigError(f"contention length rounds to {m} slots")
    probs = np.array([[access_probability(config, l, j, n) for j in range(J)] for l in range(L)])

    users_per_class = class_sizes(config.fractions, n)
    slots_per_class = class_sizes(config.slot_fractions, m)
    if np.any(users_per_class == 0):
        raise ConfigError(f"a user class is empty at N={n}: sizes {users_per_class.tolist()}")
    u_off = np.concatenate([[0], np.cumsum(users_per_class)])
    s_off = np.concatenate([[0], np.cumsum(slots_per_class)])

    rng = np.random.default_rng(seed)
    eu, es, lost = [], [], []
    for l in range(L):
        for j in range(J):
            nu, ms, p = int(users_per_class[l]), int(slots_per_class[j]), probs[l, j]
            if p == 0.0 or nu == 0 or ms == 0:
                continue
            pairs = nu * ms
            k = int(rng.binomial(pairs, p))
            # k distinct pairs uniformly == independent Bernoulli(p) per pair, given k
            idx = rng.choice(pairs, size=k, replace=False)
            eu.append(u_off[l] + idx // ms)
            es.append(s_off[j] + idx % ms)
            lost.append(rng.random(k) < config.user_classes[l].loss_prob)

    def cat(parts, dtype):
        return np.concatenate(parts).astype(dtype) if parts else np.zeros(0, dtype=dtype)

    return ContentionGraph(
        num_users=n,
        num_slots=m,
        user_class_of=np.repeat(np.arange(L), users_per_class),
        slot_class_of=np.repeat(np.arange(J), slots_per_class),
        edge_user=cat(eu, np.int64),
        edge_slot=cat(es, np.int64),
        lost=cat(lost, bool),
    )


def _csr(keys: np.ndarray, size: int) -> tuple[list[int], list[int]]:
    order = np.argsort(keys, kind="stable")
    ptr = np.zeros(size + 1, dtype=np.int64)
    np.cumsum(np.bincount(keys, minlength=size), out=ptr[1:])
    return ptr.tolist(), order.tolist()


def peel(graph: ContentionGraph, order_rng: np.random.Generator | None = None) -> TrialOutcome:
    """Iterative SIC.

    A slot whose unresolved degree drops to one decodes its remaining replica
    unless that replica was lost, in which case the slot is spent. A decoded
    user's replicas are cancelled everywhere, which may expose new degree-one
    slots. ``order_rng`` shuffles the processing order; the resolved set does
    not depend on it.
    """
    n, m = graph.num_users, graph.num_slots
    users = graph.edge_user.tolist()
    slots = graph.edge_slot.tolist()
    lost = graph.lost.tolist()
    u_ptr, u_edges = _csr(graph.edge_user, n)
    s_ptr, s_edges = _csr(graph.edge_slot, m)
    degree = np.bincount(graph.edge_slot, minlength=m).tolist()
    resolved = [False] * n

    frontier = [s for s in range(m) if degree[s] == 1]
    rounds = 0
    while frontier:
        if order_rng is not None:
            order_rng.shuffle(frontier)
        nxt = []
        progressed = False
        for s in frontier:
            if degree[s] != 1:
                continue
            for k in range(s_ptr[s], s_ptr[s + 1]):
                e = s_edges[k]
                if not resolved[users[e]]:
                    break
            if lost[e]:
                continue
            u = users[e]
            resolved[u] = True
            progressed = True
            for k in range(u_ptr[u], u_ptr[u + 1]):
                s2 = slots[u_edges[k]]
                degree[s2] -= 1
                if degree[s2] == 1:
                    nxt.append(s2)
        rounds += progressed
        frontier = nxt

    res = np.array(resolved, dtype=bool)
    count = int(res.sum())
    n_classes = int(graph.user_class_of.max()) + 1 if n else 0
    per_class = []
    for l in range(n_classes):
        mask = graph.user_class_of == l
        per_class.append(float(res[mask].mean()) if mask.any() else 0.0)
    return TrialOutcome(
        resolved=res,
        resolved_fraction=count / n if n else 0.0,
        per_class_resolved_fraction=tuple(per_class),
        throughput=count / m if m else 0.0,
        peel_rounds=rounds,
    )


def trial_seed(master_seed: int, trial: int) -> int:
    """64-bit seed for one trial, a pure function of (master_seed, trial)."""
    return int(np.random.SeedSequence([master_seed, trial]).generate_state(1, np.uint64)[0])


def _mean_se(values: list[float]) -> tuple[float, float]:
    k = len(values)
    mean = math.fsum(values) / k
    if k < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (k - 1)
    return mean, math.sqrt(var / k)


def run_trials(config: SystemConfig, n: int, trials: int, master_seed: int) -> TrialStats:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seeds = [trial_seed(master_seed, t) for t in range(trials)]
    outcomes = [peel(build_graph(config, n, s)) for s in seeds]
    mean_r, se_r = _mean_se([o.resolved_fraction for o in outcomes])
    mean_t, se_t = _mean_se([o.throughput for o in outcomes])
    L = config.num_user_classes
    per_class = tuple(math.fsum(o.per_class_resolved_fraction[l] for o in outcomes) / trials for l in range(L))
    return TrialStats(trials, mean_r, se_r, per_class, mean_t, se_t, tuple(outcomes), tuple(seeds))
