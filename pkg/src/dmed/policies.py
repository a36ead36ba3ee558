"""Bandit policies behind one select/update interface.

Arms are 0-indexed. A policy hands out one arm per `select()` call and must
receive the reward for that arm through `update()` before the next call.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional

import numpy as np

from .divergence import dinf, dinf_le
from .empirical import EmpiricalDist

MU_STAR_CAP = 1.0 - 1e-9


class PolicyError(RuntimeError):
    pass


@dataclass
class PolicyDecision:
    arm: int
    diagnostics: dict[str, Any] = field(default_factory=dict)


class Policy:
    name = ""

    def __init__(self, n_arms: int) -> None:
        if int(n_arms) < 2:
            raise ValueError("need at least two arms")
        self.n_arms = int(n_arms)
        self.counts = [0] * self.n_arms
        self.sums = [0.0] * self.n_arms
        self.n = 0
        self._pending: Optional[int] = None

    def select(self) -> int:
        if self._pending is None:
            self._pending = self._choose()
        return self._pending

    def decide(self) -> PolicyDecision:
        return PolicyDecision(self.select(), self.diagnostics())

    def diagnostics(self) -> dict[str, Any]:
        return {"means": [s / c if c else None for s, c in zip(self.sums, self.counts)], "counts": list(self.counts)}

    def update(self, arm: int, reward: float) -> None:
        if self._pending is None or arm != self._pending:
            raise PolicyError(f"update for arm {arm} but pending selection is {self._pending}")
        if not reward <= 1.0:
            raise ValueError(f"reward {reward!r} exceeds 1")
        self._pending = None
        self.n += 1
        self.counts[arm] += 1
        self.sums[arm] += reward
        self._observe(arm, reward)

    def _choose(self) -> int:
        raise NotImplementedError

    def _observe(self, arm: int, reward: float) -> None:
        pass


class DMED(Policy):
    """Deterministic Minimum Empirical Divergence policy with parameter r.

    Arms pulled in the current pass (`current`, ascending) are dropped from
    `remaining`; after each pull every arm outside `remaining` is admitted to
    `next` when (1-r) T_j D_inf(F_j, mu*) <= log n. At the end of a pass,
    current and remaining become `next`.

    The first pass over all arms doubles as the pull-each-arm-once
    initialization; the admission test starts once every arm has a sample.
    """

    name = "dmed"

    def __init__(self, n_arms: int, r: float = 0.1) -> None:
        super().__init__(n_arms)
        r = float(r)
        if not 0.0 < r < 1.0:
            raise ValueError("r must lie in (0, 1)")
        self.r = r
        self.dists = [EmpiricalDist() for _ in range(self.n_arms)]
        self.current = list(range(self.n_arms))
        self.remaining = set(self.current)
        self.next: set[int] = set()
        self.cursor = 0
        self.passes = 0
        self._hints: list[Optional[float]] = [None] * self.n_arms

    def _choose(self) -> int:
        return self.current[self.cursor]

    def _observe(self, arm: int, reward: float) -> None:
        self.dists[arm].push(reward)
        self.remaining.discard(arm)
        if self.n >= self.n_arms and min(self.counts) > 0:
            self._admit()
        self.cursor += 1
        if self.cursor == len(self.current):
            if not self.next:
                raise PolicyError(f"liveness violated: empty next list at n={self.n}")
            self.current = sorted(self.next)
            self.remaining = set(self.next)
            self.next = set()
            self.cursor = 0
            self.passes += 1

    def mu_star(self) -> float:
        return min(max(s / c for s, c in zip(self.sums, self.counts)), MU_STAR_CAP)

    def admits(self, j: int, mu_star: Optional[float] = None) -> bool:
        """Evaluate the admission event for arm j at the current round."""
        mu = self.mu_star() if mu_star is None else mu_star
        threshold = math.log(self.n) / ((1.0 - self.r) * self.counts[j])
        ok, self._hints[j] = dinf_le(self.dists[j], mu, threshold, self._hints[j])
        return ok

    def _admit(self) -> None:
        mu = self.mu_star()
        for j in range(self.n_arms):
            if j in self.remaining or j in self.next:
                continue
            if self.sums[j] / self.counts[j] >= mu or self.admits(j, mu):
                self.next.add(j)

    def diagnostics(self) -> dict[str, Any]:
        d = super().diagnostics()
        if min(self.counts) > 0:
            mu = self.mu_star()
            d["mu_star"] = mu
            d["dinf"] = [dinf(F, mu) for F in self.dists]
        d.update(current=list(self.current), remaining=sorted(self.remaining), next=sorted(self.next))
        return d


class UCB1(Policy):
    """Index mean + sqrt(2 log n / T_i), lowest index on ties.

    Heuristic for rewards unbounded below; the usual guarantee needs [0, 1].
    """

    name = "ucb1"

    def _choose(self) -> int:
        if self.n < self.n_arms:
            return self.n
        logn = math.log(self.n)
        best, arg = -math.inf, 0
        for i in range(self.n_arms):
            v = self.sums[i] / self.counts[i] + math.sqrt(2.0 * logn / self.counts[i])
            if v > best:
                best, arg = v, i
        return arg


class EpsilonGreedy(Policy):
    name = "egreedy"

    def __init__(self, n_arms: int, epsilon: float = 0.1, rng: Optional[np.random.Generator] = None) -> None:
        super().__init__(n_arms)
        if not 0.0 <= epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        self.epsilon = float(epsilon)
        self.rng = rng if rng is not None else np.random.default_rng(0)

    def _choose(self) -> int:
        if self.n < self.n_arms:
            return self.n
        if self.rng.random() < self.epsilon:
            return int(self.rng.integers(self.n_arms))
        means = [s / c for s, c in zip(self.sums, self.counts)]
        return means.index(max(means))


POLICIES = {"dmed": DMED, "ucb1": UCB1, "egreedy": EpsilonGreedy}


def make_policy(spec: Mapping[str, Any], n_arms: int, rng: Optional[np.random.Generator] = None) -> Policy:
    """Build a policy from ``{"name": ..., <params>}``."""
    params = dict(spec)
    name = params.pop("name", None)
    if name not in POLICIES:
        raise ValueError(f"unknown policy {name!r}; expected one of {sorted(POLICIES)}")
    if name == "egreedy":
        return EpsilonGreedy(n_arms, rng=rng, **params)
    return POLICIES[name](n_arms, **params)
