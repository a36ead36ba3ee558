"""Seeded regret simulations and Monte Carlo checks of the deviation bounds."""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from .bounds import legendre, lower_dev_bound, upper_dev_bound
from .divergence import DomainError, dinf, dinf_batch
from .models import ArmModel, RngStream
from .policies import make_policy

WORKERS_ENV = "DMED_WORKERS"
BLOCK = 4096
MAX_T = 10_000
MAX_TRIALS = 1_000_000
# rows of samples per batched dual solve
CHUNK_ELEMENTS = 2_000_000


@dataclass
class ExperimentConfig:
    arms: list[ArmModel]
    policy: dict[str, Any]
    horizon: int
    replications: int = 1
    seed: int = 0
    checkpoints: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        K = len(self.arms)
        if K < 2:
            raise ValueError("need at least two arms")
        if self.horizon < K:
            raise ValueError("horizon must be at least the number of arms")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if not self.checkpoints:
            self.checkpoints = [self.horizon]
        if list(self.checkpoints) != sorted(self.checkpoints) or self.checkpoints[-1] > self.horizon:
            raise ValueError("checkpoints must be sorted and <= horizon")
        if self.checkpoints[0] < 1:
            raise ValueError("checkpoints must be positive")

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    def gaps(self) -> np.ndarray:
        means = np.array([m.mean() for m in self.arms])
        return means.max() - means


@dataclass
class RegretRecord:
    replication: int
    checkpoints: list[int]
    regret: list[float]
    counts: list[list[int]]


class _RewardFeed:
    """Rewards of one arm, drawn from its own stream in fixed-size blocks."""

    def __init__(self, model: ArmModel, rng: RngStream) -> None:
        self.model = model
        self.rng = rng
        self.buf: list[float] = []
        self.pos = 0

    def next(self) -> float:
        if self.pos == len(self.buf):
            self.buf = np.asarray(self.model.sample(self.rng, BLOCK), dtype=float).tolist()
            self.pos = 0
        x = self.buf[self.pos]
        self.pos += 1
        return x


def stream_index(replication: int, arm: int, n_arms: int) -> int:
    """Arm streams use slots 0..K-1 of each replication; slot K is the policy's."""
    return replication * (n_arms + 1) + arm


def run_replication(config: ExperimentConfig, replication: int) -> RegretRecord:
    K = config.n_arms
    feeds = [_RewardFeed(m, RngStream(config.seed, stream_index(replication, k, K))) for k, m in enumerate(config.arms)]
    policy_rng = RngStream(config.seed, stream_index(replication, K, K)).generator
    policy = make_policy(config.policy, K, rng=policy_rng)
    gaps = config.gaps()
    counts = [0] * K
    regret, snapshots = [], []
    marks = iter(config.checkpoints)
    mark = next(marks)
    for n in range(1, config.horizon + 1):
        arm = policy.select()
        policy.update(arm, feeds[arm].next())
        counts[arm] += 1
        while n == mark:
            snapshots.append(list(counts))
            regret.append(float(np.dot(gaps, counts)))
            mark = next(marks, 0)
    return RegretRecord(replication, list(config.checkpoints), regret, snapshots)


def _run_one(args):
    config, rep = args
    return run_replication(config, rep)


def default_workers() -> int:
    return max(1, int(os.environ.get(WORKERS_ENV, "1")))


def run_replications(config: ExperimentConfig, workers: Optional[int] = None) -> list[RegretRecord]:
    workers = default_workers() if workers is None else max(1, int(workers))
    jobs = [(config, rep) for rep in range(config.replications)]
    if workers == 1 or config.replications == 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_run_one, jobs))


@dataclass
class ExperimentSummary:
    checkpoints: list[int]
    replications: int
    regret: dict[str, list[float]]
    counts: dict[str, list[list[float]]]

    def to_dict(self) -> dict[str, Any]:
        return {"checkpoints": self.checkpoints, "replications": self.replications, "regret": self.regret, "counts": self.counts}


def aggregate(records: Sequence[RegretRecord]) -> ExperimentSummary:
    """Mean, standard deviation, min and max per checkpoint.

    Records are put in replication order first, so the result does not depend
    on the order in which replications finished.
    """
    records = sorted(records, key=lambda r: r.replication)
    R = np.array([r.regret for r in records])
    T = np.array([r.counts for r in records], dtype=float)
    ddof = 1 if len(records) > 1 else 0

    def stats(a):
        return {
            "mean": a.mean(axis=0).tolist(),
            "std": a.std(axis=0, ddof=ddof).tolist(),
            "min": a.min(axis=0).tolist(),
            "max": a.max(axis=0).tolist(),
        }

    return ExperimentSummary(list(records[0].checkpoints), len(records), stats(R), stats(T))


def run_experiment(config: ExperimentConfig, workers: Optional[int] = None) -> tuple[ExperimentSummary, list[RegretRecord]]:
    records = run_replications(config, workers)
    return aggregate(records), records


# -- deviation verifiers -------------------------------------------------------


@dataclass
class DeviationTrial:
    kind: str
    model: ArmModel
    mu: float
    t: int
    threshold: float
    frequency: float
    bound: float
    trials: int

    @property
    def allowance(self) -> float:
        """bound plus three binomial standard errors at the bound."""
        return self.bound + 3.0 * math.sqrt(self.bound * (1.0 - self.bound) / self.trials)

    @property
    def slack(self) -> float:
        return self.allowance - self.frequency

    @property
    def passed(self) -> bool:
        return self.frequency <= self.allowance


def _empirical_indices(model: ArmModel, mu: float, t: int, trials: int, rng: RngStream) -> tuple[np.ndarray, np.ndarray]:
    """D_inf and mean of ``trials`` independent t-sample empirical distributions."""
    if not 1 <= t <= MAX_T:
        raise ValueError(f"t must lie in [1, {MAX_T}]")
    if not 1 <= trials <= MAX_TRIALS:
        raise ValueError(f"trials must lie in [1, {MAX_TRIALS}]")
    rows = max(1, CHUNK_ELEMENTS // t)
    values, means = [], []
    done = 0
    while done < trials:
        k = min(rows, trials - done)
        X = np.asarray(model.sample(rng, k * t), dtype=float).reshape(k, t)
        v, _ = dinf_batch(X, mu)
        values.append(v)
        means.append(X.mean(axis=1))
        done += k
    return np.concatenate(values), np.concatenate(means)


def verify_lower_deviation(
    model: ArmModel, mu: float, ts: Sequence[int], vs: Sequence[float], trials: int, seed: int = 0
) -> list[DeviationTrial]:
    """Frequency of D_inf(F_t, mu) <= D_inf(F, mu) - v against its bound."""
    mean = model.mean()
    if not mean < mu < 1.0:
        raise DomainError("need E(F) < mu < 1")
    target = dinf(model.view(), mu)
    out = []
    for k, t in enumerate(ts):
        vals, _ = _empirical_indices(model, mu, int(t), trials, RngStream(seed, k))
        for v in vs:
            freq = float(np.count_nonzero(vals <= target - v)) / trials
            out.append(DeviationTrial("lower", model, mu, int(t), float(v), freq, lower_dev_bound(int(t), v, mean, mu), trials))
    return out


def verify_upper_deviation(
    model: ArmModel, mu: float, ts: Sequence[int], us: Sequence[float], trials: int, seed: int = 0
) -> list[DeviationTrial]:
    """Frequency of {D_inf(F_t, mu) >= u and mean(F_t) <= mu} against its bound."""
    if not mu < model.mean():
        raise DomainError("need mu < E(F)")
    rate = legendre(model, mu).value
    out = []
    for k, t in enumerate(ts):
        vals, means = _empirical_indices(model, mu, int(t), trials, RngStream(seed, k))
        low = means <= mu
        for u in us:
            freq = float(np.count_nonzero(low & (vals >= u))) / trials
            out.append(DeviationTrial("upper", model, mu, int(t), float(u), freq, upper_dev_bound(int(t), u, rate), trials))
    return out
