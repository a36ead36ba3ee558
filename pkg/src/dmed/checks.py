"""Randomized property checks of the D_inf solver (used by ``dmed verify-dinf``)."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .divergence import dinf, dinf_primal_oracle, solve_nu_star, truncate_at
from .empirical import EmpiricalDist


@dataclass
class Instance:
    values: list[float]
    weights: list[float]
    mu: float

    def dist(self) -> EmpiricalDist:
        return EmpiricalDist(self.values, self.weights)

    def describe(self) -> str:
        return f"values={self.values!r} weights={self.weights!r} mu={self.mu!r}"


def random_instance(rng: np.random.Generator, max_atoms: int = 8, low: float = -5.0, mu_cap: float = 0.99, min_gap: float = 0.0) -> Instance:
    """Finite distribution on [low, 1] and a level mu in (mean + min_gap, mu_cap)."""
    while True:
        k = int(rng.integers(1, max_atoms + 1))
        x = rng.uniform(low, 1.0, k)
        # exact atoms at 1 and at the lower end exercise both dual branches
        if rng.random() < 0.3:
            x[0] = 1.0
        w = rng.dirichlet(np.ones(k))
        F = EmpiricalDist(x.tolist(), w.tolist())
        m = F.mean()
        if m + min_gap < mu_cap:
            mu = float(rng.uniform(m + min_gap, mu_cap))
            if mu > m:
                return Instance(x.tolist(), w.tolist(), mu)


@dataclass
class CheckResult:
    name: str
    trials: int
    failures: list[str] = field(default_factory=list)
    worst: float = 0.0

    @property
    def passed(self) -> bool:
        return not self.failures


def check_primal_dual(rng, trials: int, tol: float = 1e-4) -> CheckResult:
    res = CheckResult("primal_dual", trials)
    for _ in range(trials):
        inst = random_instance(rng)
        F = inst.dist()
        err = abs(dinf(F, inst.mu) - dinf_primal_oracle(F, inst.mu))
        res.worst = max(res.worst, err)
        if not err <= tol:
            res.failures.append(f"{inst.describe()} |dual-primal|={err:.3g}")
    return res


def kkt_residual(F: EmpiricalDist, mu: float) -> tuple[bool, float]:
    """(at_boundary, residual) with residual <= 0 meaning the condition holds."""
    sol = solve_nu_star(F, mu)
    if sol.at_boundary:
        return True, F.expect_inv_gap(mu) - 1.0
    x, p = F.arrays()
    return False, abs(float(np.dot(p, 1.0 / (1.0 - (x - mu) * sol.nu_star))) - 1.0)


def check_kkt(rng, trials: int, tol: float = 1e-8) -> CheckResult:
    res = CheckResult("kkt", trials)
    for _ in range(trials):
        inst = random_instance(rng)
        boundary, r = kkt_residual(inst.dist(), inst.mu)
        res.worst = max(res.worst, r)
        if not r <= tol:
            res.failures.append(f"{inst.describe()} boundary={boundary} residual={r:.3g}")
    return res


def derivative_error(F: EmpiricalDist, mu: float, h: float = 1e-5) -> float:
    fd = (dinf(F, mu + h) - dinf(F, mu - h)) / (2.0 * h)
    return abs(fd - solve_nu_star(F, mu).nu_star)


def check_derivative(rng, trials: int, tol: float = 1e-3, h: float = 1e-5) -> CheckResult:
    res = CheckResult("derivative_in_mu", trials)
    for _ in range(trials):
        inst = random_instance(rng, min_gap=0.05, mu_cap=0.99 - h)
        err = derivative_error(inst.dist(), inst.mu, h)
        res.worst = max(res.worst, err)
        if not err <= tol:
            res.failures.append(f"{inst.describe()} error={err:.3g}")
    return res


def check_monotone(rng, trials: int, steps: int = 20) -> CheckResult:
    res = CheckResult("monotone_in_mu", trials)
    for _ in range(trials):
        inst = random_instance(rng)
        F = inst.dist()
        mus = np.linspace(F.mean(), 0.99, steps + 1)[1:]
        vals = [dinf(F, float(m)) for m in mus]
        for a, b, m0, m1 in zip(vals, vals[1:], mus, mus[1:]):
            slope = (b - a) / (m1 - m0)
            if slope < -1e-9 or slope > 1.0 / (1.0 - m1) + 1e-6:
                res.failures.append(f"{inst.describe()} slope={slope:.6g} on [{m0:.6g}, {m1:.6g}]")
                break
    return res


def scale_error(inst: Instance, a: float) -> float:
    """|D_inf change| under x -> a + (1 - a) x applied to atoms and mu."""
    F = inst.dist()
    G = EmpiricalDist([a + (1.0 - a) * x for x in inst.values], inst.weights)
    return abs(dinf(F, inst.mu) - dinf(G, a + (1.0 - a) * inst.mu))


def check_scale(rng, trials: int, tol: float = 1e-10, shifts=(-5.0, -1.0, -0.1)) -> CheckResult:
    res = CheckResult("scale_invariance", trials)
    for _ in range(trials):
        inst = random_instance(rng, low=0.0)
        for a in shifts:
            err = scale_error(inst, a)
            res.worst = max(res.worst, err)
            if not err <= tol:
                res.failures.append(f"{inst.describe()} a={a} error={err:.3g}")
    return res


def truncation_gaps(F: EmpiricalDist, mu: float, levels) -> list[float]:
    base = dinf(F, mu)
    return [abs(dinf(truncate_at(F, a), mu) - base) for a in levels]


def check_truncation(rng, trials: int) -> CheckResult:
    res = CheckResult("truncation", trials)
    levels = (-1.0, -10.0, -100.0, -1000.0)
    for _ in range(trials):
        inst = random_instance(rng, low=-1e6 if rng.random() < 0.5 else -5e3)
        F = inst.dist()
        gaps = truncation_gaps(F, inst.mu, levels + (F.min() - 1.0,))
        if any(b > a + 1e-12 for a, b in zip(gaps, gaps[1:])) or gaps[-1] > 1e-6:
            res.failures.append(f"{inst.describe()} gaps={gaps!r}")
    return res


CHECKS: dict[str, Callable[..., CheckResult]] = {
    "primal_dual": check_primal_dual,
    "kkt": check_kkt,
    "derivative_in_mu": check_derivative,
    "monotone_in_mu": check_monotone,
    "scale_invariance": check_scale,
    "truncation": check_truncation,
}


def run_all(trials: int, seed: int) -> list[CheckResult]:
    out = []
    for k, fn in enumerate(CHECKS.values()):
        rng = np.random.default_rng([seed, k])
        out.append(fn(rng, trials))
    return out
