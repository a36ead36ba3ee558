"""Chernoff rates, deviation bounds for the empirical index, and the DMED
finite-time regret bound."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .divergence import DomainError, dinf
from .models import ArmModel

C0 = 2.163
EDGE_GAP = 1e-10
NEWTON_TOL = 1e-13
MAX_ITER = 200


class InfeasibleParameterError(ValueError):
    """Raised with a message naming the violated constraint."""


@dataclass(frozen=True)
class LegendrePoint:
    x: float
    lambda_star: float
    value: float


def log_mgf(model: ArmModel, lam: float) -> float:
    """log E[exp(lam X)]; +inf outside the model's lambda-domain."""
    lo, hi = model.lambda_domain()
    if not lo < lam < hi:
        return math.inf
    return model.log_mgf(lam)


def _edge_point(model: ArmModel, x: float, lam: float) -> LegendrePoint:
    mass = model.edge_mass(x)
    value = -math.log(mass) if mass > 0.0 else math.inf
    return LegendrePoint(x, lam, value)


def legendre(model: ArmModel, x: float) -> LegendrePoint:
    """Lambda*(x) = sup_lam {lam x - log E[exp(lam X)]}.

    Solves Lambda'(lam) = x by Newton steps kept inside an expanding bracket.
    Outside the support hull the value is +inf; at a hull end it is the
    limit -log P(X = end).
    """
    x = float(x)
    m = model.mean()
    if x == m:
        return LegendrePoint(x, 0.0, 0.0)
    s_lo, s_hi = model.support()
    if x > s_hi or x < s_lo:
        return LegendrePoint(x, math.copysign(math.inf, x - m), math.inf)
    if x == s_hi:
        return _edge_point(model, x, math.inf)
    if x == s_lo:
        return _edge_point(model, x, -math.inf)

    d_lo, d_hi = model.lambda_domain()
    if x > m:
        lo, hi = 0.0, 1.0
        while model.log_mgf_derivs(min(hi, d_hi - EDGE_GAP))[0] < x:
            if hi >= d_hi - EDGE_GAP:
                return _domain_edge(model, x, d_hi - EDGE_GAP)
            lo, hi = hi, 2.0 * hi
        hi = min(hi, d_hi - EDGE_GAP)
    else:
        lo, hi = -1.0, 0.0
        while model.log_mgf_derivs(max(lo, d_lo + EDGE_GAP))[0] > x:
            if lo <= d_lo + EDGE_GAP:
                return _domain_edge(model, x, d_lo + EDGE_GAP)
            lo, hi = 2.0 * lo, lo
        lo = max(lo, d_lo + EDGE_GAP)

    lam = 0.5 * (lo + hi)
    for _ in range(MAX_ITER):
        d1, d2 = model.log_mgf_derivs(lam)
        g = d1 - x
        if abs(g) <= NEWTON_TOL * max(1.0, abs(x)):
            break
        if g < 0.0:
            lo = lam
        else:
            hi = lam
        if hi - lo <= 4e-16 * max(1.0, abs(lam)):
            break
        step = lam - g / d2 if d2 > 0.0 else math.nan
        lam = step if lo < step < hi else 0.5 * (lo + hi)
    value = lam * x - model.log_mgf(lam)
    return LegendrePoint(x, lam, max(value, 0.0))


def _domain_edge(model: ArmModel, x: float, lam: float) -> LegendrePoint:
    return LegendrePoint(x, lam, max(lam * x - model.log_mgf(lam), 0.0))


def rate_u_I(v: float, mean_F: float, mu: float) -> float:
    """Exponential rate of the lower deviation bound for the empirical index."""
    if not mu < 1.0:
        raise DomainError("mu must be < 1")
    if not v > 0.0:
        raise DomainError("v must be positive")
    s = C0 + (1.0 - mean_F) / (1.0 - mu)
    if v <= 0.5 * s:
        return v * v / (2.0 * s)
    return 0.5 * v - s / 8.0


def lower_dev_bound(t: int, v: float, mean_F: float, mu: float) -> float:
    """Bound on P[D_inf(F_t, mu) <= D_inf(F, mu) - v] for t samples."""
    if not mu > mean_F:
        raise DomainError("lower deviation bound needs mu > E(F)")
    return min(1.0, math.exp(-t * rate_u_I(v, mean_F, mu)))


def upper_dev_bound(t: int, u: float, legendre_at_mu: float) -> float:
    """Bound on P[D_inf(F_t, mu) >= u and mean(F_t) <= mu] when mu < E(F)."""
    if t < 1:
        raise DomainError("t must be >= 1")
    if u <= legendre_at_mu:
        b = 2.0 * math.exp(-t * legendre_at_mu)
    else:
        b = 2.0 * math.e * (1 + t) * math.exp(-t * u)
    return min(1.0, b)


def _tail_sum(rate: float) -> float:
    """1/(1 - exp(-rate)), i.e. the geometric series sum_{t>=0} exp(-t rate)."""
    if rate == math.inf:
        return 1.0
    if not rate > 0.0:
        return math.inf
    return 1.0 / -math.expm1(-rate)


@dataclass
class BoundReport:
    arm_index: int
    n: int
    epsilon: float
    delta: float
    r: float
    mu_star: float
    mu_second: float
    xi: float
    dinf_true: float
    u_I: float
    log_coeff: float
    constant_C: float
    components: dict = field(default_factory=dict)
    legendre: dict = field(default_factory=dict)

    @property
    def log_term(self) -> float:
        return self.log_coeff * math.log(self.n)

    @property
    def total(self) -> float:
        return self.log_term + self.constant_C

    def to_dict(self) -> dict:
        d = asdict(self)
        d["log_term"] = self.log_term
        d["total"] = self.total
        return d


def _means(truth: Sequence[ArmModel]) -> tuple[np.ndarray, float, list[int]]:
    means = np.array([m.mean() for m in truth])
    mu_star = float(means.max())
    optimal = [k for k, m in enumerate(means) if m == mu_star]
    return means, mu_star, optimal


def regret_bound(
    truth: Sequence[ArmModel],
    i: int,
    n: int,
    epsilon: float,
    delta: float,
    r: float,
    dinf_true: Optional[float] = None,
) -> BoundReport:
    """Finite-time bound on E[T_i(n)] for DMED with parameter r.

    Arms are 0-indexed. ``dinf_true`` may be passed to skip recomputing
    D_inf(F_i, mu*) when sweeping epsilon and delta.
    """
    K = len(truth)
    if K < 2:
        raise InfeasibleParameterError("need at least two arms")
    means, mu_star, optimal = _means(truth)
    if not 0 <= i < K:
        raise InfeasibleParameterError(f"arm index {i} out of range")
    if i in optimal:
        raise InfeasibleParameterError(f"arm {i} is optimal; the bound is for suboptimal arms")
    if not mu_star < 1.0:
        raise InfeasibleParameterError("mu* < 1 is required")
    if not 0.0 < r < 1.0:
        raise InfeasibleParameterError("r must lie in (0, 1)")
    if not 0.0 < epsilon < 1.0:
        raise InfeasibleParameterError("epsilon must lie in (0, 1)")
    if n < 1:
        raise InfeasibleParameterError("n must be >= 1")
    mu_second = float(max(m for k, m in enumerate(means) if k not in optimal))
    gap = mu_star - mu_second
    if not 0.0 < delta < gap:
        raise InfeasibleParameterError(f"delta must lie in (0, mu* - mu') = (0, {gap!r})")

    if dinf_true is None:
        dinf_true = dinf(truth[i].view(), mu_star)
    xi = epsilon * dinf_true - delta / (1.0 - mu_star)
    if not xi > 0.0:
        raise InfeasibleParameterError(f"xi = epsilon*D_inf - delta/(1-mu*) = {xi!r} must be positive")

    u = rate_u_I(xi, float(means[i]), mu_star)
    lam_low = {k: legendre(truth[k], mu_star - delta).value for k in optimal}
    lam_mid = {k: legendre(truth[k], mu_second + delta).value for k in range(K)}

    index_term = _tail_sum(u)
    optimal_term = sum(K * _tail_sum(lam_low[k]) for k in optimal)
    suboptimal_term = sum(K * _tail_sum(lam_mid[k]) for k in range(K) if k not in optimal)
    candidates = {
        k: 2 * (1 + K) * _tail_sum(lam_mid[k]) + 2 * math.e / (r * (-math.expm1(-r * lam_mid[k])) ** 2)
        for k in optimal
    }
    best = min(candidates, key=candidates.get)
    min_term = candidates[best]

    components = {
        "index_deviation": index_term,
        "optimal_mean_deviation": optimal_term,
        "suboptimal_mean_deviation": suboptimal_term,
        "optimal_arm_min": min_term,
        "optimal_arm_argmin": best,
    }
    C = index_term + optimal_term + suboptimal_term + min_term
    return BoundReport(
        arm_index=i,
        n=int(n),
        epsilon=float(epsilon),
        delta=float(delta),
        r=float(r),
        mu_star=mu_star,
        mu_second=mu_second,
        xi=xi,
        dinf_true=dinf_true,
        u_I=u,
        log_coeff=1.0 / ((1.0 - epsilon) * (1.0 - r) * dinf_true),
        constant_C=C,
        components=components,
        legendre={
            "optimal_at_mu_star_minus_delta": {str(k): v for k, v in lam_low.items()},
            "at_mu_second_plus_delta": {str(k): v for k, v in lam_mid.items()},
        },
    )


def default_grids(truth: Sequence[ArmModel]) -> tuple[np.ndarray, np.ndarray]:
    _, mu_star, optimal = _means(truth)
    means = [m.mean() for m in truth]
    gap = mu_star - max(m for k, m in enumerate(means) if k not in optimal)
    eps = np.round(np.arange(1, 20) * 0.05, 2)
    deltas = gap * np.geomspace(1e-4, 0.99, 40)
    return eps, deltas


def optimize_bound_params(
    truth: Sequence[ArmModel],
    i: int,
    n: int,
    r: float,
    epsilons: Optional[Sequence[float]] = None,
    deltas: Optional[Sequence[float]] = None,
) -> tuple[float, float, BoundReport]:
    """Grid search over (epsilon, delta) for the smallest bound at round n."""
    default_eps, default_deltas = default_grids(truth)
    epsilons = default_eps if epsilons is None else epsilons
    deltas = default_deltas if deltas is None else deltas
    _, mu_star, optimal = _means(truth)
    if i in optimal:
        raise InfeasibleParameterError(f"arm {i} is optimal; the bound is for suboptimal arms")
    d_true = dinf(truth[i].view(), mu_star)
    best: Optional[BoundReport] = None
    for e in epsilons:
        for d in deltas:
            try:
                rep = regret_bound(truth, i, n, float(e), float(d), r, dinf_true=d_true)
            except InfeasibleParameterError:
                continue
            if best is None or rep.total < best.total:
                best = rep
    if best is None:
        raise InfeasibleParameterError("no feasible (epsilon, delta) on the grid")
    return best.epsilon, best.delta, best
