"""Minimum empirical divergence D_inf(F, mu) through its one-dimensional dual.

For a distribution F on (-inf, 1] and a level mu < 1::

    L(nu; F, mu) = E_F[log(1 - (X - mu) nu)]
    D_inf(F, mu) = max_{0 <= nu <= 1/(1-mu)} L(nu; F, mu)

L is concave in nu, so the maximizer is found by a bracketed Newton iteration
on L'. Anything exposing the DistView expectations below can be passed in:
`EmpiricalDist` and the arm models' views both do.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np

from .empirical import EmpiricalDist

ROOT_TOL = 1e-12
WIDTH_TOL = 1e-14
MAX_ITER = 200
# Upper end of the interior bracket, as a fraction of 1/(1-mu).
EDGE = 1.0 - 1e-12
ORACLE_MAX_ATOMS = 12


class DomainError(ValueError):
    pass


class ConvergenceError(RuntimeError):
    pass


class DistView(Protocol):
    def mean(self) -> float: ...

    def expect_log(self, nu: float, mu: float) -> float: ...

    def expect_ratio(self, nu: float, mu: float) -> float: ...

    def expect_ratio_sq(self, nu: float, mu: float) -> float: ...

    def expect_inv_gap(self, mu: float) -> float: ...


@dataclass(frozen=True)
class DualSolution:
    nu_star: float
    dinf: float
    at_boundary: bool
    iterations: int = 0


def _check_mu(mu: float) -> float:
    mu = float(mu)
    if not mu < 1.0:
        raise DomainError(f"mu must be < 1, got {mu!r}")
    return mu


def _check_nu(nu: float, mu: float, interior: bool = False) -> float:
    nu = float(nu)
    upper = 1.0 / (1.0 - mu)
    if interior:
        if not 0.0 < nu < upper:
            raise DomainError(f"nu must lie in (0, {upper!r}), got {nu!r}")
    elif not 0.0 <= nu <= upper * (1.0 + 1e-12):
        raise DomainError(f"nu must lie in [0, {upper!r}], got {nu!r}")
    return nu


def _boundary_value(F: DistView, mu: float) -> float:
    """L at nu = 1/(1-mu), i.e. E[log((1-X)/(1-mu))]."""
    at_edge = getattr(F, "expect_log_at_boundary", None)
    if at_edge is not None:
        return at_edge(mu)
    if isinstance(F, EmpiricalDist):
        if F.mass_at(1.0) > 0.0:
            return -math.inf
        x, p = F.arrays()
        return float(np.dot(p, np.log((1.0 - x) / (1.0 - mu))))
    return F.expect_log(1.0 / (1.0 - mu), mu)


def lagrangian(F: DistView, mu: float, nu: float) -> float:
    """L(nu; F, mu). Returns -inf at nu = 1/(1-mu) when F has an atom at 1."""
    mu = _check_mu(mu)
    nu = _check_nu(nu, mu)
    if nu == 0.0:
        return 0.0
    if nu * (1.0 - mu) >= 1.0 - 1e-15:
        return _boundary_value(F, mu)
    return F.expect_log(nu, mu)


def lagrangian_derivs(F: DistView, mu: float, nu: float) -> tuple[float, float]:
    """(L'(nu), L''(nu)) for nu strictly inside the dual domain."""
    mu = _check_mu(mu)
    nu = _check_nu(nu, mu, interior=True)
    return -F.expect_ratio(nu, mu), -F.expect_ratio_sq(nu, mu)


def _start(F: DistView, mu: float, lo: float, hi: float) -> float:
    # one Newton step from nu = 0: L'(0) = mu - E[X], L''(0) = -E[(X-mu)^2]
    curv = F.expect_ratio_sq(0.0, mu)
    guess = (mu - F.mean()) / curv if curv > 0.0 else 0.5 * hi
    if not lo < guess < hi:
        guess = 0.5 * (lo + hi)
    return guess


def _interior_root(F: DistView, mu: float, hi: float, nu0: Optional[float]) -> tuple[float, int]:
    """Root of the strictly decreasing L' on (0, hi), L'(0) > 0 > L'(hi)."""
    lo = 0.0
    nu = nu0 if nu0 is not None and lo < nu0 < hi else _start(F, mu, lo, hi)
    prev = math.inf
    for it in range(1, MAX_ITER + 1):
        d1 = -F.expect_ratio(nu, mu)
        if abs(d1) <= ROOT_TOL:
            return nu, it
        if d1 > 0.0:
            lo = nu
        else:
            hi = nu
        if hi - lo <= WIDTH_TOL * hi:
            return nu, it
        d2 = -F.expect_ratio_sq(nu, mu)
        step = nu - d1 / d2 if d2 < 0.0 else math.nan
        if not lo < step < hi or abs(d1) > 0.5 * prev:
            step = 0.5 * (lo + hi)
        prev = abs(d1)
        nu = step
    raise ConvergenceError(f"no convergence after {MAX_ITER} iterations (mu={mu!r})")


def solve_nu_star(F: DistView, mu: float, nu0: Optional[float] = None) -> DualSolution:
    """Maximizer nu* of L(.; F, mu) over [0, 1/(1-mu)] and the optimal value.

    ``nu0`` is an optional warm start; it only affects the iteration count.
    """
    mu = _check_mu(mu)
    if F.mean() >= mu:
        return DualSolution(0.0, 0.0, False, 0)
    upper = 1.0 / (1.0 - mu)
    if F.expect_inv_gap(mu) <= 1.0:
        return DualSolution(upper, max(_boundary_value(F, mu), 0.0), True, 0)
    hi = upper * EDGE
    if -F.expect_ratio(hi, mu) >= 0.0:
        # root squeezed against the edge; hi is as close as we can represent
        return DualSolution(hi, max(F.expect_log(hi, mu), 0.0), False, 1)
    nu, it = _interior_root(F, mu, hi, nu0)
    return DualSolution(nu, max(F.expect_log(nu, mu), 0.0), False, it)


def dinf(F: DistView, mu: float) -> float:
    return solve_nu_star(F, mu).dinf


def dinf_le(F: DistView, mu: float, threshold: float, hint: Optional[float] = None) -> tuple[bool, Optional[float]]:
    """Decide ``dinf(F, mu) <= threshold``, returning a warm start for next time.

    With a previous maximizer ``hint`` the answer often follows from one
    evaluation of L and L': L(hint) is a lower bound on the maximum and the
    tangent line at hint, maximized over the domain, an upper bound.
    """
    mu = _check_mu(mu)
    if F.mean() >= mu:
        return 0.0 <= threshold, hint
    if hint is not None and hint > 0.0:
        upper = 1.0 / (1.0 - mu)
        nu = min(hint, upper * EDGE)
        ratio_and_log = getattr(F, "ratio_and_log", None)
        if ratio_and_log is not None:
            val, ratio = ratio_and_log(nu, mu)
        else:
            val, ratio = F.expect_log(nu, mu), F.expect_ratio(nu, mu)
        if val > threshold:
            return False, hint
        d1 = -ratio
        if val + max(-d1 * nu, d1 * (upper - nu)) <= threshold:
            return True, hint
        sol = solve_nu_star(F, mu, nu0=nu)
    else:
        sol = solve_nu_star(F, mu)
    return sol.dinf <= threshold, sol.nu_star


def dinf_deriv_mu(F: DistView, mu: float) -> float:
    """d D_inf / d mu, which equals nu*(F, mu); only defined for mu > E(F)."""
    mu = _check_mu(mu)
    if not mu > F.mean():
        raise DomainError("derivative in mu is only available for mu > mean(F)")
    return solve_nu_star(F, mu).nu_star


def truncate_at(F: EmpiricalDist, a: float) -> EmpiricalDist:
    """F_(a): all mass strictly below ``a`` moved onto the point ``a``."""
    if not a < 1.0:
        raise DomainError("truncation point must be < 1")
    moved = 0.0
    values, weights = [], []
    for x, w in F.atoms:
        if x < a:
            moved += w
        else:
            values.append(x)
            weights.append(w)
    if moved > 0.0:
        values.append(a)
        weights.append(moved)
    return EmpiricalDist(values, weights)


def dinf_batch(samples: np.ndarray, mu: float) -> tuple[np.ndarray, np.ndarray]:
    """D_inf and nu* for many equally weighted samples at once.

    ``samples`` has shape (m, t): row k is the empirical distribution of t
    draws. The iteration is the same bracketed Newton as `solve_nu_star`,
    run on all rows simultaneously.
    """
    mu = _check_mu(mu)
    X = np.atleast_2d(np.asarray(samples, dtype=float))
    if np.any(X > 1.0):
        raise DomainError("samples must be <= 1")
    m = X.shape[0]
    value = np.zeros(m)
    nus = np.zeros(m)
    upper = 1.0 / (1.0 - mu)
    active = np.flatnonzero(X.mean(axis=1) < mu)
    if active.size == 0:
        return value, nus
    Xa = X[active]
    with np.errstate(divide="ignore"):
        inv_gap = (1.0 - mu) * np.mean(1.0 / (1.0 - Xa), axis=1)
    edge = inv_gap <= 1.0
    if np.any(edge):
        rows = active[edge]
        value[rows] = np.mean(np.log((1.0 - Xa[edge]) / (1.0 - mu)), axis=1)
        nus[rows] = upper
    rows = active[~edge]
    Y = Xa[~edge] - mu
    if rows.size:
        nu = _batch_root(Y, upper * EDGE)
        nus[rows] = nu
        value[rows] = np.mean(np.log1p(-Y * nu[:, None]), axis=1)
    np.maximum(value, 0.0, out=value)
    return value, nus


def _batch_root(Y: np.ndarray, hi_edge: float) -> np.ndarray:
    k = Y.shape[0]
    lo = np.zeros(k)
    hi = np.full(k, hi_edge)
    d_edge = -np.mean(Y / (1.0 - Y * hi_edge), axis=1)
    nu = np.mean(-Y, axis=1) / np.mean(Y * Y, axis=1)
    bad = ~((nu > lo) & (nu < hi))
    nu[bad] = 0.5 * hi_edge
    prev = np.full(k, np.inf)
    todo = np.flatnonzero(d_edge < 0.0)
    nu[d_edge >= 0.0] = hi_edge
    for _ in range(MAX_ITER):
        if todo.size == 0:
            return nu
        y = Y[todo]
        v = nu[todo]
        r = y / (1.0 - y * v[:, None])
        d1 = -r.mean(axis=1)
        d2 = -(r * r).mean(axis=1)
        l, h = lo[todo], hi[todo]
        pos = d1 > 0.0
        l = np.where(pos, v, l)
        h = np.where(pos, h, v)
        done = (np.abs(d1) <= ROOT_TOL) | (h - l <= WIDTH_TOL * h)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = v - d1 / d2
        fallback = ~((step > l) & (step < h)) | (np.abs(d1) > 0.5 * prev[todo])
        step = np.where(fallback, 0.5 * (l + h), step)
        lo[todo], hi[todo] = l, h
        prev[todo] = np.abs(d1)
        live = ~done
        nu[todo[live]] = step[live]
        todo = todo[live]
    raise ConvergenceError("batched dual solve did not converge")


def kl_divergence(p: np.ndarray, q: np.ndarray) -> float:
    """Discrete KL divergence sum p log(p/q) with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    pos = p > 0.0
    if np.any(q[pos] <= 0.0):
        return math.inf
    return float(np.sum(p[pos] * np.log(p[pos] / q[pos])))


def dinf_primal_oracle(F: EmpiricalDist, mu: float, max_atoms: int = ORACLE_MAX_ATOMS) -> float:
    """D_inf from its primal definition, for checking the dual solver.

    Minimizes D(F||G) over distributions G on supp(F) plus the point 1 with
    mean(G) >= mu using a conic solver, then repairs the solver's small
    constraint violation so the returned value belongs to a feasible G.
    Test tool only: it needs cvxpy and is limited to a handful of atoms.
    """
    mu = _check_mu(mu)
    if len(F) > max_atoms:
        raise DomainError(f"oracle is limited to {max_atoms} atoms, got {len(F)}")
    if F.mean() >= mu:
        return 0.0
    import cvxpy as cp

    x, p = F.arrays()
    if not np.any(x == 1.0):
        x = np.append(x, 1.0)
        p = np.append(p, 0.0)
    pos = p > 0.0
    g = cp.Variable(x.size, nonneg=True)
    objective = cp.Minimize(cp.sum(cp.rel_entr(p[pos], g[np.flatnonzero(pos)])))
    constraints = [cp.sum(g) == 1.0, x @ g >= mu]
    problem = cp.Problem(objective, constraints)
    problem.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    if g.value is None:
        raise ConvergenceError(f"primal solver failed: {problem.status}")
    G = np.clip(g.value, 0.0, None)
    G /= G.sum()
    top = int(np.flatnonzero(x == 1.0)[0])
    # shift mass from the lowest atom to 1 until the mean constraint holds exactly
    short = mu - float(x @ G)
    if short > 0.0:
        for i in np.argsort(x):
            if i == top or short <= 0.0:
                continue
            move = min(G[i], short / (1.0 - x[i]))
            G[i] -= move
            G[top] += move
            short = mu - float(x @ G)
    return kl_divergence(p, G)
