"""Reward distributions supported on (-inf, 1].

Every model knows its mean, its log moment generating function (with first
and second derivatives), how to sample itself, and how to produce a DistView
(`view()`) whose expectations feed the dual D_inf solver.
"""
from __future__ import annotations

import math
from typing import Any, Mapping, Optional, Sequence

import numpy as np
from scipy import integrate, special

from .empirical import EmpiricalDist


class QuadratureError(RuntimeError):
    pass


class RngStream:
    """Reproducible random stream keyed by (seed, stream_index).

    Backed by numpy's PCG64 seeded through SeedSequence with the stream index
    as spawn key, so distinct indices give independent streams.
    """

    def __init__(self, seed: int, stream_index: int = 0) -> None:
        self.seed = int(seed)
        self.stream_index = int(stream_index)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_index,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_index={self.stream_index})"


class ArmModel:
    family = ""

    def mean(self) -> float:
        raise NotImplementedError

    def support(self) -> tuple[float, float]:
        """Closed convex hull of the support."""
        raise NotImplementedError

    def log_mgf(self, lam: float) -> float:
        raise NotImplementedError

    def log_mgf_derivs(self, lam: float) -> tuple[float, float]:
        """First and second derivative of the log-MGF at ``lam``."""
        raise NotImplementedError

    def lambda_domain(self) -> tuple[float, float]:
        """Open interval on which the log-MGF is finite."""
        return -math.inf, math.inf

    def edge_mass(self, x: float) -> float:
        """P(X = x); only consulted at the ends of the support."""
        return 0.0

    def sample(self, rng: RngStream | np.random.Generator, size: Optional[int] = None):
        raise NotImplementedError

    def view(self):
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError

    def __repr__(self) -> str:
        params = ", ".join(f"{k}={v!r}" for k, v in self.to_dict().items() if k != "family")
        return f"{type(self).__name__}({params})"

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ArmModel) and self.to_dict() == other.to_dict()

    def __hash__(self) -> int:
        return hash(repr(self))


def _gen(rng) -> np.random.Generator:
    return rng.generator if isinstance(rng, RngStream) else rng


class FiniteSupport(ArmModel):
    family = "finite"

    def __init__(self, values: Sequence[float], probs: Sequence[float]) -> None:
        values = np.asarray(values, dtype=float)
        probs = np.asarray(probs, dtype=float)
        if values.shape != probs.shape or values.ndim != 1 or values.size == 0:
            raise ValueError("values and probs must be equal-length, non-empty sequences")
        if np.any(values > 1.0):
            raise ValueError("support must lie in (-inf, 1]")
        if np.any(probs < 0.0) or not math.isclose(probs.sum(), 1.0, abs_tol=1e-12):
            raise ValueError("probs must be nonnegative and sum to 1")
        keep = probs > 0.0
        self.values = values[keep]
        self.probs = probs[keep] / probs[keep].sum()
        self._logp = np.log(self.probs)

    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    def support(self) -> tuple[float, float]:
        return float(self.values.min()), float(self.values.max())

    def edge_mass(self, x: float) -> float:
        return float(self.probs[self.values == x].sum())

    def log_mgf(self, lam: float) -> float:
        return float(special.logsumexp(lam * self.values + self._logp))

    def log_mgf_derivs(self, lam: float) -> tuple[float, float]:
        a = lam * self.values + self._logp
        w = np.exp(a - a.max())
        w /= w.sum()
        m = float(np.dot(w, self.values))
        return m, float(np.dot(w, (self.values - m) ** 2))

    def sample(self, rng, size=None):
        g = _gen(rng)
        idx = g.choice(self.values.size, size=size, p=self.probs)
        return self.values[idx] if size is not None else float(self.values[idx])

    def view(self) -> EmpiricalDist:
        return EmpiricalDist(self.values, self.probs)

    def to_dict(self) -> dict[str, Any]:
        return {"family": self.family, "values": self.values.tolist(), "probs": self.probs.tolist()}


class TwoPoint(FiniteSupport):
    """X = x1 with probability p, else x0."""

    family = "two_point"

    def __init__(self, x0: float, x1: float, p: float) -> None:
        if not 0.0 <= p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        self.x0, self.x1, self.p = float(x0), float(x1), float(p)
        super().__init__([x0, x1], [1.0 - p, p])

    def sample(self, rng, size=None):
        u = _gen(rng).random(size)
        return np.where(u < self.p, self.x1, self.x0) if size is not None else (self.x1 if u < self.p else self.x0)

    def to_dict(self) -> dict[str, Any]:
        return {"family": self.family, "x0": self.x0, "x1": self.x1, "p": self.p}


class Bernoulli(TwoPoint):
    family = "bernoulli"

    def __init__(self, p: float) -> None:
        super().__init__(0.0, 1.0, p)

    def to_dict(self) -> dict[str, Any]:
        return {"family": self.family, "p": self.p}


def _uniform_tilt(s: float) -> tuple[float, float]:
    """Mean and variance of the exponentially tilted U(0,1) with tilt s."""
    if abs(s) < 1e-3:
        return 0.5 + s / 12.0, 1.0 / 12.0 - s * s / 240.0
    if s > 0.0:
        e = math.exp(-s)
        m = 1.0 / (1.0 - e) - 1.0 / s
        v = 1.0 / (s * s) - e / (1.0 - e) ** 2
    else:
        e = math.exp(s)
        m = e / (e - 1.0) - 1.0 / s
        v = 1.0 / (s * s) - e / (1.0 - e) ** 2
    return m, v


class UniformInterval(ArmModel):
    family = "uniform"

    def __init__(self, a: float, b: float) -> None:
        if not a < b <= 1.0:
            raise ValueError("need a < b <= 1")
        self.a, self.b = float(a), float(b)

    def mean(self) -> float:
        return 0.5 * (self.a + self.b)

    def support(self) -> tuple[float, float]:
        return self.a, self.b

    def log_mgf(self, lam: float) -> float:
        w = self.b - self.a
        s = lam * w
        if s == 0.0:
            return 0.0
        if s > 0.0:
            return lam * self.b + math.log(-math.expm1(-s) / s)
        return lam * self.a + math.log(math.expm1(s) / s)

    def log_mgf_derivs(self, lam: float) -> tuple[float, float]:
        w = self.b - self.a
        m, v = _uniform_tilt(lam * w)
        return self.a + w * m, w * w * v

    def sample(self, rng, size=None):
        return _gen(rng).uniform(self.a, self.b, size)

    def view(self) -> "UniformView":
        return UniformView(self.a, self.b)

    def to_dict(self) -> dict[str, Any]:
        return {"family": self.family, "a": self.a, "b": self.b}


class ShiftedNegGamma(ArmModel):
    """X = 1 - G with G ~ Gamma(shape, rate)."""

    family = "shifted_neg_gamma"

    def __init__(self, shape: float, rate: float) -> None:
        if not (shape > 0.0 and rate > 0.0):
            raise ValueError("shape and rate must be positive")
        self.shape, self.rate = float(shape), float(rate)

    def mean(self) -> float:
        return 1.0 - self.shape / self.rate

    def support(self) -> tuple[float, float]:
        return -math.inf, 1.0

    def lambda_domain(self) -> tuple[float, float]:
        return -self.rate, math.inf

    def log_mgf(self, lam: float) -> float:
        if lam <= -self.rate:
            return math.inf
        return lam - self.shape * math.log1p(lam / self.rate)

    def log_mgf_derivs(self, lam: float) -> tuple[float, float]:
        if lam <= -self.rate:
            return -math.inf, math.inf
        c = self.rate + lam
        return 1.0 - self.shape / c, self.shape / (c * c)

    def sample(self, rng, size=None):
        return 1.0 - _gen(rng).gamma(self.shape, 1.0 / self.rate, size)

    def view(self) -> "GammaView":
        return GammaView(self.shape, self.rate)

    def to_dict(self) -> dict[str, Any]:
        return {"family": self.family, "shape": self.shape, "rate": self.rate}


class ShiftedNegExponential(ShiftedNegGamma):
    family = "shifted_neg_exponential"

    def __init__(self, rate: float) -> None:
        super().__init__(1.0, rate)

    def to_dict(self) -> dict[str, Any]:
        return {"family": self.family, "rate": self.rate}


# -- views ---------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


class UniformView:
    """Closed-form DistView of U(a, b).

    With y = x - mu and w = 1 - nu*y the three integrands have elementary
    antiderivatives in w. They cancel badly for small nu, so while w stays
    away from 0 a 64-point Gauss-Legendre rule is used instead.
    """

    def __init__(self, a: float, b: float) -> None:
        self.a, self.b = a, b
        half = 0.5 * (b - a)
        self._x = 0.5 * (a + b) + half * _GL_NODES
        self._p = 0.5 * _GL_WEIGHTS

    def mean(self) -> float:
        return 0.5 * (self.a + self.b)

    def _smooth(self, nu: float, mu: float) -> bool:
        return 1.0 - (self.b - mu) * nu >= 0.25

    def _ends(self, nu: float, mu: float) -> tuple[float, float]:
        # w at x = a and x = b
        return 1.0 - (self.a - mu) * nu, 1.0 - (self.b - mu) * nu

    def expect_log(self, nu: float, mu: float) -> float:
        if nu == 0.0:
            return 0.0
        if self._smooth(nu, mu):
            return float(np.dot(self._p, np.log1p(-(self._x - mu) * nu)))
        wa, wb = self._ends(nu, mu)
        # integral of log(w) dy = -(w log w - w)/nu, over y from a-mu to b-mu
        prim = lambda w: -(special.xlogy(w, w) - w) / nu
        return (prim(wb) - prim(wa)) / (self.b - self.a)

    def expect_log_at_boundary(self, mu: float) -> float:
        return self.expect_log(1.0 / (1.0 - mu), mu)

    def expect_ratio(self, nu: float, mu: float) -> float:
        if self._smooth(nu, mu):
            y = self._x - mu
            return float(np.dot(self._p, y / (1.0 - y * nu)))
        wa, wb = self._ends(nu, mu)
        if wb <= 0.0:
            return math.inf
        # y/w = (1 - w)/(nu w); dy = -dw/nu
        prim = lambda w: -(math.log(w) - w) / (nu * nu)
        return (prim(wb) - prim(wa)) / (self.b - self.a)

    def expect_ratio_sq(self, nu: float, mu: float) -> float:
        if self._smooth(nu, mu):
            y = self._x - mu
            q = y / (1.0 - y * nu)
            return float(np.dot(self._p, q * q))
        wa, wb = self._ends(nu, mu)
        if wb <= 0.0:
            return math.inf
        # (y/w)^2 = (1 - w)^2 / (nu w)^2; dy = -dw/nu
        prim = lambda w: -(-1.0 / w - 2.0 * math.log(w) + w) / nu**3
        return (prim(wb) - prim(wa)) / (self.b - self.a)

    def expect_inv_gap(self, mu: float) -> float:
        if self.b >= 1.0:
            return math.inf
        return (1.0 - mu) * math.log((1.0 - self.a) / (1.0 - self.b)) / (self.b - self.a)


class GammaView:
    """DistView of X = 1 - G, G ~ Gamma(shape, rate), by adaptive quadrature.

    Integrals over x in (-inf, 1) are taken in u with x = 1 - e^u, which turns
    the half-line into the real line and the density into a smooth bump.
    """

    ABS_TOL = 1e-10
    LIMIT = 400

    def __init__(self, shape: float, rate: float) -> None:
        self.shape, self.rate = shape, rate
        self._lognorm = shape * math.log(rate) - special.gammaln(shape)
        self._center = math.log(shape / rate)

    def mean(self) -> float:
        return 1.0 - self.shape / self.rate

    def _integrate(self, h, knot: Optional[float] = None) -> float:
        def f(u: float) -> float:
            g = math.exp(min(u, 700.0))
            # log density of u = log G
            z = self._lognorm + self.shape * u - self.rate * g
            return 0.0 if z < -740.0 else h(g) * math.exp(z)

        cuts = {self._center - 2.0, self._center + 2.0}
        if knot is not None:
            cuts.add(knot)
        cuts = [-math.inf] + sorted(cuts) + [math.inf]
        total = 0.0
        err = 0.0
        for lo, hi in zip(cuts, cuts[1:]):
            v, e = integrate.quad(f, lo, hi, epsabs=self.ABS_TOL / len(cuts), epsrel=1e-12, limit=self.LIMIT)
            total += v
            err += e
        if not err <= self.ABS_TOL * max(1.0, abs(total)):
            raise QuadratureError(f"quadrature error {err:.3g} exceeds tolerance {self.ABS_TOL:g}")
        return total

    @staticmethod
    def _knot(c: float, nu: float) -> Optional[float]:
        # log G where c + nu G changes regime
        return math.log(c / nu) if c > 0.0 and nu > 0.0 else None

    def expect_log(self, nu: float, mu: float) -> float:
        if nu == 0.0:
            return 0.0
        c = 1.0 - (1.0 - mu) * nu
        return self._integrate(lambda g: math.log(c + nu * g), self._knot(c, nu))

    def expect_log_at_boundary(self, mu: float) -> float:
        # E[log G] - log(1 - mu)
        return special.digamma(self.shape) - math.log(self.rate) - math.log(1.0 - mu)

    def expect_ratio(self, nu: float, mu: float) -> float:
        c = 1.0 - (1.0 - mu) * nu
        return self._integrate(lambda g: (1.0 - mu - g) / (c + nu * g), self._knot(c, nu))

    def expect_ratio_sq(self, nu: float, mu: float) -> float:
        c = 1.0 - (1.0 - mu) * nu
        return self._integrate(lambda g: ((1.0 - mu - g) / (c + nu * g)) ** 2, self._knot(c, nu))

    def expect_inv_gap(self, mu: float) -> float:
        # E[1/G] = rate/(shape-1), divergent for shape <= 1
        if self.shape <= 1.0:
            return math.inf
        return (1.0 - mu) * self.rate / (self.shape - 1.0)


def model_view(model: ArmModel):
    return model.view()


def sample(model: ArmModel, rng, size: Optional[int] = None):
    return model.sample(rng, size)


_FAMILIES = {
    "bernoulli": (Bernoulli, ("p",)),
    "two_point": (TwoPoint, ("x0", "x1", "p")),
    "finite": (FiniteSupport, ("values", "probs")),
    "uniform": (UniformInterval, ("a", "b")),
    "shifted_neg_exponential": (ShiftedNegExponential, ("rate",)),
    "shifted_neg_gamma": (ShiftedNegGamma, ("shape", "rate")),
}


def model_from_dict(spec: Mapping[str, Any]) -> ArmModel:
    """Build a model from ``{"family": name, <params>}``; see FAMILY_KEYS."""
    if "family" not in spec:
        raise KeyError("family")
    name = spec["family"]
    if name not in _FAMILIES:
        raise ValueError(f"unknown family {name!r}; expected one of {sorted(_FAMILIES)}")
    cls, keys = _FAMILIES[name]
    missing = [k for k in keys if k not in spec]
    if missing:
        raise KeyError(missing[0])
    extra = set(spec) - set(keys) - {"family"}
    if extra:
        raise ValueError(f"unexpected keys for {name}: {sorted(extra)}")
    return cls(*(spec[k] for k in keys))


FAMILY_KEYS = {name: keys for name, (_, keys) in _FAMILIES.items()}
