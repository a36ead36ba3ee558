from __future__ import annotations

import math
from typing import Iterable, Optional, Sequence

import numpy as np

# Below this many atoms the plain-Python loops beat numpy's per-call overhead.
_SMALL = 24


class EmpiricalDist:
    """Weighted atoms on (-inf, 1].

    Repeated values are merged into a single atom, so Bernoulli-type arms stay
    at two atoms no matter how many samples are pushed. ``push`` is the only
    mutating method.
    """

    def __init__(self, values: Iterable[float] = (), weights: Optional[Iterable[float]] = None) -> None:
        self._index: dict[float, int] = {}
        self._x: list[float] = []
        self._w: list[float] = []
        self._xa = np.empty(16)
        self._wa = np.empty(16)
        self.total_weight = 0.0
        self._wx = 0.0
        values = list(values)
        if weights is None:
            weights = [1.0] * len(values)
        else:
            weights = list(weights)
            if len(weights) != len(values):
                raise ValueError("values and weights differ in length")
        for x, w in zip(values, weights):
            self.push(x, w)

    def push(self, x: float, weight: float = 1.0) -> None:
        x = float(x)
        weight = float(weight)
        if not x <= 1.0:
            raise ValueError(f"sample {x!r} exceeds 1 or is nan")
        if not weight > 0.0:
            raise ValueError("weights must be positive")
        i = self._index.get(x)
        if i is None:
            i = len(self._x)
            self._index[x] = i
            self._x.append(x)
            self._w.append(weight)
            if i == len(self._xa):
                self._xa = np.concatenate([self._xa, np.empty(i)])
                self._wa = np.concatenate([self._wa, np.empty(i)])
            self._xa[i] = x
            self._wa[i] = weight
        else:
            self._w[i] += weight
            self._wa[i] = self._w[i]
        self.total_weight += weight
        self._wx += weight * x

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self._x, self._w))

    def __len__(self) -> int:
        return len(self._x)

    def __repr__(self) -> str:
        return f"EmpiricalDist(atoms={len(self._x)}, total_weight={self.total_weight:g})"

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Atom values and *normalized* probabilities (copies)."""
        k = len(self._x)
        return self._xa[:k].copy(), self._wa[:k] / self.total_weight

    def mean(self) -> float:
        if self.total_weight == 0.0:
            raise ValueError("empty distribution")
        return min(self._wx / self.total_weight, 1.0)

    def min(self) -> float:
        return min(self._x)

    def mass_at(self, x: float) -> float:
        i = self._index.get(float(x))
        return 0.0 if i is None else self._w[i] / self.total_weight

    # -- DistView expectations -------------------------------------------------

    def expect_log(self, nu: float, mu: float) -> float:
        if nu == 0.0:
            return 0.0
        if len(self._x) <= _SMALL:
            s = 0.0
            for x, w in zip(self._x, self._w):
                g = 1.0 - (x - mu) * nu
                if g <= 0.0:
                    return -math.inf
                s += w * math.log(g)
            return s / self.total_weight
        k = len(self._x)
        g = 1.0 - (self._xa[:k] - mu) * nu
        if np.any(g <= 0.0):
            return -math.inf
        return float(np.dot(self._wa[:k], np.log(g))) / self.total_weight

    def expect_ratio(self, nu: float, mu: float) -> float:
        if len(self._x) <= _SMALL:
            s = 0.0
            for x, w in zip(self._x, self._w):
                y = x - mu
                s += w * y / (1.0 - y * nu)
            return s / self.total_weight
        k = len(self._x)
        y = self._xa[:k] - mu
        return float(np.dot(self._wa[:k], y / (1.0 - y * nu))) / self.total_weight

    def expect_ratio_sq(self, nu: float, mu: float) -> float:
        if len(self._x) <= _SMALL:
            s = 0.0
            for x, w in zip(self._x, self._w):
                y = x - mu
                q = y / (1.0 - y * nu)
                s += w * q * q
            return s / self.total_weight
        k = len(self._x)
        y = self._xa[:k] - mu
        q = y / (1.0 - y * nu)
        return float(np.dot(self._wa[:k], q * q)) / self.total_weight

    def expect_inv_gap(self, mu: float) -> float:
        """E[(1-mu)/(1-X)]; +inf when there is mass at 1."""
        if self._index.get(1.0) is not None:
            return math.inf
        s = 0.0
        for x, w in zip(self._x, self._w):
            s += w / (1.0 - x)
        return (1.0 - mu) * s / self.total_weight

    def ratio_and_log(self, nu: float, mu: float) -> tuple[float, float]:
        """(E[log(1-(X-mu)nu)], E[(X-mu)/(1-(X-mu)nu)]) in one pass."""
        if len(self._x) <= _SMALL:
            sl = 0.0
            sr = 0.0
            for x, w in zip(self._x, self._w):
                y = x - mu
                g = 1.0 - y * nu
                if g <= 0.0:
                    return -math.inf, math.inf
                sl += w * math.log(g)
                sr += w * y / g
            return sl / self.total_weight, sr / self.total_weight
        k = len(self._x)
        y = self._xa[:k] - mu
        g = 1.0 - y * nu
        if np.any(g <= 0.0):
            return -math.inf, math.inf
        w = self._wa[:k]
        return float(np.dot(w, np.log(g))) / self.total_weight, float(np.dot(w, y / g)) / self.total_weight


def from_samples(samples: Sequence[float]) -> EmpiricalDist:
    return EmpiricalDist(samples)
