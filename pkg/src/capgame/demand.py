"""Demand distributions with closed-form tail expectations.

Every profit integral in the package reduces to three quantities of the
demand ``D``: the survival function ``Pr[D >= z]``, the expected shortfall
``E[(D - T)^+]`` and the expected sales ``E[min(D, T)]``.  All three are
computed in closed form for discrete demand and for demand with a
piecewise-linear CDF (uniform demand is the two-knot special case).
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

PROB_TOL = 1e-12


@dataclass(frozen=True)
class DemandModel:
    """Bounded demand distribution.

    ``kind`` is ``"discrete"``, ``"uniform"`` or ``"piecewise_cdf"``.  For the
    discrete kind ``values``/``weights`` hold the atoms; for the continuous
    kinds they hold the CDF knots ``(d_k, F(d_k))``.  Use the ``discrete``,
    ``uniform`` and ``piecewise_cdf`` constructors rather than building the
    dataclass by hand.
    """

    kind: str
    values: tuple[float, ...]
    weights: tuple[float, ...]
    _x: np.ndarray = field(init=False, repr=False, compare=False)
    _w: np.ndarray = field(init=False, repr=False, compare=False)
    _phi: np.ndarray = field(init=False, repr=False, compare=False)
    _lists: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        x = np.asarray(self.values, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if x.ndim != 1 or x.shape != w.shape or x.size == 0:
            raise ValueError("demand needs matching non-empty value/weight lists")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(w)):
            raise ValueError("demand parameters must be finite")
        if x[0] < 0:
            raise ValueError("demand must be non-negative")
        if self.kind == "discrete":
            if np.any(np.diff(x) <= 0):
                raise ValueError("discrete demand values must be strictly increasing")
            if np.any(w < 0) or abs(w.sum() - 1.0) > PROB_TOL:
                raise ValueError("discrete probabilities must be >= 0 and sum to 1")
            phi = np.empty(0)
        elif self.kind in ("uniform", "piecewise_cdf"):
            if x.size < 2 or np.any(np.diff(x) <= 0):
                raise ValueError("CDF knots need strictly increasing demand values")
            if np.any(np.diff(w) < 0):
                raise ValueError("CDF knots must be non-decreasing")
            if abs(w[0]) > PROB_TOL or abs(w[-1] - 1.0) > PROB_TOL:
                raise ValueError("CDF must run from 0 at d_low to 1 at d_high")
            # E[min(D, d_k)] at each knot
            seg = np.diff(x) * (1.0 - 0.5 * (w[:-1] + w[1:]))
            phi = x[0] + np.concatenate(([0.0], np.cumsum(seg)))
        else:
            raise ValueError(f"unknown demand kind {self.kind!r}")
        object.__setattr__(self, "_x", x)
        object.__setattr__(self, "_w", w)
        object.__setattr__(self, "_phi", phi)
        object.__setattr__(self, "_lists", (x.tolist(), w.tolist(), phi.tolist(), self.mean))

    # -- constructors ---------------------------------------------------
    @classmethod
    def discrete(cls, points) -> "DemandModel":
        pts = sorted((float(v), float(p)) for v, p in points)
        return cls("discrete", tuple(v for v, _ in pts), tuple(p for _, p in pts))

    @classmethod
    def uniform(cls, low: float, high: float) -> "DemandModel":
        return cls("uniform", (float(low), float(high)), (0.0, 1.0))

    @classmethod
    def piecewise_cdf(cls, knots) -> "DemandModel":
        knots = [(float(d), float(f)) for d, f in knots]
        return cls("piecewise_cdf", tuple(d for d, _ in knots), tuple(f for _, f in knots))

    # -- basic facts ----------------------------------------------------
    @property
    def is_discrete(self) -> bool:
        return self.kind == "discrete"

    @property
    def low(self) -> float:
        return float(self._x[0])

    @property
    def high(self) -> float:
        return float(self._x[-1])

    @property
    def mean(self) -> float:
        if self.kind == "discrete":
            return float(self._x @ self._w)
        return float(self._phi[-1])

    @property
    def breakpoints(self) -> np.ndarray:
        """Quantities where the survival function changes its formula."""
        return self._x

    # -- tail expectations ----------------------------------------------
    def survival(self, z):
        """``Pr[D >= z]``, clamped to 1 below the support and 0 above it."""
        z = np.asarray(z, dtype=float)
        if self.is_discrete:
            below = np.concatenate(([0.0], np.cumsum(self._w)))
            out = 1.0 - below[np.searchsorted(self._x, z, side="left")]
            out = np.clip(out, 0.0, 1.0)
        else:
            out = 1.0 - np.interp(z, self._x, self._w, left=0.0, right=1.0)
        return out if out.ndim else float(out)

    def expected_min(self, T):
        """``E[min(D, T)]``; concave and non-decreasing in ``T``."""
        T = np.maximum(np.asarray(T, dtype=float), 0.0)
        if self.is_discrete:
            out = np.minimum(T[..., None], self._x) @ self._w
        else:
            x, w, phi = self._x, self._w, self._phi
            k = np.clip(np.searchsorted(x, T, side="right") - 1, 0, x.size - 2)
            u = np.clip(T - x[k], 0.0, x[k + 1] - x[k])
            slope = (w[k + 1] - w[k]) / (x[k + 1] - x[k])
            inside = phi[k] + u * (1.0 - w[k]) - 0.5 * slope * u * u
            out = np.where(T <= x[0], T, np.where(T >= x[-1], phi[-1], inside))
        return out if np.ndim(out) else float(out)

    def expected_shortfall(self, T):
        """``E[(D - T)^+]``; convex and non-increasing in ``T``."""
        out = np.maximum(self.mean - np.asarray(self.expected_min(T)), 0.0)
        return out if np.ndim(out) else float(out)

    def shortfall_scalar(self, T: float) -> float:
        """Pure-Python ``E[(D - T)^+]`` for one float (solver hot path)."""
        x, w, phi, mean = self._lists
        if T <= x[0]:
            return mean - max(T, 0.0)
        if T >= x[-1]:
            return 0.0
        if self.kind == "discrete":
            return sum(p * (v - T) for v, p in zip(x, w) if v > T)
        k = bisect_right(x, T) - 1
        u = T - x[k]
        slope = (w[k + 1] - w[k]) / (x[k + 1] - x[k])
        return max(mean - (phi[k] + u * (1.0 - w[k]) - 0.5 * slope * u * u), 0.0)


def survival(model: DemandModel, z):
    return model.survival(z)


def expected_shortfall(model: DemandModel, T):
    return model.expected_shortfall(T)


def expected_min(model: DemandModel, T):
    return model.expected_min(T)
