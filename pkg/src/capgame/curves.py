"""Piecewise-linear marginal cost and price curves.

A :class:`MarginalCurve` is a continuous piecewise-linear function on
``[0, x_max]`` and ``+inf`` beyond ``x_max``; the infinite tail is how a
supplier's capacity limit is encoded.  Integrals and generalized inverses are
exact.  :class:`PowerMargin` is the smoothed reservation mark-up used by the
power-function equilibrium bids, kept in symbolic form so that its payment is
exact; :meth:`PowerMargin.render` produces a piecewise-linear approximation.
"""
from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np


class InfeasibleAmountError(ValueError):
    """Amount outside the curve's domain."""


class UnsupportedCurveError(ValueError):
    """Operation needs a non-decreasing curve."""


@dataclass(frozen=True)
class MarginalCurve:
    xs: tuple[float, ...]
    vs: tuple[float, ...]
    _x: np.ndarray = field(init=False, repr=False, compare=False)
    _v: np.ndarray = field(init=False, repr=False, compare=False)
    _area: np.ndarray = field(init=False, repr=False, compare=False)
    _lists: tuple = field(init=False, repr=False, compare=False)
    _shape: tuple = field(init=False, repr=False, compare=False)  # (non-decreasing, constant)

    def __post_init__(self):
        x = np.asarray(self.xs, dtype=float)
        v = np.asarray(self.vs, dtype=float)
        if x.ndim != 1 or x.shape != v.shape or x.size < 2:
            raise ValueError("a curve needs at least two knots")
        if x[0] != 0.0:
            raise ValueError("curve knots must start at x = 0")
        if np.any(np.diff(x) <= 0):
            raise ValueError("curve knots must be strictly increasing in x")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise ValueError("curve knots must be finite")
        if np.any(v < 0):
            raise ValueError("marginal values must be >= 0")
        area = np.concatenate(([0.0], np.cumsum(0.5 * np.diff(x) * (v[:-1] + v[1:]))))
        object.__setattr__(self, "_x", x)
        object.__setattr__(self, "_v", v)
        object.__setattr__(self, "_area", area)
        object.__setattr__(self, "_lists", (x.tolist(), v.tolist(), area.tolist()))
        object.__setattr__(self, "_shape", (bool(np.all(np.diff(v) >= 0)), bool(np.all(v == v[0]))))

    @classmethod
    def constant(cls, value: float, x_max: float) -> "MarginalCurve":
        return cls((0.0, float(x_max)), (float(value), float(value)))

    @classmethod
    def from_knots(cls, knots) -> "MarginalCurve":
        knots = [(float(x), float(v)) for x, v in knots]
        return cls(tuple(x for x, _ in knots), tuple(v for _, v in knots))

    # -- metadata ---------------------------------------------------------
    @property
    def x_max(self) -> float:
        return float(self._x[-1])

    @property
    def knots(self) -> list[tuple[float, float]]:
        return list(zip(self.xs, self.vs))

    @property
    def knot_x(self) -> np.ndarray:
        return self._x

    @property
    def knot_v(self) -> np.ndarray:
        return self._v

    @property
    def is_nondecreasing(self) -> bool:
        return self._shape[0]

    @property
    def is_constant(self) -> bool:
        return self._shape[1]

    # -- evaluation -------------------------------------------------------
    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.interp(x, self._x, self._v)
        out = np.where(x > self._x[-1], np.inf, out)
        return out if out.ndim else float(out)

    def integral(self, t):
        """Exact ``int_0^t curve``; raises for ``t`` past ``x_max``."""
        t = np.asarray(t, dtype=float)
        if t.size and (t.max() > self._x[-1] * (1 + 1e-12) + 1e-15 or t.min() < 0):
            raise InfeasibleAmountError(f"amount outside [0, {self.x_max}]")
        t = np.minimum(t, self._x[-1])
        x, v = self._x, self._v
        if x.size == 2:  # single segment, the common case
            out = t * (v[0] + 0.5 * (v[1] - v[0]) / x[1] * t)
            return out if out.ndim else float(out)
        k = np.clip(np.searchsorted(x, t, side="right") - 1, 0, x.size - 2)
        u = t - x[k]
        slope = (v[k + 1] - v[k]) / (x[k + 1] - x[k])
        out = self._area[k] + u * v[k] + 0.5 * slope * u * u
        return out if out.ndim else float(out)

    def integral_scalar(self, t: float) -> float:
        """Pure-Python :meth:`integral` for one in-domain float (no checks)."""
        x, v, area = self._lists
        if t <= 0.0:
            return 0.0
        k = min(bisect_right(x, t) - 1, len(x) - 2)
        u = t - x[k]
        return area[k] + u * v[k] + 0.5 * (v[k + 1] - v[k]) / (x[k + 1] - x[k]) * u * u

    def _require_monotone(self):
        if not self.is_nondecreasing:
            raise UnsupportedCurveError("generalized inverse needs a non-decreasing curve")

    def inverse_sup(self, cap, p):
        """``sup{0 <= y <= cap : curve(y) <= p}``, 0 when ``curve(0) > p``."""
        self._require_monotone()
        return self._inverse(cap, p, "right")

    def inverse_inf(self, cap, p):
        """``sup{0 <= y <= cap : curve(y) < p}``, 0 when ``curve(0) >= p``.

        The strict-inequality twin of :meth:`inverse_sup`; the two differ only
        where the curve is flat at level ``p``.
        """
        self._require_monotone()
        return self._inverse(cap, p, "left")

    def _inverse(self, cap, p, side):
        x, v = self._x, self._v
        p = np.asarray(p, dtype=float)
        k = np.searchsorted(v, p, side=side)  # number of knots below (or at) p
        kk = np.clip(k, 1, x.size - 1)
        dv = v[kk] - v[kk - 1]
        frac = np.where(dv > 0, (p - v[kk - 1]) / np.where(dv > 0, dv, 1.0), 0.0)
        y = x[kk - 1] + np.clip(frac, 0.0, 1.0) * (x[kk] - x[kk - 1])
        y = np.where(k == 0, 0.0, np.where(k >= x.size, x[-1], y))
        out = np.minimum(y, cap)
        return out if np.ndim(out) else float(out)

    # -- algebra ----------------------------------------------------------
    def restricted(self, x_max: float) -> "MarginalCurve":
        """Same curve cut at ``x_max`` (must lie inside the domain)."""
        if x_max <= 0 or x_max > self.x_max:
            raise InfeasibleAmountError("restriction outside the curve domain")
        keep = self._x < x_max
        xs = np.append(self._x[keep], x_max)
        return MarginalCurve(tuple(xs.tolist()), tuple(self(xs).tolist()))

    def shifted(self, delta: float) -> "MarginalCurve":
        """Curve plus a constant (used for mark-ups); clipped at 0."""
        return MarginalCurve(self.xs, tuple(np.maximum(self._v + delta, 0.0).tolist()))

    def __add__(self, other: "MarginalCurve") -> "MarginalCurve":
        return add_margin(self, other)


def add_margin(curve: MarginalCurve, delta: MarginalCurve) -> MarginalCurve:
    """Pointwise sum on the common domain, with merged knots."""
    x_max = min(curve.x_max, delta.x_max)
    xs = np.union1d(curve.knot_x, delta.knot_x)
    xs = xs[xs <= x_max]
    if xs[-1] < x_max:
        xs = np.append(xs, x_max)
    return MarginalCurve(tuple(xs.tolist()), tuple((curve(xs) + delta(xs)).tolist()))


def eval_curve(curve: MarginalCurve, x):
    return curve(x)


def integral(curve: MarginalCurve, t):
    return curve.integral(t)


def inverse_sup(curve: MarginalCurve, cap, p):
    return curve.inverse_sup(cap, p)


@dataclass(frozen=True)
class PowerMargin:
    """Mark-up ``m (b+1)/theta ((theta - t)/theta)^b`` on ``[0, theta)``.

    Its total mass over ``[0, theta]`` is exactly ``margin``.
    """

    margin: float
    theta: float
    beta: float

    def __post_init__(self):
        if self.margin < 0 or self.theta <= 0 or self.beta <= 0:
            raise ValueError("power margin needs margin >= 0, theta > 0, beta > 0")

    def density(self, t):
        t = np.asarray(t, dtype=float)
        r = np.clip((self.theta - t) / self.theta, 0.0, 1.0)
        out = self.margin * (self.beta + 1.0) / self.theta * r ** self.beta
        return out if out.ndim else float(out)

    def payment(self, t):
        """Exact ``int_0^t density = m (1 - ((theta - min(t, theta))/theta)^(b+1))``."""
        return self.margin - self.shortfall(t)

    def payment_scalar(self, t: float) -> float:
        if t >= self.theta:
            return self.margin
        return self.margin * (1.0 - ((self.theta - max(t, 0.0)) / self.theta) ** (self.beta + 1.0))

    def shortfall_scalar(self, t: float) -> float:
        return self.margin - self.payment_scalar(t)

    def shortfall(self, t):
        """The part of the margin not yet paid at ``t``: ``m ((theta - t)^+/theta)^(b+1)``."""
        t = np.asarray(t, dtype=float)
        r = np.clip((self.theta - t) / self.theta, 0.0, 1.0)
        out = self.margin * r ** (self.beta + 1.0)
        return out if out.ndim else float(out)

    def render(self, x_max: float, segments: int = 1024) -> MarginalCurve:
        """Piecewise-linear rendering on ``[0, x_max]``.

        Knots are clustered towards ``t = 0`` where the density is steepest.
        The rendered curve is an approximation; :meth:`payment` is exact.
        """
        theta = min(self.theta, x_max)
        s = np.linspace(0.0, 1.0, segments + 1)
        xs = theta * (1.0 - (1.0 - s) ** 2)
        if x_max > theta:
            xs = np.append(xs, x_max)
        return MarginalCurve(tuple(xs.tolist()), tuple(self.density(xs).tolist()))
