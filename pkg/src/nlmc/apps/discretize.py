"""Finite laws on the real line and value snapping onto a grid.

A value strictly between two grid points is split between them in
proportion to distance, which preserves the mean and keeps the snapped law
first-order monotone in the value. Values outside the grid are lumped onto
the nearest end and counted as overflow.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import GridOverflowExcess

OVERFLOW_BUDGET = 0.01


@dataclass(frozen=True)
class DiscreteLaw:
    """Finite-support law of a real random variable."""

    values: tuple
    probs: tuple

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        p = np.asarray(self.probs, dtype=float).ravel()
        if v.size == 0 or v.size != p.size:
            raise ValueError("values and probs must be nonempty and the same length")
        if p.min() < -1e-12 or abs(p.sum() - 1.0) > 1e-9:
            raise ValueError("probs must be a probability vector")
        p = np.clip(p, 0.0, None)
        object.__setattr__(self, "values", tuple(v))
        object.__setattr__(self, "probs", tuple(p / p.sum()))

    @classmethod
    def point(cls, v: float) -> "DiscreteLaw":
        return cls((v,), (1.0,))

    @property
    def v(self) -> np.ndarray:
        return np.asarray(self.values)

    @property
    def p(self) -> np.ndarray:
        return np.asarray(self.probs)

    def mean(self) -> float:
        return float(self.v @ self.p)

    def moment(self, k: int) -> float:
        return float((self.v**k) @ self.p)

    def survival(self, t) -> np.ndarray:
        """``P(X >= t)`` for each threshold in ``t``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return (self.v[None, :] >= t[:, None] - 1e-12) @ self.p


def law_fosd_ge(a: DiscreteLaw, b: DiscreteLaw) -> bool:
    """``a`` first-order dominates ``b`` on the real line."""
    t = np.union1d(a.v, b.v)
    return bool(np.all(a.survival(t) >= b.survival(t) - 1e-12))


def snap(grid: np.ndarray, values, probs):
    """Project point masses onto ``grid``; returns ``(probs_on_grid, lumped_mass)``."""
    grid = np.asarray(grid, dtype=float)
    v = np.asarray(values, dtype=float).ravel()
    p = np.asarray(probs, dtype=float).ravel()
    n = grid.size
    out = np.zeros(n)
    tol = 1e-12 * max(1.0, float(np.abs(grid).max()))
    below = v < grid[0] - tol
    above = v > grid[-1] + tol
    lumped = float(p[below].sum() + p[above].sum())
    vc = np.clip(v, grid[0], grid[-1])
    k = np.clip(np.searchsorted(grid, vc, side="right") - 1, 0, n - 2)
    w = (vc - grid[k]) / (grid[k + 1] - grid[k])
    w = np.clip(w, 0.0, 1.0)
    np.add.at(out, k, p * (1.0 - w))
    np.add.at(out, k + 1, p * w)
    return out, lumped


def snap_checked(grid, values, probs, x=None, h=None, budget=OVERFLOW_BUDGET) -> np.ndarray:
    out, lumped = snap(grid, values, probs)
    if lumped > budget:
        raise GridOverflowExcess(
            f"{lumped:.4g} of the mass falls outside the grid at state {x}, h={h}; extend the grid",
            mass=lumped,
            x=x,
            h=h,
        )
    return out
