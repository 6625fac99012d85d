"""Nonlinear equations ``x = x P(G(x))`` on the simplex.

The system has a unique solution when the rows of ``P(a)`` increase in the
row index under majorization (i), decrease in ``a`` under majorization (ii),
and ``P(a)`` has a unique stationary vector for every ``a`` (iii), with
``G`` increasing under majorization. The conditions are checked on a grid
of ``a`` values; the solution is found by reducing to the scalar equation
``a = G(stationary(P(a)))``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..certify import Certificate
from ..core import Aggregator, NonlinearKernel, OrderFamily
from ..errors import ConditionFailed, MultipleStationary, NoRoot
from ..kernel_ops import recurrent_classes
from ..orders import compare_majorization
from ..solve import find_equilibria

GRID_POINTS = 101


@dataclass(frozen=True)
class Cor1System:
    P_family: Callable[[float], np.ndarray]
    G: Callable[[np.ndarray], float]
    a_domain: tuple
    n: int

    def __post_init__(self):
        lo, hi = (float(v) for v in self.a_domain)
        if not lo <= hi:
            raise ValueError("a_domain must be a nonempty interval")
        object.__setattr__(self, "a_domain", (lo, hi))

    def kernel(self) -> NonlinearKernel:
        P = self.P_family
        return NonlinearKernel(
            self.n,
            lambda x, a: np.asarray(P(a), dtype=float)[x],
            self.a_domain,
            matrix_fn=lambda a: np.asarray(P(a), dtype=float),
            name="cor1",
        )

    def aggregator(self) -> Aggregator:
        return Aggregator.callback(self.G)


@dataclass(frozen=True)
class Cor1Solution:
    x: np.ndarray
    a: float
    conditions: tuple


def _grid(sys: Cor1System, extra=()):
    lo, hi = sys.a_domain
    g = np.linspace(lo, hi, GRID_POINTS) if hi > lo else np.array([lo])
    return np.unique(np.concatenate([g, np.asarray(extra, dtype=float)]))


def check_conditions(sys: Cor1System, extra_points=()) -> tuple:
    """Certificates for conditions (i), (ii), (iii); raises :class:`ConditionFailed` on the first failure."""
    fam = OrderFamily.sd()
    grid = _grid(sys, extra_points)
    mats = [np.asarray(sys.P_family(a), dtype=float) for a in grid]
    for a, P in zip(grid, mats):
        for i in range(sys.n - 1):
            if not compare_majorization(P[i + 1], P[i]).ge:
                raise ConditionFailed("i", {"a": float(a), "row_low": i, "row_high": i + 1,
                                            "P_low": P[i].tolist(), "P_high": P[i + 1].tolist()})
    c1 = Certificate("RowsIncreasing", fam, True, None, sys.a_domain, tuple(grid))
    for a0, a1, P0, P1 in zip(grid, grid[1:], mats, mats[1:]):
        for i in range(sys.n):
            if not compare_majorization(P0[i], P1[i]).ge:
                raise ConditionFailed("ii", {"row": i, "a_low": float(a0), "a_high": float(a1),
                                             "P_at_a_low": P0[i].tolist(), "P_at_a_high": P1[i].tolist()})
    c2 = Certificate("RowsDecreasingInA", fam, True, None, sys.a_domain, tuple(grid))
    for a, P in zip(grid, mats):
        classes = recurrent_classes(P)
        if len(classes) != 1:
            raise ConditionFailed("iii", {"a": float(a), "closed_classes": [c.tolist() for c in classes]})
    c3 = Certificate("UniqueStationary", fam, True, None, sys.a_domain, tuple(grid))
    return c1, c2, c3


def solve_cor1(sys: Cor1System, grid_step=None, tol: float = 1e-10) -> Cor1Solution:
    """Unique solution of ``x = x P(G(x))`` after checking the three conditions."""
    check_conditions(sys)
    try:
        report = find_equilibria(sys.kernel(), sys.aggregator(), grid_step=grid_step, tol=tol, certify=False)
    except MultipleStationary as exc:
        raise ConditionFailed("iii", {"detail": str(exc)}) from None
    if not report.equilibria:
        raise NoRoot(f"a = G(stationary(P(a))) has no root on {sys.a_domain}")
    if len(report.equilibria) > 1:
        raise ConditionFailed("i", {"detail": f"{len(report.equilibria)} roots found despite grid certificates",
                                    "roots": [e.h for e in report.equilibria]})
    eq = report.equilibria[0]
    conditions = check_conditions(sys, extra_points=[eq.h])
    return Cor1Solution(eq.dist.probs.copy(), eq.h, conditions)


def linear_fixture() -> Cor1System:
    """Two-state system with rows affine in ``a`` and ``G(x) = x_2``; solution ``a = 5/12``."""

    def P(a):
        return np.array([[0.5 + 0.4 * a, 0.5 - 0.4 * a], [0.3 + 0.4 * a, 0.7 - 0.4 * a]])

    return Cor1System(P, lambda x: float(x[1]), (0.0, 1.0), 2)
