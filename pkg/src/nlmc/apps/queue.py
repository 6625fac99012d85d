"""Strategic single-server queue: closed form for M/G/1 and a discretized Lindley kernel."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import Aggregator, NonlinearKernel, StateSpace
from ..errors import BadMoments, GridOverflowExcess, UnstableQueue
from .discretize import OVERFLOW_BUDGET, DiscreteLaw, law_fosd_ge, snap


def _check_moments(ES: float, ES2: float):
    if not ES > 0:
        raise BadMoments(f"mean service time must be positive, got {ES!r}")
    if ES2 < ES * ES * (1.0 - 1e-12):
        raise BadMoments(f"second moment {ES2!r} is below the squared mean {ES * ES!r}")


def pk_wait(lam: float, ES: float, ES2: float) -> float:
    """Stationary mean wait of an M/G/1 queue (Pollaczek-Khinchin)."""
    if lam < 0:
        raise ValueError("arrival rate must be nonnegative")
    if lam * ES >= 1.0:
        raise UnstableQueue(f"load {lam * ES!r} >= 1")
    return lam * ES2 / (2.0 * (1.0 - lam * ES))


def mg1_equilibrium_rate(ES: float, ES2: float) -> float:
    """Arrival rate at which the mean inter-arrival time equals the mean wait.

    Solves ``1 / lam = pk_wait(lam)``, i.e.
    ``lam = (sqrt(ES^2 + 2 ES2) - ES) / ES2``.
    """
    _check_moments(ES, ES2)
    lam = (math.sqrt(ES * ES + 2.0 * ES2) - ES) / ES2
    if lam * ES >= 1.0:
        raise UnstableQueue(f"equilibrium load {lam * ES!r} >= 1")
    return lam


@dataclass(frozen=True)
class QueueSpec:
    """Discrete service law, inter-arrival family indexed by mean wait, wait grid.

    ``arrival_family(m)`` must be first-order increasing in ``m``: longer
    expected waits mean stochastically longer gaps between arrivals.
    """

    service: DiscreteLaw
    arrival_family: Callable[[float], DiscreteLaw]
    wait_grid: StateSpace

    def __post_init__(self):
        if self.wait_grid.is_product:
            raise ValueError("wait grid must be one-dimensional")
        if self.wait_grid.values[0] != 0.0:
            raise ValueError("wait grid must start at 0")
        if self.service.v.min() < 0:
            raise ValueError("service times must be nonnegative")
        # zero service is allowed here (the queue never builds up); the closed
        # forms still demand a positive mean
        if self.ES2 < self.ES * self.ES * (1.0 - 1e-12):
            raise BadMoments(f"second moment {self.ES2!r} is below the squared mean {self.ES ** 2!r}")
        ms = np.linspace(0.0, float(self.wait_grid.values[-1]), 21)
        laws = [self.arrival_family(m) for m in ms]
        for m0, m1, l0, l1 in zip(ms, ms[1:], laws, laws[1:]):
            if not law_fosd_ge(l1, l0):
                raise ValueError(f"arrival family is not first-order increasing between m={m0} and m={m1}")

    @property
    def ES(self) -> float:
        return self.service.mean()

    @property
    def ES2(self) -> float:
        return self.service.moment(2)


def _lindley_row(spec: QueueSpec, grid, x_value, m):
    T = spec.arrival_family(m)
    inc = (spec.service.v[:, None] - T.v[None, :]).ravel()
    pr = (spec.service.p[:, None] * T.p[None, :]).ravel()
    return snap(grid, np.maximum(0.0, x_value + inc), pr)


def build_lindley_kernel(spec: QueueSpec):
    """Waiting-time kernel ``x -> max(0, x + S - T(m))`` with ``H(mu) = E_mu[X]``.

    Mass above the top of the grid is lumped onto the top cell. A row from
    the top cells always overflows when ``S > T`` is possible, so the grid
    budget is enforced on the stationary overflow (see
    :func:`lindley_overflow`), not per row.
    """
    grid = spec.wait_grid.values
    n = grid.size

    def row_fn(x, m):
        return _lindley_row(spec, grid, grid[x], m)[0]

    def matrix_fn(m):
        return np.array([_lindley_row(spec, grid, grid[x], m)[0] for x in range(n)])

    def overflow_fn(x, m):
        return _lindley_row(spec, grid, grid[x], m)[1]

    Q = NonlinearKernel(
        n,
        row_fn,
        (0.0, float(grid[-1])),
        space=spec.wait_grid,
        matrix_fn=matrix_fn,
        name="lindley",
        meta={"overflow_fn": overflow_fn},
    )
    return Q, Aggregator.linear(grid)


def lindley_overflow(Q: NonlinearKernel, mu, m: float, budget: float = OVERFLOW_BUDGET) -> float:
    """Mass pushed past the top of the wait grid in one step from ``mu``.

    Raises :class:`GridOverflowExcess` above ``budget``.
    """
    p = np.asarray(getattr(mu, "probs", mu), dtype=float)
    fn = Q.meta["overflow_fn"]
    mass = float(sum(p[x] * fn(x, m) for x in np.flatnonzero(p > 0)))
    if mass > budget:
        raise GridOverflowExcess(f"stationary overflow {mass:.4g} exceeds {budget}; extend the wait grid", mass=mass, h=m)
    return mass


def geometric_law(ratio: float, top: int, offset: int = 0) -> DiscreteLaw:
    """Truncated geometric law on ``offset, ..., offset + top``."""
    k = np.arange(top + 1)
    w = ratio**k
    return DiscreteLaw(tuple(k + offset), tuple(w / w.sum()))


def mixture_family(low: DiscreteLaw, high: DiscreteLaw, m_max: float):
    """``m -> (1 - w) low + w high`` with ``w = clip(m / m_max, 0, 1)``.

    First-order increasing in ``m`` whenever ``high`` dominates ``low``.
    """
    support = np.union1d(low.v, high.v)
    pl = np.array([low.p[low.v == s].sum() for s in support])
    ph = np.array([high.p[high.v == s].sum() for s in support])

    def family(m):
        w = float(np.clip(m / m_max, 0.0, 1.0))
        return DiscreteLaw(tuple(support), tuple((1 - w) * pl + w * ph))

    return family


def lindley_fixture(cells: int = 50) -> QueueSpec:
    """Geometric-like service and inter-arrival laws on a ``cells``-point unit grid."""
    service = geometric_law(0.5, 8)
    low = geometric_law(0.6, 10, offset=1)
    high = geometric_law(0.8, 10, offset=1)
    grid = StateSpace.line(np.arange(cells, dtype=float))
    return QueueSpec(service, mixture_family(low, high, float(cells - 1)), grid)
