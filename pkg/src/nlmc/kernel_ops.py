"""Operators built from a nonlinear kernel.

``T`` is the nonlinear distribution update, ``M_h`` the linear chain obtained
by freezing the aggregator at ``h``. Properties (U) and (C) are certified on
a grid of aggregator values through the transition graph of each frozen
chain.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .core import SIMPLEX_TOL, Aggregator, Dist, NonlinearKernel, eval_aggregator, make_dist
from .errors import AggregatorOutOfDomain, DimensionMismatch, MultipleStationary, NumericalFailure

EDGE_TOL = 1e-12
DOMAIN_SLACK = 1e-12
COND_LIMIT = 1e12
DEFAULT_GRID_POINTS = 101


@dataclass(frozen=True)
class LinearChain:
    """Row-stochastic matrix of the kernel frozen at one aggregator value."""

    P: np.ndarray
    h: float = float("nan")

    @property
    def n(self) -> int:
        return self.P.shape[0]


@dataclass(frozen=True)
class PropertyReport:
    property: str
    holds: bool
    witnesses: list = field(default_factory=list)
    grid: tuple = ()


def _check_h(Q: NonlinearKernel, h: float) -> float:
    lo, hi = Q.h_domain
    h = float(h)
    if not (lo - DOMAIN_SLACK <= h <= hi + DOMAIN_SLACK) or np.isnan(h):
        raise AggregatorOutOfDomain(f"aggregator value {h!r} outside [{lo}, {hi}]", h=h)
    return min(max(h, lo), hi)


def default_h_grid(Q: NonlinearKernel, points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    lo, hi = Q.h_domain
    if hi == lo:
        return np.array([lo])
    return np.linspace(lo, hi, points)


def _validate_matrix(P: np.ndarray, n: int, h: float) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.shape != (n, n):
        raise DimensionMismatch(f"kernel at h={h} produced shape {P.shape}, expected {(n, n)}")
    if P.min() < -1e-12 or not np.all(np.isfinite(P)):
        i, j = np.unravel_index(np.argmin(P), P.shape)
        raise ValueError(f"kernel row {i} at h={h} has invalid entry {P[i, j]!r}")
    P = np.clip(P, 0.0, None)
    sums = P.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > SIMPLEX_TOL)
    if bad.size:
        raise ValueError(f"kernel row {bad[0]} at h={h} sums to {sums[bad[0]]!r}")
    return P / sums[:, None]


def row(Q: NonlinearKernel, x: int, h: float) -> Dist:
    x = Q.check_state(x)
    h = _check_h(Q, h)
    return make_dist(Q.row_fn(x, h))


def freeze(Q: NonlinearKernel, h: float) -> LinearChain:
    h = _check_h(Q, h)
    if Q.matrix_fn is not None:
        P = Q.matrix_fn(h)
    else:
        P = np.array([np.ravel(Q.row_fn(x, h)) for x in range(Q.n_states)], dtype=float)
    P = _validate_matrix(P, Q.n_states, h)
    P.setflags(write=False)
    return LinearChain(P, h)


def apply_M(Q: NonlinearKernel, h: float, theta) -> Dist:
    P = freeze(Q, h).P
    t = np.asarray(theta.probs if isinstance(theta, Dist) else theta, dtype=float)
    if t.size != Q.n_states:
        raise DimensionMismatch(f"distribution has {t.size} states, kernel has {Q.n_states}")
    return make_dist(t @ P)


def apply_T(Q: NonlinearKernel, H: Aggregator, mu) -> Dist:
    """One step of the nonlinear flow: ``(T mu)_j = sum_i mu_i Q(i, H(mu), j)``."""
    return apply_M(Q, eval_aggregator(H, mu), mu)


def recurrent_classes(P: np.ndarray, edge_tol: float = EDGE_TOL) -> list:
    """Closed communicating classes of the transition graph ``P_ij > edge_tol``."""
    adj = np.asarray(P) > edge_tol
    if adj.all():
        return [np.arange(adj.shape[0])]
    n_comp, labels = connected_components(csr_matrix(adj), directed=True, connection="strong")
    closed = np.ones(n_comp, dtype=bool)
    src, dst = np.nonzero(adj)
    leaving = labels[src] != labels[dst]
    closed[labels[src[leaving]]] = False
    return [np.flatnonzero(labels == c) for c in range(n_comp) if closed[c]]


def period(P: np.ndarray, states, edge_tol: float = EDGE_TOL) -> int:
    """Period of an irreducible class: gcd of ``level[u] + 1 - level[v]`` over its edges."""
    states = np.asarray(states)
    sub = np.asarray(P)[np.ix_(states, states)] > edge_tol
    level = np.full(states.size, -1)
    level[0] = 0
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.flatnonzero(sub[u]):
                if level[v] < 0:
                    level[v] = level[u] + 1
                    nxt.append(v)
        frontier = nxt
    d = 0
    for u, v in zip(*np.nonzero(sub)):
        d = gcd(d, int(level[u] + 1 - level[v]))
    return abs(d) if d else 1


def _power_stationary(P: np.ndarray, tol: float = 1e-14, max_steps: int = 100_000) -> np.ndarray:
    # lazy chain shares the stationary law and is aperiodic
    L = 0.5 * (P + np.eye(P.shape[0]))
    pi = np.full(P.shape[0], 1.0 / P.shape[0])
    for _ in range(max_steps):
        nxt = pi @ L
        if np.abs(nxt - pi).sum() <= tol:
            return nxt
        pi = nxt
    raise NumericalFailure("power iteration did not converge")


def stationary_vector(P: np.ndarray) -> np.ndarray:
    """Unique stationary vector of a row-stochastic matrix.

    Raises :class:`MultipleStationary` when the transition graph has more
    than one closed class.
    """
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    classes = recurrent_classes(P)
    if len(classes) > 1:
        raise MultipleStationary(
            f"{len(classes)} closed classes: {[c.tolist() for c in classes]}", classes=classes
        )
    if n == 1:
        return np.ones(1)
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        if np.linalg.cond(A) > COND_LIMIT:
            raise np.linalg.LinAlgError("ill-conditioned")
        pi = np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        pi = _power_stationary(P)
    if pi.min() < -1e-9:
        raise NumericalFailure(f"stationary solve returned negative mass {pi.min()!r}")
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def stationary_of_M(Q: NonlinearKernel, h: float) -> Dist:
    chain = freeze(Q, h)
    try:
        return make_dist(stationary_vector(chain.P))
    except MultipleStationary as exc:
        raise MultipleStationary(f"at h={chain.h!r}: {exc}", h=chain.h, classes=exc.classes) from None


def check_property_U(Q: NonlinearKernel, h_grid=None) -> PropertyReport:
    """Grid certificate that every frozen chain has a single closed class."""
    grid = default_h_grid(Q) if h_grid is None else np.asarray(h_grid, dtype=float)
    witnesses = []
    for h in grid:
        classes = recurrent_classes(freeze(Q, h).P)
        if len(classes) != 1:
            witnesses.append((float(h), f"{len(classes)} closed classes {[c.tolist() for c in classes]}"))
    return PropertyReport("U", not witnesses, witnesses, tuple(float(h) for h in grid))


def check_property_C(Q: NonlinearKernel, h_grid=None) -> PropertyReport:
    """Property (U) plus aperiodicity of the closed class at every grid point."""
    grid = default_h_grid(Q) if h_grid is None else np.asarray(h_grid, dtype=float)
    witnesses = []
    for h in grid:
        P = freeze(Q, h).P
        classes = recurrent_classes(P)
        if len(classes) != 1:
            witnesses.append((float(h), f"{len(classes)} closed classes {[c.tolist() for c in classes]}"))
            continue
        d = period(P, classes[0])
        if d != 1:
            witnesses.append((float(h), f"period {d}"))
    return PropertyReport("C", not witnesses, witnesses, tuple(float(h) for h in grid))
