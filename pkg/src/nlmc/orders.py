"""Stochastic-order comparators and the first-order dominance lattice.

All comparisons use an absolute tolerance of ``1e-12`` on partial sums, and
ties satisfy the inequality.
"""
from __future__ import annotations

from enum import Enum

import numpy as np

from .core import Dist, make_dist
from .errors import DimensionMismatch, LengthMismatch, ProductSpaceUnsupported

ORDER_TOL = 1e-12


class OrderResult(Enum):
    GREATER_EQ = "GreaterEq"
    LESS_EQ = "LessEq"
    EQUAL = "Equal"
    INCOMPARABLE = "Incomparable"

    @property
    def ge(self) -> bool:
        return self in (OrderResult.GREATER_EQ, OrderResult.EQUAL)

    @property
    def le(self) -> bool:
        return self in (OrderResult.LESS_EQ, OrderResult.EQUAL)


def _relation(ge: bool, le: bool) -> OrderResult:
    if ge and le:
        return OrderResult.EQUAL
    if ge:
        return OrderResult.GREATER_EQ
    if le:
        return OrderResult.LESS_EQ
    return OrderResult.INCOMPARABLE


def _vec(p) -> np.ndarray:
    if isinstance(p, Dist):
        return p.probs
    return np.asarray(p, dtype=float)


def _pair(p, q):
    if getattr(p, "space", None) is not None and p.space.is_product:
        raise ProductSpaceUnsupported("first-order dominance on product spaces is not supported")
    a, b = _vec(p), _vec(q)
    if a.ndim != 1 or b.ndim != 1:
        raise ProductSpaceUnsupported("comparators take one-dimensional probability vectors")
    if a.size != b.size:
        raise DimensionMismatch(f"{a.size} states vs {b.size} states")
    return a, b


def upper_tails(p) -> np.ndarray:
    """``t[j] = p({j, ..., n-1})`` for ``j = 0..n-1``."""
    v = _vec(p)
    return np.cumsum(v[::-1])[::-1]


def _tails_to_probs(t: np.ndarray) -> np.ndarray:
    return t - np.append(t[1:], 0.0)


def compare_fosd(p, q) -> OrderResult:
    """First-order stochastic dominance between two laws on one ordered grid.

    ``GREATER_EQ`` means ``p`` puts at least as much mass as ``q`` on every
    upper set.
    """
    a, b = _pair(p, q)
    d = upper_tails(a) - upper_tails(b)
    return _relation(bool(np.all(d >= -ORDER_TOL)), bool(np.all(d <= ORDER_TOL)))


def compare_majorization(x, y) -> OrderResult:
    """Upper-partial-sum order between real vectors with equal totals.

    Vectors with different totals are reported as incomparable, not as an
    error.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise LengthMismatch(f"lengths {x.size} and {y.size} differ")
    if abs(x.sum() - y.sum()) > ORDER_TOL:
        return OrderResult.INCOMPARABLE
    d = upper_tails(x) - upper_tails(y)
    return _relation(bool(np.all(d >= -ORDER_TOL)), bool(np.all(d <= ORDER_TOL)))


def _support(n: int, support) -> np.ndarray:
    if support is None:
        return np.arange(n, dtype=float)
    s = np.asarray(support, dtype=float)
    if s.shape != (n,):
        raise DimensionMismatch(f"support has shape {s.shape}, expected ({n},)")
    return s


def stop_loss(p, support=None) -> np.ndarray:
    """``E[(X - t)_+]`` evaluated at every support point ``t``."""
    v = _vec(p)
    s = _support(v.size, support)
    return np.array([np.dot(v, np.maximum(s - t, 0.0)) for t in s])


def compare_icx(p, q, support=None) -> OrderResult:
    """Increasing-convex order via stop-loss transforms on the support grid."""
    a, b = _pair(p, q)
    s = _support(a.size, support)
    d = stop_loss(a, s) - stop_loss(b, s)
    return _relation(bool(np.all(d >= -ORDER_TOL)), bool(np.all(d <= ORDER_TOL)))


def compare_cx(p, q, support=None) -> OrderResult:
    a, b = _pair(p, q)
    s = _support(a.size, support)
    icx = compare_icx(a, b, s)
    if abs(np.dot(a, s) - np.dot(b, s)) > ORDER_TOL:
        return OrderResult.INCOMPARABLE
    return icx


def sd_sup(p, q) -> Dist:
    """Least upper bound under first-order dominance (pointwise max of tails)."""
    a, b = _pair(p, q)
    return make_dist(_tails_to_probs(np.maximum(upper_tails(a), upper_tails(b))))


def sd_inf(p, q) -> Dist:
    """Greatest lower bound under first-order dominance (pointwise min of tails)."""
    a, b = _pair(p, q)
    return make_dist(_tails_to_probs(np.minimum(upper_tails(a), upper_tails(b))))


def gen_comparable_pair(seed: int, n: int):
    """Random ``(p, q)`` with ``p`` first-order dominating ``q``.

    ``q`` is drawn uniformly from the simplex; ``p`` is obtained from ``q`` by
    a few random upward mass transfers.
    """
    if n < 2:
        raise ValueError("need at least two states")
    rng = np.random.default_rng(seed)
    q = rng.dirichlet(np.ones(n))
    p = q.copy()
    for _ in range(int(rng.integers(1, n + 1))):
        i, j = sorted(rng.choice(n, size=2, replace=False))
        moved = rng.uniform() * p[i]
        p[i] -= moved
        p[j] += moved
    return make_dist(p), make_dist(q)
