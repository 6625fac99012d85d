"""Small kernels with known behaviour, plus tabulated kernels.

The two-state and three-state chains here are the standard regression
fixtures: one that is monotone in the state but increasing in the
aggregator (two invariant laws), one that is decreasing in the aggregator
but not monotone in the state (two invariant laws), a period-two flip chain
with a unique invariant law, and a chain whose Cesaro averages converge to
something that is not invariant.
"""
from __future__ import annotations

import numpy as np

from .core import Aggregator, NonlinearKernel, StateSpace


def table_kernel(h_knots, rows, h_domain=None, states=None, name="table") -> NonlinearKernel:
    """Kernel given by matrices at aggregator knots, linear in ``h`` between knots.

    ``rows[k]`` is the full ``n x n`` matrix at ``h_knots[k]``. Outside the
    knot range the end matrices are held constant.
    """
    knots = np.asarray(h_knots, dtype=float)
    mats = np.asarray(rows, dtype=float)
    if knots.ndim != 1 or knots.size == 0 or np.any(np.diff(knots) <= 0):
        raise ValueError("h_knots must be a nonempty strictly increasing list")
    if mats.ndim != 3 or mats.shape[0] != knots.size or mats.shape[1] != mats.shape[2]:
        raise ValueError("rows must hold one square matrix per knot")
    n = mats.shape[1]
    space = StateSpace.line(states) if states is not None else None

    def matrix_fn(h):
        if knots.size == 1:
            return mats[0].copy()
        k = int(np.clip(np.searchsorted(knots, h, side="right") - 1, 0, knots.size - 2))
        w = np.clip((h - knots[k]) / (knots[k + 1] - knots[k]), 0.0, 1.0)
        return (1.0 - w) * mats[k] + w * mats[k + 1]

    def row_fn(x, h):
        return matrix_fn(h)[x]

    dom = (knots[0], knots[-1]) if h_domain is None else h_domain
    return NonlinearKernel(n, row_fn, dom, space=space, matrix_fn=matrix_fn, name=name)


def top_mass() -> Aggregator:
    """``H(mu) = mu({1})`` on two states."""
    return Aggregator.linear([0.0, 1.0])


def example2():
    """Top-state mass ``min(0.5, h)`` from state 0: not decreasing in ``h``."""

    def matrix_fn(h):
        p = min(0.5, h)
        return np.array([[1.0 - p, p], [0.5, 0.5]])

    Q = NonlinearKernel(2, lambda x, h: matrix_fn(h)[x], (0.0, 1.0), matrix_fn=matrix_fn, name="example2")
    return Q, top_mass()


def example3():
    """Three states, ``H = mu({1}) + mu({2})``; decreasing in ``h`` but not monotone in ``x``."""

    def matrix_fn(h):
        third = 1.0 / 3.0
        return np.array([[third, third, third], [0.0, h, 1.0 - h], [h, 0.0, 1.0 - h]])

    Q = NonlinearKernel(3, lambda x, h: matrix_fn(h)[x], (0.0, 1.0), matrix_fn=matrix_fn, name="example3")
    return Q, Aggregator.linear([0.0, 1.0, 1.0])


def example4():
    """Both rows equal ``(h, 1 - h)``: unique invariant law, period-two flow."""

    def matrix_fn(h):
        return np.array([[h, 1.0 - h], [h, 1.0 - h]])

    Q = NonlinearKernel(2, lambda x, h: matrix_fn(h)[x], (0.0, 1.0), matrix_fn=matrix_fn, name="example4")
    return Q, top_mass()


def example5_f(u: float) -> float:
    """Piecewise-linear increasing map with ``f(u) >= u``, kinks at 0.3, 0.5, 0.7."""
    if u <= 0.3:
        return u
    if u <= 0.5:
        return 1.2 * u - 0.06
    if u <= 0.7:
        return 0.8 * u + 0.14
    return u


def example5():
    """Flip chain whose Cesaro limit ``(1/2, 1/2)`` is not invariant."""

    def matrix_fn(h):
        fu = example5_f(1.0 - h)
        return np.array([[h, 1.0 - h], [1.0 - fu, fu]])

    Q = NonlinearKernel(2, lambda x, h: matrix_fn(h)[x], (0.0, 1.0), matrix_fn=matrix_fn, name="example5")
    return Q, top_mass()


def identity_kernel(n: int = 2, h_domain=(0.0, 1.0)) -> NonlinearKernel:
    eye = np.eye(n)
    return NonlinearKernel(n, lambda x, h: eye[x], h_domain, matrix_fn=lambda h: eye.copy(), name="identity")


def constant_kernel(P, h_domain=(0.0, 1.0), name="constant") -> NonlinearKernel:
    P = np.asarray(P, dtype=float)
    return NonlinearKernel(
        P.shape[0], lambda x, h: P[x], h_domain, matrix_fn=lambda h: P.copy(), name=name
    )
