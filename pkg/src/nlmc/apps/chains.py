"""Kernel builders for autoregressive, affine multi-dimensional and wealth chains.

Continuous-state recursions are discretized with :func:`snap`; any row that
pushes more than 1% of its mass off the grid raises
:class:`GridOverflowExcess`.
"""
from __future__ import annotations

import itertools
from typing import Callable, Sequence

import numpy as np

from ..certify import AffineChainSpec
from ..core import Aggregator, NonlinearKernel, StateSpace
from ..errors import InfeasiblePolicy
from .discretize import DiscreteLaw, law_fosd_ge, snap_checked


def _weights_on(grid: np.ndarray, m) -> np.ndarray:
    w = np.array([m(v) for v in grid], dtype=float) if callable(m) else np.asarray(m, dtype=float)
    if w.shape != grid.shape:
        raise ValueError(f"aggregator weights have shape {w.shape}, grid has {grid.shape}")
    return w


def _drift(kind, c):
    if kind == "linear":
        return lambda h: -h
    if kind == "logistic":
        if c is None or c <= 0:
            raise ValueError("logistic drift needs c > 0")
        return lambda h: h - c * h * h
    raise ValueError(f"unknown drift {kind!r}; use 'linear' or 'logistic'")


def build_ar_kernel(a: float, drift: str, noise: DiscreteLaw, m, grid: StateSpace, c: float = None, h_domain=None):
    """Scalar chain ``X' = a X + d(h) + eps`` with ``H(mu) = sum m(x) mu(x)``.

    ``drift="linear"`` gives ``d(h) = -h``; ``drift="logistic"`` gives
    ``d(h) = h - c h^2``, which is decreasing only for ``h >= 1/(2c)``.
    """
    if not 0.0 <= a < 1.0:
        raise ValueError(f"a must lie in [0, 1), got {a!r}")
    xs = grid.values
    w = _weights_on(xs, m)
    if np.any(np.diff(w) < 0):
        raise ValueError("aggregator weights m must be nondecreasing")
    d = _drift(drift, c)
    dom = (float(w.min()), float(w.max())) if h_domain is None else h_domain

    def row_fn(x, h):
        return snap_checked(xs, a * xs[x] + d(h) + noise.v, noise.p, x=x, h=h)

    def matrix_fn(h):
        return np.array([row_fn(x, h) for x in range(xs.size)])

    Q = NonlinearKernel(xs.size, row_fn, dom, space=grid, matrix_fn=matrix_fn, name=f"ar-{drift}")
    return Q, Aggregator.linear(w)


def build_affine_kernel(spec: AffineChainSpec, grids: Sequence, noises: Sequence[DiscreteLaw], h_domain=None):
    """Product-grid chain ``X'_i = a_i X_i - beta_i h + eps_i`` with independent noise.

    The aggregator is ``H(mu) = E_mu[gamma . X]``. States are indexed in C
    order over the coordinate grids.
    """
    a, beta, gamma = (np.asarray(v) for v in (spec.a, spec.beta, spec.gamma))
    if len(grids) != a.size or len(noises) != a.size:
        raise ValueError("need one grid and one noise law per coordinate")
    space = StateSpace.product(*grids)
    gs = space.grids
    m = space.points() @ gamma
    dom = (float(m.min()), float(m.max())) if h_domain is None else h_domain

    def coord_matrix(i, h):
        g = gs[i]
        return np.array(
            [snap_checked(g, a[i] * g[x] - beta[i] * h + noises[i].v, noises[i].p, x=x, h=h) for x in range(g.size)]
        )

    def matrix_fn(h):
        P = coord_matrix(0, h)
        for i in range(1, a.size):
            P = np.kron(P, coord_matrix(i, h))
        return P

    def row_fn(x, h):
        idx = np.unravel_index(x, space.shape)
        r = coord_matrix(0, h)[idx[0]]
        for i in range(1, a.size):
            r = np.kron(r, coord_matrix(i, h)[idx[i]])
        return r

    Q = NonlinearKernel(space.size, row_fn, dom, space=space, matrix_fn=matrix_fn, name="affine")
    return Q, Aggregator.linear(m, declared_monotone_in="LinearCone")


def build_wealth_kernel(
    policies: Sequence[Callable],
    returns: Sequence[Callable[[float], DiscreteLaw]],
    income: DiscreteLaw,
    grid: StateSpace,
    aggregator: str = "savings",
    policy_depends_on_h: bool = False,
    h_domain=None,
):
    """Wealth recursion ``X' = sum_i g_i(x) R_i(h) + Y``.

    ``policies[i]`` is ``g_i(x)``, or ``g_i(x, h)`` when
    ``policy_depends_on_h`` (the allocation reacts to the return
    environment). ``returns[i](h)`` is the law of asset ``i``'s gross return
    and must be first-order decreasing in ``h``. The aggregator is total
    savings ``sum_x sum_i g_i(x) mu(x)`` (only for policies that do not see
    ``h``) or mean wealth.
    """
    if len(policies) != len(returns):
        raise ValueError("need one return law per policy")
    xs = grid.values
    n = xs.size

    def alloc(x, h):
        if policy_depends_on_h:
            g = np.array([p(xs[x], h) for p in policies], dtype=float)
        else:
            g = np.array([p(xs[x]) for p in policies], dtype=float)
        if g.min() < -1e-12 or g.sum() > xs[x] + 1e-12:
            raise InfeasiblePolicy(f"allocation {g.tolist()} infeasible at wealth {xs[x]!r}")
        return np.clip(g, 0.0, None)

    if aggregator == "savings":
        if policy_depends_on_h:
            raise ValueError("total-savings aggregator needs policies that do not depend on h")
        w = np.array([alloc(x, None).sum() for x in range(n)])
    elif aggregator == "wealth":
        w = xs.astype(float)
    else:
        raise ValueError(f"unknown aggregator {aggregator!r}; use 'savings' or 'wealth'")
    dom = (float(w.min()), float(w.max())) if h_domain is None else h_domain

    probe = np.linspace(dom[0], dom[1], 11)
    for i, R in enumerate(returns):
        for h0, h1 in zip(probe, probe[1:]):
            if not law_fosd_ge(R(h0), R(h1)):
                raise ValueError(f"returns of asset {i} are not first-order decreasing in h near {h0!r}")
    for h in probe if policy_depends_on_h else [None]:
        tot = np.array([alloc(x, h).sum() for x in range(n)])
        if np.any(np.diff(tot) < -1e-12):
            raise ValueError("total savings must be nondecreasing in wealth")

    def row_fn(x, h):
        g = alloc(x, h)
        laws = [R(h) for R in returns]
        vals, probs = [], []
        for combo in itertools.product(*(zip(L.values, L.probs) for L in laws)):
            r = np.array([c[0] for c in combo])
            pr = float(np.prod([c[1] for c in combo]))
            vals.append(g @ r + income.v)
            probs.append(pr * income.p)
        return snap_checked(xs, np.concatenate(vals), np.concatenate(probs), x=x, h=h)

    def matrix_fn(h):
        return np.array([row_fn(x, h) for x in range(n)])

    Q = NonlinearKernel(n, row_fn, dom, space=grid, matrix_fn=matrix_fn, name="wealth")
    return Q, Aggregator.linear(w)


# fixtures

def _ternary_noise() -> DiscreteLaw:
    return DiscreteLaw((-1.0, 0.0, 1.0), (0.25, 0.5, 0.25))


def _clip_weights(x):
    return float(np.clip((x + 2.0) / 4.0, 0.0, 1.0))


def example1i_fixture():
    """``X' = 0.5 X - h + eps`` on a 33-point grid over [-4, 4]."""
    grid = StateSpace.line(np.linspace(-4.0, 4.0, 33))
    return build_ar_kernel(0.5, "linear", _ternary_noise(), _clip_weights, grid)


def example7_fixture(c: float = 1.0):
    """``X' = 0.5 X + h - c h^2 + eps``; decreasing in ``h`` only above ``1/(2c)``."""
    grid = StateSpace.line(np.linspace(-4.0, 4.0, 33))
    return build_ar_kernel(0.5, "logistic", _ternary_noise(), _clip_weights, grid, c=c)


def example1ii_spec() -> AffineChainSpec:
    return AffineChainSpec(a=(0.5, 0.5), beta=(0.1, -0.1), gamma=(0.2, -0.3))


def example1ii_fixture():
    """Two-coordinate affine chain on a 17 x 17 grid with coefficients in the cone."""
    g = np.linspace(-4.0, 4.0, 17)
    return build_affine_kernel(example1ii_spec(), [g, g], [_ternary_noise(), _ternary_noise()])


def wealth_fixture():
    """One asset, save half of wealth, gross return ``1.2 - 0.1 h``, income uniform on {0.5, 1, 1.5}."""
    grid = StateSpace.line(np.linspace(0.0, 8.0, 33))
    income = DiscreteLaw((0.5, 1.0, 1.5), (1 / 3, 1 / 3, 1 / 3))
    return build_wealth_kernel(
        [lambda x: 0.5 * x],
        [lambda h: DiscreteLaw.point(1.2 - 0.1 * h)],
        income,
        grid,
    )
