"""Domain types: state spaces, distributions, aggregators, kernels, order families.

Everything here is immutable after construction. Arrays held by these
objects are flagged read-only so that accidental in-place edits fail loudly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    BadStateIndex,
    DimensionMismatch,
    MassNotOne,
    NegativeMass,
    ProductSpaceUnsupported,
    UnsupportedFamily,
)

SIMPLEX_TOL = 1e-9
# float dust below zero that is clipped instead of rejected
NEG_DUST = 1e-12


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class StateSpace:
    """Finite ordered grid, or a product of such grids with componentwise order.

    Product states are enumerated in C order (last coordinate fastest).
    """

    grids: tuple

    def __post_init__(self):
        grids = tuple(_frozen(g) for g in self.grids)
        if not grids:
            raise ValueError("state space needs at least one coordinate grid")
        for g in grids:
            if g.ndim != 1 or g.size == 0:
                raise ValueError("each coordinate grid must be a nonempty 1-D sequence")
            if np.any(np.diff(g) <= 0):
                raise ValueError("coordinate grids must be strictly increasing")
        size = int(np.prod([g.size for g in grids]))
        if size < 2:
            raise ValueError("state space must have at least two states")
        object.__setattr__(self, "grids", grids)

    @classmethod
    def line(cls, values) -> "StateSpace":
        return cls((values,))

    @classmethod
    def product(cls, *grids) -> "StateSpace":
        return cls(tuple(grids))

    @property
    def ndim(self) -> int:
        return len(self.grids)

    @property
    def shape(self) -> tuple:
        return tuple(g.size for g in self.grids)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def is_product(self) -> bool:
        return self.ndim > 1

    @property
    def values(self) -> np.ndarray:
        if self.is_product:
            raise ProductSpaceUnsupported("product state space has no scalar values")
        return self.grids[0]

    def points(self) -> np.ndarray:
        """Coordinates of every state, shape ``(size, ndim)``."""
        mesh = np.meshgrid(*self.grids, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)


@dataclass(frozen=True)
class Dist:
    """Probability vector over the states of a finite space."""

    probs: np.ndarray

    def __len__(self) -> int:
        return self.probs.size

    def __getitem__(self, i):
        return self.probs[i]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.probs, dtype=dtype)

    def mean(self, values) -> float:
        return float(np.dot(self.probs, values))

    def l1(self, other) -> float:
        return float(np.abs(self.probs - np.asarray(other, dtype=float)).sum())


def make_dist(probs) -> Dist:
    """Validate a probability vector and wrap it as a :class:`Dist`.

    Entries down to ``-1e-12`` are treated as rounding noise and clipped to
    zero. The vector is renormalized only when its total is within ``1e-9``
    of one.
    """
    if isinstance(probs, Dist):
        return probs
    p = np.array(probs, dtype=float).ravel()
    if p.size == 0:
        raise ValueError("distribution needs at least one entry")
    if not np.all(np.isfinite(p)):
        raise NegativeMass("distribution has non-finite entries")
    if p.min() < -NEG_DUST:
        i = int(np.argmin(p))
        raise NegativeMass(f"negative mass {p[i]!r} at state {i}")
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if abs(total - 1.0) > SIMPLEX_TOL:
        raise MassNotOne(f"total mass {total!r} differs from 1 by more than {SIMPLEX_TOL}")
    p = p / total
    p.setflags(write=False)
    return Dist(p)


def point_mass(n: int, i: int) -> Dist:
    p = np.zeros(n)
    p[i] = 1.0
    return make_dist(p)


def uniform(n: int) -> Dist:
    return make_dist(np.full(n, 1.0 / n))


@dataclass(frozen=True)
class Aggregator:
    """Real-valued functional of a distribution.

    Either linear, ``H(mu) = sum_x m(x) mu(x)``, or an opaque callback taking
    the probability vector.
    """

    m: Optional[np.ndarray] = None
    fn: Optional[Callable[[np.ndarray], float]] = None
    declared_monotone_in: str = "SD"

    def __post_init__(self):
        if (self.m is None) == (self.fn is None):
            raise ValueError("aggregator needs exactly one of m or fn")
        if self.m is not None:
            object.__setattr__(self, "m", _frozen(np.ravel(self.m)))

    @classmethod
    def linear(cls, m, declared_monotone_in: str = "SD") -> "Aggregator":
        return cls(m=m, declared_monotone_in=declared_monotone_in)

    @classmethod
    def callback(cls, fn, declared_monotone_in: str = "SD") -> "Aggregator":
        return cls(fn=fn, declared_monotone_in=declared_monotone_in)

    @property
    def is_linear(self) -> bool:
        return self.m is not None

    def __call__(self, mu) -> float:
        return eval_aggregator(self, mu)


def eval_aggregator(H: Aggregator, mu) -> float:
    p = np.asarray(mu.probs if isinstance(mu, Dist) else mu, dtype=float)
    if H.is_linear:
        if H.m.size != p.size:
            raise DimensionMismatch(f"aggregator has {H.m.size} weights, distribution has {p.size} states")
        return float(np.dot(H.m, p))
    return float(H.fn(p))


@dataclass(frozen=True)
class NonlinearKernel:
    """Transition kernel ``(x, h) -> row`` with admissible aggregator interval.

    ``row_fn(x, h)`` returns the law of the next state from state index ``x``
    when the aggregator equals ``h``. ``matrix_fn(h)``, when given, returns
    the whole frozen matrix at once and must agree with ``row_fn``; it only
    exists for speed.
    """

    n_states: int
    row_fn: Callable[[int, float], Sequence[float]]
    h_domain: tuple
    space: Optional[StateSpace] = None
    matrix_fn: Optional[Callable[[float], np.ndarray]] = None
    name: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        lo, hi = (float(v) for v in self.h_domain)
        if not lo <= hi:
            raise ValueError(f"h_domain must satisfy lo <= hi, got {self.h_domain}")
        object.__setattr__(self, "h_domain", (lo, hi))
        if self.n_states < 1:
            raise ValueError("kernel needs at least one state")
        if self.space is not None and self.space.size != self.n_states:
            raise DimensionMismatch("state space size differs from n_states")

    @property
    def values(self) -> np.ndarray:
        if self.space is None:
            return np.arange(self.n_states, dtype=float)
        return self.space.values

    def check_state(self, x: int) -> int:
        if not 0 <= int(x) < self.n_states or int(x) != x:
            raise BadStateIndex(f"state index {x} outside 0..{self.n_states - 1}")
        return int(x)


_TAGS = ("SD", "CX", "ICX", "LinearCone")


@dataclass(frozen=True)
class OrderFamily:
    """Selects the class of test functions defining a stochastic order.

    ``LinearCone`` means functions ``x -> y.x + c`` with ``y`` in the convex
    cone spanned by ``generators``.
    """

    tag: str
    generators: tuple = ()

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise UnsupportedFamily(f"unknown order family {self.tag!r}; known: {', '.join(_TAGS)}")
        gens = tuple(_frozen(g) for g in self.generators)
        if self.tag == "LinearCone":
            if not gens:
                raise ValueError("LinearCone needs at least one generator")
            if len({g.size for g in gens}) != 1:
                raise DimensionMismatch("cone generators must share one dimension")
            if any(not np.any(g) for g in gens):
                raise ValueError("cone generators must be nonzero")
        elif gens:
            raise ValueError(f"{self.tag} takes no generators")
        object.__setattr__(self, "generators", gens)

    @classmethod
    def sd(cls) -> "OrderFamily":
        return cls("SD")

    @classmethod
    def cone_o(cls, n: int) -> "OrderFamily":
        """Orthant cone: coordinate 1, 3, 5, ... nonnegative; 2, 4, ... nonpositive."""
        gens = []
        for i in range(n):
            e = np.zeros(n)
            e[i] = 1.0 if i % 2 == 0 else -1.0
            gens.append(e)
        return cls("LinearCone", tuple(gens))

    @property
    def dim(self) -> int:
        return self.generators[0].size if self.generators else 1

    def contains(self, y, tol: float = 1e-9) -> bool:
        """Whether ``y`` lies in the generated cone (LinearCone only)."""
        from scipy.optimize import nnls

        if self.tag != "LinearCone":
            raise UnsupportedFamily("cone membership only defined for LinearCone")
        y = np.asarray(y, dtype=float)
        G = np.stack(self.generators, axis=1)
        _, resid = nnls(G, y)
        return resid <= tol * max(1.0, np.linalg.norm(y))
