"""Executable certificates for the monotonicity hypotheses of the uniqueness result.

A certificate is a grid check over aggregator values, never a proof: the
``grid`` it carries says exactly which values were examined. Checks in the
state and aggregator directions only compare adjacent points; on a totally
ordered grid transitivity closes the gaps.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Aggregator, NonlinearKernel, OrderFamily, make_dist, point_mass
from .errors import AggregatorOutOfDomain, EmptyInterval, UnsupportedFamily
from .kernel_ops import default_h_grid, freeze, row
from .orders import ORDER_TOL, compare_fosd, gen_comparable_pair, upper_tails

AFFINE_TOL = 1e-9


@dataclass(frozen=True)
class Certificate:
    name: str
    family: OrderFamily
    holds: bool
    counterexample: Optional[dict] = None
    h_interval: tuple = ()
    grid: tuple = ()
    sampled: bool = False
    trials: int = 0

    def summary(self) -> str:
        status = "holds" if self.holds else "FAILS"
        extra = f" (sampled, {self.trials} trials)" if self.sampled else ""
        return f"{self.name}[{self.family.tag}] {status}{extra}"


@dataclass(frozen=True)
class AffineChainSpec:
    """``X'_i = a_i X_i - beta_i h + eps_i`` with ``H(mu) = E_mu[gamma . X]``."""

    a: tuple
    beta: tuple
    gamma: tuple
    noise: object = None

    def __post_init__(self):
        a, b, g = (np.asarray(v, dtype=float).ravel() for v in (self.a, self.beta, self.gamma))
        if not (a.size == b.size == g.size):
            raise ValueError("a, beta and gamma must have the same length")
        if not np.all(np.isfinite(np.concatenate([a, b, g]))):
            raise ValueError("affine chain coefficients must be finite")
        object.__setattr__(self, "a", tuple(a))
        object.__setattr__(self, "beta", tuple(b))
        object.__setattr__(self, "gamma", tuple(g))


def _grid(Q: NonlinearKernel, h_grid) -> np.ndarray:
    g = default_h_grid(Q) if h_grid is None else np.asarray(h_grid, dtype=float)
    return np.unique(g)


def _coords(Q: NonlinearKernel) -> np.ndarray:
    if Q.space is None:
        return np.arange(Q.n_states, dtype=float)[:, None]
    return Q.space.points()


def _require_line(Q: NonlinearKernel):
    if Q.space is not None and Q.space.is_product:
        raise UnsupportedFamily("SD certificates need a one-dimensional state space; use a LinearCone family")


def _fits_affine(coords: np.ndarray, v: np.ndarray):
    X = np.hstack([coords, np.ones((coords.shape[0], 1))])
    c, *_ = np.linalg.lstsq(X, v, rcond=None)
    resid = float(np.max(np.abs(X @ c - v)))
    return c[:-1], c[-1], resid


def certify_d_preserving(Q: NonlinearKernel, family: OrderFamily, h_grid=None) -> Certificate:
    """Rows increase in the state (SD), or map cone functions into the cone (LinearCone)."""
    grid = _grid(Q, h_grid)
    interval = Q.h_domain
    if family.tag == "SD":
        _require_line(Q)
        for h in grid:
            tails = np.array([upper_tails(r) for r in freeze(Q, h).P])
            diff = tails[1:] - tails[:-1]
            bad = np.argwhere(diff < -ORDER_TOL)
            if bad.size:
                x, j = (int(v) for v in bad[0])
                cx = {
                    "h": float(h),
                    "x_low": x,
                    "x_high": x + 1,
                    "upper_set": list(range(j, Q.n_states)),
                    "mass_low": float(tails[x, j]),
                    "mass_high": float(tails[x + 1, j]),
                    "violated": "Q(x_high, h, B) >= Q(x_low, h, B)",
                }
                return Certificate("DPreserving", family, False, cx, interval, tuple(grid))
        return Certificate("DPreserving", family, True, None, interval, tuple(grid))
    if family.tag == "LinearCone":
        coords = _coords(Q)
        if coords.shape[1] != family.dim:
            raise UnsupportedFamily(f"cone of dimension {family.dim} on a {coords.shape[1]}-dimensional space")
        for h in grid:
            P = freeze(Q, h).P
            for k, g in enumerate(family.generators):
                v = P @ (coords @ g)
                slope, _, resid = _fits_affine(coords, v)
                if resid > AFFINE_TOL * max(1.0, float(np.abs(v).max())):
                    raise UnsupportedFamily(
                        f"kernel is not affine at h={h}: residual {resid:.3g} for generator {k}"
                    )
                if not family.contains(slope):
                    cx = {
                        "h": float(h),
                        "generator": g.tolist(),
                        "fitted": slope.tolist(),
                        "violated": "fitted coefficients of v lie in the cone",
                    }
                    return Certificate("DPreserving", family, False, cx, interval, tuple(grid))
        return Certificate("DPreserving", family, True, None, interval, tuple(grid))
    raise UnsupportedFamily(f"D-preserving certificate not available for {family.tag}")


def certify_d_decreasing(Q: NonlinearKernel, family: OrderFamily, h_grid=None) -> Certificate:
    """Every row is order-decreasing as the aggregator value increases."""
    grid = _grid(Q, h_grid)
    interval = Q.h_domain
    if family.tag == "SD":
        _require_line(Q)
        prev = None
        for h in grid:
            tails = np.array([upper_tails(r) for r in freeze(Q, h).P])
            if prev is not None:
                h0, t0 = prev
                bad = np.argwhere(tails - t0 > ORDER_TOL)
                if bad.size:
                    x, j = (int(v) for v in bad[0])
                    cx = {
                        "x": x,
                        "h_low": float(h0),
                        "h_high": float(h),
                        "upper_set": list(range(j, Q.n_states)),
                        "mass_at_h_low": float(t0[x, j]),
                        "mass_at_h_high": float(tails[x, j]),
                        "violated": "Q(x, h_low, B) >= Q(x, h_high, B)",
                    }
                    return Certificate("DDecreasing", family, False, cx, interval, tuple(grid))
            prev = (h, tails)
        return Certificate("DDecreasing", family, True, None, interval, tuple(grid))
    if family.tag == "LinearCone":
        coords = _coords(Q)
        if coords.shape[1] != family.dim:
            raise UnsupportedFamily(f"cone of dimension {family.dim} on a {coords.shape[1]}-dimensional space")
        fs = [coords @ g for g in family.generators]
        prev = None
        for h in grid:
            P = freeze(Q, h).P
            vs = [P @ f for f in fs]
            if prev is not None:
                h0, v0s = prev
                for k, (v0, v1) in enumerate(zip(v0s, vs)):
                    scale = max(1.0, float(np.abs(v0).max()))
                    bad = np.flatnonzero(v1 - v0 > ORDER_TOL * scale)
                    if bad.size:
                        x = int(bad[0])
                        cx = {
                            "x": x,
                            "h_low": float(h0),
                            "h_high": float(h),
                            "generator": family.generators[k].tolist(),
                            "value_at_h_low": float(v0[x]),
                            "value_at_h_high": float(v1[x]),
                            "violated": "E[f(X') | x, h_high] <= E[f(X') | x, h_low]",
                        }
                        return Certificate("DDecreasing", family, False, cx, interval, tuple(grid))
            prev = (h, vs)
        return Certificate("DDecreasing", family, True, None, interval, tuple(grid))
    raise UnsupportedFamily(f"D-decreasing certificate not available for {family.tag}")


def certify_h_monotone(
    H: Aggregator,
    family: OrderFamily,
    trials: int = 1000,
    seed: int = 0,
    n_states: Optional[int] = None,
    space=None,
) -> Certificate:
    """Aggregator increasing in the family's order.

    Linear aggregators are decided from their weights. Callback aggregators
    are probed with adjacent point masses and then ``trials`` random
    dominating pairs; a pass only means no counterexample was found.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if family.tag == "SD":
        if space is not None and space.is_product:
            raise UnsupportedFamily("SD aggregator certificate needs a one-dimensional space")
        if H.is_linear:
            bad = np.flatnonzero(np.diff(H.m) < -ORDER_TOL)
            if bad.size:
                x = int(bad[0])
                n = H.m.size
                cx = {
                    "p": point_mass(n, x + 1).probs.tolist(),
                    "q": point_mass(n, x).probs.tolist(),
                    "H_p": float(H.m[x + 1]),
                    "H_q": float(H.m[x]),
                    "violated": "H(p) >= H(q) for p >=_SD q",
                }
                return Certificate("HMonotone", family, False, cx)
            return Certificate("HMonotone", family, True)
        if n_states is None:
            raise ValueError("n_states is required to probe a callback aggregator")
        pairs = [(point_mass(n_states, x + 1), point_mass(n_states, x)) for x in range(n_states - 1)]
        pairs += [gen_comparable_pair(seed + k, n_states) for k in range(trials)]
        for p, q in pairs:
            hp, hq = H(p), H(q)
            if hp < hq - ORDER_TOL * max(1.0, abs(hq)):
                cx = {"p": p.probs.tolist(), "q": q.probs.tolist(), "H_p": hp, "H_q": hq,
                      "violated": "H(p) >= H(q) for p >=_SD q"}
                return Certificate("HMonotone", family, False, cx, sampled=True, trials=trials)
        return Certificate("HMonotone", family, True, sampled=True, trials=trials)
    if family.tag == "LinearCone":
        if not H.is_linear or space is None:
            raise UnsupportedFamily("cone aggregator certificate needs a linear aggregator and its state space")
        coords = space.points()
        slope, _, resid = _fits_affine(coords, H.m)
        if resid > AFFINE_TOL * max(1.0, float(np.abs(H.m).max())):
            raise UnsupportedFamily("aggregator weights are not affine in the state coordinates")
        if not family.contains(slope):
            cx = {"fitted": slope.tolist(), "violated": "aggregator coefficients lie in the cone"}
            return Certificate("HMonotone", family, False, cx)
        return Certificate("HMonotone", family, True)
    raise UnsupportedFamily(f"aggregator certificate not available for {family.tag}")


def certify_affine_cone(spec: AffineChainSpec) -> Certificate:
    """Closed-form check for the affine chain under the alternating orthant cone.

    A cone function ``f(x) = y.x + b`` is mapped to ``y'.x + b'`` with
    ``y'_i = a_i y_i``, so the cone is preserved iff every ``a_i >= 0``; the
    kernel is decreasing iff ``y_i beta_i >= 0`` for every generator ``y``,
    i.e. ``beta`` lies in the cone; the aggregator is increasing iff ``gamma``
    lies in the cone.
    """
    a, beta, gamma = (np.asarray(v) for v in (spec.a, spec.beta, spec.gamma))
    n = a.size
    family = OrderFamily.cone_o(n)
    violations = []
    for i in range(n):
        y = family.generators[i]
        yi = float(y[i])
        if a[i] < 0:
            violations.append({"condition": "a", "i": i, "y": y.tolist(), "y_prime_i": float(a[i] * yi),
                               "violated": "y'_i = a_i y_i keeps the sign of y_i"})
        if yi * beta[i] < 0:
            violations.append({"condition": "beta", "i": i, "y": y.tolist(), "product": float(yi * beta[i]),
                               "violated": "y_i beta_i >= 0"})
        if yi * gamma[i] < 0:
            violations.append({"condition": "gamma", "i": i, "y": y.tolist(), "product": float(yi * gamma[i]),
                               "violated": "y_i gamma_i >= 0"})
    cx = {"violations": violations} if violations else None
    return Certificate("AffineCone", family, not violations, cx)


def restrict(Q: NonlinearKernel, interval) -> NonlinearKernel:
    """Same kernel with its aggregator interval narrowed to ``interval``."""
    lo, hi = (float(v) for v in interval)
    if not lo <= hi:
        raise EmptyInterval(f"interval [{lo}, {hi}] is empty")
    qlo, qhi = Q.h_domain
    if lo < qlo - 1e-12 or hi > qhi + 1e-12:
        raise AggregatorOutOfDomain(f"[{lo}, {hi}] is not inside the kernel domain [{qlo}, {qhi}]")
    return dataclasses.replace(Q, h_domain=(max(lo, qlo), min(hi, qhi)))


def replay(cert: Certificate, Q: Optional[NonlinearKernel] = None, H: Optional[Aggregator] = None) -> bool:
    """Re-run a failed certificate's counterexample; True if the violation reproduces."""
    cx = cert.counterexample
    if cert.holds or cx is None:
        return False
    if cert.family.tag == "SD":
        if cert.name == "DPreserving":
            return not compare_fosd(row(Q, cx["x_high"], cx["h"]), row(Q, cx["x_low"], cx["h"])).ge
        if cert.name == "DDecreasing":
            return not compare_fosd(row(Q, cx["x"], cx["h_low"]), row(Q, cx["x"], cx["h_high"])).ge
        if cert.name == "HMonotone":
            p, q = make_dist(cx["p"]), make_dist(cx["q"])
            return compare_fosd(p, q).ge and H(p) < H(q)
    if cert.name == "AffineCone":
        return bool(cx["violations"])
    if cert.family.tag == "LinearCone" and cert.name == "DDecreasing":
        f = _coords(Q) @ np.asarray(cx["generator"])
        x = cx["x"]
        return float(row(Q, x, cx["h_high"]).probs @ f) > float(row(Q, x, cx["h_low"]).probs @ f)
    if cert.family.tag == "LinearCone" and cert.name == "DPreserving":
        coords = _coords(Q)
        v = freeze(Q, cx["h"]).P @ (coords @ np.asarray(cx["generator"]))
        slope, _, _ = _fits_affine(coords, v)
        return not cert.family.contains(slope)
    raise UnsupportedFamily(f"no replay for {cert.name}[{cert.family.tag}]")
