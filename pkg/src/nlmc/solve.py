"""Invariant distributions of the nonlinear operator through a scalar equation.

For each admissible aggregator value ``h`` the frozen chain has a stationary
law ``mu_h``; ``phi(h) = H(mu_h)``. Invariant laws of ``T`` are exactly the
``mu_h`` with ``phi(h) = h``, so finding all of them reduces to finding all
roots of ``phi(h) - h`` on the aggregator interval.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .certify import Certificate, certify_d_decreasing, certify_d_preserving, certify_h_monotone
from .core import Aggregator, Dist, NonlinearKernel, OrderFamily, eval_aggregator
from .errors import CertificationInconsistency, MultipleStationary, UnsupportedFamily
from .kernel_ops import apply_T, check_property_U, stationary_of_M

PHI_MONOTONE_TOL = 1e-9


class Verdict(Enum):
    UNIQUE_CERTIFIED = "UniqueCertified"
    MULTIPLE_FOUND = "MultipleFound"
    NONE_FOUND = "NoneFound"
    UNCERTIFIED_UNIQUE = "UncertifiedUnique"


@dataclass(frozen=True)
class Equilibrium:
    h: float
    dist: Dist
    residual: float
    dist_aggregate: float = float("nan")

    @property
    def aggregator_gap(self) -> float:
        return abs(self.dist_aggregate - self.h)


@dataclass
class EquilibriumReport:
    certificates: list
    equilibria: list
    phi_samples: list
    verdict: Verdict
    excluded: list = field(default_factory=list)
    rejected: list = field(default_factory=list)
    property_u_holds: Optional[bool] = None

    @property
    def certified(self) -> bool:
        return (
            len(self.certificates) == 3
            and all(c.holds for c in self.certificates)
            and bool(self.property_u_holds)
        )


def self_consistency(Q: NonlinearKernel, H: Aggregator, h: float) -> float:
    """``phi(h)``: the aggregator of the stationary law of the chain frozen at ``h``."""
    return eval_aggregator(H, stationary_of_M(Q, h))


def verify_invariant(Q: NonlinearKernel, H: Aggregator, mu, tol: Optional[float] = None) -> float:
    """L1 distance between ``T mu`` and ``mu``; compare against ``tol`` yourself."""
    p = np.asarray(mu.probs if isinstance(mu, Dist) else mu, dtype=float)
    return float(np.abs(apply_T(Q, H, p).probs - p).sum())


def _gap(Q, H, h):
    try:
        return self_consistency(Q, H, h) - h
    except MultipleStationary:
        return math.nan


def _bisect(Q, H, lo, hi, glo, tol, max_iter=200):
    """Bisection on a bracket with ``g(lo)`` and ``g(hi)`` of opposite signs.

    Stops once the bracket is narrower than ``tol`` and ``|g|`` at the
    returned point is below ``tol / 10``, or when the bracket cannot shrink.
    """
    best_h, best_g = lo, glo
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        gm = _gap(Q, H, mid)
        if math.isnan(gm):
            break
        if abs(gm) < abs(best_g) or hi - lo <= tol:
            best_h, best_g = mid, gm
        if gm == 0.0:
            return mid, gm
        if (gm > 0) == (glo > 0):
            lo, glo = mid, gm
        else:
            hi = mid
        if hi - lo <= tol and abs(best_g) <= tol / 10:
            break
    return best_h, best_g


def _certificates(Q, H, family, cert_grid, seed):
    try:
        certs = [
            certify_d_preserving(Q, family, cert_grid),
            certify_d_decreasing(Q, family, cert_grid),
            certify_h_monotone(H, family, seed=seed, n_states=Q.n_states, space=Q.space),
        ]
    except UnsupportedFamily:
        return []
    return certs


def find_equilibria(
    Q: NonlinearKernel,
    H: Aggregator,
    grid_step: Optional[float] = None,
    tol: float = 1e-10,
    family: Optional[OrderFamily] = None,
    cert_grid=None,
    seed: int = 0,
    certify: bool = True,
) -> EquilibriumReport:
    """All roots of ``phi(h) = h`` on the kernel's aggregator interval.

    The interval is scanned at ``grid_step`` (default: 1/1000 of its
    length). Roots are sample points with ``|phi(h) - h| <= tol`` (this
    catches fixed points on the interval ends), sign changes refined by
    bisection, and tangential roots found by minimizing ``|phi(h) - h|``
    around local minima below ``sqrt(tol)``. Samples where the frozen chain
    has several stationary laws are skipped and listed in ``excluded``.

    When the three monotonicity certificates and Property (U) all hold on
    the certificate grid, ``phi`` must be nonincreasing and there is at most
    one root; anything else raises :class:`CertificationInconsistency`.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    lo, hi = Q.h_domain
    if grid_step is None:
        grid_step = (hi - lo) / 1000 if hi > lo else 1.0
    if grid_step <= 0:
        raise ValueError("grid_step must be positive")
    family = family or OrderFamily.sd()

    certs, u_holds = [], None
    if certify:
        certs = _certificates(Q, H, family, cert_grid, seed)
        u_holds = check_property_U(Q, cert_grid).holds

    n = max(1, int(math.ceil((hi - lo) / grid_step - 1e-9))) if hi > lo else 0
    hs = np.linspace(lo, hi, n + 1) if n else np.array([lo])
    phis = np.full(hs.size, math.nan)
    excluded = []
    for i, h in enumerate(hs):
        try:
            phis[i] = self_consistency(Q, H, h)
        except MultipleStationary as exc:
            excluded.append((float(h), str(exc)))
    g = phis - hs
    ok = ~np.isnan(g)
    samples = [(float(h), float(p)) for h, p, k in zip(hs, phis, ok) if k]

    roots = []
    zero = ok & (np.abs(g) <= tol)
    roots += [(float(hs[i]), float(g[i])) for i in np.flatnonzero(zero)]
    for i in range(hs.size - 1):
        if ok[i] and ok[i + 1] and not zero[i] and not zero[i + 1] and g[i] * g[i + 1] < 0:
            roots.append(_bisect(Q, H, hs[i], hs[i + 1], g[i], tol))
    sq = math.sqrt(tol)
    for i in range(1, hs.size - 1):
        if not (ok[i - 1] and ok[i] and ok[i + 1]) or zero[i - 1] or zero[i] or zero[i + 1]:
            continue
        a = abs(g[i])
        if a < sq and a <= abs(g[i - 1]) and a <= abs(g[i + 1]) and g[i - 1] * g[i] > 0 and g[i] * g[i + 1] > 0:
            res = minimize_scalar(
                lambda h: abs(_gap(Q, H, h)),
                bounds=(hs[i - 1], hs[i + 1]),
                method="bounded",
                options={"xatol": tol / 10},
            )
            gm = _gap(Q, H, res.x)
            if not math.isnan(gm) and abs(gm) <= tol:
                roots.append((float(res.x), gm))

    roots.sort()
    merged = []
    for h, gv in roots:
        if merged and abs(h - merged[-1][0]) <= 10 * tol:
            if abs(gv) < abs(merged[-1][1]):
                merged[-1] = (h, gv)
            continue
        merged.append((h, gv))

    equilibria, rejected = [], []
    for h, gv in merged:
        mu = stationary_of_M(Q, h)
        res = verify_invariant(Q, H, mu)
        agg = eval_aggregator(H, mu)
        if res <= tol and abs(agg - h) <= tol:
            equilibria.append(Equilibrium(float(h), mu, res, agg))
        else:
            rejected.append((float(h), f"residual {res:.3g}, aggregator gap {abs(agg - h):.3g}"))

    certified = len(certs) == 3 and all(c.holds for c in certs) and bool(u_holds)
    if certified:
        ph = [p for _, p in samples]
        bad = [k for k in range(len(ph) - 1) if ph[k + 1] > ph[k] + PHI_MONOTONE_TOL]
        if bad:
            k = bad[0]
            raise CertificationInconsistency(
                f"phi increases from {ph[k]!r} to {ph[k + 1]!r} at h={samples[k][0]!r} under certified hypotheses"
            )
        if len(equilibria) > 1:
            raise CertificationInconsistency(
                f"{len(equilibria)} equilibria at h={[e.h for e in equilibria]} under certified hypotheses"
            )
        verdict = Verdict.UNIQUE_CERTIFIED if equilibria else Verdict.NONE_FOUND
    elif len(equilibria) > 1:
        verdict = Verdict.MULTIPLE_FOUND
    elif equilibria:
        verdict = Verdict.UNCERTIFIED_UNIQUE
    else:
        verdict = Verdict.NONE_FOUND

    return EquilibriumReport(certs, equilibria, samples, verdict, excluded, rejected, u_holds)
