"""Forward iteration of the distribution flow, cycle detection, Cesaro averages."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Aggregator, Dist, NonlinearKernel, eval_aggregator, make_dist
from .errors import AggregatorOutOfDomain
from .kernel_ops import apply_M


@dataclass(frozen=True)
class Trajectory:
    dists: tuple
    aggregator_path: tuple

    def __len__(self) -> int:
        return len(self.dists)

    def matrix(self) -> np.ndarray:
        return np.array([d.probs for d in self.dists])


def iterate(Q: NonlinearKernel, H: Aggregator, mu0, steps: int) -> Trajectory:
    """``steps`` applications of ``T`` starting from ``mu0`` (``steps + 1`` laws)."""
    if steps < 1:
        raise ValueError("steps must be at least 1")
    mu = make_dist(mu0)
    dists, path = [mu], []
    for t in range(steps + 1):
        h = eval_aggregator(H, mu)
        path.append(h)
        if t == steps:
            break
        try:
            mu = apply_M(Q, h, mu)
        except AggregatorOutOfDomain as exc:
            raise AggregatorOutOfDomain(f"step {t}: {exc}", h=h, step=t) from None
        dists.append(mu)
    return Trajectory(tuple(dists), tuple(path))


def detect_cycle(traj: Trajectory, tol: float = 1e-8) -> Optional[tuple]:
    """Smallest period ``p`` and earliest onset ``t`` of a cycle sustained to the end.

    Requires ``||mu_{s+p} - mu_s||_1 <= tol`` for every ``s >= t``. Period 1
    means the flow settled on a fixed point. Returns ``None`` if no period
    fits.
    """
    X = traj.matrix()
    L = X.shape[0]
    if L < 3:
        raise ValueError("cycle detection needs at least three laws")
    for p in range(1, L):
        d = np.abs(X[p:] - X[:-p]).sum(axis=1)
        fails = np.flatnonzero(d > tol)
        onset = int(fails[-1]) + 1 if fails.size else 0
        if onset < d.size:
            return p, onset
    return None


def cesaro(traj: Trajectory) -> Dist:
    """Arithmetic mean of every law in the trajectory, the initial one included."""
    if not traj.dists:
        raise ValueError("empty trajectory")
    return make_dist(traj.matrix().mean(axis=0))


def trajectory_csv(traj: Trajectory, fh=None) -> str:
    """Write ``t, p_0..p_{n-1}, H`` rows at 17 significant digits; returns the text."""
    out = io.StringIO() if fh is None else fh
    w = csv.writer(out, lineterminator="\n")
    n = len(traj.dists[0])
    w.writerow(["t"] + [f"p{j}" for j in range(n)] + ["H"])
    for t, (d, h) in enumerate(zip(traj.dists, traj.aggregator_path)):
        w.writerow([t] + [f"{v:.17g}" for v in d.probs] + [f"{h:.17g}"])
    return out.getvalue() if fh is None else ""
