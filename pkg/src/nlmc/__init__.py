"""Nonlinear Markov chains whose kernel depends on the current law through a scalar aggregator.

The package certifies monotonicity hypotheses that guarantee a unique
invariant distribution, finds every invariant distribution through the
scalar self-consistency equation ``h = H(stationary(P(h)))``, iterates the
distribution flow, and ships queueing, nonlinear-equation and wealth
applications.
"""
from .certify import (
    AffineChainSpec,
    Certificate,
    certify_affine_cone,
    certify_d_decreasing,
    certify_d_preserving,
    certify_h_monotone,
    replay,
    restrict,
)
from .core import (
    Aggregator,
    Dist,
    NonlinearKernel,
    OrderFamily,
    StateSpace,
    eval_aggregator,
    make_dist,
    point_mass,
    uniform,
)
from .dynamics import Trajectory, cesaro, detect_cycle, iterate, trajectory_csv
from .errors import *  # noqa: F401,F403
from .kernel_ops import (
    LinearChain,
    PropertyReport,
    apply_M,
    apply_T,
    check_property_C,
    check_property_U,
    freeze,
    row,
    stationary_of_M,
)
from .orders import (
    OrderResult,
    compare_cx,
    compare_fosd,
    compare_icx,
    compare_majorization,
    gen_comparable_pair,
    sd_inf,
    sd_sup,
)
from .solve import Equilibrium, EquilibriumReport, Verdict, find_equilibria, self_consistency, verify_invariant

__version__ = "0.1.0"
