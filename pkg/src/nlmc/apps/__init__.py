"""Applications: strategic queues, nonlinear equations on the simplex, AR and wealth chains."""
from .chains import (
    build_affine_kernel,
    build_ar_kernel,
    build_wealth_kernel,
    example1i_fixture,
    example1ii_fixture,
    example1ii_spec,
    example7_fixture,
    wealth_fixture,
)
from .discretize import DiscreteLaw, snap
from .nleq import Cor1Solution, Cor1System, check_conditions, linear_fixture, solve_cor1
from .queue import (
    QueueSpec,
    build_lindley_kernel,
    lindley_fixture,
    lindley_overflow,
    mg1_equilibrium_rate,
    pk_wait,
)
