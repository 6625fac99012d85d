import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlmc import (
    OrderFamily,
    StateSpace,
    Verdict,
    certify_d_decreasing,
    certify_d_preserving,
    check_property_U,
    compare_fosd,
    find_equilibria,
    restrict,
    row,
)
from nlmc.apps import (
    Cor1System,
    DiscreteLaw,
    QueueSpec,
    build_ar_kernel,
    build_lindley_kernel,
    build_wealth_kernel,
    check_conditions,
    example1i_fixture,
    example1ii_fixture,
    example7_fixture,
    lindley_fixture,
    lindley_overflow,
    linear_fixture,
    mg1_equilibrium_rate,
    pk_wait,
    snap,
    solve_cor1,
    wealth_fixture,
)
from nlmc.apps.discretize import snap_checked
from nlmc.apps.queue import geometric_law
from nlmc.errors import BadMoments, ConditionFailed, GridOverflowExcess, InfeasiblePolicy, UnstableQueue

SD = OrderFamily.sd()


# queue closed forms

def test_mm1_rate():
    assert abs(mg1_equilibrium_rate(1.0, 2.0) - (math.sqrt(5) - 1) / 2) <= 1e-12


def test_deterministic_service_rate():
    lam = mg1_equilibrium_rate(1.0, 1.0)
    assert abs(lam - (math.sqrt(3) - 1)) <= 1e-12
    assert abs(1 / lam - lam * 1.0 / (2 * (1 - lam))) <= 1e-12


def test_bad_moments():
    with pytest.raises(BadMoments):
        mg1_equilibrium_rate(1.0, 0.9)
    with pytest.raises(BadMoments):
        mg1_equilibrium_rate(0.0, 1.0)


def test_pk_wait_values():
    assert pk_wait(0.5, 1.0, 2.0) == 1.0
    assert pk_wait(1e-12, 1.0, 2.0) < 1e-11
    with pytest.raises(UnstableQueue):
        pk_wait(1.0, 1.0, 2.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 100.0), st.floats(1.0, 50.0))
def test_rate_satisfies_fixed_point_identity(ES, ratio):
    ES2 = ES * ES * ratio
    lam = mg1_equilibrium_rate(ES, ES2)
    assert lam * ES < 1
    assert abs(1 / lam - pk_wait(lam, ES, ES2)) <= 1e-9 * max(1.0, 1 / lam)


# Lindley kernel

def _grid(n):
    return StateSpace.line(np.arange(n, dtype=float))


def test_lindley_rows_without_service_decrease_in_mean_wait():
    low, high = geometric_law(0.6, 5, offset=1), geometric_law(0.8, 5, offset=1)
    from nlmc.apps.queue import mixture_family

    spec = QueueSpec(DiscreteLaw.point(0.0), mixture_family(low, high, 19.0), _grid(20))
    Q, _ = build_lindley_kernel(spec)
    assert certify_d_decreasing(Q, SD).holds
    for x in (0, 5, 19):
        assert compare_fosd(row(Q, x, 0.0), row(Q, x, 19.0)).ge


def test_lindley_constant_arrivals_give_h_independent_kernel():
    spec = QueueSpec(geometric_law(0.5, 4), lambda m: geometric_law(0.6, 6, offset=1), _grid(30))
    Q, _ = build_lindley_kernel(spec)
    assert np.array_equal(row(Q, 3, 0.0).probs, row(Q, 3, 29.0).probs)
    assert certify_d_decreasing(Q, SD).holds


def test_lindley_fixture_certified_and_unique():
    spec = lindley_fixture()
    Q, H = build_lindley_kernel(spec)
    assert certify_d_preserving(Q, SD).holds
    assert certify_d_decreasing(Q, SD).holds
    rep = find_equilibria(Q, H, grid_step=0.098)
    assert rep.verdict is Verdict.UNIQUE_CERTIFIED and len(rep.equilibria) == 1
    e = rep.equilibria[0]
    assert lindley_overflow(Q, e.dist, e.h) <= 0.01


def test_lindley_overflow_budget():
    spec = QueueSpec(geometric_law(0.9, 8, offset=2), lambda m: DiscreteLaw.point(1.0), _grid(5))
    Q, _ = build_lindley_kernel(spec)
    with pytest.raises(GridOverflowExcess):
        lindley_overflow(Q, np.eye(5)[4], 0.0)


def test_queue_spec_validation():
    with pytest.raises(ValueError):
        QueueSpec(geometric_law(0.5, 4), lambda m: DiscreteLaw.point(5.0 - 0.1 * m), _grid(10))
    spec = QueueSpec(DiscreteLaw((1.0, 3.0), (0.5, 0.5)), lambda m: DiscreteLaw.point(4.0), _grid(10))
    assert spec.ES == 2.0 and spec.ES2 == 5.0


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 49.0))
def test_lindley_rows_increase_in_wait(m):
    Q, _ = build_lindley_kernel(lindley_fixture())
    assert certify_d_preserving(Q, SD, h_grid=[m]).holds


# nonlinear equations on the simplex

def test_cor1_fixture():
    sol = solve_cor1(linear_fixture())
    assert abs(sol.a - 5 / 12) <= 1e-9
    assert np.abs(sol.x - [7 / 12, 5 / 12]).max() <= 1e-9
    assert [c.holds for c in sol.conditions] == [True, True, True]


def test_cor1_constant_family():
    P = np.array([[0.7, 0.3], [0.4, 0.6]])
    sys = Cor1System(lambda a: P, lambda x: float(x[1]), (0.0, 1.0), 2)
    sol = solve_cor1(sys)
    pi = np.array([4 / 7, 3 / 7])
    assert np.abs(sol.x - pi).max() <= 1e-12


def test_cor1_condition_ii_violation():
    def P(a):
        return np.array([[0.6 - 0.4 * a, 0.4 + 0.4 * a], [0.4 - 0.3 * a, 0.6 + 0.3 * a]])

    sys = Cor1System(P, lambda x: float(x[1]), (0.0, 1.0), 2)
    with pytest.raises(ConditionFailed) as exc:
        solve_cor1(sys)
    assert exc.value.condition == "ii"
    w = exc.value.witness
    assert w["a_low"] < w["a_high"] and w["P_at_a_high"][1] > w["P_at_a_low"][1]


def test_cor1_condition_i_and_iii_violations():
    swap = Cor1System(lambda a: np.array([[0.2, 0.8], [0.6, 0.4]]), lambda x: float(x[1]), (0.0, 1.0), 2)
    with pytest.raises(ConditionFailed) as exc:
        check_conditions(swap)
    assert exc.value.condition == "i"
    eye = Cor1System(lambda a: np.eye(2), lambda x: float(x[1]), (0.0, 1.0), 2)
    with pytest.raises(ConditionFailed) as exc:
        check_conditions(eye)
    assert exc.value.condition == "iii"


# autoregressive and affine chains

def test_ar_linear_drift_certified():
    Q, H = example1i_fixture()
    assert certify_d_preserving(Q, SD).holds
    assert certify_d_decreasing(Q, SD).holds
    rep = find_equilibria(Q, H)
    assert rep.verdict is Verdict.UNIQUE_CERTIFIED


def test_ar_logistic_drift_local_certificate():
    Q, H = example7_fixture(c=1.0)
    assert not certify_d_decreasing(Q, SD).holds
    Ql = restrict(Q, (0.5, Q.h_domain[1]))
    assert certify_d_decreasing(Ql, SD).holds
    assert len(find_equilibria(Ql, H).equilibria) <= 1


def test_ar_without_memory_or_noise_is_a_snapped_point_mass():
    grid = StateSpace.line(np.linspace(-2.0, 2.0, 9))
    Q, _ = build_ar_kernel(0.0, "linear", DiscreteLaw.point(0.0), np.linspace(0, 1, 9), grid, h_domain=(0.0, 1.0))
    r = row(Q, 7, 0.25).probs
    assert r[3] == 0.5 and r[4] == 0.5
    assert abs(r @ grid.values + 0.25) <= 1e-15


def test_ar_parameter_validation():
    grid = StateSpace.line(np.linspace(-2.0, 2.0, 9))
    with pytest.raises(ValueError):
        build_ar_kernel(1.0, "linear", DiscreteLaw.point(0.0), np.zeros(9), grid)
    with pytest.raises(ValueError):
        build_ar_kernel(0.5, "logistic", DiscreteLaw.point(0.0), np.zeros(9), grid)
    with pytest.raises(ValueError):
        build_ar_kernel(0.5, "linear", DiscreteLaw.point(0.0), -np.arange(9.0), grid)


def test_ar_grid_overflow():
    grid = StateSpace.line(np.linspace(-1.0, 1.0, 5))
    Q, _ = build_ar_kernel(0.5, "linear", DiscreteLaw((-3.0, 3.0), (0.5, 0.5)), np.linspace(0, 1, 5), grid)
    with pytest.raises(GridOverflowExcess):
        row(Q, 0, 0.5)


def test_affine_chain_product_rows():
    Q, H = example1ii_fixture()
    assert Q.n_states == 17 * 17
    r = row(Q, 17 * 8 + 8, 0.0).probs
    coords = Q.space.points()
    assert np.allclose(r @ coords, [0.0, 0.0], atol=1e-12)


# wealth

def test_wealth_fixture_certified():
    Q, H = wealth_fixture()
    assert certify_d_preserving(Q, SD).holds
    assert certify_d_decreasing(Q, SD).holds
    rep = find_equilibria(Q, H)
    assert len(rep.equilibria) <= 1 and rep.verdict is Verdict.UNIQUE_CERTIFIED


def test_wealth_absorbing_zero():
    grid = StateSpace.line(np.linspace(0.0, 4.0, 9))
    Q, H = build_wealth_kernel([lambda x: 0.0], [lambda h: DiscreteLaw.point(1.0)], DiscreteLaw.point(0.0), grid)
    assert check_property_U(Q).holds
    rep = find_equilibria(Q, H)
    (e,) = rep.equilibria
    assert e.dist.probs[0] == 1.0


def test_wealth_savings_rising_with_h_breaks_decreasing_certificate():
    grid = StateSpace.line(np.linspace(0.0, 8.0, 33))
    income = DiscreteLaw((0.5, 1.0, 1.5), (1 / 3, 1 / 3, 1 / 3))
    Q, _ = build_wealth_kernel(
        [lambda x, h: x * (0.2 + 0.05 * h)],
        [lambda h: DiscreteLaw.point(1.0)],
        income,
        grid,
        aggregator="wealth",
        policy_depends_on_h=True,
    )
    cert = certify_d_decreasing(Q, SD)
    assert not cert.holds
    assert cert.counterexample["mass_at_h_high"] > cert.counterexample["mass_at_h_low"]


def test_wealth_validation():
    grid = StateSpace.line(np.linspace(0.0, 4.0, 9))
    with pytest.raises(InfeasiblePolicy):
        build_wealth_kernel([lambda x: 2 * x + 1], [lambda h: DiscreteLaw.point(1.0)], DiscreteLaw.point(0.0), grid)
    with pytest.raises(ValueError):
        build_wealth_kernel([lambda x: 0.5 * x], [lambda h: DiscreteLaw.point(1.0 + 0.1 * h)],
                            DiscreteLaw.point(0.0), grid)
    with pytest.raises(ValueError):
        build_wealth_kernel([lambda x, h: 0.5 * x], [lambda h: DiscreteLaw.point(1.0)], DiscreteLaw.point(0.0),
                            grid, aggregator="savings", policy_depends_on_h=True)


# discretization

@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-3.0, 3.0), min_size=1, max_size=8), st.integers(0, 10**6))
def test_snap_preserves_mass_and_mean_inside_grid(vals, seed):
    grid = np.linspace(-3.0, 3.0, 13)
    p = np.random.default_rng(seed).dirichlet(np.ones(len(vals)))
    out, lumped = snap(grid, vals, p)
    assert lumped == 0.0
    assert abs(out.sum() - 1.0) <= 1e-12
    assert abs(out @ grid - p @ np.asarray(vals)) <= 1e-12


def test_snap_counts_overflow():
    out, lumped = snap(np.array([0.0, 1.0]), [2.0, 0.5], [0.25, 0.75])
    assert lumped == 0.25 and np.allclose(out, [0.375, 0.625])
    with pytest.raises(GridOverflowExcess):
        snap_checked(np.array([0.0, 1.0]), [2.0, 0.5], [0.25, 0.75])


def test_builders_emit_valid_rows():
    rng = np.random.default_rng(0)
    for build in (example1i_fixture, wealth_fixture, lambda: build_lindley_kernel(lindley_fixture())):
        Q, _ = build()
        lo, hi = Q.h_domain
        for _ in range(200):
            x = int(rng.integers(Q.n_states))
            r = row(Q, x, rng.uniform(lo, hi)).probs
            assert r.min() >= 0.0 and abs(r.sum() - 1.0) <= 1e-9
