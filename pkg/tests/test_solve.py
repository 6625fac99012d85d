import numpy as np
import pytest

from nlmc import (
    Aggregator,
    OrderFamily,
    Verdict,
    find_equilibria,
    make_dist,
    point_mass,
    self_consistency,
    stationary_of_M,
    verify_invariant,
)
from nlmc.catalog import constant_kernel, example2, example3, example4, example5, identity_kernel, table_kernel
from nlmc.errors import CertificationInconsistency


def test_self_consistency_examples():
    Q4, H4 = example4()
    for h in np.linspace(0, 1, 11):
        assert abs(self_consistency(Q4, H4, h) - (1 - h)) <= 1e-14
    Q2, H2 = example2()
    assert abs(self_consistency(Q2, H2, 0.5) - 0.5) <= 1e-15
    P = [[0.6, 0.4], [0.1, 0.9]]
    Q = constant_kernel(P)
    vals = {self_consistency(Q, Aggregator.linear([0, 1]), h) for h in (0.0, 0.3, 1.0)}
    assert len(vals) == 1


def test_verify_invariant_examples():
    Q3, H3 = example3()
    assert verify_invariant(Q3, H3, point_mass(3, 1)) == 0.0
    Q5, H5 = example5()
    assert verify_invariant(Q5, H5, make_dist((0.5, 0.5))) > 1e-3
    Q4, H4 = example4()
    assert verify_invariant(Q4, H4, make_dist((0.5, 0.5))) == 0.0


def test_example2_two_equilibria():
    Q, H = example2()
    rep = find_equilibria(Q, H)
    assert rep.verdict is Verdict.MULTIPLE_FOUND
    got = sorted((e.h, tuple(e.dist.probs)) for e in rep.equilibria)
    assert len(got) == 2
    assert got[0][0] == 0.0 and np.abs(np.subtract(got[0][1], (1, 0))).sum() <= 1e-8
    assert abs(got[1][0] - 0.5) <= 1e-10 and np.abs(np.subtract(got[1][1], (0.5, 0.5))).sum() <= 1e-8


def test_example3_two_equilibria():
    Q, H = example3()
    rep = find_equilibria(Q, H)
    assert len(rep.equilibria) == 2
    a, b = sorted(rep.equilibria, key=lambda e: e.h)
    assert abs(a.h - 2 / 3) <= 1e-9 and np.abs(a.dist.probs - 1 / 3).sum() <= 1e-8
    assert b.h == 1.0 and np.abs(b.dist.probs - [0, 1, 0]).sum() <= 1e-8


def test_example4_unique_certified():
    Q, H = example4()
    rep = find_equilibria(Q, H)
    assert rep.verdict is Verdict.UNIQUE_CERTIFIED and rep.certified
    (e,) = rep.equilibria
    assert np.abs(e.dist.probs - 0.5).sum() <= 1e-10


def test_every_equilibrium_meets_tolerances():
    for fixture in (example2, example3, example4, example5):
        Q, H = fixture()
        tol = 1e-10
        for e in find_equilibria(Q, H, tol=tol).equilibria:
            assert verify_invariant(Q, H, e.dist) <= tol
            assert abs(H(e.dist) - e.h) <= tol


def test_tangential_root_found():
    # phi(h) = h + (h - 0.5)^2 * 0.4 touches the diagonal at 0.5 without crossing
    def P(h):
        top = h + 0.4 * (h - 0.5) ** 2
        return np.array([[1 - top, top], [1 - top, top]])

    from nlmc import NonlinearKernel

    Q = NonlinearKernel(2, lambda x, h: P(h)[x], (0.1, 0.9), matrix_fn=P)
    rep = find_equilibria(Q, Aggregator.linear([0, 1]), certify=False, tol=1e-10)
    assert len(rep.equilibria) == 1
    assert abs(rep.equilibria[0].h - 0.5) <= 1e-4


def test_samples_without_unique_stationary_law_are_excluded():
    I = np.eye(2)
    A = np.array([[0.5, 0.5], [0.5, 0.5]])
    Q = table_kernel([0.0, 0.5, 1.0], [A, I, A])
    rep = find_equilibria(Q, Aggregator.linear([0, 1]), grid_step=0.1, certify=False)
    assert [h for h, _ in rep.excluded] == [0.5]
    assert all(h != 0.5 for h, _ in rep.phi_samples)


def test_no_root_on_interval():
    Q = constant_kernel([[0.5, 0.5], [0.5, 0.5]], h_domain=(0.7, 1.0))
    rep = find_equilibria(Q, Aggregator.linear([0, 1]))
    assert rep.verdict is Verdict.NONE_FOUND and rep.equilibria == []


def test_certified_kernel_with_increasing_phi_is_inconsistent():
    # certificates pass on a coarse grid that misses a bump in between
    def P(h):
        bump = 0.3 * max(0.0, 1 - abs(h - 0.55) / 0.02)
        top = 0.8 - 0.5 * h + bump
        return np.array([[1 - top, top], [1 - top, top]])

    from nlmc import NonlinearKernel

    Q = NonlinearKernel(2, lambda x, h: P(h)[x], (0.0, 1.0), matrix_fn=P)
    with pytest.raises(CertificationInconsistency):
        find_equilibria(Q, Aggregator.linear([0, 1]), cert_grid=np.linspace(0, 1, 11))


def test_invalid_parameters():
    Q, H = example4()
    with pytest.raises(ValueError):
        find_equilibria(Q, H, tol=0.0)
    with pytest.raises(ValueError):
        find_equilibria(Q, H, grid_step=-1.0)


def test_report_is_deterministic():
    Q, H = example3()
    a, b = find_equilibria(Q, H), find_equilibria(Q, H)
    assert a.phi_samples == b.phi_samples
    assert [e.h for e in a.equilibria] == [e.h for e in b.equilibria]
