import math

import pytest
from hypothesis import given, settings, strategies as st

from supercrit import recurrence
from supercrit.errors import DomainError


def test_first_row_is_the_regular_bubble():
    for q in (1.0, 1.5):
        r = recurrence.build_table(q, 1).row(1)
        assert (r.a, r.delta, r.eta) == (2.0, 1.0, 1.0)


def test_q_three_halves_closed_form():
    # p = 3: A e = 1 - (1-e)^3 with A = 3/2 gives e^2 - 3e + 3/2 = 0
    r = recurrence.build_table(1.5, 2).row(2)
    e = (3.0 - math.sqrt(3.0)) / 2.0
    assert r.delta == pytest.approx(1.0 - e, abs=1e-15)
    assert r.a == pytest.approx(2.0 * math.sqrt(3.0) - 2.0, abs=1e-15)
    assert r.eta == pytest.approx(r.delta ** 3, rel=1e-14)


def test_q_one_second_height():
    eta2 = recurrence.build_table(1.0, 2).row(2).eta
    assert abs(0.5 * math.log(1.0 / eta2) - 1.0 + eta2) < 1e-15
    # a_2 = 2 - 4 eta_2
    assert recurrence.build_table(1.0, 2).row(2).a == pytest.approx(2.0 - 4.0 * eta2)


def test_conjugate():
    assert recurrence.conjugate(1.5) == pytest.approx(3.0)
    assert recurrence.conjugate(1.0) == math.inf


@pytest.mark.parametrize("q", [1.0, 1.1, 1.25, 1.5, 1.75, 1.9])
def test_verify_table(q):
    tab = recurrence.build_table(q, 60)
    rep = recurrence.verify_table(tab)
    assert rep.ok
    assert rep.identity_residual.max() < 1e-10
    # partial sums of a_k grow without bound (roughly like log k or faster)
    assert rep.partial_sums[-1] > rep.partial_sums[9] + 1.0


def test_alpha_star_limits():
    assert recurrence.build_table(1.5, 1).row(1).alpha_star == 1.0
    assert recurrence.build_table(1.0, 1).row(1).alpha_star == pytest.approx(4.0 / math.e, abs=1e-15)


def test_alpha_domain():
    tab = recurrence.build_table(1.5, 3)
    with pytest.raises(DomainError):
        recurrence.alpha(tab, 1, 2.0)
    with pytest.raises(DomainError):
        recurrence.alpha(tab, 3, 0.5)


@pytest.mark.parametrize("q", [0.9, 2.0, float("nan")])
def test_bad_q(q):
    with pytest.raises(DomainError):
        recurrence.build_table(q, 3)


def test_columns_and_records():
    tab = recurrence.build_table(1.25, 5)
    assert len(tab) == 5
    assert list(tab.column("k")) == [1, 2, 3, 4, 5]
    assert tab.as_records()[2]["k"] == 3


@settings(max_examples=30, deadline=None)
@given(q=st.floats(1.0, 1.95), k=st.integers(2, 30))
def test_alpha_is_two_at_ends_and_min_inside(q, k):
    tab = recurrence.build_table(q, k + 1)
    row, nxt = tab.row(k), tab.row(k + 1)
    lo, hi = (nxt.eta, row.eta) if tab.exp_branch else (nxt.delta, row.delta)
    xs = row.eta_star if tab.exp_branch else row.delta_star
    assert recurrence.alpha(tab, k, hi) == pytest.approx(2.0, abs=1e-13)
    assert recurrence.alpha(tab, k, lo) == pytest.approx(2.0, abs=1e-11)
    assert lo < xs < hi
    assert row.alpha_star < 2.0
    # the closed-form minimiser beats its neighbours
    for f in (0.999, 1.001):
        assert recurrence.alpha(tab, k, xs) <= recurrence.alpha(tab, k, xs * f) + 1e-15


@settings(max_examples=30, deadline=None)
@given(q=st.floats(1.0, 1.95))
def test_a_strictly_decreasing(q):
    a = recurrence.build_table(q, 25).column("a")
    assert all(x > y > 0 for x, y in zip(a, a[1:]))
