import math

import numpy as np
import pytest
from scipy.integrate import quad

from supercrit import profiles, recurrence
from supercrit.errors import DomainError


@pytest.fixture(params=[1.0, 1.5])
def table(request):
    return recurrence.build_table(request.param, 10)


def test_first_profile_closed_form():
    prof = profiles.profile_from_table(recurrence.build_table(1.5, 1), 1)
    # a = 2: b = (sqrt 2 / 2)^2 = 1/2, so z_1 = log(4 / (1 + r^2/2)^2)
    assert prof.b == pytest.approx(0.5)
    for r in (0.0, 0.3, 1.0, 7.0):
        assert profiles.z(prof, r) == pytest.approx(math.log(4.0 / (1 + r * r / 2) ** 2))


def test_quadrature_mass_matches_closed_form(table):
    for k in range(1, 11):
        prof = profiles.profile_from_table(table, k)
        for R in (0.1, 1.0, 10.0):
            fn = lambda x: profiles.r2_exp_z(prof, math.exp(x))
            m = quad(fn, -200.0, math.log(R), epsrel=1e-13, epsabs=0, limit=400)[0]
            assert m == pytest.approx(profiles.mass(prof, R), rel=1e-9)
        assert profiles.mass(prof, np.inf) == pytest.approx(2.0 * prof.a)


def test_ode_residual_small(table):
    r = np.geomspace(1e-8, 1e8, 300)
    for k in range(1, 11):
        prof = profiles.profile_from_table(table, k)
        assert np.max(np.abs(profiles.ode_residual(prof, r)) * r ** 2) < 1e-12


def test_derivatives_by_finite_difference(table):
    prof = profiles.profile_from_table(table, 4)
    for r in (0.05, 0.7, 3.0):
        h = 1e-5 * r
        fd1 = (profiles.z(prof, r + h) - profiles.z(prof, r - h)) / (2 * h)
        fd2 = (profiles.z_prime(prof, r + h) - profiles.z_prime(prof, r - h)) / (2 * h)
        assert profiles.z_prime(prof, r) == pytest.approx(fd1, rel=1e-8)
        assert profiles.z_double_prime(prof, r) == pytest.approx(fd2, rel=1e-7)


def test_flux_identity(table):
    # r z'(r) = -(2 - a) - 2 a sigma, so r z' -> -(2 + a) far out and mass -> 2a
    prof = profiles.profile_from_table(table, 3)
    r = 1e12
    assert r * profiles.z_prime(prof, r) == pytest.approx(-(2.0 + prof.a), rel=1e-6)


def test_peak(table):
    for k in (1, 2, 5):
        prof = profiles.profile_from_table(table, k)
        loc, val = profiles.peak(prof)
        assert loc == pytest.approx(prof.a / math.sqrt(2.0))
        assert profiles.r2_exp_z(prof, loc) == pytest.approx(val, rel=1e-14)
        assert profiles.z(prof, loc) == pytest.approx(-math.log(loc ** 2) + math.log(val), abs=1e-13)


def test_sample_profile_columns():
    prof = profiles.profile_from_table(recurrence.build_table(1.5, 3), 2)
    d = profiles.sample_profile(prof, 1e-3, 1e3, 7)
    assert set(d) == {"r", "z", "z_prime", "r2_exp_z", "mass"}
    assert np.all(np.diff(d["mass"]) > 0)
    with pytest.raises(DomainError):
        profiles.sample_profile(prof, 1.0, 0.5, 7)


def test_singular_at_origin_for_k_above_one():
    prof = profiles.profile_from_table(recurrence.build_table(1.5, 3), 2)
    with pytest.raises(DomainError):
        profiles.z(prof, 0.0)
    with pytest.raises(DomainError):
        profiles.LimitProfile(1, 2.5)
