import math
import time

import mpmath as mp
import numpy as np
import pytest

from supercrit import growth, singular
from supercrit.errors import DomainError, MatchingError

mp.mp.dps = 50


def mp_F(expr, t):
    """F(t) = e^{-g(t)} int_0^inf e^{-(g(t+y) - g(t))} dy, breakpoints on the 1/g' scale."""
    t = mp.mpf(t)
    g0 = expr(t)
    sc = 1 / max(mp.diff(expr, t), mp.mpf(1) / 100)
    pts = [0] + [sc * 2 ** k for k in range(-2, 12) if sc * 2 ** k < 8] + [8]
    return mp.exp(-g0) * mp.quad(lambda y: mp.exp(-(expr(t + y) - g0)), pts)


def mp_B(expr, t):
    """(1/B1, 1/B2) straight from F, f, f', f'' at 50 digits."""
    t = mp.mpf(t)
    g = expr(t)
    g1 = mp.diff(expr, t, 1)
    g2 = mp.diff(expr, t, 2)
    F = mp_F(expr, t)
    f = mp.exp(g)
    fp = f * g1
    fpp = f * (g1 ** 2 + g2)
    I = fp * F
    mlogF = -mp.log(F)
    return float(mlogF * (1 - I)), float(I * mlogF ** 2 * (f * fpp * F / fp - 1))


def test_log_F_gelfand_exact(gelfand):
    for t in (0.0, 1.0, 30.0, 700.0, 1e5):
        assert singular.big_F(gelfand, t) == pytest.approx(-t, abs=1e-13)


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0, 5.0, 20.0])
def test_log_F_power_against_mpmath(p3, t):
    ref = float(mp.log(mp_F(lambda s: s ** 3, t)))
    assert singular.big_F(p3, t) == pytest.approx(ref, rel=1e-13, abs=1e-13)


def test_log_F_at_vanishing_slope():
    # g'(t0) = 0 for the B = 1 model at t0 = log 2
    m = singular.model_solution(1.0)
    t = math.log(2.0)
    ref = float(mp.log(mp_F(lambda s: mp.exp(s) + mp.log(4) - 2 * s, t)))
    assert singular.big_F(m, m.t0) == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("y", [-2.0, -30.0, -1e4, -1e12])
def test_F_inverse_roundtrip(p3, ee, y):
    for m in (p3, ee):
        t = singular.big_F_inv(m, y)
        assert singular.big_F(m, t) == pytest.approx(y, rel=1e-13)


def test_F_inverse_domain(p3):
    with pytest.raises(DomainError):
        singular.big_F_inv(p3, 10.0)


CASES = [
    (growth.power_exp(3.0), lambda s: s ** 3, [1.0, 2.0, 4.0]),
    (growth.iter_exp(1), lambda s: mp.exp(s), [0.5, 1.5, 3.0]),
    (growth.exp_poly((0.0, 0.0, 1.0)), lambda s: mp.exp(s) + s * s, [1.0, 2.5]),
]


@pytest.mark.parametrize("model,expr,ts", CASES)
def test_B_functionals_against_mpmath(model, expr, ts):
    for t in ts:
        b1, b2 = singular.b_functionals(model, t)
        r1, r2 = mp_B(expr, t)
        assert b1 == pytest.approx(r1, rel=1e-9, abs=1e-12)
        assert b2 == pytest.approx(r2, rel=1e-8, abs=1e-12)


def test_B_functional_limits(p3, ee):
    # 1/B -> 1/q: 2/3 for p = 3, 1 for double exponential
    b1, b2 = singular.b_functionals(p3, 200.0)
    assert b1 == pytest.approx(2.0 / 3.0, abs=1e-2) and b2 == pytest.approx(2.0 / 3.0, abs=1e-2)
    b1, b2 = singular.b_functionals(ee, 40.0)
    assert b1 == pytest.approx(1.0, abs=0.05) and b2 == pytest.approx(1.0, abs=0.05)


def test_model_solution_closed_forms():
    ap = singular.build_approx(singular.model_solution(1.5))
    assert ap.exact and ap.Bp == pytest.approx(3.0)
    # u0 = (log 1/r^2)^(1/3), w = (3/8) r^2 (log(1/r^2) + 1)
    assert ap.u0(0.05) == pytest.approx(math.log(400.0) ** (1.0 / 3.0), rel=1e-15)
    r = 0.1
    L = math.log(1.0 / r ** 2)
    assert ap.w(r) == pytest.approx(0.375 * r * r * (L + 1.0), rel=1e-14)
    assert math.exp(singular.big_F(ap.f0, ap.u0(r))) == pytest.approx(ap.w(r), rel=1e-12)


def test_model_solution_B_one():
    ap = singular.build_approx(singular.model_solution(1.0))
    r = 0.02
    assert ap.u0(r) == pytest.approx(math.log(math.log(1.0 / r ** 2)), rel=1e-15)
    assert ap.tilde_u_numeric(r) == pytest.approx(ap.u0(r), rel=1e-13)


def test_remainders_shrink(p3):
    ap = singular.build_approx(p3)
    vals = [singular.remainders_log(ap, -L / 2)["weighted"] for L in (1e2, 1e4, 1e6)]
    assert abs(vals[2]) < abs(vals[1]) < abs(vals[0])


def test_matching_radius(p3):
    ap = singular.build_approx(p3)
    s_bar, rows = singular.matching_radius(ap)
    assert s_bar < -1e3
    for row in rows:
        if row["log_r"] <= s_bar:
            assert abs(row["weighted"]) <= singular.MATCH_THRESHOLD


def test_matching_failure_reported(p3):
    ap = singular.build_approx(p3)
    with pytest.raises(MatchingError):
        singular.matching_radius(ap, threshold=1e-9, L_max=1e4)


def test_p3_singular_solution(p3_singular, p3):
    sol = p3_singular
    assert 1.0 < sol.R_star < 1.3
    assert sol.lambda_star == pytest.approx(sol.R_star ** 2)
    assert np.all(np.diff(sol.V) < 0)
    assert sol.ode_residual() < 1e-6
    # continuity across the matching radius
    s = sol.log_r_bar
    assert sol.value_log(s - 1e-6) == pytest.approx(sol.value_log(s + 1e-6), rel=1e-6)
    rep = singular.check_condition_C(sol.value_log, [0.5, 1.0, 1.5, 1.9], 0.0,
                                     (2 * sol.log_r_bar, math.log(1e-2)), model=p3, log=True)
    assert rep.passed


def test_R_star_insensitive_to_matching_point(p3, p3_singular):
    ap = p3_singular.approx
    deeper = singular.extend(ap, log_r_bar=2.0 * p3_singular.log_r_bar)
    assert deeper.R_star == pytest.approx(p3_singular.R_star, rel=1e-6)


def test_exact_extension(f0_solution):
    assert f0_solution.R_star == pytest.approx(1.0, abs=1e-9)
    r = np.geomspace(1e-4, 0.9, 40)
    assert np.max(np.abs(f0_solution(r) - np.log(1 / r ** 2) ** (1 / 3))) < 1e-9


def test_condition_C_detects_violation(p3):
    # U = (log 1/r)^(1/3) / 2 has g(U) = log(1/r) / 8, below alpha log(1/r) for alpha >= 0.5
    U = lambda s: 0.5 * (-s) ** (1.0 / 3.0)
    rep = singular.check_condition_C(U, [0.5], 0.0, (-1e4, -10.0), model=p3, log=True)
    assert not rep.passed and 0.5 in rep.violations


def test_condition_C_validation(p3):
    with pytest.raises(DomainError):
        singular.check_condition_C(lambda r: r, [2.5], 0.0, (1e-3, 1e-2), model=p3)


def test_derivative_cascade_against_mpmath(p3):
    t = 2.0
    expr = lambda s: s ** 3
    g1 = lambda s: mp.diff(expr, s)
    chain = [lambda s: 1 / g1(s)]
    for _ in range(4):
        prev = chain[-1]
        chain.append(lambda s, prev=prev: mp.diff(prev, s) / g1(s))
    ref = [float(c(mp.mpf(t))) for c in chain]
    got = singular.derivative_cascade(p3, t)
    assert np.allclose(got, ref, rtol=1e-10)


def test_cascade_scaled_bounded(p3, ee):
    # scaled cascade entries settle to finite limits
    for m, t in ((p3, 50.0), (growth.exp_poly((0.0, 0.0, 1.0)), 20.0)):
        a = singular.cascade_scaled(m, t)
        b = singular.cascade_scaled(m, 2 * t)
        assert np.all(np.isfinite(a)) and np.allclose(a, b, rtol=0.2, atol=1e-2)
