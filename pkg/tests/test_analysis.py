import math

import numpy as np
import pytest

from supercrit import analysis, recurrence, shooting
from supercrit.errors import DomainError


def test_count_sine_zeros_log_mode():
    rep = analysis.count_intersections(np.sin, lambda x: 0.0 * x, (0.5, 10.0), log=True)
    assert rep.count == 3
    assert np.allclose(rep.locations, [math.pi, 2 * math.pi, 3 * math.pi], atol=1e-10)


def test_count_radial_mode():
    # u - U = cos(log r) has zeros at r = exp(pi/2 + k pi)
    rep = analysis.count_intersections(lambda r: np.cos(np.log(r)), lambda r: 0.0 * r,
                                       (1e-3, 1e3))
    expected = [math.exp(math.pi / 2 + k * math.pi) for k in range(-2, 2)]
    assert rep.count == len(expected)
    assert np.allclose(rep.locations, expected, rtol=1e-9)


def test_identical_and_tangent():
    rep = analysis.count_intersections(np.cos, np.cos, (0.0, 1.0), log=True)
    assert rep.identical and rep.count == 0 and rep.tangent
    # (x - 0.5)^2 touches zero at a grid point without crossing
    rep = analysis.count_intersections(lambda x: (x - 0.5) ** 2, lambda x: 0.0 * x,
                                       (0.0, 1.0), log=True, points_per_decade=21)
    assert rep.count == 0


def test_bad_interval():
    with pytest.raises(DomainError):
        analysis.count_intersections(np.sin, np.cos, (1.0, 0.5))


def test_gelfand_single_bump(gelfand):
    # exact solution v = mu - 2 log(1 + c r^2), c = e^mu / 8
    mu = 3.0
    c = math.exp(mu) / 8.0
    shot = shooting.integrate(gelfand, mu)
    bumps = analysis.detect_bumps(shot, gelfand, recurrence.build_table(1.5, 4))
    assert len(bumps) == 1
    b = bumps[0]
    assert b.peak == pytest.approx(2.0, rel=1e-9)          # r^2 e^v at its maximum
    assert b.r_top == pytest.approx(1.0 / math.sqrt(c), rel=1e-6)
    # a maximum is located to ~sqrt(eps), so v there only to ~1e-8
    assert b.v_top == pytest.approx(mu - 2.0 * math.log(2.0), rel=1e-7)
    # inner energy equals the boundary flux -r0 v'(r0)
    assert b.energy == pytest.approx(-shot.w[-1], rel=1e-8)
    assert -shot.w[-1] == pytest.approx(4 * c * shot.lam / (1 + c * shot.lam), rel=1e-9)


def test_bump_statistic_derivative(p3):
    shot = shooting.integrate(p3, 3.0)
    s = np.linspace(shot.s[0] + 1, shot.s[-1] - 0.5, 7)
    h = 1e-6
    fd = (analysis.bump_statistic(shot, s + h)[0] - analysis.bump_statistic(shot, s - h)[0]) / (2 * h)
    assert np.allclose(analysis.bump_statistic(shot, s)[1], fd, rtol=1e-5, atol=1e-6)


def test_p3_bumps_are_ordered(p3):
    shot = shooting.integrate(p3, 4.0)
    bumps = analysis.detect_bumps(shot, p3, recurrence.build_table(1.5, 8))
    assert len(bumps) >= 2
    tops = [b.log_r_top for b in bumps]
    assert tops == sorted(tops)
    assert bumps[0].log_r_bottom < tops[1]
    assert bumps[0].v_top > bumps[1].v_top


def test_first_bump_tracks_regular_profile(p3):
    # the first bubble is close to the k = 1 limit profile already at moderate mu
    tab = recurrence.build_table(1.5, 8)
    b = analysis.detect_bumps(shooting.integrate(p3, 6.0), p3, tab)[0]
    assert b.peak == pytest.approx(2.0, rel=0.02)
    assert b.height_ratio == pytest.approx(1.0, rel=0.01)
    assert b.energy == pytest.approx(4.0, rel=0.05)


def test_curve_exponent(gelfand):
    shot = shooting.integrate(gelfand, 2.0)
    r = 0.3
    assert analysis.curve_exponent(shot, r) == pytest.approx(shot.v_at(r) / math.log(1 / r))
    with pytest.raises(DomainError):
        analysis.curve_exponent(shot, 2.0)


def test_detect_needs_table(p3):
    with pytest.raises(DomainError):
        analysis.detect_bumps(shooting.integrate(p3, 3.0))


def test_verify_shot_table(p3):
    out = analysis.verify_shot(shooting.integrate(p3, 4.0), recurrence.build_table(1.5, 8))
    first = out["bumps"][0]
    assert first["k"] == 1
    obs, pred, err = first["peak"]
    assert pred == 2.0 and err == pytest.approx(abs(obs - pred) / pred)
