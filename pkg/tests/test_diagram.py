import math

import numpy as np
import pytest

from supercrit import diagram, growth, shooting
from supercrit.errors import DomainError


def gelfand_exact(mu):
    return 8.0 * (math.exp(mu / 2.0) - 1.0) * math.exp(-mu)


@pytest.fixture(scope="module")
def gelfand_diag(gelfand):
    return diagram.trace(gelfand, np.linspace(0.1, 8.0, 30), threads=2)


def test_trace_matches_closed_form(gelfand_diag):
    assert len(gelfand_diag.good) == 30
    for p in gelfand_diag.good:
        assert p.lam == pytest.approx(gelfand_exact(p.mu), rel=1e-8)
        assert np.isfinite(p.flux_residual) and p.crossings is None


def test_gelfand_single_turning_point(gelfand_diag):
    tps = gelfand_diag.turning
    assert len(tps) == 1
    tp = tps[0]
    assert tp.kind == "max" and tp.certified and not tp.unresolved
    assert tp.mu == pytest.approx(2.0 * math.log(2.0), abs=1e-7)
    assert tp.lam == pytest.approx(2.0, abs=1e-9)
    assert tp.bracket[0] < tp.mu < tp.bracket[1]


def test_turning_point_without_refinement(gelfand_diag):
    tp, = diagram.turning_points(gelfand_diag, refine=False)
    assert tp.mu in set(gelfand_diag.mu)
    assert tp.lam == pytest.approx(2.0, abs=0.02)


def test_lambda_crossings_of_given_level(gelfand_diag):
    # 8 (x - 1) / x^2 = 1 with x = exp(mu / 2) has roots x = 4 -+ 2 sqrt 2
    roots = [2.0 * math.log(4.0 - 2.0 * math.sqrt(2.0)), 2.0 * math.log(4.0 + 2.0 * math.sqrt(2.0))]
    summ = diagram.oscillation_summary(gelfand_diag, lambda_star=1.0)
    assert summ["lambda_crossings"] == 2
    assert summ["lambda_star_source"] == "reference"
    for br, r, d in zip(summ["lambda_crossing_brackets"], roots, ("up", "down")):
        assert br["bracket"][0] < r < br["bracket"][1]
        assert br["direction"] == d
    assert summ["failed_points"] == []
    assert "intersections" not in summ and "slope_crossings" not in summ


def test_summary_needs_two_turning_points(gelfand_diag):
    with pytest.raises(DomainError):
        diagram.oscillation_summary(gelfand_diag)
    with pytest.raises(DomainError):
        diagram.oscillation_summary(gelfand_diag, lambda_star=-1.0)


def test_continuity_needs_reference(gelfand_diag):
    with pytest.raises(DomainError):
        diagram.intersection_continuity(gelfand_diag)


def test_rows_shape(gelfand_diag):
    rows = gelfand_diag.rows()
    assert len(rows) == 30 and all(len(r) == 5 for r in rows)
    assert all(math.isnan(r[4]) for r in rows)


def test_mu_grid_log_g():
    m = growth.power_exp(3.0)
    grid = diagram.mu_grid(m, 0.5, 4.0, 9)
    g = grid ** 3
    assert grid[0] == 0.5 and grid[-1] == 4.0
    assert np.allclose(np.diff(np.log(g)), math.log(64.0 / 0.125) / 8, rtol=1e-9)


def test_mu_grid_linear_and_errors():
    m = growth.pure_exp()
    assert np.allclose(diagram.mu_grid(m, 1.0, 2.0, 5, spacing="linear"), [1, 1.25, 1.5, 1.75, 2])
    with pytest.raises(DomainError):
        diagram.mu_grid(m, 2.0, 1.0, 5)
    with pytest.raises(DomainError):
        diagram.mu_grid(m, 1.0, 2.0, 1)
    with pytest.raises(DomainError):
        diagram.mu_grid(m, 1.0, 2.0, 5, spacing="cubic")
    # g(0) = 0 is not admissible for log spacing
    with pytest.raises(DomainError):
        diagram.mu_grid(m, 0.0, 2.0, 5)


def test_trace_rejects_bad_grids(gelfand):
    with pytest.raises(DomainError):
        diagram.trace(gelfand, [1.0, 0.5])
    with pytest.raises(DomainError):
        diagram.trace(gelfand, [])
    with pytest.raises(DomainError):
        diagram.trace(growth.power_exp(3.0, m=1.0), [0.3, 1.0])


def test_failed_point_is_recorded(gelfand):
    cfg = shooting.SolverConfig(max_steps=10)
    diag = diagram.trace(gelfand, [1.0, 2.0, 3.0], cfg, threads=1)
    assert not diag.good and all(p.error for p in diag.points)
    assert diag.turning is None


def test_p3_intersections_with_reference(p3, p3_singular):
    diag = diagram.trace(p3, diagram.mu_grid(p3, 1.0, 6.0, 12), reference=p3_singular)
    counts = [p.crossings for p in diag.good]
    assert all(c is not None and c >= 0 for c in counts)
    summ = diagram.oscillation_summary(diag)
    assert summ["lambda_star"] == pytest.approx(p3_singular.lambda_star)
    assert summ["intersections"] == counts
    assert "slope_crossings" in summ
    cont = diagram.intersection_continuity(diag)
    assert set(cont) == {"ok", "violations", "refined_points"}
