"""Bump extraction and asymptotic checks on a single shot.

Everything works in the shot's own coordinates (lambda = 1, radius r up to
r0) and in log radius s = log r, since deep bumps sit at radii far below the
smallest positive double.  The bump statistic is

    phi(s) = 2 s + log h + g(v) + log g'(v) = log(r^2 h f'(v)),

whose local maxima are the concentration centres and whose local minima in
between are the bottoms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError
from .growth import GrowthModel
from .recurrence import RecurrenceTable
from .shooting import Shot

__all__ = ["BumpReport", "IntersectionReport", "bump_statistic", "detect_bumps",
           "bump_energy", "count_intersections", "curve_exponent", "verify_shot"]


@dataclass
class BumpReport:
    k: int
    log_r_top: float
    log_r_bottom: Optional[float]
    v_top: float
    v_bottom: Optional[float]
    peak: float
    peak_pred: float
    log_gamma: float
    height_ratio: float
    height_ratio_pred: float
    gap: float
    gap_pred: float
    radius_law: float
    radius_law_pred: float
    top_exponent: float
    bottom_exponent: Optional[float]
    bottom_exponent_pred: float
    energy: float = math.nan
    energy_pred: float = math.nan
    gap_energy: float = math.nan
    raw_mass: float = math.nan
    at_endpoint: bool = False

    @property
    def r_top(self) -> float:
        return math.exp(self.log_r_top)

    @property
    def r_bottom(self) -> Optional[float]:
        return None if self.log_r_bottom is None else math.exp(self.log_r_bottom)

    @property
    def gamma(self) -> float:
        return math.exp(self.log_gamma)

    def as_dict(self) -> dict:
        out = dict(self.__dict__)
        return out


def bump_statistic(shot: Shot, s):
    """phi(s) = log(r^2 h f'(v(r))) and its s-derivative."""
    s = np.asarray(s, dtype=float)
    v, w = shot.dense(s)
    v = np.asarray(v)
    d = shot.model.derivs(np.maximum(v, 1e-300), 2)
    g, g1, g2 = d[..., 0], d[..., 1], d[..., 2]
    lh, lhs = shot._lh_s(s)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = 2.0 * s + lh + g + np.log(g1)
        dphi = 2.0 + lhs + (g1 + g2 / g1) * np.asarray(w)
    return phi, dphi


def _extrema(shot: Shot, per_step: int = 16):
    s_nodes = shot.s
    grid = np.concatenate([
        np.linspace(s_nodes[i], s_nodes[i + 1], per_step, endpoint=False)
        for i in range(s_nodes.size - 1)
    ] + [s_nodes[-1:]])
    phi, dphi = bump_statistic(shot, grid)
    phi = np.where(np.isfinite(phi), phi, -np.inf)
    maxima, minima = [], []
    sign = np.sign(dphi)
    for i in range(1, grid.size):
        if sign[i - 1] > 0 and sign[i] <= 0:
            maxima.append(_refine(shot, grid[i - 1], grid[i], True))
        elif sign[i - 1] < 0 and sign[i] >= 0:
            minima.append(_refine(shot, grid[i - 1], grid[i], False))
    return grid, phi, dphi, maxima, minima


def _refine(shot, a, b, maximize):
    sgn = -1.0 if maximize else 1.0
    res = minimize_scalar(lambda x: sgn * float(bump_statistic(shot, x)[0]),
                          bounds=(a, b), method="bounded",
                          options={"xatol": 1e-12 * max(1.0, abs(a))})
    return float(res.x)


def _log_disc_radius(shot: Shot, s):
    # log of the disc radius r / sqrt(lambda)
    return s - shot.s0


def detect_bumps(shot: Shot, model: Optional[GrowthModel] = None,
                 table: Optional[RecurrenceTable] = None, *, margin: float = 2.0,
                 endpoint_tol: float = 1e-6, energies: bool = True) -> list:
    """Tops (local maxima of phi above threshold) and the bottoms between them."""
    model = model or shot.model
    if table is None:
        raise DomainError("detect_bumps needs a recurrence table")
    k_max = len(table)
    thr = math.log(table.row(k_max).a ** 2 / 2.0) - margin
    grid, phi, dphi, maxima, minima = _extrema(shot)
    tops = [s for s in maxima if float(bump_statistic(shot, s)[0]) > thr]
    end_phi, end_dphi = bump_statistic(shot, shot.s[-1])
    end_top = False
    if float(end_dphi) >= -endpoint_tol and float(end_phi) > thr:
        last_max = tops[-1] if tops else -math.inf
        later_min = [m for m in minima if m > last_max]
        if not tops or later_min:
            tops.append(float(shot.s[-1]))
            end_top = True
    tops.sort()
    bottoms = []
    for i, st in enumerate(tops):
        nxt = tops[i + 1] if i + 1 < len(tops) else math.inf
        cand = [m for m in minima if st < m < nxt]
        if cand:
            vals = [float(bump_statistic(shot, m)[0]) for m in cand]
            bottoms.append(cand[int(np.argmin(vals))])
        else:
            bottoms.append(None)

    g_mu, g1_mu = model.derivs(shot.mu, 1)
    reports = []
    for i, st in enumerate(tops):
        k = i + 1
        row = table.row(min(k, k_max))
        v_top = float(shot.dense(st)[0])
        phi_top = float(bump_statistic(shot, st)[0])
        d_top = model.derivs(v_top, 1)
        lh_top = float(shot._lh_s(np.asarray(st))[0])
        log_gamma = -0.5 * (math.log(shot.lam) + lh_top + d_top[0] + math.log(d_top[1]))
        sb = bottoms[i]
        v_bot = None if sb is None else float(shot.dense(sb)[0])
        bot_exp = None if sb is None else _exponent(model, v_bot, sb)
        rep = BumpReport(
            k=k, log_r_top=st, log_r_bottom=sb, v_top=v_top, v_bottom=v_bot,
            peak=math.exp(phi_top), peak_pred=row.a ** 2 / 2.0,
            log_gamma=log_gamma,
            height_ratio=v_top / shot.mu, height_ratio_pred=row.delta,
            gap=(shot.mu - v_top) * g1_mu / g_mu,
            gap_pred=math.log(1.0 / row.eta) if table.exp_branch else math.nan,
            radius_law=-_log_disc_radius(shot, st) / g_mu, radius_law_pred=row.eta / 2.0,
            top_exponent=_exponent(model, v_top, st) if st < 0 else math.nan,
            bottom_exponent=bot_exp, bottom_exponent_pred=row.alpha_star,
            at_endpoint=end_top and i == len(tops) - 1,
        )
        reports.append(rep)
    if energies:
        for rep in reports:
            bump_energy(shot, reports, rep.k, model, table)
    return reports


def _exponent(model, v, s):
    if not s < 0:
        return math.nan
    return float(model.g(v)) / (-s)


def bump_energy(shot: Shot, bumps: list, k: int, model: Optional[GrowthModel] = None,
                table: Optional[RecurrenceTable] = None):
    """(inner, gap) energies of bump k, also stored on the report.

    inner = g'(v(top_k)) * int over (bottom_{k-1}, bottom_k) of h f(v) r dr, with
    0 and r0 standing in for missing bottoms; gap = g'(mu) * int from bottom_k
    to top_{k+1}.
    """
    model = model or shot.model
    rep = bumps[k - 1]
    lo = None if k == 1 else bumps[k - 2].log_r_bottom
    hi = rep.log_r_bottom if rep.log_r_bottom is not None else float(shot.s[-1])
    m_hi = float(shot.mass_to(hi)[0])
    m_lo = 0.0 if lo is None else float(shot.mass_to(lo)[0])
    raw = m_hi - m_lo
    g1_top = float(model.derivs(rep.v_top, 1)[1])
    inner = g1_top * raw
    gap = 0.0
    if k < len(bumps) and rep.log_r_bottom is not None:
        g1_mu = float(model.derivs(shot.mu, 1)[1])
        gap = g1_mu * shot.integrate_E(rep.log_r_bottom, bumps[k].log_r_top)
    rep.energy = inner
    rep.raw_mass = raw
    rep.gap_energy = gap
    if table is not None:
        rep.energy_pred = 2.0 * table.row(min(k, len(table))).a
    return inner, gap


# ---------------------------------------------------------------------------

@dataclass
class IntersectionReport:
    interval: tuple
    count: int
    locations: list = field(default_factory=list)
    tangencies: list = field(default_factory=list)
    identical: bool = False

    @property
    def tangent(self) -> bool:
        return bool(self.tangencies) or self.identical

    def as_dict(self) -> dict:
        return {"interval": list(self.interval), "count": self.count,
                "locations": list(self.locations), "tangencies": list(self.tangencies),
                "identical": self.identical}


def count_intersections(u: Callable, U: Callable, interval, refine_tol: float = 1e-12, *,
                        log: bool = False, points_per_decade: int = 64,
                        tangency_tol: float = 1e-9) -> IntersectionReport:
    """Sign changes of u - U on a log-uniform grid, each refined by bisection.

    With ``log=True`` the samplers take log r and the interval is in log r
    too; reported locations are then log radii.
    """
    a, b = interval
    if log:
        la, lb = float(a), float(b)
    else:
        if not 0 < a < b:
            raise DomainError("interval must satisfy 0 < a < b")
        la, lb = math.log(a), math.log(b)
    if not la < lb:
        raise DomainError("empty interval")
    n = max(8, int(math.ceil((lb - la) / math.log(10.0) * points_per_decade)) + 1)
    x = np.linspace(la, lb, n)
    arg = x if log else np.exp(x)
    with np.errstate(all="ignore"):
        d = np.asarray(u(arg), dtype=float) - np.asarray(U(arg), dtype=float)
    if not np.all(np.isfinite(d)):
        raise DomainError("samplers undefined on part of the interval")
    scale = np.maximum(np.abs(np.asarray(u(arg), dtype=float)), 1.0)
    if np.all(np.abs(d) <= tangency_tol * scale):
        return IntersectionReport((a, b), 0, [], [], identical=True)

    def diff(t):
        tt = t if log else math.exp(t)
        return float(np.asarray(u(tt)) - np.asarray(U(tt)))

    locs, tang = [], []
    sgn = np.where(d >= 0.0, 1.0, -1.0)
    for i in np.nonzero(sgn[1:] != sgn[:-1])[0]:
        lo, hi, flo = x[i], x[i + 1], d[i]
        while hi - lo > refine_tol * max(1.0, abs(lo)):
            mid = 0.5 * (lo + hi)
            fm = diff(mid)
            if (fm >= 0) == (flo >= 0):
                lo, flo = mid, fm
            else:
                hi = mid
        z = 0.5 * (lo + hi)
        locs.append(z if log else math.exp(z))
    ad = np.abs(d)
    for i in range(1, n - 1):
        if ad[i] <= ad[i - 1] and ad[i] <= ad[i + 1] and ad[i] < tangency_tol * scale[i] \
                and sgn[i - 1] == sgn[i + 1] != 0:
            tang.append(float(x[i]) if log else float(arg[i]))
    return IntersectionReport((a, b), len(locs), locs, tang)


def curve_exponent(shot: Shot, r: float, model: Optional[GrowthModel] = None, *,
                   log: bool = False) -> float:
    """g(v(r)) / log(1/r) in shot coordinates (r < min(r0, 1))."""
    model = model or shot.model
    s = float(r) if log else math.log(r)
    if not s < min(0.0, shot.s0):
        raise DomainError("need 0 < r < min(r0, 1)")
    v = float(shot.dense(s)[0])
    return float(model.g(v)) / (-s)


def verify_shot(shot: Shot, table: RecurrenceTable, *, reference=None) -> dict:
    """Observed-versus-predicted table for every detected bump."""
    bumps = detect_bumps(shot, shot.model, table)

    def rel(obs, pred):
        if obs is None or pred is None or not math.isfinite(pred) or pred == 0:
            return None
        return abs(obs - pred) / abs(pred)

    rows = []
    for b in bumps:
        rows.append({
            "k": b.k,
            "log_r_top": b.log_r_top,
            "log_r_bottom": b.log_r_bottom,
            "peak": [b.peak, b.peak_pred, rel(b.peak, b.peak_pred)],
            "height_ratio": [b.height_ratio, b.height_ratio_pred,
                             rel(b.height_ratio, b.height_ratio_pred)],
            "gap": [b.gap, b.gap_pred, rel(b.gap, b.gap_pred)],
            "radius_law": [b.radius_law, b.radius_law_pred, rel(b.radius_law, b.radius_law_pred)],
            "top_exponent": [b.top_exponent, 2.0, rel(b.top_exponent, 2.0)],
            "bottom_exponent": [b.bottom_exponent, b.bottom_exponent_pred,
                                rel(b.bottom_exponent, b.bottom_exponent_pred)],
            "energy": [b.energy, b.energy_pred, rel(b.energy, b.energy_pred)],
            "gap_energy": b.gap_energy,
            "log_gamma": b.log_gamma,
        })
    out = {"mu": shot.mu, "lambda": shot.lam, "bumps": rows, "n_bumps": len(bumps)}
    if reference is not None:
        hi = bumps[1].log_r_bottom if len(bumps) > 1 and bumps[1].log_r_bottom else shot.s[-1]
        hi = min(hi, reference.log_R_star)
        rep = count_intersections(lambda s: shot.dense(s)[0], reference.value_log,
                                  (float(shot.s[0]), float(hi)), log=True)
        out["intersections"] = rep.as_dict()
    return out
