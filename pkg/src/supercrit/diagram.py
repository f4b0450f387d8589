"""Bifurcation curve mu -> lambda(mu), its turning points and oscillation counts."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import _accel
from .analysis import count_intersections
from .errors import DomainError, SupercritError
from .growth import GrowthModel
from .roots import bracket_root
from .shooting import Shot, SolverConfig, integrate

__all__ = ["DiagramPoint", "Diagram", "TurningPoint", "trace", "turning_points",
           "oscillation_summary", "mu_grid", "estimate_lambda_star", "intersection_continuity"]

_GOLD = 0.5 * (math.sqrt(5.0) - 1.0)


@dataclass(frozen=True)
class DiagramPoint:
    mu: float
    lam: float
    r0: float
    slope: float          # u_r(mu, 1) = sqrt(lambda) v'(r0)
    dlam_dmu: float
    lam_err: float
    crossings: Optional[int] = None
    ok: bool = True
    error: Optional[str] = None
    flux_residual: float = math.nan
    green_residual: float = math.nan


@dataclass(frozen=True)
class TurningPoint:
    mu: float
    lam: float
    kind: str                   # "max" or "min"
    bracket: tuple              # (mu_a, mu_b)
    bracket_lam: tuple          # lambda at the bracket ends
    certified: bool             # both ends on the right side of lam
    unresolved: bool = False

    def as_dict(self) -> dict:
        return {"mu": self.mu, "lambda": self.lam, "kind": self.kind,
                "bracket": list(self.bracket), "bracket_lambda": list(self.bracket_lam),
                "certified": self.certified, "unresolved": self.unresolved}


@dataclass
class Diagram:
    model: GrowthModel
    config: SolverConfig
    points: list
    reference: object = None
    turning: Optional[list] = None
    meta: dict = field(default_factory=dict)

    @property
    def good(self) -> list:
        return [p for p in self.points if p.ok]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) for p in self.good], dtype=float)

    @property
    def mu(self) -> np.ndarray:
        return self.column("mu")

    @property
    def lam(self) -> np.ndarray:
        return self.column("lam")

    @property
    def lambda_star(self) -> Optional[float]:
        return None if self.reference is None else self.reference.lambda_star

    @property
    def slope_star(self) -> Optional[float]:
        """U*'(1) = R* V*'(R*) for the reference, in disc coordinates."""
        return None if self.reference is None else self.reference.W_star

    def rows(self) -> list:
        """(mu, lambda, r0, slope, crossings) for every grid point, failed ones as nan."""
        out = []
        for p in self.points:
            c = math.nan if p.crossings is None else float(p.crossings)
            out.append((p.mu, p.lam, p.r0, p.slope, c))
        return out


def mu_grid(model: GrowthModel, mu_min: float, mu_max: float, n: int, *,
            spacing: str = "log-g") -> np.ndarray:
    """Grid log-uniform in g(mu) (bump births are roughly equispaced there)."""
    if not mu_min < mu_max or n < 2:
        raise DomainError("need mu_min < mu_max and n >= 2")
    if spacing == "linear":
        return np.linspace(mu_min, mu_max, n)
    if spacing != "log-g":
        raise DomainError(f"unknown spacing {spacing!r}")
    g_lo, g_hi = float(model.g(mu_min)), float(model.g(mu_max))
    if not (g_lo > 0 and g_hi > g_lo and math.isfinite(g_hi)):
        raise DomainError("log-g spacing needs 0 < g(mu_min) < g(mu_max) < inf")
    targets = np.geomspace(g_lo, g_hi, n)
    out = np.empty(n)
    out[0], out[-1] = mu_min, mu_max
    for i in range(1, n - 1):
        tg = targets[i]
        out[i] = bracket_root(lambda t: float(model.g(t)) - tg, mu_min, mu_max).root
    return out


def _point(model, mu, cfg, reference) -> DiagramPoint:
    try:
        shot = integrate(model, mu, cfg)
    except SupercritError as exc:
        nan = math.nan
        return DiagramPoint(mu, nan, nan, nan, nan, nan, None, False, f"{type(exc).__name__}: {exc}")
    cross = None
    if reference is not None:
        cross = _crossings(shot, reference)
    d = shot.diagnostics
    return DiagramPoint(mu, shot.lam, shot.r0, float(shot.w[-1]), shot.dlam_dmu, shot.lam_err,
                        cross, True, None, d.get("flux_residual_max", math.nan),
                        d.get("green_residual_max", math.nan))


def _crossings(shot: Shot, reference) -> int:
    # below r_init v stays at ~mu while V* exceeds it, so the scan starts there
    hi = min(shot.s0, reference.log_R_star)
    lo = float(shot.s[0])
    if not lo < hi:
        return 0
    rep = count_intersections(lambda s: shot.dense(np.minimum(s, shot.s[-1]))[0],
                              reference.value_log, (lo, hi), log=True)
    return rep.count


def trace(model: GrowthModel, mu_grid: Sequence[float], config: Optional[SolverConfig] = None,
          reference=None, *, threads: Optional[int] = None, turning: bool = True) -> Diagram:
    """One shot per mu (concurrently), assembled in grid order."""
    cfg = config or SolverConfig()
    mus = np.asarray(mu_grid, dtype=float)
    if mus.ndim != 1 or mus.size < 1:
        raise DomainError("mu_grid must be a non-empty 1-d sequence")
    if np.any(np.diff(mus) <= 0):
        raise DomainError("mu_grid must be strictly increasing")
    if np.any(mus <= model.t0) and not (model.t0 == 0.0 and np.all(mus > 0)):
        raise DomainError(f"mu values must exceed t0 = {model.t0!r}")
    nthreads = threads or _accel.thread_count()
    # compile once before fanning out
    first = _point(model, float(mus[0]), cfg, reference)
    rest = list(mus[1:])
    if nthreads > 1 and len(rest) > 1:
        with ThreadPoolExecutor(max_workers=nthreads) as ex:
            pts = list(ex.map(lambda m: _point(model, float(m), cfg, reference), rest))
    else:
        pts = [_point(model, float(m), cfg, reference) for m in rest]
    diag = Diagram(model, cfg, [first] + pts, reference)
    if turning and len(diag.good) >= 3:
        diag.turning = turning_points(diag)
    return diag


# ---------------------------------------------------------------------------
# turning points

def _slopes(diag: Diagram) -> np.ndarray:
    """dlambda/dmu at the good points: exact sensitivity, else central differences."""
    d = diag.column("dlam_dmu")
    if np.all(np.isfinite(d)):
        return d
    return np.gradient(diag.lam, diag.mu)


def _refine_sensitivity(diag: Diagram, a: float, b: float, tol: float):
    cfg, model = diag.config, diag.model

    def dl(mu):
        return integrate(model, mu, cfg, diagnostics=False).dlam_dmu

    res = bracket_root(dl, a, b, xtol=tol)
    mu = res.root
    return mu, integrate(model, mu, cfg, diagnostics=False).lam


def _refine_golden(diag: Diagram, a: float, b: float, kind: str, tol: float):
    cfg, model = diag.config, diag.model
    sign = -1.0 if kind == "max" else 1.0

    def obj(mu):
        return sign * integrate(model, mu, cfg, diagnostics=False).lam

    x1 = b - _GOLD * (b - a)
    x2 = a + _GOLD * (b - a)
    f1, f2 = obj(x1), obj(x2)
    while b - a > tol:
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLD * (b - a)
            f1 = obj(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLD * (b - a)
            f2 = obj(x2)
    mu = 0.5 * (a + b)
    return mu, sign * obj(mu)


def turning_points(diag: Diagram, *, refine: bool = True, tol: float = 1e-9) -> list:
    """Local extrema of lambda(mu), bracketed on the grid and refined by re-shooting.

    The bracket comes from a sign change of dlambda/dmu between neighbours;
    with the exact sensitivity available the zero of dlambda/dmu is solved
    for directly, otherwise a golden-section search on lambda is used.
    """
    good = diag.good
    if len(good) < 3:
        raise DomainError("turning_points needs at least 3 good points")
    mu, lam = diag.mu, diag.lam
    dl = _slopes(diag)
    err = diag.column("lam_err")
    exact = np.all(np.isfinite(diag.column("dlam_dmu")))
    out = []
    for i in range(mu.size - 1):
        if not (dl[i] > 0 and dl[i + 1] < 0) and not (dl[i] < 0 and dl[i + 1] > 0):
            continue
        kind = "max" if dl[i] > 0 else "min"
        a, b = float(mu[i]), float(mu[i + 1])
        # a slope below what the lambda error can resolve is a plateau
        res = max(err[i], err[i + 1]) / (b - a)
        unresolved = abs(dl[i]) < res and abs(dl[i + 1]) < res
        if refine:
            if exact:
                m_star, l_star = _refine_sensitivity(diag, a, b, tol)
            else:
                m_star, l_star = _refine_golden(diag, a, b, kind, tol * 1e3)
        else:
            j = i if (lam[i] > lam[i + 1]) == (kind == "max") else i + 1
            m_star, l_star = float(mu[j]), float(lam[j])
        ends = (float(lam[i]), float(lam[i + 1]))
        if kind == "max":
            cert = ends[0] <= l_star and ends[1] <= l_star
        else:
            cert = ends[0] >= l_star and ends[1] >= l_star
        out.append(TurningPoint(float(m_star), float(l_star), kind, (a, b), ends, bool(cert),
                                bool(unresolved)))
    return out


# ---------------------------------------------------------------------------
# oscillation counts

def estimate_lambda_star(diag: Diagram) -> float:
    """Median of lambda over the last full oscillation period of the grid.

    A full period runs between the last turning point and the one two
    before it (same kind); with only two turning points the stretch between
    them is used.
    """
    tp = diag.turning if diag.turning is not None else turning_points(diag)
    if len(tp) < 2:
        raise DomainError("need at least two turning points to estimate lambda*")
    lo = tp[-3].mu if len(tp) >= 3 else tp[-2].mu
    hi = tp[-1].mu
    mu, lam = diag.mu, diag.lam
    sel = (mu >= lo) & (mu <= hi)
    return float(np.median(lam[sel]))


def _sign_changes(x: np.ndarray, mu: np.ndarray) -> list:
    s = np.sign(x)
    out = []
    for i in range(s.size - 1):
        if s[i] != 0 and s[i + 1] != 0 and s[i] != s[i + 1]:
            out.append({"bracket": [float(mu[i]), float(mu[i + 1])],
                        "direction": "up" if s[i + 1] > 0 else "down"})
    return out


def oscillation_summary(diag: Diagram, lambda_star: Optional[float] = None,
                        slope_star: Optional[float] = None) -> dict:
    """Crossings of lambda - lambda*, of |slope| - |slope*|, and the intersection trend."""
    if lambda_star is None:
        lambda_star = diag.lambda_star
    source = "reference" if lambda_star is not None else None
    if lambda_star is None:
        lambda_star = estimate_lambda_star(diag)
        source = "median of last period"
    if not lambda_star > 0:
        raise DomainError("lambda* must be positive")
    if slope_star is None:
        slope_star = diag.slope_star
    mu, lam = diag.mu, diag.lam
    lam_cross = _sign_changes(lam - lambda_star, mu)
    out = {
        "lambda_star": float(lambda_star), "lambda_star_source": source,
        "lambda_crossings": len(lam_cross), "lambda_crossing_brackets": lam_cross,
        "turning_points": [t.as_dict() for t in (diag.turning or [])],
        "failed_points": [p.mu for p in diag.points if not p.ok],
    }
    if slope_star is not None:
        sl = np.abs(diag.column("slope")) - abs(slope_star)
        sc = _sign_changes(sl, mu)
        out.update({"slope_star": float(slope_star), "slope_crossings": len(sc),
                    "slope_crossing_brackets": sc})
    cr = [p.crossings for p in diag.good if p.crossings is not None]
    if cr:
        steps = np.diff(cr)
        out.update({"intersections": cr,
                    "intersections_nondecreasing": bool(np.all(steps >= 0)),
                    "max_intersection_drop": int(max(0, -steps.min())) if steps.size else 0})
    return out


def intersection_continuity(diag: Diagram, *, max_depth: int = 3) -> dict:
    """Grid-level check that intersection counts drop by at most 1 between neighbours.

    Offending intervals are bisected (fresh shots) up to ``max_depth`` times;
    whatever still violates after that is reported.
    """
    if diag.reference is None:
        raise DomainError("intersection_continuity needs a reference singular solution")
    model, cfg, ref = diag.model, diag.config, diag.reference
    pts = [(p.mu, p.crossings) for p in diag.good]
    refined = 0
    for _ in range(max_depth):
        bad = [i for i in range(len(pts) - 1) if pts[i][1] - pts[i + 1][1] > 1]
        if not bad:
            break
        for i in reversed(bad):
            m = 0.5 * (pts[i][0] + pts[i + 1][0])
            p = _point(model, m, cfg, ref)
            if p.ok:
                pts.insert(i + 1, (m, p.crossings))
                refined += 1
    bad = [(pts[i][0], pts[i + 1][0]) for i in range(len(pts) - 1) if pts[i][1] - pts[i + 1][1] > 1]
    return {"ok": not bad, "violations": bad, "refined_points": refined}
