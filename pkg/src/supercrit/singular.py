"""Singular solutions through the F / F^{-1} pipeline.

F(t) is the tail integral of 1/f.  Every quantity below is built from the
substitution s = t + y/g'(t), under which

    F(t) f(t) g'(t) = I(t) = int_0^inf exp(-(g(t + y/g') - g(t))) dy,

and the integrand is within a factor close to 1 of e^{-y}.  F itself is only
ever handled as log F.  The model solution u0 and its profile w(r) come in
closed form; tilde_u = F^{-1}(w) transplants u0 onto the model at hand and is
then continued outward by the shooting integrator until it vanishes.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import growth as gr
from .errors import DomainError, MatchingError, NumericalError
from .growth import Family, GrowthModel
from .roots import bracket_root
from .shooting import SolverConfig, _hermite5, integrate_outward

__all__ = ["big_F", "big_F_inv", "b_functionals", "BValues", "model_solution",
           "SingularApprox", "build_approx", "remainders", "remainders_log", "matching_radius",
           "SingularSolution", "extend", "ConditionCReport", "check_condition_C",
           "derivative_cascade", "cascade_scaled", "substitution_integrals",
           "log_F_correction"]

Y_MAX = 60.0
MATCH_THRESHOLD = 0.05
_PANELS = np.array([0.0, 0.25, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0,
                    40.0, 48.0, 60.0])
_GX, _GW = np.polynomial.legendre.leggauss(16)


# ---------------------------------------------------------------------------
# substitution quadrature

def _remainders(model: GrowthModel, t: float, h: np.ndarray, d: np.ndarray):
    """D2 = g(t+h) - g(t) - g'h and E2 = g'(t+h) - g'(t) - g''h.

    Taylor through g^(5) where the series has clearly converged, direct
    differences elsewhere (where the remainders are no longer small).
    """
    hk = [h ** k for k in range(6)]
    tD = [d[k] * hk[k] / math.factorial(k) for k in range(2, 6)]
    tE = [d[k + 1] * hk[k] / math.factorial(k) for k in range(2, 5)]
    D_tay = tD[0] + tD[1] + tD[2] + tD[3]
    E_tay = tE[0] + tE[1] + tE[2]
    with np.errstate(all="ignore"):
        ok_D = np.abs(tD[3]) <= 1e-14 * np.abs(D_tay)
        ok_E = np.abs(tE[2]) <= 1e-14 * np.abs(E_tay)
        need = ~(ok_D & ok_E)
        D, E = D_tay.copy(), E_tay.copy()
        if np.any(need):
            hn = h[need]
            D[need & ~ok_D] = (model.g_increment(t, hn) - d[1] * hn)[~ok_D[need]]
            E[need & ~ok_E] = (model.g1_increment(t, hn) - d[2] * hn)[~ok_E[need]]
    return D, E


def _panel_sums(model: GrowthModel, t: float, d: np.ndarray, edges: np.ndarray, sig: float):
    lo, hi = edges[:-1], edges[1:]
    y = (0.5 * (hi - lo)[:, None] * (_GX[None, :] + 1.0) + lo[:, None]).ravel()
    wq = (0.5 * (hi - lo)[:, None] * _GW[None, :]).ravel()
    g1 = d[1]
    h = y / sig
    D, E = _remainders(model, t, h, d)
    with np.errstate(under="ignore", over="ignore", divide="ignore", invalid="ignore"):
        c = d[2] / (g1 * g1)
        kern = np.exp(-g1 * h - D)
        # 1 - I = int e^{-y}(1 - e^{-D})
        one_minus = np.exp(-y) * -np.expm1(-D)
        # rho - 1 = g'(t+h)/g'(t) - 1 = c y + E/g'
        rho_m1 = c * y + E / g1
        # c I - (1 - I) after one integration by parts, second order pointwise
        K = kern * (c * y * rho_m1 - E / g1)
    return (float(np.dot(wq, kern)), float(np.dot(wq, one_minus)), float(np.dot(wq, K)),
            float(g1 * h[-1] + D[-1]))


def substitution_integrals(model: GrowthModel, t: float, *, rtol: float = 1e-13,
                           max_levels: int = 6, scale: Optional[float] = None) -> dict:
    """I, 1 - I and cI - (1 - I) at t, with c = g''/g'^2.

    Panels are bisected until two levels agree to ``rtol``; ``converged`` is
    False otherwise.  With ``scale`` the substitution uses s = t + y/scale
    and only I (then equal to F f scale) is meaningful.
    """
    t = float(t)
    d = np.asarray(model.derivs(t, 5), dtype=float)
    if not (np.all(np.isfinite(d[:3])) and (d[1] > 0 or (scale is not None and d[1] >= 0))):
        raise DomainError(f"substitution needs finite g, g', g'' and g' > 0 at t = {t!r}")
    sig = float(d[1]) if scale is None else float(scale)
    edges = _PANELS
    prev = _panel_sums(model, t, d, edges, sig)
    converged = False
    for _ in range(max_levels):
        edges = np.sort(np.concatenate([edges, 0.5 * (edges[:-1] + edges[1:])]))
        cur = _panel_sums(model, t, d, edges, sig)
        errs = [abs(a - b) for a, b in zip(cur[:3], prev[:3])]
        mags = [abs(cur[0]), abs(cur[1]), abs(cur[2])]
        prev = cur
        if all(e <= rtol * m or e <= 1e-300 for e, m in zip(errs, mags)):
            converged = True
            break
    I, om, K, growth_end = prev
    if growth_end < 30.0:
        raise DomainError("tail of int 1/f does not converge (g not eventually convex)")
    with np.errstate(divide="ignore", invalid="ignore"):
        c = float(np.float64(d[2]) / np.float64(d[1]) ** 2)
    return {"g": float(d[0]), "g1": float(d[1]), "c": c,
            "I": I, "one_minus_I": om, "K": K, "converged": converged, "scale": sig}


def _log_F_scalar(model: GrowthModel, t: float) -> float:
    d = model.derivs(float(t), 5)
    # near t0 g' can be tiny or zero; the largest Taylor scale keeps the kernel O(1) wide
    sig = max((abs(float(d[k])) / math.factorial(k)) ** (1.0 / k) for k in range(1, 6)
              if math.isfinite(d[k]))
    if not sig > 0:
        raise DomainError(f"g is flat to fifth order at t = {t!r}")
    s = substitution_integrals(model, t, scale=sig)
    return -s["g"] - math.log(sig) + math.log(s["I"])


def log_F_correction(model: GrowthModel, t: float) -> float:
    """log F(t) + g(t) + log g'(t) = log I(t), free of the cancellation in the sum."""
    return math.log(substitution_integrals(model, t)["I"])


def big_F(model: GrowthModel, t):
    """log F(t), F(t) = int_t^inf ds / f(s)."""
    arr = np.asarray(t, dtype=float)
    if np.any(arr < model.t0):
        raise DomainError(f"t must be >= t0 = {model.t0!r}")
    out = np.array([_log_F_scalar(model, float(x)) for x in arr.ravel()]).reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def _t_floor(model: GrowthModel) -> float:
    return max(model.t0, model.domain_min)


def big_F_inv(model: GrowthModel, y: float) -> float:
    """t with log F(t) = y (y in log form)."""
    y = float(y)
    t_lo = _t_floor(model)
    top = _log_F_scalar(model, t_lo)
    if not y <= top:
        raise DomainError(f"log F = {y!r} above log F(t0) = {top!r}")
    if y == top:
        return t_lo

    def asym(t):
        g, g1 = model.derivs(t, 1)
        return -g - math.log(g1) - y if g1 > 0 else math.inf

    # bracket from the asymptotic inverse, then solve the exact equation
    hi = max(t_lo + 1.0, 2.0 * t_lo)
    while asym(hi) > 0:
        hi = t_lo + 2.0 * (hi - t_lo)
        if not math.isfinite(hi) or hi > 1e300:
            raise NumericalError("could not bracket F^{-1}", y=y)
    guess = bracket_root(asym, t_lo, hi).root if asym(t_lo) > 0 else t_lo

    def fn(t):
        return _log_F_scalar(model, t) - y

    # Newton on log F from the asymptotic guess: d log F / dt = -exp(-g - log F)
    t = guess
    for _ in range(8):
        yt = _log_F_scalar(model, t)
        step = (yt - y) * math.exp(float(model.g(t)) + yt)
        t_new = t + step
        if not (math.isfinite(t_new) and t_new >= t_lo):
            break
        if abs(step) <= 2e-16 * max(1.0, abs(t)):
            return t_new
        t = t_new
    # fallback: bracket and solve
    lo, up = guess, guess
    step = max(1e-3, 1e-3 * abs(guess))
    while lo > t_lo and fn(lo) < 0:
        lo = max(t_lo, lo - step)
        step *= 2.0
    step = max(1e-3, 1e-3 * abs(guess))
    while fn(up) > 0:
        up = up + step
        step *= 2.0
    if lo == up:
        return lo
    return bracket_root(fn, lo, up, rtol=1e-15).root


@dataclass(frozen=True)
class BValues:
    inv_b1: float
    inv_b2: float
    low_confidence: bool = False

    def __iter__(self):
        yield self.inv_b1
        yield self.inv_b2


def b_functionals(model: GrowthModel, t: float) -> BValues:
    """(1/B1[f](t), 1/B2[f](t)).

    1/B1 = (-log F)(1 - f'F) and 1/B2 = f'F (-log F)^2 (f f'' F / f' - 1), with
    f'F = I and f f'' F / f' - 1 = cI - (1 - I) taken from the quadrature.
    """
    s = substitution_integrals(model, t)
    mlogF = s["g"] + math.log(s["g1"]) - math.log(s["I"])
    inv1 = mlogF * s["one_minus_I"]
    inv2 = s["I"] * mlogF ** 2 * s["K"]
    return BValues(inv1, inv2, not s["converged"])


# ---------------------------------------------------------------------------
# model solution u0 and the transplanted tilde_u

def model_solution(B: float) -> GrowthModel:
    """The reference nonlinearity f0 of exponent B, solved exactly by u0."""
    if B == 1.0:
        return gr.exp_poly(w=(math.log(4.0), -2.0))
    if not B > 1.0:
        raise DomainError("B must be >= 1")
    Bp = B / (B - 1.0)
    return gr.power_exp(p=Bp, m=1.0 - 2.0 * Bp, log_scale=math.log(4.0 / (B * Bp)))


def _arr_out(x):
    return float(x) if np.ndim(x) == 0 else x


@dataclass
class SingularApprox:
    """u0, w and tilde_u = F^{-1}(w) for one model.

    Every radial quantity has a ``*_log`` form taking s = log r, because the
    matching radius can sit far below the smallest double.  The plain forms
    take r and delegate.
    """
    model: GrowthModel
    B: float
    Bp: float
    f0: GrowthModel
    s_max: float
    exact: bool = False
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def r_max(self) -> float:
        return math.exp(self.s_max)

    # closed forms in s, with L = log(1/r^2) = -2 s
    def u0_log(self, s):
        L = -2.0 * np.asarray(s, dtype=float)
        return _arr_out(np.log(L) if self.B == 1.0 else L ** (1.0 / self.Bp))

    def u0_w_log(self, s):
        """r u0'(r)."""
        L = -2.0 * np.asarray(s, dtype=float)
        if self.B == 1.0:
            return _arr_out(-2.0 / L)
        return _arr_out(-(2.0 / self.Bp) * L ** (1.0 / self.Bp - 1.0))

    def log_w_log(self, s):
        """log w, w = (B/4) r^2 (log(1/r^2) + 1)."""
        s = np.asarray(s, dtype=float)
        return _arr_out(math.log(self.B / 4.0) + 2.0 * s + np.log1p(-2.0 * s))

    def log_rw_prime_log(self, s):
        """log(r w'(r)) = log((B/2) r^2 log(1/r^2))."""
        s = np.asarray(s, dtype=float)
        return _arr_out(math.log(0.5 * self.B) + 2.0 * s + np.log(-2.0 * s))

    def _check_s(self, s):
        s = np.asarray(s, dtype=float)
        if np.any(np.isnan(s)) or np.any(s >= self.s_max):
            raise DomainError(f"log r must lie below {self.s_max!r}")
        return s

    def tilde_u_numeric_log(self, s: float) -> float:
        """F^{-1}(w) solved on the model, never short-cut."""
        s = float(s)
        if s not in self._cache:
            self._cache[s] = big_F_inv(self.model, self.log_w_log(s))
        return self._cache[s]

    def tilde_u_log(self, s):
        s = self._check_s(s)
        if self.exact:
            return self.u0_log(s)
        out = np.array([self.tilde_u_numeric_log(x) for x in s.ravel()]).reshape(s.shape)
        return _arr_out(out)

    def tilde_w_log(self, s: float) -> float:
        """r tilde_u' = -r w'(r) f(tilde_u), assembled in logs."""
        if self.exact:
            return self.u0_w_log(self._check_s(s))
        u = self.tilde_u_log(s)
        return -math.exp(self.log_rw_prime_log(s) + float(self.model.g(u)))

    # radius forms
    def u0(self, r):
        return self.u0_log(np.log(np.asarray(r, dtype=float)))

    def u0_prime(self, r):
        r = np.asarray(r, dtype=float)
        return _arr_out(self.u0_w_log(np.log(r)) / r)

    def log_w(self, r):
        return self.log_w_log(np.log(np.asarray(r, dtype=float)))

    def w(self, r):
        return np.exp(self.log_w(r))

    def w_prime(self, r):
        r = np.asarray(r, dtype=float)
        return _arr_out(0.5 * self.B * r * (-2.0 * np.log(r)))

    def tilde_u_numeric(self, r) -> float:
        return self.tilde_u_numeric_log(math.log(r))

    def tilde_u(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise DomainError("r must be positive")
        return self.tilde_u_log(np.log(r))

    def tilde_u_prime(self, r: float) -> float:
        return self.tilde_w_log(math.log(r)) / r

    def as_dict(self) -> dict:
        return {"B": self.B, "B_prime": self.Bp, "log_r_max": self.s_max, "exact": self.exact,
                "f0": self.f0.describe()}


def _same_model(a: GrowthModel, b: GrowthModel) -> bool:
    return (a.family == b.family and a.is_builtin and b.is_builtin and not a.has_weight
            and a.packed.shape == b.packed.shape and bool(np.all(a.packed == b.packed)))


def build_approx(model: GrowthModel, B: Optional[float] = None) -> SingularApprox:
    """Singular approximant; B defaults to q from :func:`growth.classify`."""
    if model.has_weight:
        raise DomainError("singular solutions are built for h = 1 only")
    if B is None:
        cls = gr.classify(model)
        if not cls.in_class:
            raise DomainError("model is outside the supported growth class")
        B = 1.0 if abs(cls.q - 1.0) < 1e-9 else cls.q
    B = float(B)
    if not B >= 1.0 or not B < math.inf:
        raise DomainError("B must lie in [1, inf)")
    Bp = math.inf if B == 1.0 else B / (B - 1.0)
    f0 = model_solution(B)
    top = _log_F_scalar(model, _t_floor(model))
    # w increases on (0, 1); stop where it leaves the range of F
    s_max = 0.0

    def over(s):
        return math.log(B / 4.0) + 2.0 * s + math.log1p(-2.0 * s) - top

    if over(-1e-12) > 0:
        lo = -1.0
        while over(lo) > 0:
            lo *= 2.0
        s_max = bracket_root(over, lo, -1e-12).root
    # u0 must stay where f0 is increasing and convex too
    t0_ref = _t_floor(f0)
    L0 = math.exp(t0_ref) if B == 1.0 else t0_ref ** Bp
    s_max = min(s_max, -0.5 * L0)
    return SingularApprox(model, B, Bp, f0, s_max, exact=_same_model(model, f0))


def remainders_log(approx: SingularApprox, s: float) -> dict:
    """R1, R2 and (log 1/r)^{1/2}(R1 + R2) at log radius s."""
    s = float(s)
    if not s < min(approx.s_max, 0.0):
        raise DomainError("log r must lie below min(log r_max, 0)")
    u = approx.tilde_u_log(s)
    u0 = approx.u0_log(s)
    b = b_functionals(approx.model, u)
    b0 = b_functionals(approx.f0, u0)
    R1 = abs(b.inv_b1 - b0.inv_b1)
    R2 = abs(b.inv_b2 - b0.inv_b2)
    return {"log_r": s, "R1": R1, "R2": R2, "weighted": math.sqrt(-s) * (R1 + R2),
            "low_confidence": b.low_confidence or b0.low_confidence}


def remainders(approx: SingularApprox, r: float) -> dict:
    """R1, R2 and the weighted sum (log 1/r)^{1/2}(R1 + R2) at r."""
    r = float(r)
    if not 0.0 < r:
        raise DomainError("r must be positive")
    out = remainders_log(approx, math.log(r))
    out["r"] = r
    return out


def matching_radius(approx: SingularApprox, threshold: float = MATCH_THRESHOLD,
                    L_max: float = 1e14, per_octave: int = 2) -> tuple:
    """log r_bar: the largest scanned radius below which the weighted remainder
    stays under ``threshold``.

    The scan is geometric in L = log(1/r^2), from the validity edge down to
    ``L_max``; returns (log r_bar, scanned rows).
    """
    s_hi = min(approx.s_max - math.log(2.0), -math.log(2.0))
    L_lo = -2.0 * s_hi
    n = max(2, int(per_octave * math.log2(L_max / L_lo)) + 1)
    grid = -0.5 * np.geomspace(L_lo, L_max, n)
    rows = []
    for s in grid:
        rows.append(remainders_log(approx, float(s)))
    ok = np.array([row["weighted"] < threshold for row in rows])
    # every radius from index j inward must pass
    tail_ok = np.flip(np.cumprod(np.flip(ok))).astype(bool)
    idx = np.flatnonzero(tail_ok)
    if idx.size == 0:
        raise MatchingError("weighted remainder never drops below threshold",
                            threshold=threshold, L_max=L_max, last=rows[-1]["weighted"])
    return float(grid[idx[0]]), rows


# ---------------------------------------------------------------------------
# outward extension

@dataclass
class SingularSolution:
    approx: SingularApprox
    log_r_bar: float
    s: np.ndarray
    V: np.ndarray
    W: np.ndarray
    E: np.ndarray
    log_R_star: float
    W_star: float
    err_estimate: float
    stats: dict = field(default_factory=dict)

    @property
    def r_bar(self) -> float:
        return math.exp(self.log_r_bar)

    @property
    def R_star(self) -> float:
        return math.exp(self.log_R_star)

    @property
    def lambda_star(self) -> float:
        return math.exp(2.0 * self.log_R_star)

    @property
    def boundary_slope(self) -> float:
        """V'(R*)."""
        return self.W_star / self.R_star

    @property
    def r(self) -> np.ndarray:
        return np.exp(self.s)

    @property
    def V_prime(self) -> np.ndarray:
        # r underflows to 0 deep inside the matched region
        with np.errstate(divide="ignore", over="ignore"):
            return self.W / self.r

    def _dense(self, s):
        s = np.asarray(s, dtype=float)
        i = np.clip(np.searchsorted(self.s, s, side="right") - 1, 0, self.s.size - 2)
        H = self.s[i + 1] - self.s[i]
        b = _hermite5((s - self.s[i]) / H)
        return (b[0] * self.V[i] + b[1] * H * self.W[i] - b[2] * H * H * self.E[i]
                + b[3] * self.V[i + 1] + b[4] * H * self.W[i + 1]
                - b[5] * H * H * self.E[i + 1])

    def value_log(self, s):
        """V at log radius s: tilde_u inside r_bar, the outward run beyond."""
        s = np.asarray(s, dtype=float)
        flat = s.ravel()
        out = np.empty(flat.size)
        inner = flat <= self.s[0]
        if np.any(inner):
            out[inner] = self.approx.tilde_u_log(flat[inner])
        if np.any(~inner):
            x = flat[~inner]
            v = self._dense(np.minimum(x, self.s[-1]))
            # past the last node (v_end > 0 only): linear in log r
            out[~inner] = np.where(x > self.s[-1], self.V[-1] + self.W[-1] * (x - self.s[-1]), v)
        return _arr_out(out.reshape(s.shape))

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore"):
            return self.value_log(np.log(r))

    def ode_residual(self) -> float:
        """max |V_ss + r^2 f(V)| / (r^2 f(V)) at step midpoints on [r_bar, R*].

        Centred second differences in s, spaced at 1% of the local step or
        more where rounding would otherwise dominate.  When f is singular at
        V = 0 the estimate is limited by the interpolant in the last few
        decades before R* and grows there.
        """
        H = np.diff(self.s)
        mid = 0.5 * (self.s[:-1] + self.s[1:])
        v0 = self.value_log(mid)
        with np.errstate(over="ignore", under="ignore"):
            src = np.exp(2.0 * mid + self.approx.model.g(v0))
        # spacing floor keeps rounding in the second difference below 1e-7 of the source
        floor = np.sqrt(4.0 * 2.2e-16 * np.abs(v0) / (1e-7 * np.maximum(src, 1e-300)))
        # and the stencil points themselves must be representable in s
        floor = np.maximum(floor, 1e4 * np.spacing(np.abs(mid)))
        # the stencil stays on [r_bar, R*]: below r_bar V is the approximant, not a solution
        room = 0.5 * np.minimum(self.s[-1] - mid, mid - self.s[0])
        # steps too short for an admissible spacing (next to r_bar, or where a
        # singular f at V = 0 packs the steps tighter than rounding allows) are skipped
        keep = (floor <= room) & (floor <= 4.0 * H)
        mid, H, v0, src, floor, room = (a[keep] for a in (mid, H, v0, src, floor, room))
        hs = np.minimum(np.maximum(0.01 * H, floor), room)
        vm, vp = self.value_log(mid - hs), self.value_log(mid + hs)
        vss = (vp - 2.0 * v0 + vm) / hs ** 2
        return float(np.max(np.abs(vss + src) / np.maximum(src, 1e-300)))

    def samples(self) -> dict:
        return {"log_r": self.s, "r": self.r, "V": self.V, "V_prime": self.V_prime}

    def summary(self) -> dict:
        return {
            "B": self.approx.B, "B_prime": self.approx.Bp,
            "log_r_bar": self.log_r_bar, "r_bar": self.r_bar,
            "R_star": self.R_star, "lambda_star": self.lambda_star,
            "boundary_slope": self.boundary_slope, "disc_slope": self.W_star,
            "error_estimate": self.err_estimate,
            "steps": self.stats.get("steps"),
        }


def extend(approx: SingularApprox, r_bar: Optional[float] = None,
           config: Optional[SolverConfig] = None, *, log_r_bar: Optional[float] = None
           ) -> SingularSolution:
    """Continue tilde_u from r_bar outward until it vanishes at R*.

    ``log_r_bar`` takes precedence over ``r_bar``; with neither, the matching
    radius is chosen by :func:`matching_radius`.  The step cap in s is lifted
    because the start may lie thousands of units below s = 0.
    """
    cfg = config or SolverConfig()
    cfg = dataclasses.replace(cfg, hmax_abs=math.inf)
    if log_r_bar is None:
        log_r_bar = math.log(r_bar) if r_bar is not None else matching_radius(approx)[0]
    s_bar = float(log_r_bar)
    u = float(approx.tilde_u_log(s_bar))
    w = float(approx.tilde_w_log(s_bar))
    if not (w < 0 and u > 0):
        raise MatchingError("tilde_u is not positive and decreasing at r_bar",
                            log_r_bar=s_bar, value=u, slope=w)
    try:
        tr = integrate_outward(approx.model, s_bar, u, w, cfg)
    except NumericalError as exc:
        raise MatchingError("outward run did not reach V = 0; r_bar too large?",
                            log_r_bar=s_bar, cause=str(exc), **exc.diagnostics) from exc
    if np.any(tr.w >= 0) or np.any(np.diff(tr.v) >= 0):
        raise MatchingError("V fails to decrease on [r_bar, R*]", log_r_bar=s_bar)
    return SingularSolution(approx, s_bar, tr.s, tr.v, tr.w, tr.E, math.log(tr.r0), tr.w0,
                            tr.err_estimate, dict(tr.stats))


# ---------------------------------------------------------------------------
# condition (C)

@dataclass(frozen=True)
class ConditionCReport:
    passed: bool
    lower: dict
    upper: Optional[float]
    beta: float
    window: tuple
    violations: dict

    def as_dict(self) -> dict:
        return {"passed": self.passed, "lower": {str(k): v for k, v in self.lower.items()},
                "upper": self.upper, "beta": self.beta, "window": list(self.window),
                "violations": {str(k): v for k, v in self.violations.items()}}


def _largest_holding(r: np.ndarray, holds: np.ndarray):
    """Largest grid r such that the inequality holds at every grid point <= r."""
    # r ascending
    prefix = np.cumprod(holds).astype(bool)
    if not prefix[0]:
        return None
    return float(r[np.flatnonzero(prefix)[-1]])


def check_condition_C(U: Callable, alphas: Sequence[float], beta: float,
                      r_window: tuple, *, model: GrowthModel, samples: int = 400,
                      log: bool = False) -> ConditionCReport:
    """Lower bounds alpha log(1/r) <= g(U) and upper bound g(U) + log g'(U) <= 2 log(1/r) + beta.

    The window is scanned on a log grid; for each bound the report carries
    the largest r_bar below which it holds throughout, or the violating
    radius closest to 0 when it fails at the small end.  With ``log=True``
    the window, the sampler argument and the reported radii are log r.
    """
    lo, hi = float(r_window[0]), float(r_window[1])
    if not (lo < hi if log else 0 < lo < hi):
        raise DomainError("need 0 < r_lo < r_hi")
    for a in alphas:
        if not 0.0 < a < 2.0:
            raise DomainError("alpha values must lie in (0, 2)")
    r = np.linspace(lo, hi, samples) if log else np.geomspace(lo, hi, samples)
    u = np.asarray(U(r), dtype=float)
    if np.any(~np.isfinite(u)) or np.any(u <= 0):
        raise DomainError("U must be finite and positive on the window")
    d = model.derivs(u, 1)
    gu, g1u = d[..., 0], d[..., 1]
    L = -r if log else -np.log(r)
    lower, viol = {}, {}
    for a in alphas:
        holds = a * L <= gu
        rb = _largest_holding(r, holds)
        lower[float(a)] = rb
        if rb is None:
            viol[float(a)] = float(r[np.flatnonzero(~holds)[0]])
    with np.errstate(invalid="ignore", divide="ignore"):
        holds = gu + np.log(g1u) <= 2.0 * L + beta
    upper = _largest_holding(r, holds)
    if upper is None:
        viol["upper"] = float(r[np.flatnonzero(~holds)[0]])
    passed = upper is not None and all(v is not None for v in lower.values())
    return ConditionCReport(passed, lower, upper, float(beta), (lo, hi), viol)


# ---------------------------------------------------------------------------
# derivative cascade g_1 = 1/g', g_{i+1} = g_i' / g'

def _series_recip(a):
    n = len(a)
    b = [0.0] * n
    b[0] = 1.0 / a[0]
    for k in range(1, n):
        b[k] = -sum(a[j] * b[k - j] for j in range(1, k + 1)) / a[0]
    return b


def _series_mul(a, b):
    n = min(len(a), len(b))
    return [sum(a[j] * b[k - j] for j in range(k + 1)) for k in range(n)]


def _series_diff(a):
    return [(k + 1) * a[k + 1] for k in range(len(a) - 1)]


def derivative_cascade(model: GrowthModel, t: float) -> np.ndarray:
    """g_1 .. g_5 at t, from Taylor jets of g' (needs g through order 5)."""
    d = np.asarray(model.derivs(float(t), 5), dtype=float)
    jet = [d[k + 1] / math.factorial(k) for k in range(5)]  # g'(t+h) coefficients
    inv = _series_recip(jet)
    cur = inv
    out = [cur[0]]
    for _ in range(4):
        cur = _series_mul(_series_diff(cur), inv)
        out.append(cur[0])
    return np.array(out)


def cascade_scaled(model: GrowthModel, t: float) -> np.ndarray:
    """g_i(t) t^{ip-1} for power families, g_i(t) e^{it} for e^t + poly."""
    gi = derivative_cascade(model, t)
    i = np.arange(1, 6)
    if model.family == Family.POWER_EXP:
        p = model.param("p")
        return gi * np.exp((i * p - 1.0) * math.log(t))
    if model.family == Family.EXP_POLY:
        return gi * np.exp(i * t)
    raise DomainError("cascade scaling defined for power_exp and exp_poly families")
