"""Generalised exponential nonlinearities f = exp(g).

Every quantity is carried in log space: ``model.g(t)`` is log f(t) and the
solvers only ever exponentiate balanced combinations such as
``2 log r + g(v)``.  Built-in families have analytic derivatives up to
order five; custom models supply their own callables.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import _gkernels as gk
from .errors import DomainError

__all__ = [
    "Family",
    "GrowthModel",
    "GrowthClass",
    "H2Report",
    "pure_exp",
    "power_exp",
    "iter_exp",
    "exp_poly",
    "custom",
    "model_from_spec",
    "eval_g",
    "eval_g_deriv",
    "classify",
    "check_H2",
    "default_probe",
]


class Family(str, enum.Enum):
    PURE_EXP = "pure_exp"
    POWER_EXP = "power_exp"
    ITER_EXP = "iter_exp"
    EXP_POLY = "exp_poly"
    CUSTOM = "custom"


@dataclass(frozen=True)
class CustomSpec:
    """User callables for a custom model.

    ``derivs[k-1]`` is the k-th derivative of g.  At least g' and g'' are
    required; missing higher orders are central-differenced from the highest
    one supplied.  ``kernel`` may be a numba-compiled ``(params, t) ->
    (g, g')`` which lets the shooting kernel stay compiled.
    """

    g: Callable[[float], float]
    derivs: tuple
    kernel: Optional[Callable] = None
    domain_min: float = 0.0


@dataclass(frozen=True)
class GrowthModel:
    family: Family
    params: tuple = ()
    t0: float = 0.0
    weight: tuple = (1.0,)
    custom_spec: Optional[CustomSpec] = field(default=None, compare=False, repr=False)

    # -- construction helpers ------------------------------------------
    def __post_init__(self):
        object.__setattr__(self, "_packed", self._pack())
        w = tuple(float(c) for c in self.weight)
        object.__setattr__(self, "weight", w)
        r = np.linspace(0.0, 1.0, 257)
        if np.any(np.polyval(w[::-1], r) <= 0.0):
            raise DomainError("weight h must be positive on [0, 1]")

    def _pack(self):
        p = dict(self.params)
        if self.family is Family.PURE_EXP:
            return np.array([gk.PURE_EXP], dtype=float)
        if self.family is Family.POWER_EXP:
            return np.array([gk.POWER_EXP, p["log_scale"], p["m"], p["p"],
                             p["c"], p["pbar"]], dtype=float)
        if self.family is Family.ITER_EXP:
            return np.array([gk.ITER_EXP, p["depth"], p["m"], p["l"]], dtype=float)
        if self.family is Family.EXP_POLY:
            w = [p[f"w{i}"] for i in range(len(self.params))]
            return np.array([gk.EXP_POLY, len(w), *w], dtype=float)
        return np.array([-1.0])

    @property
    def packed(self) -> np.ndarray:
        """Flat parameter vector understood by the compiled kernels."""
        return self._packed

    @property
    def is_builtin(self) -> bool:
        return self.family is not Family.CUSTOM

    @property
    def has_weight(self) -> bool:
        return self.weight != (1.0,)

    def param(self, name):
        return dict(self.params)[name]

    @property
    def domain_min(self) -> float:
        """Lower end of the set where g is finite (open if g blows up there)."""
        if self.family is Family.ITER_EXP and self.param("l") != 0.0:
            return 1.0
        if self.family is Family.CUSTOM:
            return self.custom_spec.domain_min
        return 0.0

    def with_t0(self, t0: float) -> "GrowthModel":
        return GrowthModel(self.family, self.params, float(t0), self.weight, self.custom_spec)

    def with_weight(self, coeffs: Sequence[float]) -> "GrowthModel":
        return GrowthModel(self.family, self.params, self.t0, tuple(coeffs), self.custom_spec)

    def describe(self) -> dict:
        out = {"family": self.family.value}
        out.update({k: v for k, v in self.params})
        out["t0"] = self.t0
        if self.has_weight:
            out["weight"] = list(self.weight)
        return out

    # -- evaluation (no domain checks; see eval_g for the checked form) --
    def g(self, t):
        t = np.asarray(t, dtype=float)
        if self.is_builtin:
            out = gk.g_value_array(self._packed, np.atleast_1d(t).ravel())
            return out.reshape(t.shape) if t.ndim else float(out[0])
        fn = np.vectorize(self.custom_spec.g, otypes=[float])
        res = fn(t)
        return res if t.ndim else float(res)

    def derivs(self, t, nmax: int = 5) -> np.ndarray:
        """Array of shape ``t.shape + (nmax+1,)`` holding g, g', ..., g^(nmax)."""
        t = np.asarray(t, dtype=float)
        flat = np.atleast_1d(t).ravel()
        if self.is_builtin:
            out = gk.g_derivs_array(self._packed, flat, nmax)[:, : nmax + 1]
        else:
            out = np.empty((flat.size, nmax + 1))
            for i, ti in enumerate(flat):
                out[i] = _custom_derivs(self.custom_spec, ti, nmax)
        return out.reshape(t.shape + (nmax + 1,))

    def g_prime(self, t):
        return self.derivs(t, 1)[..., 1]

    def log_f_prime(self, t):
        """log f'(t) = g(t) + log g'(t)."""
        d = self.derivs(t, 1)
        return d[..., 0] + np.log(d[..., 1])

    def f(self, t):
        """f(t) itself; overflows to inf for large g, use only for small t."""
        with np.errstate(over="ignore"):
            return np.exp(self.g(t))

    def g_increment(self, t, h):
        """g(t+h) - g(t) evaluated without cancellation."""
        if self.is_builtin:
            return _vec2(gk.g_incr, gk.g_incr_array, self._packed, t, h)
        return self.g(np.asarray(t) + h) - self.g(t)

    def g1_increment(self, t, h):
        """g'(t+h) - g'(t) evaluated without cancellation."""
        if self.is_builtin:
            return _vec2(gk.g1_incr, gk.g1_incr_array, self._packed, t, h)
        return self.g_prime(np.asarray(t) + h) - self.g_prime(t)

    def log_weight(self, r):
        r = np.asarray(r, dtype=float)
        return np.log(np.polyval(self.weight[::-1], r))

    def closed_form_class(self) -> Optional[tuple]:
        """(q, p) known analytically for built-in families, else None."""
        if self.family is Family.POWER_EXP:
            p = self.param("p")
            return (p / (p - 1.0), p) if p > 1.0 else None
        if self.family in (Family.ITER_EXP, Family.EXP_POLY):
            return (1.0, math.inf)
        return None


def _vec2(fn, fn_array, params, t, h):
    t_arr, h_arr = np.broadcast_arrays(np.asarray(t, float), np.asarray(h, float))
    if t_arr.ndim == 0:
        return float(fn(params, float(t_arr), float(h_arr)))
    flat = fn_array(params, np.ascontiguousarray(t_arr).ravel(), np.ascontiguousarray(h_arr).ravel())
    return flat.reshape(t_arr.shape)


def _custom_derivs(spec: CustomSpec, t: float, nmax: int) -> np.ndarray:
    out = np.empty(nmax + 1)
    out[0] = spec.g(t)
    have = len(spec.derivs)
    for k in range(1, nmax + 1):
        if k <= have:
            out[k] = spec.derivs[k - 1](t)
            continue
        # central differences of the highest analytic order supplied
        top = spec.derivs[have - 1]
        extra = k - have
        h = 1e-3 * max(1.0, abs(t))
        stencil = np.array([math.comb(extra, j) * (-1) ** j for j in range(extra + 1)])
        pts = t + h * (extra / 2.0 - np.arange(extra + 1))
        out[k] = float(np.dot(stencil, [top(x) for x in pts])) / h ** extra
    return out


# -- constructors --------------------------------------------------------

def _finalize(model: GrowthModel, t0: Optional[float]) -> GrowthModel:
    if t0 is None:
        t0 = find_t0(model)
    return model.with_t0(t0)


def pure_exp(t0: Optional[float] = 0.0, weight=(1.0,)) -> GrowthModel:
    """f(t) = e^t (the Gelfand nonlinearity, outside the supercritical class)."""
    return GrowthModel(Family.PURE_EXP, (), float(t0 if t0 is not None else 0.0), tuple(weight))


def power_exp(p: float = 3.0, m: float = 0.0, c: float = 0.0, pbar: float = 0.0,
              log_scale: float = 0.0, t0: Optional[float] = None, weight=(1.0,)) -> GrowthModel:
    """f(t) = e^L t^m exp(t^p + c t^pbar)."""
    if not p > 0.0:
        raise DomainError("power_exp needs p > 0")
    if c != 0.0 and not pbar < p:
        raise DomainError("power_exp needs pbar < p")
    params = (("log_scale", float(log_scale)), ("m", float(m)), ("p", float(p)),
              ("c", float(c)), ("pbar", float(pbar)))
    return _finalize(GrowthModel(Family.POWER_EXP, params, 0.0, tuple(weight)), t0)


def iter_exp(depth: int = 1, m: float = 1.0, l: float = 0.0,
             t0: Optional[float] = None, weight=(1.0,)) -> GrowthModel:
    """f(t) = exp(exp_depth(t^m (log t)^l)); depth 1, m 1, l 0 is e^{e^t}."""
    if int(depth) != depth or depth < 1:
        raise DomainError("iter_exp needs an integer depth >= 1")
    if not m > 0.0:
        raise DomainError("iter_exp needs m > 0")
    params = (("depth", float(depth)), ("m", float(m)), ("l", float(l)))
    return _finalize(GrowthModel(Family.ITER_EXP, params, 0.0, tuple(weight)), t0)


def exp_poly(w: Sequence[float] = (), t0: Optional[float] = None, weight=(1.0,)) -> GrowthModel:
    """f(t) = exp(e^t + w(t)) with w(t) = sum_i w[i] t^i."""
    params = tuple((f"w{i}", float(c)) for i, c in enumerate(w))
    return _finalize(GrowthModel(Family.EXP_POLY, params, 0.0, tuple(weight)), t0)


def custom(g, derivs, *, kernel=None, t0: Optional[float] = None, domain_min: float = 0.0,
           weight=(1.0,)) -> GrowthModel:
    """Model from user callables ``g`` and ``derivs = (g', g'', ...)``."""
    derivs = tuple(derivs)
    if len(derivs) < 2:
        raise DomainError("custom models must supply at least g' and g''")
    spec = CustomSpec(g, derivs, kernel, float(domain_min))
    return _finalize(GrowthModel(Family.CUSTOM, (), 0.0, tuple(weight), spec), t0)


def model_from_spec(spec: dict) -> GrowthModel:
    """Build a built-in model from a config mapping ``{"family": ..., ...}``."""
    spec = dict(spec)
    fam = Family(spec.pop("family"))
    t0 = spec.pop("t0", None)
    weight = tuple(spec.pop("weight", (1.0,)))
    if fam is Family.PURE_EXP:
        return pure_exp(t0=t0 if t0 is not None else 0.0, weight=weight, **spec)
    if fam is Family.POWER_EXP:
        return power_exp(t0=t0, weight=weight, **spec)
    if fam is Family.ITER_EXP:
        return iter_exp(t0=t0, weight=weight, **spec)
    if fam is Family.EXP_POLY:
        return exp_poly(t0=t0, weight=weight, **spec)
    raise DomainError("custom models cannot be built from a config block")


# -- t0 ------------------------------------------------------------------

def _convex_increasing(model: GrowthModel, t) -> np.ndarray:
    with np.errstate(all="ignore"):
        d = model.derivs(t, 2)
    ok = np.isfinite(d).all(axis=-1)
    return ok & (d[..., 1] > 0) & (d[..., 2] > 0)


def find_t0(model: GrowthModel, t_high: float = 50.0, n: int = 2001) -> float:
    """Smallest t beyond which g' > 0 and g'' > 0 on a probe scan."""
    lo = model.domain_min
    grid = lo + np.geomspace(1e-9, t_high, n)
    with np.errstate(all="ignore"):
        grid = grid[np.isfinite(model.derivs(grid, 2)).all(axis=-1)]
    good = _convex_increasing(model, grid)
    if good.all():
        return float(lo)
    bad = np.nonzero(~good)[0]
    last = bad[-1]
    if last == grid.size - 1:
        return math.inf
    a, b = grid[last], grid[last + 1]
    for _ in range(80):
        mid = 0.5 * (a + b)
        if _convex_increasing(model, mid):
            b = mid
        else:
            a = mid
    return float(b)


# -- checked evaluation ----------------------------------------------------

def _check_domain(model: GrowthModel, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < model.t0) or np.any(np.isnan(t)):
        raise DomainError(f"t below t0 = {model.t0!r}")
    return t


def eval_g(model: GrowthModel, t):
    """g(t) = log f(t) for t >= t0."""
    return model.g(_check_domain(model, t))


def eval_g_deriv(model: GrowthModel, t, order: int):
    """k-th derivative of g, 1 <= order <= 5."""
    if not 0 <= order <= 5:
        raise DomainError("derivative order must be between 0 and 5")
    return model.derivs(_check_domain(model, t), order)[..., order]


# -- classification --------------------------------------------------------

@dataclass(frozen=True)
class GrowthClass:
    q: Optional[float]
    p: float
    residual: float
    in_class: bool
    method: str
    diagnostic: str = ""

    def as_dict(self) -> dict:
        return {
            "q": self.q,
            "p": "inf" if self.p == math.inf else self.p,
            "residual": self.residual,
            "in_class": self.in_class,
            "method": self.method,
            "diagnostic": self.diagnostic,
        }


def default_probe(model: GrowthModel, n: int = 64) -> np.ndarray:
    """Geometric probe (in t - domain_min) spanning three or more decades."""
    base = model.domain_min
    grid = base + np.geomspace(1e-6, 1e150, 8192)
    with np.errstate(all="ignore"):
        d = model.derivs(grid, 2)
        fine = np.isfinite(d).all(axis=-1)
    fine &= grid >= model.t0
    if not fine.any():
        raise DomainError("no finite probe range for this model")
    j = np.nonzero(fine)[0][-1]
    hi = grid[j]
    if j + 1 < grid.size:
        b = grid[j + 1]
        for _ in range(60):
            mid = 0.5 * (hi + b)
            with np.errstate(all="ignore"):
                ok = np.isfinite(model.derivs(mid, 2)).all()
            hi, b = (mid, b) if ok else (hi, mid)
    hi -= base
    lo = max(model.t0 - base, 0.0) + 1e-3
    lo = min(lo, hi / 1e3)
    if base + lo < model.t0:
        raise DomainError("cannot place a three-decade probe above t0")
    return base + np.geomspace(lo, hi, n)


def _tail_fit(y, g):
    # corrections seen across the built-in families: powers of 1/log g for
    # iterated exponentials, 1/(log g log log g ...) for t g'/g, 1/g otherwise
    lg = np.log(g)
    llg = np.log(lg)
    cols = [np.ones_like(g), 1.0 / lg, 1.0 / lg ** 2, 1.0 / (lg * llg), 1.0 / g]
    if np.all(llg > 1.0):
        cols.append(1.0 / (lg * llg * np.log(llg)))
    basis = np.column_stack(cols)
    scale = np.abs(basis).max(axis=0)
    use = scale > 1e-12
    basis = basis[:, use] / scale[use]
    coef, *_ = np.linalg.lstsq(basis, y, rcond=None)
    coef = coef / scale[use]
    return float(coef[0])


def classify(model: GrowthModel, probe=None, *, method: str = "auto",
             tol: float = 1e-3) -> GrowthClass:
    """Estimate (q, p) with q = lim g'^2/(g g'') and p = lim t g'/g.

    ``method="auto"`` uses the closed form for built-in families and a tail
    extrapolation otherwise; ``"numeric"`` forces the extrapolation.
    """
    if probe is None:
        probe = default_probe(model)
    probe = np.asarray(probe, dtype=float)
    if probe.size < 8 or np.any(np.diff(probe) <= 0):
        raise DomainError("probe must be strictly increasing with >= 8 points")
    off = probe - model.domain_min
    if off[0] <= 0 or off[-1] / off[0] < 1e3 * (1 - 1e-12):
        raise DomainError("probe must span at least three decades")
    if np.any(probe < model.t0):
        raise DomainError("probe points must lie above t0")

    with np.errstate(all="ignore"):
        d = model.derivs(probe, 2)
    g, g1, g2 = d[:, 0], d[:, 1], d[:, 2]
    if np.any(g2 <= 0):
        bad = probe[np.nonzero(g2 <= 0)[0][0]]
        return GrowthClass(None, math.nan, math.nan, False, method,
                           f"g'' <= 0 at t = {bad!r}")

    closed = model.closed_form_class() if method != "numeric" else None
    if closed is not None:
        q, p = closed
        resid = abs((0.0 if p == math.inf else 1.0 / p) + 1.0 / q - 1.0)
        ok = 1.0 - tol <= q < 2.0
        return GrowthClass(q, p, resid, ok, "closed-form",
                           "" if ok else f"q = {q!r} outside [1, 2)")

    keep = np.isfinite(g) & (g > 16.0) & np.isfinite(g1) & np.isfinite(g2)
    if keep.sum() < 8:
        return GrowthClass(None, math.nan, math.nan, False, "numeric",
                           "fewer than 8 usable probe points")
    g, g1, g2, t = g[keep], g1[keep], g2[keep], probe[keep]
    tail = slice(max(0, g.size - max(8, g.size // 2)), None)
    qr = np.exp(2 * np.log(g1) - np.log(g) - np.log(g2))
    inv_p = np.exp(np.log(g) - np.log(t) - np.log(g1))
    q = _tail_fit(qr[tail], g[tail])
    ip = _tail_fit(inv_p[tail], g[tail])
    if ip < tol:
        ip = 0.0
    p = math.inf if ip == 0.0 else 1.0 / ip
    resid = abs(ip + 1.0 / q - 1.0)
    ok = 1.0 - tol <= q < 2.0
    return GrowthClass(q, p, resid, ok, "numeric",
                       "" if ok else f"q = {q!r} outside [1, 2)")


# -- (H2) --------------------------------------------------------------------

@dataclass(frozen=True)
class H2Report:
    passed: bool
    infimum: float
    argmin: float


def check_H2(model: GrowthModel, t_grid=None, threshold: float = 1e-12) -> H2Report:
    """Numerical infimum of f(t)/t over (0, t_high]."""
    if t_grid is None:
        t_grid = np.geomspace(1e-8, 50.0, 4001)
    t = np.asarray(t_grid, dtype=float)
    t = t[t > 0]
    with np.errstate(all="ignore"):
        lr = model.g(t) - np.log(t)
        g_zero = model.g(np.array([0.0]))[0] if model.domain_min == 0.0 else -math.inf
    lr = np.where(np.isnan(lr), np.inf, lr)
    i = int(np.argmin(lr))
    inf_log, arg = float(lr[i]), float(t[i])
    if not g_zero > -math.inf:
        # f(0) = 0: f(t)/t tends to f'(0+), probe it far below the grid
        eps = 1e-150
        with np.errstate(all="ignore"):
            lim = float(model.g(np.array([eps]))[0] - math.log(eps))
        if lim < inf_log:
            inf_log, arg = lim, 0.0
    infimum = math.exp(inf_log) if inf_log > -745 else 0.0
    return H2Report(infimum > threshold, infimum, arg)
