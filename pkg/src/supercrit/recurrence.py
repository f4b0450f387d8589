"""Energy recurrence for the bubble tower.

Starting from a_1 = 2, delta_1 = eta_1 = 1, each step solves a scalar
equation for the ratio of consecutive heights and updates the energy.  Both
branches are solved in the variable e = 1 - ratio, divided through by e so
that the trivial root at ratio 1 disappears and the bracket is (0, 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericalError
from .roots import bracket_root

__all__ = ["RecurrenceRow", "RecurrenceTable", "build_table", "alpha", "verify_table",
           "TableReport", "conjugate"]

P_INF_SWITCH = 1e6
_EPS = 1e-15


def conjugate(q: float) -> float:
    """Hoelder conjugate p of q (inf for q = 1)."""
    return math.inf if q == 1.0 else q / (q - 1.0)


@dataclass(frozen=True)
class RecurrenceRow:
    k: int
    a: float
    delta: float
    eta: float
    eta_tilde: float
    delta_star: float
    eta_star: float
    alpha_star: float
    residual: float


@dataclass(frozen=True)
class RecurrenceTable:
    q: float
    p: float
    rows: tuple = field(repr=False)

    @property
    def exp_branch(self) -> bool:
        """True when the multiple-exponential (q = 1) formulas are in use."""
        return self.p == math.inf

    def __len__(self):
        return len(self.rows)

    def row(self, k: int) -> RecurrenceRow:
        if not 1 <= k <= len(self.rows):
            raise DomainError(f"k = {k} outside 1..{len(self.rows)}")
        return self.rows[k - 1]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows])

    def as_records(self):
        return [r.__dict__.copy() for r in self.rows]


def _step_power(a: float, p: float, tol: float):
    A = 2.0 * p / (2.0 + a)

    def psi(e):
        return A + math.expm1(p * math.log1p(-e)) / e

    res = bracket_root(psi, _EPS, 1.0 - _EPS)
    e = res.root
    d = 1.0 - e
    resid = abs(A * e - 1.0 + d ** p)
    if resid > tol:
        raise NumericalError("recurrence root residual above tolerance", residual=resid, a=a)
    a_next = -a - (2.0 + a) * math.expm1((p - 1.0) * math.log1p(-e))
    return d, a_next, resid


def _step_exp(a: float, tol: float):
    A = 2.0 / (2.0 + a)

    def psi(e):
        return -A * math.log1p(-e) / e - 1.0

    res = bracket_root(psi, _EPS, 1.0 - _EPS)
    e = res.root
    y = 1.0 - e
    resid = abs(-A * math.log(y) - 1.0 + y)
    if resid > tol:
        raise NumericalError("recurrence root residual above tolerance", residual=resid, a=a)
    return y, 2.0 - y * (2.0 + a), resid


def _derived(a, delta, eta, p):
    if p == math.inf:
        return 1.0, math.exp(-a / 2.0) * eta, (2.0 + a) * math.exp(-a / 2.0)
    c = 1.0 - a / (2.0 * (p - 1.0))
    ds = c * delta
    return ds, ds ** p, (2.0 + a) * c ** (p - 1.0)


def build_table(q: float, k_max: int, tol: float = 1e-12) -> RecurrenceTable:
    """Rows k = 1..k_max of (a, delta, eta, eta~, delta*, eta*, alpha*)."""
    if not (1.0 <= q < 2.0) or math.isnan(q):
        raise DomainError(f"q = {q!r} outside [1, 2)")
    if int(k_max) != k_max or k_max < 1:
        raise DomainError("k_max must be a positive integer")
    if not tol > 0:
        raise DomainError("tol must be positive")
    p = conjugate(q)
    if p > P_INF_SWITCH:
        p = math.inf
    a, delta, eta = 2.0, 1.0, 1.0
    resid = 0.0
    rows = []
    for k in range(1, int(k_max) + 1):
        if p == math.inf:
            eta_t = eta
        else:
            eta_t = delta ** (p - 1.0)  # eta^(1/q) = delta^(p/q)
        ds, es, al = _derived(a, delta, eta, p)
        rows.append(RecurrenceRow(k, a, delta, eta, eta_t, ds, es, al, resid))
        if k == k_max:
            break
        if p == math.inf:
            y, a_next, resid = _step_exp(a, tol)
            eta = eta * y
        else:
            d, a_next, resid = _step_power(a, p, tol)
            delta = delta * d
            eta = delta ** p
        a = a_next
    return RecurrenceTable(float(q), p, tuple(rows))


def alpha(table: RecurrenceTable, k: int, x: float) -> float:
    """Curve exponent alpha_{q,k}(x) on [delta_{k+1}, delta_k] (eta for q = 1)."""
    if k >= len(table):
        raise DomainError("alpha needs row k + 1; build a longer table")
    row, nxt = table.row(k), table.row(k + 1)
    if table.exp_branch:
        lo, hi, ref = nxt.eta, row.eta, row.eta
    else:
        lo, hi, ref = nxt.delta, row.delta, row.delta
    slack = 4e-16 * hi
    if not (lo - slack <= x <= hi + slack):
        raise DomainError(f"x = {x!r} outside [{lo!r}, {hi!r}]")
    s = x / ref
    if table.exp_branch:
        return 2.0 * s / (1.0 - 2.0 / (2.0 + row.a) * math.log(1.0 / s))
    return 2.0 * s ** table.p / (1.0 - 2.0 * table.p / (2.0 + row.a) * (1.0 - s))


@dataclass(frozen=True)
class TableReport:
    identity_residual: np.ndarray
    partial_sums: np.ndarray
    a_decreasing: bool
    ratio_decreasing: bool
    ratios_in_unit: bool
    alpha_star_increasing: bool

    @property
    def ok(self) -> bool:
        return (self.a_decreasing and self.ratio_decreasing and self.ratios_in_unit
                and self.alpha_star_increasing)


def verify_table(table: RecurrenceTable) -> TableReport:
    """Identity residuals, monotonicity flags and partial sums S_k."""
    a = table.column("a")
    et = table.column("eta_tilde")
    # eta~_k * sum_i 2 a_i / eta~_i, accumulated with math.fsum per row
    terms = 2.0 * a / et
    resid = np.empty(a.size)
    for i in range(a.size):
        resid[i] = abs(et[i] * math.fsum(terms[: i + 1]) - (2.0 + a[i]))
    seq = table.column("eta") if table.exp_branch else table.column("delta")
    ratios = seq[1:] / seq[:-1]
    al = table.column("alpha_star")
    return TableReport(
        identity_residual=resid,
        partial_sums=np.cumsum(a),
        a_decreasing=bool(np.all(np.diff(a) < 0)),
        ratio_decreasing=bool(np.all(np.diff(seq) < 0)),
        ratios_in_unit=bool(np.all((ratios > 0) & (ratios < 1))),
        alpha_star_increasing=bool(np.all(np.diff(al) > 0) and np.all(al < 2)),
    )
