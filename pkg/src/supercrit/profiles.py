"""Closed-form limit profiles z_k of the Liouville equation -z'' - z'/r = e^z.

With x = log b + a log r and sigma = 1/(1 + e^{-x}) every quantity is a
rational function of sigma, which keeps the evaluation finite for the huge
b_k and tiny a_k that appear deep in the tower.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, log_expit

from .errors import DomainError
from .recurrence import RecurrenceTable

__all__ = ["LimitProfile", "profile_from_table", "z", "z_prime", "z_double_prime",
           "ode_residual", "mass", "r2_exp_z", "peak", "sample_profile"]


@dataclass(frozen=True)
class LimitProfile:
    k: int
    a: float

    def __post_init__(self):
        if not 0.0 < self.a <= 2.0:
            raise DomainError(f"a = {self.a!r} outside (0, 2]")

    @property
    def log_b(self) -> float:
        return self.a * (0.5 * math.log(2.0) - math.log(self.a))

    @property
    def b(self) -> float:
        return math.exp(self.log_b)

    @property
    def center(self) -> float:
        """Normalisation radius a/sqrt(2), where z vanishes."""
        return self.a / math.sqrt(2.0)

    def _x(self, r):
        with np.errstate(divide="ignore"):
            return self.log_b + self.a * np.log(r)


def profile_from_table(table: RecurrenceTable, k: int) -> LimitProfile:
    return LimitProfile(k, table.row(k).a)


def _radius(prof: LimitProfile, r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(np.isnan(r)):
        raise DomainError("r must be non-negative")
    if np.any(r == 0) and prof.a < 2.0:
        raise DomainError("z_k is singular at r = 0 for k > 1")
    return r


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def z(prof: LimitProfile, r):
    """log(2 a^2 b) - (2 - a) log r - 2 log(1 + b r^a)."""
    r = _radius(prof, r)
    x = prof._x(r)
    with np.errstate(divide="ignore", invalid="ignore"):
        sing = np.where(r > 0, (2.0 - prof.a) * np.log(np.where(r > 0, r, 1.0)), 0.0)
    val = math.log(2.0 * prof.a ** 2) + prof.log_b - sing - 2.0 * np.logaddexp(0.0, x)
    return _out(val)


def z_prime(prof: LimitProfile, r):
    r = _radius(prof, r)
    a = prof.a
    x = prof._x(r)
    sig = expit(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = -(2.0 - a) / r - 2.0 * a * sig / r
        # a = 2 at r = 0: z'(r) ~ -4 b r
        val = np.where(r == 0, 0.0, val)
    return _out(val)


def z_double_prime(prof: LimitProfile, r):
    r = _radius(prof, r)
    a = prof.a
    x = prof._x(r)
    sig, sig_c = expit(x), expit(-x)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = ((2.0 - a) + 2.0 * a * sig - 2.0 * a * a * sig * sig_c) / r ** 2
        val = np.where(r == 0, -4.0 * prof.b, val)
    return _out(val)


def r2_exp_z(prof: LimitProfile, r):
    """r^2 e^{z(r)} = 2 a^2 sigma (1 - sigma)."""
    r = _radius(prof, r)
    x = prof._x(r)
    return _out(2.0 * prof.a ** 2 * np.exp(log_expit(x) + log_expit(-x)))


def ode_residual(prof: LimitProfile, r):
    """-z'' - z'/r - e^z, formed as r^2 times the residual divided by r^2."""
    r = np.asarray(_radius(prof, r), dtype=float)
    if np.any(r <= 0):
        raise DomainError("ode_residual needs r > 0")
    a = prof.a
    x = prof._x(r)
    sig, sig_c = expit(x), expit(-x)
    # the three terms are individually O(1) after scaling by r^2
    r2_zpp = (2.0 - a) + 2.0 * a * sig - 2.0 * a * a * sig * sig_c
    r_zp = -(2.0 - a) - 2.0 * a * sig
    r2_ez = 2.0 * a * a * np.exp(log_expit(x) + log_expit(-x))
    return _out((-r2_zpp - r_zp - r2_ez) / r ** 2)


def mass(prof: LimitProfile, R):
    """Cumulative mass  int_0^R e^{z} r dr = 2 a b R^a / (1 + b R^a)."""
    R = np.asarray(R, dtype=float)
    if np.any(R < 0):
        raise DomainError("R must be non-negative")
    with np.errstate(divide="ignore"):
        x = np.where(np.isinf(R), np.inf, prof._x(np.where(np.isinf(R), 1.0, R)))
    return _out(2.0 * prof.a * expit(x))


def peak(prof: LimitProfile):
    """(location, value) of the maximum of r^2 e^{z}: (a/sqrt 2, a^2/2)."""
    return prof.center, 0.5 * prof.a ** 2


def sample_profile(prof: LimitProfile, rmin: float, rmax: float, samples: int):
    """Columns r, z, z', r^2 e^z, cumulative mass on a log grid."""
    if not 0 < rmin < rmax or samples < 2:
        raise DomainError("need 0 < rmin < rmax and samples >= 2")
    r = np.geomspace(rmin, rmax, samples)
    return {
        "r": r,
        "z": z(prof, r),
        "z_prime": z_prime(prof, r),
        "r2_exp_z": r2_exp_z(prof, r),
        "mass": mass(prof, r),
    }
