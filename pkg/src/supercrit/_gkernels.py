"""Scalar kernels for the built-in growth families.

A family is encoded as a flat float64 parameter vector whose first entry is
the family code, so the ODE and quadrature kernels can be compiled once and
dispatch at run time::

    PURE_EXP   [0]
    POWER_EXP  [1, log_scale, m, p, c, pbar]     g = L + m log t + t^p + c t^pbar
    ITER_EXP   [2, depth, m, l]                  g = exp_depth(t^m (log t)^l)
    EXP_POLY   [3, n, w_0, ..., w_{n-1}]         g = e^t + sum w_i t^i

Everything here works on g = log f; f itself is never formed.
"""
import math

import numpy as np

from ._accel import identity, njit

if globals().get("_PURE"):
    njit = identity  # noqa: F811

PURE_EXP = 0
POWER_EXP = 1
ITER_EXP = 2
EXP_POLY = 3

NDERIV = 6  # orders 0..5


# -- truncated Taylor jets (normalised coefficients c_k = d^k/k!) ----------

@njit
def _jet_mul(a, b, out):
    n = out.shape[0]
    for k in range(n):
        acc = 0.0
        for j in range(k + 1):
            acc += a[j] * b[k - j]
        out[k] = acc


@njit
def _jet_exp(a, out):
    n = out.shape[0]
    out[0] = math.exp(a[0])
    for k in range(1, n):
        acc = 0.0
        for j in range(1, k + 1):
            acc += j * a[j] * out[k - j]
        out[k] = acc / k


@njit
def _jet_log(a, out):
    n = out.shape[0]
    out[0] = math.log(a[0])
    for k in range(1, n):
        acc = 0.0
        for j in range(1, k):
            acc += j * out[j] * a[k - j]
        out[k] = (a[k] - acc / k) / a[0]


@njit
def _falling(b, k):
    acc = 1.0
    for i in range(k):
        acc *= b - i
    return acc


@njit
def _power_term(a, b, t, k):
    # k-th derivative of a * t**b
    if a == 0.0:
        return 0.0
    fa = _falling(b, k)
    if fa == 0.0:
        return 0.0
    if t == 0.0:
        e = b - k
        if e > 0.0:
            return 0.0
        if e == 0.0:
            return a * fa
        return math.copysign(math.inf, a * fa)
    return a * fa * t ** (b - k)


@njit
def _pow_diff(t, h, i):
    # (t + h)^i - t^i by the binomial sum, no leading cancellation
    acc = 0.0
    coef = 1.0
    for j in range(1, i + 1):
        coef = coef * (i - j + 1) / j
        acc += coef * t ** (i - j) * h ** j
    return acc


@njit
def g_derivs(params, t, out):
    """Fill ``out[0..5]`` with g(t), g'(t), ..., g^(5)(t)."""
    fam = int(params[0])
    for k in range(NDERIV):
        out[k] = 0.0
    if fam == PURE_EXP:
        out[0] = t
        out[1] = 1.0
    elif fam == POWER_EXP:
        L, m, p, c, pb = params[1], params[2], params[3], params[4], params[5]
        for k in range(NDERIV):
            out[k] = _power_term(1.0, p, t, k) + _power_term(c, pb, t, k)
        out[0] += L
        if m != 0.0:
            out[0] += m * math.log(t)
            fact = 1.0
            for k in range(1, NDERIV):
                out[k] += m * (-1.0) ** (k - 1) * fact / t ** k
                fact *= k
    elif fam == ITER_EXP:
        depth, m, l = int(params[1]), params[2], params[3]
        x = np.zeros(NDERIV)
        y = np.zeros(NDERIV)
        if l == 0.0:
            fact = 1.0
            for k in range(NDERIV):
                if k > 0:
                    fact *= k
                x[k] = _power_term(1.0, m, t, k) / fact
            for _ in range(depth):
                _jet_exp(x, y)
                for k in range(NDERIV):
                    x[k] = y[k]
            fact = 1.0
            for k in range(NDERIV):
                if k > 0:
                    fact *= k
                out[k] = x[k] * fact
            return
        tj = np.zeros(NDERIV)
        lj = np.zeros(NDERIV)
        tj[0] = t
        tj[1] = 1.0
        _jet_log(tj, lj)
        for k in range(NDERIV):
            y[k] = m * lj[k]
        _jet_exp(y, x)  # t^m
        _jet_log(lj, y)  # log log t, needs t > 1
        for k in range(NDERIV):
            y[k] *= l
        _jet_exp(y, tj)  # (log t)^l
        _jet_mul(x, tj, y)
        for k in range(NDERIV):
            x[k] = y[k]
        for _ in range(depth):
            _jet_exp(x, y)
            for k in range(NDERIV):
                x[k] = y[k]
        fact = 1.0
        for k in range(NDERIV):
            if k > 0:
                fact *= k
            out[k] = x[k] * fact
    elif fam == EXP_POLY:
        n = int(params[1])
        et = math.exp(t)
        for k in range(NDERIV):
            acc = et
            for i in range(k, n):
                acc += params[2 + i] * _falling(float(i), k) * t ** (i - k)
            out[k] = acc


@njit
def g_value(params, t):
    fam = int(params[0])
    if fam == PURE_EXP:
        return t
    if fam == POWER_EXP:
        L, m, p, c, pb = params[1], params[2], params[3], params[4], params[5]
        val = L + t ** p
        if c != 0.0:
            val += c * t ** pb
        if m != 0.0:
            if t == 0.0:
                return -math.inf if m > 0.0 else math.inf
            val += m * math.log(t)
        return val
    if fam == ITER_EXP:
        depth, m, l = int(params[1]), params[2], params[3]
        x = t ** m
        if l != 0.0:
            x *= math.log(t) ** l
        for _ in range(depth):
            x = math.exp(x)
        return x
    n = int(params[1])
    acc = math.exp(t)
    for i in range(n):
        acc += params[2 + i] * t ** i
    return acc


@njit
def g01(params, t):
    """(g(t), g'(t)), the pair the shooting kernel needs at every stage."""
    fam = int(params[0])
    if fam == PURE_EXP:
        return t, 1.0
    if fam == POWER_EXP:
        L, m, p, c, pb = params[1], params[2], params[3], params[4], params[5]
        tp = t ** p
        g = L + tp
        g1 = p * tp / t if t != 0.0 else (0.0 if p > 1.0 else math.inf)
        if c != 0.0:
            tq = t ** pb
            g += c * tq
            g1 += c * pb * t ** (pb - 1.0)
        if m != 0.0:
            if t == 0.0:
                return (-math.inf if m > 0.0 else math.inf), math.inf
            g += m * math.log(t)
            g1 += m / t
        return g, g1
    if fam == ITER_EXP:
        depth, m, l = int(params[1]), params[2], params[3]
        x = t ** m
        dx = m * t ** (m - 1.0)
        if l != 0.0:
            lt = math.log(t)
            x = t ** m * lt ** l
            dx = x * (m + l / lt) / t
        for _ in range(depth):
            e = math.exp(x)
            dx = dx * e
            x = e
        return x, dx
    n = int(params[1])
    et = math.exp(t)
    g = et
    g1 = et
    for i in range(n):
        w = params[2 + i]
        g += w * t ** i
        if i > 0:
            g1 += i * w * t ** (i - 1)
    return g, g1


@njit
def g_incr(params, t, h):
    """g(t + h) - g(t) without cancellation."""
    if t == 0.0:
        return g_value(params, h) - g_value(params, 0.0)
    fam = int(params[0])
    if fam == PURE_EXP:
        return h
    if fam == POWER_EXP:
        m, p, c, pb = params[2], params[3], params[4], params[5]
        lr = math.log1p(h / t)
        d = t ** p * math.expm1(p * lr)
        if c != 0.0:
            d += c * t ** pb * math.expm1(pb * lr)
        if m != 0.0:
            d += m * lr
        return d
    if fam == ITER_EXP:
        depth, m, l = int(params[1]), params[2], params[3]
        x = t ** m
        lr = math.log1p(h / t)
        z = m * lr
        if l != 0.0:
            lt = math.log(t)
            x *= lt ** l
            z += l * math.log1p(lr / lt)
        dx = x * math.expm1(z)
        for _ in range(depth):
            e = math.exp(x)
            dx = e * math.expm1(dx)
            x = e
        return dx
    n = int(params[1])
    acc = math.exp(t) * math.expm1(h)
    for i in range(1, n):
        acc += params[2 + i] * _pow_diff(t, h, i)
    return acc


@njit
def g1_incr(params, t, h):
    """g'(t + h) - g'(t) without cancellation."""
    if t == 0.0:
        return g01(params, h)[1] - g01(params, 0.0)[1]
    fam = int(params[0])
    if fam == PURE_EXP:
        return 0.0
    if fam == POWER_EXP:
        m, p, c, pb = params[2], params[3], params[4], params[5]
        lr = math.log1p(h / t)
        d = p * t ** (p - 1.0) * math.expm1((p - 1.0) * lr)
        if c != 0.0:
            d += c * pb * t ** (pb - 1.0) * math.expm1((pb - 1.0) * lr)
        if m != 0.0:
            d -= m * h / (t * (t + h))
        return d
    if fam == ITER_EXP:
        depth, m, l = int(params[1]), params[2], params[3]
        lr = math.log1p(h / t)
        x = t ** m
        z = m * lr
        if l != 0.0:
            lt = math.log(t)
            x *= lt ** l
            z += l * math.log1p(lr / lt)
            lth = math.log(t + h)
        dx = x * math.expm1(z)
        if l != 0.0:
            # phi' = phi * A with A(t) = (m + l / log t) / t
            a0 = (m + l / lt) / t
            a1 = (m + l / lth) / (t + h)
            da = -m * h / (t * (t + h)) - l * (h * lth + t * lr) / (t * lt * (t + h) * lth)
            x1 = x * a0
            dx1 = dx * a1 + x * da
        else:
            x1 = m * t ** (m - 1.0)
            dx1 = x1 * math.expm1((m - 1.0) * lr)
        for _ in range(depth):
            e = math.exp(x)
            em = math.expm1(dx)
            dx1 = e * (dx1 * (em + 1.0) + x1 * em)
            x1 = x1 * e
            dx = e * em
            x = e
        return dx1
    n = int(params[1])
    acc = math.exp(t) * math.expm1(h)
    for i in range(2, n):
        acc += i * params[2 + i] * _pow_diff(t, h, i - 1)
    return acc


@njit
def g_derivs_array(params, t, nmax):
    out = np.empty((t.shape[0], NDERIV))
    buf = np.zeros(NDERIV)
    for i in range(t.shape[0]):
        g_derivs(params, t[i], buf)
        for k in range(nmax + 1):
            out[i, k] = buf[k]
    return out


@njit
def g_value_array(params, t):
    out = np.empty(t.shape[0])
    for i in range(t.shape[0]):
        out[i] = g_value(params, t[i])
    return out


@njit
def g_incr_array(params, t, h):
    out = np.empty(t.shape[0])
    for i in range(t.shape[0]):
        out[i] = g_incr(params, t[i], h[i])
    return out


@njit
def g1_incr_array(params, t, h):
    out = np.empty(t.shape[0])
    for i in range(t.shape[0]):
        out[i] = g1_incr(params, t[i], h[i])
    return out
