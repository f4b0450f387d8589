"""Compiled integrator for -v'' - v'/r = h f(v), v(0) = mu, v'(0) = 0.

Phase 1 runs in s = log r with state (v, w = r v'):

    v_s = w,   w_s = -E,   E = exp(2 s + log h + g(v)).

Phase 2 starts once the remaining drop of v is short compared with |w| and
takes v itself as the independent variable with state (s, omega = 1/w):

    s_v = omega,   omega_v = omega^3 E,

which lands exactly on v = v_end instead of hunting for the event.  Both
phases carry the linearisation in mu so dlambda/dmu comes out of the same
run.  Dormand-Prince 5(4) with a PI step-size controller.

``paired`` switches on compensated (two-sum) accumulation of s, v and w, with
the lost low part of v fed back through g(v_hi + v_lo) ~ g(v_hi) + g'(v_hi) v_lo.
"""
import functools
import math

import numpy as np

from ._accel import identity, njit

# A copy of this module made by ``_accel.kernel_module`` may carry its own g
# (a custom model) and must not share the on-disk cache with the original.
if globals().get("_PURE"):
    njit = identity  # noqa: F811
elif globals().get("_NO_CACHE"):
    njit = functools.partial(njit, cache=False)  # noqa: F811

if globals().get("_G01") is not None:
    _g01 = globals()["_G01"]
elif globals().get("_PURE"):
    from . import _gkernels
    from ._accel import pure_module

    _g01 = pure_module(_gkernels).g01
else:
    from ._gkernels import g01 as _g01

OK = 0
HORIZON = 1
NONFINITE = 2
STEP_UNDERFLOW = 3

# info slots
I_STATUS = 0
I_NODES = 1
I_ACCEPT = 2
I_REJECT = 3
I_S0 = 4
I_W0 = 5
I_DLAM = 6
I_ERRV = 7
I_ERRS = 8
I_SWITCH = 9
I_FEVALS = 10
I_S0_LO = 11
INFO_SIZE = 12

C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                           49.0 / 176.0, -5103.0 / 18656.0)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                          -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)

SAFETY = 0.9
PI_ALPHA = 0.7 / 5.0
PI_BETA = 0.4 / 5.0
FAC_MIN = 0.2
FAC_MAX = 5.0


@njit
def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


@njit
def _log_weight(wcoef, rho):
    # returns (log h(rho), rho h'(rho)/h(rho))
    n = wcoef.shape[0]
    if n == 1:
        return 0.0, 0.0
    h = 0.0
    dh = 0.0
    for i in range(n - 1, -1, -1):
        dh = dh * rho + h
        h = h * rho + wcoef[i]
    return math.log(h), rho * dh / h


@njit
def _rhs_s(params, wcoef, inv_sqrt_lam, s_hi, ds, v_hi, dv, w, phi, psi,
           paired, out):
    """Stage derivative in s-mode.  The stage point is (s_hi + ds, v_hi + dv)."""
    z = v_hi + dv
    rem = 0.0
    if paired:
        bb = z - v_hi
        rem = (v_hi - (z - bb)) + (dv - bb)
    g, g1 = _g01(params, z)
    lh = 0.0
    if wcoef.shape[0] > 1:
        lh, _ = _log_weight(wcoef, math.exp(s_hi + ds) * inv_sqrt_lam)
    x = (2.0 * s_hi + g) + (2.0 * ds + g1 * rem + lh)
    E = math.exp(x)
    out[0] = w
    out[1] = -E
    out[2] = psi
    out[3] = -E * g1 * phi
    return E, g1


@njit
def _rhs_v(params, wcoef, inv_sqrt_lam, v, s, om, sig, chi, out):
    g, g1 = _g01(params, v)
    lh = 0.0
    if wcoef.shape[0] > 1:
        lh, _ = _log_weight(wcoef, math.exp(s) * inv_sqrt_lam)
    E = math.exp(2.0 * s + g + lh)
    om2E = om * om * E
    out[0] = om
    out[1] = om2E * om
    out[2] = chi
    out[3] = 3.0 * om2E * chi + 2.0 * om2E * om * sig
    return E, g1


@njit
def shoot(params, mu, s_init, wcoef, inv_sqrt_lam, rtol, atol, hmax_abs, hmax_frac,
          max_steps, v_end, switch_ratio, paired, h0, v_seed, w_seed,
          out_s, out_v, out_w, out_E, out_g1, out_mode, out_err, info):
    """Integrate one shot; nodes go to the ``out_*`` arrays, summary to ``info``.

    A finite ``w_seed`` replaces the Taylor seed by the state (v_seed, w_seed)
    at s_init; the mu-sensitivity is then meaningless and left at zero.
    """
    for i in range(INFO_SIZE):
        info[i] = 0.0
    cap = out_s.shape[0]
    k = np.zeros((7, 4))
    ytmp = np.zeros(4)

    # Taylor seed at r_init = exp(s_init)
    g_mu, g1_mu = _g01(params, mu)
    lh0 = 0.0
    if wcoef.shape[0] > 1:
        lh0, _ = _log_weight(wcoef, 0.0)
    r2f = math.exp(2.0 * s_init + g_mu + lh0)  # h(0) f(mu) r^2
    r2fp = r2f * g1_mu                          # h(0) f'(mu) r^2
    v_hi = mu - 0.25 * r2f + r2f * r2fp / 64.0
    w_hi = -0.5 * r2f + r2f * r2fp / 16.0
    v_lo = 0.0
    w_lo = 0.0
    phi = 1.0 - 0.25 * r2fp
    psi = -0.5 * r2fp
    if not math.isnan(w_seed):
        v_hi = v_seed
        w_hi = w_seed
        phi = 0.0
        psi = 0.0
    s_hi = s_init
    s_lo = 0.0

    n = 0
    E, g1 = _rhs_s(params, wcoef, inv_sqrt_lam, s_hi, 0.0, v_hi, 0.0, w_hi, phi, psi,
                   paired, k[0])
    fevals = 1
    out_s[0] = s_hi
    out_v[0] = v_hi
    out_w[0] = w_hi
    out_E[0] = E
    out_g1[0] = g1
    out_mode[0] = 0
    out_err[0] = 0.0
    n = 1

    h = h0
    err_prev = 1.0
    n_acc = 0
    n_rej = 0
    errv_acc = 0.0
    errs_acc = 0.0
    rejected_last = False
    status = OK
    mode = 0
    E_new = E
    g1_new = g1
    dw_new = 0.0
    dp_new = 0.0
    dq_new = 0.0
    vst = v_hi

    # ---------------- phase 1: log-radius ----------------
    while True:
        if n_acc + n_rej >= max_steps:
            status = HORIZON
            break
        if n >= cap - 1:
            status = HORIZON
            break
        scale = E * g1
        hcap = hmax_abs
        if scale > 0.0:
            hc = hmax_frac / math.sqrt(scale)
            if hc < hcap:
                hcap = hc
        if h > hcap:
            h = hcap
        if h < 1e-14:
            status = STEP_UNDERFLOW
            break
        bad = False
        dvs = 0.0
        # stage 2..7
        for st in range(1, 7):
            if st == 1:
                c = C2
                dv = h * (A21 * k[0, 0])
                dw = h * (A21 * k[0, 1])
                dp = h * (A21 * k[0, 2])
                dq = h * (A21 * k[0, 3])
            elif st == 2:
                c = C3
                dv = h * (A31 * k[0, 0] + A32 * k[1, 0])
                dw = h * (A31 * k[0, 1] + A32 * k[1, 1])
                dp = h * (A31 * k[0, 2] + A32 * k[1, 2])
                dq = h * (A31 * k[0, 3] + A32 * k[1, 3])
            elif st == 3:
                c = C4
                dv = h * (A41 * k[0, 0] + A42 * k[1, 0] + A43 * k[2, 0])
                dw = h * (A41 * k[0, 1] + A42 * k[1, 1] + A43 * k[2, 1])
                dp = h * (A41 * k[0, 2] + A42 * k[1, 2] + A43 * k[2, 2])
                dq = h * (A41 * k[0, 3] + A42 * k[1, 3] + A43 * k[2, 3])
            elif st == 4:
                c = C5
                dv = h * (A51 * k[0, 0] + A52 * k[1, 0] + A53 * k[2, 0] + A54 * k[3, 0])
                dw = h * (A51 * k[0, 1] + A52 * k[1, 1] + A53 * k[2, 1] + A54 * k[3, 1])
                dp = h * (A51 * k[0, 2] + A52 * k[1, 2] + A53 * k[2, 2] + A54 * k[3, 2])
                dq = h * (A51 * k[0, 3] + A52 * k[1, 3] + A53 * k[2, 3] + A54 * k[3, 3])
            elif st == 5:
                c = 1.0
                dv = h * (A61 * k[0, 0] + A62 * k[1, 0] + A63 * k[2, 0] + A64 * k[3, 0]
                          + A65 * k[4, 0])
                dw = h * (A61 * k[0, 1] + A62 * k[1, 1] + A63 * k[2, 1] + A64 * k[3, 1]
                          + A65 * k[4, 1])
                dp = h * (A61 * k[0, 2] + A62 * k[1, 2] + A63 * k[2, 2] + A64 * k[3, 2]
                          + A65 * k[4, 2])
                dq = h * (A61 * k[0, 3] + A62 * k[1, 3] + A63 * k[2, 3] + A64 * k[3, 3]
                          + A65 * k[4, 3])
            else:
                c = 1.0
                dv = h * (B1 * k[0, 0] + B3 * k[2, 0] + B4 * k[3, 0] + B5 * k[4, 0]
                          + B6 * k[5, 0])
                dw = h * (B1 * k[0, 1] + B3 * k[2, 1] + B4 * k[3, 1] + B5 * k[4, 1]
                          + B6 * k[5, 1])
                dp = h * (B1 * k[0, 2] + B3 * k[2, 2] + B4 * k[3, 2] + B5 * k[4, 2]
                          + B6 * k[5, 2])
                dq = h * (B1 * k[0, 3] + B3 * k[2, 3] + B4 * k[3, 3] + B5 * k[4, 3]
                          + B6 * k[5, 3])
                dvs = dv
            vst = v_hi + (v_lo + dv)
            if not (vst > v_end):
                bad = True
                break
            Est, g1st = _rhs_s(params, wcoef, inv_sqrt_lam, s_hi, s_lo + c * h,
                               v_hi, v_lo + dv, w_hi + (w_lo + dw), phi + dp, psi + dq,
                               paired, k[st])
            fevals += 1
            if not (math.isfinite(Est) and math.isfinite(k[st, 3])):
                bad = True
                break
            if st == 6:
                E_new = Est
                g1_new = g1st
                dw_new = dw
                dp_new = dp
                dq_new = dq
        if bad:
            # the step would leave v > 0: hand over to phase 2 from here
            if vst <= v_end:
                mode = 1
                break
            h *= 0.25
            n_rej += 1
            rejected_last = True
            continue

        ev = h * (E1 * k[0, 0] + E3 * k[2, 0] + E4 * k[3, 0] + E5 * k[4, 0]
                  + E6 * k[5, 0] + E7 * k[6, 0])
        ew = h * (E1 * k[0, 1] + E3 * k[2, 1] + E4 * k[3, 1] + E5 * k[4, 1]
                  + E6 * k[5, 1] + E7 * k[6, 1])
        v_new = v_hi + (v_lo + dvs)
        w_new = w_hi + (w_lo + dw_new)
        sc_v = atol + rtol * max(abs(v_hi), abs(v_new))
        sc_w = atol + rtol * max(abs(w_hi), abs(w_new))
        err = max(abs(ev) / sc_v, abs(ew) / sc_w)
        if not math.isfinite(err):
            h *= 0.25
            n_rej += 1
            rejected_last = True
            continue
        if err > 1.0:
            fac = SAFETY * err ** (-0.2)
            if fac < FAC_MIN:
                fac = FAC_MIN
            h *= fac
            n_rej += 1
            rejected_last = True
            continue

        # accept
        if paired:
            v_hi, v_lo = _two_sum(v_hi, v_lo + dvs)
            w_hi, w_lo = _two_sum(w_hi, w_lo + dw_new)
            s_hi, s_lo = _two_sum(s_hi, s_lo + h)
        else:
            v_hi = v_hi + dvs
            w_hi = w_hi + dw_new
            s_hi = s_hi + h
        phi = phi + dp_new
        psi = psi + dq_new
        E = E_new
        g1 = g1_new
        for j in range(4):
            k[0, j] = k[6, j]
        errv_acc += abs(ev)
        n_acc += 1
        out_s[n] = s_hi + s_lo
        out_v[n] = v_hi + v_lo
        out_w[n] = w_hi + w_lo
        out_E[n] = E
        out_g1[n] = g1
        out_mode[n] = 0
        out_err[n] = abs(ev)
        n += 1

        if err < 1e-300:
            err = 1e-300
        fac = SAFETY * err ** (-PI_ALPHA) * err_prev ** PI_BETA
        if fac < FAC_MIN:
            fac = FAC_MIN
        if fac > FAC_MAX:
            fac = FAC_MAX
        if rejected_last and fac > 1.0:
            fac = 1.0
        rejected_last = False
        err_prev = err
        h *= fac

        vv = v_hi + v_lo
        if -(w_hi + w_lo) >= switch_ratio * (vv - v_end):
            mode = 1
            break

    info[I_SWITCH] = n - 1
    if mode == 0:
        info[I_STATUS] = status
        info[I_NODES] = n
        info[I_ACCEPT] = n_acc
        info[I_REJECT] = n_rej
        info[I_FEVALS] = fevals
        return

    # ---------------- phase 2: v as independent variable ----------------
    v = v_hi + v_lo
    w = w_hi + w_lo
    om = 1.0 / w
    sig = -phi * om
    chi = -om * om * (psi - E * sig)
    s = s_hi
    s_lo2 = s_lo
    ys = np.zeros(4)
    _rhs_v(params, wcoef, inv_sqrt_lam, v, s + s_lo2, om, sig, chi, k[0])
    fevals += 1
    dist = v - v_end
    hv = -min(dist, abs(w) * h)
    if hv > -1e-300:
        hv = -dist
    err_prev = 1.0
    err = 1.0
    es = 0.0
    E_new = E
    rejected_last = False
    while True:
        if n_acc + n_rej >= max_steps or n >= cap - 1:
            status = HORIZON
            break
        last = False
        if v + hv <= v_end:
            hv = v_end - v
            last = True
        if abs(hv) < 1e-300:
            break
        bad = False
        for st in range(1, 7):
            if st == 1:
                c = C2
                for j in range(4):
                    ytmp[j] = hv * (A21 * k[0, j])
            elif st == 2:
                c = C3
                for j in range(4):
                    ytmp[j] = hv * (A31 * k[0, j] + A32 * k[1, j])
            elif st == 3:
                c = C4
                for j in range(4):
                    ytmp[j] = hv * (A41 * k[0, j] + A42 * k[1, j] + A43 * k[2, j])
            elif st == 4:
                c = C5
                for j in range(4):
                    ytmp[j] = hv * (A51 * k[0, j] + A52 * k[1, j] + A53 * k[2, j]
                                    + A54 * k[3, j])
            elif st == 5:
                c = 1.0
                for j in range(4):
                    ytmp[j] = hv * (A61 * k[0, j] + A62 * k[1, j] + A63 * k[2, j]
                                    + A64 * k[3, j] + A65 * k[4, j])
            else:
                c = 1.0
                for j in range(4):
                    ytmp[j] = hv * (B1 * k[0, j] + B3 * k[2, j] + B4 * k[3, j]
                                    + B5 * k[4, j] + B6 * k[5, j])
                for j in range(4):
                    ys[j] = ytmp[j]
            vst = v + c * hv
            if last and st >= 5:
                vst = v_end
            Est, _ = _rhs_v(params, wcoef, inv_sqrt_lam, vst, s + (s_lo2 + ytmp[0]),
                            om + ytmp[1], sig + ytmp[2], chi + ytmp[3], k[st])
            fevals += 1
            if not (math.isfinite(k[st, 1]) and math.isfinite(k[st, 3])):
                bad = True
                break
            if st == 6:
                E_new = Est
        if not bad:
            es = hv * (E1 * k[0, 0] + E3 * k[2, 0] + E4 * k[3, 0] + E5 * k[4, 0]
                       + E6 * k[5, 0] + E7 * k[6, 0])
            eo = hv * (E1 * k[0, 1] + E3 * k[2, 1] + E4 * k[3, 1] + E5 * k[4, 1]
                       + E6 * k[5, 1] + E7 * k[6, 1])
            sc_s = atol + rtol * max(1.0, abs(s))
            sc_o = atol + rtol * max(abs(om), abs(om + ys[1]))
            err = max(abs(es) / sc_s, abs(eo) / sc_o)
        if bad or not math.isfinite(err) or err > 1.0:
            if bad or not math.isfinite(err):
                hv *= 0.25
            else:
                fac = SAFETY * err ** (-0.2)
                if fac < FAC_MIN:
                    fac = FAC_MIN
                hv *= fac
            n_rej += 1
            rejected_last = True
            if abs(hv) < 1e-14 * max(1.0, abs(v)):
                status = STEP_UNDERFLOW
                break
            continue
        if paired:
            s, s_lo2 = _two_sum(s, s_lo2 + ys[0])
        else:
            s = s + ys[0]
        om = om + ys[1]
        sig = sig + ys[2]
        chi = chi + ys[3]
        v = v_end if last else v + hv
        for j in range(4):
            k[0, j] = k[6, j]
        errs_acc += abs(es)
        n_acc += 1
        out_s[n] = s + s_lo2
        out_v[n] = v
        out_w[n] = 1.0 / om
        out_E[n] = E_new
        g_v, g1_v = _g01(params, v)
        out_g1[n] = g1_v
        out_mode[n] = 1
        out_err[n] = abs(es)
        n += 1
        if last:
            break
        if err < 1e-300:
            err = 1e-300
        fac = SAFETY * err ** (-PI_ALPHA) * err_prev ** PI_BETA
        if fac < FAC_MIN:
            fac = FAC_MIN
        if fac > FAC_MAX:
            fac = FAC_MAX
        if rejected_last and fac > 1.0:
            fac = 1.0
        rejected_last = False
        err_prev = err
        hv *= fac

    info[I_STATUS] = status
    info[I_NODES] = n
    info[I_ACCEPT] = n_acc
    info[I_REJECT] = n_rej
    info[I_S0] = s
    info[I_S0_LO] = s_lo2
    info[I_W0] = 1.0 / om
    info[I_DLAM] = 2.0 * math.exp(2.0 * (s + s_lo2)) * sig
    info[I_ERRV] = errv_acc
    info[I_ERRS] = errs_acc
    info[I_FEVALS] = fevals

