"""Pure-Python stepping kernel: closed-loop macro steps and the batch loop.

This is the fallback backend and the semantic reference for the compiled
kernel in ``_kernel.pyx`` -- both are written with identical operation order
so their trajectories agree bit for bit.  Continuous states advance one RK4
(or explicit Euler) step per macro step; the discrete PI controllers update
once at the step boundary and their outputs are held over the step.

State vectors:
    one-mass: (omega, p_e, p_ef, p_f, beta)
    two-mass: (omega_wt, omega_g, twist, p_e, p_ef, p_f, beta)
where p_f is the compensation-input lag state and beta the pitch servo state.

Packed parameter layout (``pack_params``): see _P* index constants.
"""
from __future__ import annotations

import numpy as np

from .params import TurbineParams

# packed parameter indices
_P_KTSR, _P_KROT, _P_VIN, _P_VOUT = 0, 1, 2, 3
_P_THR, _P_OMMAX = 4, 5
_P_KPP, _P_KIP, _P_KPC, _P_KIC = 6, 7, 8, 9
_P_TPI, _P_BMIN, _P_BMAX, _P_BRATE = 10, 11, 12, 13
_P_KPT, _P_KIT, _P_TCON, _P_TF, _P_TPC = 14, 15, 16, 17, 18
_P_PEMAX, _P_PERATE, _P_PMAX = 19, 20, 21
_P_H1, _P_H2W, _P_H2G, _P_DSH, _P_KSH, _P_OM0 = 22, 23, 24, 25, 26, 27
_P_ALPHA = 28  # 25 coefficients, row-major (beta power major)
_P_TPI_BYP, _P_TPC_BYP = 53, 54
N_PACKED = 55

SPEED_EPS = 1e-3


class LoopNumericsError(ArithmeticError):
    """Non-finite state or near-standstill torque during stepping."""


def pack_params(p: TurbineParams) -> np.ndarray:
    pp = np.empty(N_PACKED, dtype=np.float64)
    pp[_P_KTSR] = p.k_tsr
    pp[_P_KROT] = p.k_rotor
    pp[_P_VIN] = p.v_cut_in
    pp[_P_VOUT] = p.v_cut_out
    pp[_P_THR] = p.p_ef_threshold
    pp[_P_OMMAX] = p.omega_ref_max
    pp[_P_KPP] = p.kpp
    pp[_P_KIP] = p.kip
    pp[_P_KPC] = p.kpc
    pp[_P_KIC] = p.kic
    pp[_P_TPI] = p.t_pi
    pp[_P_BMIN] = p.beta_min
    pp[_P_BMAX] = p.beta_max
    pp[_P_BRATE] = p.dbeta_rate
    pp[_P_KPT] = p.kpt
    pp[_P_KIT] = p.kit
    pp[_P_TCON] = p.t_con
    pp[_P_TF] = p.t_f
    pp[_P_TPC] = p.t_pc
    pp[_P_PEMAX] = p.pe_max
    pp[_P_PERATE] = p.dpe_rate
    pp[_P_PMAX] = p.p_max
    pp[_P_H1] = p.h_wt_1m
    pp[_P_H2W] = p.h_wt_2m
    pp[_P_H2G] = p.h_g_2m
    pp[_P_DSH] = p.d_shaft
    pp[_P_KSH] = p.k_shaft
    pp[_P_OM0] = p.omega0_2m
    flat = p.cp_coeffs.flat()
    for k in range(25):
        pp[_P_ALPHA + k] = flat[k]
    pp[_P_TPI_BYP] = 1.0 if p.t_pi_bypass else 0.0
    pp[_P_TPC_BYP] = 1.0 if p.t_pc_bypass else 0.0
    return pp


def _cp_poly(pp, lam, beta):
    acc = 0.0
    for i in range(4, -1, -1):
        row = 0.0
        base = _P_ALPHA + 5 * i
        for j in range(4, -1, -1):
            row = row * lam + pp[base + j]
        acc = acc * beta + row
    return acc


def _omega_ref(pp, pef):
    if pef < pp[_P_THR]:
        return -0.67 * pef * pef + 1.42 * pef + 0.51
    return pp[_P_OMMAX]


def _aero_power(pp, omega, beta, v):
    if v < pp[_P_VIN] or v > pp[_P_VOUT] or v <= 0.0:
        return 0.0
    lam = pp[_P_KTSR] * omega / v
    pm = pp[_P_KROT] * _cp_poly(pp, lam, beta) * (v * v * v)
    return pm if pm > 0.0 else 0.0


def _wind_at(ts, vs, n, cursor, tau):
    """Piecewise-linear wind with constant extrapolation; monotone cursor."""
    while cursor + 1 < n and tau >= ts[cursor + 1]:
        cursor += 1
    if tau <= ts[0]:
        return vs[0], cursor
    if cursor + 1 >= n:
        return vs[n - 1], cursor
    t0, t1 = ts[cursor], ts[cursor + 1]
    return vs[cursor] + (vs[cursor + 1] - vs[cursor]) * (tau - t0) / (t1 - t0), cursor


def _derivs(model, pp, y, v, p_cmd, beta_cmd, flo):
    """Continuous-state derivatives with held commands.

    Rate limiters clip the lag derivatives; box bounds pin the derivative to
    zero when the state sits at a bound and the drive pushes outward, so RK4
    stages cannot leave the admissible box from an equilibrium.
    """
    if model == 1:
        om, pe, pef, pf, beta = y
        pm = _aero_power(pp, om, beta, v)
        d0 = (pm - pe) / (2.0 * pp[_P_H1])
        core = (d0,)
    else:
        omw, omg, th, pe, pef, pf, beta = y
        pm = _aero_power(pp, omw, beta, v)
        if pm != 0.0:
            if omw < SPEED_EPS:
                raise LoopNumericsError(
                    f"rotor speed {omw!r} pu below {SPEED_EPS} with nonzero power"
                )
            tm = pm / omw
        else:
            tm = 0.0
        if pe != 0.0:
            if omg < SPEED_EPS:
                raise LoopNumericsError(
                    f"generator speed {omg!r} pu below {SPEED_EPS} with nonzero power"
                )
            te = pe / omg
        else:
            te = 0.0
        tsh = pp[_P_KSH] * th + pp[_P_DSH] * (omw - omg)
        core = (
            (tm - tsh) / (2.0 * pp[_P_H2W]),
            (tsh - te) / (2.0 * pp[_P_H2G]),
            pp[_P_OM0] * (omw - omg),
        )
    dpe = (p_cmd - y[-4]) / pp[_P_TCON]
    if dpe > pp[_P_PERATE]:
        dpe = pp[_P_PERATE]
    elif dpe < -pp[_P_PERATE]:
        dpe = -pp[_P_PERATE]
    pe = y[-4]
    if (pe >= pp[_P_PEMAX] and dpe > 0.0) or (pe <= flo and dpe < 0.0):
        dpe = 0.0
    dpef = (pe - y[-3]) / pp[_P_TF]
    if pp[_P_TPC_BYP] != 0.0:
        dpf = 0.0
    else:
        dpf = (pe - y[-2]) / pp[_P_TPC]
    beta = y[-1]
    if pp[_P_TPI_BYP] != 0.0:
        db = 0.0
    else:
        db = (beta_cmd - beta) / pp[_P_TPI]
        if db > pp[_P_BRATE]:
            db = pp[_P_BRATE]
        elif db < -pp[_P_BRATE]:
            db = -pp[_P_BRATE]
        if (beta >= pp[_P_BMAX] and db > 0.0) or (beta <= pp[_P_BMIN] and db < 0.0):
            db = 0.0
    return core + (dpe, dpef, dpf, db)


def _clip(x, lo, hi):
    return lo if x < lo else (hi if x > hi else x)


def step_once(model, t, y, integ, p_elec_0, p_floor, pp, ts, vs, nbp, cursor,
              dt, euler=False):
    """Advance one macro step; returns (y_new, cursor).  ``integ`` is the
    mutable [I_t, I_p, I_c] integrator carry.

    Update order: wind -> speed reference -> speed PI -> converter command ->
    pitch subsystem command -> joint integration of all continuous states.
    """
    v, cursor = _wind_at(ts, vs, nbp, cursor, t)
    if not (v - v == 0.0):
        raise LoopNumericsError(f"non-finite wind speed {v!r} at t={t!r}")
    online = pp[_P_VIN] <= v <= pp[_P_VOUT]
    flo = p_floor if online else 0.0
    pef = y[-3]
    pf = y[-2]
    beta = y[-1]
    omw = y[0]
    omg = y[0] if model == 1 else y[1]
    omr = _omega_ref(pp, pef)

    # speed PI, anti-windup against the converter box
    e_t = omg - omr
    I_t = integ[0]
    u_lo = p_floor - p_elec_0
    u_hi = pp[_P_PEMAX] - p_elec_0
    cand = pp[_P_KPT] * e_t + pp[_P_KIT] * (I_t + e_t * dt)
    if cand > u_hi:
        u_t = u_hi
    elif cand < u_lo:
        u_t = u_lo
    else:
        u_t = cand
        integ[0] = I_t + e_t * dt
    p_cmd = p_elec_0 + u_t
    if not online:
        p_cmd = 0.0

    # pitch subsystem: two PIs, anti-windup against the saturated blade angle
    comp_in = y[-4] if pp[_P_TPC_BYP] != 0.0 else pf
    e_p = omw - omr
    e_c = comp_in - pp[_P_PMAX]
    I_p = integ[1]
    I_c = integ[2]
    up_hold = pp[_P_KPP] * e_p + pp[_P_KIP] * I_p
    up_int = up_hold + pp[_P_KIP] * e_p * dt
    uc_hold = pp[_P_KPC] * e_c + pp[_P_KIC] * I_c
    uc_int = uc_hold + pp[_P_KIC] * e_c * dt
    cmd1 = up_int + uc_int
    pinned_lo = beta <= pp[_P_BMIN] and cmd1 < pp[_P_BMIN]
    pinned_hi = beta >= pp[_P_BMAX] and cmd1 > pp[_P_BMAX]
    if (pinned_lo and e_p < 0.0) or (pinned_hi and e_p > 0.0):
        u_p = up_hold
    else:
        u_p = up_int
        integ[1] = I_p + e_p * dt
    if (pinned_lo and e_c < 0.0) or (pinned_hi and e_c > 0.0):
        u_c = uc_hold
    else:
        u_c = uc_int
        integ[2] = I_c + e_c * dt
    beta_cmd = u_p + u_c

    n = len(y)
    k1 = _derivs(model, pp, y, v, p_cmd, beta_cmd, flo)
    if euler:
        yn = [y[i] + dt * k1[i] for i in range(n)]
    else:
        h2 = 0.5 * dt
        v2, cursor = _wind_at(ts, vs, nbp, cursor, t + h2)
        if not (v2 - v2 == 0.0):
            raise LoopNumericsError(f"non-finite wind speed {v2!r} at t={t + h2!r}")
        y2 = tuple(y[i] + h2 * k1[i] for i in range(n))
        k2 = _derivs(model, pp, y2, v2, p_cmd, beta_cmd, flo)
        y3 = tuple(y[i] + h2 * k2[i] for i in range(n))
        k3 = _derivs(model, pp, y3, v2, p_cmd, beta_cmd, flo)
        v4, cursor = _wind_at(ts, vs, nbp, cursor, t + dt)
        if not (v4 - v4 == 0.0):
            raise LoopNumericsError(f"non-finite wind speed {v4!r} at t={t + dt!r}")
        y4 = tuple(y[i] + dt * k3[i] for i in range(n))
        k4 = _derivs(model, pp, y4, v4, p_cmd, beta_cmd, flo)
        yn = [y[i] + dt * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0
              for i in range(n)]

    # discrete pitch tracking when the servo lag is bypassed
    if pp[_P_TPI_BYP] != 0.0:
        bstep = pp[_P_BRATE] * dt
        yn[-1] = y[-1] + _clip(beta_cmd - y[-1], -bstep, bstep)
    if pp[_P_TPC_BYP] != 0.0:
        yn[-2] = yn[-4]

    # projections keep the limited states inside their boxes
    yn[-4] = _clip(yn[-4], flo, pp[_P_PEMAX])
    yn[-1] = _clip(yn[-1], pp[_P_BMIN], pp[_P_BMAX])
    return tuple(yn), cursor


def run_loop(model, pp, ts, vs, y0, integ0, p_elec_0, p_floor,
             dt, n_steps, decim, out, euler=False):
    """Batch-run ``n_steps`` macro steps, sampling every ``decim`` steps into
    ``out`` (preallocated (n_samples, ncols) float64).  Returns the final
    (y, integ) carry.  Raises LoopNumericsError on non-finite states.
    """
    nbp = len(ts)
    cursor = 0
    y = tuple(y0)
    integ = list(integ0)
    row = 0

    def record(row, t, y, cursor):
        v, _ = _wind_at(ts, vs, nbp, cursor, t)
        beta = y[-1]
        omw = y[0]
        omg = y[0] if model == 1 else y[1]
        lam = pp[_P_KTSR] * omw / v if v > 0.0 else 0.0
        cp = _cp_poly(pp, lam, beta)
        pm = _aero_power(pp, omw, beta, v)
        o = out[row]
        o[0] = t
        o[1] = v
        o[2] = beta
        o[3] = lam
        o[4] = cp
        o[5] = pm
        o[6] = y[-4]
        o[7] = y[-3]
        o[8] = omw
        o[9] = omg
        o[10] = _omega_ref(pp, y[-3])
        if model == 2:
            o[11] = pp[_P_KSH] * y[2] + pp[_P_DSH] * (y[0] - y[1])

    record(row, 0.0, y, cursor)
    row += 1
    for i in range(n_steps):
        t = i * dt
        y, cursor = step_once(model, t, y, integ, p_elec_0, p_floor, pp,
                              ts, vs, nbp, cursor, dt, euler)
        if (i + 1) % decim == 0:
            total = 0.0
            for x in y:
                total += x
            if not (total - total == 0.0):
                raise LoopNumericsError(
                    f"non-finite state at t={(i + 1) * dt!r}: {y!r}"
                )
            if row < out.shape[0]:
                record(row, (i + 1) * dt, y, cursor)
                row += 1
    return y, integ
