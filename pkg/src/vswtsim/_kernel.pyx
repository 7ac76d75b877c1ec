# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled stepping kernel.

Operation-for-operation mirror of ``vswtsim._pyloop`` (same packed parameter
layout, same expression shapes, no FMA contraction at compile time), so both
backends produce bit-identical trajectories.  Keep the two files in lockstep;
the cross-backend equality test enforces it.
"""

cdef enum:
    P_KTSR = 0
    P_KROT = 1
    P_VIN = 2
    P_VOUT = 3
    P_THR = 4
    P_OMMAX = 5
    P_KPP = 6
    P_KIP = 7
    P_KPC = 8
    P_KIC = 9
    P_TPI = 10
    P_BMIN = 11
    P_BMAX = 12
    P_BRATE = 13
    P_KPT = 14
    P_KIT = 15
    P_TCON = 16
    P_TF = 17
    P_TPC = 18
    P_PEMAX = 19
    P_PERATE = 20
    P_PMAX = 21
    P_H1 = 22
    P_H2W = 23
    P_H2G = 24
    P_DSH = 25
    P_KSH = 26
    P_OM0 = 27
    P_ALPHA = 28
    P_TPI_BYP = 53
    P_TPC_BYP = 54

cdef double SPEED_EPS = 1e-3


cdef inline double _cp_poly(const double* pp, double lam, double beta) noexcept nogil:
    cdef double acc = 0.0
    cdef double row
    cdef int i, j, base
    for i in range(4, -1, -1):
        row = 0.0
        base = P_ALPHA + 5 * i
        for j in range(4, -1, -1):
            row = row * lam + pp[base + j]
        acc = acc * beta + row
    return acc


cdef inline double _omega_ref(const double* pp, double pef) noexcept nogil:
    if pef < pp[P_THR]:
        return -0.67 * pef * pef + 1.42 * pef + 0.51
    return pp[P_OMMAX]


cdef inline double _aero_power(const double* pp, double omega, double beta,
                               double v) noexcept nogil:
    cdef double lam, pm
    if v < pp[P_VIN] or v > pp[P_VOUT] or v <= 0.0:
        return 0.0
    lam = pp[P_KTSR] * omega / v
    pm = pp[P_KROT] * _cp_poly(pp, lam, beta) * (v * v * v)
    return pm if pm > 0.0 else 0.0


cdef inline double _wind_at(const double* ts, const double* vs, int n,
                            int* cursor, double tau) noexcept nogil:
    cdef int c = cursor[0]
    while c + 1 < n and tau >= ts[c + 1]:
        c += 1
    cursor[0] = c
    if tau <= ts[0]:
        return vs[0]
    if c + 1 >= n:
        return vs[n - 1]
    return vs[c] + (vs[c + 1] - vs[c]) * (tau - ts[c]) / (ts[c + 1] - ts[c])


cdef inline int _derivs(int model, const double* pp, const double* y, double v,
                        double p_cmd, double beta_cmd, double flo,
                        double* d, int n) noexcept nogil:
    """Fills d[0..n); returns 0 or a speed-guard error code."""
    cdef double pm, tm, te, tsh, omw, omg, th, pe, beta, dpe, dpef, dpf, db
    if model == 1:
        pm = _aero_power(pp, y[0], y[4], v)
        d[0] = (pm - y[1]) / (2.0 * pp[P_H1])
    else:
        omw = y[0]
        omg = y[1]
        th = y[2]
        pm = _aero_power(pp, omw, y[6], v)
        if pm != 0.0:
            if omw < SPEED_EPS:
                return 2
            tm = pm / omw
        else:
            tm = 0.0
        if y[3] != 0.0:
            if omg < SPEED_EPS:
                return 2
            te = y[3] / omg
        else:
            te = 0.0
        tsh = pp[P_KSH] * th + pp[P_DSH] * (omw - omg)
        d[0] = (tm - tsh) / (2.0 * pp[P_H2W])
        d[1] = (tsh - te) / (2.0 * pp[P_H2G])
        d[2] = pp[P_OM0] * (omw - omg)
    pe = y[n - 4]
    dpe = (p_cmd - pe) / pp[P_TCON]
    if dpe > pp[P_PERATE]:
        dpe = pp[P_PERATE]
    elif dpe < -pp[P_PERATE]:
        dpe = -pp[P_PERATE]
    if (pe >= pp[P_PEMAX] and dpe > 0.0) or (pe <= flo and dpe < 0.0):
        dpe = 0.0
    dpef = (pe - y[n - 3]) / pp[P_TF]
    if pp[P_TPC_BYP] != 0.0:
        dpf = 0.0
    else:
        dpf = (pe - y[n - 2]) / pp[P_TPC]
    beta = y[n - 1]
    if pp[P_TPI_BYP] != 0.0:
        db = 0.0
    else:
        db = (beta_cmd - beta) / pp[P_TPI]
        if db > pp[P_BRATE]:
            db = pp[P_BRATE]
        elif db < -pp[P_BRATE]:
            db = -pp[P_BRATE]
        if (beta >= pp[P_BMAX] and db > 0.0) or (beta <= pp[P_BMIN] and db < 0.0):
            db = 0.0
    d[n - 4] = dpe
    d[n - 3] = dpef
    d[n - 2] = dpf
    d[n - 1] = db
    return 0


cdef inline double _clip(double x, double lo, double hi) noexcept nogil:
    return lo if x < lo else (hi if x > hi else x)


cdef inline void _record(int model, const double* pp, const double* y, int n,
                         double t, double v, double[:, ::1] out,
                         long row) noexcept nogil:
    cdef double beta = y[n - 1]
    cdef double omw = y[0]
    cdef double omg = y[0] if model == 1 else y[1]
    cdef double lam = pp[P_KTSR] * omw / v if v > 0.0 else 0.0
    out[row, 0] = t
    out[row, 1] = v
    out[row, 2] = beta
    out[row, 3] = lam
    out[row, 4] = _cp_poly(pp, lam, beta)
    out[row, 5] = _aero_power(pp, omw, beta, v)
    out[row, 6] = y[n - 4]
    out[row, 7] = y[n - 3]
    out[row, 8] = omw
    out[row, 9] = omg
    out[row, 10] = _omega_ref(pp, y[n - 3])
    if model == 2:
        out[row, 11] = pp[P_KSH] * y[2] + pp[P_DSH] * (y[0] - y[1])


def run_loop(int model, double[::1] pp_mv, double[::1] ts_mv, double[::1] vs_mv,
             double[::1] y0, double[::1] integ0, double p_elec_0, double p_floor,
             double dt, long n_steps, long decim, double[:, ::1] out,
             int euler_int):
    """Mirror of ``_pyloop.run_loop``.  Returns (code, detail): code 0 on
    success, 1 for a non-finite state, 2 for the standstill torque guard."""
    cdef const double* pp = &pp_mv[0]
    cdef const double* ts = &ts_mv[0]
    cdef const double* vs = &vs_mv[0]
    cdef int nbp = ts_mv.shape[0]
    cdef int n = 5 if model == 1 else 7
    cdef int cursor = 0
    cdef double[7] y
    cdef double[7] y2
    cdef double[7] k1
    cdef double[7] k2
    cdef double[7] k3
    cdef double[7] k4
    cdef double I_t = integ0[0]
    cdef double I_p = integ0[1]
    cdef double I_c = integ0[2]
    cdef int i
    cdef long istep, row, nrows
    cdef int code = 0
    cdef double t, v, v2, v4, flo, pef, pf, beta, omw, omg, omr
    cdef double e_t, u_lo, u_hi, cand, u_t, p_cmd
    cdef double comp_in, e_p, e_c, up_hold, up_int, uc_hold, uc_int
    cdef double cmd1, u_p, u_c, beta_cmd, h2, total, bstep, lam, cp, pm
    cdef bint pinned_lo, pinned_hi, online
    cdef double t_fail = 0.0

    for i in range(n):
        y[i] = y0[i]
    nrows = out.shape[0]

    with nogil:
        # initial sample
        v = _wind_at(ts, vs, nbp, &cursor, 0.0)
        _record(model, pp, y, n, 0.0, v, out, 0)
        row = 1

        for istep in range(n_steps):
            t = istep * dt
            v = _wind_at(ts, vs, nbp, &cursor, t)
            if not (v - v == 0.0):
                code = 1
                t_fail = t
                break
            online = pp[P_VIN] <= v and v <= pp[P_VOUT]
            flo = p_floor if online else 0.0
            pef = y[n - 3]
            pf = y[n - 2]
            beta = y[n - 1]
            omw = y[0]
            omg = y[0] if model == 1 else y[1]
            omr = _omega_ref(pp, pef)

            e_t = omg - omr
            u_lo = p_floor - p_elec_0
            u_hi = pp[P_PEMAX] - p_elec_0
            cand = pp[P_KPT] * e_t + pp[P_KIT] * (I_t + e_t * dt)
            if cand > u_hi:
                u_t = u_hi
            elif cand < u_lo:
                u_t = u_lo
            else:
                u_t = cand
                I_t = I_t + e_t * dt
            p_cmd = p_elec_0 + u_t
            if not online:
                p_cmd = 0.0

            comp_in = y[n - 4] if pp[P_TPC_BYP] != 0.0 else pf
            e_p = omw - omr
            e_c = comp_in - pp[P_PMAX]
            up_hold = pp[P_KPP] * e_p + pp[P_KIP] * I_p
            up_int = up_hold + pp[P_KIP] * e_p * dt
            uc_hold = pp[P_KPC] * e_c + pp[P_KIC] * I_c
            uc_int = uc_hold + pp[P_KIC] * e_c * dt
            cmd1 = up_int + uc_int
            pinned_lo = beta <= pp[P_BMIN] and cmd1 < pp[P_BMIN]
            pinned_hi = beta >= pp[P_BMAX] and cmd1 > pp[P_BMAX]
            if (pinned_lo and e_p < 0.0) or (pinned_hi and e_p > 0.0):
                u_p = up_hold
            else:
                u_p = up_int
                I_p = I_p + e_p * dt
            if (pinned_lo and e_c < 0.0) or (pinned_hi and e_c > 0.0):
                u_c = uc_hold
            else:
                u_c = uc_int
                I_c = I_c + e_c * dt
            beta_cmd = u_p + u_c

            code = _derivs(model, pp, y, v, p_cmd, beta_cmd, flo, k1, n)
            if code != 0:
                t_fail = t
                break
            if euler_int:
                for i in range(n):
                    y[i] = y[i] + dt * k1[i]
            else:
                h2 = 0.5 * dt
                v2 = _wind_at(ts, vs, nbp, &cursor, t + h2)
                if not (v2 - v2 == 0.0):
                    code = 1
                    t_fail = t
                    break
                for i in range(n):
                    y2[i] = y[i] + h2 * k1[i]
                code = _derivs(model, pp, y2, v2, p_cmd, beta_cmd, flo, k2, n)
                if code != 0:
                    t_fail = t
                    break
                for i in range(n):
                    y2[i] = y[i] + h2 * k2[i]
                code = _derivs(model, pp, y2, v2, p_cmd, beta_cmd, flo, k3, n)
                if code != 0:
                    t_fail = t
                    break
                v4 = _wind_at(ts, vs, nbp, &cursor, t + dt)
                for i in range(n):
                    y2[i] = y[i] + dt * k3[i]
                code = _derivs(model, pp, y2, v4, p_cmd, beta_cmd, flo, k4, n)
                if code != 0:
                    t_fail = t
                    break
                for i in range(n):
                    y[i] = y[i] + dt * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0

            if pp[P_TPI_BYP] != 0.0:
                bstep = pp[P_BRATE] * dt
                y[n - 1] = beta + _clip(beta_cmd - beta, -bstep, bstep)
            if pp[P_TPC_BYP] != 0.0:
                y[n - 2] = y[n - 4]

            y[n - 4] = _clip(y[n - 4], flo, pp[P_PEMAX])
            y[n - 1] = _clip(y[n - 1], pp[P_BMIN], pp[P_BMAX])

            if (istep + 1) % decim == 0:
                total = 0.0
                for i in range(n):
                    total += y[i]
                if not (total - total == 0.0):
                    code = 1
                    t_fail = (istep + 1) * dt
                    break
                if row < nrows:
                    t = (istep + 1) * dt
                    v = _wind_at(ts, vs, nbp, &cursor, t)
                    _record(model, pp, y, n, t, v, out, row)
                    row += 1

    if code == 1:
        return 1, f"non-finite state at t={t_fail!r}"
    if code == 2:
        return 2, f"speed below {SPEED_EPS} pu with nonzero power at t={t_fail!r}"
    for i in range(n):
        y0[i] = y[i]
    integ0[0] = I_t
    integ0[1] = I_p
    integ0[2] = I_c
    return 0, ""
