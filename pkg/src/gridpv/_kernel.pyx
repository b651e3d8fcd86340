# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled plant and inner-control stepper.

Twin of ``_kernel_py.py``; the arithmetic is written in the same order so
both backends produce identical doubles (built with -ffp-contract=off).
"""

from libc.math cimport sin, sqrt, isfinite, fabs

cdef double TWO_PI_3 = 2.0 * 3.141592653589793 / 3.0
cdef double INV_SQRT3 = 1.0 / sqrt(3.0)
cdef double SQRT2 = sqrt(2.0)


cdef inline double _curve(const double[::1] table, Py_ssize_t n, double dv, double v) noexcept nogil:
    cdef double x, frac
    cdef Py_ssize_t k
    if v <= 0.0:
        return table[0]
    x = v / dv
    k = <Py_ssize_t>x
    if k >= n - 1:
        return 0.0
    frac = x - k
    return table[k] + frac * (table[k + 1] - table[k])


cdef inline int _order(double* e, int* phases, int m, int descending, int* out) noexcept nogil:
    cdef int a, j, q, k
    cdef int cnt = 0
    for a in range(m):
        k = phases[a]
        j = cnt
        while j > 0 and ((e[k] > e[out[j - 1]]) if descending else (e[k] < e[out[j - 1]])):
            j -= 1
        q = cnt
        while q > j:
            out[q] = out[q - 1]
            q -= 1
        out[j] = k
        cnt += 1
    return cnt


cdef inline double _share(double* vals, int m, double r_f, double i_dc, int* n_out) noexcept nogil:
    cdef double total = 0.0
    cdef double rail = 0.0
    cdef int n = 0
    for n in range(1, m + 1):
        total += vals[n - 1]
        rail = (total - r_f * i_dc) / n
        if n == m or rail >= vals[n]:
            break
    n_out[0] = n
    return rail


cdef inline double _bridge(double* e, double i_dc, double r_f, int open_phase, double* il) noexcept nogil:
    cdef int phases[3]
    cdef int hi[3]
    cdef int lo[3]
    cdef double vh[3]
    cdef double vl[3]
    cdef int m = 0
    cdef int k, j, n_p, n_n
    cdef double v_p, v_n
    for k in range(3):
        if k != open_phase:
            phases[m] = k
            m += 1
    _order(e, phases, m, 1, hi)
    _order(e, phases, m, 0, lo)
    for j in range(m):
        vh[j] = e[hi[j]]
        vl[j] = -e[lo[j]]
    v_p = _share(vh, m, r_f, i_dc, &n_p)
    v_n = _share(vl, m, r_f, i_dc, &n_n)
    v_n = -v_n
    il[0] = 0.0
    il[1] = 0.0
    il[2] = 0.0
    for j in range(n_p):
        k = hi[j]
        il[k] += (e[k] - v_p) / r_f
    for j in range(n_n):
        k = lo[j]
        il[k] -= (v_n - e[k]) / r_f
    return v_p - v_n


cdef inline int _open_phase(const double[::1] p, double t) noexcept nogil:
    cdef int ph = <int>p[14]
    if ph >= 0 and p[15] <= t and t < p[16]:
        return ph
    return -1


def settle_pcc(double[::1] x, const double[::1] p, double t):
    """Recompute the algebraic PCC voltages and load currents from the states."""
    cdef double r_f = p[8]
    cdef double e[3]
    cdef double il[3]
    cdef int k
    for k in range(3):
        e[k] = x[9 + k] + r_f * (x[6 + k] + x[3 + k])
    _bridge(e, x[12], r_f, _open_phase(p, t), il)
    for k in range(3):
        x[28 + k] = il[k]
        x[13 + k] = e[k] - r_f * il[k]


cdef void _record(double[::1] x, const double[::1] p, const double[::1] curve, double[:, ::1] tr,
                  Py_ssize_t col, long k) noexcept nogil:
    cdef double t = k * p[0]
    cdef double va = x[13]
    cdef double vb = x[14]
    cdef double vc = x[15]
    cdef double ia, ib, ic, i_pv, r, r_f, loss, i_f
    cdef int j
    tr[0, col] = t
    tr[1, col] = va
    tr[2, col] = vb
    tr[3, col] = vc
    for j in range(3):
        tr[4 + j, col] = x[6 + j]
        tr[7 + j, col] = x[28 + j]
        tr[10 + j, col] = x[3 + j]
        tr[13 + j, col] = x[25 + j]
    tr[16, col] = x[0]
    tr[17, col] = x[24]
    i_pv = _curve(curve, curve.shape[0], p[22], x[2])
    tr[18, col] = x[2] * i_pv
    tr[19, col] = i_pv
    tr[20, col] = x[2]
    ia = x[6]
    ib = x[7]
    ic = x[8]
    tr[21, col] = va * ia + vb * ib + vc * ic
    tr[22, col] = ((vb - vc) * ia + (vc - va) * ib + (va - vb) * ic) * INV_SQRT3
    tr[23, col] = x[23]
    tr[25, col] = va * x[28] + vb * x[29] + vc * x[30]
    r = p[6]
    r_f = p[8]
    loss = 0.0
    for j in range(3):
        i_f = x[6 + j] + x[3 + j] - x[28 + j]
        loss += r * x[3 + j] * x[3 + j] + r_f * i_f * i_f
    tr[26, col] = loss


def record(double[::1] x, const double[::1] p, const double[::1] curve, double[:, ::1] tr, Py_ssize_t col, long k):
    _record(x, p, curve, tr, col, k)


def advance(double[::1] x, const double[::1] p, const double[::1] curve, double[::1] buf,
            long k0, long n, double[:, ::1] tr, Py_ssize_t col0):
    """Advance ``n`` plant steps from global step ``k0``; returns a fault code."""
    cdef Py_ssize_t nc = curve.shape[0]
    cdef double dt = p[0]
    cdef long ctrl = <long>p[1]
    cdef double l_b = p[2], c_pv = p[3], c_dc = p[4], l = p[5], r = p[6], l_s = p[7], r_f = p[8], c_f = p[9]
    cdef double v_pk = p[10], omega = p[11], r_load = p[12], l_dc = p[13]
    cdef double kp = p[17], ki = p[18], band = p[19], i_lim = p[20]
    cdef long ma_len = <long>p[21]
    cdef double dv = p[22], v_floor = p[23], v_min = p[24], i_fault = p[25]
    cdef int ff_mode = <int>p[26]

    cdef double v_dc = x[0], i_b = x[1], v_pv = x[2]
    cdef double iv[3]
    cdef double ig[3]
    cdef double vcf[3]
    cdef double vp[3]
    cdef double legs[3]
    cdef double iref[3]
    cdef double il[3]
    cdef double e[3]
    cdef double vs[3]
    cdef double pole[3]
    cdef int q
    for q in range(3):
        iv[q] = x[3 + q]
        ig[q] = x[6 + q]
        vcf[q] = x[9 + q]
        vp[q] = x[13 + q]
        legs[q] = x[16 + q]
        iref[q] = x[25 + q]
        il[q] = x[28 + q]
    cdef double i_dc = x[12]
    cdef double i_loss = x[19], perr = x[20], ma_sum = x[21]
    cdef long ma_idx = <long>x[22]
    cdef double duty = x[23], v_ref = x[24]
    cdef double v_t = x[33]
    cdef int code = 0
    cdef long done = 0
    cdef long j, k
    cdef double t, vab, vbc, va, vb, vc, old, err, out, p_pv, i_pvf, i_gp, e_q
    cdef double i_pv, one_d, di_b, dv_pv, p_in, half, pa, pb, pc, cm, p_out, wt, v_rect
    cdef double vpq, i_f, m

    with nogil:
        for j in range(n):
            k = k0 + j
            t = k * dt
            # ---- control sample
            if k % ctrl == 0:
                vab = vp[0] - vp[1]
                vbc = vp[1] - vp[2]
                va = (2.0 * vab + vbc) / 3.0
                vb = (-vab + vbc) / 3.0
                vc = (-vab - 2.0 * vbc) / 3.0
                v_t = sqrt(2.0 * (va * va + vb * vb + vc * vc) / 3.0)
                if not v_t >= v_floor:
                    code = 3
                    break
                old = buf[ma_idx]
                buf[ma_idx] = v_dc
                ma_sum = ma_sum + v_dc - old
                ma_idx += 1
                if ma_idx == ma_len:
                    ma_idx = 0
                err = v_ref - ma_sum / ma_len
                out = i_loss + kp * (err - perr) + ki * err
                if out > i_lim:
                    out = i_lim
                elif out < -i_lim:
                    out = -i_lim
                i_loss = out
                perr = err
                p_pv = v_pv * _curve(curve, nc, dv, v_pv)
                if ff_mode == 0:
                    i_pvf = 2.0 * p_pv / (3.0 * v_t)
                else:
                    i_pvf = 2.0 * p_pv / (v_t / SQRT2)
                i_gp = i_loss - i_pvf
                iref[0] = i_gp * (va / v_t)
                iref[1] = i_gp * (vb / v_t)
                iref[2] = i_gp * (vc / v_t)
                for q in range(3):
                    e_q = ig[q] - iref[q]
                    if e_q > band:
                        legs[q] = 1.0
                    elif e_q < -band:
                        legs[q] = 0.0

            # ---- plant derivatives at t
            i_pv = _curve(curve, nc, dv, v_pv)
            one_d = 1.0 - duty
            di_b = (v_pv - one_d * v_dc) / l_b
            dv_pv = (i_pv - i_b) / c_pv
            p_in = one_d * v_dc * i_b
            half = 0.5 * v_dc
            pa = half if legs[0] > 0.5 else -half
            pb = half if legs[1] > 0.5 else -half
            pc = half if legs[2] > 0.5 else -half
            cm = (pa + pb + pc) / 3.0
            pole[0] = pa - cm
            pole[1] = pb - cm
            pole[2] = pc - cm
            p_out = pole[0] * iv[0] + pole[1] * iv[1] + pole[2] * iv[2]
            wt = omega * t
            vs[0] = v_pk * sin(wt)
            vs[1] = v_pk * sin(wt - TWO_PI_3)
            vs[2] = v_pk * sin(wt + TWO_PI_3)
            for q in range(3):
                e[q] = vcf[q] + r_f * (ig[q] + iv[q])
            v_rect = _bridge(e, i_dc, r_f, _open_phase(p, t), il)

            # ---- explicit update
            i_b = i_b + dt * di_b
            if i_b < 0.0:
                i_b = 0.0
            v_pv = v_pv + dt * dv_pv
            if v_pv < 0.0:
                v_pv = 0.0
            v_dc = v_dc + dt * ((p_in - p_out) / (c_dc * v_dc))
            for q in range(3):
                vpq = e[q] - r_f * il[q]
                i_f = ig[q] + iv[q] - il[q]
                iv[q] = iv[q] + dt * ((pole[q] - vpq - r * iv[q]) / l)
                ig[q] = ig[q] + dt * ((vs[q] - vpq) / l_s)
                vcf[q] = vcf[q] + dt * (i_f / c_f)
            if l_dc > 0.0:
                i_dc = i_dc + dt * ((v_rect - r_load * i_dc) / l_dc)
                if i_dc < 0.0:
                    i_dc = 0.0
            else:
                i_dc = v_rect / r_load if v_rect > 0.0 else 0.0
            m = (iv[0] + iv[1] + iv[2]) / 3.0
            iv[0] = iv[0] - m
            iv[1] = iv[1] - m
            iv[2] = iv[2] - m
            m = (ig[0] + ig[1] + ig[2]) / 3.0
            ig[0] = ig[0] - m
            ig[1] = ig[1] - m
            ig[2] = ig[2] - m
            m = (vcf[0] + vcf[1] + vcf[2]) / 3.0
            vcf[0] = vcf[0] - m
            vcf[1] = vcf[1] - m
            vcf[2] = vcf[2] - m

            # ---- algebraic PCC at t + dt
            for q in range(3):
                e[q] = vcf[q] + r_f * (ig[q] + iv[q])
            _bridge(e, i_dc, r_f, _open_phase(p, t + dt), il)
            for q in range(3):
                vp[q] = e[q] - r_f * il[q]

            done = j + 1
            if v_dc < v_min:
                code = 1
            elif fabs(iv[0]) > i_fault or fabs(iv[1]) > i_fault or fabs(iv[2]) > i_fault:
                code = 2
            elif not (isfinite(v_dc) and isfinite(i_b) and isfinite(v_pv)
                      and isfinite(ig[0] + ig[1] + ig[2] + iv[0] + iv[1] + iv[2] + i_dc)):
                code = 4
            _store(x, v_dc, i_b, v_pv, iv, ig, vcf, i_dc, vp, legs, i_loss, perr, ma_sum, ma_idx, iref, il, v_t)
            _record(x, p, curve, tr, col0 + done, k + 1)
            if code:
                break

    _store(x, v_dc, i_b, v_pv, iv, ig, vcf, i_dc, vp, legs, i_loss, perr, ma_sum, ma_idx, iref, il, v_t)
    x[31] = done
    x[32] = code
    return code


cdef inline void _store(double[::1] x, double v_dc, double i_b, double v_pv, double* iv, double* ig,
                        double* vcf, double i_dc, double* vp, double* legs, double i_loss, double perr,
                        double ma_sum, long ma_idx, double* iref, double* il, double v_t) noexcept nogil:
    cdef int q
    x[0] = v_dc
    x[1] = i_b
    x[2] = v_pv
    for q in range(3):
        x[3 + q] = iv[q]
        x[6 + q] = ig[q]
        x[9 + q] = vcf[q]
        x[13 + q] = vp[q]
        x[16 + q] = legs[q]
        x[25 + q] = iref[q]
        x[28 + q] = il[q]
    x[12] = i_dc
    x[19] = i_loss
    x[20] = perr
    x[21] = ma_sum
    x[22] = ma_idx
    x[33] = v_t
