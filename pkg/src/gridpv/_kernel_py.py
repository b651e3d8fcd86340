"""Pure-Python plant and inner-control stepper.

Line-for-line twin of ``_kernel.pyx``.  Any change to the arithmetic here
must be mirrored there, in the same operation order, or the backends stop
agreeing bit for bit.
"""

from __future__ import annotations

import math

TWO_PI_3 = 2.0 * math.pi / 3.0
INV_SQRT3 = 1.0 / math.sqrt(3.0)
SQRT2 = math.sqrt(2.0)


def _curve(table, n, dv, v):
    if v <= 0.0:
        return table[0]
    x = v / dv
    k = int(x)
    if k >= n - 1:
        return 0.0
    frac = x - k
    return table[k] + frac * (table[k + 1] - table[k])


def _order(e, phases, descending):
    # insertion sort, ties keep the lower phase index first
    out = []
    for k in phases:
        j = len(out)
        while j > 0 and ((e[k] > e[out[j - 1]]) if descending else (e[k] < e[out[j - 1]])):
            j -= 1
        out.insert(j, k)
    return out


def _share(vals, r_f, i_dc):
    m = len(vals)
    total = 0.0
    rail = 0.0
    n = 0
    for n in range(1, m + 1):
        total += vals[n - 1]
        rail = (total - r_f * i_dc) / n
        if n == m or rail >= vals[n]:
            break
    return rail, n


def _bridge(e, i_dc, r_f, open_phase):
    phases = [k for k in range(3) if k != open_phase]
    hi = _order(e, phases, True)
    lo = _order(e, phases, False)
    v_p, n_p = _share([e[k] for k in hi], r_f, i_dc)
    v_n, n_n = _share([-e[k] for k in lo], r_f, i_dc)
    v_n = -v_n
    il = [0.0, 0.0, 0.0]
    for j in range(n_p):
        k = hi[j]
        il[k] += (e[k] - v_p) / r_f
    for j in range(n_n):
        k = lo[j]
        il[k] -= (v_n - e[k]) / r_f
    return il, v_p - v_n


def _open_phase(p, t):
    ph = int(p[14])
    if ph >= 0 and p[15] <= t < p[16]:
        return ph
    return -1


def settle_pcc(x, p, t):
    """Recompute the algebraic PCC voltages and load currents from the states."""
    r_f = p[8]
    e = [x[9 + k] + r_f * (x[6 + k] + x[3 + k]) for k in range(3)]
    il, _ = _bridge(e, x[12], r_f, _open_phase(p, t))
    for k in range(3):
        x[28 + k] = il[k]
        x[13 + k] = e[k] - r_f * il[k]


def record(x, p, curve, tr, col, k):
    t = k * p[0]
    va, vb, vc = x[13], x[14], x[15]
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
    i_pv = _curve(curve, len(curve), p[22], x[2])
    tr[18, col] = x[2] * i_pv
    tr[19, col] = i_pv
    tr[20, col] = x[2]
    ia, ib, ic = x[6], x[7], x[8]
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


def advance(x, p, curve, buf, k0, n, tr, col0):
    """Advance ``n`` plant steps from global step ``k0``; returns a fault code.

    ``x`` is updated in place; column ``col0 + j + 1`` of ``tr`` receives the
    state after step ``j``.  ``x[31]`` holds the number of steps completed.
    """
    table = curve.tolist() if hasattr(curve, "tolist") else list(curve)
    nc = len(table)
    dt = p[0]
    ctrl = int(p[1])
    l_b, c_pv, c_dc, l, r, l_s, r_f, c_f = p[2], p[3], p[4], p[5], p[6], p[7], p[8], p[9]
    v_pk, omega, r_load, l_dc = p[10], p[11], p[12], p[13]
    kp, ki, band, i_lim = p[17], p[18], p[19], p[20]
    ma_len = int(p[21])
    dv, v_floor, v_min, i_fault = p[22], p[23], p[24], p[25]
    ff_mode = int(p[26])

    v_dc, i_b, v_pv = x[0], x[1], x[2]
    iv = [x[3], x[4], x[5]]
    ig = [x[6], x[7], x[8]]
    vcf = [x[9], x[10], x[11]]
    i_dc = x[12]
    vp = [x[13], x[14], x[15]]
    legs = [x[16], x[17], x[18]]
    i_loss, perr, ma_sum, ma_idx = x[19], x[20], x[21], int(x[22])
    duty, v_ref = x[23], x[24]
    iref = [x[25], x[26], x[27]]
    il = [x[28], x[29], x[30]]
    v_t = x[33]
    code = 0
    done = 0

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
            v_t = math.sqrt(2.0 * (va * va + vb * vb + vc * vc) / 3.0)
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
            p_pv = v_pv * _curve(table, nc, dv, v_pv)
            if ff_mode == 0:
                i_pvf = 2.0 * p_pv / (3.0 * v_t)
            else:
                i_pvf = 2.0 * p_pv / (v_t / SQRT2)
            i_gp = i_loss - i_pvf
            iref[0] = i_gp * (va / v_t)
            iref[1] = i_gp * (vb / v_t)
            iref[2] = i_gp * (vc / v_t)
            # grid current is the controlled quantity; raising a pole lowers it
            for q in range(3):
                e_q = ig[q] - iref[q]
                if e_q > band:
                    legs[q] = 1.0
                elif e_q < -band:
                    legs[q] = 0.0

        # ---- plant derivatives at t
        i_pv = _curve(table, nc, dv, v_pv)
        one_d = 1.0 - duty
        di_b = (v_pv - one_d * v_dc) / l_b
        dv_pv = (i_pv - i_b) / c_pv
        p_in = one_d * v_dc * i_b
        half = 0.5 * v_dc
        pa = half if legs[0] > 0.5 else -half
        pb = half if legs[1] > 0.5 else -half
        pc = half if legs[2] > 0.5 else -half
        cm = (pa + pb + pc) / 3.0
        pole = [pa - cm, pb - cm, pc - cm]
        p_out = pole[0] * iv[0] + pole[1] * iv[1] + pole[2] * iv[2]
        wt = omega * t
        vs = [v_pk * math.sin(wt), v_pk * math.sin(wt - TWO_PI_3), v_pk * math.sin(wt + TWO_PI_3)]
        # bridge DC side from the rectified voltage at t
        e = [vcf[q] + r_f * (ig[q] + iv[q]) for q in range(3)]
        il, v_rect = _bridge(e, i_dc, r_f, _open_phase(p, t))

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
        # keep the three-wire sums at zero
        m = (iv[0] + iv[1] + iv[2]) / 3.0
        iv = [iv[0] - m, iv[1] - m, iv[2] - m]
        m = (ig[0] + ig[1] + ig[2]) / 3.0
        ig = [ig[0] - m, ig[1] - m, ig[2] - m]
        m = (vcf[0] + vcf[1] + vcf[2]) / 3.0
        vcf = [vcf[0] - m, vcf[1] - m, vcf[2] - m]

        # ---- algebraic PCC at t + dt
        e = [vcf[q] + r_f * (ig[q] + iv[q]) for q in range(3)]
        il, _ = _bridge(e, i_dc, r_f, _open_phase(p, t + dt))
        vp = [e[0] - r_f * il[0], e[1] - r_f * il[1], e[2] - r_f * il[2]]

        done = j + 1
        if v_dc < v_min:
            code = 1
        elif abs(iv[0]) > i_fault or abs(iv[1]) > i_fault or abs(iv[2]) > i_fault:
            code = 2
        elif not (math.isfinite(v_dc) and math.isfinite(i_b) and math.isfinite(v_pv)
                  and math.isfinite(ig[0] + ig[1] + ig[2] + iv[0] + iv[1] + iv[2] + i_dc)):
            code = 4
        _store(x, v_dc, i_b, v_pv, iv, ig, vcf, i_dc, vp, legs, i_loss, perr, ma_sum, ma_idx, iref, il, v_t)
        record(x, p, table, tr, col0 + done, k + 1)
        if code:
            break

    _store(x, v_dc, i_b, v_pv, iv, ig, vcf, i_dc, vp, legs, i_loss, perr, ma_sum, ma_idx, iref, il, v_t)
    x[31] = done
    x[32] = code
    return code


def _store(x, v_dc, i_b, v_pv, iv, ig, vcf, i_dc, vp, legs, i_loss, perr, ma_sum, ma_idx, iref, il, v_t):
    x[0], x[1], x[2] = v_dc, i_b, v_pv
    x[3], x[4], x[5] = iv
    x[6], x[7], x[8] = ig
    x[9], x[10], x[11] = vcf
    x[12] = i_dc
    x[13], x[14], x[15] = vp
    x[16], x[17], x[18] = legs
    x[19], x[20], x[21], x[22] = i_loss, perr, ma_sum, ma_idx
    x[25], x[26], x[27] = iref
    x[28], x[29], x[30] = il
    x[33] = v_t
