# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled Monte Carlo round kernels.

Mirrors ``polguard._kernels_py`` operation-for-operation: same per-round
draw layout (24 uniform doubles per round, consumed in slot order), same
parameter vector, same tally layout, and floating-point expressions written
in the same evaluation order so both backends turn one random stream into
the same clicks.  Compiled with ``-ffp-contract=off`` to keep IEEE ordering.
"""

import numpy as np

cimport numpy as cnp
from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport exp, sqrt
from numpy.random cimport bitgen_t
from scipy.special.cython_special cimport ndtri

cnp.import_array()

DRAWS_PER_ROUND = 24
PARAM_SIZE = 37

DEF N_PARAMS = 37

# parameter indices (mirror _kernels_py)
DEF P_RSW = 0
DEF P_FID = 1
DEF P_MU_E = 2
DEF P_MU_SRC = 3
DEF P_EVE_C = 4
DEF P_EVE_W = 5
DEF P_EVE_NC = 6
DEF P_ET = 7
DEF P_LAM_T = 8
DEF P_VT = 9
DEF P_LAM_B = 13
DEF P_VB = 14
DEF P_PA_FIXED = 18
DEF P_RA_FIXED = 19
DEF P_PERFECT = 20
DEF P_WQ = 21
DEF P_WBL = 22
DEF P_WWL = 23
DEF P_IB = 24
DEF P_ETA = 25
DEF P_BG = 31

# tally columns
DEF T_ROUNDS = 0
DEF T_TRIGGERS = 1
DEF T_ALERT = 2
DEF T_ALERT2 = 3
DEF T_SIFTED = 4
DEF T_ERRORS = 5
DEF T_KEY = 6
DEF T_DBLSAME = 7
DEF T_DBLCROSS = 8
DEF T_DET = 9
DEF T_ALERTRND = 15
DEF T_ARR_A = 16
DEF T_ARR_B = 17

DEF MODE_HONEST = 0
DEF MODE_INTERCEPT = 1
DEF MODE_QUANTUM = 2
DEF MODE_BLINDING = 3
DEF MODE_WAVELENGTH = 4
DEF MODE_INTEGRATED = 5


cdef inline void _fill_draws(bitgen_t *rng, double *u) noexcept nogil:
    cdef int i
    for i in range(24):
        u[i] = rng.next_double(rng.state)


cdef inline void _haar_row0(const double *u, double *row) noexcept nogil:
    """First row of the Haar unitary from the 8 gaussian slots.

    Same Gram-Schmidt closed form as qmath.haar_gaussians_to_unitary; only
    row 0 is stored (re00, im00, re01, im01).
    """
    cdef double are = ndtri(u[0]), aim = ndtri(u[1])
    cdef double bre = ndtri(u[2]), bim = ndtri(u[3])
    cdef double cre = ndtri(u[4]), cim = ndtri(u[5])
    cdef double dre = ndtri(u[6]), dim = ndtri(u[7])
    cdef double n1 = sqrt(are * are + aim * aim + bre * bre + bim * bim)
    cdef double q11re = are / n1, q11im = aim / n1
    cdef double q21re = bre / n1, q21im = bim / n1
    cdef double t1re = q11re * cre + q11im * cim
    cdef double t1im = q11re * cim - q11im * cre
    cdef double t2re = q21re * dre + q21im * dim
    cdef double t2im = q21re * dim - q21im * dre
    cdef double innre = t1re + t2re
    cdef double innim = t1im + t2im
    cdef double c2re = cre - (innre * q11re - innim * q11im)
    cdef double c2im = cim - (innre * q11im + innim * q11re)
    cdef double d2re = dre - (innre * q21re - innim * q21im)
    cdef double d2im = dim - (innre * q21im + innim * q21re)
    cdef double n2 = sqrt(c2re * c2re + c2im * c2im + d2re * d2re + d2im * d2im)
    cdef double q12re = c2re / n2, q12im = c2im / n2
    cdef double q22re = d2re / n2, q22im = d2im / n2
    cdef double r1re = q12re * cre + q12im * cim
    cdef double r1im = q12re * cim - q12im * cre
    cdef double r2re = q22re * dre + q22im * dim
    cdef double r2im = q22re * dim - q22im * dre
    cdef double r22re = r1re + r2re
    cdef double r22im = r1im + r2im
    cdef double mag = sqrt(r22re * r22re + r22im * r22im)
    cdef double phre = r22re / mag
    cdef double phim = -r22im / mag
    row[0] = q11re
    row[1] = q11im
    row[2] = q12re * phre - q12im * phim
    row[3] = q12re * phim + q12im * phre


cdef inline double _row0_overlap(const double *row, double lam, const double *v) noexcept nogil:
    """lam |(U v)_0|^2 + (1-lam)(1 - |(U v)_0|^2); v = (re0, im0, re1, im1)."""
    cdef double t1re = row[0] * v[0] - row[1] * v[1]
    cdef double t1im = row[0] * v[1] + row[1] * v[0]
    cdef double t2re = row[2] * v[2] - row[3] * v[3]
    cdef double t2im = row[2] * v[3] + row[3] * v[2]
    cdef double are = t1re + t2re
    cdef double aim = t1im + t2im
    cdef double w = are * are + aim * aim
    cdef double pa = lam * w + (1.0 - lam) * (1.0 - w)
    if pa < 0.0:
        pa = 0.0
    if pa > 1.0:
        pa = 1.0
    return pa


cdef inline double _trigger_overlap(const double *p, const double *row) noexcept nogil:
    if p[P_PA_FIXED] >= 0.0:
        return p[P_PA_FIXED]
    return _row0_overlap(row, p[P_LAM_T], &p[P_VT])


cdef inline double _blinding_overlap(const double *p, const double *row) noexcept nogil:
    if p[P_RA_FIXED] >= 0.0:
        return p[P_RA_FIXED]
    return _row0_overlap(row, p[P_LAM_B], &p[P_VB])


cdef inline double _interp_clamped(double x, const double *xp, const double *fp, int n) noexcept nogil:
    """Piecewise-linear interpolation clamped at the table ends (np.interp)."""
    cdef int j = 0
    cdef double slope
    if x <= xp[0]:
        return fp[0]
    if x >= xp[n - 1]:
        return fp[n - 1]
    while j < n - 2 and xp[j + 1] <= x:
        j += 1
    if x == xp[j]:
        return fp[j]
    slope = (fp[j + 1] - fp[j]) / (xp[j + 1] - xp[j])
    return slope * (x - xp[j]) + fp[j]


cdef inline double _phase_fraction(int j, int k_e, double fid) noexcept nogil:
    if (k_e >> 1) != (j >> 1):
        return 0.5
    if k_e == j:
        return fid
    return 1.0 - fid


cdef struct Squash:
    int kept
    int basis
    int bit
    int dbl
    int cross


cdef inline Squash _squash_4det(const int *b, double u_squash) noexcept nogil:
    cdef Squash s
    cdef int da = b[0] | b[1]
    cdef int rl = b[2] | b[3]
    cdef int pair_lo, pair_hi
    s.cross = da & rl
    s.kept = (da | rl) & (not s.cross)
    s.basis = 1 if (rl and s.kept) else 0
    if s.basis == 0:
        pair_lo = b[0]
        pair_hi = b[1]
    else:
        pair_lo = b[2]
        pair_hi = b[3]
    s.dbl = s.kept and pair_lo and pair_hi
    if s.dbl:
        s.bit = 1 if u_squash >= 0.5 else 0
    else:
        s.bit = 1 if pair_hi else 0
    return s


cdef inline Squash _squash_2det(int c1, int c2, int beta, double u_squash) noexcept nogil:
    cdef Squash s
    s.cross = 0
    s.kept = c1 | c2
    s.dbl = c1 & c2
    if s.dbl:
        s.bit = 1 if u_squash >= 0.5 else 0
    else:
        s.bit = 1 if c2 else 0
    s.basis = beta if s.kept else 0
    return s


cdef inline void _run_honest(const double *u, const double *p, long long *o) noexcept nogil:
    cdef int k_a = <int>(u[8] * 4.0)
    cdef int beta, sw, i, j, bit_a, matched, this_bit, alert_cnt
    cdef double mu = p[P_MU_SRC], fid = p[P_FID], frac, prob
    cdef int det[6]
    cdef Squash s
    if k_a > 3:
        k_a = 3
    beta = 1 if u[9] >= 0.5 else 0
    sw = 1 if u[10] < p[P_RSW] else 0
    if not sw:
        for j in range(4):
            frac = _phase_fraction(j, k_a, fid)
            prob = p[P_BG + 2 + j] + 1.0 - exp(-mu * frac * p[P_ETA + 2 + j] / 4.0)
            det[2 + j] = 1 if u[13 + 2 + j] < prob else 0
        det[0] = 1 if u[13] < p[P_BG + 0] else 0
        det[1] = 1 if u[14] < p[P_BG + 1] else 0
    else:
        matched = 1 if beta == (k_a >> 1) else 0
        bit_a = k_a & 1
        for i in range(2):
            this_bit = 1 if bit_a == i else 0
            if matched:
                frac = fid if this_bit else 1.0 - fid
            else:
                frac = 0.5
            prob = p[P_BG + i] + 1.0 - exp(-mu * 0.5 * frac * p[P_ETA + i])
            det[i] = 1 if u[13 + i] < prob else 0
        for j in range(4):
            det[2 + j] = 1 if u[13 + 2 + j] < p[P_BG + 2 + j] else 0

    if sw:
        s = _squash_2det(det[0], det[1], beta, u[19])
        alert_cnt = det[2] + det[3] + det[4] + det[5]
    else:
        s = _squash_4det(&det[2], u[19])
        alert_cnt = det[0] + det[1]

    o[T_ROUNDS] += 1
    o[T_TRIGGERS] += 1
    o[T_ALERT] += alert_cnt
    o[T_ALERT2] += alert_cnt * alert_cnt
    if s.kept:
        o[T_KEY] += 1
        if s.basis == (k_a >> 1):
            o[T_SIFTED] += 1
            if s.bit != (k_a & 1):
                o[T_ERRORS] += 1
    if s.dbl:
        o[T_DBLSAME] += 1
    if (not sw) and s.cross:
        o[T_DBLCROSS] += 1
    if alert_cnt > 0:
        o[T_ALERTRND] += 1
    for i in range(6):
        o[T_DET + i] += det[i]


cdef inline void _run_intercept(const double *u, const double *row, const double *p,
                                long long *o) noexcept nogil:
    cdef int k_a = <int>(u[8] * 4.0)
    cdef int beta, eve_basis, eve_bit, k_e, a_det, arm, b_bit, slot, i
    cdef int det[6]
    cdef double p_a, t
    if k_a > 3:
        k_a = 3
    beta = 1 if u[9] >= 0.5 else 0
    eve_basis = 1 if u[11] >= 0.5 else 0
    eve_bit = 1 if u[12] >= 0.5 else 0
    if eve_basis == (k_a >> 1):
        k_e = k_a
    else:
        k_e = (eve_basis << 1) + eve_bit
    p_a = _trigger_overlap(p, row)
    for i in range(6):
        det[i] = 0
    o[T_ROUNDS] += 1
    o[T_TRIGGERS] += 1
    if u[20] >= 0.5:
        t = 2.0 * (u[20] - 0.5)
        if t < p_a:
            # gated alert-path arrival
            if beta == (k_e >> 1):
                a_det = k_e & 1
            else:
                a_det = 1 if u[13] >= 0.5 else 0
            det[a_det] = 1
            o[T_ALERT] += 1
            o[T_ALERT2] += 1
            o[T_ALERTRND] += 1
            o[T_ARR_A] += 1
        else:
            arm = 1 if u[14] >= 0.5 else 0
            if arm == (k_e >> 1):
                b_bit = k_e & 1
            else:
                b_bit = 1 if u[15] >= 0.5 else 0
            slot = 2 * arm + b_bit
            det[2 + slot] = 1
            o[T_ARR_B] += 1
            o[T_KEY] += 1
            if arm == (k_a >> 1):
                o[T_SIFTED] += 1
                if b_bit != (k_a & 1):
                    o[T_ERRORS] += 1
    for i in range(6):
        o[T_DET + i] += det[i]


cdef inline int _eve_outcome(const double *u, const double *p, int k_a, int *k_e) noexcept nogil:
    cdef double t1 = p[P_EVE_C]
    cdef double t2 = t1 + p[P_EVE_W]
    cdef double t3 = t2 + 2.0 * p[P_EVE_NC]
    cdef int oc, nc_bit, other
    if u[11] < t1:
        oc = 0
    elif u[11] < t2:
        oc = 1
    elif u[11] < t3:
        oc = 2
    else:
        oc = 3
    nc_bit = 1 if u[12] >= 0.5 else 0
    other = (1 - (k_a >> 1)) << 1
    if oc == 0:
        k_e[0] = k_a
    elif oc == 1:
        k_e[0] = k_a ^ 1
    else:
        k_e[0] = other + nc_bit
    return oc


cdef inline void _run_quantum(const double *u, const double *row, const double *p,
                              long long *o) noexcept nogil:
    cdef int k_a = <int>(u[8] * 4.0)
    cdef int k_e = 0
    cdef int oc, forwarded, i, j, alert_cnt
    cdef double p_a, p_b, prob, frac
    cdef double mu_e = p[P_MU_E], fid = p[P_FID]
    cdef int det[6]
    cdef Squash s
    if k_a > 3:
        k_a = 3
    oc = _eve_outcome(u, p, k_a, &k_e)
    forwarded = 1 if oc < 3 else 0
    p_a = _trigger_overlap(p, row)
    p_b = 1.0 - p_a
    for i in range(2):
        if forwarded:
            prob = p[P_BG + i] + 1.0 - 0.5 * (
                exp(-mu_e * p_a * fid * p[P_ETA + i] / 2.0)
                + exp(-mu_e * p_a * p[P_ETA + i] / 4.0)
            )
        else:
            prob = p[P_BG + i]
        det[i] = 1 if u[13 + i] < prob else 0
    for j in range(4):
        if forwarded:
            frac = _phase_fraction(j, k_e, fid)
            prob = p[P_BG + 2 + j] + 1.0 - exp(-mu_e * p_b * frac * p[P_ETA + 2 + j] / 4.0)
        else:
            prob = p[P_BG + 2 + j]
        det[2 + j] = 1 if u[13 + 2 + j] < prob else 0

    s = _squash_4det(&det[2], u[19])
    alert_cnt = (det[0] + det[1]) if forwarded else 0

    o[T_ROUNDS] += 1
    o[T_TRIGGERS] += forwarded
    o[T_ALERT] += alert_cnt
    o[T_ALERT2] += alert_cnt * alert_cnt
    if s.kept:
        o[T_KEY] += 1
        if s.basis == (k_a >> 1):
            o[T_SIFTED] += 1
            if s.bit != (k_a & 1):
                o[T_ERRORS] += 1
    if s.dbl:
        o[T_DBLSAME] += 1
    if s.cross:
        o[T_DBLCROSS] += 1
    if alert_cnt > 0:
        o[T_ALERTRND] += 1
    for i in range(6):
        o[T_DET + i] += det[i]


cdef inline void _run_blinding(const double *u, const double *row, const double *p,
                               const double *kn, int nk, long long *o) noexcept nogil:
    cdef int k_a = <int>(u[8] * 4.0)
    cdef int k_e = 0
    cdef int beta, sw, oc, trigger, i, j, d, alert_cnt, same_basis, on_target
    cdef double e_t = p[P_ET], i_b = p[P_IB]
    cdef int perfect = 1 if p[P_PERFECT] != 0.0 else 0
    cdef double p_a, p_b, r_a, i_alert, i_secure, i_recv, nev, alw, width, ramp
    cdef double energy[6]
    cdef int det[6]
    cdef Squash s
    if k_a > 3:
        k_a = 3
    beta = 1 if u[9] >= 0.5 else 0
    sw = 1 if u[10] < p[P_RSW] else 0
    oc = _eve_outcome(u, p, k_a, &k_e)
    trigger = 1 if oc < 3 else 0
    p_a = _trigger_overlap(p, row)
    p_b = 1.0 - p_a
    r_a = _blinding_overlap(p, row)
    i_alert = 0.5 * r_a * i_b
    i_secure = 0.25 * (1.0 - r_a) * i_b

    for i in range(2):
        if (k_e >> 1) == beta:
            energy[i] = 0.5 * p_a * e_t if (k_e & 1) == i else 0.0
        else:
            energy[i] = 0.25 * p_a * e_t
    for j in range(4):
        same_basis = 1 if (k_e >> 1) == (j >> 1) else 0
        on_target = 1 if k_e == j else 0
        if on_target:
            energy[2 + j] = 0.25 * p_b * e_t
        elif same_basis:
            energy[2 + j] = 0.0
        else:
            energy[2 + j] = 0.125 * p_b * e_t

    for d in range(6):
        if not trigger:
            det[d] = 0
            continue
        i_recv = i_alert if d < 2 else i_secure
        nev = _interp_clamped(i_recv, kn + d * 3 * nk, kn + d * 3 * nk + nk, nk)
        alw = _interp_clamped(i_recv, kn + d * 3 * nk, kn + d * 3 * nk + 2 * nk, nk)
        if energy[d] >= alw:
            ramp = 1.0
        elif energy[d] < nev:
            ramp = 0.0
        else:
            width = alw - nev
            ramp = (energy[d] - nev) / width
        if perfect and d >= 2:
            ramp = 1.0 if k_e == d - 2 else 0.0
        det[d] = 1 if u[13 + d] < ramp else 0

    if sw:
        s = _squash_2det(det[0], det[1], beta, u[19])
        alert_cnt = det[2] + det[3] + det[4] + det[5]
    else:
        s = _squash_4det(&det[2], u[19])
        alert_cnt = det[0] + det[1]
    if not trigger:
        alert_cnt = 0
        s.kept = 0
        s.dbl = 0
        s.cross = 0

    o[T_ROUNDS] += 1
    o[T_TRIGGERS] += trigger
    o[T_ALERT] += alert_cnt
    o[T_ALERT2] += alert_cnt * alert_cnt
    if s.kept:
        o[T_KEY] += 1
        if s.basis == (k_a >> 1):
            o[T_SIFTED] += 1
            if s.bit != (k_a & 1):
                o[T_ERRORS] += 1
    if s.dbl:
        o[T_DBLSAME] += 1
    if (not sw) and s.cross:
        o[T_DBLCROSS] += 1
    if alert_cnt > 0:
        o[T_ALERTRND] += 1
    for i in range(6):
        o[T_DET + i] += det[i]


cdef inline void _run_wavelength(const double *u, const double *p, long long *o) noexcept nogil:
    cdef int k_a = <int>(u[8] * 4.0)
    cdef int k_e = 0
    cdef int oc, sw, conclusive, alert_cnt
    if k_a > 3:
        k_a = 3
    sw = 1 if u[10] < p[P_RSW] else 0
    oc = _eve_outcome(u, p, k_a, &k_e)
    conclusive = 1 if oc < 2 else 0
    alert_cnt = sw

    o[T_ROUNDS] += 1
    o[T_TRIGGERS] += 1
    o[T_ALERT] += alert_cnt
    o[T_ALERT2] += alert_cnt * alert_cnt
    if conclusive and not sw:
        o[T_SIFTED] += 1
        o[T_KEY] += 1
        if oc == 1:
            o[T_ERRORS] += 1
        o[T_DET + 2 + k_e] += 1
    if alert_cnt > 0:
        o[T_ALERTRND] += 1


cdef void _loop(int mode, long long n_rounds, bitgen_t *rng, const double *p,
                const double *kn, int nk, long long *out, int needs_haar) noexcept nogil:
    cdef double u[24]
    cdef double row[4]
    cdef long long r
    cdef int fam
    cdef double t2
    row[0] = 0.0
    row[1] = 0.0
    row[2] = 0.0
    row[3] = 0.0
    for r in range(n_rounds):
        _fill_draws(rng, u)
        if needs_haar:
            _haar_row0(u, row)
        if mode == MODE_HONEST:
            _run_honest(u, p, out)
        elif mode == MODE_INTERCEPT:
            _run_intercept(u, row, p, out)
        elif mode == MODE_QUANTUM:
            _run_quantum(u, row, p, out)
        elif mode == MODE_BLINDING:
            _run_blinding(u, row, p, kn, nk, out)
        elif mode == MODE_WAVELENGTH:
            _run_wavelength(u, p, out)
        else:
            t2 = p[P_WQ] + p[P_WBL]
            if u[21] < p[P_WQ]:
                fam = 0
            elif u[21] < t2:
                fam = 1
            else:
                fam = 2
            if fam == 0:
                _run_quantum(u, row, p, out)
            elif fam == 1:
                _run_blinding(u, row, p, kn, nk, out + 24)
            else:
                _run_wavelength(u, p, out + 48)


def run_rounds(mode, n_rounds, bit_generator, params, knots):
    """Run n_rounds of the given mode; see _kernels_py.run_rounds."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] p_arr = np.ascontiguousarray(params, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=3] k_arr = np.ascontiguousarray(knots, dtype=np.float64)
    if p_arr.shape[0] != N_PARAMS:
        raise ValueError(f"params must have shape ({PARAM_SIZE},)")
    if k_arr.shape[0] != 6 or k_arr.shape[1] != 3:
        raise ValueError("knots must have shape (6, 3, K)")
    out = np.zeros((4, 24), dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] o_arr = out
    cdef int c_mode = int(mode)
    cdef long long n = int(n_rounds)
    cdef int nk = <int>k_arr.shape[2]
    if c_mode < 0 or c_mode > 5:
        raise ValueError(f"unknown mode {mode}")
    capsule = bit_generator.capsule
    cdef bitgen_t *rng = <bitgen_t *>PyCapsule_GetPointer(capsule, "BitGenerator")
    cdef int needs_haar = (
        1 if c_mode in (MODE_INTERCEPT, MODE_QUANTUM, MODE_BLINDING, MODE_INTEGRATED)
        and (p_arr[P_PA_FIXED] < 0.0 or p_arr[P_RA_FIXED] < 0.0) else 0
    )
    cdef double *p = <double *>p_arr.data
    cdef double *kn = <double *>k_arr.data
    cdef long long *o = <long long *>o_arr.data
    with bit_generator.lock:
        with nogil:
            _loop(c_mode, n, rng, p, kn, nk, o, needs_haar)
    return out
