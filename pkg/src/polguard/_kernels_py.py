"""Vectorized NumPy Monte Carlo kernels (fallback backend).

Both backends implement exactly this contract so that a given
(seed, workers) pair produces identical tallies on either one.

Per-round draw budget: every round consumes exactly ``DRAWS_PER_ROUND = 24``
uniform doubles from the worker's bit generator, in this slot order:

    0..7   Haar gaussians (inverse-CDF of the uniforms)
    8      Alice phase index (x4)
    9      alert-path analyzer basis (0 = D/A if u < 0.5)
    10     path-switch flag (u < R_sw)
    11     Eve outcome draw / intercept: Eve basis
    12     Eve auxiliary (incompatible-phase pick)
    13..18 detector Bernoulli draws a1, a2, b1..b4
           (intercept: 13 unmatched alert pick, 14 arm pick, 15 unmatched pick)
    19     squash random-bit for same-basis double clicks
    20     intercept window/path routing draw
    21     integrated-attack family draw
    22..23 reserved

Unused slots are drawn and discarded, which keeps the stream layout
identical across modes and makes fixed-randomizer runs reproduce the same
phase/click draws as Haar runs.

Parameter vector layout (``PARAM_SIZE`` float64 values) and tally layout
(4 x 24 int64; row 0 for plain modes, rows 0..2 = quantum/blinding/
wavelength families in integrated mode) are mirrored by the Cython backend;
``simengine`` builds both.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

from polguard.qmath import haar_gaussians_to_unitary

DRAWS_PER_ROUND = 24
PARAM_SIZE = 37
TALLY_ROWS = 4
TALLY_COLS = 24
CHUNK = 1 << 15

# modes
MODE_HONEST = 0
MODE_INTERCEPT = 1
MODE_QUANTUM = 2
MODE_BLINDING = 3
MODE_WAVELENGTH = 4
MODE_INTEGRATED = 5

# parameter indices
P_RSW = 0
P_FID = 1
P_MU_E = 2
P_MU_SRC = 3
P_EVE_C = 4
P_EVE_W = 5
P_EVE_NC = 6
P_ET = 7
P_LAM_T = 8
P_VT = 9      # ..12: trigger eigenvector re0, im0, re1, im1
P_LAM_B = 13
P_VB = 14     # ..17: blinding eigenvector
P_PA_FIXED = 18   # fixed routing probability, -1 for per-round Haar
P_RA_FIXED = 19   # fixed blinding-light overlap, -1 for per-round Haar
P_PERFECT = 20
P_WQ = 21
P_WBL = 22
P_WWL = 23
P_IB = 24
P_ETA = 25    # ..30
P_BG = 31     # ..36

# tally columns
T_ROUNDS = 0
T_TRIGGERS = 1
T_ALERT = 2
T_ALERT2 = 3
T_SIFTED = 4
T_ERRORS = 5
T_KEY = 6
T_DBLSAME = 7
T_DBLCROSS = 8
T_DET = 9     # ..14: a1, a2, b1..b4
T_ALERTRND = 15
T_ARR_A = 16
T_ARR_B = 17


def _row0_overlap(u_mat, lam, v_re0, v_im0, v_re1, v_im1):
    """lam |(U v)_0|^2 + (1-lam)(1 - |(U v)_0|^2) for a batch of unitaries."""
    v0 = v_re0 + 1j * v_im0
    v1 = v_re1 + 1j * v_im1
    amp = u_mat[:, 0, 0] * v0 + u_mat[:, 0, 1] * v1
    w = amp.real**2 + amp.imag**2
    return lam * w + (1.0 - lam) * (1.0 - w)


def _interp_clamped(x, xp, fp):
    # np.interp clamps outside the table, matching the compiled kernel
    return np.interp(x, xp, fp)


def _squash_4det(clicks, u_squash):
    """Vectorized squashing of the four secure detectors.

    Returns (kept, basis, bit, dbl_same, dbl_cross) boolean/int arrays.
    """
    b1, b2, b3, b4 = clicks
    da = b1 | b2
    rl = b3 | b4
    cross = da & rl
    kept = (da | rl) & ~cross
    basis = np.where(rl & kept, 1, 0)
    pair_hi = np.where(kept & (basis == 0), b2, b4)
    pair_lo = np.where(kept & (basis == 0), b1, b3)
    double = kept & pair_lo & pair_hi
    bit = np.where(double, (u_squash >= 0.5).astype(np.int64),
                   np.where(pair_hi, 1, 0))
    return kept, basis, bit, double, cross


def _squash_2det(c1, c2, beta, u_squash):
    """Squash the two-detector (switched-role) analyzer in basis beta."""
    kept = c1 | c2
    double = c1 & c2
    bit = np.where(double, (u_squash >= 0.5).astype(np.int64),
                   np.where(c2, 1, 0))
    basis = np.where(kept, beta, 0)
    return kept, basis, bit, double


def _tally_common(out_row, mask, det_clicks):
    for d in range(6):
        out_row[T_DET + d] += int(np.count_nonzero(det_clicks[d] & mask))


class _Ctx:
    """Per-chunk decoded draws shared by the mode kernels."""

    def __init__(self, u, p, needs_haar):
        self.u = u
        m = u.shape[0]
        self.k_a = np.minimum((u[:, 8] * 4.0).astype(np.int64), 3)
        self.beta = (u[:, 9] >= 0.5).astype(np.int64)
        self.switch = u[:, 10] < p[P_RSW]
        self.u_mat = None
        if needs_haar:
            g = ndtri(u[:, 0:8])
            self.u_mat = haar_gaussians_to_unitary(g)

    def trigger_overlap(self, p):
        if p[P_PA_FIXED] >= 0.0:
            return np.full(self.u.shape[0], p[P_PA_FIXED])
        pa = _row0_overlap(self.u_mat, p[P_LAM_T],
                           p[P_VT], p[P_VT + 1], p[P_VT + 2], p[P_VT + 3])
        return np.minimum(np.maximum(pa, 0.0), 1.0)

    def blinding_overlap(self, p):
        if p[P_RA_FIXED] >= 0.0:
            return np.full(self.u.shape[0], p[P_RA_FIXED])
        ra = _row0_overlap(self.u_mat, p[P_LAM_B],
                           p[P_VB], p[P_VB + 1], p[P_VB + 2], p[P_VB + 3])
        return np.minimum(np.maximum(ra, 0.0), 1.0)

    def eve_outcome(self, p):
        """0 correct, 1 wrong, 2 incompatible, 3 inconclusive; and Eve phase."""
        u = self.u
        t1 = p[P_EVE_C]
        t2 = t1 + p[P_EVE_W]
        t3 = t2 + 2.0 * p[P_EVE_NC]
        oc = np.where(u[:, 11] < t1, 0,
                      np.where(u[:, 11] < t2, 1,
                               np.where(u[:, 11] < t3, 2, 3))).astype(np.int64)
        nc_bit = (u[:, 12] >= 0.5).astype(np.int64)
        other = (1 - (self.k_a >> 1)) << 1
        k_e = np.where(oc == 0, self.k_a,
                       np.where(oc == 1, self.k_a ^ 1, other + nc_bit))
        return oc, k_e


def _phase_fraction_vec(j, k_e, fid):
    """Secure-detector energy fraction for phase index array k_e."""
    same_basis = (k_e >> 1) == (j >> 1)
    return np.where(same_basis, np.where(k_e == j, fid, 1.0 - fid), 0.5)


def _run_honest(ctx, p, mask, out):
    u, k_a, beta, switch = ctx.u, ctx.k_a, ctx.beta, ctx.switch
    mu = p[P_MU_SRC]
    fid = p[P_FID]
    eta = p[P_ETA:P_ETA + 6]
    bg = p[P_BG:P_BG + 6]
    m = u.shape[0]
    sw = switch & mask
    nsw = ~switch & mask

    det = [np.zeros(m, dtype=bool) for _ in range(6)]
    # unswitched: genuine photon on the secure arms, backgrounds on path a
    for j in range(4):
        frac = _phase_fraction_vec(j, k_a, fid)
        prob = bg[2 + j] + 1.0 - np.exp(-mu * frac * eta[2 + j] / 4.0)
        det[2 + j] = np.where(nsw, u[:, 13 + 2 + j] < prob, det[2 + j])
    det[0] = np.where(nsw, u[:, 13] < bg[0], det[0])
    det[1] = np.where(nsw, u[:, 14] < bg[1], det[1])
    # switched: photon measured on the alert hardware, backgrounds on path b
    matched = beta == (k_a >> 1)
    bit_a = k_a & 1
    for i in range(2):
        this_bit = bit_a == i
        frac = np.where(matched, np.where(this_bit, fid, 1.0 - fid), 0.5)
        prob = bg[i] + 1.0 - np.exp(-mu * 0.5 * frac * eta[i])
        det[i] = np.where(sw, u[:, 13 + i] < prob, det[i])
    for j in range(4):
        det[2 + j] = np.where(sw, u[:, 13 + 2 + j] < bg[2 + j], det[2 + j])

    kept4, basis4, bit4, dbl4, cross4 = _squash_4det(det[2:], u[:, 19])
    kept2, basis2, bit2, dbl2 = _squash_2det(det[0], det[1], beta, u[:, 19])
    kept = np.where(switch, kept2, kept4) & mask
    basis = np.where(switch, basis2, basis4)
    bit = np.where(switch, bit2, bit4)
    sifted = kept & (basis == (k_a >> 1))
    errors = sifted & (bit != (k_a & 1))
    alert_cnt = np.where(switch,
                         sum(det[2 + j].astype(np.int64) for j in range(4)),
                         det[0].astype(np.int64) + det[1].astype(np.int64))
    alert_cnt = np.where(mask, alert_cnt, 0)

    out[T_ROUNDS] += int(np.count_nonzero(mask))
    out[T_TRIGGERS] += int(np.count_nonzero(mask))
    out[T_ALERT] += int(alert_cnt.sum())
    out[T_ALERT2] += int((alert_cnt**2).sum())
    out[T_SIFTED] += int(np.count_nonzero(sifted))
    out[T_ERRORS] += int(np.count_nonzero(errors))
    out[T_KEY] += int(np.count_nonzero(kept))
    out[T_DBLSAME] += int(np.count_nonzero((np.where(switch, dbl2, dbl4)) & mask))
    out[T_DBLCROSS] += int(np.count_nonzero(cross4 & ~switch & mask))
    out[T_ALERTRND] += int(np.count_nonzero((alert_cnt > 0) & mask))
    _tally_common(out, mask, det)


def _run_intercept(ctx, p, mask, out):
    u, k_a, beta = ctx.u, ctx.k_a, ctx.beta
    m = u.shape[0]
    eve_basis = (u[:, 11] >= 0.5).astype(np.int64)
    eve_bit = (u[:, 12] >= 0.5).astype(np.int64)
    compatible = eve_basis == (k_a >> 1)
    k_e = np.where(compatible, k_a, (eve_basis << 1) + eve_bit)

    p_a = ctx.trigger_overlap(p)
    in_window = u[:, 20] >= 0.5
    t = 2.0 * (u[:, 20] - 0.5)
    to_alert = in_window & (t < p_a)
    to_secure = in_window & ~to_alert

    det = [np.zeros(m, dtype=bool) for _ in range(6)]
    # alert arrival: full gated path-a energy lands on the analyzer
    alert_matched = beta == (k_e >> 1)
    a_det = np.where(alert_matched, k_e & 1, (u[:, 13] >= 0.5).astype(np.int64))
    det[0] = to_alert & (a_det == 0)
    det[1] = to_alert & (a_det == 1)
    # secure arrival: one of the two arms, then the phase analyzer
    arm = (u[:, 14] >= 0.5).astype(np.int64)
    arm_matched = arm == (k_e >> 1)
    b_bit = np.where(arm_matched, k_e & 1, (u[:, 15] >= 0.5).astype(np.int64))
    slot = 2 * arm + b_bit
    for j in range(4):
        det[2 + j] = to_secure & (slot == j)

    sifted = to_secure & (arm == (k_a >> 1)) & mask
    errors = sifted & (b_bit != (k_a & 1))
    alert_cnt = np.where(to_alert & mask, 1, 0).astype(np.int64)

    out[T_ROUNDS] += int(np.count_nonzero(mask))
    out[T_TRIGGERS] += int(np.count_nonzero(mask))
    out[T_ALERT] += int(alert_cnt.sum())
    out[T_ALERT2] += int((alert_cnt**2).sum())
    out[T_SIFTED] += int(np.count_nonzero(sifted))
    out[T_ERRORS] += int(np.count_nonzero(errors))
    out[T_KEY] += int(np.count_nonzero(to_secure & mask))
    out[T_ALERTRND] += int(np.count_nonzero(to_alert & mask))
    out[T_ARR_A] += int(np.count_nonzero(to_alert & mask))
    out[T_ARR_B] += int(np.count_nonzero(to_secure & mask))
    _tally_common(out, mask, det)


def _run_quantum(ctx, p, mask, out):
    u, k_a = ctx.u, ctx.k_a
    mu_e = p[P_MU_E]
    fid = p[P_FID]
    eta = p[P_ETA:P_ETA + 6]
    bg = p[P_BG:P_BG + 6]
    oc, k_e = ctx.eve_outcome(p)
    forwarded = oc < 3
    p_a = ctx.trigger_overlap(p)
    p_b = 1.0 - p_a

    det = []
    for i in range(2):
        prob_f = bg[i] + 1.0 - 0.5 * (
            np.exp(-mu_e * p_a * fid * eta[i] / 2.0)
            + np.exp(-mu_e * p_a * eta[i] / 4.0)
        )
        prob = np.where(forwarded, prob_f, bg[i])
        det.append(u[:, 13 + i] < prob)
    for j in range(4):
        frac = _phase_fraction_vec(j, k_e, fid)
        prob_f = bg[2 + j] + 1.0 - np.exp(-mu_e * p_b * frac * eta[2 + j] / 4.0)
        prob = np.where(forwarded, prob_f, bg[2 + j])
        det.append(u[:, 13 + 2 + j] < prob)

    kept, basis, bit, dbl, cross = _squash_4det(det[2:], u[:, 19])
    kept = kept & mask
    sifted = kept & (basis == (k_a >> 1))
    errors = sifted & (bit != (k_a & 1))
    fmask = forwarded & mask
    alert_cnt = np.where(fmask, det[0].astype(np.int64) + det[1].astype(np.int64), 0)

    out[T_ROUNDS] += int(np.count_nonzero(mask))
    out[T_TRIGGERS] += int(np.count_nonzero(fmask))
    out[T_ALERT] += int(alert_cnt.sum())
    out[T_ALERT2] += int((alert_cnt**2).sum())
    out[T_SIFTED] += int(np.count_nonzero(sifted))
    out[T_ERRORS] += int(np.count_nonzero(errors))
    out[T_KEY] += int(np.count_nonzero(kept))
    out[T_DBLSAME] += int(np.count_nonzero(dbl & mask))
    out[T_DBLCROSS] += int(np.count_nonzero(cross & mask))
    out[T_ALERTRND] += int(np.count_nonzero((alert_cnt > 0)))
    _tally_common(out, mask, det)


def _run_blinding(ctx, p, mask, out, knots):
    u, k_a, beta, switch = ctx.u, ctx.k_a, ctx.beta, ctx.switch
    e_t = p[P_ET]
    i_b = p[P_IB]
    perfect = p[P_PERFECT] != 0.0
    oc, k_e = ctx.eve_outcome(p)
    trigger = (oc < 3) & mask
    p_a = ctx.trigger_overlap(p)
    p_b = 1.0 - p_a
    r_a = ctx.blinding_overlap(p)
    i_alert = 0.5 * r_a * i_b
    i_secure = 0.25 * (1.0 - r_a) * i_b

    m = u.shape[0]
    energy = np.zeros((6, m))
    abasis_match = (k_e >> 1) == beta
    targeted_a = k_e & 1
    for i in range(2):
        on_target = abasis_match & (targeted_a == i)
        energy[i] = np.where(on_target, 0.5 * p_a * e_t,
                             np.where(abasis_match, 0.0, 0.25 * p_a * e_t))
    for j in range(4):
        same_basis = (k_e >> 1) == (j >> 1)
        on_target = k_e == j
        energy[2 + j] = np.where(on_target, 0.25 * p_b * e_t,
                                 np.where(same_basis, 0.0, 0.125 * p_b * e_t))

    det = []
    for d in range(6):
        i_recv = i_alert if d < 2 else i_secure
        nev = _interp_clamped(i_recv, knots[d, 0], knots[d, 1])
        alw = _interp_clamped(i_recv, knots[d, 0], knots[d, 2])
        width = alw - nev
        ramp = np.where(
            energy[d] >= alw, 1.0,
            np.where(energy[d] < nev, 0.0,
                     np.where(width > 0.0, (energy[d] - nev) / np.where(width > 0.0, width, 1.0), 1.0)),
        )
        if perfect and d >= 2:
            ramp = np.where(k_e == d - 2, 1.0, 0.0)
        det.append(trigger & (u[:, 13 + d] < ramp))

    kept4, basis4, bit4, dbl4, cross4 = _squash_4det(det[2:], u[:, 19])
    kept2, basis2, bit2, dbl2 = _squash_2det(det[0], det[1], beta, u[:, 19])
    kept = np.where(switch, kept2, kept4) & trigger
    basis = np.where(switch, basis2, basis4)
    bit = np.where(switch, bit2, bit4)
    sifted = kept & (basis == (k_a >> 1))
    errors = sifted & (bit != (k_a & 1))
    alert_cnt = np.where(
        switch,
        sum(det[2 + j].astype(np.int64) for j in range(4)),
        det[0].astype(np.int64) + det[1].astype(np.int64),
    )
    alert_cnt = np.where(trigger, alert_cnt, 0)

    out[T_ROUNDS] += int(np.count_nonzero(mask))
    out[T_TRIGGERS] += int(np.count_nonzero(trigger))
    out[T_ALERT] += int(alert_cnt.sum())
    out[T_ALERT2] += int((alert_cnt**2).sum())
    out[T_SIFTED] += int(np.count_nonzero(sifted))
    out[T_ERRORS] += int(np.count_nonzero(errors))
    out[T_KEY] += int(np.count_nonzero(kept))
    out[T_DBLSAME] += int(np.count_nonzero(np.where(switch, dbl2, dbl4) & trigger))
    out[T_DBLCROSS] += int(np.count_nonzero(cross4 & ~switch & trigger))
    out[T_ALERTRND] += int(np.count_nonzero(alert_cnt > 0))
    _tally_common(out, mask, det)


def _run_wavelength(ctx, p, mask, out):
    u, k_a, switch = ctx.u, ctx.k_a, ctx.switch
    oc, k_e = ctx.eve_outcome(p)
    conclusive = (oc < 2) & mask
    alert_cnt = np.where(switch & mask, 1, 0).astype(np.int64)
    sifted = conclusive & ~switch
    errors = sifted & (oc == 1)

    out[T_ROUNDS] += int(np.count_nonzero(mask))
    out[T_TRIGGERS] += int(np.count_nonzero(mask))
    out[T_ALERT] += int(alert_cnt.sum())
    out[T_ALERT2] += int((alert_cnt**2).sum())
    out[T_SIFTED] += int(np.count_nonzero(sifted))
    out[T_ERRORS] += int(np.count_nonzero(errors))
    out[T_KEY] += int(np.count_nonzero(sifted))
    out[T_ALERTRND] += int(np.count_nonzero(alert_cnt > 0))
    for j in range(4):
        out[T_DET + 2 + j] += int(np.count_nonzero(sifted & (k_e == j)))


def run_rounds(mode, n_rounds, bit_generator, params, knots):
    """Run ``n_rounds`` of the given mode, consuming the worker's stream.

    Returns the (4, 24) int64 tally array described in the module docstring.
    """
    p = np.asarray(params, dtype=np.float64)
    if p.shape != (PARAM_SIZE,):
        raise ValueError(f"params must have shape ({PARAM_SIZE},)")
    knots = np.asarray(knots, dtype=np.float64)
    gen = np.random.Generator(bit_generator)
    out = np.zeros((TALLY_ROWS, TALLY_COLS), dtype=np.int64)
    needs_haar = (
        mode in (MODE_INTERCEPT, MODE_QUANTUM, MODE_BLINDING, MODE_INTEGRATED)
        and (p[P_PA_FIXED] < 0.0 or p[P_RA_FIXED] < 0.0)
    )
    done = 0
    while done < n_rounds:
        m = min(CHUNK, n_rounds - done)
        u = gen.random((m, DRAWS_PER_ROUND))
        ctx = _Ctx(u, p, needs_haar)
        full = np.ones(m, dtype=bool)
        if mode == MODE_HONEST:
            _run_honest(ctx, p, full, out[0])
        elif mode == MODE_INTERCEPT:
            _run_intercept(ctx, p, full, out[0])
        elif mode == MODE_QUANTUM:
            _run_quantum(ctx, p, full, out[0])
        elif mode == MODE_BLINDING:
            _run_blinding(ctx, p, full, out[0], knots)
        elif mode == MODE_WAVELENGTH:
            _run_wavelength(ctx, p, full, out[0])
        elif mode == MODE_INTEGRATED:
            fam = np.where(u[:, 21] < p[P_WQ], 0,
                           np.where(u[:, 21] < p[P_WQ] + p[P_WBL], 1, 2))
            _run_quantum(ctx, p, fam == 0, out[0])
            _run_blinding(ctx, p, fam == 1, out[1], knots)
            _run_wavelength(ctx, p, fam == 2, out[2])
        else:
            raise ValueError(f"unknown mode {mode}")
        done += m
    return out
