"""Scalar numeric kernels shared by the lgd and device modules.

Every function here is written in the numba-compatible subset of Python so
the same source runs compiled or interpreted (see ``_jit``).  Device
parameters travel as a flat float64 vector indexed by the ``D_*`` constants.
"""

import math

import numpy as np

from ._jit import njit

STABLE_TOL = 1e-9
DEGENERATE_TOL = 1e-14
THERMAL_VOLTAGE = 0.0259

# status codes returned by the stack solver
OK = 0
NOT_BRACKETED = 1
NOT_CONVERGED = 2

# device parameter vector layout
D_ALPHA = 0
D_BETA = 1
D_XI = 2
D_PSCALE = 3
D_ESCALE = 4
D_AR = 5
D_TAFE = 6
D_EPS = 7
D_COX = 8
D_CMIN = 9
D_VFB = 10
D_QTRAP = 11
D_NSS = 12
D_VT0 = 13
D_KDRIVE = 14
D_FLOOR = 15
D_VTLIN = 16
D_AAFE = 17
D_QRES = 18
D_VREL_START = 19
D_VREL_FULL = 20
D_DVFB_POLAR = 21
N_DEVICE = 22

MAX_OUTER = 60


# --------------------------------------------------------------------------
# Landau polynomial
# --------------------------------------------------------------------------

@njit
def force(alpha, beta, xi, p):
    p2 = p * p
    return p * (alpha + p2 * (beta + xi * p2))


@njit
def force_slope(alpha, beta, xi, p):
    p2 = p * p
    return alpha + p2 * (3.0 * beta + 5.0 * xi * p2)


@njit
def gibbs(alpha, beta, xi, p, e):
    p2 = p * p
    return p2 * (0.5 * alpha + p2 * (0.25 * beta + xi * p2 / 6.0)) - e * p


@njit
def _bound_ok(alpha, beta, xi, e, b):
    return xi * b ** 4 > abs(alpha) + abs(beta) * b * b + abs(e) / b


@njit
def root_bound(alpha, beta, xi, e):
    """Smallest b (to 1e-6 rel) with xi*b^4 > |alpha| + |beta| b^2 + |e|/b.

    The inequality is monotone in b, so no root lies outside [-b, b].
    """
    hi = 1.0
    if _bound_ok(alpha, beta, xi, e, hi):
        lo = 0.5
        while _bound_ok(alpha, beta, xi, e, lo):
            hi = lo
            lo *= 0.5
            if lo < 1e-150:
                return hi
    else:
        while not _bound_ok(alpha, beta, xi, e, hi):
            hi *= 2.0
        lo = 0.5 * hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _bound_ok(alpha, beta, xi, e, mid):
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-6 * hi:
            break
    return hi


@njit
def critical_points(alpha, beta, xi, out):
    """Real zeros of force_slope, sorted, written into ``out``; returns count."""
    a = 5.0 * xi
    b = 3.0 * beta
    c = alpha
    disc = b * b - 4.0 * a * c
    n = 0
    if disc < 0.0:
        return 0
    sq = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sq, b))
    if q == 0.0:
        u1 = 0.0
        u2 = 0.0
    else:
        u1 = q / a
        u2 = c / q
    if u1 > u2:
        u1, u2 = u2, u1
    # u = p^2 >= 0; collect symmetric pairs, skip duplicates
    if u2 > 0.0:
        r2 = math.sqrt(u2)
        out[n] = -r2
        n += 1
    if u1 > 0.0 and u1 < u2:
        r1 = math.sqrt(u1)
        out[n] = -r1
        n += 1
        out[n] = r1
        n += 1
    elif u1 == 0.0 or u2 == 0.0:
        out[n] = 0.0
        n += 1
    if u2 > 0.0:
        out[n] = math.sqrt(u2)
        n += 1
    return n


@njit
def branch_id(crit, ncrit, p):
    k = 0
    for i in range(ncrit):
        if crit[i] < p:
            k += 1
    return k


@njit
def _rtsafe(alpha, beta, xi, e, a, b):
    """Root of force - e bracketed in [a, b]; bisection-safeguarded Newton."""
    fa = force(alpha, beta, xi, a) - e
    if fa == 0.0:
        return a
    fb = force(alpha, beta, xi, b) - e
    if fb == 0.0:
        return b
    if fa < 0.0:
        lo = a
        hi = b
    else:
        lo = b
        hi = a
    x = 0.5 * (a + b)
    dx_old = abs(b - a)
    dx = dx_old
    fx = force(alpha, beta, xi, x) - e
    for _ in range(400):
        if fx == 0.0:
            return x
        if fx < 0.0:
            lo = x
        else:
            hi = x
        d = force_slope(alpha, beta, xi, x)
        xn = x - fx / d if d != 0.0 else x
        left = min(lo, hi)
        right = max(lo, hi)
        if d == 0.0 or xn <= left or xn >= right or abs(2.0 * fx) > abs(dx_old * d):
            dx_old = dx
            dx = 0.5 * (hi - lo)
            x = lo + dx
        else:
            dx_old = dx
            dx = x - xn
            x = xn
        fx = force(alpha, beta, xi, x) - e
        if abs(dx) <= 2.2e-16 * max(1.0, abs(x)):
            break
    return x


@njit
def solve_roots(alpha, beta, xi, e, roots):
    """All real roots of alpha p + beta p^3 + xi p^5 = e, sorted ascending.

    The line is split at the critical points of the force so each piece is
    monotone and holds at most one root.  Returns the root count.
    """
    crit = np.empty(4)
    m = critical_points(alpha, beta, xi, crit)
    bnd = root_bound(alpha, beta, xi, e)
    edges = np.empty(m + 2)
    vals = np.empty(m + 2)
    is_root = np.zeros(m + 2, dtype=np.bool_)
    edges[0] = -bnd
    ne = 1
    for i in range(m):
        if -bnd < crit[i] < bnd:
            edges[ne] = crit[i]
            ne += 1
    edges[ne] = bnd
    ne += 1
    scale = 1.0 + abs(e)
    for i in range(ne):
        v = force(alpha, beta, xi, edges[i]) - e
        if 0 < i < ne - 1 and abs(v) <= DEGENERATE_TOL * scale:
            v = 0.0
        vals[i] = v
        is_root[i] = v == 0.0
    n = 0
    for i in range(ne):
        if is_root[i]:
            roots[n] = edges[i]
            n += 1
        if i < ne - 1 and vals[i] * vals[i + 1] < 0.0:
            roots[n] = _rtsafe(alpha, beta, xi, e, edges[i], edges[i + 1])
            n += 1
    return n


@njit
def is_stable(alpha, beta, xi, p):
    return force_slope(alpha, beta, xi, p) > STABLE_TOL


@njit
def relax(alpha, beta, xi, p_old, e_new):
    """Quasi-static update of the polarization to a new field.

    The film follows the downhill direction of G from ``p_old`` and settles
    in the first stable equilibrium it meets.  While the old branch exists
    this is the continued root on that branch; once it has vanished it is
    the adjacent surviving minimum.  Returns (p_new, switched).
    """
    roots = np.empty(5)
    n = solve_roots(alpha, beta, xi, e_new, roots)
    crit = np.empty(4)
    m = critical_points(alpha, beta, xi, crit)
    s = force(alpha, beta, xi, p_old) - e_new
    best = np.nan
    if s == 0.0 and is_stable(alpha, beta, xi, p_old):
        return p_old, False
    if s < 0.0:
        for i in range(n):
            if roots[i] > p_old and is_stable(alpha, beta, xi, roots[i]):
                best = roots[i]
                break
    elif s > 0.0:
        for i in range(n - 1, -1, -1):
            if roots[i] < p_old and is_stable(alpha, beta, xi, roots[i]):
                best = roots[i]
                break
    if math.isnan(best):
        dist = np.inf
        for i in range(n):
            if is_stable(alpha, beta, xi, roots[i]) and abs(roots[i] - p_old) < dist:
                dist = abs(roots[i] - p_old)
                best = roots[i]
    switched = branch_id(crit, m, best) != branch_id(crit, m, p_old)
    return best, switched


@njit
def branch_polarization(alpha, beta, xi, e, k):
    """Polarization on stable branch ``k`` at field ``e``, clamped at its ends."""
    crit = np.empty(4)
    m = critical_points(alpha, beta, xi, crit)
    bnd = root_bound(alpha, beta, xi, e)
    if k == 0:
        lo = -bnd
    else:
        lo = crit[k - 1]
    if k == m:
        hi = bnd
    else:
        hi = crit[k]
    if lo < -bnd:
        lo = -bnd
    if hi > bnd:
        hi = bnd
    if force(alpha, beta, xi, lo) - e >= 0.0:
        return lo
    if force(alpha, beta, xi, hi) - e <= 0.0:
        return hi
    return _rtsafe(alpha, beta, xi, e, lo, hi)


# --------------------------------------------------------------------------
# MOS sub-device
# --------------------------------------------------------------------------

@njit
def softplus(x):
    if x > 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


@njit
def mos_charge(dev, v):
    """Gate-side areal charge of the MOS part; zero at v = 0, increasing."""
    nvt = dev[D_NSS] * THERMAL_VOLTAGE
    inv = nvt * (softplus((v - dev[D_VT0]) / nvt) - softplus(-dev[D_VT0] / nvt))
    return dev[D_COX] * inv + dev[D_CMIN] * v


@njit
def drain_current(k_drive, v_t0, n_ss, floor, v_t_lin, v_int, v_ds):
    two_nvt = 2.0 * n_ss * THERMAL_VOLTAGE
    q = two_nvt * softplus((v_int - v_t0) / two_nvt)
    return k_drive * q * q * math.tanh(v_ds / v_t_lin) + floor


@njit
def device_current(dev, v_int, v_ds):
    return drain_current(dev[D_KDRIVE], dev[D_VT0], dev[D_NSS], dev[D_FLOOR],
                         dev[D_VTLIN], v_int, v_ds)


# --------------------------------------------------------------------------
# Stack (charge balance on the floating gate)
# --------------------------------------------------------------------------

@njit
def branch_vfb(dev, k):
    """Flat-band voltage seen while the film sits on branch ``k``."""
    crit = np.empty(4)
    m = critical_points(dev[D_ALPHA], dev[D_BETA], dev[D_XI], crit)
    if k != branch_id(crit, m, 0.0):
        return dev[D_VFB] + dev[D_DVFB_POLAR]
    return dev[D_VFB]


@njit
def _balance(dev, v_gs, v_int, k, q_tot):
    e_phys = (v_gs - branch_vfb(dev, k) - v_int) / dev[D_TAFE]
    p = branch_polarization(dev[D_ALPHA], dev[D_BETA], dev[D_XI], e_phys / dev[D_ESCALE], k)
    d = dev[D_EPS] * e_phys + dev[D_PSCALE] * p
    return d + q_tot - dev[D_AR] * mos_charge(dev, v_int), p


@njit
def solve_frozen(dev, v_gs, k, q_tot):
    """Bisection for v_int with the film pinned to branch ``k``.

    Returns (v_int, p, residual, status).
    """
    lo = v_gs - 10.0
    hi = v_gs + 10.0
    f_lo, p = _balance(dev, v_gs, lo, k, q_tot)
    f_hi, p = _balance(dev, v_gs, hi, k, q_tot)
    if f_lo < 0.0 or f_hi > 0.0:
        return 0.0, 0.0, f_lo, NOT_BRACKETED
    mid = 0.5 * (lo + hi)
    f_mid = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid, p = _balance(dev, v_gs, mid, k, q_tot)
        if f_mid == 0.0:
            break
        if f_mid > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 4.4e-16 * max(1.0, abs(mid)):
            break
    return mid, p, f_mid, OK


@njit
def solve_stack(dev, v_gs, p_prev, q_tot):
    """Joint charge balance and branch continuation at one gate bias.

    Returns (v_int, v_afe, p, switched, residual, status).
    """
    a = dev[D_ALPHA]
    b = dev[D_BETA]
    x = dev[D_XI]
    crit = np.empty(4)
    m = critical_points(a, b, x, crit)
    p_cur = p_prev
    k = branch_id(crit, m, p_cur)
    switched = False
    v_int = 0.0
    res = 0.0
    for _ in range(MAX_OUTER):
        v_int, p_k, res, status = solve_frozen(dev, v_gs, k, q_tot)
        v_fb = branch_vfb(dev, k)
        if status != OK:
            return v_int, v_gs - v_fb - v_int, p_cur, switched, res, status
        e_n = (v_gs - v_fb - v_int) / dev[D_TAFE] / dev[D_ESCALE]
        p_new, sw = relax(a, b, x, p_cur, e_n)
        k_new = branch_id(crit, m, p_new)
        if k_new == k:
            return v_int, v_gs - v_fb - v_int, p_k, switched, res, OK
        switched = True
        p_cur = p_new
        k = k_new
    return v_int, v_gs - branch_vfb(dev, k) - v_int, p_cur, switched, res, NOT_CONVERGED


@njit
def release_cap(dev, v_gs):
    """Upper limit on the residual floating-gate charge at gate bias v_gs."""
    top = dev[D_VREL_START]
    bot = dev[D_VREL_FULL]
    if v_gs >= top:
        return dev[D_QRES]
    if v_gs <= bot:
        return 0.0
    return dev[D_QRES] * (v_gs - bot) / (top - bot)


@njit
def is_polar(dev, p):
    crit = np.empty(4)
    m = critical_points(dev[D_ALPHA], dev[D_BETA], dev[D_XI], crit)
    return branch_id(crit, m, p) != branch_id(crit, m, 0.0)


@njit
def step_device(dev, v_gs, p_prev, q_res):
    """One quasi-static bias step including the residual-charge ratchet.

    Returns (v_int, v_afe, p, q_res, switched, residual, status).
    """
    q = min(q_res, release_cap(dev, v_gs))
    v_int, v_afe, p, sw, res, st = solve_stack(dev, v_gs, p_prev, dev[D_QTRAP] + q)
    if st == OK and is_polar(dev, p) and q < dev[D_QRES]:
        q = dev[D_QRES]
        v_int, v_afe, p, sw2, res, st = solve_stack(dev, v_gs, p, dev[D_QTRAP] + q)
        sw = sw or sw2
    return v_int, v_afe, p, q, sw, res, st


@njit
def gate_charge(dev, v_gs, v_int, p):
    crit = np.empty(4)
    m = critical_points(dev[D_ALPHA], dev[D_BETA], dev[D_XI], crit)
    e_phys = (v_gs - branch_vfb(dev, branch_id(crit, m, p)) - v_int) / dev[D_TAFE]
    return dev[D_AAFE] * (dev[D_EPS] * e_phys + dev[D_PSCALE] * p)


@njit
def sweep(dev, waveform, p0, q0, v_ds, h_cv, out):
    """Fold step_device over ``waveform``.

    ``out`` is an (n, 8) array receiving v_int, v_afe, p, i_d, c_gg,
    switched, q_res, residual per sample.  Returns (p, q_res, status, index)
    where index is the failing sample when status != OK.  C-V probing is
    skipped when ``h_cv <= 0`` (c_gg left as NaN).
    """
    p = p0
    q = q0
    for i in range(waveform.shape[0]):
        v = waveform[i]
        v_int, v_afe, p, q, sw, res, st = step_device(dev, v, p, q)
        if st != OK:
            return p, q, st, i
        c_gg = np.nan
        if h_cv > 0.0:
            qt = dev[D_QTRAP] + q
            vi_p, va_p, p_p, s_p, r_p, st_p = solve_stack(dev, v + h_cv, p, qt)
            vi_m, va_m, p_m, s_m, r_m, st_m = solve_stack(dev, v - h_cv, p, qt)
            if st_p == OK and st_m == OK:
                c_gg = (gate_charge(dev, v + h_cv, vi_p, p_p)
                        - gate_charge(dev, v - h_cv, vi_m, p_m)) / (2.0 * h_cv)
        out[i, 0] = v_int
        out[i, 1] = v_afe
        out[i, 2] = p
        out[i, 3] = device_current(dev, v_int, v_ds)
        out[i, 4] = c_gg
        out[i, 5] = 1.0 if sw else 0.0
        out[i, 6] = q
        out[i, 7] = res
    return p, q, OK, -1


@njit
def trace_loop(alpha, beta, xi, waveform, p0, out_p, out_sw):
    p = p0
    for i in range(waveform.shape[0]):
        p, sw = relax(alpha, beta, xi, p, waveform[i])
        out_p[i] = p
        out_sw[i] = sw
    return p
