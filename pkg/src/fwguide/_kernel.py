"""Compiled closed-loop kernel.

Law formulas, beacon motion, bearing rotation and the fixed-step integrator
live here as numba functions so a 30 s run at ``dt = 1e-3`` takes a fraction
of a second. :mod:`fwguide.laws` and :mod:`fwguide.world` wrap these with the
public, array-friendly API.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

LAW_CODES = {
    "gradient": 0,
    "finite_time": 1,
    "adaptive_si": 2,
    "smc_si": 3,
    "adaptive_smc_si": 4,
    "pd_di": 5,
    "adaptive_di": 6,
    "smc_di": 7,
}
MOTION_CODES = {"stationary": 0, "constant": 1, "sinusoid": 2}

# gains vector layout
K, A, BETA, K_BETA, TAU_BETA, K1, K2, PHI = range(8)

COINCIDENCE_TOL = 1e-12


@njit(cache=True)
def sig(x, a):
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        xi = x[i]
        if xi > 0.0:
            out[i] = xi**a
        elif xi < 0.0:
            out[i] = -((-xi) ** a)
        else:
            out[i] = 0.0
    return out


@njit(cache=True)
def sgn_phi(x, phi):
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        xi = x[i]
        if phi == 0.0:
            out[i] = 1.0 if xi > 0.0 else (-1.0 if xi < 0.0 else 0.0)
        else:
            out[i] = xi / max(abs(xi), phi)
    return out


@njit(cache=True)
def law_output(code, gains, w, v, rel, vhat, beta, q):
    """Control input and controller-state rates for one law.

    Returns ``(u, dvhat, dbeta, dq)``; unused rates are zero.
    """
    d = w.shape[0]
    dvhat = np.zeros(d)
    dq = np.zeros(d)
    dbeta = 0.0
    if code == 0:
        u = w.copy()
    elif code == 1:
        u = sig(w, gains[A])
    elif code == 2:
        u = w + vhat
        dvhat = gains[K] * w
    elif code == 3:
        u = gains[K] * w + gains[BETA] * sgn_phi(w, gains[PHI])
    elif code == 4:
        u = gains[K] * w + beta * sgn_phi(w, gains[PHI])
        dbeta = gains[K_BETA] * (np.sum(np.abs(w)) - gains[TAU_BETA] * beta)
    elif code == 5:
        u = w - gains[K] * v
    elif code == 6:
        u = (gains[K2] + 1.0) * w - gains[K1] * (v - vhat)
        dvhat = gains[K2] * w
    else:
        r = q - rel
        u = 2.0 * w - 2.0 * rel + gains[BETA] * sgn_phi(r, gains[PHI])
        dq = w - rel
    return u, dvhat, dbeta, dq


@njit(cache=True)
def motion_velocity(kind, vel, amp, freq, phase, t):
    d = vel.shape[0]
    if kind == 0:
        return np.zeros(d)
    if kind == 1:
        return vel.copy()
    out = np.empty(d)
    for k in range(d):
        out[k] = vel[k] + amp[k] * math.sin(freq * t + phase[k])
    return out


@njit(cache=True)
def motion_displacement(kind, vel, amp, freq, phase, t):
    d = vel.shape[0]
    if kind == 0:
        return np.zeros(d)
    if kind == 1:
        return vel * t
    out = np.empty(d)
    for k in range(d):
        if freq != 0.0:
            out[k] = vel[k] * t + amp[k] / freq * (math.cos(phase[k]) - math.cos(freq * t + phase[k]))
        else:
            out[k] = (vel[k] + amp[k] * math.sin(phase[k])) * t
    return out


@njit(cache=True)
def rotate_rows(g, theta, axis):
    """Rotate each row of ``g`` by the matching angle (about ``axis`` in 3-D)."""
    n, d = g.shape
    out = np.empty_like(g)
    for i in range(n):
        c = math.cos(theta[i])
        s = math.sin(theta[i])
        if d == 2:
            out[i, 0] = c * g[i, 0] - s * g[i, 1]
            out[i, 1] = s * g[i, 0] + c * g[i, 1]
        else:
            kx, ky, kz = axis[0], axis[1], axis[2]
            gx, gy, gz = g[i, 0], g[i, 1], g[i, 2]
            kg = kx * gx + ky * gy + kz * gz
            out[i, 0] = gx * c + (ky * gz - kz * gy) * s + kx * kg * (1.0 - c)
            out[i, 1] = gy * c + (kz * gx - kx * gz) * s + ky * kg * (1.0 - c)
            out[i, 2] = gz * c + (kx * gy - ky * gx) * s + kz * kg * (1.0 - c)
    return out


@njit(cache=True)
def _rhs(t, x, P0, w, mkind, mvel, mamp, mfreq, mphase, noise_on, noff, namp, nfreq, naxis,
         code, gains, d, iv, ivhat, ibeta, iq):
    """Closed-loop derivative at ``(t, x)``. Returns ``(dx, u, min_dist)``.

    ``iv``, ``ivhat``, ``ibeta``, ``iq`` are offsets into ``x`` (-1 if absent).
    """
    n = P0.shape[0]
    disp = motion_displacement(mkind, mvel, mamp, mfreq, mphase, t)
    g = np.zeros((n, d))
    mind = np.inf
    for i in range(n):
        dist2 = 0.0
        for k in range(d):
            z = P0[i, k] + disp[k] - x[k]
            g[i, k] = z
            dist2 += z * z
        dist = math.sqrt(dist2)
        if dist < mind:
            mind = dist
        if dist < COINCIDENCE_TOL:
            for k in range(d):
                g[i, k] = 0.0
        else:
            for k in range(d):
                g[i, k] /= dist
    if noise_on:
        theta = np.empty(n)
        for i in range(n):
            theta[i] = noff[i] + namp[i] * math.sin(nfreq[i] * t)
        g = rotate_rows(g, theta, naxis)
    ws = np.zeros(d)
    for i in range(n):
        for k in range(d):
            ws[k] += w[i] * g[i, k]

    zero = np.zeros(d)
    v = x[iv:iv + d] if iv >= 0 else zero
    vhat = x[ivhat:ivhat + d] if ivhat >= 0 else zero
    beta = x[ibeta] if ibeta >= 0 else 0.0
    q = x[iq:iq + d] if iq >= 0 else zero
    rel = zero
    if code == 7:
        rel = v - motion_velocity(mkind, mvel, mamp, mfreq, mphase, t)
    u, dvhat, dbeta, dq = law_output(code, gains, ws, v, rel, vhat, beta, q)

    dx = np.empty(x.shape[0])
    if iv >= 0:
        dx[:d] = v
        dx[iv:iv + d] = u
    else:
        dx[:d] = u
    if ivhat >= 0:
        dx[ivhat:ivhat + d] = dvhat
    if ibeta >= 0:
        dx[ibeta] = dbeta
    if iq >= 0:
        dx[iq:iq + d] = dq
    return dx, u, mind


@njit(cache=True)
def _min_dist(t, x, P0, mkind, mvel, mamp, mfreq, mphase, d):
    disp = motion_displacement(mkind, mvel, mamp, mfreq, mphase, t)
    mind = np.inf
    for i in range(P0.shape[0]):
        dist2 = 0.0
        for k in range(d):
            z = P0[i, k] + disp[k] - x[k]
            dist2 += z * z
        mind = min(mind, math.sqrt(dist2))
    return mind


@njit(cache=True)
def advance(t, x, dt, rk4, P0, w, mkind, mvel, mamp, mfreq, mphase, noise_on, noff, namp, nfreq,
            naxis, code, gains, d, iv, ivhat, ibeta, iq):
    """One RK4 (or explicit Euler) step. Returns ``(x_next, min_dist_seen)``.

    The minimum covers every stage and the end point.
    """
    k1, _, m1 = _rhs(t, x, P0, w, mkind, mvel, mamp, mfreq, mphase, noise_on, noff, namp, nfreq,
                     naxis, code, gains, d, iv, ivhat, ibeta, iq)
    if not rk4:
        xn = x + dt * k1
    else:
        h = 0.5 * dt
        k2, _, m2 = _rhs(t + h, x + h * k1, P0, w, mkind, mvel, mamp, mfreq, mphase, noise_on, noff,
                         namp, nfreq, naxis, code, gains, d, iv, ivhat, ibeta, iq)
        k3, _, m3 = _rhs(t + h, x + h * k2, P0, w, mkind, mvel, mamp, mfreq, mphase, noise_on, noff,
                         namp, nfreq, naxis, code, gains, d, iv, ivhat, ibeta, iq)
        k4, _, m4 = _rhs(t + dt, x + dt * k3, P0, w, mkind, mvel, mamp, mfreq, mphase, noise_on, noff,
                         namp, nfreq, naxis, code, gains, d, iv, ivhat, ibeta, iq)
        xn = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        m1 = min(m1, m2, m3, m4)
    m_end = _min_dist(t + dt, xn, P0, mkind, mvel, mamp, mfreq, mphase, d)
    return xn, min(m1, m_end)


@njit(cache=True)
def integrate(x0, dt, n_steps, stride, guard, rk4, P0, w, mkind, mvel, mamp, mfreq, mphase,
              noise_on, noff, namp, nfreq, naxis, code, gains, d, iv, ivhat, ibeta, iq):
    """Fixed-step loop from ``t = 0``.

    Returns ``(steps, states, collided, diverged)`` with the states recorded at
    step 0, every ``stride`` steps, the last step, and the step at which a
    collision (distance below ``guard``) or non-finite state was detected.
    """
    cap = n_steps // stride + 3
    steps = np.empty(cap, dtype=np.int64)
    states = np.empty((cap, x0.shape[0]))
    steps[0] = 0
    states[0] = x0
    m = 1
    x = x0.copy()
    if _min_dist(0.0, x, P0, mkind, mvel, mamp, mfreq, mphase, d) < guard:
        return steps[:m], states[:m], True, False
    for k in range(1, n_steps + 1):
        x, seen = advance((k - 1) * dt, x, dt, rk4, P0, w, mkind, mvel, mamp, mfreq, mphase,
                          noise_on, noff, namp, nfreq, naxis, code, gains, d, iv, ivhat, ibeta, iq)
        finite = True
        for j in range(x.shape[0]):
            if not math.isfinite(x[j]):
                finite = False
        if seen < guard or not finite or k % stride == 0 or k == n_steps:
            steps[m] = k
            states[m] = x
            m += 1
        if not finite:
            return steps[:m], states[:m], False, True
        if seen < guard:
            return steps[:m], states[:m], True, False
    return steps[:m], states[:m], False, False


@njit(cache=True)
def rhs_batch(ts, xs, P0, w, mkind, mvel, mamp, mfreq, mphase, noise_on, noff, namp, nfreq, naxis,
              code, gains, d, iv, ivhat, ibeta, iq):
    """Control inputs at recorded states (one row per sample)."""
    U = np.empty((xs.shape[0], d))
    for i in range(xs.shape[0]):
        _, u, _ = _rhs(ts[i], xs[i], P0, w, mkind, mvel, mamp, mfreq, mphase, noise_on, noff, namp,
                       nfreq, naxis, code, gains, d, iv, ivhat, ibeta, iq)
        U[i] = u
    return U
