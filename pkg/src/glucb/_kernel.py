"""Compiled inner loop shared by GLUCB and the static baseline.

Mirrors ``core._run_python`` step for step: same tie tolerances, same
order of random draws (noise and tie-break streams are pre-drawn in
chunks; bulk draws from a numpy ``Generator`` equal sequential ones).
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .linalg import DEFAULT_REFRESH_INTERVAL

TIE_RTOL = 1e-12

NOISE_CHUNK = 1 << 15
TIE_CHUNK = 1 << 10
TRACE_CHUNK = 1 << 14

STOPPED, MAX_STEPS, NEED_NOISE, NEED_TIE, TRACE_FULL = 0, 1, 2, 3, 4


@njit(cache=True, nogil=True)
def _radius(log_det, t, d, R, S, delta, lam, det_mode):
    if det_mode:
        excess = 0.5 * log_det - 0.5 * d * math.log(lam)
        if excess < 0.0:
            excess = 0.0
        return R * math.sqrt(2.0 * (excess - math.log(delta))) + math.sqrt(lam) * S
    tt = t if t >= 1 else 1
    return R * math.sqrt(d * math.log(tt / delta))


@njit(cache=True, nogil=True)
def _refresh(V, Vinv):
    d = V.shape[0]
    for i in range(d):
        for j in range(i + 1, d):
            s = 0.5 * (V[i, j] + V[j, i])
            V[i, j] = s
            V[j, i] = s
    L = np.linalg.cholesky(V)
    Linv = np.linalg.solve(L, np.eye(d))
    Vinv[:, :] = Linv.T @ Linv
    ld = 0.0
    for i in range(d):
        ld += math.log(L[i, i])
    return 2.0 * ld


@njit(cache=True, nogil=True)
def _loop(
    X, mu, noise_std, V, Vinv, b, counts, scal, iscal,
    R, S, delta, lam, det_mode, refresh_interval,
    max_steps, stopping, static, weights,
    noise, tie_u, tr_h, tr_l, tr_c, tr_beta, tr_adv, tr_offset,
):
    # scal = [log_det, beta]; iscal = [t, since_refresh, noise_pos, tie_pos, h]
    K, d = X.shape
    theta = np.empty(d)
    P = np.empty((K, d))
    gdiag = np.empty(K)
    adv = np.empty(K)
    scores = np.empty(K)
    p = np.empty(d)
    y = np.empty(d)
    tied = np.empty(K, dtype=np.int64)
    while True:
        t = iscal[0]
        for i in range(d):
            s = 0.0
            for j in range(d):
                s += Vinv[i, j] * b[j]
            theta[i] = s
        # current best, lowest index among near-ties
        mmax = -np.inf
        means = X @ theta
        for a in range(K):
            if means[a] > mmax:
                mmax = means[a]
        thr = mmax - TIE_RTOL * abs(mmax)
        h = 0
        for a in range(K):
            if means[a] >= thr:
                h = a
                break
        iscal[4] = h
        beta = scal[1]
        for a in range(K):
            for j in range(d):
                s = 0.0
                for k in range(d):
                    s += X[a, k] * Vinv[k, j]
                P[a, j] = s
        for a in range(K):
            s = 0.0
            for j in range(d):
                s += P[a, j] * X[a, j]
            gdiag[a] = s
        amax = -np.inf
        for a in range(K):
            if a == h:
                adv[a] = -np.inf
                continue
            for j in range(d):
                y[j] = X[a, j] - X[h, j]
            q = 0.0
            for i in range(d):
                s = 0.0
                for j in range(d):
                    s += Vinv[i, j] * y[j]
                q += y[i] * s
            if q < 0.0:
                q = 0.0
            adv[a] = (means[a] - means[h]) + beta * math.sqrt(q)
            if adv[a] > amax:
                amax = adv[a]
        if stopping and amax < 0.0:
            return STOPPED
        if t >= max_steps:
            return MAX_STEPS
        if iscal[2] >= noise.shape[0]:
            return NEED_NOISE
        if tr_h.shape[0] > 0 and t - tr_offset >= tr_h.shape[0]:
            return TRACE_FULL
        thr = amax - TIE_RTOL * abs(amax)
        l = 0
        for a in range(K):
            if adv[a] >= thr:
                l = a
                break
        if static:
            best = -np.inf
            c = 0
            for a in range(K):
                v = weights[a] * (t + 1) - counts[a]
                if v > best:
                    best = v
                    c = a
        else:
            for j in range(d):
                y[j] = X[h, j] - X[l, j]
            smax = 0.0
            for a in range(K):
                s = 0.0
                for j in range(d):
                    s += P[a, j] * y[j]
                g = gdiag[a] if gdiag[a] > 0.0 else 0.0
                scores[a] = abs(s) / math.sqrt(1.0 + g)
                if scores[a] > smax:
                    smax = scores[a]
            thr = smax - TIE_RTOL * smax
            nt = 0
            for a in range(K):
                if scores[a] >= thr:
                    tied[nt] = a
                    nt += 1
            if nt == 1:
                c = tied[0]
            else:
                if iscal[3] >= tie_u.shape[0]:
                    return NEED_TIE
                u = tie_u[iscal[3]]
                iscal[3] += 1
                k = int(u * nt)
                if k > nt - 1:
                    k = nt - 1
                c = tied[k]
        if tr_h.shape[0] > 0:
            i = t - tr_offset
            tr_h[i] = h
            tr_l[i] = l
            tr_c[i] = c
            tr_beta[i] = beta
            tr_adv[i] = amax
        reward = mu[c] + noise_std * noise[iscal[2]]
        iscal[2] += 1
        # Sherman-Morrison update of Vinv, plus V, b, log det
        denom = 1.0
        for i in range(d):
            s = 0.0
            for j in range(d):
                s += Vinv[i, j] * X[c, j]
            p[i] = s
            denom += X[c, i] * s
        for i in range(d):
            for j in range(d):
                V[i, j] += X[c, i] * X[c, j]
                Vinv[i, j] -= p[i] * p[j] / denom
        scal[0] += math.log(denom)
        for j in range(d):
            b[j] += reward * X[c, j]
        counts[c] += 1
        iscal[0] = t + 1
        iscal[1] += 1
        if iscal[1] >= refresh_interval:
            scal[0] = _refresh(V, Vinv)
            iscal[1] = 0
        scal[1] = _radius(scal[0], t + 1, d, R, S, delta, lam, det_mode)


def run_compiled(instance, params, rng, max_steps, stopping, trace, weights):
    """Drive :func:`_loop`, refilling random and trace buffers as needed.

    Returns ``(pull_counts, t, h, stopped, trace_or_None)``.
    """
    from .core import RadiusMode, Trace, _radius as py_radius, _split_streams
    from .linalg import init

    X = np.ascontiguousarray(instance.arms, dtype=np.float64)
    K, d = X.shape
    mu = X @ instance.theta_star
    noise_rng, tie_rng = _split_streams(rng)
    spd = init(d, params.lam)
    V, Vinv = spd.V.copy(), spd.V_inv.copy()
    b = np.zeros(d)
    counts = np.zeros(K, dtype=np.int64)
    scal = np.array([spd.log_det, py_radius(spd, 0, params)])
    iscal = np.zeros(5, dtype=np.int64)
    det_mode = params.radius_mode is RadiusMode.DET
    static = weights is not None
    w = np.asarray(weights, dtype=np.float64) if static else np.zeros(K)

    empty_f = np.empty(0)
    empty_i = np.empty(0, dtype=np.int64)
    noise = empty_f
    tie_u = empty_f
    chunks = []
    tr_offset = 0
    if trace:
        cap = min(TRACE_CHUNK, max_steps)
        bufs = (np.empty(cap, np.int64), np.empty(cap, np.int64), np.empty(cap, np.int64),
                np.empty(cap), np.empty(cap))
    else:
        bufs = (empty_i, empty_i, empty_i, empty_f, empty_f)

    while True:
        status = _loop(
            X, mu, float(instance.noise_std), V, Vinv, b, counts, scal, iscal,
            float(params.R), float(params.S), float(params.delta), float(params.lam),
            det_mode, DEFAULT_REFRESH_INTERVAL,
            int(max_steps), bool(stopping), static, w,
            noise, tie_u, *bufs, tr_offset,
        )
        if status == NEED_NOISE:
            noise = noise_rng.standard_normal(NOISE_CHUNK)
            iscal[2] = 0
        elif status == NEED_TIE:
            tie_u = tie_rng.random(TIE_CHUNK)
            iscal[3] = 0
        elif status == TRACE_FULL:
            chunks.append(tuple(buf.copy() for buf in bufs))
            tr_offset += len(bufs[0])
            cap = min(len(bufs[0]) * 2, max_steps - tr_offset)
            bufs = (np.empty(cap, np.int64), np.empty(cap, np.int64), np.empty(cap, np.int64),
                    np.empty(cap), np.empty(cap))
        else:
            break

    t = int(iscal[0])
    tr = None
    if trace:
        chunks.append(bufs)
        h_, l_, c_, beta_, adv_ = (np.concatenate(parts)[:t] for parts in zip(*chunks))
        tr = Trace(t=np.arange(t, dtype=np.int64), h=h_, l=l_, c=c_, beta=beta_, max_advantage=adv_)
    return counts, t, int(iscal[4]), status == STOPPED, tr
