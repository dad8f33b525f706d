"""Compiled path loop for the game simulator.

One call simulates one antithetic pair (or one plain path) for every
strategy pair at once.  Strategy pairs sharing a control barrier share the
same Z path (a *group*); their running integrals coincide up to the first
stop, so each channel is integrated once per group as a prefix sum and each
pair reads it off at its own stop index.

The running maximum of log Y is sampled exactly between grid points from
the Brownian-bridge maximum, so Z at the grid times has the law of the
continuously reflected process.  The coarse (2 dt) probe reuses Z at even
steps and differs only in its quadrature and stop monitoring.

All integrands are cubic splines on one uniform grid in u = log z.  Channel
weights: ``W_PLAIN`` is the discount alone; ``W_Z`` and ``W_Y`` additionally
divide by y0 and, for ``W_Y``, multiply by 1/D = Y/Z (their tables already
carry the factor z).
"""

import math

import numba as nb
import numpy as np

W_PLAIN, W_Y, W_Z = 0, 1, 2


@nb.njit(nogil=True, cache=True)
def bridge_terms(rng, n_steps, vol_sqdt):
    """Standard normals and the matching 2 v^2 E terms (E ~ Exp(1)) of the bridge maximum."""
    xi = rng.standard_normal(n_steps)
    ex = rng.standard_exponential(n_steps)
    v2 = 2.0 * vol_sqdt * vol_sqdt
    for k in range(n_steps):
        ex[k] *= v2
    return xi, ex


@nb.njit(nogil=True, cache=True)
def _path(xi, ex, sign, x0, drift_dt, vol_sqdt, x, m):
    xx = x0
    mm = x0
    x[0] = x0
    m[0] = x0
    for k in range(1, x.size):
        xp = xx
        xx = xp + drift_dt + sign * vol_sqdt * xi[k - 1]
        dx = xx - xp
        top = 0.5 * (xp + xx + math.sqrt(dx * dx + ex[k - 1]))
        if top > mm:
            mm = top
        x[k] = xx
        m[k] = mm


@nb.njit(nogil=True, cache=True)
def simulate_pairs(rng, signs, x0, drift_dt, vol_sqdt, dt, n_steps, disc,
                   group_lb, group_start, pair_la, chan_active,
                   chan_kind, run_id, stop_id, end_id,
                   tabs, u0, inv_du, nint,
                   out_val, out_coarse, out_stop, clamp):
    """Fill out_val/out_coarse[s, pair, channel] and out_stop[s, pair] for each sign s.

    ``disc[k] = exp(-delta t_k)``; ``n_steps`` must be even.
    """
    n = n_steps
    G = group_lb.size
    C = chan_kind.size
    P = pair_la.size
    xi, ex = bridge_terms(rng, n, vol_sqdt)
    x = np.empty(n + 1)
    m = np.empty(n + 1)
    idx = np.empty(n + 1, dtype=np.int64)
    frac = np.empty(n + 1)
    invd = np.empty(n + 1)
    ks = np.empty(P, dtype=np.int64)
    kc = np.empty(P, dtype=np.int64)
    # prefix sums are only needed at the stop (or horizon) indices of each pair
    targets = np.empty(2 * P + 1, dtype=np.int64)
    t_sf = np.empty(2 * P + 1)
    t_sc = np.empty(2 * P + 1)
    t_h = np.empty(2 * P + 1)
    y0inv = math.exp(-x0)
    n_clamped = 0
    top_t = nint - 1e-9
    for s in range(signs.size):
        _path(xi, ex, signs[s], x0, drift_dt, vol_sqdt, x, m)
        for g in range(G):
            lb = group_lb[g]
            p0 = group_start[g]
            p1 = group_start[g + 1]
            la_max = -np.inf
            for j in range(p0, p1):
                ks[j] = -1
                kc[j] = -1
                if pair_la[j] > la_max:
                    la_max = pair_la[j]
            # log Z, stop indices, spline coordinates
            open_pairs = p1 - p0
            last = n
            for k in range(n + 1):
                v = x[k] + min(0.0, lb - m[k])
                t = (v - u0) * inv_du
                if t < 0.0:
                    t = 0.0
                    n_clamped += 1
                elif t > top_t:
                    t = top_t
                    n_clamped += 1
                i = int(t)
                idx[k] = i
                frac[k] = t - i
                if v < la_max:
                    for j in range(p0, p1):
                        if v < pair_la[j]:
                            if ks[j] < 0:
                                ks[j] = k
                            if kc[j] < 0 and k % 2 == 0:
                                kc[j] = k
                                open_pairs -= 1
                    if open_pairs == 0:
                        last = k
                        break
            nt = 0
            for j in range(p0, p1):
                targets[nt] = ks[j] if ks[j] >= 0 else n
                targets[nt + 1] = kc[j] if kc[j] >= 0 else n
                nt += 2
            tsorted = np.sort(targets[:nt])
            need_invd = False
            for c in range(C):
                if chan_active[g, c] and chan_kind[c] == W_Y:
                    need_invd = True
            if need_invd:
                mprev = np.nan
                val = 1.0
                for k in range(last + 1):
                    if m[k] != mprev:
                        mprev = m[k]
                        val = math.exp(max(0.0, mprev - lb))
                    invd[k] = val
            for c in range(C):
                if not chan_active[g, c]:
                    continue
                kind = chan_kind[c]
                tid = run_id[c]
                scale = 1.0 if kind == W_PLAIN else y0inv
                use_invd = kind == W_Y
                sf = 0.0
                sc = 0.0
                ptr = 0
                nxt = tsorted[0]
                h0 = 0.0
                for k in range(last + 1):
                    i = idx[k]
                    f = frac[k]
                    w = disc[k] * scale
                    if use_invd:
                        w *= invd[k]
                    hv = w * (tabs[tid, i, 0] + f * (tabs[tid, i, 1] + f * (tabs[tid, i, 2] + f * tabs[tid, i, 3])))
                    if k == 0:
                        h0 = hv
                    sf += hv
                    if (k & 1) == 0:
                        sc += hv
                    while k == nxt:
                        t_sf[ptr] = sf
                        t_sc[ptr] = sc
                        t_h[ptr] = hv
                        ptr += 1
                        nxt = tsorted[ptr] if ptr < nt else -1
                for j in range(p0, p1):
                    for lev in range(2):
                        kk = ks[j] if lev == 0 else kc[j]
                        stopped = kk >= 0
                        if not stopped:
                            kk = n
                        q = np.searchsorted(tsorted[:nt], kk)
                        if lev == 0:
                            trap = dt * (t_sf[q] - 0.5 * (h0 + t_h[q]))
                        else:
                            trap = 2.0 * dt * (t_sc[q] - 0.5 * (h0 + t_h[q]))
                        tt = stop_id[c] if stopped else end_id[c]
                        term = 0.0
                        if tt >= 0:
                            w = disc[kk] * scale
                            if use_invd:
                                w *= invd[kk]
                            i = idx[kk]
                            f = frac[kk]
                            term = w * (tabs[tt, i, 0] + f * (tabs[tt, i, 1] + f * (tabs[tt, i, 2] + f * tabs[tt, i, 3])))
                        if lev == 0:
                            out_val[s, j, c] = trap + term
                        else:
                            out_coarse[s, j, c] = trap + term
            for j in range(p0, p1):
                out_stop[s, j] = ks[j]
    clamp[0] += n_clamped


@nb.njit(nogil=True, cache=True)
def z_path(rng, sign, x0, drift_dt, vol_sqdt, n_steps, lb):
    """log Y, running max of log Y and log Z on the grid for a single path."""
    xi, ex = bridge_terms(rng, n_steps, vol_sqdt)
    lx = np.empty(n_steps + 1)
    lm = np.empty(n_steps + 1)
    _path(xi, ex, sign, x0, drift_dt, vol_sqdt, lx, lm)
    lz = lx + np.minimum(0.0, lb - lm)
    return lx, lm, lz
