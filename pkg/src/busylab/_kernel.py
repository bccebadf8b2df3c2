"""Numba fast path for chunk simulation.

The functions here are operation-for-operation transcriptions of the
reference implementations in :mod:`busylab.distributions` (sampling
transforms), :mod:`busylab.segments` (segment integrals) and
:mod:`busylab.cycles` (the cycle sweep), consuming uniforms from the passed
generator in the identical order, so that a chunk simulated here is bit
identical to one simulated by the pure-Python engine with the same seed.
The equivalence is enforced by tests, not assumed.
"""

import math

import numpy as np
from numba import njit

from .segments import GL_NODES, GL_WEIGHTS

_GLX = np.ascontiguousarray(GL_NODES)
_GLW = np.ascontiguousarray(GL_WEIGHTS)

_PANEL = 8.0
_TRUNC = 64.0


@njit(cache=True, nogil=True, inline="always")
def _draw(code, p1, p2, rng):
    if code == 0:    # exponential(rate=p1)
        return -math.log1p(-rng.random()) / p1
    elif code == 1:  # pareto(alpha=p1, scale=p2)
        return p2 * (1.0 - rng.random()) ** (-1.0 / p1)
    elif code == 2:  # lognormal(mu=p1, sigma=p2), Box-Muller cosine branch
        u1 = rng.random()
        u2 = rng.random()
        z = math.sqrt(-2.0 * math.log1p(-u1)) * math.cos((2.0 * math.pi) * u2)
        return math.exp(p1 + p2 * z)
    elif code == 3:  # weibull(shape=p1, scale=p2)
        return p2 * (-math.log1p(-rng.random())) ** (1.0 / p1)
    elif code == 4:  # deterministic(value=p1)
        return p1
    else:            # erlang(shape=p1, rate=p2)
        acc = 0.0
        for _ in range(int(p1)):
            acc += math.log1p(-rng.random())
        return -acc / p2


@njit(cache=True, nogil=True)
def _drain_piece(w, k, theta, t0, gjx, gjw):
    if w == 0.0:
        return 0.0
    half = 0.5 * w
    acc = 0.0
    for i in range(16):
        acc += gjw[i] * math.exp(theta * half * (1.0 + gjx[i]))
    return acc * half ** (k + 1.0) * math.exp(-theta * (t0 + w))


@njit(cache=True, nogil=True)
def _gl_panel(w0, a, b, k, theta, t0):
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    acc = 0.0
    for i in range(16):
        s = mid + half * _GLX[i]
        acc += _GLW[i] * math.exp(-theta * (t0 + s)) * (w0 - s) ** k
    return acc * half


@njit(cache=True, nogil=True)
def _drain_full(w, k, theta, t0, gjx, gjw):
    h = _PANEL / theta
    s_end = w if theta * w <= _TRUNC else _TRUNC / theta
    total = 0.0
    s = 0.0
    while s < s_end:
        e = s + h
        if e >= s_end:
            e = s_end
        if e == w:
            total += _drain_piece(w - s, k, theta, t0 + s, gjx, gjw)
        else:
            total += _gl_panel(w, s, e, k, theta, t0)
        s = e
    return total


@njit(cache=True, nogil=True)
def _workload_theta(w0, delta, k, theta, t0, gjx, gjw):
    if delta == w0:
        return _drain_full(w0, k, theta, t0, gjx, gjw)
    if k != math.floor(k) and delta > 0.7 * w0:
        return (_drain_full(w0, k, theta, t0, gjx, gjw)
                - _drain_full(w0 - delta, k, theta, t0 + delta, gjx, gjw))
    h = _PANEL / theta
    s_end = delta if theta * delta <= _TRUNC else _TRUNC / theta
    total = 0.0
    s = 0.0
    while s < s_end:
        e = s + h
        if e >= s_end:
            e = s_end
        total += _gl_panel(w0, s, e, k, theta, t0)
        s = e
    return total


@njit(cache=True, nogil=True, inline="always")
def _seg_w(w0, delta, k, theta, t0, j, gjx2, gjw2):
    # gjx2/gjw2 are the full per-functional tables; slice only on the slow path
    if delta == 0.0:
        return 0.0
    if theta == 0.0:
        if k == 1.0:
            return delta * (w0 - 0.5 * delta)
        if k == 0.0:
            return delta
        if k == 2.0:
            return delta * (w0 * w0 - w0 * delta + delta * delta / 3.0)
        if delta == w0:
            return w0 ** (k + 1.0) / (k + 1.0)
        return w0 ** (k + 1.0) * (-math.expm1((k + 1.0) * math.log1p(-delta / w0))) / (k + 1.0)
    if k == 0.0:
        return math.exp(-theta * t0) * (-math.expm1(-theta * delta)) / theta
    return _workload_theta(w0, delta, k, theta, t0, gjx2[j], gjw2[j])


@njit(cache=True, nogil=True, inline="always")
def _seg_q(q, delta, k, theta, t0):
    if delta <= 0.0:
        return 0.0
    if q == 0:
        qk = 1.0 if k == 0.0 else 0.0
    elif k == 1.0:
        qk = float(q)
    elif k == 0.0:
        qk = 1.0
    else:
        qk = float(q) ** k
    if qk == 0.0:
        return 0.0
    if theta == 0.0:
        return qk * delta
    return qk * math.exp(-theta * t0) * (-math.expm1(-theta * delta)) / theta


@njit(cache=True, nogil=True)
def simulate_chunk(rng, n_cycles,
                   s_code, s_p1, s_p2, t_code, t_p1, t_p2,
                   max_customers, max_time, weight_gamma, weight_lognorm,
                   has_stop, stop_tau, stop_levels,
                   f_is_w, f_k, f_theta, f_gjx, f_gjw,
                   out_tau, out_n, out_maxq, out_maxw, out_soj,
                   out_weight, out_censored, out_areas):
    """Simulate n_cycles busy cycles, writing one row of outputs per cycle."""
    nf = f_k.shape[0]
    area_acc = np.zeros(nf, dtype=np.float64)
    ring = np.empty(1024, dtype=np.float64)

    for i in range(n_cycles):
        head = 0
        tail = 0
        n = 0
        cum_s = 0.0
        cum_t = 0.0
        t_now = 0.0
        q = 0
        soj = 0.0
        max_q = 0
        max_w = 0.0
        censored = False
        tau = 0.0
        for j in range(nf):
            area_acc[j] = 0.0

        while True:
            s = _draw(s_code, s_p1, s_p2, rng)
            n += 1
            a_n = t_now
            cum_s += s
            q += 1
            w_after = cum_s - a_n
            soj += w_after
            if q > max_q:
                max_q = q
            if w_after > max_w:
                max_w = w_after
            # ring push (grow by doubling when full)
            cap = ring.shape[0]
            if tail - head == cap:
                bigger = np.empty(cap * 2, dtype=np.float64)
                for j in range(head, tail):
                    bigger[j - head] = ring[j % cap]
                ring = bigger
                tail = tail - head
                head = 0
                cap = cap * 2
            ring[tail % cap] = cum_s
            tail += 1

            t = _draw(t_code, t_p1, t_p2, rng)
            cum_t += t
            next_arrival = cum_t
            ended = cum_s <= next_arrival
            seg_end = cum_s if ended else next_arrival

            while tail > head and ring[head % cap] <= seg_end:
                d = ring[head % cap]
                head += 1
                delta = d - t_now
                if delta > 0.0:
                    w0 = cum_s - t_now
                    for j in range(nf):
                        if f_is_w[j]:
                            area_acc[j] += _seg_w(w0, delta, f_k[j], f_theta[j],
                                                  t_now, j, f_gjx, f_gjw)
                        else:
                            area_acc[j] += _seg_q(q, delta, f_k[j], f_theta[j],
                                                  t_now)
                q -= 1
                t_now = d
            if t_now < seg_end:
                delta = seg_end - t_now
                w0 = cum_s - t_now
                for j in range(nf):
                    if f_is_w[j]:
                        area_acc[j] += _seg_w(w0, delta, f_k[j], f_theta[j],
                                              t_now, j, f_gjx, f_gjw)
                    else:
                        area_acc[j] += _seg_q(q, delta, f_k[j], f_theta[j],
                                              t_now)
                t_now = seg_end

            if ended:
                tau = cum_s
                break
            hit_cap = n >= max_customers or cum_s >= max_time
            if (not hit_cap) and has_stop and cum_s > stop_tau:
                hit_cap = True
                for j in range(nf):
                    if not (area_acc[j] > stop_levels[j]):
                        hit_cap = False
                        break
            if hit_cap:
                censored = True
                tau = cum_s
                while tail > head and ring[head % cap] <= tau:
                    d = ring[head % cap]
                    head += 1
                    delta = d - t_now
                    if delta > 0.0:
                        w0 = cum_s - t_now
                        for j in range(nf):
                            if f_is_w[j]:
                                area_acc[j] += _seg_w(w0, delta, f_k[j],
                                                      f_theta[j], t_now,
                                                      j, f_gjx, f_gjw)
                            else:
                                area_acc[j] += _seg_q(q, delta, f_k[j],
                                                      f_theta[j], t_now)
                    q -= 1
                    t_now = d
                break

        out_tau[i] = tau
        out_n[i] = n
        out_maxq[i] = max_q
        out_maxw[i] = max_w
        out_soj[i] = soj
        if weight_gamma != 0.0 or weight_lognorm != 0.0:
            out_weight[i] = math.exp(-weight_gamma * (cum_s - cum_t)
                                     + n * weight_lognorm)
        else:
            out_weight[i] = 1.0
        out_censored[i] = censored
        for j in range(nf):
            out_areas[i, j] = area_acc[j]
