"""Independent reference computations shared by the unit and acceptance tests."""

import math

import numpy as np

from iwcsim.ttc import dynamic_ttc


def integrate_arrival(d, v, a, vmax, dt=1e-3, horizon=120.0):
    """Vectorised 1 ms time stepping of speed-capped constant-acceleration motion.

    Each step advances position exactly for the step's constant acceleration (clipping at
    standstill and at the cap); the arrival instant is interpolated inside the crossing step.
    Returns +inf where the point is not reached within ``horizon``.
    """
    d, v, a, vmax = (np.array(x, dtype=float) for x in (d, v, a, vmax))
    out = np.full(d.shape, np.inf)
    out[d == 0] = 0.0
    idx = np.flatnonzero(d > 0)
    x = np.zeros(idx.size)
    d, v, a, vmax = d[idx], v[idx], a[idx], vmax[idx]
    steps = int(round(horizon / dt))
    for k in range(steps):
        if idx.size == 0:
            break
        t = k * dt
        v_next = v + a * dt
        step = v * dt + 0.5 * a * dt * dt
        stop = v_next < 0
        step = np.where(stop, v * v / (2 * np.where(a < 0, -a, 1.0)), step)
        capped = v_next > vmax
        tc = np.where(capped, (vmax - v) / np.where(a > 0, a, 1.0), 0.0)
        step = np.where(capped, v * tc + 0.5 * a * tc * tc + vmax * (dt - tc), step)
        v_next = np.clip(v_next, 0.0, vmax)
        arrive = x + step >= d
        for i in np.flatnonzero(arrive):
            out[idx[i]] = t + _within_step(d[i] - x[i], v[i], a[i], vmax[i], capped[i], tc[i])
        x = x + step
        v = v_next
        # arrived, or stationary without acceleration: drop from the live set
        keep = ~arrive & ~((v <= 0) & (a <= 0))
        idx, x, d, v, a, vmax = idx[keep], x[keep], d[keep], v[keep], a[keep], vmax[keep]
    return out


def _within_step(rem, v, a, vmax, capped, tc):
    if capped and rem > v * tc + 0.5 * a * tc * tc:
        return tc + (rem - (v * tc + 0.5 * a * tc * tc)) / vmax
    if abs(a) < 1e-12:
        return rem / v
    return (-v + math.sqrt(max(v * v + 2 * a * rem, 0.0))) / a


def oracle_cases(n=10_000, seed=2024):
    rng = np.random.default_rng(seed)
    d = rng.uniform(0, 150, n)
    d[:50] = 0.0
    vmax = rng.uniform(2, 30, n)
    v = rng.uniform(0, 1, n) * vmax
    a = rng.uniform(-3, 3, n)
    a[50:300] = 0.0
    v[300:400] = 0.0
    return d, v, a, vmax


def compare_with_oracle(n=10_000, seed=2024):
    """Worst tolerance excess of the closed form against integration, plus case counts.

    Tolerance is max(1 %, 0.01 s); +inf must match +inf (an analytic arrival beyond the
    integration horizon counts as never).
    """
    d, v, a, vmax = oracle_cases(n, seed)
    truth = integrate_arrival(d, v, a, vmax)
    got = np.array([dynamic_ttc(*args) for args in zip(d, v, a, vmax)])
    inf_t = np.isinf(truth)
    inf_ok = bool(np.all(np.isinf(got[inf_t]) | (got[inf_t] >= 120.0 - 0.01)))
    fin = ~inf_t
    fin_ok = bool(np.all(np.isfinite(got[fin])))
    err = np.abs(got[fin] - truth[fin]) - np.maximum(0.01 * truth[fin], 0.01)
    return {
        "inf_ok": inf_ok,
        "finite_ok": fin_ok,
        "max_excess": float(err.max()) if err.size else -math.inf,
        "n_inf": int(inf_t.sum()),
        "n_finite": int(fin.sum()),
    }
