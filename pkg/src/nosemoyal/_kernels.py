"""Compiled inner loop for long thermostat-chain runs."""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _force(r, kind, fc, bx, bc):
    out = np.empty_like(r)
    for i in range(r.size):
        x = r[i]
        acc = 0.0
        if kind == 0:
            for k in range(fc.size - 1, -1, -1):
                acc = acc * x + fc[k]
        else:
            j = np.searchsorted(bx, x, side="right") - 1
            j = min(max(j, 0), bx.size - 2)
            dx = x - bx[j]
            for k in range(bc.shape[0]):
                acc = acc * dx + bc[k, j]
        out[i] = acc
    return out


@njit(cache=True)
def _g(k, p, p_eta, q, mass, g_kT, kT):
    if k == 0:
        return np.sum(p * p) / mass - g_kT
    return p_eta[k - 1] ** 2 / q[k - 1] - kT


@njit(cache=True)
def _thermostat(p, eta, p_eta, q, mass, g_kT, kT, delta):
    """Advance the chain for a time ``delta`` (in place)."""
    m = q.size
    h = 0.5 * delta
    top = m - 1
    p_eta[top] += h * _g(top, p, p_eta, q, mass, g_kT, kT)
    for k in range(m - 2, -1, -1):
        s = np.exp(-0.5 * h * p_eta[k + 1] / q[k + 1])
        p_eta[k] *= s
        p_eta[k] += h * _g(k, p, p_eta, q, mass, g_kT, kT)
        p_eta[k] *= s
    scale = np.exp(-delta * p_eta[0] / q[0])
    for i in range(p.size):
        p[i] *= scale
    for k in range(m):
        eta[k] += delta * p_eta[k] / q[k]
    for k in range(m - 1):
        s = np.exp(-0.5 * h * p_eta[k + 1] / q[k + 1])
        p_eta[k] *= s
        p_eta[k] += h * _g(k, p, p_eta, q, mass, g_kT, kT)
        p_eta[k] *= s
    p_eta[top] += h * _g(top, p, p_eta, q, mass, g_kT, kT)


@njit(cache=True)
def nhc_run(r, eta, p, p_eta, q, mass, g_kT, kT, dt, n_steps, kind, fc, bx, bc, record,
            out_r, out_eta, out_p, out_p_eta):
    """Advance the state arrays in place; optionally record every step.

    Returns False as soon as the state stops being finite.
    """
    half = 0.5 * dt
    if record:
        out_r[0] = r
        out_eta[0] = eta
        out_p[0] = p
        out_p_eta[0] = p_eta
    for step in range(n_steps):
        _thermostat(p, eta, p_eta, q, mass, g_kT, kT, half)
        p -= half * _force(r, kind, fc, bx, bc)
        r += dt * p / mass
        p -= half * _force(r, kind, fc, bx, bc)
        _thermostat(p, eta, p_eta, q, mass, g_kT, kT, half)
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(r))
                and np.all(np.isfinite(p_eta))):
            return False
        if record:
            out_r[step + 1] = r
            out_eta[step + 1] = eta
            out_p[step + 1] = p
            out_p_eta[step + 1] = p_eta
    return True
