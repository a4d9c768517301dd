"""Pure-numpy kernels, vectorized across shots.

State layout for the measurement filter: one shot is four reals
``(a, b, u, v)`` for the Hermitian 2x2 operator ``[[a, u+iv], [u-iv, b]]``,
renormalized to unit trace after every Euler step.  The Bloch vector is
``x = 2u, y = -2v, z = a - b``.

Process matrices travel as flat 16-component complex vectors (row-major
``chi[4j + k]``); the stochastic generator is ``A + r B`` with constant
16x16 matrices built in :mod:`qdemon.process`.
"""

from __future__ import annotations

import numpy as np


def _sme_step(a, b, u, v, r, dt, k, om, eta):
    # One Euler step of the linear unnormalized equation, then renormalize:
    #   phi <- phi + dt*( -i[H_R,phi] + k(sz phi sz - phi) + 2 eta k r (sz phi + phi sz) )
    g = 4.0 * eta * k * r
    na = a + dt * (om * u + g * a)
    nb = b + dt * (-om * u - g * b)
    nu = u + dt * (0.5 * om * (b - a) - 2.0 * k * u)
    nv = v * (1.0 - 2.0 * k * dt)
    return na, nb, nu, nv


def sme_synthesize(state0, zetas, dt, k, om, eta, store_path):
    """Generate records from the conditioned state and integrate along them.

    state0: (N, 4) float64, zetas: (N, S) float64.
    Returns (records, final, logw, fail, path); fail[i] is the first step with
    non-positive trace (else -1), path is (N, S+1, 4) when requested.
    """
    state0 = np.asarray(state0, dtype=np.float64)
    zetas = np.asarray(zetas, dtype=np.float64)
    n, s = zetas.shape
    inv_s = 1.0 / np.sqrt(4.0 * eta * k * dt)
    a, b, u, v = (state0[:, i].copy() for i in range(4))
    records = np.empty((n, s))
    logw = np.zeros(n)
    fail = np.full(n, -1, dtype=np.int64)
    path = np.empty((n, s + 1, 4)) if store_path else np.empty((1, 1, 4))
    if store_path:
        path[:, 0, 0], path[:, 0, 1], path[:, 0, 2], path[:, 0, 3] = a, b, u, v
    for j in range(s):
        r = (a - b) + zetas[:, j] * inv_s
        records[:, j] = r
        na, nb, nu, nv = _sme_step(a, b, u, v, r, dt, k, om, eta)
        t = na + nb
        bad = ~(t > 0.0) & (fail < 0)
        if bad.any():
            fail[bad] = j
            t = np.where(bad, 1.0, t)
        w = 1.0 / t
        a, b, u, v = na * w, nb * w, nu * w, nv * w
        logw += np.log(t)
        if store_path:
            path[:, j + 1, 0], path[:, j + 1, 1] = a, b
            path[:, j + 1, 2], path[:, j + 1, 3] = u, v
    final = np.stack([a, b, u, v], axis=1)
    return records, final, logw, fail, path


def sme_filter(state0, records, dt, k, om, eta, store_path):
    """Deterministic replay of given records; same stepping as synthesis."""
    state0 = np.asarray(state0, dtype=np.float64)
    records = np.asarray(records, dtype=np.float64)
    n, s = records.shape
    a, b, u, v = (state0[:, i].copy() for i in range(4))
    logw = np.zeros(n)
    fail = np.full(n, -1, dtype=np.int64)
    path = np.empty((n, s + 1, 4)) if store_path else np.empty((1, 1, 4))
    if store_path:
        path[:, 0, 0], path[:, 0, 1], path[:, 0, 2], path[:, 0, 3] = a, b, u, v
    for j in range(s):
        na, nb, nu, nv = _sme_step(a, b, u, v, records[:, j], dt, k, om, eta)
        t = na + nb
        bad = ~(t > 0.0) & (fail < 0)
        if bad.any():
            fail[bad] = j
            t = np.where(bad, 1.0, t)
        w = 1.0 / t
        a, b, u, v = na * w, nb * w, nu * w, nv * w
        logw += np.log(t)
        if store_path:
            path[:, j + 1, 0], path[:, j + 1, 1] = a, b
            path[:, j + 1, 2], path[:, j + 1, 3] = u, v
    final = np.stack([a, b, u, v], axis=1)
    return final, logw, fail, path


def chi_evolve(records, dt, a_mat, b_mat, rescale_lo, rescale_hi, store_path):
    """Integrate the process-matrix SDE ``chi' = chi + dt (A + r B) chi``.

    records: (N, S).  Returns (chi, log_scale, fail, chi_path, ls_path) with
    chi (N, 16) complex.  chi is Hermitian-symmetrized each step; when its
    largest entry modulus leaves [rescale_lo, rescale_hi] it is divided by
    its Frobenius norm and log_scale incremented by log of that norm.
    """
    records = np.asarray(records, dtype=np.float64)
    n, s = records.shape
    a_t = np.ascontiguousarray(a_mat.T)
    b_t = np.ascontiguousarray(b_mat.T)
    chi = np.zeros((n, 16), dtype=np.complex128)
    chi[:, 0] = 1.0
    log_scale = np.zeros(n)
    fail = np.full(n, -1, dtype=np.int64)
    chi_path = (
        np.empty((n, s + 1, 16), dtype=np.complex128)
        if store_path
        else np.empty((1, 1, 16), dtype=np.complex128)
    )
    ls_path = np.empty((n, s + 1)) if store_path else np.empty((1, 1))
    if store_path:
        chi_path[:, 0, :] = chi
        ls_path[:, 0] = log_scale
    for j in range(s):
        r = records[:, j]
        chi = chi + dt * (chi @ a_t + (r[:, None] * chi) @ b_t)
        c4 = chi.reshape(n, 4, 4)
        c4 = 0.5 * (c4 + np.conj(np.transpose(c4, (0, 2, 1))))
        chi = c4.reshape(n, 16)
        mags = np.abs(chi)
        m = mags.max(axis=1)
        bad = ~np.isfinite(m) & (fail < 0)
        if bad.any():
            fail[bad] = j
            chi[bad] = 0.0
            chi[bad, 0] = 1.0
            m = np.abs(chi).max(axis=1)
        resc = (m > rescale_hi) | ((m < rescale_lo) & (m > 0.0))
        if resc.any():
            fro = np.sqrt((mags[resc] ** 2).sum(axis=1))
            chi[resc] /= fro[:, None]
            log_scale[resc] += np.log(fro)
        if store_path:
            chi_path[:, j + 1, :] = chi
            ls_path[:, j + 1] = log_scale
    return chi, log_scale, fail, chi_path, ls_path
