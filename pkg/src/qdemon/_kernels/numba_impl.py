"""Numba kernels: per-shot inner loops, parallel over shots.

Same contracts as :mod:`qdemon._kernels.numpy_impl`; one shot never touches
another shot's data, so prange scheduling cannot change results.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True)
def sme_synthesize(state0, zetas, dt, k, om, eta, store_path):
    n, s = zetas.shape
    inv_s = 1.0 / np.sqrt(4.0 * eta * k * dt)
    records = np.empty((n, s))
    final = np.empty((n, 4))
    logw = np.zeros(n)
    fail = np.full(n, -1, dtype=np.int64)
    if store_path:
        path = np.empty((n, s + 1, 4))
    else:
        path = np.empty((1, 1, 4))
    for i in prange(n):
        a, b, u, v = state0[i, 0], state0[i, 1], state0[i, 2], state0[i, 3]
        lw = 0.0
        if store_path:
            path[i, 0, 0], path[i, 0, 1], path[i, 0, 2], path[i, 0, 3] = a, b, u, v
        for j in range(s):
            r = (a - b) + zetas[i, j] * inv_s
            records[i, j] = r
            g = 4.0 * eta * k * r
            na = a + dt * (om * u + g * a)
            nb = b + dt * (-om * u - g * b)
            nu = u + dt * (0.5 * om * (b - a) - 2.0 * k * u)
            nv = v * (1.0 - 2.0 * k * dt)
            t = na + nb
            if not t > 0.0:
                if fail[i] < 0:
                    fail[i] = j
                t = 1.0
            w = 1.0 / t
            a, b, u, v = na * w, nb * w, nu * w, nv * w
            lw += np.log(t)
            if store_path:
                path[i, j + 1, 0], path[i, j + 1, 1] = a, b
                path[i, j + 1, 2], path[i, j + 1, 3] = u, v
        final[i, 0], final[i, 1], final[i, 2], final[i, 3] = a, b, u, v
        logw[i] = lw
    return records, final, logw, fail, path


@njit(cache=True, parallel=True)
def sme_filter(state0, records, dt, k, om, eta, store_path):
    n, s = records.shape
    final = np.empty((n, 4))
    logw = np.zeros(n)
    fail = np.full(n, -1, dtype=np.int64)
    if store_path:
        path = np.empty((n, s + 1, 4))
    else:
        path = np.empty((1, 1, 4))
    for i in prange(n):
        a, b, u, v = state0[i, 0], state0[i, 1], state0[i, 2], state0[i, 3]
        lw = 0.0
        if store_path:
            path[i, 0, 0], path[i, 0, 1], path[i, 0, 2], path[i, 0, 3] = a, b, u, v
        for j in range(s):
            r = records[i, j]
            g = 4.0 * eta * k * r
            na = a + dt * (om * u + g * a)
            nb = b + dt * (-om * u - g * b)
            nu = u + dt * (0.5 * om * (b - a) - 2.0 * k * u)
            nv = v * (1.0 - 2.0 * k * dt)
            t = na + nb
            if not t > 0.0:
                if fail[i] < 0:
                    fail[i] = j
                t = 1.0
            w = 1.0 / t
            a, b, u, v = na * w, nb * w, nu * w, nv * w
            lw += np.log(t)
            if store_path:
                path[i, j + 1, 0], path[i, j + 1, 1] = a, b
                path[i, j + 1, 2], path[i, j + 1, 3] = u, v
        final[i, 0], final[i, 1], final[i, 2], final[i, 3] = a, b, u, v
        logw[i] = lw
    return final, logw, fail, path


@njit(cache=True, parallel=True)
def chi_evolve(records, dt, a_mat, b_mat, rescale_lo, rescale_hi, store_path):
    n, s = records.shape
    chi = np.zeros((n, 16), dtype=np.complex128)
    log_scale = np.zeros(n)
    fail = np.full(n, -1, dtype=np.int64)
    if store_path:
        chi_path = np.empty((n, s + 1, 16), dtype=np.complex128)
        ls_path = np.empty((n, s + 1))
    else:
        chi_path = np.empty((1, 1, 16), dtype=np.complex128)
        ls_path = np.empty((1, 1))
    for i in prange(n):
        c = np.zeros(16, dtype=np.complex128)
        c[0] = 1.0
        nc = np.empty(16, dtype=np.complex128)
        ls = 0.0
        if store_path:
            chi_path[i, 0, :] = c
            ls_path[i, 0] = ls
        for j in range(s):
            r = records[i, j]
            for d in range(16):
                acc = 0.0 + 0.0j
                for q in range(16):
                    acc += (a_mat[d, q] + r * b_mat[d, q]) * c[q]
                nc[d] = c[d] + dt * acc
            # Hermitian symmetrization of the 4x4 layout
            for jj in range(4):
                nc[5 * jj] = complex(nc[5 * jj].real, 0.0)
                for kk in range(jj + 1, 4):
                    m = 0.5 * (nc[4 * jj + kk] + np.conj(nc[4 * kk + jj]))
                    nc[4 * jj + kk] = m
                    nc[4 * kk + jj] = np.conj(m)
            mx = 0.0
            ok = True
            for d in range(16):
                md = abs(nc[d])
                if not np.isfinite(md):
                    ok = False
                    break
                if md > mx:
                    mx = md
            if not ok:
                if fail[i] < 0:
                    fail[i] = j
                for d in range(16):
                    nc[d] = 0.0
                nc[0] = 1.0
                mx = 1.0
            if mx > rescale_hi or (0.0 < mx < rescale_lo):
                fro2 = 0.0
                for d in range(16):
                    fro2 += nc[d].real ** 2 + nc[d].imag ** 2
                fro = np.sqrt(fro2)
                w = 1.0 / fro
                for d in range(16):
                    nc[d] *= w
                ls += np.log(fro)
            for d in range(16):
                c[d] = nc[d]
            if store_path:
                chi_path[i, j + 1, :] = c
                ls_path[i, j + 1] = ls
        chi[i, :] = c
        log_scale[i] = ls
    return chi, log_scale, fail, chi_path, ls_path
