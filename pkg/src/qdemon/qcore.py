"""Exact two-level-system algebra.

Everything downstream is written against the fixed operator basis
``{K_0, K_1, K_2, K_3} = {I, sigma_x, sigma_y, sigma_z}`` and the qubit
Hamiltonian ``H = -sigma_z / 2`` (energies in units where hbar*omega = 1).
The ground state is the ``sigma_z = +1`` eigenstate with energy ``-1/2``.

States are plain 2x2 complex ndarrays, Bloch vectors plain length-3 float
arrays.  The helpers here validate and convert between the two forms and
build thermal states; the structure-constant tensor of the basis drives the
process-matrix evolution in :mod:`qdemon.process`.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

#: Ordered operator basis used everywhere: index 0..3.
PAULI = np.stack([IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z])

#: Qubit Hamiltonian, H = -sigma_z / 2.  diag(-1/2, +1/2).
HAMILTONIAN = -0.5 * SIGMA_Z

#: Eigenstate indices and energies: 0 is ground (+z), 1 is excited (-z).
GROUND, EXCITED = 0, 1
ENERGIES = np.array([-0.5, +0.5])

_HERMITIAN_ATOL = 1e-12


@lru_cache(maxsize=1)
def _structure_constants_cached() -> np.ndarray:
    c = np.zeros((4, 4, 4), dtype=complex)
    for j in range(4):
        for k in range(4):
            prod = PAULI[j] @ PAULI[k]
            for l in range(4):
                # Pauli matrices are trace-orthogonal: Tr(K_l^dag K_m) = 2 delta_lm
                c[j, k, l] = np.trace(PAULI[l].conj().T @ prod) / 2.0
    c.setflags(write=False)
    return c


def structure_constants() -> np.ndarray:
    """Structure constants ``c[j, k, l]`` with ``K_j K_k = sum_l c[j,k,l] K_l``.

    For the Pauli basis each ``(j, k)`` pair has exactly one nonzero entry,
    of unit modulus.  The returned (4, 4, 4) complex array is read-only.
    """
    return _structure_constants_cached()


@lru_cache(maxsize=1)
def product_table() -> tuple[np.ndarray, np.ndarray]:
    """Condensed form of the structure constants.

    Returns ``(index, coeff)`` where ``K_j K_k = coeff[j, k] * K_index[j, k]``.
    """
    c = structure_constants()
    idx = np.zeros((4, 4), dtype=np.int64)
    coef = np.zeros((4, 4), dtype=complex)
    for j in range(4):
        for k in range(4):
            l = int(np.argmax(np.abs(c[j, k])))
            idx[j, k] = l
            coef[j, k] = c[j, k, l]
    idx.setflags(write=False)
    coef.setflags(write=False)
    return idx, coef


def ground_population(beta: float) -> float:
    """Ground-state occupation of the thermal state, ``e^{b/2} / (2 cosh(b/2))``."""
    if not math.isfinite(beta) or beta < 0.0:
        raise ValueError(f"beta must be finite and >= 0, got {beta}")
    # equal to 1 / (1 + e^{-beta}); stable for large beta
    return 1.0 / (1.0 + math.exp(-beta))


def thermal_state(beta: float) -> np.ndarray:
    """Thermal (Gibbs) state ``diag(e^{b/2}, e^{-b/2}) / (2 cosh(b/2))``.

    ``beta`` is the dimensionless inverse temperature (beta * hbar * omega).
    Negative temperatures are rejected.
    """
    pg = ground_population(beta)
    return np.diag([pg, 1.0 - pg]).astype(complex)


def assert_hermitian(mat: np.ndarray, atol: float = _HERMITIAN_ATOL) -> None:
    dev = np.max(np.abs(mat - mat.conj().T))
    if dev > atol:
        raise ValueError(f"matrix is not Hermitian (deviation {dev:.3e} > {atol:.1e})")


def bloch_from_density(rho: np.ndarray) -> np.ndarray:
    """Bloch vector ``(x, y, z)`` with ``x = Tr(rho sigma_x)`` etc.

    The input must be Hermitian; it is not required to be normalized, the
    expectation values are divided by the trace.
    """
    rho = np.asarray(rho, dtype=complex)
    assert_hermitian(rho)
    tr = rho[0, 0].real + rho[1, 1].real
    if tr <= 0.0:
        raise ValueError(f"state has non-positive trace {tr}")
    x = 2.0 * rho[0, 1].real
    y = -2.0 * rho[0, 1].imag
    z = rho[0, 0].real - rho[1, 1].real
    return np.array([x, y, z]) / tr


def density_from_bloch(v: np.ndarray) -> np.ndarray:
    """Density matrix ``(I + x sx + y sy + z sz) / 2`` for ``|v| <= 1``."""
    v = np.asarray(v, dtype=float)
    r = float(np.linalg.norm(v))
    if r > 1.0 + 1e-9:
        raise ValueError(f"Bloch vector has norm {r} > 1")
    x, y, z = v
    return 0.5 * np.array(
        [[1.0 + z, x - 1.0j * y], [x + 1.0j * y, 1.0 - z]], dtype=complex
    )


def purity(rho: np.ndarray) -> float:
    rho = np.asarray(rho, dtype=complex)
    return float(np.trace(rho @ rho).real)


def validate_density(
    rho: np.ndarray,
    trace_atol: float = 1e-10,
    eig_floor: float = -1e-9,
    hermitian_atol: float = _HERMITIAN_ATOL,
) -> None:
    """Check the normalized-state invariants; raise ValueError on violation.

    ``eig_floor`` is the smallest tolerated eigenvalue.  Raw filter outputs at
    coarse step sizes can dip below the default, see
    :data:`qdemon.trajectory.SimParams` for the discretization discussion.
    """
    rho = np.asarray(rho, dtype=complex)
    assert_hermitian(rho, hermitian_atol)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > trace_atol:
        raise ValueError(f"trace {tr} deviates from 1 by more than {trace_atol:.1e}")
    w = np.linalg.eigvalsh(rho)
    if w[0] < eig_floor:
        raise ValueError(f"smallest eigenvalue {w[0]:.3e} below floor {eig_floor:.1e}")
