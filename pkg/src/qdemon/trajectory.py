"""Measurement-record synthesis and conditioned-state filtering.

The conditioned evolution follows the stochastic master equation with a
resonant drive ``H_R = -omega_r sigma_y / 2``, dephasing at rate ``k`` in the
``sigma_z`` basis and a continuous record coupled to ``sigma_z``:

    d(rho)/dt = -i[H_R, rho] + k (sz rho sz - rho)
                + 2 eta k (sz rho + rho sz - 2 <sz> rho) r(t)

Integration works on the linear unnormalized form (the ``<sz>`` term dropped)
with explicit renormalization after each Euler step; that makes a record's
filter exactly the same linear algebra as the process-matrix pipeline in
:mod:`qdemon.process`.

Discrete record convention: at step j the sample is

    r_j = <sigma_z>_j + zeta_j / sqrt(4 eta k dt),  zeta_j ~ N(0, 1),

so that the innovation term reduces to the standard Ito form and the
efficiency-degradation identity of :func:`qdemon.experiment.degrade_record`
holds verbatim.

A note on discretization: the Euler step keeps the filter linear but does not
confine states to the Bloch ball, transient excursions of the Bloch norm
above 1 of order ``sqrt(eta k dt)`` per step occur (largest for pure initial
states).  Consumers that need probabilities clamp at the measurement
interface; see :mod:`qdemon.thermo`.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from . import _kernels, qcore

TWO_PI = 2.0 * math.pi

#: Laboratory defaults: k/2pi = 57 kHz, omega_r/2pi = 0.8 MHz, eta = 0.48.
DEFAULT_K = TWO_PI * 57e3
DEFAULT_OMEGA_R = TWO_PI * 0.8e6
DEFAULT_ETA = 0.48
DEFAULT_DT = 1e-8


class IntegrationError(RuntimeError):
    """Raised when the filter trace becomes non-positive or non-finite."""

    def __init__(self, step: int, what: str = "non-positive trace"):
        super().__init__(f"{what} at step {step}")
        self.step = step


@dataclass(frozen=True)
class SimParams:
    """Physical and numerical configuration of one simulation.

    Frequencies are angular (rad/s); ``eta`` is the detector efficiency.
    Stability constraints ``k*dt <= 0.05`` and ``omega_r*dt <= 0.1`` are
    enforced at construction.
    """

    duration: float
    k: float = DEFAULT_K
    omega_r: float = DEFAULT_OMEGA_R
    eta: float = DEFAULT_ETA
    dt: float = DEFAULT_DT
    master_seed: int = 0

    def __post_init__(self):
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")
        if not (self.duration >= 0.0 and math.isfinite(self.duration)):
            raise ValueError(f"duration must be >= 0, got {self.duration}")
        if self.k < 0.0 or not math.isfinite(self.k):
            raise ValueError(f"k must be >= 0, got {self.k}")
        if self.k * self.dt > 0.05:
            raise ValueError(f"k*dt = {self.k * self.dt:.3g} exceeds 0.05")
        if self.omega_r * self.dt > 0.1:
            raise ValueError(f"omega_r*dt = {self.omega_r * self.dt:.3g} exceeds 0.1")
        if not (0.0 < self.eta <= 1.0):
            raise ValueError(f"eta must be in (0, 1], got {self.eta}")

    @property
    def steps(self) -> int:
        return round(self.duration / self.dt)

    def times(self) -> np.ndarray:
        return np.arange(self.steps + 1) * self.dt


@dataclass
class MeasurementRecord:
    """Discretized record {r_j} plus synthesis metadata."""

    samples: np.ndarray
    dt: float
    eta_used: float
    origin: str = "synthesized"

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1:
            raise ValueError("record samples must be one-dimensional")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("record contains non-finite samples")

    def __len__(self) -> int:
        return len(self.samples)


@dataclass
class TrajectoryPath:
    """Time series of normalized conditioned states along one record."""

    times: np.ndarray
    states: np.ndarray  # (S+1, 2, 2) complex
    blochs: np.ndarray  # (S+1, 3)
    log_weights: np.ndarray = field(default=None)  # cumulative log trace

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_bloch(self) -> np.ndarray:
        return self.blochs[-1]

    @property
    def log_weight(self) -> float:
        return float(self.log_weights[-1])


def components_from_density(rho: np.ndarray) -> np.ndarray:
    """Filter components (a, b, u, v) of a Hermitian 2x2 operator."""
    rho = np.asarray(rho, dtype=complex)
    qcore.assert_hermitian(rho)
    return np.array(
        [rho[0, 0].real, rho[1, 1].real, rho[0, 1].real, rho[0, 1].imag]
    )


def density_from_components(c) -> np.ndarray:
    a, b, u, v = c
    return np.array([[a, u + 1.0j * v], [u - 1.0j * v, b]], dtype=complex)


def bloch_from_components(c: np.ndarray) -> np.ndarray:
    """(..., 4) components to (..., 3) Bloch vectors (unit trace assumed)."""
    c = np.asarray(c, dtype=float)
    return np.stack(
        [2.0 * c[..., 2], -2.0 * c[..., 3], c[..., 0] - c[..., 1]], axis=-1
    )


def _paths_from_components(times, comp_path, logw_final=None) -> TrajectoryPath:
    a = comp_path[..., 0]
    b = comp_path[..., 1]
    u = comp_path[..., 2]
    v = comp_path[..., 3]
    states = np.empty(comp_path.shape[:-1] + (2, 2), dtype=complex)
    states[..., 0, 0] = a
    states[..., 1, 1] = b
    states[..., 0, 1] = u + 1.0j * v
    states[..., 1, 0] = u - 1.0j * v
    return TrajectoryPath(
        times=times,
        states=states,
        blochs=bloch_from_components(comp_path),
        log_weights=logw_final,
    )


def _check_fail(fail: np.ndarray):
    bad = np.nonzero(fail >= 0)[0]
    if bad.size:
        raise IntegrationError(int(fail[bad[0]]))


def synthesize_batch(params: SimParams, comps0: np.ndarray, zetas: np.ndarray,
                     store_path: bool = False):
    """Vectorized record synthesis; comps0 (N, 4), zetas (N, S).

    Returns (records (N,S), finals (N,4), logws (N,)[, comp_paths (N,S+1,4)]).
    """
    if params.k <= 0.0:
        raise ValueError("record synthesis requires k > 0")
    records, final, logw, fail, path = _kernels.sme_synthesize(
        np.ascontiguousarray(comps0, dtype=np.float64),
        np.ascontiguousarray(zetas, dtype=np.float64),
        params.dt, params.k, params.omega_r, params.eta, store_path,
    )
    _check_fail(fail)
    if store_path:
        return records, final, logw, path
    return records, final, logw


def filter_batch(params: SimParams, records: np.ndarray, comps0: np.ndarray,
                 store_path: bool = False):
    """Vectorized deterministic replay of records (N, S) from comps0 (N, 4)."""
    final, logw, fail, path = _kernels.sme_filter(
        np.ascontiguousarray(comps0, dtype=np.float64),
        np.ascontiguousarray(records, dtype=np.float64),
        params.dt, params.k, params.omega_r, params.eta, store_path,
    )
    _check_fail(fail)
    if store_path:
        return final, logw, path
    return final, logw


def synthesize_record(params: SimParams, rho_i: np.ndarray,
                      shot_rng: np.random.Generator):
    """Draw one record from the conditioned dynamics of ``rho_i``.

    Returns ``(MeasurementRecord, TrajectoryPath)``.  The path is the state
    conditioned on the drawn record (the synthesis filter itself).
    """
    qcore.validate_density(rho_i, eig_floor=-1e-9)
    comps0 = components_from_density(rho_i)[None, :]
    zetas = shot_rng.standard_normal(params.steps)[None, :]
    records, _final, logw, path = synthesize_batch(
        params, comps0, zetas, store_path=True
    )
    rec = MeasurementRecord(records[0], params.dt, params.eta, "synthesized")
    cum = _cumulative_log_weights(params, records, path)
    return rec, _paths_from_components(params.times(), path[0], cum[0])


def _cumulative_log_weights(params, records, comp_paths):
    # Per-step log traces from the stored normalized path, using the same
    # arithmetic as the kernels (na + nb of the unnormalized Euler step).
    n, s = records.shape
    out = np.zeros((n, s + 1))
    a = comp_paths[:, :-1, 0]
    b = comp_paths[:, :-1, 1]
    u = comp_paths[:, :-1, 2]
    dt, k, om, eta = params.dt, params.k, params.omega_r, params.eta
    g = 4.0 * eta * k * records
    na = a + dt * (om * u + g * a)
    nb = b + dt * (-om * u - g * b)
    out[:, 1:] = np.cumsum(np.log(na + nb), axis=1)
    return out


def filter_sme(record: MeasurementRecord, rho_i: np.ndarray,
               params: SimParams) -> TrajectoryPath:
    """Replay a record from ``rho_i``: the record-conditioned state estimate.

    Deterministic: identical record, initial state and params give a
    bit-identical path.  The filter efficiency is ``params.eta`` (for
    degraded records pass params carrying the effective efficiency).
    """
    if abs(record.dt - params.dt) > 1e-18:
        raise ValueError(
            f"record dt {record.dt} does not match params dt {params.dt}"
        )
    if len(record) != params.steps:
        raise ValueError(
            f"record length {len(record)} does not match params steps {params.steps}"
        )
    qcore.assert_hermitian(np.asarray(rho_i, dtype=complex))
    comps0 = components_from_density(rho_i)[None, :]
    records = record.samples[None, :]
    _final, logw, path = filter_batch(params, records, comps0, store_path=True)
    cum = _cumulative_log_weights(params, records, path)
    return _paths_from_components(params.times(), path[0], cum[0])


def lindblad_propagate(rho_i: np.ndarray, t: float, params: SimParams) -> np.ndarray:
    """Record-averaged (deterministic) evolution via a dense superoperator.

    Exact matrix exponential of the drive-plus-dephasing generator; step-size
    independent.  Serves as the oracle for ensemble means.
    """
    if t < 0.0:
        raise ValueError("t must be >= 0")
    rho_i = np.asarray(rho_i, dtype=complex)
    h_r = -0.5 * params.omega_r * qcore.SIGMA_Y
    eye = np.eye(2)
    sz = qcore.SIGMA_Z
    # column-stacking convention: vec(A rho B) = (B.T kron A) vec(rho)
    lind = (
        -1.0j * (np.kron(eye, h_r) - np.kron(h_r.T, eye))
        + params.k * (np.kron(sz.T, sz) - np.eye(4))
    )
    vec = rho_i.reshape(4, order="F")
    out = expm(lind * t) @ vec
    rho = out.reshape(2, 2, order="F")
    return 0.5 * (rho + rho.conj().T)


def path_weight(record: MeasurementRecord, rho_i: np.ndarray,
                params: SimParams) -> float:
    """Log of the record likelihood factor carried by the initial state.

    Returns ``log Tr E_r(rho_i)`` up to a record-dependent, state-independent
    additive constant (the Gaussian noise prefactor is dropped).  Differences
    between two initial states are exact log-likelihood ratios.
    """
    qcore.assert_hermitian(np.asarray(rho_i, dtype=complex))
    comps0 = components_from_density(rho_i)[None, :]
    _final, logw = filter_batch(params, record.samples[None, :], comps0)
    return float(logw[0])


def save_record(record: MeasurementRecord, params: SimParams, path_csv) -> None:
    """Write a record as CSV ``t,r`` plus a JSON sidecar next to it."""
    path_csv = Path(path_csv)
    with open(path_csv, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "r"])
        for j, r in enumerate(record.samples):
            w.writerow([repr(j * record.dt), repr(float(r))])
    sidecar = {
        "dt": record.dt,
        "k": params.k,
        "omega_R": params.omega_r,
        "eta": record.eta_used,
        "origin": record.origin,
    }
    with open(path_csv.with_suffix(path_csv.suffix + ".json"), "w") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_record(path_csv) -> tuple[MeasurementRecord, dict]:
    """Read a record CSV and its JSON sidecar; returns (record, sidecar)."""
    path_csv = Path(path_csv)
    with open(path_csv.with_suffix(path_csv.suffix + ".json")) as fh:
        meta = json.load(fh)
    samples = []
    with open(path_csv, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if header[:2] != ["t", "r"]:
            raise ValueError(f"unexpected record header {header}")
        for row in rd:
            samples.append(float(row[1]))
    rec = MeasurementRecord(
        np.array(samples), meta["dt"], meta["eta"], meta.get("origin", "external")
    )
    return rec, meta


def params_for_record(record: MeasurementRecord, meta: dict,
                      master_seed: int = 0) -> SimParams:
    """SimParams reconstructed from a loaded record and its sidecar."""
    return SimParams(
        duration=record.dt * len(record),
        k=meta["k"],
        omega_r=meta["omega_R"],
        eta=meta["eta"],
        dt=record.dt,
        master_seed=master_seed,
    )
