"""Brute-force reference for the measurement protocol.

Builds the qubit x resonator Hamiltonian explicitly, exponentiates it by
Hermitian eigendecomposition, and applies the projector |g><g| x 1 to the full
composite density matrix after every interval. Nothing here uses the
closed-form eigenvalues or the Laguerre displacement elements: displacements
are exponentials of the truncated generator, computed on a working space a
few dozen levels larger than the comparison space so that truncation edges do
not reach the populated levels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from zeno_drive.errors import ProtocolCannotConvergeError
from zeno_drive.fock import FockCutoff, _frozen
from zeno_drive.jc import PhysicalParams
from zeno_drive.protocol import ProtocolConfig, Schedule, TrajectoryRecord, draw_schedule

DEFAULT_PADDING = 48


@dataclass(frozen=True, eq=False)
class CompositeState:
    """(2 dim) x (2 dim) density matrix over {|g>, |e>} x Fock, qubit index major."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen(self.data))

    @property
    def dim(self) -> int:
        return self.data.shape[0] // 2

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.data)))

    @classmethod
    def ground_product(cls, rho_m: np.ndarray) -> "CompositeState":
        return cls(np.kron(np.diag([1.0, 0.0]), rho_m))

    def ground_block(self) -> np.ndarray:
        d = self.dim
        return np.array(self.data[:d, :d])


def _ladder(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)


def build_jc_hamiltonian(params: PhysicalParams, cutoff: FockCutoff) -> np.ndarray:
    """H_JC / hbar = (Delta/2) sz + w a^dag a - g (s+ a + a^dag s-), basis (g, e) x Fock."""
    dim = cutoff.dim
    a = _ladder(dim)
    sz = np.diag([-1.0, 1.0])  # |g> has energy -Delta/2
    s_plus = np.array([[0.0, 0.0], [1.0, 0.0]])  # |e><g|
    h = (
        0.5 * params.delta * np.kron(sz, np.eye(dim))
        + params.omega_m * np.kron(np.eye(2), a.T @ a)
        - params.g * (np.kron(s_plus, a) + np.kron(s_plus.T, a.T))
    )
    return h.astype(complex)


def spectral_displacement(alpha: complex, dim: int) -> np.ndarray:
    """exp(alpha a^dag - alpha^* a) of the truncated generator, via eigh of the Hermitian i*(generator)."""
    a = _ladder(dim)
    herm = 1j * (alpha * a.T - np.conj(alpha) * a)
    evals, vecs = np.linalg.eigh(herm)
    return (vecs * np.exp(-1j * evals)) @ vecs.conj().T


def build_effective_hamiltonian(params: PhysicalParams, alpha: complex, cutoff: FockCutoff) -> np.ndarray:
    d = np.kron(np.eye(2), spectral_displacement(alpha, cutoff.dim))
    return d @ build_jc_hamiltonian(params, cutoff) @ d.conj().T


def propagator(hamiltonian: np.ndarray, tau: float) -> np.ndarray:
    evals, vecs = np.linalg.eigh(hamiltonian)
    return (vecs * np.exp(-1j * evals * tau)) @ vecs.conj().T


def evolve(rho: CompositeState, tau: float, hamiltonian: np.ndarray) -> CompositeState:
    u = propagator(hamiltonian, tau)
    return CompositeState(u @ rho.data @ u.conj().T)


def project_ground(rho: CompositeState) -> tuple[CompositeState, float]:
    """Apply |g><g| x 1; returns the unnormalized projected state and its weight."""
    d = rho.dim
    out = np.zeros_like(rho.data)
    out[:d, :d] = rho.data[:d, :d]
    projected = CompositeState(out)
    return projected, projected.trace


def _thermal(nbar: float, dim: int) -> np.ndarray:
    n = np.arange(dim)
    p = (nbar / (1.0 + nbar)) ** n / (1.0 + nbar)
    return np.diag(p).astype(complex)


def brute_force_trajectory(
    params: PhysicalParams,
    config: ProtocolConfig,
    schedule: Optional[Schedule] = None,
    padding: int = DEFAULT_PADDING,
) -> TrajectoryRecord:
    """The protocol computed literally in the lab frame.

    The working space has ``padding`` more levels than the config's cutoff;
    the record reports the comparison cutoff. ``mean_phonon`` and
    ``thermal_like`` come from the full working-space state.
    """
    nbar = params.thermal().nbar
    cutoff = config.cutoff_for(nbar)
    work = FockCutoff(cutoff.dim + padding, cutoff.tail_tol)
    alpha = config.alpha.alpha
    w = work.dim

    d = spectral_displacement(alpha, w)
    rho_m = _thermal(nbar, w)
    if config.initial_kind == "displaced_thermal":
        rho_m = d @ rho_m @ d.conj().T
    target = d[:, 0]
    h = build_effective_hamiltonian(params, alpha, work)
    number = np.arange(w)

    if schedule is None:
        schedule = draw_schedule(config)
    n_steps = len(schedule)
    prob = np.empty(n_steps + 1)
    fid = np.empty(n_steps + 1)
    phon = np.empty(n_steps + 1)

    state = CompositeState.ground_product(rho_m)
    weight = state.trace
    for k in range(n_steps + 1):
        if k > 0:
            state, weight = project_ground(evolve(state, schedule.times[k - 1], h))
        if not weight > 0:
            raise ProtocolCannotConvergeError(f"success probability vanished at step {k}")
        block = state.ground_block()
        prob[k] = weight
        fid[k] = float(np.real(target.conj() @ block @ target)) / weight
        phon[k] = float(np.real(np.diag(block)) @ number) / weight

    return TrajectoryRecord(
        success_probability=prob,
        fidelity=fid,
        mean_phonon=phon,
        thermal_like=phon - abs(alpha) ** 2,
        lambda_bar=np.full(cutoff.dim, np.nan, dtype=complex),
        schedule=schedule,
        config=config,
        params=params,
        cutoff=cutoff,
        nbar=nbar,
    )
