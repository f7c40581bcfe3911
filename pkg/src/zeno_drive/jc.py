"""Jaynes-Cummings dynamics of the qubit + resonator pair.

Frequencies are angular (rad/s) and times are in seconds; Hamiltonians are
handled as ``H / hbar``. Composite matrices use the ordering
``|g,0>, ..., |g,dim-1>, |e,0>, ..., |e,dim-1>``.

With ``H_q = (Delta/2) sigma_z`` the ground state sits at ``-Delta/2``, so the
qubit-ground block of the propagator is diagonal in the phonon basis with

    lambda_0 = exp(i Delta tau / 2)
    lambda_n = exp(-i (n - 1/2) w tau) (cos W_n tau + i sin W_n tau cos 2 theta_n),  n >= 1

where ``W_n = sqrt((Delta - w)^2 / 4 + g^2 n)`` and ``cos 2 theta_n = (Delta - w) / (2 W_n)``.
The n >= 1 branch already holds at n = 1, whose sector is {|g,1>, |e,0>}.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from zeno_drive.errors import InvalidParameterError
from zeno_drive.fock import (
    AlphaLike,
    FockCutoff,
    ThermalSpec,
    _frozen,
    displacement_matrix,
    mean_phonon_from_temperature,
)

WEAK_COUPLING_LIMIT = 0.1


@dataclass(frozen=True)
class PhysicalParams:
    """Model constants. ``omega_m``, ``g`` and ``delta`` are angular frequencies.

    ``q_factor`` is carried as metadata only; the dynamics are dissipation-free.
    """

    omega_m: float
    g: float
    delta: float
    temperature: float = 0.02
    q_factor: float = 1e5

    def __post_init__(self):
        if not self.omega_m > 0:
            raise InvalidParameterError(f"omega_m must be positive, got {self.omega_m}")
        if not self.g >= 0:
            raise InvalidParameterError(f"g must be non-negative, got {self.g}")
        if not self.delta > 0:
            raise InvalidParameterError(f"delta must be positive, got {self.delta}")
        if not self.temperature > 0:
            raise InvalidParameterError(f"temperature must be positive, got {self.temperature}")
        if not self.weak_coupling:
            warnings.warn(
                f"g/omega_m = {self.g / self.omega_m:.3g} exceeds {WEAK_COUPLING_LIMIT}; "
                "the rotating-wave (Jaynes-Cummings) model may be inaccurate",
                stacklevel=2,
            )

    @classmethod
    def from_ratios(
        cls,
        omega_m: float = 2 * math.pi * 100e6,
        g_ratio: float = 0.04,
        delta_ratio: float = 1.1,
        temperature: float = 0.02,
        q_factor: float = 1e5,
    ) -> "PhysicalParams":
        return cls(omega_m, g_ratio * omega_m, delta_ratio * omega_m, temperature, q_factor)

    @property
    def detuning(self) -> float:
        return self.delta - self.omega_m

    @property
    def weak_coupling(self) -> bool:
        return self.g / self.omega_m <= WEAK_COUPLING_LIMIT

    def thermal(self) -> ThermalSpec:
        return mean_phonon_from_temperature(self.temperature, self.omega_m)


@dataclass(frozen=True, eq=False)
class ConditionalSpectrum:
    tau: float
    lambdas: np.ndarray
    cutoff: FockCutoff

    def __post_init__(self):
        object.__setattr__(self, "lambdas", _frozen(self.lambdas))

    @property
    def moduli_sq(self) -> np.ndarray:
        return np.abs(self.lambdas) ** 2


@dataclass(frozen=True, eq=False)
class CompositeUnitary:
    data: np.ndarray
    tau: float

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen(self.data))

    @property
    def dim(self) -> int:
        return self.data.shape[0] // 2

    def ground_block(self) -> np.ndarray:
        """``<g| U |g>``, an operator on the resonator alone."""
        d = self.dim
        return np.array(self.data[:d, :d])


def _rabi(n, params: PhysicalParams):
    return np.sqrt(0.25 * params.detuning**2 + params.g**2 * np.asarray(n, dtype=float))


def rabi_frequency(n: int, params: PhysicalParams) -> float:
    if n < 1:
        raise InvalidParameterError("the Rabi frequency is defined for n >= 1 excitations")
    return float(_rabi(n, params))


def mixing_angle(n: int, params: PhysicalParams) -> float:
    """theta_n with cos 2theta = (Delta - w)/(2 W_n) and sin 2theta = g sqrt(n) / W_n.

    Lies in [0, pi/4] for Delta >= w and in (pi/4, pi/2] below resonance.
    """
    if n < 1:
        raise InvalidParameterError("the mixing angle is defined for n >= 1 excitations")
    return 0.5 * math.atan2(params.g * math.sqrt(n), 0.5 * params.detuning)


def _eigenvalues(n: np.ndarray, tau: float, params: PhysicalParams) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    omega = _rabi(n, params)
    safe = np.where(omega > 0, omega, 1.0)
    # Omega = 0 only at resonance with g = 0, where the sin term vanishes anyway.
    cos2theta = np.where(omega > 0, 0.5 * params.detuning / safe, 0.0)
    lam = np.exp(-1j * (n - 0.5) * params.omega_m * tau) * (
        np.cos(omega * tau) + 1j * np.sin(omega * tau) * cos2theta
    )
    return np.where(n == 0, np.exp(0.5j * params.delta * tau), lam)


def conditional_eigenvalue(n: int, tau: float, params: PhysicalParams) -> complex:
    if n < 0:
        raise InvalidParameterError("phonon number must be non-negative")
    if tau < 0:
        raise InvalidParameterError("tau must be non-negative")
    return complex(_eigenvalues(np.array(n), tau, params))


def conditional_spectrum(tau: float, params: PhysicalParams, cutoff: FockCutoff) -> ConditionalSpectrum:
    if tau < 0:
        raise InvalidParameterError("tau must be non-negative")
    return ConditionalSpectrum(tau, _eigenvalues(np.arange(cutoff.dim), tau, params), cutoff)


def jc_unitary(tau: float, params: PhysicalParams, cutoff: FockCutoff) -> CompositeUnitary:
    """exp(-i H_JC tau) on the truncated space, one excitation sector at a time.

    Each sector {|g,n>, |e,n-1>} is diagonalized numerically. The edge state
    |e,dim-1>, whose partner |g,dim> lies outside the cutoff, only picks up its
    bare phase.
    """
    if tau < 0:
        raise InvalidParameterError("tau must be non-negative")
    dim = cutoff.dim
    w, g, delta = params.omega_m, params.g, params.delta
    u = np.zeros((2 * dim, 2 * dim), dtype=complex)
    u[0, 0] = np.exp(0.5j * delta * tau)

    n = np.arange(1, dim)
    # Diagonalize the traceless part only; the block mean (n - 1/2) w enters as
    # an overall phase, which keeps the eigenvalues O(Delta - w, g sqrt(n)).
    blocks = np.zeros((dim - 1, 2, 2))
    blocks[:, 0, 0] = -0.5 * params.detuning
    blocks[:, 1, 1] = 0.5 * params.detuning
    blocks[:, 0, 1] = blocks[:, 1, 0] = -g * np.sqrt(n)
    energies, vecs = np.linalg.eigh(blocks)
    phases = np.exp(-1j * energies * tau)
    sector = np.einsum("kij,kj,klj->kil", vecs, phases, vecs.conj())
    sector *= np.exp(-1j * (n - 0.5) * w * tau)[:, None, None]

    gi, ei = n, dim + n - 1
    u[gi, gi] = sector[:, 0, 0]
    u[gi, ei] = sector[:, 0, 1]
    u[ei, gi] = sector[:, 1, 0]
    u[ei, ei] = sector[:, 1, 1]
    u[2 * dim - 1, 2 * dim - 1] = np.exp(-1j * (0.5 * delta + (dim - 1) * w) * tau)
    return CompositeUnitary(u, tau)


def effective_unitary(
    tau: float, alpha: AlphaLike, params: PhysicalParams, cutoff: FockCutoff
) -> CompositeUnitary:
    """Propagator of the displaced model, (1 x D) U_JC (1 x D^dagger)."""
    d = displacement_matrix(alpha, cutoff)
    big = np.kron(np.eye(2), d)
    u = jc_unitary(tau, params, cutoff).data
    return CompositeUnitary(big @ u @ big.conj().T, tau)
