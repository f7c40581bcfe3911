"""Truncated bosonic Fock space: number, coherent, thermal and displaced
thermal states of the mechanical mode, and displacement-operator matrix
elements that stay finite far beyond the range where factorials overflow.

Every state is represented on the levels ``|0>, ..., |dim-1>``. Truncation is
controlled by a :class:`FockCutoff`, whose ``tail_tol`` bounds how much
probability may be lost to the discarded levels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.special import eval_genlaguerre, gammaln, logsumexp
from scipy.stats import poisson

from zeno_drive.constants import DEFAULT_TAIL_TOL, HBAR, K_B, MIN_CUTOFF_DIM
from zeno_drive.errors import CutoffTooSmallError, InvalidParameterError

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10


@dataclass(frozen=True)
class FockCutoff:
    dim: int
    tail_tol: float = DEFAULT_TAIL_TOL

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise InvalidParameterError(f"Fock dimension must be an integer >= 2, got {self.dim}")
        if not 0.0 < self.tail_tol < 1.0:
            raise InvalidParameterError(f"tail_tol must lie in (0, 1), got {self.tail_tol}")
        object.__setattr__(self, "dim", int(self.dim))

    def doubled(self) -> "FockCutoff":
        return FockCutoff(2 * self.dim, self.tail_tol)


def _frozen(arr, dtype=complex) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Complex ``dim x dim`` density matrix on a truncated Fock space."""

    data: np.ndarray
    cutoff: FockCutoff

    def __post_init__(self):
        data = _frozen(self.data)
        if data.shape != (self.cutoff.dim, self.cutoff.dim):
            raise InvalidParameterError(
                f"density matrix shape {data.shape} does not match cutoff dim {self.cutoff.dim}"
            )
        object.__setattr__(self, "data", data)

    @property
    def dim(self) -> int:
        return self.cutoff.dim

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.data)))

    @property
    def populations(self) -> np.ndarray:
        return np.real(np.diag(self.data)).copy()

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.data - self.data.conj().T)))

    def min_eigenvalue(self) -> float:
        herm = 0.5 * (self.data + self.data.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    def validate(self, psd: bool = True) -> "DensityMatrix":
        """Check Hermiticity, trace and (optionally) positivity; return self.

        A trace deficit is a truncation problem and raises
        :class:`CutoffTooSmallError`; the other violations raise
        :class:`InvalidParameterError`.
        """
        herr = self.hermiticity_error()
        if herr > HERMITIAN_TOL:
            raise InvalidParameterError(f"density matrix not Hermitian (max deviation {herr:.3e})")
        deficit = abs(1.0 - self.trace)
        if deficit >= self.cutoff.tail_tol:
            raise CutoffTooSmallError(
                f"trace deviates from 1 by {deficit:.3e} >= tail_tol {self.cutoff.tail_tol:.1e} "
                f"at dim {self.dim}"
            )
        if psd:
            lo = self.min_eigenvalue()
            if lo < -PSD_TOL:
                raise InvalidParameterError(f"density matrix not positive semidefinite (min eig {lo:.3e})")
        return self

    def expectation(self, op: np.ndarray) -> complex:
        return complex(np.trace(self.data @ op))


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray
    cutoff: FockCutoff

    def __post_init__(self):
        amps = _frozen(self.amplitudes)
        if amps.shape != (self.cutoff.dim,):
            raise InvalidParameterError(f"state vector length {amps.shape} does not match dim {self.cutoff.dim}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def projector(self) -> DensityMatrix:
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()), self.cutoff)


@dataclass(frozen=True)
class ThermalSpec:
    """Geometric phonon statistics with mean occupation ``nbar``.

    ``beta_hw`` is the ratio hbar*omega_m / (k_B T) the occupation was derived
    from; it is kept for provenance only (``inf`` at zero temperature).
    """

    nbar: float
    beta_hw: float = math.nan

    def __post_init__(self):
        if not self.nbar >= 0.0:
            raise InvalidParameterError(f"mean occupation must be >= 0, got {self.nbar}")

    @classmethod
    def from_nbar(cls, nbar: float) -> "ThermalSpec":
        beta_hw = math.inf if nbar == 0 else math.log1p(1.0 / nbar)
        return cls(float(nbar), beta_hw)

    @property
    def ratio(self) -> float:
        """Geometric ratio nbar/(1+nbar) between successive populations."""
        return self.nbar / (1.0 + self.nbar)

    def probabilities(self, dim: int) -> np.ndarray:
        # nbar^n / (1+nbar)^(n+1); dropping the trailing 1/(1+nbar) leaves an
        # unnormalized law.
        n = np.arange(dim)
        if self.nbar == 0.0:
            return (n == 0).astype(float)
        return np.exp(n * math.log(self.ratio) - math.log1p(self.nbar))

    def tail(self, dim: int) -> float:
        """Probability of occupying a level >= dim."""
        return self.ratio**dim


@dataclass(frozen=True)
class CoherentSpec:
    alpha: complex

    def __post_init__(self):
        object.__setattr__(self, "alpha", complex(self.alpha))

    @property
    def magnitude(self) -> float:
        return abs(self.alpha)

    def probabilities(self, dim: int) -> np.ndarray:
        """Poisson phonon-number distribution exp(-|a|^2) |a|^(2n) / n!."""
        return np.abs(_coherent_amplitudes(self.alpha, dim)) ** 2


AlphaLike = Union[CoherentSpec, complex, float]


def as_coherent(alpha: AlphaLike) -> CoherentSpec:
    return alpha if isinstance(alpha, CoherentSpec) else CoherentSpec(alpha)


def mean_phonon_from_temperature(T: float, omega_m: float) -> ThermalSpec:
    """Bose-Einstein occupation ``1/(exp(hbar w / k_B T) - 1)`` of a mode at ``omega_m``.

    A 2*pi*100 MHz mode gives 3.69 phonons at 20 mK and 7.84 at 40 mK. The
    ``+1`` (Fermi-Dirac) denominator would give values below 1/2 and is wrong
    for phonons.
    """
    if not T > 0 or not omega_m > 0:
        raise InvalidParameterError(f"temperature and frequency must be positive (T={T}, omega_m={omega_m})")
    beta_hw = HBAR * omega_m / (K_B * T)
    nbar = 1.0 / math.expm1(beta_hw) if beta_hw < 700 else 0.0
    return ThermalSpec(nbar, beta_hw)


def _check_tail(tail: float, cutoff: FockCutoff, what: str):
    if tail >= cutoff.tail_tol:
        raise CutoffTooSmallError(
            f"{what}: probability {tail:.3e} beyond level {cutoff.dim - 1} exceeds tail_tol {cutoff.tail_tol:.1e}"
        )


def thermal_density(spec: ThermalSpec, cutoff: FockCutoff) -> DensityMatrix:
    _check_tail(spec.tail(cutoff.dim), cutoff, f"thermal state nbar={spec.nbar:.4g}")
    return DensityMatrix(np.diag(spec.probabilities(cutoff.dim)).astype(complex), cutoff)


def _lower_displacement(alpha: complex, dim: int) -> np.ndarray:
    """Entries <i|D(alpha)|n> for i >= n, zero above the diagonal.

    Uses <i|D|n> = sqrt(n!/i!) alpha^(i-n) exp(-|alpha|^2/2) L_n^(i-n)(|alpha|^2),
    with the factorial ratio and the power of |alpha| accumulated in log space.
    """
    x = abs(alpha) ** 2
    i, n = np.tril_indices(dim)
    k = i - n
    lag = eval_genlaguerre(n, k.astype(float), x)
    log_mag = 0.5 * (gammaln(n + 1.0) - gammaln(i + 1.0)) - 0.5 * x
    with np.errstate(divide="ignore"):
        log_mag = log_mag + np.where(k > 0, k * math.log(abs(alpha)), 0.0)
    phase = np.exp(1j * k * np.angle(alpha))
    out = np.zeros((dim, dim), dtype=complex)
    out[i, n] = np.exp(log_mag) * lag * phase
    return out


def displacement_matrix(alpha: AlphaLike, cutoff: FockCutoff) -> np.ndarray:
    """Matrix elements <i|D(alpha)|n> for 0 <= i, n < dim.

    Every returned entry is the exact matrix element of the infinite-dimensional
    operator, so the truncated matrix is unitary only on the inner block where
    the tails beyond ``dim`` are negligible.
    """
    a = as_coherent(alpha).alpha
    dim = cutoff.dim
    if a == 0:
        return np.eye(dim, dtype=complex)
    lower = _lower_displacement(a, dim)
    # <i|D(a)|n> for i < n equals conj(<n|D(-a)|i>).
    upper = np.triu(_lower_displacement(-a, dim).conj().T, k=1)
    return lower + upper


def _coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    n = np.arange(dim)
    if alpha == 0:
        return (n == 0).astype(complex)
    log_mag = n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1.0) - 0.5 * abs(alpha) ** 2
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))


def coherent_state(alpha: AlphaLike, cutoff: FockCutoff) -> StateVector:
    spec = as_coherent(alpha)
    amps = _coherent_amplitudes(spec.alpha, cutoff.dim)
    deficit = float(poisson.sf(cutoff.dim - 1, spec.magnitude**2)) if spec.alpha != 0 else 0.0
    _check_tail(deficit, cutoff, f"coherent state alpha={spec.alpha:.4g}")
    return StateVector(amps, cutoff)


def displace(rho: DensityMatrix, alpha: AlphaLike) -> np.ndarray:
    """Raw congruence D(alpha) rho D(alpha)^dagger (no validation)."""
    d = displacement_matrix(alpha, rho.cutoff)
    return d @ rho.data @ d.conj().T


def displaced_thermal_density(spec: ThermalSpec, alpha: AlphaLike, cutoff: FockCutoff) -> DensityMatrix:
    rho = thermal_density(spec, cutoff)
    out = DensityMatrix(displace(rho, alpha), cutoff)
    _check_tail(abs(1.0 - out.trace), cutoff, "displaced thermal state")
    return out


def mean_phonon(rho: DensityMatrix) -> float:
    return float(np.dot(np.arange(rho.dim), rho.populations))


def number_operator(dim: int) -> np.ndarray:
    return np.diag(np.arange(dim, dtype=float)).astype(complex)


def annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def displaced_thermal_populations(nbar: float, alpha_mag: float, nmax: int) -> np.ndarray:
    """Phonon-number distribution of D(alpha) rho_thermal D(alpha)^dagger, levels 0..nmax-1.

    Closed form nbar^n/(1+nbar)^(n+1) exp(-|a|^2/(1+nbar)) L_n(-|a|^2/(nbar(1+nbar))),
    with the all-positive Laguerre series summed in log space.
    """
    n = np.arange(nmax)
    x = alpha_mag**2
    if x == 0:
        return ThermalSpec(nbar).probabilities(nmax)
    if nbar == 0:
        return poisson.pmf(n, x)
    y = x / (nbar * (1.0 + nbar))
    k = np.arange(nmax)
    nn, kk = np.meshgrid(n, k, indexing="ij")
    with np.errstate(invalid="ignore"):
        terms = gammaln(nn + 1.0) - gammaln(kk + 1.0) - gammaln(nn - kk + 1.0) + kk * math.log(y) - gammaln(kk + 1.0)
    terms = np.where(kk <= nn, terms, -np.inf)
    log_lag = logsumexp(terms, axis=1)
    return np.exp(n * math.log(nbar / (1.0 + nbar)) - math.log1p(nbar) - x / (1.0 + nbar) + log_lag)


def choose_cutoff(nbar: float, alpha_mag: float, tail_tol: float = DEFAULT_TAIL_TOL) -> FockCutoff:
    """Smallest Fock dimension that keeps the relevant tails below ``tail_tol``.

    Bounded: the geometric law at ``nbar``, a Poisson law at mean
    ``(|alpha| + sqrt(nbar))**2``, and the exact population tail of the
    displaced thermal state plus the thermal tail, which together bound the
    trace lost when a truncated thermal state is displaced. The displaced tail
    is much heavier than the Poisson estimate once ``nbar`` is a few phonons.
    The result is never below ``MIN_CUTOFF_DIM``.
    """
    if nbar < 0 or alpha_mag < 0:
        raise InvalidParameterError("nbar and alpha_mag must be non-negative")
    if not 0.0 < tail_tol < 1.0:
        raise InvalidParameterError(f"tail_tol must lie in (0, 1), got {tail_tol}")
    dim = MIN_CUTOFF_DIM
    if nbar > 0:
        q = nbar / (1.0 + nbar)
        # smallest dim with q**dim < tail_tol
        dim = max(dim, math.floor(math.log(tail_tol) / math.log(q)) + 1)
    mu = (alpha_mag + math.sqrt(nbar)) ** 2
    if mu > 0:
        while poisson.sf(dim - 1, mu) >= tail_tol:
            dim += 1
    if nbar > 0 and alpha_mag > 0:
        mean = nbar + alpha_mag**2
        sd = math.sqrt(nbar * (nbar + 1.0) + alpha_mag**2 * (2.0 * nbar + 1.0))
        nmax = max(2 * dim, int(mean + 40.0 * sd) + 64)
        pops = displaced_thermal_populations(nbar, alpha_mag, nmax)
        tails = np.cumsum(pops[::-1])[::-1]  # tails[d] = P(level >= d)
        # Displacing a truncated thermal state loses both the displaced tail and
        # the thermal levels that were never represented.
        lost = tails + (nbar / (1.0 + nbar)) ** np.arange(nmax)
        dim = max(dim, int(np.argmax(lost < tail_tol)))
    return FockCutoff(dim, tail_tol)
