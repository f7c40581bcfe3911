"""Repeated ground-state projections of the qubit and the heralded resonator state.

Conditioned on N successive ``|g>`` outcomes the resonator ends in

    rho(N) = D(alpha) V rho_eff V^dagger D(alpha)^dagger / P(N),   rho_eff = D(alpha)^dagger rho_m D(alpha),

with ``V = diag(lambda_bar_n)`` the product of the per-step conditional
eigenvalues. Because ``V`` is diagonal the whole trajectory follows from the
vector ``lambda_bar`` and ``rho_eff``:

    P(N) = sum_n |lambda_bar_n|^2 rho_eff[n, n],   F(N) = rho_eff[0, 0] / P(N).

The resonator is never propagated as a matrix; moments are read out from
``lambda_bar`` and ``rho_eff`` in O(dim) per step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Literal, Optional

import numpy as np

from zeno_drive.constants import DEFAULT_TAIL_TOL
from zeno_drive.errors import CutoffTooSmallError, InvalidParameterError, ProtocolCannotConvergeError
from zeno_drive.fock import (
    AlphaLike,
    CoherentSpec,
    DensityMatrix,
    FockCutoff,
    ThermalSpec,
    as_coherent,
    choose_cutoff,
    displacement_matrix,
    mean_phonon,
    thermal_density,
)
from zeno_drive.jc import ConditionalSpectrum, PhysicalParams, conditional_spectrum

ScheduleMode = Literal["random", "fixed"]
InitialKind = Literal["thermal", "displaced_thermal"]
SpectrumFn = Callable[[float, PhysicalParams, FockCutoff], ConditionalSpectrum]

# Window for the random measurement times: ten mechanical periods, 10 / f_m.
DEFAULT_TAU_MAX_PERIODS = 10.0


def periods(n_periods: float, omega_m: float) -> float:
    """Duration of ``n_periods`` mechanical periods, in seconds."""
    return n_periods * 2.0 * math.pi / omega_m


@dataclass(frozen=True)
class ProtocolConfig:
    """One protocol run.

    ``tau`` is the window ``tau_max`` for random schedules (times drawn uniformly
    on ``(0, tau_max]``) or the common interval for fixed schedules, in seconds.
    ``dim=None`` selects the cutoff automatically from ``tail_tol``.
    """

    alpha: CoherentSpec
    n_measurements: int
    tau: float
    schedule_mode: ScheduleMode = "random"
    seed: int = 0
    initial_kind: InitialKind = "thermal"
    dim: Optional[int] = None
    tail_tol: float = DEFAULT_TAIL_TOL

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_coherent(self.alpha))
        if self.n_measurements < 0:
            raise InvalidParameterError("n_measurements must be >= 0")
        if not self.tau > 0:
            raise InvalidParameterError(f"measurement interval must be positive, got {self.tau}")
        if self.schedule_mode not in ("random", "fixed"):
            raise InvalidParameterError(f"unknown schedule mode {self.schedule_mode!r}")
        if self.initial_kind not in ("thermal", "displaced_thermal"):
            raise InvalidParameterError(f"unknown initial state kind {self.initial_kind!r}")
        if not 0 <= self.seed < 2**64:
            raise InvalidParameterError("seed must be an unsigned 64-bit integer")

    def cutoff_for(self, nbar: float) -> FockCutoff:
        if self.dim is not None:
            return FockCutoff(self.dim, self.tail_tol)
        # The displaced-thermal run lives entirely in the undisplaced frame.
        mag = self.alpha.magnitude if self.initial_kind == "thermal" else 0.0
        return choose_cutoff(nbar, mag, self.tail_tol)


@dataclass(frozen=True, eq=False)
class Schedule:
    times: np.ndarray
    seed_used: int

    def __post_init__(self):
        t = np.array(self.times, dtype=float)
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    def __len__(self):
        return len(self.times)


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """Per-step observables, index k = 0..N (k = 0 is the input state)."""

    success_probability: np.ndarray
    fidelity: np.ndarray
    mean_phonon: np.ndarray
    thermal_like: np.ndarray
    lambda_bar: np.ndarray
    schedule: Schedule
    config: ProtocolConfig
    params: PhysicalParams
    cutoff: FockCutoff
    nbar: float
    rho_eff: Optional[DensityMatrix] = field(default=None, repr=False)

    @property
    def n_steps(self) -> int:
        return len(self.success_probability) - 1


@dataclass(frozen=True)
class HeraldStats:
    trials: int
    successes: int
    failure_steps: np.ndarray  # failure_steps[k] = trials that first failed at measurement k
    mean_exact_success: float  # mean over the drawn schedules of P(N)
    seed: int

    @property
    def success_rate(self) -> float:
        return self.successes / self.trials

    @property
    def binomial_sigma(self) -> float:
        p = self.mean_exact_success
        return math.sqrt(max(p * (1.0 - p), 0.0) / self.trials)


def _generator(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _draw_times(config: ProtocolConfig, rng: np.random.Generator) -> np.ndarray:
    n = config.n_measurements
    if config.schedule_mode == "fixed":
        return np.full(n, config.tau)
    # 1 - U[0,1) is uniform on (0, 1], so no zero-length interval is drawn.
    return config.tau * (1.0 - rng.random(n))


def draw_schedule(config: ProtocolConfig) -> Schedule:
    """Measurement times for one run; PCG64 seeded with ``config.seed``."""
    return Schedule(_draw_times(config, _generator(config.seed)), config.seed)


def effective_input(rho_m: DensityMatrix, alpha: AlphaLike, kind: InitialKind) -> DensityMatrix:
    """The input state seen from the displaced frame.

    ``rho_m`` is the bare thermal state. For the displaced thermal input the
    displacement that prepared it cancels the frame change, so ``rho_m`` is
    returned unchanged.
    """
    if kind == "displaced_thermal":
        return rho_m
    if kind != "thermal":
        raise InvalidParameterError(f"unknown initial state kind {kind!r}")
    d = displacement_matrix(alpha, rho_m.cutoff)
    eff = DensityMatrix(d.conj().T @ rho_m.data @ d, rho_m.cutoff)
    deficit = 1.0 - eff.trace
    if deficit >= rho_m.cutoff.tail_tol:
        raise CutoffTooSmallError(
            f"displacing by {as_coherent(alpha).alpha:.4g} loses {deficit:.3e} of the trace at dim {rho_m.dim}"
        )
    return eff


def _moments(lam_bar: np.ndarray, rho: np.ndarray, alpha: complex):
    """P, <a^dag a> and <a> of the filtered state V rho V^dagger / P (undisplaced frame)."""
    w = np.abs(lam_bar) ** 2 * np.real(np.diag(rho))
    p = float(np.sum(w))
    if not p > 0:
        return p, math.nan, complex(math.nan)
    n = np.arange(len(lam_bar))
    num = float(np.dot(n, w)) / p
    # <a> = sum_n sqrt(n) X[n, n-1]
    coh = lam_bar[1:] * np.conj(lam_bar[:-1]) * np.diag(rho, k=-1)
    a_mean = complex(np.dot(np.sqrt(n[1:]), coh)) / p
    return p, num, a_mean


def run_protocol(
    params: PhysicalParams,
    config: ProtocolConfig,
    schedule: Optional[Schedule] = None,
    spectrum: SpectrumFn = conditional_spectrum,
) -> TrajectoryRecord:
    """Exact success probability, fidelity and phonon statistics after each measurement.

    ``schedule`` overrides the one drawn from ``config``. ``spectrum`` exists so
    that the oracle check can inject a deliberately wrong eigenvalue formula.
    """
    thermal = params.thermal()
    cutoff = config.cutoff_for(thermal.nbar)
    alpha = config.alpha.alpha
    rho_eff = effective_input(thermal_density(thermal, cutoff), alpha, config.initial_kind)
    rho = rho_eff.data

    vacuum = float(np.real(rho[0, 0]))
    if not vacuum > 0:
        raise ProtocolCannotConvergeError("input state has no overlap with the target coherent state")

    if schedule is None:
        schedule = draw_schedule(config)
    n_steps = len(schedule)
    prob = np.empty(n_steps + 1)
    phonons = np.empty(n_steps + 1)
    excess = np.empty(n_steps + 1)

    lam_bar = np.ones(cutoff.dim, dtype=complex)
    for k in range(n_steps + 1):
        if k > 0:
            lam_bar = lam_bar * spectrum(schedule.times[k - 1], params, cutoff).lambdas
        p, num, a_mean = _moments(lam_bar, rho, alpha)
        if not p > 0:
            raise ProtocolCannotConvergeError(f"success probability underflowed at step {k}")
        prob[k] = p
        # <n> of D X D^dag is <a^dag a>_X + 2 Re(alpha^* <a>_X) + |alpha|^2
        excess[k] = num + 2.0 * (np.conj(alpha) * a_mean).real
        phonons[k] = excess[k] + abs(alpha) ** 2

    return TrajectoryRecord(
        success_probability=prob,
        fidelity=vacuum / prob,
        mean_phonon=phonons,
        thermal_like=excess,
        lambda_bar=lam_bar,
        schedule=schedule,
        config=config,
        params=params,
        cutoff=cutoff,
        nbar=thermal.nbar,
        rho_eff=rho_eff,
    )


def final_state(record: TrajectoryRecord, rho_eff: DensityMatrix, alpha: AlphaLike) -> DensityMatrix:
    """The heralded resonator state after the last recorded measurement.

    The state is built at a dimension large enough to hold the displaced
    result, which for the displaced thermal input can exceed the working
    dimension of the run.
    """
    lam = record.lambda_bar
    p = float(np.sum(np.abs(lam) ** 2 * rho_eff.populations))
    if not p > 0:
        raise ProtocolCannotConvergeError("zero success probability; no heralded state exists")
    inner = np.outer(lam, lam.conj()) * rho_eff.data / p

    spec = as_coherent(alpha)
    out_cut = choose_cutoff(record.nbar, spec.magnitude, rho_eff.cutoff.tail_tol)
    if out_cut.dim > rho_eff.dim:
        padded = np.zeros((out_cut.dim, out_cut.dim), dtype=complex)
        padded[: rho_eff.dim, : rho_eff.dim] = inner
        inner = padded
    else:
        out_cut = rho_eff.cutoff
    d = displacement_matrix(spec, out_cut)
    return DensityMatrix(d @ inner @ d.conj().T, out_cut)


def thermal_like_contribution(rho_final: DensityMatrix, alpha: AlphaLike) -> float:
    """Phonon excess ``<n> - |alpha|^2`` over the target coherent state.

    Not a variance: it is negative when the heralded state sits slightly inside
    the target amplitude.
    """
    return mean_phonon(rho_final) - as_coherent(alpha).magnitude ** 2


def asymptotic_success(kind: InitialKind, nbar: float, alpha: AlphaLike) -> float:
    """Limit of P(N) for N -> infinity: the vacuum weight of the effective input.

    Thermal input: <alpha|rho_th|alpha> = exp(-|alpha|^2/(1+nbar)) / (1+nbar).
    Displaced thermal input: <0|rho_th|0> = 1/(1+nbar), whatever alpha is.
    """
    if nbar < 0:
        raise InvalidParameterError("nbar must be non-negative")
    if kind == "displaced_thermal":
        return 1.0 / (1.0 + nbar)
    if kind != "thermal":
        raise InvalidParameterError(f"unknown initial state kind {kind!r}")
    x = as_coherent(alpha).magnitude ** 2
    return math.exp(-x / (1.0 + nbar)) / (1.0 + nbar)


def thermal_overlap_series(nbar: float, alpha: AlphaLike, terms: int) -> float:
    """Partial sum over i < terms of p_thermal(i) * p_coherent(i)."""
    spec = as_coherent(alpha)
    p_th = ThermalSpec(nbar).probabilities(terms)
    p_coh = spec.probabilities(terms)
    return float(np.sum(p_th * p_coh))


def sample_heralded_run(params: PhysicalParams, config: ProtocolConfig, trials: int) -> HeraldStats:
    """Monte Carlo over schedules and measurement outcomes.

    Every trial gets its own PCG64 stream spawned from ``config.seed``: it
    draws a fresh schedule and then each outcome, succeeding at step k with
    probability P(k)/P(k-1). A failed measurement ends the trial.
    """
    if trials < 1:
        raise InvalidParameterError("trials must be >= 1")
    thermal = params.thermal()
    cutoff = config.cutoff_for(thermal.nbar)
    rho_eff = effective_input(thermal_density(thermal, cutoff), config.alpha, config.initial_kind)
    pops = rho_eff.populations
    n_meas = config.n_measurements

    streams = np.random.SeedSequence(config.seed).spawn(trials)
    failures = np.zeros(n_meas + 1, dtype=np.int64)
    successes = 0
    exact = np.empty(trials)
    for t, stream in enumerate(streams):
        rng = _generator(stream)
        times = _draw_times(config, rng)
        weights = pops.copy()
        probs = np.empty(n_meas + 1)
        probs[0] = weights.sum()
        for k, tau in enumerate(times, start=1):
            weights *= conditional_spectrum(tau, params, cutoff).moduli_sq
            probs[k] = weights.sum()
        exact[t] = probs[-1] / probs[0]
        draws = rng.random(n_meas)
        failed = np.nonzero(draws >= probs[1:] / probs[:-1])[0]
        if failed.size:
            failures[failed[0] + 1] += 1
        else:
            successes += 1
    return HeraldStats(trials, successes, failures, float(exact.mean()), config.seed)


def with_alpha(config: ProtocolConfig, alpha: AlphaLike) -> ProtocolConfig:
    return replace(config, alpha=as_coherent(alpha))
