"""Figure reproductions, parameter sweeps and the oracle check behind the CLI.

Configuration is a single JSON document (see ``CONFIG_SCHEMA``). Omitted fields
take the reference values: a 2*pi x 100 MHz resonator at 20 mK, qubit splitting
1.1 w_m, coupling 0.04 w_m, random measurement times drawn uniformly from a
window of ten mechanical periods.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional, Sequence

import jsonschema
import numpy as np

from zeno_drive import __version__
from zeno_drive.errors import ConfigError
from zeno_drive.fock import FockCutoff, displacement_matrix
from zeno_drive.jc import PhysicalParams, conditional_spectrum, effective_unitary, jc_unitary
from zeno_drive.oracle import brute_force_trajectory, build_effective_hamiltonian, build_jc_hamiltonian, propagator
from zeno_drive.protocol import (
    ConditionalSpectrum,
    ProtocolConfig,
    TrajectoryRecord,
    asymptotic_success,
    run_protocol,
)

REFERENCE_SEED = 0
TWO_PI = 2.0 * math.pi
COLUMNS = ("experiment", "alpha", "step", "p_success", "fidelity", "mean_phonon", "delta_n", "seed")
SUMMARY_COLUMNS = (
    "experiment", "alpha", "step", "n_seeds",
    "p_mean", "p_std", "f_mean", "f_std", "n_mean", "n_std", "dn_mean", "dn_std",
)  # fmt: skip

_number_list = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_alpha = {
    "oneOf": [
        {"type": "number"},
        {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
    ]
}

CONFIG_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "units": {"enum": ["omega_m", "si"]},
        "mechanical_frequency_hz": {"type": "number", "exclusiveMinimum": 0},
        "g": {"type": "number", "minimum": 0},
        "delta": {"type": "number", "exclusiveMinimum": 0},
        "temperature_mk": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "q_factor": {"type": "number", "exclusiveMinimum": 0},
        "alphas": {"type": ["array", "null"], "items": _alpha, "minItems": 1},
        "n_measurements": {"type": ["integer", "null"], "minimum": 0},
        "schedule_mode": {"enum": ["random", "fixed"]},
        "tau_max": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "tau_fixed": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "cutoff": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "policy": {"enum": ["auto", "explicit"]},
                "tail_tol": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "dim": {"type": ["integer", "null"], "minimum": 2},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "alphas": {"type": "array", "items": _alpha, "minItems": 1},
                "temperatures_mk": _number_list,
                "g": _number_list,
                "delta": _number_list,
                "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
            },
        },
        "output": {"type": ["string", "null"]},
    },
}


def _parse_alpha(value) -> complex:
    if isinstance(value, (list, tuple)):
        return complex(value[0], value[1])
    return complex(value)


def _dump_alpha(value: complex):
    return value.real if value.imag == 0 else [value.real, value.imag]


@dataclass(frozen=True)
class SweepGrid:
    alphas: Optional[tuple] = None
    temperatures_mk: Optional[tuple] = None
    g: Optional[tuple] = None
    delta: Optional[tuple] = None
    seeds: Optional[tuple] = None


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description.

    With ``units="omega_m"`` (default) ``g`` and ``delta`` are fractions of w_m
    and ``tau_max``/``tau_fixed`` are in units of 1/w_m. With ``units="si"``
    ``g`` and ``delta`` are ordinary frequencies in Hz and times are in seconds.
    ``mechanical_frequency_hz`` is always f_m = w_m / 2 pi. ``None`` fields are
    filled by each command's own defaults.
    """

    units: str = "omega_m"
    mechanical_frequency_hz: float = 100e6
    g: float = 0.04
    delta: float = 1.1
    temperature_mk: Optional[float] = None
    q_factor: float = 1e5
    alphas: Optional[tuple] = None
    n_measurements: Optional[int] = None
    schedule_mode: str = "random"
    tau_max: Optional[float] = None
    tau_fixed: Optional[float] = None
    seed: int = REFERENCE_SEED
    cutoff_policy: str = "auto"
    tail_tol: float = 1e-10
    dim: Optional[int] = None
    sweep: SweepGrid = field(default_factory=SweepGrid)
    output: Optional[str] = None

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
        errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
        if errors:
            lines = [f"{'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}" for e in errors]
            raise ConfigError("invalid config:\n  " + "\n  ".join(lines))
        kw = {k: v for k, v in raw.items() if k not in ("cutoff", "sweep", "alphas")}
        if raw.get("alphas") is not None:
            kw["alphas"] = tuple(_parse_alpha(a) for a in raw["alphas"])
        cut = raw.get("cutoff", {})
        if "policy" in cut:
            kw["cutoff_policy"] = cut["policy"]
        if "tail_tol" in cut:
            kw["tail_tol"] = cut["tail_tol"]
        if cut.get("dim") is not None:
            kw["dim"] = cut["dim"]
        if kw.get("cutoff_policy") == "explicit" and kw.get("dim") is None:
            raise ConfigError("cutoff/dim: required when cutoff/policy is 'explicit'")
        sw = raw.get("sweep", {})
        kw["sweep"] = SweepGrid(
            alphas=tuple(_parse_alpha(a) for a in sw["alphas"]) if "alphas" in sw else None,
            **{k: tuple(sw[k]) for k in ("temperatures_mk", "g", "delta", "seeds") if k in sw},
        )
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("<root>: config must be a JSON object")
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "units": self.units,
            "mechanical_frequency_hz": self.mechanical_frequency_hz,
            "g": self.g,
            "delta": self.delta,
            "temperature_mk": self.temperature_mk,
            "q_factor": self.q_factor,
            "alphas": None if self.alphas is None else [_dump_alpha(a) for a in self.alphas],
            "n_measurements": self.n_measurements,
            "schedule_mode": self.schedule_mode,
            "tau_max": self.tau_max,
            "tau_fixed": self.tau_fixed,
            "seed": self.seed,
            "cutoff": {"policy": self.cutoff_policy, "tail_tol": self.tail_tol, "dim": self.dim},
            "output": self.output,
        }
        sweep = {k: v for k, v in asdict(self.sweep).items() if v is not None}
        if "alphas" in sweep:
            sweep["alphas"] = [_dump_alpha(a) for a in self.sweep.alphas]
        out["sweep"] = {k: list(v) for k, v in sweep.items()}
        return out

    # -- conversions -------------------------------------------------------

    @property
    def omega_m(self) -> float:
        return TWO_PI * self.mechanical_frequency_hz

    def physical(self, temperature_mk=None, g=None, delta=None, default_temperature_mk=20.0) -> PhysicalParams:
        if temperature_mk is None:
            temperature_mk = self.temperature_mk if self.temperature_mk is not None else default_temperature_mk
        t = temperature_mk * 1e-3
        g = self.g if g is None else g
        delta = self.delta if delta is None else delta
        w = self.omega_m
        if self.units == "si":
            return PhysicalParams(w, TWO_PI * g, TWO_PI * delta, t, self.q_factor)
        return PhysicalParams(w, g * w, delta * w, t, self.q_factor)

    def seconds(self, value: float) -> float:
        return value if self.units == "si" else value / self.omega_m

    def protocol(
        self,
        alpha: complex,
        n_measurements: int,
        default_tau_max: float,
        initial_kind: str = "thermal",
        seed: Optional[int] = None,
    ) -> ProtocolConfig:
        """``default_tau_max`` is in units of 1/w_m and applies when the config sets no window."""
        if self.schedule_mode == "fixed":
            if self.tau_fixed is None:
                raise ConfigError("tau_fixed: required when schedule_mode is 'fixed'")
            tau = self.seconds(self.tau_fixed)
        else:
            tau = self.seconds(self.tau_max) if self.tau_max is not None else default_tau_max / self.omega_m
        return ProtocolConfig(
            alpha=alpha,
            n_measurements=self.n_measurements if self.n_measurements is not None else n_measurements,
            tau=tau,
            schedule_mode=self.schedule_mode,
            seed=self.seed if seed is None else seed,
            initial_kind=initial_kind,
            dim=self.dim if self.cutoff_policy == "explicit" else None,
            tail_tol=self.tail_tol,
        )


# Random-time windows, in units of 1/w_m: ten and eight mechanical periods.
FIG_TAU_MAX = 10 * TWO_PI
FIG4_TAU_MAX = 8 * TWO_PI


@dataclass
class ResultTable:
    name: str
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    columns: tuple = COLUMNS

    def add_record(self, experiment: str, record: TrajectoryRecord):
        alpha = record.config.alpha.alpha
        for k in range(record.n_steps + 1):
            self.rows.append(
                (
                    experiment,
                    alpha,
                    k,
                    float(record.success_probability[k]),
                    float(record.fidelity[k]),
                    float(record.mean_phonon[k]),
                    float(record.thermal_like[k]),
                    record.config.seed,
                )
            )

    def column(self, name: str, **where) -> np.ndarray:
        i = self.columns.index(name)
        keys = {self.columns.index(k): v for k, v in where.items()}
        return np.array([r[i] for r in self.rows if all(r[j] == v for j, v in keys.items())])

    def to_csv(self, timestamp: bool = True) -> str:
        buf = io.StringIO()
        buf.write(f"# zeno-drive {__version__}\n")
        if timestamp:
            buf.write(f"# timestamp: {datetime.now(timezone.utc).isoformat(timespec='seconds')}\n")
        for key, value in self.metadata.items():
            buf.write(f"# {key}: {json.dumps(value, sort_keys=True)}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def write(self, out_dir, timestamp: bool = True, gnuplot: bool = False) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{self.name}.csv"
        path.write_text(self.to_csv(timestamp))
        if gnuplot:
            (out / f"{self.name}.gp").write_text(gnuplot_script(self, path.name))
        return path


def _fmt(v) -> str:
    if isinstance(v, complex):
        return _fmt(v.real) if v.imag == 0 else f"{v.real!r}{v.imag:+}j"
    if isinstance(v, float):
        return repr(v)  # shortest round-trip form
    return str(v)


def gnuplot_script(table: ResultTable, csv_name: str) -> str:
    if table.columns != COLUMNS:
        ycol, label = 5, "p_mean"
    elif table.name.startswith("fig1") or table.name.startswith("fig4"):
        ycol, label = 5, "fidelity"
    else:
        ycol, label = 4, "p_success"
    xcol = 2 if table.name.startswith("fig3") else 3
    xlabel = "alpha" if xcol == 2 else "measurements N"
    log = "set logscale y\n" if label.startswith("p_") else ""
    return (
        f"# gnuplot script for {csv_name}\n"
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        f"set xlabel '{xlabel}'\nset ylabel '{label}'\n{log}"
        f"plot '{csv_name}' every ::1 using {xcol}:{ycol} with linespoints\n"
    )


def _meta(config: ExperimentConfig, command: str, **extra) -> dict:
    return {"command": command, "config": config.to_dict(), **extra}


def _alphas(config: ExperimentConfig, default) -> list:
    return list(config.alphas) if config.alphas is not None else [complex(a) for a in default]


def cmd_fig1(config: ExperimentConfig) -> ResultTable:
    """Fidelity against N for several alpha, thermal input."""
    params = config.physical()
    table = ResultTable("fig1", metadata=_meta(config, "fig1", nbar=params.thermal().nbar))
    for alpha in _alphas(config, [0, 1, 2, 3, 4, 5]):
        table.add_record("fig1", run_protocol(params, config.protocol(alpha, 30, FIG_TAU_MAX)))
    return table


def cmd_fig2(config: ExperimentConfig) -> ResultTable:
    """Success probability against N, thermal input."""
    params = config.physical()
    table = ResultTable("fig2", metadata=_meta(config, "fig2", nbar=params.thermal().nbar))
    for alpha in _alphas(config, [2, 5]):
        table.add_record("fig2", run_protocol(params, config.protocol(alpha, 30, FIG_TAU_MAX)))
    return table


def cmd_fig3(config: ExperimentConfig, n_large: int = 200) -> ResultTable:
    """Asymptotic success probability against alpha, thermal input.

    Two rows per alpha: ``fig3`` holds the protocol after ``n_large``
    measurements, ``fig3_limit`` the closed-form limit (fidelity 1, no excess).
    """
    params = config.physical()
    nbar = params.thermal().nbar
    n = config.n_measurements if config.n_measurements is not None else n_large
    table = ResultTable("fig3", metadata=_meta(config, "fig3", nbar=nbar, n_large=n))
    grid = _alphas(config, np.round(np.arange(0.0, 5.5 + 1e-9, 0.1), 10))
    for alpha in grid:
        rec = run_protocol(params, config.protocol(alpha, n, FIG_TAU_MAX))
        table.rows.append(
            (
                "fig3", alpha, n,
                float(rec.success_probability[-1]), float(rec.fidelity[-1]),
                float(rec.mean_phonon[-1]), float(rec.thermal_like[-1]), rec.config.seed,
            )
        )  # fmt: skip
        limit = asymptotic_success("thermal", nbar, alpha)
        table.rows.append(("fig3_limit", alpha, n, limit, 1.0, abs(alpha) ** 2, 0.0, rec.config.seed))
    return table


def cmd_fig4(config: ExperimentConfig) -> ResultTable:
    """Displaced thermal input at 40 mK, window of eight mechanical periods.

    The temperature default differs from the other figures; an explicit
    ``temperature_mk`` in the config still wins.
    """
    params = config.physical(default_temperature_mk=40.0)
    table = ResultTable("fig4", metadata=_meta(config, "fig4", nbar=params.thermal().nbar))
    for alpha in _alphas(config, [1, 4]):
        proto = config.protocol(alpha, 60, FIG4_TAU_MAX, initial_kind="displaced_thermal")
        table.add_record("fig4", run_protocol(params, proto))
    return table


def _sweep_point(args):
    config, temperature, g, delta, alpha, seed = args
    params = config.physical(temperature, g, delta)
    return run_protocol(params, config.protocol(alpha, 30, FIG_TAU_MAX, seed=seed))


def sweep_points(config: ExperimentConfig) -> list:
    sw = config.sweep
    temps = sw.temperatures_mk or (config.physical().temperature * 1e3,)
    gs = sw.g or (config.g,)
    deltas = sw.delta or (config.delta,)
    alphas = sw.alphas or tuple(_alphas(config, [2]))
    seeds = sw.seeds or (config.seed,)
    return [
        (config, t, g, d, a, s)
        for t, g, d, a, s in itertools.product(temps, gs, deltas, alphas, seeds)
    ]


def cmd_sweep(config: ExperimentConfig, jobs: int = 1) -> tuple[ResultTable, ResultTable]:
    """Cartesian sweep over (T, g, delta, alpha, seed), thermal input.

    Points may run in worker processes; rows always come out in grid order.
    Returns the per-run table and the per-(point, alpha, step) seed summary.
    """
    points = sweep_points(config)
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_sweep_point, points))
    else:
        records = [_sweep_point(p) for p in points]

    table = ResultTable("sweep", metadata=_meta(config, "sweep"))
    groups: dict = {}
    for (_, t, g, d, a, _), rec in zip(points, records):
        exp = f"sweep[T={t:g}mK;g={g:g};delta={d:g}]"
        table.add_record(exp, rec)
        groups.setdefault((exp, a), []).append(rec)

    summary = ResultTable("sweep_summary", metadata=_meta(config, "sweep"), columns=SUMMARY_COLUMNS)
    for (exp, a), recs in groups.items():
        stack = {
            name: np.array([getattr(r, name) for r in recs])
            for name in ("success_probability", "fidelity", "mean_phonon", "thermal_like")
        }
        for k in range(recs[0].n_steps + 1):
            row = [exp, a, k, len(recs)]
            for name in stack:
                col = stack[name][:, k]
                row += [float(col.mean()), float(col.std(ddof=1)) if len(recs) > 1 else 0.0]
            summary.rows.append(tuple(row))
    return table, summary


# -- oracle check -----------------------------------------------------------


@dataclass
class CheckResult:
    name: str
    max_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.max_error <= self.tolerance)


@dataclass
class OracleReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def max_deviation(self) -> float:
        return max(c.max_error for c in self.checks)

    def format(self) -> str:
        width = max(len(c.name) for c in self.checks)
        lines = [f"{'check'.ljust(width)}  {'max_abs_error':>13}  {'tol':>8}  result"]
        for c in self.checks:
            lines.append(
                f"{c.name.ljust(width)}  {c.max_error:13.3e}  {c.tolerance:8.1e}  {'PASS' if c.passed else 'FAIL'}"
            )
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'} (max deviation {self.max_deviation:.3e})")
        return "\n".join(lines)


def mutated_spectrum(tau: float, params: PhysicalParams, cutoff: FockCutoff) -> ConditionalSpectrum:
    """Deliberately wrong eigenvalues for detector tests: Rabi frequency of n+1 excitations."""
    n = np.arange(cutoff.dim, dtype=float)
    omega = np.sqrt(0.25 * params.detuning**2 + params.g**2 * (n + 1))
    lam = np.exp(-1j * (n - 0.5) * params.omega_m * tau) * (
        np.cos(omega * tau) + 0.5j * np.sin(omega * tau) * params.detuning / omega
    )
    lam[0] = np.exp(0.5j * params.delta * tau)
    return ConditionalSpectrum(tau, lam, cutoff)


ORACLE_TOL = 1e-8
IDENTITY_TOL = 1e-10
ORACLE_DIM = 16
ORACLE_TEMPERATURE_MK = 2.0  # about 0.1 phonons at 100 MHz, so 16 levels suffice


def cmd_oracle_check(
    config: ExperimentConfig,
    mutate: bool = False,
    n_seeds: int = 10,
    alphas: Sequence[complex] = (0.5, 0.6 + 0.4j),
) -> OracleReport:
    """Analytic engine against brute force on small instances.

    Uses the config's frequencies and schedule window at 2 mK, with a 16-level
    cutoff and N = 5.
    """
    spectrum = mutated_spectrum if mutate else conditional_spectrum
    params = config.physical(temperature_mk=ORACLE_TEMPERATURE_MK)
    cut = FockCutoff(ORACLE_DIM, config.tail_tol)
    small = replace(config, cutoff_policy="explicit", dim=ORACLE_DIM, n_measurements=5)
    checks = []

    errs = {"P": 0.0, "F": 0.0, "n": 0.0}
    for kind in ("thermal", "displaced_thermal"):
        for alpha in alphas:
            for seed in range(n_seeds):
                proto = small.protocol(alpha, 5, FIG_TAU_MAX, initial_kind=kind, seed=seed)
                fast = run_protocol(params, proto, spectrum=spectrum)
                slow = brute_force_trajectory(params, proto)
                errs["P"] = max(errs["P"], np.max(np.abs(fast.success_probability - slow.success_probability)))
                errs["F"] = max(errs["F"], np.max(np.abs(fast.fidelity - slow.fidelity)))
                errs["n"] = max(errs["n"], np.max(np.abs(fast.mean_phonon - slow.mean_phonon)))
    checks.append(CheckResult("trajectory P_g (run_protocol vs brute force)", errs["P"], ORACLE_TOL))
    checks.append(CheckResult("trajectory F_g (run_protocol vs brute force)", errs["F"], ORACLE_TOL))
    checks.append(CheckResult("trajectory <n> (run_protocol vs brute force)", errs["n"], ORACLE_TOL))

    taus = np.linspace(0.1, 1.0, 5) * small.protocol(0, 0, FIG_TAU_MAX).tau
    h_jc = build_jc_hamiltonian(params, cut)
    spec_err = unit_err = 0.0
    for tau in taus:
        exact = propagator(h_jc, tau)
        unit_err = max(unit_err, np.max(np.abs(jc_unitary(tau, params, cut).data - exact)))
        spec_err = max(spec_err, np.max(np.abs(spectrum(tau, params, cut).lambdas - np.diag(exact)[:ORACLE_DIM])))
    checks.append(CheckResult("conditional spectrum vs <g|exp(-iH tau)|g>", spec_err, ORACLE_TOL))
    checks.append(CheckResult("jc_unitary vs dense exponential", unit_err, ORACLE_TOL))

    # Disentangling identity <g|U_eff|g> = D V D^dag on a 5 x 5 (alpha, tau) grid,
    # compared on the inner 16 levels of a 64-level working space.
    work = FockCutoff(4 * ORACLE_DIM, config.tail_tol)
    ident_err = eff_err = 0.0
    for alpha in np.linspace(0.0, 2.0, 5):
        h_eff = build_effective_hamiltonian(params, alpha, work)
        d = displacement_matrix(alpha, work)
        for tau in taus:
            lhs = propagator(h_eff, tau)[: work.dim, : work.dim]
            rhs = d @ np.diag(spectrum(tau, params, work).lambdas) @ d.conj().T
            ident_err = max(ident_err, np.max(np.abs(lhs - rhs)[:ORACLE_DIM, :ORACLE_DIM]))
            eff = effective_unitary(tau, alpha, params, work).ground_block()
            eff_err = max(eff_err, np.max(np.abs(eff - lhs)[:ORACLE_DIM, :ORACLE_DIM]))
    checks.append(CheckResult("disentangling identity <g|U_eff|g> = D V D^dag", ident_err, IDENTITY_TOL))
    checks.append(CheckResult("effective_unitary vs dense exponential", eff_err, IDENTITY_TOL))
    return OracleReport(checks)


def resolve_seed(cli_seed: Optional[int], raw_config: Optional[dict]) -> int:
    """--seed, then an explicit config seed, then $ZENO_DRIVE_SEED, then the reference seed."""
    if cli_seed is not None:
        return cli_seed
    if raw_config and "seed" in raw_config:
        return raw_config["seed"]
    env = os.environ.get("ZENO_DRIVE_SEED")
    if env:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"ZENO_DRIVE_SEED: not an integer: {env!r}") from exc
    return REFERENCE_SEED
