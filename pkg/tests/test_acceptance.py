"""Exit criteria of the package, one test each.

Every test prints a PASS/FAIL line, and the lines are repeated in the
terminal summary. All runs use the reference seed, ten-period random windows
(eight for the displaced thermal run) and the default cutoff policy.
"""

import math
import time

import numpy as np
import pytest

from zeno_drive import (
    PhysicalParams,
    ProtocolConfig,
    asymptotic_success,
    conditional_spectrum,
    mean_phonon_from_temperature,
    run_protocol,
    sample_heralded_run,
)
from zeno_drive.experiments import REFERENCE_SEED, ExperimentConfig, cmd_oracle_check
from zeno_drive.protocol import periods, with_alpha

pytestmark = pytest.mark.acceptance

W = 2 * math.pi * 100e6
WINDOW = periods(10, W)
FIG4_WINDOW = periods(8, W)


def thermal_run(alpha, n, seed=REFERENCE_SEED):
    return run_protocol(PhysicalParams.from_ratios(), ProtocolConfig(alpha, n, WINDOW, seed=seed))


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start

    def __str__(self):
        return f"{self.elapsed:.2f} s"


def test_criterion_1_thermal_occupation(acceptance):
    with Timer() as t:
        n20 = mean_phonon_from_temperature(0.020, W).nbar
        n40 = mean_phonon_from_temperature(0.040, W).nbar
    ok = abs(n20 / 3.69 - 1) <= 0.01 and abs(n40 / 7.84 - 1) <= 0.01
    assert acceptance(1, "thermal occupation", ok, f"nbar(20 mK)={n20:.4f}, nbar(40 mK)={n40:.4f}, {t}")


def test_criterion_2_asymptotic_success(acceptance):
    with Timer() as t:
        nbar = mean_phonon_from_temperature(0.020, W).nbar
        p51 = asymptotic_success("thermal", nbar, 5.1)
        curve = np.array([asymptotic_success("thermal", nbar, a) for a in np.arange(0.0, 5.5 + 1e-9, 0.1)])
    monotone = bool(np.all(np.diff(curve) < 0))
    ok = 6e-4 <= p51 <= 1e-3 and monotone
    assert acceptance(2, "asymptotic success", ok, f"P(5.1)={p51:.3e}, monotone={monotone}, {t}")


def test_criterion_3_fidelity_convergence(acceptance):
    with Timer() as t:
        recs = {a: thermal_run(a, 30) for a in (1, 2, 3, 4, 5)}
    f30 = {a: r.fidelity[30] for a, r in recs.items()}
    monotone = all(np.all(np.diff(r.fidelity) >= 0) for r in recs.values())
    ok = min(f30.values()) >= 0.95 and monotone
    detail = ", ".join(f"F30(a={a})={f:.4f}" for a, f in f30.items())
    assert acceptance(3, "fidelity convergence", ok, f"{detail}, non-decreasing={monotone}, {t}")


def test_criterion_4_plateau(acceptance):
    with Timer() as t:
        p2 = thermal_run(2, 30).success_probability
        r5 = thermal_run(5, 30)
    change = abs(p2[30] - p2[20]) / p2[20]
    ratio = r5.success_probability[10] / asymptotic_success("thermal", r5.nbar, 5)
    ok = change < 0.05 and ratio < 2
    assert acceptance(4, "success plateau", ok, f"|P30-P20|/P20={change:.4f}, P10/Pinf(a=5)={ratio:.3f}, {t}")


def test_criterion_5_displaced_thermal(acceptance):
    with Timer() as t:
        params = PhysicalParams.from_ratios(temperature=0.040)
        base = ProtocolConfig(1.0, 60, FIG4_WINDOW, seed=REFERENCE_SEED, initial_kind="displaced_thermal")
        a = run_protocol(params, base)
        b = run_protocol(params, with_alpha(base, 4.0))
    plateau = a.success_probability[60] * (1 + a.nbar)
    identical = all(
        np.array_equal(getattr(a, f), getattr(b, f))
        for f in ("success_probability", "fidelity", "thermal_like", "lambda_bar")
    )
    ok = abs(plateau - 1) < 0.1 and a.fidelity[30] >= 0.99 and identical and a.thermal_like[30] < 1e-2
    detail = (
        f"P60*(1+nbar)={plateau:.6f}, F30={a.fidelity[30]:.4f}, dn30={a.thermal_like[30]:.2e}, "
        f"alpha-independent={identical}, {t}"
    )
    assert acceptance(5, "displaced thermal input", ok, detail)


def test_criterion_6_thermal_like_excess(acceptance):
    # single realization at the reference seed; the spread over seeds is wide
    with Timer() as t:
        dn = thermal_run(2, 30).thermal_like[30]
    ok = 5e-3 <= dn <= 8e-2
    assert acceptance(6, "thermal-like excess", ok, f"dn30(a=2)={dn:.4e}, window [5e-3, 8e-2], {t}")


def test_criterion_7_oracle_equivalence(acceptance):
    with Timer() as t:
        report = cmd_oracle_check(ExperimentConfig(), n_seeds=10)
    detail = "; ".join(f"{c.name.split(' (')[0]}={c.max_error:.1e}" for c in report.checks)
    assert acceptance(7, "oracle equivalence", report.passed, f"{detail}, {t}")


def test_criterion_8_invariants(acceptance):
    rng = np.random.default_rng(REFERENCE_SEED)
    worst = dict(p_up=-np.inf, f_down=-np.inf, fp=0.0, lam0=0.0, lam=-np.inf, doubling=0.0)
    with Timer() as t:
        for _ in range(100):
            params = PhysicalParams.from_ratios(
                g_ratio=rng.uniform(0.01, 0.08),
                delta_ratio=rng.uniform(1.02, 1.4),
                temperature=rng.uniform(0.005, 0.04),
            )
            alpha = complex(*rng.uniform(-2.5, 2.5, 2))
            cfg = ProtocolConfig(alpha, int(rng.integers(1, 31)), WINDOW, seed=int(rng.integers(2**63)))
            rec = run_protocol(params, cfg)
            p, f = rec.success_probability, rec.fidelity
            fp = f * p
            worst["p_up"] = max(worst["p_up"], np.max(np.diff(p)))
            worst["f_down"] = max(worst["f_down"], np.max(-np.diff(f)))
            worst["fp"] = max(worst["fp"], np.max(np.abs(fp - fp[0])))
            spec = conditional_spectrum(float(rng.uniform(0, WINDOW)), params, rec.cutoff)
            worst["lam0"] = max(worst["lam0"], abs(abs(spec.lambdas[0]) - 1))
            # |lambda_0| = 1 is covered by its own tolerance
            worst["lam"] = max(worst["lam"], np.max(np.abs(spec.lambdas[1:])) - 1)

            big = ProtocolConfig(alpha, cfg.n_measurements, WINDOW, seed=cfg.seed, dim=rec.cutoff.doubled().dim)
            rec2 = run_protocol(params, big)
            diff = max(np.max(np.abs(p - rec2.success_probability)), np.max(np.abs(f - rec2.fidelity)))
            worst["doubling"] = max(worst["doubling"], diff)
    ok = (
        worst["p_up"] <= 0
        and worst["f_down"] <= 0
        and worst["fp"] <= 1e-12
        and worst["lam0"] <= 1e-14
        and worst["lam"] <= 0
        and worst["doubling"] < 1e-9
    )
    detail = ", ".join(f"{k}={v:.1e}" for k, v in worst.items())
    assert acceptance(8, "invariants over 100 draws", ok, f"{detail}, {t}")


def test_criterion_9_heralding(acceptance):
    with Timer() as t:
        cfg = ProtocolConfig(1.0, 10, WINDOW, seed=REFERENCE_SEED)
        stats = sample_heralded_run(PhysicalParams.from_ratios(), cfg, trials=10_000)
    z = (stats.success_rate - stats.mean_exact_success) / stats.binomial_sigma
    ok = abs(z) <= 3
    detail = f"rate={stats.success_rate:.4f}, exact={stats.mean_exact_success:.4f}, z={z:+.2f}, {t}"
    assert acceptance(9, "Monte Carlo heralding", ok, detail)
