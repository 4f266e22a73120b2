"""Monte Carlo ensemble engine for noisy sensorgram fitting.

Protocol: at every time instance the detector averages nu shots, so the
recorded measurement-space value is Gaussian, M ~ Normal(<M>(t), dM(t)/sqrt(nu))
by the central limit theorem whatever the per-shot statistics. A set consists
of m such noisy sensorgrams, each fitted independently; the set average kbar of
the fitted rate constants is one sample. Repeating over p sets gives the
estimate (mean of kbar) and the estimation precision (standard deviation of
kbar).

Randomness is counter-based: every (seed, set, sensorgram) triple owns a Philox
substream, and normals are drawn by inverse transform (ndtri of the stream's
uniforms). Results are therefore bit-identical for any execution order or
worker count, and runs that share a seed reuse the same underlying standard
normals across states/scenarios (common random numbers).
"""
from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial

import numpy as np
from scipy.special import ndtri

from .fit import DEFAULT_FIT_CONFIG, FitConfig, fit_sensorgram
from .kinetics import NegativeRateWarning, TimeGrid
from .probes import ProbeState, SensingScenario, delta_M, mean_M

UNRELIABLE_FAILURE_FRACTION = 0.2


class LowSignalError(RuntimeError):
    """An entire set produced no converged fits; the plan's SNR is too low."""


@dataclass(frozen=True)
class SimulationPlan:
    """Everything needed to reproduce one ensemble bit-for-bit.

    nu: measurements per time instance; m: sensorgrams per set; p: sets.
    tau_s and L0 parameterize the fit (switch time and ligand concentration).
    """

    nu: int
    m: int
    p: int
    seed: int
    state: ProbeState
    scenario: SensingScenario
    grid: TimeGrid
    tau_s: float
    L0: float

    def __post_init__(self) -> None:
        for name in ("nu", "m", "p"):
            if not getattr(self, name) >= 1:
                raise ValueError(f"{name} must be >= 1")
        if not -(2**63) <= self.seed < 2**63:
            raise ValueError("seed must fit in 64 bits")
        if not (self.tau_s > 0 and self.L0 > 0):
            raise ValueError("tau_s and L0 must be positive")


@dataclass(frozen=True)
class ParameterSummary:
    estimate: float
    precision: float


@dataclass(frozen=True)
class TrialEnsembleResult:
    """Distribution summary of the set-averaged rate constants over p sets."""

    k_a: ParameterSummary
    k_s: ParameterSummary
    k_d: ParameterSummary
    failed_fit_count: int
    total_fits: int
    unreliable: bool
    plan: SimulationPlan

    @property
    def failed_fraction(self) -> float:
        return self.failed_fit_count / self.total_fits

    def summary(self, parameter: str) -> ParameterSummary:
        if parameter not in ("k_a", "k_s", "k_d"):
            raise KeyError(parameter)
        return getattr(self, parameter)


def sensorgram_substream(seed: int, set_index: int, sensorgram_index: int) -> np.random.Generator:
    """Philox generator owned by one (seed, set, sensorgram) triple."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(set_index, sensorgram_index))
    return np.random.Generator(np.random.Philox(ss))


def standard_normals(rng: np.random.Generator, n: int) -> np.ndarray:
    """n standard normals by inverse transform (stable, documented algorithm)."""
    u = np.maximum(rng.random(n), 2.0**-53)  # keep ndtri off the -inf endpoint
    return ndtri(u)


def synthesize_noisy_sensorgram(
    t, transmittance, plan: SimulationPlan, rng: np.random.Generator, noise_scale: float = 1.0
) -> np.ndarray:
    """One noisy measurement-space sensorgram Mbar(t) for the plan's probe state.

    ``noise_scale`` multiplies the sample-mean noise dM/sqrt(nu); 0 recovers the
    ideal sensorgram exactly.
    """
    T = np.asarray(transmittance, dtype=float)
    if np.any(T < 0) or np.any(T > 1):
        raise ValueError("ideal transmittance must lie in [0, 1]")
    mean = mean_M(plan.state, T, plan.scenario)
    sigma = noise_scale * delta_M(plan.state, T, plan.scenario) / np.sqrt(plan.nu)
    return mean + sigma * standard_normals(rng, T.size)


def _simulate_set(
    set_index: int,
    *,
    plan: SimulationPlan,
    t: np.ndarray,
    mean: np.ndarray,
    sigma: np.ndarray,
    fit_config: FitConfig,
) -> tuple[tuple[float, float, float] | None, int]:
    """Average of fitted (k_a, k_s, k_d) over the set's converged fits."""
    values = []
    failed = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NegativeRateWarning)
        for j in range(plan.m):
            rng = sensorgram_substream(plan.seed, set_index, j)
            y = mean + sigma * standard_normals(rng, t.size)
            try:
                result = fit_sensorgram(t, y, plan.tau_s, plan.L0, fit_config)
            except (ValueError, np.linalg.LinAlgError):
                failed += 1
                continue
            if result.converged and np.isfinite((result.k_a, result.k_s, result.k_d)).all():
                values.append((result.k_a, result.k_s, result.k_d))
            else:
                failed += 1
    if not values:
        return None, failed
    return tuple(np.mean(values, axis=0)), failed


def run_ensemble(
    plan: SimulationPlan,
    t,
    transmittance,
    fit_config: FitConfig = DEFAULT_FIT_CONFIG,
    workers: int = 1,
    noise_scale: float = 1.0,
) -> TrialEnsembleResult:
    """Simulate p sets of m noisy sensorgrams and summarize the kbar distribution.

    Non-converged fits are excluded from their set's average and counted; a set
    with no converged fits at all aborts with LowSignalError. The result is
    flagged unreliable when more than 20% of all fits failed. Output is
    independent of ``workers``.
    """
    t = np.asarray(t, dtype=float)
    T = np.asarray(transmittance, dtype=float)
    if t.shape != T.shape:
        raise ValueError("t and transmittance must share one grid")
    mean = mean_M(plan.state, T, plan.scenario)
    sigma = noise_scale * delta_M(plan.state, T, plan.scenario) / np.sqrt(plan.nu)
    worker = partial(
        _simulate_set, plan=plan, t=t, mean=mean, sigma=sigma, fit_config=fit_config
    )
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(worker, range(plan.p), chunksize=max(1, plan.p // (4 * workers))))
    else:
        outcomes = [worker(i) for i in range(plan.p)]

    kbars = []
    failed_total = 0
    for set_index, (kbar, failed) in enumerate(outcomes):
        failed_total += failed
        if kbar is None:
            raise LowSignalError(
                f"set {set_index}: all {plan.m} fits failed; "
                "signal-to-noise too low for this plan (raise nu, m or N)"
            )
        kbars.append(kbar)
    kbars = np.asarray(kbars)
    estimates = kbars.mean(axis=0)
    precisions = kbars.std(axis=0, ddof=1) if plan.p > 1 else np.zeros(3)
    total = plan.m * plan.p
    return TrialEnsembleResult(
        k_a=ParameterSummary(float(estimates[0]), float(precisions[0])),
        k_s=ParameterSummary(float(estimates[1]), float(precisions[1])),
        k_d=ParameterSummary(float(estimates[2]), float(precisions[2])),
        failed_fit_count=failed_total,
        total_fits=total,
        unreliable=failed_total > UNRELIABLE_FAILURE_FRACTION * total,
        plan=plan,
    )


PARAMETER_NAMES = ("k_a", "k_s", "k_d")


def _require_matching(a: SimulationPlan, b: SimulationPlan, ignore: tuple[str, ...]) -> None:
    normalized_a = replace(a, **{f: getattr(b, f) for f in ignore})
    if normalized_a != b:
        raise ValueError(f"plans differ beyond {ignore}; enhancement ratios are not comparable")


def enhancement_Rk(classical: TrialEnsembleResult, quantum: TrialEnsembleResult) -> dict[str, float]:
    """Kinetic enhancement R_k = precision(classical)/precision(quantum) per parameter.

    The two plans must agree in everything except the probe state, and the
    states must carry the same signal-mode photon number.
    """
    _require_matching(classical.plan, quantum.plan, ignore=("state",))
    if classical.plan.state.n_mean != quantum.plan.state.n_mean:
        raise ValueError("states must carry matching signal-mode photon numbers")
    return {
        name: classical.summary(name).precision / quantum.summary(name).precision
        for name in PARAMETER_NAMES
    }


def m_enhancement(
    larger_m: TrialEnsembleResult, smaller_m: TrialEnsembleResult
) -> dict[str, float]:
    """Precision gain from a larger set size: precision(m')/precision(m) per parameter.

    Plans must be identical apart from m. By the 1/sqrt(m) law the expected
    value is sqrt(m/m') for every probe state, classical included.
    """
    _require_matching(larger_m.plan, smaller_m.plan, ignore=("m",))
    return {
        name: smaller_m.summary(name).precision / larger_m.summary(name).precision
        for name in PARAMETER_NAMES
    }
