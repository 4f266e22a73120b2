"""Probe states and the intensity-difference measurement model.

Four probe families share one energy convention: the signal mode always
carries N mean photons.

* TMC  -- two-mode coherent light, the classical benchmark (shot-noise limit).
* TMF  -- twin Fock state |N>|N>.
* TMSV -- two-mode squeezed vacuum, N = sinh^2(r).
* TMSD -- two-mode squeezed displaced state, N = G|alpha|^2 + (G - 1) with
          G = cosh^2(r); the reference mode then carries N - |alpha|^2.

The sensor acts as a beamsplitter of transmittance T on the signal mode;
independent losses eta_a, eta_b act on the two modes. The measured observable
is the photon-number difference M = n_a - n_b. All first and second moments
below are closed forms in (T, eta_a, eta_b) and the state parameters.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class ProbeKind(enum.Enum):
    TMC = "tmc"
    TMF = "tmf"
    TMSV = "tmsv"
    TMSD = "tmsd"


DEFAULT_TMSD_GAIN = 4.5  # G = cosh^2 r, practical squeezing level


@dataclass(frozen=True)
class ProbeState:
    """A probe state with N mean photons in the signal mode.

    Attributes:
        kind: probe family.
        n_mean: mean photon number N of the signal mode.
        g: squeezing gain G = cosh^2(r), TMSD only.
        squeeze_phase: squeezing phase (radians); stored for completeness, the
            photon-number moments do not depend on it.
        n_ref: reference-mode mean photon number, TMC only; defaults to
            ``n_mean`` (balanced classical benchmark).
    """

    kind: ProbeKind
    n_mean: float
    g: float = DEFAULT_TMSD_GAIN
    squeeze_phase: float = 0.0
    n_ref: float | None = None

    def __post_init__(self) -> None:
        if not self.n_mean > 0:
            raise ValueError("n_mean must be positive")
        if self.kind is ProbeKind.TMSD:
            if not self.g > 1:
                raise ValueError("TMSD gain G must exceed 1")
            if self.alpha_sq < 0:
                raise ValueError("TMSD requires n_mean >= G - 1 so that |alpha|^2 >= 0")
        if self.n_ref is not None:
            if self.kind is not ProbeKind.TMC:
                raise ValueError("n_ref applies to TMC states only")
            if not self.n_ref >= 0:
                raise ValueError("n_ref must be non-negative")

    @property
    def alpha_sq(self) -> float:
        """Coherent displacement |alpha|^2 implied by the energy convention.

        TMSD: (N - (G - 1))/G. TMC: the signal-mode photon number itself.
        """
        if self.kind is ProbeKind.TMSD:
            return (self.n_mean - (self.g - 1.0)) / self.g
        if self.kind is ProbeKind.TMC:
            return self.n_mean
        raise ValueError(f"{self.kind.value} state carries no displacement")

    @property
    def squeeze_r(self) -> float:
        """Squeezing parameter r (TMSV: sinh^2 r = N; TMSD: cosh^2 r = G)."""
        if self.kind is ProbeKind.TMSV:
            return float(np.arcsinh(np.sqrt(self.n_mean)))
        if self.kind is ProbeKind.TMSD:
            return float(np.arccosh(np.sqrt(self.g)))
        raise ValueError(f"{self.kind.value} state carries no squeezing")

    @property
    def n_signal(self) -> float:
        """Mean photon number entering the sensor (= n_mean by convention)."""
        return self.n_mean

    @property
    def n_reference(self) -> float:
        """Mean photon number in the reference mode."""
        if self.kind is ProbeKind.TMC:
            return self.n_mean if self.n_ref is None else self.n_ref
        if self.kind is ProbeKind.TMSD:
            return self.n_mean - self.alpha_sq
        return self.n_mean


class ScenarioMode(enum.Enum):
    STANDARD = "standard"
    OPTIMIZED = "optimized"
    SINGLE_MODE = "single_mode"


@dataclass(frozen=True)
class SensingScenario:
    """Loss configuration of the two-mode sensor.

    standard:    eta_b = eta_a (common loss in both arms).
    optimized:   eta_b = eta_a * t_mid, with the reference arm attenuated to the
                 sensorgram mid-point transmittance (fixed, never tracking T).
    single_mode: eta_b = 0, reference arm removed.
    """

    mode: ScenarioMode
    eta_a: float = 1.0
    t_mid: float = 0.0

    def __post_init__(self) -> None:
        if not 0 < self.eta_a <= 1:
            raise ValueError("eta_a must lie in (0, 1]")
        if self.mode is ScenarioMode.OPTIMIZED and not 0 < self.t_mid <= 1:
            raise ValueError("optimized scenario needs t_mid in (0, 1]")

    @property
    def eta_b(self) -> float:
        if self.mode is ScenarioMode.STANDARD:
            return self.eta_a
        if self.mode is ScenarioMode.OPTIMIZED:
            return self.eta_a * self.t_mid
        return 0.0


def mean_M_channels(state: ProbeState, T, eta_a: float, eta_b: float):
    """<M> = <n_a> - <n_b> for explicit channel transmissivities (eta_a, eta_b)."""
    T = np.asarray(T, dtype=float)
    out = eta_a * T * state.n_signal - eta_b * state.n_reference
    return float(out) if out.ndim == 0 else out


def delta_M_channels(state: ProbeState, T, eta_a: float, eta_b: float):
    """Single-shot uncertainty of M for explicit channel transmissivities."""
    T = np.asarray(T, dtype=float)
    ea, eb = eta_a, eta_b
    N = state.n_mean
    if state.kind is ProbeKind.TMC:
        var = ea * T * state.n_signal + eb * state.n_reference
    elif state.kind is ProbeKind.TMF:
        var = N * (ea * T * (1.0 - ea * T) + eb * (1.0 - eb))
    elif state.kind is ProbeKind.TMSV:
        var = N * ((T * ea - eb) ** 2 * N + eb + T * ea * (1.0 - 2.0 * eb))
    else:  # TMSD, from the Heisenberg-picture photon-number moments
        G, a2 = state.g, state.alpha_sq
        var_na = T**2 * ea**2 * (G - 1.0) * ((G - 1.0) + 2.0 * G * a2) + T * ea * (
            (G - 1.0) + G * a2
        )
        var_nb = (G - 1.0) ** 2 * eb**2 * (2.0 * a2 + 1.0) + (G - 1.0) * eb * (a2 + 1.0)
        corr_nanb = T * ea * eb * (
            G * (G - 1.0) * (a2**2 + 2.0 * a2)
            + G * (G - 1.0) * (a2 + 1.0)
            + (G - 1.0) ** 2 * (a2 + 1.0)
        )
        n_a = T * ea * (G * a2 + (G - 1.0))
        n_b = eb * (G - 1.0) * (a2 + 1.0)
        var = var_na + var_nb - 2.0 * (corr_nanb - n_a * n_b)
    out = np.sqrt(var)
    return float(out) if out.ndim == 0 else out


def mean_M(state: ProbeState, T, sc: SensingScenario):
    """Expected intensity difference <M> = <n_a> - <n_b> after sensor and losses."""
    return mean_M_channels(state, T, sc.eta_a, sc.eta_b)


def delta_M(state: ProbeState, T, sc: SensingScenario):
    """Single-shot uncertainty of the intensity difference for the probe state."""
    return delta_M_channels(state, T, sc.eta_a, sc.eta_b)


def tmsd_delta_M_large_alpha(state: ProbeState, T, eta_a: float, eta_b: float):
    """Leading-order TMSD uncertainty for |alpha|^2 >> 1 (bright displaced beam)."""
    if state.kind is not ProbeKind.TMSD:
        raise ValueError("asymptotic form applies to TMSD states only")
    T = np.asarray(T, dtype=float)
    ea, eb = eta_a, eta_b
    G, a2 = state.g, state.alpha_sq
    var = T * ea * G + eb * (G - 1.0) + 2.0 * (G - 1.0) * (G * (T * ea - eb) ** 2 - eb**2)
    out = np.sqrt(a2 * var)
    return float(out) if out.ndim == 0 else out


def sensitivity(state: ProbeState, sc: SensingScenario) -> float:
    """|d<M>/dT| = eta_a * N; <M> is affine in T for every probe family."""
    return sc.eta_a * state.n_signal


def delta_T(state: ProbeState, T, sc: SensingScenario, nu: int):
    """Estimation precision of the sample-mean transmittance from nu shots."""
    if not nu >= 1:
        raise ValueError("nu must be >= 1")
    out = delta_M(state, T, sc) / sensitivity(state, sc) / np.sqrt(nu)
    return out


def matched_classical_reference(state: ProbeState) -> ProbeState:
    """TMC benchmark with the per-mode mean photon numbers of ``state``.

    Balanced references are canonicalized to ``n_ref=None`` so that equal
    physical configurations compare (and hash) equal.
    """
    n_ref = None if state.n_reference == state.n_signal else state.n_reference
    return ProbeState(kind=ProbeKind.TMC, n_mean=state.n_signal, n_ref=n_ref)


def enhancement_RM(state: ProbeState, T, sc: SensingScenario):
    """Measurement-noise enhancement R_M = delta_M(classical)/delta_M(state).

    The classical reference is a TMC state with the same per-mode mean photon
    numbers. R_M > 1 means the probe beats the shot-noise limit at this T.
    """
    if state.kind is ProbeKind.TMC:
        raise ValueError("R_M compares a quantum state against the TMC benchmark")
    reference = matched_classical_reference(state)
    return delta_M(reference, T, sc) / delta_M(state, T, sc)


def noise_reduction_factor(state: ProbeState, T, sc: SensingScenario):
    """NRF = 1/R_M^2: intensity-difference variance normalized to shot noise."""
    return 1.0 / enhancement_RM(state, T, sc) ** 2


def midpoint_enhancement_map(
    kind: ProbeKind,
    sc: SensingScenario,
    T_values,
    N_values,
    g: float = DEFAULT_TMSD_GAIN,
) -> np.ndarray:
    """R_M tabulated on a (N, T) grid; rows follow N_values, columns T_values."""
    T_values = np.asarray(T_values, dtype=float)
    N_values = np.asarray(N_values, dtype=float)
    if T_values.size == 0 or N_values.size == 0:
        raise ValueError("T and N ranges must be non-empty")
    grid = np.empty((N_values.size, T_values.size))
    for i, n in enumerate(N_values):
        state = ProbeState(kind=kind, n_mean=float(n), g=g)
        grid[i] = enhancement_RM(state, T_values, sc)
    return grid
