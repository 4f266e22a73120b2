"""Brute-force verification of the measurement moments in a truncated Fock basis.

Independent of the closed forms in :mod:`qspr.probes`: states are built as
explicit amplitude arrays, the sensor and losses are applied as exact binomial
thinning of the joint photon-number distribution (valid because the measured
observable is photon-number diagonal), and moments come from direct summation.
The TMSD state is deliberately constructed by exponentiating the two-mode
squeezing generator numerically rather than reusing any Heisenberg-picture
algebra, so the two routes share no derivation.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.linalg import expm_multiply
from scipy.special import gammaln
from scipy.stats import binom

from .probes import ProbeKind, ProbeState, delta_M_channels, mean_M_channels


class TruncationError(RuntimeError):
    """Fock-space cutoff too small for the requested state."""


@dataclass(frozen=True)
class TruncatedTwoModeState:
    """Pure two-mode state as a dense amplitude array indexed (n_a, n_b)."""

    cutoff: int
    amplitudes: np.ndarray
    tail_mass: float


@dataclass(frozen=True)
class JointPhotonDistribution:
    """Joint photon-number probabilities indexed (n_a, n_b)."""

    probabilities: np.ndarray
    tail_mass: float


def _coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    n = np.arange(cutoff + 1)
    if alpha == 0:
        amps = np.zeros(cutoff + 1, dtype=complex)
        amps[0] = 1.0
        return amps
    mag = np.abs(alpha)
    log_mag = -0.5 * mag**2 + n * np.log(mag) - 0.5 * gammaln(n + 1.0)
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))


def _squeeze_generator(cutoff: int, phase: float) -> csr_matrix:
    """Sparse matrix of chi* a b - chi a^dag b^dag on the (cutoff+1)^2 basis, chi = e^{i phase}."""
    d = cutoff + 1
    chi = np.exp(1j * phase)
    rows, cols, vals = [], [], []
    sq = np.sqrt(np.arange(d + 1, dtype=float))
    for na in range(d):
        for nb in range(d):
            col = na * d + nb
            if na >= 1 and nb >= 1:  # chi* a b
                rows.append((na - 1) * d + (nb - 1))
                cols.append(col)
                vals.append(np.conj(chi) * sq[na] * sq[nb])
            if na + 1 < d and nb + 1 < d:  # -chi a^dag b^dag
                rows.append((na + 1) * d + (nb + 1))
                cols.append(col)
                vals.append(-chi * sq[na + 1] * sq[nb + 1])
    return csr_matrix((vals, (rows, cols)), shape=(d * d, d * d))


def _tmsd_amplitudes(alpha: complex, r: float, phase: float, cutoff: int) -> np.ndarray:
    d = cutoff + 1
    v0 = np.zeros((d, d), dtype=complex)
    v0[:, 0] = _coherent_amplitudes(alpha, cutoff)
    out = expm_multiply(r * _squeeze_generator(cutoff, phase), v0.ravel())
    return out.reshape(d, d)


def build_state(state: ProbeState, cutoff: int, *, tail_tol: float = 1e-10) -> TruncatedTwoModeState:
    """Explicit truncated amplitudes of a probe state.

    Raises TruncationError if the probability mass outside the cutoff exceeds
    ``tail_tol`` (for TMSD, also if the generator exponentiation has not
    converged against a larger cutoff).
    """
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    d = cutoff + 1
    if state.kind is ProbeKind.TMC:
        amps = np.outer(
            _coherent_amplitudes(np.sqrt(state.n_signal), cutoff),
            _coherent_amplitudes(np.sqrt(state.n_reference), cutoff),
        )
    elif state.kind is ProbeKind.TMF:
        n = int(state.n_mean)
        if n != state.n_mean:
            raise ValueError("TMF oracle state needs an integer photon number")
        if n > cutoff:
            raise TruncationError(f"cutoff {cutoff} below Fock number {n}")
        amps = np.zeros((d, d), dtype=complex)
        amps[n, n] = 1.0
    elif state.kind is ProbeKind.TMSV:
        lam = np.tanh(state.squeeze_r)
        n = np.arange(d)
        amps = np.zeros((d, d), dtype=complex)
        # S(chi)|00> has Schmidt form sqrt(1-lam^2) * (-e^{i theta} lam)^n |n,n>
        amps[n, n] = np.sqrt(1.0 - lam**2) * (-np.exp(1j * state.squeeze_phase) * lam) ** n
    else:  # TMSD by truncated generator exponentiation
        alpha = complex(np.sqrt(state.alpha_sq))
        amps = _tmsd_amplitudes(alpha, state.squeeze_r, state.squeeze_phase, cutoff)
        check = _tmsd_amplitudes(alpha, state.squeeze_r, state.squeeze_phase, cutoff + 8)
        # convergence is judged on photon-number probabilities, the only
        # quantity the moments consume
        drift = float(np.max(np.abs(np.abs(check[:d, :d]) ** 2 - np.abs(amps) ** 2)))
        if drift > max(100.0 * tail_tol, 1e-9):
            raise TruncationError(
                f"TMSD exponentiation not converged at cutoff {cutoff}: drift {drift:.2e}"
            )
    tail = float(max(1.0 - np.sum(np.abs(amps) ** 2), 0.0))
    if tail > tail_tol:
        raise TruncationError(f"truncated tail mass {tail:.2e} exceeds {tail_tol:.1e}")
    return TruncatedTwoModeState(cutoff=cutoff, amplitudes=amps, tail_mass=tail)


def _thinning_matrix(cutoff: int, transmissivity: float) -> np.ndarray:
    n = np.arange(cutoff + 1)
    return binom.pmf(n[None, :], n[:, None], transmissivity)  # [n, k]


def apply_channels(
    state: TruncatedTwoModeState, T: float, eta_a: float, eta_b: float
) -> JointPhotonDistribution:
    """Joint photon distribution after the sensor (T) and the two loss channels.

    The sensor and the signal-mode loss compose into one binomial channel of
    transmissivity eta_a*T; the reference mode is thinned by eta_b. Exact on
    the truncated basis since the observable is photon-number diagonal.
    """
    for name, val in (("T", T), ("eta_a", eta_a), ("eta_b", eta_b)):
        if not 0 <= val <= 1:
            raise ValueError(f"{name} must lie in [0, 1]")
    P = np.abs(state.amplitudes) ** 2
    Ba = _thinning_matrix(state.cutoff, eta_a * T)
    Bb = _thinning_matrix(state.cutoff, eta_b)
    return JointPhotonDistribution(probabilities=Ba.T @ P @ Bb, tail_mass=state.tail_mass)


def oracle_moments(dist: JointPhotonDistribution) -> tuple[float, float]:
    """(mean_M, delta_M) of the intensity difference by direct summation."""
    P = dist.probabilities
    n = np.arange(P.shape[0], dtype=float)
    pa, pb = P.sum(axis=1), P.sum(axis=0)
    mean_a, mean_b = pa @ n, pb @ n
    var_a = pa @ n**2 - mean_a**2
    var_b = pb @ n**2 - mean_b**2
    cov = n @ P @ n - mean_a * mean_b
    return mean_a - mean_b, float(np.sqrt(var_a + var_b - 2.0 * cov))


@dataclass(frozen=True)
class OracleReport:
    """Worst-case deviation between oracle and closed forms for one probe family."""

    kind: ProbeKind
    tuples: int
    cutoff: int
    max_dev_delta_M: float
    max_dev_mean_M: float

    @property
    def max_dev(self) -> float:
        return max(self.max_dev_delta_M, self.max_dev_mean_M)


def _random_small_state(kind: ProbeKind, rng: np.random.Generator) -> ProbeState:
    """Small-parameter state (N <= 4, r <= 0.5, |alpha|^2 <= 4) for oracle checks."""
    if kind is ProbeKind.TMC:
        return ProbeState(kind=kind, n_mean=float(rng.uniform(0.5, 4.0)))
    if kind is ProbeKind.TMF:
        return ProbeState(kind=kind, n_mean=float(rng.integers(1, 5)))
    if kind is ProbeKind.TMSV:
        r = rng.uniform(0.1, 0.5)
        return ProbeState(kind=kind, n_mean=float(np.sinh(r) ** 2))
    g = float(np.cosh(rng.uniform(0.1, 0.5)) ** 2)
    alpha_sq = float(rng.uniform(0.1, 4.0))
    return ProbeState(kind=kind, n_mean=g * alpha_sq + (g - 1.0), g=g)


def verify_closed_forms(
    kinds: tuple[ProbeKind, ...] = tuple(ProbeKind),
    tuples: int = 50,
    cutoff: int = 40,
    seed: int = 2024,
    tail_tol: float = 1e-10,
) -> list[OracleReport]:
    """Compare oracle moments against the closed forms on random channel tuples.

    Deviations are relative to the closed form; the mean is scaled by the
    measurement noise when it crosses zero.
    """
    if tuples < 1:
        raise ValueError("tuples must be >= 1")
    rng = np.random.default_rng(seed)
    reports = []
    for kind in kinds:
        worst_dm, worst_mm = 0.0, 0.0
        for _ in range(tuples):
            T, eta_a, eta_b = rng.uniform(0.05, 0.95, size=3)
            state = _random_small_state(kind, rng)
            dist = apply_channels(build_state(state, cutoff, tail_tol=tail_tol), T, eta_a, eta_b)
            mm_oracle, dm_oracle = oracle_moments(dist)
            dm_closed = delta_M_channels(state, T, eta_a, eta_b)
            mm_closed = mean_M_channels(state, T, eta_a, eta_b)
            worst_dm = max(worst_dm, abs(dm_oracle - dm_closed) / dm_closed)
            scale = max(abs(mm_closed), dm_closed)
            worst_mm = max(worst_mm, abs(mm_oracle - mm_closed) / scale)
        reports.append(
            OracleReport(
                kind=kind,
                tuples=tuples,
                cutoff=cutoff,
                max_dev_delta_M=worst_dm,
                max_dev_mean_M=worst_mm,
            )
        )
    return reports
