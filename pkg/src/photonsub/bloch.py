"""Weak-probe steady-state three-level ladder model of the medium.

Gives the probe susceptibility, transmission spectra, the scattering and
conversion probabilities, and a one-parameter least-squares fit of the
ground-Rydberg dephasing rate.

Unit convention: every rate and detuning is an ordinary frequency in MHz with
the 2*pi prefactor implicit and consistent (a value of 0.5 means 2*pi*500 kHz);
times are in microseconds.  Only ratios and products of same-unit quantities
enter the formulas, so the prefactor cancels throughout.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class PhysicsParams:
    """Spectroscopic parameters of the two-photon ladder system.

    delta_e      intermediate-state detuning of both beams (MHz)
    delta_2      two-photon detuning at which the experiment runs (MHz)
    omega_c      control Rabi frequency (MHz)
    omega_p      probe Rabi frequency per sqrt(photon/us) (MHz)
    gamma_e      intermediate-state decay rate (MHz)
    gamma_deph   ground-Rydberg dephasing rate (MHz)
    tau_ryd_us   Rydberg-state lifetime (us); may be inf
    od_b         resonant two-level optical depth
    """

    delta_e: float = 100.0
    delta_2: float = 0.0
    omega_c: float = 10.0
    omega_p: float = 0.033
    gamma_e: float = 6.05
    gamma_deph: float = 0.5
    tau_ryd_us: float = 530.0
    od_b: float = 12.5

    def __post_init__(self) -> None:
        if not self.gamma_e > 0:
            raise ValueError(f"gamma_e must be > 0, got {self.gamma_e}")
        if self.omega_c < 0:
            raise ValueError(f"omega_c must be >= 0, got {self.omega_c}")
        if self.gamma_deph < 0:
            raise ValueError(f"gamma_deph must be >= 0, got {self.gamma_deph}")
        if not self.tau_ryd_us > 0:
            raise ValueError(f"tau_ryd_us must be > 0, got {self.tau_ryd_us}")
        if self.od_b < 0:
            raise ValueError(f"od_b must be >= 0, got {self.od_b}")


@dataclass(frozen=True)
class ExperimentGeometry:
    """Descriptive cloud and beam geometry; not used by the dynamics."""

    n_atoms: int = 25000
    sigma_z_um: float = 6.0
    sigma_r_um: float = 10.0
    waist_probe_um: float = 6.5
    waist_control_um: float = 14.0
    blockade_radius_um: float = 17.0
    temperature_uk: float = 8.0

    def __post_init__(self) -> None:
        for name in (
            "n_atoms",
            "sigma_z_um",
            "sigma_r_um",
            "waist_probe_um",
            "waist_control_um",
            "blockade_radius_um",
            "temperature_uk",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.blockade_radius_um <= max(self.sigma_z_um, self.sigma_r_um):
            warnings.warn(
                "blockade radius does not exceed the cloud size; "
                "the single-excitation model is invalid",
                stacklevel=2,
            )


def raman_decay_rate(omega_c: float, delta_e: float, gamma_e: float) -> float:
    """Control-induced decay of the Rydberg state: (omega_c / 2 delta_e)^2 * gamma_e."""
    if delta_e == 0:
        raise ValueError("raman decay rate diverges at zero intermediate detuning")
    return (omega_c / (2.0 * delta_e)) ** 2 * gamma_e


def collective_rabi(omega_single: float, n_atoms: int) -> float:
    """Collective coupling of n indistinguishable emitters: sqrt(n) enhancement."""
    if n_atoms < 1:
        raise ValueError(f"n_atoms must be >= 1, got {n_atoms}")
    return math.sqrt(n_atoms) * omega_single


def ground_rydberg_linewidth(phys: PhysicsParams) -> float:
    """Total ground-Rydberg coherence decay entering the dark-state resonance.

    Dephasing plus half the Raman decay plus half the Rydberg lifetime decay;
    each contribution is configurable through PhysicsParams.
    """
    raman = raman_decay_rate(phys.omega_c, phys.delta_e, phys.gamma_e)
    return phys.gamma_deph + raman / 2.0 + 1.0 / (2.0 * phys.tau_ryd_us)


def susceptibility_lorentzian(
    phys: PhysicsParams,
    probe_detuning: float | np.ndarray,
    two_photon_detuning: float | np.ndarray,
):
    """Dimensionless probe response L; Re L = 1 on bare two-level resonance.

    L = (G/2) / (G/2 - i*dp + (omega_c/2)^2 / (g_gr - i*d2)) with G the
    intermediate decay, dp the probe and d2 the two-photon detuning.  The
    singular ideal-EIT point (g_gr = 0, d2 = 0) maps to L = 0, i.e. perfect
    transparency.  Accepts scalars or arrays for either detuning.
    """
    half = phys.gamma_e / 2.0
    dp = np.asarray(probe_detuning, dtype=float)
    d2 = np.asarray(two_photon_detuning, dtype=float)
    denom = half - 1j * dp + np.zeros_like(d2) * 1j
    if phys.omega_c != 0.0:
        g_gr = ground_rydberg_linewidth(phys) - 1j * d2
        dark = g_gr == 0
        safe = np.where(dark, 1.0, g_gr)
        denom = denom + (phys.omega_c / 2.0) ** 2 / safe
        result = np.where(dark, 0.0 + 0.0j, half / denom)
    else:
        result = half / denom
    if np.ndim(probe_detuning) == 0 and np.ndim(two_photon_detuning) == 0:
        return complex(result)
    return result


def transmission(
    phys: PhysicsParams,
    probe_detuning: float | np.ndarray,
    two_photon_detuning: float | np.ndarray,
):
    """Beer-Lambert transmission exp(-od_b * Re L)."""
    chi = susceptibility_lorentzian(phys, probe_detuning, two_photon_detuning)
    return np.exp(-phys.od_b * np.real(chi))


def transmission_spectrum(
    phys: PhysicsParams,
    delta_grid: np.ndarray,
    probe_detuning: float | None = None,
) -> np.ndarray:
    """Transmission versus two-photon detuning; returns an (n, 2) array of (d2, T)."""
    grid = np.asarray(delta_grid, dtype=float)
    if grid.size == 0:
        raise ValueError("delta grid is empty")
    dp = phys.delta_e if probe_detuning is None else probe_detuning
    t_vals = transmission(phys, dp, grid)
    return np.column_stack([grid, np.atleast_1d(t_vals)])


def scattering_probability(phys: PhysicsParams, probe_detuning: float | None = None) -> float:
    """Control-off probability to scatter a probe photon at the given detuning."""
    dp = phys.delta_e if probe_detuning is None else probe_detuning
    off = replace(phys, omega_c=0.0)
    return float(1.0 - transmission(off, dp, 0.0))


def conversion_probability(phys: PhysicsParams) -> float:
    """Model estimate of the photon-to-excitation conversion at line center.

    At two-photon resonance the absorption Re L = (G/2)(G/2 + R) / |D|^2 with
    R = (omega_c/2)^2 / g_gr splits into an intermediate-state scattering share
    (G/2)^2 / |D|^2 and a dark-state (conversion) share (G/2) R / |D|^2; the
    latter is converted through Beer-Lambert.  This is a homogeneous weak-probe
    diagnostic, not a calibrated absorption probability.
    """
    if phys.omega_c == 0.0:
        return 0.0
    g_gr = ground_rydberg_linewidth(phys)
    if g_gr == 0.0:
        return 0.0
    half = phys.gamma_e / 2.0
    r = (phys.omega_c / 2.0) ** 2 / g_gr
    conversion_share = half * r / ((half + r) ** 2 + phys.delta_e**2)
    return float(1.0 - math.exp(-phys.od_b * conversion_share))


@dataclass(frozen=True)
class DephasingFit:
    gamma_deph: float
    residual: float
    iterations: int


_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def fit_dephasing(
    deltas: np.ndarray,
    transmissions: np.ndarray,
    phys: PhysicsParams,
    probe_detuning: float | None = None,
    *,
    rel_tol: float = 1e-6,
    max_iter: int = 200,
) -> DephasingFit:
    """Least-squares fit of gamma_deph to a measured transmission spectrum.

    Minimizes the summed squared transmission residual over gamma_deph > 0 by
    bracketing on a log grid followed by golden-section refinement to the
    given relative tolerance.  Deterministic for fixed data.
    """
    deltas = np.asarray(deltas, dtype=float)
    measured = np.asarray(transmissions, dtype=float)
    if deltas.size != measured.size:
        raise ValueError("deltas and transmissions differ in length")
    if deltas.size < 5:
        raise ValueError("need at least 5 spectrum points to fit the dephasing rate")
    if np.ptp(measured) < 1e-9:
        raise ValueError("flat spectrum: dephasing rate is not identifiable")
    dp = phys.delta_e if probe_detuning is None else probe_detuning

    def sse(gamma: float) -> float:
        model = transmission(replace(phys, gamma_deph=gamma), dp, deltas)
        return float(((model - measured) ** 2).sum())

    grid = np.geomspace(1e-6, 1e4, 201)
    values = [sse(g) for g in grid]
    best = int(np.argmin(values))
    if best == 0 or best == grid.size - 1:
        raise ValueError("no interior optimum: data are inconsistent with the model")
    lo, hi = grid[best - 1], grid[best + 1]
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    f_c, f_d = sse(c), sse(d)
    for iteration in range(max_iter):
        if hi - lo <= rel_tol * lo:
            break
        if f_c < f_d:
            hi, d, f_d = d, c, f_c
            c = hi - _INV_PHI * (hi - lo)
            f_c = sse(c)
        else:
            lo, c, f_c = c, d, f_d
            d = lo + _INV_PHI * (hi - lo)
            f_d = sse(d)
    else:
        raise RuntimeError("dephasing fit did not converge within the iteration bound")
    gamma = 0.5 * (lo + hi)
    return DephasingFit(gamma_deph=float(gamma), residual=sse(gamma), iterations=iteration + 1)
