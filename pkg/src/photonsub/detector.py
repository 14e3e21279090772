"""Detection chain: efficiency thinning, four-way beam-splitter fan-out, ion counting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pulses import BinnedCounts

N_DETECTORS = 4


@dataclass(frozen=True)
class DetectorConfig:
    """Photon and ion detection parameters.

    ``eta_probe`` defaults to 1 because transmitted photon numbers are quoted
    efficiency-corrected.  ``split`` holds the four branch probabilities of the
    two cascaded balanced splitters.  Dead time and dark counts are off unless
    configured.
    """

    eta_probe: float = 1.0
    eta_ion: float = 0.29
    split: tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)
    dead_time_ns: float = 0.0
    dark_cps: float = 0.0

    def __post_init__(self) -> None:
        for name in ("eta_probe", "eta_ion"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if len(self.split) != N_DETECTORS:
            raise ValueError(f"split needs {N_DETECTORS} branch probabilities")
        if any(not 0.0 <= p <= 1.0 for p in self.split):
            raise ValueError(f"split probabilities must lie in [0, 1], got {self.split}")
        if abs(sum(self.split) - 1.0) > 1e-12:
            raise ValueError(f"split probabilities must sum to 1, got {sum(self.split)}")
        if self.dead_time_ns < 0 or self.dark_cps < 0:
            raise ValueError("dead_time_ns and dark_cps must be >= 0")


@dataclass
class ClickRecord:
    """Per-detector binned clicks of one shot plus the ion-counter result."""

    detectors: np.ndarray  # shape (N_DETECTORS, n_bins)
    ion_clicks: int = 0


def thin_counts(counts: BinnedCounts, eta: float, rng: np.random.Generator) -> BinnedCounts:
    """Binomial thinning: each photon survives independently with probability eta."""
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    counts = np.asarray(counts, dtype=np.int64)
    if eta == 1.0:
        return counts.copy()
    return rng.binomial(counts, eta)


def split_hbt(
    counts: BinnedCounts, cfg: DetectorConfig, rng: np.random.Generator
) -> np.ndarray:
    """Distribute each photon over the four counters multinomially.

    Returns an array of shape (N_DETECTORS, n_bins); per-bin sums over the
    detectors equal the input exactly.
    """
    counts = np.asarray(counts, dtype=np.int64)
    return rng.multinomial(counts, cfg.split).T


def detect_ions(excitations: int, eta_ion: float, rng: np.random.Generator) -> int:
    """Number of ion-counter clicks: binomial thinning of the excitation count."""
    if excitations < 0:
        raise ValueError(f"excitations must be >= 0, got {excitations}")
    if excitations == 0:
        return 0
    return int(rng.binomial(excitations, eta_ion))


def _apply_dead_time(clicks: np.ndarray, dead_bins: int) -> np.ndarray:
    # After a recorded click the detector is blind for the rest of its bin and
    # the following dead_bins - 1 bins, so each dead window yields one click.
    out = np.zeros_like(clicks)
    next_live = 0
    for i in range(clicks.size):
        if i >= next_live and clicks[i] > 0:
            out[i] = 1
            next_live = i + dead_bins
    return out


def detect_pulse(
    output_bins: BinnedCounts,
    cfg: DetectorConfig,
    rng: np.random.Generator,
    bin_width_us: float,
) -> np.ndarray:
    """Full photon-detection chain for one shot: thin, split, darks, dead time."""
    thinned = thin_counts(output_bins, cfg.eta_probe, rng)
    det = split_hbt(thinned, cfg, rng)
    if cfg.dark_cps > 0.0:
        det = det + rng.poisson(cfg.dark_cps * bin_width_us * 1e-6, size=det.shape)
    if cfg.dead_time_ns > 0.0:
        dead_bins = max(1, int(np.ceil(cfg.dead_time_ns / (bin_width_us * 1e3))))
        det = np.stack([_apply_dead_time(row, dead_bins) for row in det])
    return det
