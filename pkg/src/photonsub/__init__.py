"""Stochastic simulator and analysis toolkit for a saturable single-photon absorber."""

from .absorber import (
    AbsorberParams,
    CascadeResult,
    EnsembleResult,
    ShotRecord,
    cascade_shot,
    merge,
    run_ensemble,
    simulate_cascade,
    simulate_shot,
    substream,
)
from .analytic import (
    IdealIonStats,
    ideal_ion_stats,
    mean_out,
    p_no_absorption,
    subtracted_poisson_g2_total,
)
from .bloch import (
    DephasingFit,
    ExperimentGeometry,
    PhysicsParams,
    collective_rabi,
    conversion_probability,
    fit_dephasing,
    ground_rydberg_linewidth,
    raman_decay_rate,
    scattering_probability,
    susceptibility_lorentzian,
    transmission,
    transmission_spectrum,
)
from .config import RunConfig, load_config, paper_defaults
from .detector import (
    ClickRecord,
    DetectorConfig,
    detect_ions,
    detect_pulse,
    split_hbt,
    thin_counts,
)
from .experiment import default_cell_edges, run_point
from .pulses import BinnedCounts, PulseSpec, sample_input, tukey_envelope
from .stats import (
    G2Accumulator,
    G2Matrix,
    PulseShape,
    g2_matrix,
    mandel_q,
    mandel_q_sem,
    photon_deficit,
    pulse_shape,
    q_over_mean,
    q_over_mean_sem,
    sem,
)

__version__ = "0.1.0"
