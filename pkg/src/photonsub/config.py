"""Run configuration: built-in parameter table, flat-key config files, overrides.

The config file format is a flat list of dotted keys, one per line::

    # probe pulse
    pulse.mean_photons = 15.76
    absorber.p_ryd = 0.35
    run.shots = 100000

Defaults reproduce the reference experiment's parameter set exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .absorber import AbsorberParams
from .bloch import ExperimentGeometry, PhysicsParams
from .detector import DetectorConfig
from .pulses import PulseSpec

MAX_SEED = 2**64 - 1


@dataclass(frozen=True)
class RunConfig:
    pulse: PulseSpec = field(default_factory=lambda: PulseSpec(mean_photons=15.76))
    absorber: AbsorberParams = field(default_factory=AbsorberParams)
    cascade: tuple[AbsorberParams, ...] | None = None
    physics: PhysicsParams = field(default_factory=PhysicsParams)
    geometry: ExperimentGeometry = field(default_factory=ExperimentGeometry)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    shots: int = 100000
    seed: int = 12345
    out_dir: str = "results"
    workers: int = 1
    g2_cell_ns: float = 100.0

    def __post_init__(self) -> None:
        if self.shots < 1:
            raise ValueError(f"run.shots must be >= 1, got {self.shots}")
        if not 0 <= self.seed <= MAX_SEED:
            raise ValueError(f"run.seed must be an unsigned 64-bit value, got {self.seed}")
        if self.workers < 1:
            raise ValueError(f"run.workers must be >= 1, got {self.workers}")
        if self.g2_cell_ns <= 0:
            raise ValueError(f"g2.cell_ns must be > 0, got {self.g2_cell_ns}")


def paper_defaults() -> RunConfig:
    """The built-in constants table of the reference experiment."""
    return RunConfig()


def parse_stages(text: str) -> tuple[AbsorberParams, ...]:
    stages = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [p.strip() for p in chunk.split(",")]
        if len(parts) != 3:
            raise ValueError(f"cascade stage needs 'p_ryd,p_ryd2,t', got {chunk!r}")
        stages.append(AbsorberParams(float(parts[0]), float(parts[1]), float(parts[2])))
    if not stages:
        raise ValueError("cascade.stages is empty")
    return tuple(stages)


def format_stages(stages: tuple[AbsorberParams, ...]) -> str:
    return "; ".join(f"{s.p_ryd:.10g},{s.p_ryd2:.10g},{s.t:.10g}" for s in stages)


def parse_flat(text: str) -> dict[str, str]:
    """Parse flat 'key = value' lines; '#' starts a comment, last key wins."""
    mapping: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        mapping[key.strip()] = value.strip()
    return mapping


def apply_keys(cfg: RunConfig, mapping: dict[str, str]) -> RunConfig:
    """Return a new config with the given flat keys applied."""
    pulse = cfg.pulse
    absorber = cfg.absorber
    cascade = cfg.cascade
    physics = cfg.physics
    geometry = cfg.geometry
    detector = cfg.detector
    run_fields = {
        "shots": cfg.shots,
        "seed": cfg.seed,
        "out_dir": cfg.out_dir,
        "workers": cfg.workers,
    }
    g2_cell_ns = cfg.g2_cell_ns
    for key, value in mapping.items():
        try:
            if key == "pulse.mean_photons":
                pulse = replace(pulse, mean_photons=float(value))
            elif key == "pulse.duration_us":
                pulse = replace(pulse, duration_us=float(value))
            elif key == "pulse.bin_ns":
                pulse = replace(pulse, bin_width_us=float(value) / 1000.0)
            elif key == "pulse.taper":
                pulse = replace(pulse, taper=float(value))
            elif key == "absorber.p_ryd":
                absorber = replace(absorber, p_ryd=float(value))
            elif key == "absorber.p_ryd2":
                absorber = replace(absorber, p_ryd2=float(value))
            elif key == "absorber.t":
                absorber = replace(absorber, t=float(value))
            elif key == "cascade.stages":
                cascade = parse_stages(value)
            elif key.startswith("physics."):
                physics = replace(physics, **{key.split(".", 1)[1]: float(value)})
            elif key.startswith("geometry."):
                name = key.split(".", 1)[1]
                cast = int if name == "n_atoms" else float
                geometry = replace(geometry, **{name: cast(value)})
            elif key == "detector.eta_probe":
                detector = replace(detector, eta_probe=float(value))
            elif key == "detector.eta_ion":
                detector = replace(detector, eta_ion=float(value))
            elif key == "detector.split":
                parts = tuple(float(p) for p in value.split(","))
                detector = replace(detector, split=parts)  # type: ignore[arg-type]
            elif key == "detector.dead_time_ns":
                detector = replace(detector, dead_time_ns=float(value))
            elif key == "detector.dark_cps":
                detector = replace(detector, dark_cps=float(value))
            elif key == "run.shots":
                run_fields["shots"] = int(value)
            elif key == "run.seed":
                run_fields["seed"] = int(value)
            elif key == "run.out_dir":
                run_fields["out_dir"] = value
            elif key == "run.workers":
                run_fields["workers"] = int(value)
            elif key == "g2.cell_ns":
                g2_cell_ns = float(value)
            else:
                raise ValueError(f"unknown config key {key!r}")
        except ValueError as err:
            raise ValueError(f"config key {key!r}: {err}") from None
        except TypeError as err:
            raise ValueError(f"config key {key!r}: {err}") from None
    return RunConfig(
        pulse=pulse,
        absorber=absorber,
        cascade=cascade,
        physics=physics,
        geometry=geometry,
        detector=detector,
        g2_cell_ns=g2_cell_ns,
        **run_fields,
    )


def load_config(path: str | Path | None, overrides: dict[str, str] | None = None) -> RunConfig:
    cfg = paper_defaults()
    if path is not None:
        cfg = apply_keys(cfg, parse_flat(Path(path).read_text()))
    if overrides:
        cfg = apply_keys(cfg, overrides)
    return cfg


def to_flat(cfg: RunConfig) -> str:
    """Full flat-key snapshot of a config, parseable by load_config."""
    lines = [
        f"pulse.mean_photons = {cfg.pulse.mean_photons:.10g}",
        f"pulse.duration_us = {cfg.pulse.duration_us:.10g}",
        f"pulse.bin_ns = {cfg.pulse.bin_width_us * 1000.0:.10g}",
        f"pulse.taper = {cfg.pulse.taper:.10g}",
        f"absorber.p_ryd = {cfg.absorber.p_ryd:.10g}",
        f"absorber.p_ryd2 = {cfg.absorber.p_ryd2:.10g}",
        f"absorber.t = {cfg.absorber.t:.10g}",
    ]
    if cfg.cascade is not None:
        lines.append(f"cascade.stages = {format_stages(cfg.cascade)}")
    for name in ("delta_e", "delta_2", "omega_c", "omega_p", "gamma_e", "gamma_deph", "tau_ryd_us", "od_b"):
        lines.append(f"physics.{name} = {getattr(cfg.physics, name):.10g}")
    for name in (
        "n_atoms",
        "sigma_z_um",
        "sigma_r_um",
        "waist_probe_um",
        "waist_control_um",
        "blockade_radius_um",
        "temperature_uk",
    ):
        lines.append(f"geometry.{name} = {getattr(cfg.geometry, name):.10g}")
    lines.extend(
        [
            f"detector.eta_probe = {cfg.detector.eta_probe:.10g}",
            f"detector.eta_ion = {cfg.detector.eta_ion:.10g}",
            "detector.split = " + ",".join(f"{p:.10g}" for p in cfg.detector.split),
            f"detector.dead_time_ns = {cfg.detector.dead_time_ns:.10g}",
            f"detector.dark_cps = {cfg.detector.dark_cps:.10g}",
            f"run.shots = {cfg.shots}",
            f"run.seed = {cfg.seed}",
            f"run.out_dir = {cfg.out_dir}",
            f"run.workers = {cfg.workers}",
            f"g2.cell_ns = {cfg.g2_cell_ns:.10g}",
        ]
    )
    return "\n".join(lines) + "\n"
