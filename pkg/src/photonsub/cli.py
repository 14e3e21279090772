"""Command-line harness: sweep, pulse, g2, spectrum, fit-gamma, cascade, validate.

Every invocation writes into a fresh subdirectory of the output directory,
containing a config snapshot, the CSV data files and a summary.json.  With a
fixed config and seed the emitted files are byte-identical across reruns.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analytic, bloch, stats
from .absorber import AbsorberParams, merge, run_ensemble, simulate_cascade, simulate_shot, substream
from .config import RunConfig, load_config, parse_stages, to_flat
from .experiment import default_cell_edges, run_point
from .pulses import sample_input

DEFAULT_SWEEP = "1,3,5.65,10,15.76,20,35"


# ---------------------------------------------------------------------------
# output plumbing

def _fmt(value) -> str:
    if isinstance(value, float):
        return "nan" if math.isnan(value) else f"{value:.10g}"
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[tuple]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def _write_summary(run_dir: Path, payload: dict) -> None:
    (run_dir / "summary.json").write_text(json.dumps(payload, indent=2) + "\n")


def _prepare_run_dir(cfg: RunConfig, command: str) -> Path:
    base = Path(cfg.out_dir)
    base.mkdir(parents=True, exist_ok=True)
    index = 1
    while (base / f"{command}-{index:03d}").exists():
        index += 1
    run_dir = base / f"{command}-{index:03d}"
    run_dir.mkdir()
    (run_dir / "config.txt").write_text(to_flat(cfg))
    return run_dir


def _parse_float_list(text: str) -> list[float]:
    values = [float(v) for v in text.split(",") if v.strip()]
    if not values:
        raise ValueError(f"expected a comma-separated number list, got {text!r}")
    return values


def _ion_columns(ion_hist) -> tuple[float, float, float, float, float, float]:
    nan = float("nan")
    try:
        mean = stats.hist_mean(ion_hist)
        mean_sem = stats.hist_mean_sem(ion_hist)
        q = stats.mandel_q(ion_hist)
        q_sem = stats.mandel_q_sem(ion_hist)
        ratio = stats.q_over_mean(ion_hist)
        ratio_sem = stats.q_over_mean_sem(ion_hist)
    except ValueError:
        return nan, nan, nan, nan, nan, nan
    return mean, mean_sem, q, q_sem, ratio, ratio_sem


# ---------------------------------------------------------------------------
# commands

def cmd_sweep(cfg: RunConfig, args, run_dir: Path) -> int:
    n_list = _parse_float_list(args.n_in)
    rows = []
    points = []
    for k, n_in in enumerate(n_list):
        pulse = replace(cfg.pulse, mean_photons=n_in)
        ens = run_point(
            pulse, cfg.absorber, cfg.detector, cfg.shots, cfg.seed,
            stream_key=(k,), workers=cfg.workers,
        )
        model = analytic.mean_out(n_in, cfg.absorber.t, cfg.absorber.p_ryd)
        if ens.shots >= 2:
            deficit, deficit_sem = stats.photon_deficit(ens, cfg.absorber.t)
        else:
            deficit = deficit_sem = float("nan")
        ion = _ion_columns(ens.ion_hist)
        rows.append((n_in, ens.mean_out, ens.sem_out, model, deficit, deficit_sem) + ion)
        points.append(
            {
                "n_in": n_in,
                "n_out_mean": ens.mean_out,
                "n_out_sem": ens.sem_out,
                "model_n_out": model,
                "deficit": deficit,
                "ion_mean": ion[0],
                "ion_q": ion[2],
                "q_over_mean": ion[4],
            }
        )
        print(f"n_in={n_in:g}: n_out={ens.mean_out:.4f} (model {model:.4f}), ion_mean={ion[0]:.4f}, ion_q={ion[2]:.4f}")
    _write_csv(
        run_dir / "sweep.csv",
        [
            "n_in", "n_out_mean", "n_out_sem", "model_n_out", "deficit", "deficit_sem",
            "ion_mean", "ion_mean_sem", "ion_q", "ion_q_sem", "q_over_mean", "q_over_mean_sem",
        ],
        rows,
    )
    _write_summary(run_dir, {"command": "sweep", "shots": cfg.shots, "seed": cfg.seed, "points": points})
    print(f"written to {run_dir}")
    return 0


def cmd_pulse(cfg: RunConfig, args, run_dir: Path) -> int:
    n_in = cfg.pulse.mean_photons if args.n_in is None else args.n_in
    pulse = replace(cfg.pulse, mean_photons=n_in)
    ideal_params = AbsorberParams(p_ryd=1.0, p_ryd2=0.0, t=cfg.absorber.t)
    ens = run_point(pulse, cfg.absorber, cfg.detector, cfg.shots, cfg.seed, workers=cfg.workers)
    ideal = run_point(pulse, ideal_params, cfg.detector, cfg.shots, cfg.seed, workers=cfg.workers)
    shape = stats.pulse_shape(ens)
    ideal_shape = stats.pulse_shape(ideal)
    rows = [
        (
            shape.bin_starts_us[i], shape.in_rate[i], shape.out_rate[i],
            shape.transmission[i], shape.transmission_sem[i],
            ideal_shape.out_rate[i], ideal_shape.transmission[i],
        )
        for i in range(shape.bin_starts_us.size)
    ]
    _write_csv(
        run_dir / "pulse_shape.csv",
        [
            "bin_start_us", "in_rate", "out_rate", "transmission", "transmission_sem",
            "ideal_out_rate", "ideal_transmission",
        ],
        rows,
    )
    p_none = float(ens.absorbed_hist[0] / ens.shots)
    summary = {
        "command": "pulse",
        "n_in": n_in,
        "shots": cfg.shots,
        "seed": cfg.seed,
        "n_out_mean": ens.mean_out,
        "model_n_out": analytic.mean_out(n_in, cfg.absorber.t, cfg.absorber.p_ryd),
        "p_no_absorption": p_none,
        "p_no_absorption_model": analytic.p_no_absorption(n_in, cfg.absorber.t, cfg.absorber.p_ryd),
        "front_third_transmission": shape.band_transmission(0.0, 1.0 / 3.0),
        "rear_third_transmission": shape.band_transmission(2.0 / 3.0, 1.0),
        "ideal_front_third_transmission": ideal_shape.band_transmission(0.0, 1.0 / 3.0),
        "ideal_rear_third_transmission": ideal_shape.band_transmission(2.0 / 3.0, 1.0),
    }
    _write_summary(run_dir, summary)
    print(
        f"n_in={n_in:g}: P(no absorption)={p_none:.4f}, "
        f"rear-third transmission={summary['rear_third_transmission']:.4f}"
    )
    print(f"written to {run_dir}")
    return 0


def cmd_g2(cfg: RunConfig, args, run_dir: Path) -> int:
    n_in = cfg.pulse.mean_photons if args.n_in is None else args.n_in
    cell_ns = cfg.g2_cell_ns if args.cell_ns is None else args.cell_ns
    pulse = replace(cfg.pulse, mean_photons=n_in)
    bins_per_cell = max(1, round(cell_ns / (pulse.bin_width_us * 1000.0)))
    edges = default_cell_edges(pulse.n_bins, bins_per_cell)
    ens = run_point(
        pulse, cfg.absorber, cfg.detector, cfg.shots, cfg.seed,
        collect_g2=True, cell_edges=edges, workers=cfg.workers,
    )
    mat = ens.g2.finalize()
    starts = mat.cell_starts_us
    rows = []
    for i in range(starts.size):
        for j in range(starts.size):
            rows.append(
                (starts[i], starts[j], float(mat.values[i, j]), float(mat.sigma[i, j]),
                 float(mat.counts[i, j]))
            )
    _write_csv(run_dir / "g2_matrix.csv", ["t1_us", "t2_us", "g2", "g2_sigma", "n_pairs"], rows)
    summary = {
        "command": "g2",
        "n_in": n_in,
        "shots": cfg.shots,
        "seed": cfg.seed,
        "cell_ns": cell_ns,
        "front_g2": mat.front_g2,
        "front_sigma": mat.front_sigma,
        "rear_g2": mat.rear_g2,
        "rear_sigma": mat.rear_sigma,
    }
    _write_summary(run_dir, summary)
    print(
        f"n_in={n_in:g}: front-block g2={mat.front_g2:.4f}+-{mat.front_sigma:.4f}, "
        f"rear-block g2={mat.rear_g2:.4f}+-{mat.rear_sigma:.4f}"
    )
    print(f"written to {run_dir}")
    return 0


def cmd_spectrum(cfg: RunConfig, args, run_dir: Path) -> int:
    grid = np.linspace(args.delta_min, args.delta_max, args.points)
    phys = replace(cfg.physics, omega_c=0.0) if args.control_off else cfg.physics
    spectrum = bloch.transmission_spectrum(phys, grid)
    _write_csv(
        run_dir / "spectrum.csv",
        ["delta_mhz", "transmission"],
        [(float(d), float(t)) for d, t in spectrum],
    )
    summary = {
        "command": "spectrum",
        "control_off": bool(args.control_off),
        "gamma_gr_mhz": bloch.ground_rydberg_linewidth(cfg.physics),
        "scattering_probability": bloch.scattering_probability(cfg.physics),
        "conversion_probability": bloch.conversion_probability(cfg.physics),
        "min_transmission": float(spectrum[:, 1].min()),
    }
    _write_summary(run_dir, summary)
    print(
        f"p_scatt={summary['scattering_probability']:.4f}, "
        f"line-center conversion={summary['conversion_probability']:.4f}"
    )
    print(f"written to {run_dir}")
    return 0


def cmd_fit_gamma(cfg: RunConfig, args, run_dir: Path) -> int:
    data = np.loadtxt(args.data, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] < 2:
        raise ValueError("expected CSV columns delta_mhz,transmission")
    fit = bloch.fit_dephasing(data[:, 0], data[:, 1], cfg.physics)
    summary = {
        "command": "fit-gamma",
        "data": str(args.data),
        "gamma_deph_mhz": fit.gamma_deph,
        "residual": fit.residual,
        "iterations": fit.iterations,
    }
    _write_summary(run_dir, summary)
    print(f"gamma_deph = {fit.gamma_deph:.6g} MHz (residual {fit.residual:.3g})")
    print(f"written to {run_dir}")
    return 0


def cmd_cascade(cfg: RunConfig, args, run_dir: Path) -> int:
    if args.stages is not None:
        stages = parse_stages(args.stages)
    elif cfg.cascade is not None:
        stages = cfg.cascade
    else:
        stages = (cfg.absorber,)
    n_in = cfg.pulse.mean_photons if args.n_in is None else args.n_in
    pulse = replace(cfg.pulse, mean_photons=n_in)
    result = simulate_cascade(stages, pulse, cfg.shots, cfg.seed)
    stage_rows = []
    for k, (params, ens) in enumerate(zip(stages, result.stages)):
        fired = float(1.0 - ens.absorbed_hist[0] / ens.shots)
        mean_absorbed = float(
            sum(i * c for i, c in enumerate(ens.absorbed_hist)) / ens.shots
        )
        stage_rows.append(
            (k, params.p_ryd, params.p_ryd2, params.t, ens.mean_in, ens.mean_out, fired, mean_absorbed)
        )
    _write_csv(
        run_dir / "cascade_stages.csv",
        ["stage", "p_ryd", "p_ryd2", "t", "mean_in", "mean_out", "p_fired", "mean_absorbed"],
        stage_rows,
    )
    confusion_rows = []
    for true_n in sorted(result.detected_hist):
        counts = result.detected_hist[true_n]
        total = counts.sum()
        for inferred, count in enumerate(counts):
            if count:
                confusion_rows.append((true_n, inferred, int(count), float(count / total)))
    _write_csv(
        run_dir / "confusion.csv",
        ["true_n", "inferred_n", "count", "fraction"],
        confusion_rows,
    )
    joint = result.joint_hist
    joint_rows = []
    for index in np.ndindex(joint.shape):
        if joint[index]:
            joint_rows.append(tuple(index) + (int(joint[index]),))
    _write_csv(
        run_dir / "joint_absorbed.csv",
        [f"absorbed_stage_{k}" for k in range(len(stages))] + ["count"],
        joint_rows,
    )
    all_fired = float(
        sum(int(joint[idx]) for idx in np.ndindex(joint.shape) if all(v > 0 for v in idx))
        / result.shots
    )
    correct = 0
    total = 0
    for true_n, counts in result.detected_hist.items():
        total += int(counts.sum())
        expected = min(true_n, len(stages))
        correct += int(counts[expected])
    summary = {
        "command": "cascade",
        "n_in": n_in,
        "shots": cfg.shots,
        "seed": cfg.seed,
        "n_stages": len(stages),
        "p_all_stages_fired": all_fired,
        "count_accuracy": float(correct / total),
    }
    _write_summary(run_dir, summary)
    print(
        f"{len(stages)} stages, n_in={n_in:g}: P(all fired)={all_fired:.4f}, "
        f"count accuracy={summary['count_accuracy']:.4f}"
    )
    print(f"written to {run_dir}")
    return 0


def cmd_validate(cfg: RunConfig, args, run_dir: Path) -> int:
    checks: list[tuple[str, float, float, float, bool]] = []

    def record(name: str, value: float, expected: float, tol: float) -> None:
        ok = abs(value - expected) <= tol
        checks.append((name, value, expected, tol, ok))

    oracle_p = cfg.absorber.p_ryd if args.oracle_p_ryd is None else args.oracle_p_ryd
    p2zero = replace(cfg.absorber, p_ryd2=0.0)
    n_list = _parse_float_list(args.n_in)
    for k, n_in in enumerate(n_list):
        pulse = replace(cfg.pulse, mean_photons=n_in)
        ens = run_point(
            pulse, p2zero, cfg.detector, cfg.shots, cfg.seed,
            stream_key=(k,), workers=cfg.workers,
        )
        expected = analytic.mean_out(n_in, cfg.absorber.t, oracle_p)
        record(f"closed_form_mean_out[n_in={n_in:g}]", ens.mean_out, expected, 3.0 * ens.sem_out)
        ideal = analytic.ideal_ion_stats(n_in, cfg.absorber.t, oracle_p, cfg.detector.eta_ion)
        record(
            f"ion_mean[n_in={n_in:g}]",
            stats.hist_mean(ens.ion_hist),
            ideal.mean_ions,
            3.0 * stats.hist_mean_sem(ens.ion_hist),
        )
        record(
            f"ion_mandel_q[n_in={n_in:g}]",
            stats.mandel_q(ens.ion_hist),
            ideal.mandel_q,
            3.0 * stats.mandel_q_sem(ens.ion_hist),
        )
    # binomial thinning scales Mandel-Q by the efficiency
    thin_rng = substream(cfg.seed, 900)
    clicks = thin_rng.binomial(2, cfg.detector.eta_ion, size=100000)
    hist = np.bincount(clicks)
    record(
        "thinning_q_scaling",
        stats.mandel_q(hist),
        -cfg.detector.eta_ion,
        3.0 * stats.mandel_q_sem(hist),
    )
    # exact photon conservation over a small ensemble
    conserve_rng = substream(cfg.seed, 901)
    pulse = replace(cfg.pulse, mean_photons=10.0)
    conserved = True
    for _ in range(500):
        rec = simulate_shot(cfg.absorber, sample_input(pulse, conserve_rng), conserve_rng)
        total = rec.output_bins.sum() + rec.absorbed + rec.background_lost
        conserved &= bool(total == rec.input_bins.sum())
    record("photon_conservation", float(conserved), 1.0, 0.0)
    # exact merge algebra and fixed-seed determinism
    e1 = run_ensemble(cfg.absorber, pulse, 300, cfg.seed, stream_key=(11,))
    e2 = run_ensemble(cfg.absorber, pulse, 300, cfg.seed, stream_key=(12,))
    e3 = run_ensemble(cfg.absorber, pulse, 300, cfg.seed, stream_key=(13,))
    record("merge_commutative", float(merge(e1, e2).equals(merge(e2, e1))), 1.0, 0.0)
    record(
        "merge_associative",
        float(merge(merge(e1, e2), e3).equals(merge(e1, merge(e2, e3)))),
        1.0,
        0.0,
    )
    rerun = run_ensemble(cfg.absorber, pulse, 300, cfg.seed, stream_key=(11,))
    record("fixed_seed_determinism", float(e1.equals(rerun)), 1.0, 0.0)

    rows = [(name, value, expected, tol, int(ok)) for name, value, expected, tol, ok in checks]
    _write_csv(run_dir / "validate_report.csv", ["check", "value", "expected", "tolerance", "passed"], rows)
    n_failed = sum(1 for *_, ok in checks if not ok)
    for name, value, expected, tol, ok in checks:
        status = "PASS" if ok else "FAIL"
        print(f"{status} {name}: value={value:.6g} expected={expected:.6g} tol={tol:.3g}")
    _write_summary(
        run_dir,
        {
            "command": "validate",
            "shots": cfg.shots,
            "seed": cfg.seed,
            "n_checks": len(checks),
            "n_failed": n_failed,
        },
    )
    print(f"written to {run_dir}")
    return 0 if n_failed == 0 else 2


# ---------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photonsub",
        description="Monte-Carlo simulator and analysis toolkit for a saturable single-photon absorber.",
    )
    parser.add_argument("--config", help="flat-key config file")
    parser.add_argument("--seed", type=int, help="override run.seed")
    parser.add_argument("--shots", type=int, help="override run.shots")
    parser.add_argument("--out", help="override run.out_dir")
    parser.add_argument("--workers", type=int, help="override run.workers")
    parser.add_argument(
        "--paper-defaults",
        action="store_true",
        help="ignore the config file and use the built-in parameter table",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="transmitted photons and ion statistics versus input")
    p.add_argument("--n-in", default=DEFAULT_SWEEP, help="comma-separated input photon numbers")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("pulse", help="input/output pulse shapes with ideal-absorber overlay")
    p.add_argument("--n-in", type=float, help="mean input photon number")
    p.set_defaults(func=cmd_pulse)

    p = sub.add_parser("g2", help="time-resolved pair-averaged intensity correlations")
    p.add_argument("--n-in", type=float, help="mean input photon number")
    p.add_argument("--cell-ns", type=float, help="correlation cell width in ns")
    p.set_defaults(func=cmd_g2)

    p = sub.add_parser("spectrum", help="weak-probe transmission spectrum")
    p.add_argument("--delta-min", type=float, default=-10.0, help="two-photon detuning start (MHz)")
    p.add_argument("--delta-max", type=float, default=10.0, help="two-photon detuning end (MHz)")
    p.add_argument("--points", type=int, default=401)
    p.add_argument("--control-off", action="store_true", help="two-level reference spectrum")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("fit-gamma", help="fit the dephasing rate to a spectrum CSV")
    p.add_argument("data", help="CSV with columns delta_mhz,transmission")
    p.set_defaults(func=cmd_fit_gamma)

    p = sub.add_parser("cascade", help="chain of absorbers and number-resolving statistics")
    p.add_argument("--stages", help="semicolon-separated stages 'p_ryd,p_ryd2,t;...'")
    p.add_argument("--n-in", type=float, help="mean input photon number")
    p.set_defaults(func=cmd_cascade)

    p = sub.add_parser("validate", help="Monte-Carlo versus closed-form oracle report")
    p.add_argument("--n-in", default="5.65,20", help="comma-separated input photon numbers")
    p.add_argument("--oracle-p-ryd", type=float, help="override the oracle p_ryd (negative control)")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides: dict[str, str] = {}
    if args.seed is not None:
        overrides["run.seed"] = str(args.seed)
    if args.shots is not None:
        overrides["run.shots"] = str(args.shots)
    if args.out is not None:
        overrides["run.out_dir"] = args.out
    if args.workers is not None:
        overrides["run.workers"] = str(args.workers)
    try:
        cfg = load_config(None if args.paper_defaults else args.config, overrides)
        run_dir = _prepare_run_dir(cfg, args.command)
        return args.func(cfg, args, run_dir)
    except (ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except RuntimeError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
