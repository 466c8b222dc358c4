"""Command-line front end: run a scenario end to end or check the phase model.

``nfclab run <preset|file>`` executes synthesis -> analysis -> partitioning
-> multiplanar error and writes plot-ready CSV artifacts plus a plain-text
report; ``nfclab phase-check <preset|file>`` compares the synthesized LOS
phase against the closed-form near- and far-field models at a scaled
receiver distance.

Exit codes: 0 success, 2 unknown preset, 3 scenario parse/read failure,
4 analysis failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import analysis, multiplanar, stationarity, synth, wavefront
from .constants import C_M_PER_S
from .scene import (PRESET_NAMES, Scene, SceneError, element_position,
                    load_preset, load_scene, true_geometry)

EXIT_OK = 0
EXIT_UNKNOWN_PRESET = 2
EXIT_PARSE_FAILURE = 3
EXIT_ANALYSIS_FAILURE = 4

RUN_FILES = ("cfr.csv", "stats.csv", "pdp.csv", "partition.csv",
             "cmd_map.csv", "mw_error.csv", "report.txt")


@dataclass
class RunReport:
    """Everything cmd_run produced: artifact paths, partitions, checks."""

    scene_summary: str
    output_files: dict[str, Path]
    partitions: list[stationarity.StationaryPartition]
    mw_table: list[tuple[str, int, float, float]]
    checks: dict[str, bool]
    thresholds: dict[str, float]
    observations: list[str]


class _CliError(Exception):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


def _resolve_scene(name_or_path: str) -> Scene:
    """Presets by bare name; anything path-like is loaded from disk."""
    looks_like_path = any(sep in name_or_path for sep in ("/", "\\")) or "." in name_or_path
    if (not looks_like_path and name_or_path not in PRESET_NAMES
            and not Path(name_or_path).exists()):
        raise _CliError(f"unknown preset {name_or_path!r}; available: {', '.join(PRESET_NAMES)}",
                        EXIT_UNKNOWN_PRESET)
    try:
        if name_or_path in PRESET_NAMES and not Path(name_or_path).exists():
            return load_preset(name_or_path)
        return load_scene(name_or_path)
    except SceneError as exc:
        raise _CliError(f"cannot load scenario {name_or_path!r}: {exc}",
                        EXIT_PARSE_FAILURE) from exc


def _apply_overrides(scene: Scene, args: argparse.Namespace) -> Scene:
    if getattr(args, "freq_points", None) is not None:
        scene = replace(scene, sweep=replace(scene.sweep, n_points=args.freq_points))
    if getattr(args, "noise_floor", None) is not None:
        scene = replace(scene, noise_floor_dbm=args.noise_floor)
    if getattr(args, "seed", None) is not None:
        scene = scene.with_seed(args.seed)
    scene.validate()
    return scene


def _dyadic_mw_table(scene: Scene, truth: synth.ChannelFrequencyResponse,
                     max_k: int = 5) -> list[tuple[str, int, float, float]]:
    rows = []
    n = scene.array.n_elements
    for k in range(max_k + 1):
        n_int = min(2 ** k, n)
        part = stationarity.uniform_partition(n, n_int)
        patches = multiplanar.build_multiplanar_model(scene, part)
        approx = multiplanar.synthesize_multiplanar_cfr(patches, scene)
        err = multiplanar.multiplanar_error(truth, approx)
        rows.append((f"dyadic_2^{k}", n_int, err.phase_rmse, err.complex_correlation))
    return rows


def cmd_run(args: argparse.Namespace) -> RunReport:
    scene = _apply_overrides(_resolve_scene(args.scenario), args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    cfr = synth.synthesize_cfr(scene)
    stats = analysis.compute_stats(cfr, scene)
    pdps = analysis.pdp_matrix(cfr)

    partitions: list[stationarity.StationaryPartition] = []
    if args.criterion in ("cmd", "both"):
        partitions.append(stationarity.partition_by_cmd(cfr, m=args.window,
                                                        tau=args.cmd_threshold))
    if args.criterion in ("slope", "both"):
        partitions.append(stationarity.partition_by_slope(stats))

    dmap = stationarity.cmd_map(cfr, m=args.window)

    truth_los = synth.synthesize_los_cfr(scene)
    mw_table = _dyadic_mw_table(scene, truth_los)
    for part in partitions:
        patches = multiplanar.build_multiplanar_model(scene, part)
        approx = multiplanar.synthesize_multiplanar_cfr(patches, scene)
        err = multiplanar.multiplanar_error(truth_los, approx)
        mw_table.append((part.criterion, part.n_intervals,
                         err.phase_rmse, err.complex_correlation))

    files = {name: out_dir / name for name in RUN_FILES}
    synth.export_cfr_csv(cfr, files["cfr.csv"])
    analysis.export_stats_csv(stats, files["stats.csv"])
    analysis.export_pdp_csv(pdps, files["pdp.csv"])
    stationarity.export_partition_csv(partitions, files["partition.csv"])
    stationarity.export_cmd_map_csv(dmap, files["cmd_map.csv"])
    multiplanar.export_mw_error_csv(mw_table, files["mw_error.csv"])

    # Built-in checks and observations
    power_spread = float(stats.power_db.max() - stats.power_db.min())
    fc = scene.sweep.frequencies()[(scene.sweep.n_points - 1) // 2]
    model = wavefront.model_phases(scene, scene.rx, fc)
    phase_corr = float(np.corrcoef(stats.los_phase_rad, model)[0, 1])
    mw_rmse = [row[2] for row in mw_table[:6]]
    checks = {
        "phase_model_correlation_gt_0.99": phase_corr > 0.99,
        "partitions_cover_array": all(p.intervals[0][0] == 1 and p.intervals[-1][1] == scene.array.n_elements
                                      for p in partitions),
        "mw_error_nonincreasing_with_refinement": all(mw_rmse[i + 1] <= mw_rmse[i] + 1e-9
                                                      for i in range(len(mw_rmse) - 1)),
    }
    observations = [
        f"received power spread across elements: {power_spread:.3f} dB",
        f"LOS phase vs closed-form model correlation: {phase_corr:.6f}",
        f"median RMS delay spread: {float(np.median(stats.delay_spread_s)) * 1e9:.3f} ns",
    ]
    for part in partitions:
        bounds = ", ".join(str(b) for b in part.boundaries()) or "none"
        observations.append(f"{part.criterion} partition: {part.n_intervals} interval(s), boundaries at {bounds}")
        for warning in part.warnings:
            observations.append(f"{part.criterion} warning: {warning}")

    thresholds = {
        "cmd_window_m": float(args.window),
        "cmd_threshold_tau": float(args.cmd_threshold),
        "cmd_min_si": float(args.window),
        "slope_threshold_power_db_per_element": stationarity.DEFAULT_SLOPE_THRESHOLDS["power_db"],
        "slope_smoothing_w": float(stationarity.DEFAULT_SMOOTHING_W),
        "uniform_power_gamma_db": stationarity.DEFAULT_UNIFORM_POWER_DB,
        "ds_threshold_db": analysis.DEFAULT_DS_THRESHOLD_DB,
        "los_gate_half_width_bins": float(analysis.LOS_GATE_HALF_WIDTH),
        "noise_floor_dbm": (float("nan") if scene.noise_floor_dbm is None
                            else scene.noise_floor_dbm),
        "seed": float(scene.seed),
    }

    summary = (f"{scene.array.n_elements} elements at {scene.array.spacing_d} m pitch; "
               f"sweep {scene.sweep.f_start / 1e9:g}-{scene.sweep.f_stop / 1e9:g} GHz "
               f"x {scene.sweep.n_points} points; rx {scene.rx}; "
               f"{len(scene.walls)} wall(s), {len(scene.point_scatterers)} scatterer(s), "
               f"{len(scene.blockers)} blocker(s)")

    report = RunReport(scene_summary=summary, output_files=files,
                       partitions=partitions, mw_table=mw_table, checks=checks,
                       thresholds=thresholds, observations=observations)
    files["report.txt"].write_text(_render_report(args.scenario, report), encoding="utf-8")
    return report


def _render_report(scenario: str, report: RunReport) -> str:
    lines = [f"scenario: {scenario}", f"scene: {report.scene_summary}", "",
             "thresholds and defaults used:"]
    for key, value in report.thresholds.items():
        lines.append(f"  {key} = {value:g}")
    lines.append("")
    lines.append("observations:")
    for obs in report.observations:
        lines.append(f"  {obs}")
    lines.append("")
    lines.append("multiplanar-wave error:")
    lines.append("  partition        intervals  phase_rmse_rad  correlation")
    for name, n_int, rmse, corr in report.mw_table:
        lines.append(f"  {name:<16s} {n_int:9d}  {rmse:.6e}  {corr:.9f}")
    lines.append("")
    lines.append("checks:")
    for name, ok in report.checks.items():
        lines.append(f"  {'PASS' if ok else 'FAIL'}  {name}")
    lines.append("")
    lines.append("artifacts:")
    for name in RUN_FILES:
        lines.append(f"  {name}")
    return "\n".join(lines) + "\n"


def cmd_phase_check(args: argparse.Namespace) -> int:
    scene = _apply_overrides(_resolve_scene(args.scenario), args)
    if args.distance_mult < 1:
        raise _CliError("--distance-mult must be >= 1", EXIT_ANALYSIS_FAILURE)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    # Place the receiver at k * Rayleigh distance along its original bearing
    # from element 1, then compare measured/closed-form/far-field phases.
    # A degenerate aperture (single element) has no Rayleigh distance; the
    # receiver stays where the scenario put it.
    lam_c = scene.sweep.lambda_center
    r_d = wavefront.rayleigh_distance(scene.array.aperture, lam_c)
    p1 = element_position(scene, 1)
    bearing = np.asarray(scene.rx, dtype=float) - p1
    distance = float(np.linalg.norm(bearing))
    bearing /= distance
    if r_d > 0.0:
        distance = args.distance_mult * r_d
    target = p1 + bearing * distance
    scaled = replace(scene, rx=tuple(float(x) for x in target))
    scaled.validate()

    cfr = synth.synthesize_cfr(scaled)
    measured, _ = analysis.los_phase(cfr, scaled)
    fc = scaled.sweep.frequencies()[(scaled.sweep.n_points - 1) // 2]
    lam_eval = C_M_PER_S / fc
    model = wavefront.model_phases(scaled, scaled.rx, fc)
    _, theta_1 = true_geometry(scaled, 1, scaled.rx)
    far = np.array([wavefront.far_field_phase(n, scene.array.spacing_d, lam_eval, theta_1)
                    for n in range(1, scene.array.n_elements + 1)])

    path = out_dir / "phase_check.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["element", "measured_phase", "eq_model_phase", "far_field_phase"])
        for i in range(scene.array.n_elements):
            writer.writerow([i + 1, repr(float(measured[i])), repr(float(model[i])),
                             repr(float(far[i]))])

    if scene.array.n_elements >= 2:
        corr_meas = float(np.corrcoef(measured, model)[0, 1])
    else:
        corr_meas = 1.0
    max_far_gap = float(np.abs(model - (-far)).max())
    print(f"rx distance: {args.distance_mult:g} x Rayleigh ({r_d:.3f} m) = "
          f"{distance:.3f} m")
    print(f"corr(measured, near-field model) = {corr_meas:.9f}")
    print(f"max |near-field model - signed far-field| = {max_far_gap:.6e} rad")
    print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nfclab",
                                     description="near-field array channel laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the full pipeline on a preset or scenario file")
    run.add_argument("scenario", help=f"preset name ({', '.join(PRESET_NAMES)}) or scenario file path")
    run.add_argument("--out", default="nfclab_out", help="output directory")
    run.add_argument("--seed", type=int, default=None, help="noise seed override")
    run.add_argument("--freq-points", type=int, default=None, help="sweep point count override")
    run.add_argument("--cmd-threshold", type=float, default=stationarity.DEFAULT_CMD_THRESHOLD,
                     help="correlation-distance partition threshold")
    run.add_argument("--window", type=int, default=stationarity.DEFAULT_WINDOW_M,
                     help="correlation window size in elements")
    run.add_argument("--criterion", choices=("cmd", "slope", "both"), default="both",
                     help="stationary-interval criterion to run")
    run.add_argument("--noise-floor", type=float, default=None,
                     help="complex noise floor in dBm (off when omitted)")
    run.set_defaults(func=_run_entry)

    check = sub.add_parser("phase-check",
                           help="compare synthesized LOS phase against the closed-form models")
    check.add_argument("scenario", help=f"preset name ({', '.join(PRESET_NAMES)}) or scenario file path")
    check.add_argument("--out", default="nfclab_out", help="output directory")
    check.add_argument("--distance-mult", type=float, default=1.0,
                       help="receiver distance as a multiple of the Rayleigh distance (>= 1)")
    check.add_argument("--seed", type=int, default=None, help="noise seed override")
    check.set_defaults(func=_phase_check_entry)
    return parser


def _run_entry(args: argparse.Namespace) -> int:
    report = cmd_run(args)
    print(f"report: {report.output_files['report.txt']}")
    for obs in report.observations:
        print(obs)
    for name, ok in report.checks.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    return EXIT_OK


def _phase_check_entry(args: argparse.Namespace) -> int:
    return cmd_phase_check(args)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (analysis.AnalysisError, stationarity.StationarityError, ValueError) as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS_FAILURE


if __name__ == "__main__":
    sys.exit(main())
