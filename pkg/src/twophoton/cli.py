"""Command-line front end emitting figure-ready scan data.

    twophoton <correlation|homscan|fringe|engineer|mc>
              --config <path> [--out <dir>] [--seed <u64>] [--threads <n>]

Every output file starts with the resolved configuration as ``# key = value``
lines, so a run can be reproduced from its own output (strip the leading
``# `` or use ``config_from_output_header``).  Files are written to a
temporary name and renamed into place.  Exit codes: 0 success, 2 bad
configuration, 3 numerical precondition failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from .config import COMMANDS, RunConfig, parse_config_file, resolve_config
from .correlation import gamma1_coherence, gamma2_mode_locked
from .engineering import (
    WidebandState,
    combined_gamma2,
    matched_wideband,
    solve_excision,
)
from .errors import ConfigError, NumericsError
from .interferometer import InterferometerConfig, delay_scan, phase_fringe_scan
from .montecarlo import (
    comb_contrast,
    detect,
    histogram_delays,
    sample_pair_delays,
    summarize_records,
)
from .spectral import SpectralAmplitude, TimeGrid


def _fval(x) -> str:
    return repr(float(x))


def _write_atomic(path: Path, lines) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("\n".join(lines))
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _header(cfg: RunConfig) -> list:
    return [f"# twophoton {cfg.command}"] + cfg.echo_lines()


def _csv(header_lines, columns, rows) -> list:
    lines = list(header_lines)
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fval(v) for v in row))
    return lines


def cmd_correlation(cfg: RunConfig, out_dir: Path, threads: int) -> list:
    grid = TimeGrid(cfg.tau_min, cfg.tau_max, cfg.scan_points)
    trace = gamma2_mode_locked(cfg.comb, grid)
    columns = ["tau_s", "gamma2"]
    series = [grid.values, trace.samples]
    if cfg.include_coherence:
        columns.append("coherence_abs")
        series.append(np.abs(gamma1_coherence(cfg.comb, grid).samples))
    path = out_dir / "correlation.csv"
    _write_atomic(path, _csv(_header(cfg), columns, zip(*series)))
    return [path]


def cmd_homscan(cfg: RunConfig, out_dir: Path, threads: int) -> list:
    delays = np.linspace(cfg.delay_min, cfg.delay_max, cfg.scan_points)
    icfg = InterferometerConfig(
        comb=cfg.comb,
        delay=cfg.delay_min,
        resolution_time=cfg.detector.resolution_time,
        pump_phase=cfg.pump_phase,
        mode_match=cfg.mode_match,
    )
    scan = delay_scan(icfg, delays, dithered=cfg.dithered)
    columns = ["delay_s"]
    series = [scan.abscissa]
    if cfg.delay_to_mm != 0.0:
        columns.append("position_mm")
        series.append(scan.abscissa * cfg.delay_to_mm)
    columns += ["coincidence", "singles_1", "singles_2"]
    series += [scan.coincidence, scan.singles_1, scan.singles_2]
    path = out_dir / "homscan.csv"
    _write_atomic(path, _csv(_header(cfg), columns, zip(*series)))
    return [path]


def cmd_fringe(cfg: RunConfig, out_dir: Path, threads: int) -> list:
    phases = np.linspace(cfg.phase_min, cfg.phase_max, cfg.scan_points)
    icfg = InterferometerConfig(
        comb=cfg.comb,
        delay=cfg.delay,
        resolution_time=cfg.detector.resolution_time,
        mode_match=cfg.mode_match,
    )
    scan = phase_fringe_scan(icfg, phases)
    header = _header(cfg)
    fits = scan.metadata["fitted_visibility"]
    header.append(f"# result.singles_visibility = {_fval(scan.metadata['singles_visibility'])}")
    header.append(f"# result.overlap_visibility = {_fval(scan.metadata['visibility_v'])}")
    for channel in ("coincidence", "singles_1", "singles_2"):
        header.append(f"# result.fit_visibility_{channel} = {_fval(fits[channel])}")
    rows = zip(scan.abscissa, scan.coincidence, scan.singles_1, scan.singles_2)
    path = out_dir / "fringe.csv"
    _write_atomic(path, _csv(header, ["phase_rad", "coincidence", "singles_1", "singles_2"], rows))
    return [path]


def cmd_engineer(cfg: RunConfig, out_dir: Path, threads: int) -> list:
    if cfg.wideband_halfwidth > 0.0:
        template = SpectralAmplitude(shape=cfg.wideband_shape, halfwidth=cfg.wideband_halfwidth)
    else:
        template = matched_wideband(cfg.comb, cfg.wideband_shape)
    grid = TimeGrid(cfg.tau_min, cfg.tau_max, cfg.scan_points)
    solution = solve_excision(
        cfg.comb, template, cfg.target_peak, grid, optimize_width=cfg.optimize_width
    )
    before = gamma2_mode_locked(cfg.comb, grid)
    after = combined_gamma2(
        cfg.comb,
        WidebandState(solution.wideband, solution.delay),
        solution.eta,
        solution.zeta,
        grid,
    )
    header = _header(cfg)
    before_path = out_dir / "engineer_before.csv"
    after_path = out_dir / "engineer_after.csv"
    _write_atomic(before_path, _csv(header, ["tau_s", "gamma2"], zip(grid.values, before.samples)))
    _write_atomic(after_path, _csv(header, ["tau_s", "gamma2"], zip(grid.values, after.samples)))
    solution_lines = header + [
        "",
        f"eta_real = {_fval(solution.eta.real)}",
        f"eta_imag = {_fval(solution.eta.imag)}",
        f"zeta_real = {_fval(solution.zeta.real)}",
        f"zeta_imag = {_fval(solution.zeta.imag)}",
        f"delay_s = {_fval(solution.delay)}",
        f"target_peak = {solution.target_peak}",
        f"residual = {_fval(solution.residual)}",
        f"wideband_shape = {solution.wideband.shape.value}",
        f"wideband_halfwidth = {_fval(solution.wideband.halfwidth)}",
    ]
    for k in sorted(solution.neighbor_retention):
        solution_lines.append(
            f"neighbor_retention_{k} = {_fval(solution.neighbor_retention[k])}"
        )
    solution_path = out_dir / "engineer_solution.txt"
    _write_atomic(solution_path, solution_lines)
    return [before_path, after_path, solution_path]


def cmd_mc(cfg: RunConfig, out_dir: Path, threads: int) -> list:
    grid = TimeGrid(cfg.tau_min, cfg.tau_max, cfg.scan_points)
    trace = gamma2_mode_locked(cfg.comb, grid)
    delays = sample_pair_delays(trace, cfg.mc_events, cfg.seed, threads=threads)
    records = detect(
        delays,
        cfg.detector,
        cfg.seed,
        duration=cfg.mc_duration if cfg.mc_duration > 0 else None,
        threads=threads,
    )
    hist = histogram_delays(records, cfg.mc_bin_width, cfg.mc_range)
    summary = summarize_records(records, cfg.detector)
    try:
        contrast = comb_contrast(hist, cfg.comb.round_trip_time, cfg.comb.n_side_modes)
        contrast_str = _fval(contrast)
    except ValueError:
        contrast_str = "nan"
    header = _header(cfg)
    hist_path = out_dir / "mc_histogram.csv"
    _write_atomic(
        hist_path,
        _csv(header, ["bin_center_s", "count"], zip(hist.centers, hist.counts)),
    )
    summary_lines = header + [
        "",
        f"n_events_requested = {cfg.mc_events}",
        f"n_records = {summary['n_records']}",
        f"n_pair_records = {summary['n_pair_records']}",
        f"n_accidental_records = {summary['n_accidental_records']}",
        f"n_coincidences_in_window = {summary['n_coincidences_in_window']}",
        f"n_pair_coincidences_in_window = {summary['n_pair_coincidences_in_window']}",
        f"n_histogrammed = {hist.n_counted}",
        f"comb_contrast = {contrast_str}",
    ]
    summary_path = out_dir / "mc_summary.txt"
    _write_atomic(summary_path, summary_lines)
    return [hist_path, summary_path]


_DISPATCH = {
    "correlation": cmd_correlation,
    "homscan": cmd_homscan,
    "fringe": cmd_fringe,
    "engineer": cmd_engineer,
    "mc": cmd_mc,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twophoton",
        description="Mode-locked two-photon correlation and interferometry scans.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    env_threads = os.environ.get("TWOPHOTON_THREADS")
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} pipeline")
        p.add_argument("--config", required=True, help="path to a key = value config file")
        p.add_argument("--out", default=".", help="output directory (default: cwd)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument(
            "--threads",
            type=int,
            default=int(env_threads) if env_threads else 1,
            help="worker threads for Monte Carlo chunks (results do not depend on it)",
        )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        raw = parse_config_file(args.config)
        cfg = resolve_config(raw, args.command, seed_override=args.seed)
    except ConfigError as exc:
        print(f"twophoton: config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"twophoton: cannot read config: {exc}", file=sys.stderr)
        return 2
    if args.threads < 1:
        print("twophoton: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        written = _DISPATCH[args.command](cfg, Path(args.out), args.threads)
    except NumericsError as exc:
        print(f"twophoton: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
