"""ringlab command-line interface.

Reads a device config and data files, runs sweeps/simulations/fits, and
writes CSV tables (plot-ready, no graphics).  CSV goes to --out (default
stdout); a one-line summary of the key scalars goes to stderr.  Exit
codes: 0 ok, 2 usage, 3 config, 4 data, 5 numeric/precondition failure.
Identical invocations (same flags, config, seed) produce byte-identical
output.
"""

from __future__ import annotations

import argparse
import math
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import devicemodel, fitters, langevin, spectra, squeezing, supermodes
from .csvio import format_value, load_csv, write_csv
from .errors import ConfigError, DataError, FitError

RANGE_REL_TOL = 1e-9          # stop is included when on-grid within this
SEGMENT_SAMPLES = 4096        # Welch segment length for langevin-verify

EXIT_CODES_HELP = """\
exit codes:
  0  success
  2  usage error (unknown command or flag, malformed range)
  3  configuration error (file, schema, or physical invariant)
  4  data error (missing/extra CSV column, non-numeric cell, unreadable file)
  5  numeric/precondition failure (non-convergent fit, out-of-range parameter)
"""


def parse_range(text: str) -> np.ndarray:
    """start:stop:step grid, inclusive start; stop included when on-grid."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"range must be start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"range values must be numeric: {text!r}") from None
    if step <= 0:
        raise argparse.ArgumentTypeError(f"range step must be positive: {text!r}")
    if stop < start:
        raise argparse.ArgumentTypeError(f"range stop must be >= start: {text!r}")
    span = stop - start
    k = int(round(span / step))
    scale = max(abs(start), abs(stop), abs(step))
    if abs(k * step - span) <= RANGE_REL_TOL * scale:
        n = k + 1
    else:
        n = int(math.floor(span / step)) + 1
    return start + step * np.arange(n)


def parse_index_range(text: str) -> tuple[int, int]:
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"window must be start:stop, got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"window indices must be integers: {text!r}") from None


def parse_assignments(pairs: list[str] | None) -> dict[str, float]:
    out: dict[str, float] = {}
    for pair in pairs or ():
        name, _, value = pair.partition("=")
        if not name or not value:
            raise argparse.ArgumentTypeError(f"expected name=value, got {pair!r}")
        try:
            out[name] = float(value)
        except ValueError:
            raise argparse.ArgumentTypeError(f"value for {name!r} must be numeric: {value!r}") from None
    return out


def _status(message: str) -> None:
    print(message, file=sys.stderr)


@contextmanager
def _open_out(path: str):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as stream:
            yield stream


def _load_trace(path: str) -> spectra.TransmissionTrace:
    """Trace CSV with either omega_rad_s or wavelength_nm as the axis."""
    try:
        header_line = next(
            line for line in Path(path).read_text(encoding="utf-8").splitlines()
            if line.strip() and not line.lstrip().startswith("#")
        )
    except OSError as exc:
        raise DataError(f"data file: {exc}") from None
    except StopIteration:
        raise DataError(f"{path}: empty file (no header row)") from None
    if "omega_rad_s" in header_line:
        rows = load_csv(path, {"omega_rad_s": float, "t_power": float})
        omega = np.array([row["omega_rad_s"] for row in rows])
        t = np.array([row["t_power"] for row in rows])
    else:
        rows = load_csv(path, {"wavelength_nm": float, "t_power": float})
        omega = np.array([devicemodel.pump_angular_frequency(row["wavelength_nm"]) for row in rows])
        t = np.array([row["t_power"] for row in rows])
    order = np.argsort(omega)
    return spectra.TransmissionTrace(omega_grid=omega[order], t_power=t[order])


def _load_crossing(path: str) -> fitters.CrossingDataset:
    try:
        header_line = next(
            line for line in Path(path).read_text(encoding="utf-8").splitlines()
            if line.strip() and not line.lstrip().startswith("#")
        )
    except OSError as exc:
        raise DataError(f"data file: {exc}") from None
    except StopIteration:
        raise DataError(f"{path}: empty file (no header row)") from None
    if "resonance_rad_s" in header_line:
        schema = {"p1_mw": float, "p2_mw": float, "branch": str, "resonance_rad_s": float}
        rows = load_csv(path, schema)
        res = [row["resonance_rad_s"] for row in rows]
    else:
        schema = {"p1_mw": float, "p2_mw": float, "branch": str, "resonance_nm": float}
        rows = load_csv(path, schema)
        res = [devicemodel.pump_angular_frequency(row["resonance_nm"]) for row in rows]
    return fitters.CrossingDataset(
        p1_mw=np.array([row["p1_mw"] for row in rows]),
        p2_mw=np.array([row["p2_mw"] for row in rows]),
        branch=tuple(row["branch"] for row in rows),
        resonance_rad_s=np.array(res),
    )


# --- commands -----------------------------------------------------------------


def cmd_validate(args) -> int:
    config = devicemodel.load_config(args.config)
    eta_d = devicemodel.detection_efficiency(config.detection)
    _status(
        "config ok: eta_d={} kappa_ext={} rad/s kappa_12={} rad/s".format(
            format_value(eta_d),
            format_value(config.coupling.kappa_ext),
            format_value(config.coupling.kappa_12),
        )
    )
    return 0


def cmd_transmission(args) -> int:
    config = devicemodel.load_config(args.config)
    if args.omega is not None:
        grid = args.omega
    else:
        grid = spectra.default_scan_grid(config, args.p1, args.p2,
                                         margin_linewidths=args.margin_linewidths,
                                         n_points=args.points)
    trace = spectra.compute_trace(config, args.p1, args.p2, grid)
    with _open_out(args.out) as stream:
        write_csv(stream, ["omega_rad_s", "t_power"], zip(trace.omega_grid, trace.t_power))
    dips = spectra.find_dips(trace)
    if args.dip_report is not None:
        rows = []
        for dip in dips:
            if dip.overlapping:
                regime, eta = spectra.REGIME_INDETERMINATE, float("nan")
            else:
                regime = spectra.classify_regime(config, (args.p1, args.p2), dip)
                eta = spectra.eta_c_from_tmin(dip.t_min, regime)
            rows.append((dip.omega_center, dip.t_min, dip.fwhm, regime, eta))
        with _open_out(args.dip_report) as stream:
            write_csv(stream, ["omega_center_rad_s", "t_min", "fwhm_rad_s", "regime", "eta_c"], rows)
    _status(f"transmission: {trace.omega_grid.size} points, {len(dips)} dip(s)")
    return 0


def cmd_crossing_sweep(args) -> int:
    config = devicemodel.load_config(args.config)
    rows = []
    min_split = math.inf
    for p1 in args.p1:
        upper, lower = supermodes.solve_both(config, float(p1), args.p2)
        min_split = min(min_split, upper.omega - lower.omega)
        rows.append((float(p1), args.p2, "lower", lower.omega))
        rows.append((float(p1), args.p2, "upper", upper.omega))
    with _open_out(args.out) as stream:
        write_csv(stream, ["p1_mw", "p2_mw", "branch", "resonance_rad_s"], rows)
    _status(f"crossing-sweep: {len(rows)} rows, minimum splitting {format_value(min_split)} rad/s")
    return 0


def cmd_etac_sweep(args) -> int:
    config = devicemodel.load_config(args.config)
    points = supermodes.eta_c_vs_heater(config, args.branch, args.p1, args.p2)
    with _open_out(args.out) as stream:
        write_csv(stream, ["p1_mw", "omega_rad_s", "eta_c", "tau_c_s"], points)
    _status(
        "etac-sweep: eta_c from {} to {} over {} points".format(
            format_value(points[0].eta_c), format_value(points[-1].eta_c), len(points)
        )
    )
    return 0


def cmd_squeeze_sweep(args) -> int:
    config = devicemodel.load_config(args.config)
    omega_sideband = 2.0 * math.pi * args.sideband_mhz * 1e6
    rows = squeezing.squeezing_vs_coupling(config, args.branch, args.p1, args.p2, omega_sideband)
    with _open_out(args.out) as stream:
        write_csv(stream, ["eta_c", "s_measured_db", "s_onchip_db", "omega_sideband_hz", "tau_c_s"], rows)
    _status(
        "squeeze-sweep: at eta_c={} measured {} dB, on-chip {} dB".format(
            format_value(rows[-1].eta_c),
            format_value(rows[-1].s_measured_db),
            format_value(rows[-1].s_onchip_db),
        )
    )
    return 0


def cmd_squeeze_spectrum(args) -> int:
    rows = []
    for f_hz in args.f:
        s = squeezing.squeezing_level(args.eta_c, args.eta_d, args.tau_c, 2.0 * math.pi * float(f_hz))
        s_db = squeezing.db_from_linear(s)
        rows.append((float(f_hz), s, s_db, -s_db))
    with _open_out(args.out) as stream:
        write_csv(stream, ["f_hz", "s_linear", "s_db", "squeezing_factor_db"], rows)
    _status(f"squeeze-spectrum: minimum {format_value(min(r[2] for r in rows))} dB at f={format_value(rows[0][0])} Hz")
    return 0


def cmd_langevin_verify(args) -> int:
    config = devicemodel.load_config(args.config)
    sol = supermodes.solve_branch(config, args.p1, args.p2, args.branch)
    gamma_total = sol.kappa_eff + sol.gamma_eff
    dt = args.dt_factor / gamma_total
    n_steps = (args.segments + 1) * (SEGMENT_SAMPLES // 2)
    run = langevin.LangevinRun(
        gamma_total=gamma_total,
        kappa_eff=sol.kappa_eff,
        dt=dt,
        duration=n_steps * dt,
        n_trajectories=args.trajectories,
        seed=args.seed,
    )
    simulated = langevin.averaged_output_psd(run, args.segments)
    analytic = langevin.analytic_psd(run.kappa_eff, run.gamma_total, simulated.freq_grid)
    band = 2.0 * math.pi * simulated.freq_grid <= 3.0 * gamma_total
    diff_db = 10.0 * np.log10(simulated.psd_normalized[band] / analytic.psd_normalized[band])
    max_diff = float(np.max(np.abs(diff_db)))
    metadata = [
        f"seed={run.seed}",
        f"dt={format_value(run.dt)}",
        f"duration={format_value(run.duration)}",
        f"n_trajectories={run.n_trajectories}",
        f"gamma_total={format_value(run.gamma_total)}",
        f"kappa_eff={format_value(run.kappa_eff)}",
    ]
    rows = [
        (f, p, 10.0 * math.log10(p))
        for f, p in zip(simulated.freq_grid, simulated.psd_normalized)
    ]
    with _open_out(args.out) as stream:
        write_csv(stream, ["freq_hz", "psd_shotnoise_units", "psd_db"], rows, comments=metadata)
    _status(
        "langevin-verify: max |simulated - analytic| = {} dB over {} frequencies "
        "(omega <= 3*gamma_total), eta_c={}".format(
            format_value(max_diff), int(band.sum()), format_value(run.eta_c)
        )
    )
    return 0


def cmd_shot_cal(args) -> int:
    powers = [float(p) for p in args.powers.split(",") if p.strip()]
    if not powers:
        raise ValueError("at least one power required")
    levels = langevin.shot_noise_calibration(
        powers, dt=1.0, duration=args.samples, n_segments=31, seed=args.seed
    )
    fit = fitters.weighted_linear_fit(
        [p for p, _ in levels], [v for _, v in levels], through_origin=True
    )
    with _open_out(args.out) as stream:
        write_csv(stream, ["power", "psd_level"], levels)
    _status(
        "shot-cal: slope={} r_squared={} (line through origin)".format(
            format_value(fit.slope), format_value(fit.r_squared)
        )
    )
    return 0


def cmd_fit_crossing(args) -> int:
    data = _load_crossing(args.data)
    result = fitters.fit_avoided_crossing(
        data,
        initial=parse_assignments(args.init) or None,
        fixed=parse_assignments(args.fix) or None,
    )
    rows = [(name, result.params[name], result.stderr[name]) for name in fitters.CROSSING_PARAMS]
    with _open_out(args.out) as stream:
        write_csv(stream, ["param", "value", "stderr"], rows)
    _status(f"fit-crossing: converged in {result.n_iterations} iterations, "
            f"residual_rms={format_value(result.residual_rms)} rad/s")
    for name, value, err in rows:
        _status(f"  {name:>10s} = {format_value(value)} +- {format_value(err)}")
    return 0


def cmd_fit_dip(args) -> int:
    trace = _load_trace(args.data)
    window = args.window if args.window is not None else (0, trace.omega_grid.size)
    result = fitters.fit_lorentzian_dip(trace, window)
    rows = [
        ("omega0_rad_s", result.omega0, result.stderr["omega0"]),
        ("t_min", result.t_min, result.stderr["t_min"]),
        ("fwhm_rad_s", result.fwhm, result.stderr["fwhm"]),
        ("baseline", result.baseline, result.stderr["baseline"]),
    ]
    with _open_out(args.out) as stream:
        write_csv(stream, ["param", "value", "stderr"], rows)
    note = " (model mismatch: structured residuals)" if result.mismatch_warning else ""
    _status(f"fit-dip: converged in {result.n_iterations} iterations, "
            f"t_min={format_value(result.t_min)}{note}")
    return 0


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ringlab",
        description="Coupled double-ring OPO simulator: supermodes, transmission, "
        "intensity-difference squeezing, stochastic verification, parameter fits.",
        epilog=EXIT_CODES_HELP,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, func, help_text, columns=None):
        p = sub.add_parser(
            name,
            help=help_text,
            description=help_text + (f"\n\noutput columns: {', '.join(columns)}" if columns else ""),
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        p.set_defaults(func=func)
        return p

    p = add("validate", cmd_validate, "Validate a device config file and print its composite efficiency.")
    p.add_argument("--config", required=True)

    p = add("transmission", cmd_transmission,
            "Bus transmission spectrum at one heater setting.",
            ["omega_rad_s", "t_power"])
    p.add_argument("--config", required=True)
    p.add_argument("--p1", type=float, required=True, help="ring-1 heater power, mW")
    p.add_argument("--p2", type=float, required=True, help="ring-2 heater power, mW")
    p.add_argument("--omega", type=parse_range, default=None,
                   help="probe grid start:stop:step in rad/s (default: auto around both dips)")
    p.add_argument("--margin-linewidths", type=float, default=10.0)
    p.add_argument("--points", type=int, default=4001)
    p.add_argument("--dip-report", default=None,
                   help="also write dip CSV: omega_center_rad_s,t_min,fwhm_rad_s,regime,eta_c")
    p.add_argument("--out", default="-")

    p = add("crossing-sweep", cmd_crossing_sweep,
            "Both supermode branch frequencies versus ring-1 heater power.",
            ["p1_mw", "p2_mw", "branch", "resonance_rad_s"])
    p.add_argument("--config", required=True)
    p.add_argument("--p1", type=parse_range, required=True, help="heater grid start:stop:step, mW")
    p.add_argument("--p2", type=float, required=True)
    p.add_argument("--out", default="-")

    p = add("etac-sweep", cmd_etac_sweep,
            "Coupling efficiency along one branch versus ring-1 heater power.",
            ["p1_mw", "omega_rad_s", "eta_c", "tau_c_s"])
    p.add_argument("--config", required=True)
    p.add_argument("--branch", choices=["upper", "lower"], required=True)
    p.add_argument("--p1", type=parse_range, required=True)
    p.add_argument("--p2", type=float, required=True)
    p.add_argument("--out", default="-")

    p = add("squeeze-sweep", cmd_squeeze_sweep,
            "Measured and inferred on-chip squeezing along a heater sweep.",
            ["eta_c", "s_measured_db", "s_onchip_db", "omega_sideband_hz", "tau_c_s"])
    p.add_argument("--config", required=True)
    p.add_argument("--branch", choices=["upper", "lower"], required=True)
    p.add_argument("--p1", type=parse_range, required=True)
    p.add_argument("--p2", type=float, required=True)
    p.add_argument("--sideband-mhz", type=float, default=3.0)
    p.add_argument("--out", default="-")

    p = add("squeeze-spectrum", cmd_squeeze_spectrum,
            "Squeezing spectrum versus sideband frequency for given efficiencies.",
            ["f_hz", "s_linear", "s_db", "squeezing_factor_db"])
    p.add_argument("--eta-c", type=float, required=True)
    p.add_argument("--eta-d", type=float, required=True)
    p.add_argument("--tau-c", type=float, required=True, help="photon lifetime, s")
    p.add_argument("--f", type=parse_range, required=True, help="sideband grid start:stop:step, Hz")
    p.add_argument("--out", default="-")

    p = add("langevin-verify", cmd_langevin_verify,
            "Stochastic verification of the squeezing spectrum at one operating point.",
            ["freq_hz", "psd_shotnoise_units", "psd_db"])
    p.add_argument("--config", required=True)
    p.add_argument("--branch", choices=["upper", "lower"], default="lower")
    p.add_argument("--p1", type=float, default=50.0)
    p.add_argument("--p2", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--trajectories", type=int, default=200)
    p.add_argument("--segments", type=int, default=94, help="Welch segments per trajectory")
    p.add_argument("--dt-factor", type=float, default=0.01, help="time step in units of 1/gamma_total")
    p.add_argument("--out", default="-")

    p = add("shot-cal", cmd_shot_cal,
            "Simulated balanced-detection shot-noise calibration versus power.",
            ["power", "psd_level"])
    p.add_argument("--powers", default="1,2,4,8", help="comma-separated powers")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=float, default=16384.0, help="samples per power")
    p.add_argument("--out", default="-")

    p = add("fit-crossing", cmd_fit_crossing,
            "Fit the avoided-crossing model to branch resonance data "
            "(CSV: p1_mw,p2_mw,branch,resonance_rad_s or resonance_nm).",
            ["param", "value", "stderr"])
    p.add_argument("--data", required=True)
    p.add_argument("--fix", action="append", metavar="NAME=VALUE",
                   help="hold a parameter fixed (repeatable)")
    p.add_argument("--init", action="append", metavar="NAME=VALUE",
                   help="override the automatic starting value (repeatable)")
    p.add_argument("--out", default="-")

    p = add("fit-dip", cmd_fit_dip,
            "Fit one Lorentzian dip in a trace CSV (omega_rad_s,t_power or wavelength_nm,t_power).",
            ["param", "value", "stderr"])
    p.add_argument("--data", required=True)
    p.add_argument("--window", type=parse_index_range, default=None, help="index window start:stop")
    p.add_argument("--out", default="-")

    return parser


def _error(category: str, exc: Exception) -> None:
    message = " ".join(str(exc).split())
    print(f"ringlab: error: {category}: {message}", file=sys.stderr)


def run(argv=None) -> int:
    """Execute one command line; returns the process exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConfigError as exc:
        _error("config", exc)
        return 3
    except DataError as exc:
        _error("data", exc)
        return 4
    except OSError as exc:
        _error("data", exc)
        return 4
    except (FitError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        _error("numeric", exc)
        return 5


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
