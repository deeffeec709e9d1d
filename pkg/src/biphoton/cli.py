"""Command-line front end.

    biphoton simulate CONFIG --out DIR [--seed N]
    biphoton fit CONFIG HISTOGRAM.csv --lo V --hi V [--report PATH]
    biphoton presets list
    biphoton presets show NAME

CONFIG is a scenario file or the name of a bundled preset (fig2a ... fig2d).
"""

from __future__ import annotations

import argparse
import sys
import warnings
from importlib import resources
from pathlib import Path

from .config import ConfigError, ScenarioConfig, load_config, parse_config, parse_quantity
from .detection import (
    HistogramFormatError,
    RangeWarning,
    UnmeasurableWidthError,
    detector_smear,
    read_histogram_csv,
    simulate_mca,
    width_first_zeros,
    width_fwhm,
    write_histogram_csv,
)
from .fitting import FitProblem, FreeParameter, fit, format_report
from .grids import make_grid
from .propagation import (
    DispersionBudget,
    auto_grids,
    dispersion_length,
    g1,
    g2,
    g2_farfield,
)
from .spectral import apply_filter_pair, spectral_amplitude, spectrum

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2
_SPECTRUM_ROWS = 4097


def preset_names() -> list[str]:
    folder = resources.files("biphoton") / "presets"
    return sorted(p.name[:-4] for p in folder.iterdir() if p.name.endswith(".cfg"))


def preset_text(name: str) -> str:
    return (resources.files("biphoton") / "presets" / f"{name}.cfg").read_text()


def resolve_config(name_or_path: str) -> ScenarioConfig:
    path = Path(name_or_path)
    if not path.exists() and name_or_path in preset_names():
        return parse_config(preset_text(name_or_path), f"{name_or_path}.cfg")
    return load_config(path)


def _write_curve(path: Path, header: str, x, y) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for a, b in zip(x, y):
            fh.write(f"{float(a)!r},{float(b)!r}\n")


def _write_summary(path: Path, items) -> None:
    with open(path, "w", newline="") as fh:
        for key, value in items:
            fh.write(f"{key} = {value}\n")


def _width_or_undefined(func, curve) -> str:
    try:
        return repr(float(func(curve)))
    except UnmeasurableWidthError:
        return "undefined"


def _amplitude(cfg: ScenarioConfig, fgrid):
    F = spectral_amplitude(fgrid, cfg.crystal)
    return apply_filter_pair(F, cfg.filter) if cfg.filter is not None else F


def run_scenario(cfg: ScenarioConfig, out_dir, seed: int | None = None) -> int:
    """Run the forward pipeline and write the requested curves plus ``summary.txt``."""
    if seed is not None:
        cfg = cfg.with_seed(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fgrid, tgrid = cfg.grids
    budget = cfg.budget
    B = budget.total_B

    F = _amplitude(cfg, fgrid)
    curve = g2(F, budget, tgrid)
    smeared = detector_smear(curve, cfg.detector)

    # Fourier-limited reference on its own (fine) delay grid
    f0, t0 = auto_grids(cfg.crystal, 0.0, cfg.filter)
    reference = g2(_amplitude(cfg, f0), DispersionBudget(), t0)
    tau0 = width_fwhm(reference)

    summary = [
        ("scenario", cfg.name),
        ("total_B_s2", repr(float(B))),
        ("fwhm_fourier_limit_s", repr(float(tau0))),
        ("fwhm_g2_s", _width_or_undefined(width_fwhm, curve)),
        ("first_zero_width_g2_s", _width_or_undefined(width_first_zeros, curve)),
        ("fwhm_smeared_s", _width_or_undefined(width_fwhm, smeared)),
        ("detector_fwhm_s", repr(cfg.detector.combined_fwhm)),
    ]
    if B > 0 and budget.total_length > 0:
        k2 = B / budget.total_length
        z_dis = dispersion_length(tau0, k2)
        z_max = max(z for _, z in budget.arms)
        summary += [("k2_per_arm_s2_per_m", repr(float(k2))), ("z_dis_m", repr(float(z_dis))),
                    ("z_over_z_dis", repr(float(z_max / z_dis)))]
    else:
        summary += [("z_dis_m", "undefined")]

    if "spectrum" in cfg.outputs:
        display = make_grid(fgrid.omega_max, min(fgrid.n_points, _SPECTRUM_ROWS))
        _write_curve(out / "spectrum.csv", "omega_rad_s,spectrum", display.values,
                     spectrum(_amplitude(cfg, display)))
    if "g1" in cfg.outputs:
        first = g1(_amplitude(cfg, f0), t0)
        _write_curve(out / "g1.csv", "tau_s,g1", first.tau, first.values)
    if "g2" in cfg.outputs:
        _write_curve(out / "g2.csv", "tau_s,g2", curve.tau, curve.values)
    if "g2_farfield" in cfg.outputs:
        far = g2_farfield(F, budget, tgrid)
        _write_curve(out / "g2_farfield.csv", "tau_s,g2_farfield", far.tau, far.values)
    if "smeared" in cfg.outputs:
        _write_curve(out / "smeared.csv", "tau_s,smeared", smeared.tau, smeared.values)
    if "histogram" in cfg.outputs:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RangeWarning)
            hist = simulate_mca(smeared, cfg.mca)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        write_histogram_csv(hist, out / "histogram.csv")
        summary += [("histogram_total", str(hist.total)),
                    ("fwhm_histogram_s", _width_or_undefined(width_fwhm, hist))]

    summary += [("n_omega", str(fgrid.n_points)), ("omega_max_rad_s", repr(fgrid.omega_max)),
                ("n_tau", str(tgrid.n_points)), ("tau_max_s", repr(tgrid.tau_max))]
    _write_summary(out / "summary.txt", summary)
    return EXIT_OK


def build_fit_problem(cfg: ScenarioConfig, hist, bounds) -> FitProblem:
    lengths = cfg.arm_lengths
    fixed_k2 = None
    if cfg.free_parameter is FreeParameter.D2_CRYSTAL:
        if not cfg.budget.total_length > 0:
            raise ValueError("fitting D2 needs the fibre arms in the config")
        fixed_k2 = cfg.budget.total_B / cfg.budget.total_length
    return FitProblem(hist, cfg.crystal, cfg.detector, lengths, cfg.free_parameter,
                      bounds, cfg.filter, fixed_k2)


def run_fit(cfg: ScenarioConfig, histogram_path, bounds, report_path=None) -> int:
    """Fit a histogram CSV; exit 0 if converged, 2 if not, 1 on bad input."""
    try:
        hist = read_histogram_csv(histogram_path)
    except OSError as exc:
        print(f"error: {histogram_path}: {exc.strerror}", file=sys.stderr)
        return EXIT_ERROR
    except HistogramFormatError as exc:
        print(f"error: {histogram_path}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if hist.total == 0:
        print(f"error: {histogram_path}: histogram is empty", file=sys.stderr)
        return EXIT_ERROR
    problem = build_fit_problem(cfg, hist, bounds)
    result = fit(problem)
    report = format_report(result, problem)
    sys.stdout.write(report)
    if report_path is not None:
        Path(report_path).write_text(report)
    if not result.converged:
        reason = "best value at a bound" if result.at_bound else "no significant optimum"
        print(f"fit did not converge: {reason}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _bound(text: str, free: FreeParameter) -> float:
    return parse_quantity(text, "budget" if free is FreeParameter.TOTAL_B else "gvd")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biphoton", description=__doc__.splitlines()[0] if __doc__ else None)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario and write CSV curves")
    sim.add_argument("config")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--seed", type=int, default=None, help="override mca.seed")

    fit_p = sub.add_parser("fit", help="fit total_B (or crystal D2) to a histogram CSV")
    fit_p.add_argument("config")
    fit_p.add_argument("histogram")
    fit_p.add_argument("--lo", required=True, help="lower bound, e.g. '1e-23' or '10 ps2'")
    fit_p.add_argument("--hi", required=True, help="upper bound")
    fit_p.add_argument("--report", default=None, help="also write the report to this file")

    pre = sub.add_parser("presets", help="bundled scenario files")
    pre_sub = pre.add_subparsers(dest="action", required=True)
    pre_sub.add_parser("list")
    show = pre_sub.add_parser("show")
    show.add_argument("name")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "presets":
            if args.action == "list":
                for name in preset_names():
                    cfg = parse_config(preset_text(name), f"{name}.cfg")
                    print(f"{name}\t{cfg.description}")
                return EXIT_OK
            if args.name not in preset_names():
                print(f"error: unknown preset {args.name!r}", file=sys.stderr)
                return EXIT_ERROR
            sys.stdout.write(preset_text(args.name))
            return EXIT_OK

        cfg = resolve_config(args.config)
        if args.command == "simulate":
            return run_scenario(cfg, args.out, args.seed)
        bounds = (_bound(args.lo, cfg.free_parameter), _bound(args.hi, cfg.free_parameter))
        return run_fit(cfg, args.histogram, bounds, args.report)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except MemoryError:
        print("error: out of memory; the grids for this scenario are too large", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
