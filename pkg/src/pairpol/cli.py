"""Command-line front end: batch simulation, reconstruction and spectroscopy.

Every command is a thin wrapper over the library, reads/writes the formats
in `tables`, and is deterministic for a fixed seed. Exit codes: 0 success,
2 input validation, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import tables
from .coincidence import simulate_counts
from .errors import ConvergenceError, InputError
from .jones import protocol_table, single_protocol_settings, two_protocol_settings
from .metrics import report_for
from .presets import PRESETS, get_preset
from .spectroscopy import fit_calibration, invert_histogram, simulate_delay_histogram
from .tomography import (
    MleOptions,
    bootstrap_uncertainty,
    infer_mode,
    mle_reconstruct,
    problem_from_records,
)

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NONCONVERGED = 3


def _uint64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be a 64-bit unsigned integer, got {text}")
    return value


def _load_spec(ref: str):
    if ref.lower() in PRESETS:
        return get_preset(ref)
    return tables.read_source_spec(ref)


def _protocol(name: str):
    if name == "single":
        return single_protocol_settings()
    if name == "two":
        return two_protocol_settings()
    raise InputError(f"protocol must be 'single' or 'two', got {name!r}")


def _cmd_simulate(args) -> int:
    spec = _load_spec(args.spec)
    protocol = _protocol(args.protocol)
    filters = tables.parse_filters(args.filters)
    records = simulate_counts(
        spec, protocol, filters, integration_s=args.integration, seed=args.seed
    )
    tables.write_records(args.out, records)
    print(f"wrote {len(records)} records to {args.out}")
    return EXIT_OK


def _cmd_reconstruct(args) -> int:
    records = tables.read_records(args.counts)
    mode = args.mode if args.mode != "auto" else infer_mode(records)
    problem = problem_from_records(records, mode, background_rate_hz=args.background)
    options = MleOptions(fit_background=args.fit_background)
    rho, diagnostics = mle_reconstruct(problem, options)
    stds = {}
    boot_info = {}
    if args.bootstrap > 0:
        boot = bootstrap_uncertainty(problem, args.bootstrap, seed=args.seed, options=options)
        stds = boot.stds
        boot_info = {"bootstrap": boot.to_dict()}
    report = report_for(rho, stds=stds)
    tables.write_density_matrix(args.out, rho)
    report_path = args.report or str(Path(args.out).with_suffix(".report.json"))
    tables.write_metrics_report(
        report_path, report, extra={"diagnostics": diagnostics.to_dict(), **boot_info}
    )
    print(f"wrote {args.out} and {report_path} (mode={mode}, converged={diagnostics.converged})")
    return EXIT_OK if diagnostics.converged else EXIT_NONCONVERGED


def _cmd_metrics(args) -> int:
    rho = tables.read_density_matrix(args.rho)
    tables.write_metrics_report(args.out, report_for(rho))
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_protocol(args) -> int:
    text = protocol_table(_protocol(args.protocol))
    if args.out:
        tables.atomic_write_text(args.out, text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_spectro_calibrate(args) -> int:
    points = tables.read_calibration_points(args.points)
    curve = fit_calibration(points, degree=args.degree)
    tables.write_calibration_curve(args.out, curve)
    print(f"wrote {args.out} (residual rms {curve.residual_rms:.4g} nm)")
    return EXIT_OK


def _cmd_spectro_simulate(args) -> int:
    spec = _load_spec(args.spec)
    curve = tables.read_calibration_curve(args.curve)
    hist = simulate_delay_histogram(
        spec,
        curve,
        jitter_ps=args.jitter_ps,
        n_events=args.events,
        bin_ps=args.bin_ps,
        seed=args.seed,
        filters=tables.parse_filters(args.filters),
    )
    tables.write_histogram(args.out, hist)
    print(f"wrote {args.out} ({hist.total} events in {len(hist.counts)} bins, {hist.n_dropped} dropped)")
    return EXIT_OK


def _cmd_spectro_invert(args) -> int:
    hist = tables.read_histogram(args.hist)
    curve = tables.read_calibration_curve(args.curve)
    spectrum = invert_histogram(hist, curve)
    tables.write_spectrum(args.out, spectrum)
    print(f"wrote {args.out} ({spectrum.total} counts)")
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pairpol",
        description="Photon-pair polarization tomography and spectroscopy toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate a coincidence run over a protocol")
    sim.add_argument("--spec", required=True, help="source spec file or preset name (qom-a, qom-b)")
    sim.add_argument("--protocol", default="two", choices=("single", "two"))
    sim.add_argument("--filters", default="", help="e.g. lp1550:arm1,bp1475/50:before_splitter")
    sim.add_argument("--integration", type=float, default=1.0, help="seconds per setting")
    sim.add_argument("--seed", type=_uint64, default=0)
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=_cmd_simulate)

    rec = sub.add_parser("reconstruct", help="estimate a density matrix from a count table")
    rec.add_argument("--counts", required=True, help="count-record table file")
    rec.add_argument("--mode", default="auto", choices=("auto", "heralded_single", "two_photon"))
    rec.add_argument("--background", type=float, default=0.0, help="known background rate in Hz")
    rec.add_argument("--fit-background", action="store_true", help="fit the background level too")
    rec.add_argument("--bootstrap", type=int, default=0, metavar="N", help="bootstrap resamples")
    rec.add_argument("--seed", type=_uint64, default=0, help="bootstrap seed")
    rec.add_argument("--out", required=True, help="density matrix output (JSON)")
    rec.add_argument("--report", default=None, help="metrics report path (default: <out>.report.json)")
    rec.set_defaults(func=_cmd_reconstruct)

    met = sub.add_parser("metrics", help="compute metrics for a stored density matrix")
    met.add_argument("--rho", required=True)
    met.add_argument("--out", required=True)
    met.set_defaults(func=_cmd_metrics)

    prot = sub.add_parser("protocol", help="export a projection protocol table")
    prot.add_argument("--protocol", default="two", choices=("single", "two"))
    prot.add_argument("--out", default=None)
    prot.set_defaults(func=_cmd_protocol)

    spectro = sub.add_parser("spectro", help="fiber-assisted spectroscopy pipeline")
    ssub = spectro.add_subparsers(dest="subcommand", required=True)

    cal = ssub.add_parser("calibrate", help="fit a delay-to-wavelength calibration")
    cal.add_argument("--points", required=True, help="two-column (delay_ns wavelength_nm) file")
    cal.add_argument("--degree", type=int, default=3)
    cal.add_argument("--out", required=True)
    cal.set_defaults(func=_cmd_spectro_calibrate)

    ssim = ssub.add_parser("simulate", help="simulate a dispersed delay histogram")
    ssim.add_argument("--spec", required=True)
    ssim.add_argument("--curve", required=True)
    ssim.add_argument("--jitter-ps", type=float, default=50.0)
    ssim.add_argument("--events", type=int, default=100_000)
    ssim.add_argument("--bin-ps", type=float, default=50.0)
    ssim.add_argument("--seed", type=_uint64, default=0)
    ssim.add_argument("--filters", default="")
    ssim.add_argument("--out", required=True)
    ssim.set_defaults(func=_cmd_spectro_simulate)

    sinv = ssub.add_parser("invert", help="map a delay histogram to a spectrum")
    sinv.add_argument("--hist", required=True)
    sinv.add_argument("--curve", required=True)
    sinv.add_argument("--out", required=True)
    sinv.set_defaults(func=_cmd_spectro_invert)

    srv = sub.add_parser("serve", help="run the HTTP service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)
    srv.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED


if __name__ == "__main__":
    sys.exit(main())
