"""Command-line surface for the simulation and analysis pipeline.

Subcommands: ``multiport`` (build and dump a unitary), ``scan`` (noiseless
probability scans, classical or quantum), ``simulate`` (Poisson-noisy
synthetic counts), ``fit`` (singles + product fringe fits), ``sensitivity``
(super-sensitivity report), ``plot`` (CSV to SVG) and ``pipeline``
(config-driven simulate -> fit -> sensitivity -> plot).

Angles are taken in degrees on the command line and converted to radians
internally.  All outputs are deterministic under a fixed seed and written
atomically (temp file + rename).  Exit codes: 0 success, 1 usage or config
error, 2 numerical failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import tempfile
import warnings
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, List, Optional, Sequence

import numpy as np

from . import classical, fringefit, metrology, multiport, quantum, svgplot
from .classical import CsvFormatError, FringeDataset, SaturationWarning, ScanConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3

CSV_VERSION = classical.CSV_VERSION

# per-window means per detector, keyed by mode count; the N = 6 entry is
# tuned so the mean six-fold coincidence rate comes out near 2.7 per
# one-second-equivalent point, which drives the total mean photons per
# window past the saturation bound of 1 (the simulate command warns)
DEFAULT_MEAN_PHOTONS = {2: 0.05, 3: 0.12, 4: 0.2, 6: 0.275}


class UsageError(ValueError):
    """Bad flags or configuration content."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on usage errors; the contract wants 1
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------------------
# Small helpers
# ---------------------------------------------------------------------------

def atomic_write_text(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".noonlab-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _phi_grid(start_deg: float, stop_deg: float, points: int) -> np.ndarray:
    if points < 2:
        raise UsageError("grid needs at least 2 points")
    return np.radians(np.linspace(start_deg, stop_deg, points, endpoint=False))


def _multiport_from_args(args) -> multiport.ModeUnitary:
    if getattr(args, "config", None):
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                spec = json.load(fh)
        except OSError:
            raise
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config}: {exc}") from exc
        try:
            return multiport.multiport_from_spec(spec)
        except (ValueError, KeyError, TypeError) as exc:
            if isinstance(exc, multiport.NotUnitaryError):
                raise
            raise UsageError(f"config {args.config}: {exc}") from exc
    if args.dim is None:
        raise UsageError("either --dim or --config is required")
    if args.kind == "symmetric":
        return multiport.symmetric_multiport(args.dim)
    return multiport.asymmetric_multiport(args.dim, math.radians(args.offset_deg))


def _add_multiport_flags(parser):
    parser.add_argument("--dim", type=int, help="mode count N")
    parser.add_argument("--kind", choices=["symmetric", "asymmetric"],
                        default="symmetric", help="canonical multiport family")
    parser.add_argument("--offset-deg", type=float, default=0.0,
                        help="singles-fringe offset for the asymmetric multiport")
    parser.add_argument("--config", help="JSON multiport description (see README)")


def _add_grid_flags(parser, points_default=360):
    parser.add_argument("--start-deg", type=float, default=0.0)
    parser.add_argument("--stop-deg", type=float, default=360.0)
    parser.add_argument("--points", type=int, default=points_default,
                        help="grid points in [start, stop)")


def _parallel_map(fn, items: Sequence, jobs: int) -> List:
    if jobs <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _read_dataset(path: str) -> FringeDataset:
    with open(path, "r", encoding="utf-8") as fh:
        return classical.read_dataset_csv(fh)


# ---------------------------------------------------------------------------
# multiport
# ---------------------------------------------------------------------------

def cmd_multiport(args) -> int:
    unitary = _multiport_from_args(args)
    lines = [f"# {CSV_VERSION} multiport dim={unitary.dim}"]
    header = []
    for j in range(unitary.dim):
        header += [f"re{j + 1}", f"im{j + 1}"]
    lines.append(",".join(header))
    for row in unitary.matrix:
        cells = []
        for value in row:
            cells += [repr(float(value.real)), repr(float(value.imag))]
        lines.append(",".join(cells))
    lines.append(f"# unitarity_residual = {unitary.unitarity_residual():.3e}")
    atomic_write_text(args.output, "\n".join(lines) + "\n")
    print(f"wrote {unitary.dim}x{unitary.dim} multiport to {args.output}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# scan
# ---------------------------------------------------------------------------

def cmd_scan(args) -> int:
    unitary = _multiport_from_args(args)
    phis = _phi_grid(args.start_deg, args.stop_deg, args.points)
    n = unitary.dim
    if args.experiment == "classical":
        rows = _parallel_map(lambda p: classical.singles_probabilities(unitary, p),
                             list(phis), args.jobs)
        lines = [f"# {CSV_VERSION} classical-scan dim={n}"]
        lines.append(",".join(["phi_rad"] + [f"p{k + 1}" for k in range(n)] + ["coinc"]))
        for phi, probs in zip(phis, rows):
            cells = [repr(float(phi))]
            cells += [repr(float(p)) for p in probs]
            cells.append(repr(float(np.prod(probs))))
            lines.append(",".join(cells))
        atomic_write_text(args.output, "\n".join(lines) + "\n")
        print(f"wrote classical scan ({args.points} points, N={n}) to {args.output}")
        return EXIT_OK

    # quantum-forward / quantum-reversed: both directions are always
    # evaluated so the scan doubles as a time-reversal consistency check
    chunks = np.array_split(phis, max(args.jobs, 1))
    fwd = np.concatenate(_parallel_map(lambda c: quantum.forward_scan(unitary, c),
                                       [c for c in chunks if len(c)], args.jobs))
    rev = np.concatenate(_parallel_map(lambda c: quantum.reversed_scan(unitary, c),
                                       [c for c in chunks if len(c)], args.jobs))
    diff = np.abs(fwd - rev)
    lines = [f"# {CSV_VERSION} quantum-scan dim={n} direction={args.experiment}"]
    lines.append("phi_rad,forward,reversed,abs_diff")
    for phi, f, r, d in zip(phis, fwd, rev, diff):
        lines.append(",".join([repr(float(phi)), repr(float(f)),
                               repr(float(r)), repr(float(d))]))
    lines.append(f"# max_abs_diff = {float(diff.max()):.3e}")
    atomic_write_text(args.output, "\n".join(lines) + "\n")
    print(f"wrote quantum scan ({args.points} points, N={n}) to {args.output}; "
          f"max |forward - reversed| = {float(diff.max()):.3e}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _scan_config(args, n: int) -> ScanConfig:
    mean = args.mean_photons
    if mean is None:
        mean = DEFAULT_MEAN_PHOTONS.get(n, min(0.8 / n, 0.2))
    phis = _phi_grid(args.start_deg, args.stop_deg, args.points)
    if args.windows < 1:
        raise UsageError("--windows must be at least 1")
    return ScanConfig(phis=tuple(float(p) for p in phis), mean_photons=mean,
                      windows=args.windows, seed=args.seed)


def cmd_simulate(args) -> int:
    unitary = _multiport_from_args(args)
    cfg = _scan_config(args, unitary.dim)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SaturationWarning)
        dataset = classical.simulate_counts(unitary, cfg)
    for warning in caught:
        print(f"warning: {warning.message}", file=sys.stderr)
    buffer = io.StringIO()
    classical.write_dataset_csv(dataset, buffer)
    atomic_write_text(args.output, buffer.getvalue())
    print(f"wrote {len(cfg.phis)} points (N={unitary.dim}, "
          f"mean_photons={cfg.mean_photons:g}, windows={cfg.windows}, "
          f"seed={cfg.seed}) to {args.output}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------

def _fit_dataset(dataset: FringeDataset, n_fringes: int):
    """Singles fits (frequency 1) followed by the product fit seeded from
    them.  Returns (singles_fits, product_fit_or_partial, converged)."""
    singles_fits = []
    for k in range(dataset.detectors):
        counts = dataset.singles[:, k].astype(float)
        singles_fits.append(fringefit.fit_single_sinusoid(dataset.phis, counts))
    init = [(f.offset, f.visibility, f.phase) for f in singles_fits]
    try:
        product = fringefit.fit_product_fringes(
            dataset.phis, dataset.coincidences.astype(float), n_fringes, init=init)
        return singles_fits, product, True
    except fringefit.FitConvergenceError as exc:
        return singles_fits, exc.result, False


def _fit_report_lines(singles_fits, product, converged) -> List[str]:
    lines = [f"# {CSV_VERSION} fit-report", "parameter,value,sigma"]
    for k, f in enumerate(singles_fits, start=1):
        lines.append(f"singles{k}_offset,{f.offset!r},{f.offset_sigma!r}")
        lines.append(f"singles{k}_visibility,{f.visibility!r},{f.visibility_sigma!r}")
        lines.append(f"singles{k}_phase_rad,{f.phase!r},{f.phase_sigma!r}")
        lines.append(f"singles{k}_reduced_chi2,{f.reduced_chi2!r},")
    for i in range(product.n_fringes):
        j = i + 1
        lines.append(f"fringe{j}_offset,{float(product.offsets[i])!r},"
                     f"{float(product.offset_sigmas[i])!r}")
        lines.append(f"fringe{j}_visibility,{float(product.visibilities[i])!r},"
                     f"{float(product.visibility_sigmas[i])!r}")
        lines.append(f"fringe{j}_phase_rad,{float(product.phases[i])!r},"
                     f"{float(product.phase_sigmas[i])!r}")
        if product.at_bound[i]:
            lines.append(f"fringe{j}_visibility_at_bound,1,")
    for i, spacing in enumerate(product.phase_spacings(), start=1):
        lines.append(f"spacing{i}_{i + 1}_rad,{float(spacing)!r},")
        lines.append(f"spacing{i}_{i + 1}_deg,{math.degrees(spacing)!r},")
    lines.append(f"product_reduced_chi2,{product.reduced_chi2!r},")
    lines.append(f"product_iterations,{product.iterations},")
    lines.append(f"product_converged,{1 if converged else 0},")
    return lines


def _overlay_lines(dataset: FringeDataset, product) -> List[str]:
    curves, scales = fringefit.extract_singles_overlay(
        product, dataset.phis, dataset.singles)
    model = product.model(dataset.phis)
    n = product.n_fringes
    lines = [f"# {CSV_VERSION} fit-overlay dim={n}"]
    lines.append(",".join(["phi_rad", "coinc_model"]
                          + [f"overlay{k + 1}" for k in range(n)]))
    for i, phi in enumerate(dataset.phis):
        cells = [repr(float(phi)), repr(float(model[i]))]
        cells += [repr(float(curves[k, i])) for k in range(n)]
        lines.append(",".join(cells))
    lines.append("# overlay_scales = " + ",".join(repr(float(s)) for s in scales))
    return lines


def cmd_fit(args) -> int:
    dataset = _read_dataset(args.input)
    n_fringes = args.fringes if args.fringes else dataset.detectors
    if n_fringes != dataset.detectors:
        raise CsvFormatError(
            f"dataset has {dataset.detectors} detectors, requested {n_fringes} fringes")
    singles_fits, product, converged = _fit_dataset(dataset, n_fringes)
    atomic_write_text(args.report,
                      "\n".join(_fit_report_lines(singles_fits, product, converged)) + "\n")
    if args.overlay:
        atomic_write_text(args.overlay,
                          "\n".join(_overlay_lines(dataset, product)) + "\n")
    visibilities = ", ".join(f"{v:.4f}" for v in product.visibilities)
    print(f"product fit: reduced chi2 = {product.reduced_chi2:.4g}, "
          f"visibilities = [{visibilities}]")
    if not converged:
        print("fit did not converge; partial report written", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


# ---------------------------------------------------------------------------
# sensitivity
# ---------------------------------------------------------------------------

def cmd_sensitivity(args) -> int:
    try:
        inp = metrology.SensitivityInput(
            n_photons=args.n,
            visibility=args.visibility,
            efficiency=args.efficiency,
            delta_a=args.delta_a,
            phi=math.radians(args.phi_deg) if args.phi_deg is not None else None,
        )
        report = metrology.sensitivity_report(inp)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    lines = [f"# {CSV_VERSION} sensitivity-report"]
    lines.extend(report.lines())
    lines.append(f"nondeterministic_preparation_efficiency = "
                 f"{metrology.preparation_efficiency(args.n) if args.n >= 2 else 1.0:.6g}")
    lines.append(f"nondeterministic_supersensitivity_possible = "
                 f"{'yes' if args.n >= 2 and metrology.nondeterministic_supersensitivity_possible(args.n) else 'no'}")
    lines.append(f"multi_exposure_visibility = "
                 f"{metrology.multi_exposure_visibility(args.n):.6g}")
    if args.wavelength_nm is not None:
        lam = metrology.equivalent_wavelength(args.wavelength_nm, args.n)
        lines.append(f"equivalent_wavelength_nm = {lam:.6g}")
    text = "\n".join(lines) + "\n"
    if args.output:
        atomic_write_text(args.output, text)
    print(text, end="")
    return EXIT_OK


# ---------------------------------------------------------------------------
# plot
# ---------------------------------------------------------------------------

def _load_table(path: str):
    """Read any versioned noonlab CSV into (schema, header, columns)."""
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("#"):
            raise CsvFormatError(f"{path}: missing version comment line")
        tag = first[1:].strip()
        if not tag.startswith(CSV_VERSION):
            raise CsvFormatError(f"{path}: unsupported version {tag!r}")
        schema = tag[len(CSV_VERSION):].strip().split(" ")[0]
        header = fh.readline().strip().split(",")
        if len(header) < 2:
            raise CsvFormatError(f"{path}: malformed header")
        rows = []
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cells = line.split(",")
            if len(cells) != len(header):
                raise CsvFormatError(f"{path}: ragged row")
            rows.append([float(c) for c in cells])
    if not rows:
        raise CsvFormatError(f"{path}: no data rows")
    data = np.array(rows)
    return schema, header, {name: data[:, i] for i, name in enumerate(header)}


def cmd_plot(args) -> int:
    schema, header, columns = _load_table(args.input)
    x_name = header[0]
    x = columns[x_name]
    series = []
    color_index = 0
    for name in header[1:]:
        if name.startswith("sigma_"):
            continue
        yerr = columns.get(f"sigma_{name}")
        color = svgplot.PALETTE[color_index % len(svgplot.PALETTE)]
        color_index += 1
        series.append(svgplot.Series(
            x=x, y=columns[name], yerr=yerr, label=name, color=color,
            line=True, points=yerr is not None))
    svg = svgplot.render_chart(series, title=f"{schema}: {os.path.basename(args.input)}",
                               xlabel=x_name, ylabel="value")
    atomic_write_text(args.output, svg)
    print(f"wrote {args.output}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

def cmd_pipeline(args) -> int:
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {args.config}: {exc}") from exc
    try:
        mp_spec = cfg["multiport"]
        grid = cfg.get("grid", {})
        counts = cfg.get("counts", {})
        sens = cfg.get("sensitivity", {})
        outdir = cfg.get("outputs", {}).get("directory", "noonlab-run")
    except (TypeError, AttributeError) as exc:
        raise UsageError(f"config {args.config}: malformed structure") from exc

    try:
        unitary = multiport.multiport_from_spec(mp_spec)
    except (ValueError, KeyError, TypeError) as exc:
        if isinstance(exc, multiport.NotUnitaryError):
            raise
        raise UsageError(f"config {args.config}: {exc}") from exc
    n = unitary.dim
    phis = _phi_grid(float(grid.get("start_deg", 0.0)),
                     float(grid.get("stop_deg", 360.0)),
                     int(grid.get("points", 36 * n)))
    mean = counts.get("mean_photons")
    if mean is None:
        mean = DEFAULT_MEAN_PHOTONS.get(n, min(0.8 / n, 0.2))
    scan_cfg = ScanConfig(phis=tuple(float(p) for p in phis),
                          mean_photons=float(mean),
                          windows=int(counts.get("windows", 200_000)),
                          seed=int(counts.get("seed", 0)))

    os.makedirs(outdir, exist_ok=True)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SaturationWarning)
        dataset = classical.simulate_counts(unitary, scan_cfg)
    for warning in caught:
        print(f"warning: {warning.message}", file=sys.stderr)

    buffer = io.StringIO()
    classical.write_dataset_csv(dataset, buffer)
    atomic_write_text(os.path.join(outdir, "dataset.csv"), buffer.getvalue())

    singles_fits, product, converged = _fit_dataset(dataset, n)
    atomic_write_text(os.path.join(outdir, "fit_report.txt"),
                      "\n".join(_fit_report_lines(singles_fits, product, converged)) + "\n")
    atomic_write_text(os.path.join(outdir, "overlay.csv"),
                      "\n".join(_overlay_lines(dataset, product)) + "\n")

    # headline visibility: single sinusoid at frequency N on the coincidences
    headline = fringefit.fit_single_sinusoid(
        dataset.phis, dataset.coincidences.astype(float), frequency=float(n))
    inp = metrology.SensitivityInput(
        n_photons=n,
        visibility=min(headline.visibility, 1.0),
        efficiency=float(sens.get("efficiency", 1.0)),
        delta_a=float(sens.get("delta_a", metrology.DEFAULT_DELTA_A)),
    )
    report = metrology.sensitivity_report(inp)
    lines = [f"# {CSV_VERSION} sensitivity-report"]
    lines.extend(report.lines())
    wavelength = sens.get("wavelength_nm")
    if wavelength is not None:
        lines.append(f"equivalent_wavelength_nm = "
                     f"{metrology.equivalent_wavelength(float(wavelength), n):.6g}")
    atomic_write_text(os.path.join(outdir, "sensitivity.txt"), "\n".join(lines) + "\n")

    coinc_series = svgplot.Series(
        x=dataset.phis, y=dataset.coincidences.astype(float),
        yerr=dataset.coincidence_sigma, label="coincidences",
        color=svgplot.PALETTE[0], line=False, points=True)
    model_series = svgplot.Series(
        x=dataset.phis, y=product.model(dataset.phis),
        label="product fit", color=svgplot.PALETTE[4])
    svg = svgplot.render_chart([coinc_series, model_series],
                               title=f"N={n} coincidence fringe",
                               xlabel="phi_rad", ylabel="counts")
    atomic_write_text(os.path.join(outdir, "plot.svg"), svg)

    print(f"pipeline outputs in {outdir}: dataset.csv, fit_report.txt, "
          f"overlay.csv, sensitivity.txt, plot.svg")
    if not converged:
        print("fit did not converge", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="noonlab",
                     description="Multiport phase super-resolution toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("multiport", parents=[], help="build a multiport unitary")
    _add_multiport_flags(p)
    p.add_argument("--output", required=True, help="matrix CSV (re,im cell pairs)")
    p.set_defaults(func=cmd_multiport)

    p = sub.add_parser("scan", help="noiseless probability scan over phase")
    p.add_argument("--experiment",
                   choices=["classical", "quantum-forward", "quantum-reversed"],
                   default="classical")
    _add_multiport_flags(p)
    _add_grid_flags(p)
    p.add_argument("--jobs", type=int, default=1, help="parallel scan workers")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("simulate", help="Poisson-noisy synthetic counts")
    _add_multiport_flags(p)
    _add_grid_flags(p, points_default=144)
    p.add_argument("--mean-photons", type=float, default=None,
                   help="per-detector mean photons per window "
                        "(default depends on N; see README)")
    p.add_argument("--windows", type=int, default=200_000,
                   help="coincidence windows per grid point")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit singles and product fringes to a dataset")
    p.add_argument("--input", required=True, help="fringe-dataset CSV")
    p.add_argument("--fringes", type=int, default=None,
                   help="fringe count N (default: detector count)")
    p.add_argument("--report", required=True, help="fit report path")
    p.add_argument("--overlay", default=None, help="model-curve CSV path")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sensitivity", help="phase super-sensitivity report")
    p.add_argument("--n", type=int, required=True, help="photons per trial")
    p.add_argument("--visibility", type=float, required=True)
    p.add_argument("--efficiency", type=float, default=1.0)
    p.add_argument("--delta-a", type=float, default=metrology.DEFAULT_DELTA_A)
    p.add_argument("--phi-deg", type=float, default=None,
                   help="operating phase (default: minimum-uncertainty point)")
    p.add_argument("--wavelength-nm", type=float, default=None,
                   help="also report the equivalent wavelength")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser("plot", help="render a noonlab CSV as a standalone SVG")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("pipeline", help="config-driven simulate -> fit -> report")
    p.add_argument("--config", required=True, help="JSON pipeline config (see README)")
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (multiport.NotUnitaryError, quantum.PermanentSizeError,
            quantum.HeraldError, fringefit.DegenerateDataError,
            fringefit.FitConvergenceError, np.linalg.LinAlgError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CsvFormatError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
