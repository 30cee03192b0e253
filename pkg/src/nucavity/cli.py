"""Command-line front end: scans and analyses to CSV/text reports plus figures.

Angles are entered and printed in mrad, detunings in units of the
natural linewidth.  CSV output uses fixed 12-significant-digit
formatting and a deterministic row order, so identical inputs give
byte-identical files.  Exit codes: 0 success, 2 configuration or parse
error, 3 numerical failure; the reason is emitted as one
machine-readable line on stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .ensemble import UncalibratedError, build_sites, coupling_system
from .fields import resonant_angles
from .observables import (
    CalibrationError,
    FitConvergenceError,
    Spectrum,
    calibrate_density,
    collective_parameters,
    fano_fit,
    mode_analysis,
    spectrum_scan,
)
from .oracle import (
    CalibrationNeedsWindowError,
    FROZEN_SUSCEPTIBILITY_RATIO,
    calibrate_susceptibility,
    oracle_spectrum,
)
from .stack import CavitySpecError, parse_cavity_spec, serialize_cavity_spec

MODEL_VERSION = "green1d-poles/1.0"
ORACLE_VERSION = "parratt-lorentz/1.0"
MAX_GRID_POINTS = 10_000_000


class ConfigError(ValueError):
    pass


def _load_stack(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read cavity spec {path}: {exc}") from None
    return parse_cavity_spec(text)


def _delta_grid(args):
    if args.delta_count < 1:
        raise ConfigError("delta grid needs at least one point")
    return np.linspace(args.delta_min, args.delta_max, args.delta_count)


def _phi_grid(args):
    if args.phi is not None:
        return np.array([args.phi * 1e-3])
    if args.phi_count < 1:
        raise ConfigError("phi grid needs at least one point")
    return np.linspace(args.phi_min * 1e-3, args.phi_max * 1e-3, args.phi_count)


def _guard_grid(n_total):
    if n_total > MAX_GRID_POINTS:
        raise ConfigError(f"grid of {n_total} points exceeds the {MAX_GRID_POINTS} limit")


def _write(path, text):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(text)


def _figure_path(out):
    return str(Path(out).with_suffix(".png"))


def _pick_mode(stack, sites, mode_index):
    """Guided-mode angle used by collective/fano reports."""
    found = resonant_angles(stack, phi_range=(1e-3, 8e-3), count=6)
    if not found.angles:
        raise ConfigError("no guided modes found in 1-8 mrad")
    if mode_index is not None:
        if not 1 <= mode_index <= len(found.angles):
            raise ConfigError(f"mode index {mode_index} out of range (found {len(found.angles)})")
        return found.angles[mode_index - 1]
    best, best_rate = found.angles[0], -1.0
    for phi in found.angles:
        ngamma = collective_parameters(stack, sites[0], phi)[1]
        if ngamma > best_rate:
            best, best_rate = phi, ngamma
    return best


# ---------------------------------------------------------------------------
# subcommands

def _cmd_angles(args):
    stack = _load_stack(args.spec)
    res = resonant_angles(stack, phi_range=(args.phi_min * 1e-3, args.phi_max * 1e-3),
                          count=args.count)
    lines = [f"mode {i + 1}: {phi * 1e3:.6g} mrad" for i, phi in enumerate(res.angles)]
    if not res.found_all:
        lines.append(f"warning: only {len(res.angles)} of {args.count} minima found")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.output:
        _write(args.output, text)
    return 0


def _scan_common(args, source):
    stack = _load_stack(args.spec)
    delta = _delta_grid(args)
    phi = _phi_grid(args)
    _guard_grid(delta.size * phi.size)
    if source == "model":
        spec = spectrum_scan(stack, delta, phi, h_max=args.h_max, threads=args.threads)
    else:
        spec = oracle_spectrum(stack, delta, phi, ratio=args.ratio)
    _write(args.output, spec.to_csv())
    if not args.no_figure:
        from . import plotting
        plotting.spectrum_figure(spec, _figure_path(args.output))
    sys.stdout.write(f"wrote {args.output} ({phi.size} x {delta.size} points)\n")
    return 0


def _cmd_scan(args):
    return _scan_common(args, "model")


def _cmd_oracle(args):
    return _scan_common(args, "oracle")


def _cmd_rocking(args):
    stack = _load_stack(args.spec)
    phi = np.linspace(args.phi_min * 1e-3, args.phi_max * 1e-3, args.phi_count)
    _guard_grid(phi.size)
    spec = spectrum_scan(stack, np.array([args.delta]), phi,
                         h_max=args.h_max, threads=args.threads)
    _write(args.output, spec.to_csv())
    if not args.no_figure:
        from . import plotting
        plotting.rocking_figure(spec, _figure_path(args.output))
    sys.stdout.write(f"wrote {args.output} ({phi.size} angles)\n")
    return 0


def _cmd_collective(args):
    stack = _load_stack(args.spec)
    sites = build_sites(stack, args.h_max or 1.1)
    phi_c = args.phi * 1e-3 if args.phi is not None else _pick_mode(stack, sites, args.mode)
    window = args.window * 1e-3
    phis = np.linspace(phi_c - window, phi_c + window, args.points)
    rows = []
    for phi in phis:
        ng, ngamma = collective_parameters(stack, sites[0], float(phi))
        rows.append((phi, ng, ngamma))
    out = ["# phi_mrad, delta_phi_mrad, Ng_gamma0, Ngamma_gamma0, Fp"]
    for phi, ng, ngamma in rows:
        out.append(f"{phi * 1e3:.12g}, {(phi - phi_c) * 1e3:.12g}, {ng:.12g}, "
                   f"{ngamma:.12g}, {ngamma:.12g}")
    _write(args.output, "\n".join(out) + "\n")
    if not args.no_figure:
        from . import plotting
        dphi = (phis - phi_c) * 1e3
        plotting.collective_figure(dphi, [r[1] for r in rows], [r[2] for r in rows],
                                   _figure_path(args.output))
    sys.stdout.write(f"wrote {args.output} (center {phi_c * 1e3:.6g} mrad)\n")
    return 0


def _cmd_fano(args):
    stack = _load_stack(args.spec)
    sites = build_sites(stack, args.h_max or 1.1)
    phi_c = args.phi * 1e-3 if args.phi is not None else _pick_mode(stack, sites, args.mode)
    window = args.window * 1e-3
    phis = np.linspace(phi_c - window, phi_c + window, args.points)
    fp = np.array([collective_parameters(stack, sites[0], float(phi))[1] for phi in phis])
    fit = fano_fit(phis - phi_c, fp)
    block = (
        f"a={fit.a:.12g}\n"
        f"q={fit.q:.12g}\n"
        f"b_per_rad={fit.b:.12g}\n"
        f"phi_c_mrad={(phi_c + fit.phi_c) * 1e3:.12g}\n"
        f"window_mrad={args.window:.12g}\n"
        f"rms_residual={fit.rms_residual:.12g}\n"
    )
    _write(args.output, block)
    sys.stdout.write(block)
    if not args.no_figure:
        from . import plotting
        plotting.fano_figure((phis - phi_c) * 1e3, fp, fit, _figure_path(args.output))
    return 0


def _cmd_modes(args):
    stack = _load_stack(args.spec)
    sites = build_sites(stack, args.h_max, phi=args.phi * 1e-3)
    sys_ = coupling_system(stack, sites, args.phi * 1e-3)
    report = mode_analysis(sys_)
    lines = [f"n_modes={report.eigenvalues.size}",
             f"condition_number={report.condition_number:.6g}",
             f"condition_warning={report.condition_warning}"]
    for k, (val, ov, lab) in enumerate(
            zip(report.eigenvalues, report.drive_overlaps, report.labels)):
        lines.append(f"mode{k}.position={-val.real:.12g}")
        lines.append(f"mode{k}.half_width={val.imag:.12g}")
        lines.append(f"mode{k}.overlap={ov:.12g}")
        lines.append(f"mode{k}.label={lab}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.output:
        _write(args.output, text)
    return 0


def _cmd_compare(args):
    stack = _load_stack(args.spec)
    delta = _delta_grid(args)
    phi = _phi_grid(args)
    _guard_grid(2 * delta.size * phi.size)

    ratio = args.ratio
    if args.calibrate_at is not None:
        phi_cal = args.calibrate_at * 1e-3
        sites = build_sites(stack, args.h_max or 1.1)
        sys_ = coupling_system(stack, sites, phi_cal)
        widths = sys_.gamma0 + 2.0 * np.linalg.eigvals(sys_.gmat).imag
        ratio = calibrate_susceptibility(stack, phi_cal,
                                         target_width=float(widths.max()))

    model = spectrum_scan(stack, delta, phi, h_max=args.h_max, threads=args.threads)
    orac = oracle_spectrum(stack, delta, phi, ratio=ratio)
    base = Path(args.output)
    model_path = base.with_name(base.stem + "_model.csv")
    oracle_path = base.with_name(base.stem + "_oracle.csv")
    _write(model_path, model.to_csv())
    _write(oracle_path, orac.to_csv())

    # recompute the summary from the emitted files so it is reproducible
    m = Spectrum.from_csv(model_path.read_text())
    o = Spectrum.from_csv(oracle_path.read_text())
    diff = m.abs2 - o.abs2
    rms = float(np.sqrt(np.mean(diff ** 2)))
    contrast = float(m.abs2.max() - m.abs2.min())
    pct = 100.0 * rms / contrast if contrast > 0 else float("nan")
    summary = (f"rms={rms:.12g}\ncontrast={contrast:.12g}\n"
               f"rms_over_contrast_pct={pct:.12g}\nsusceptibility_ratio={ratio:.12g}\n")
    _write(base.with_name(base.stem + "_summary.txt"), summary)
    sys.stdout.write(summary)
    if not args.no_figure:
        from . import plotting
        plotting.compare_figure(model, orac, str(base.with_suffix(".png")))
    return 0


def _cmd_calibrate(args):
    stack = _load_stack(args.spec)
    reference = Spectrum.from_csv(Path(args.reference).read_text())
    factor, updated = calibrate_density(stack, reference, args.layer)
    lines = [f"factor={factor:.12g}"]
    for idx, lay in updated.resonant_layers():
        lines.append(f"layer{idx}.scale={lay.resonant.area_density_scale:.12g}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.output:
        _write(args.output, serialize_cavity_spec(updated))
    return 0


# ---------------------------------------------------------------------------
# parser

def _add_grid_args(p, deltas=True):
    if deltas:
        p.add_argument("--delta-min", type=float, default=-100.0)
        p.add_argument("--delta-max", type=float, default=100.0)
        p.add_argument("--delta-count", type=int, default=801)
    p.add_argument("--phi", type=float, default=None, help="single angle (mrad)")
    p.add_argument("--phi-min", type=float, default=1.0, help="grid start (mrad)")
    p.add_argument("--phi-max", type=float, default=5.0, help="grid end (mrad)")
    p.add_argument("--phi-count", type=int, default=1)


def _add_common(p, figure=True):
    p.add_argument("spec", help="cavity-spec file")
    p.add_argument("-o", "--output", required=True, help="output file path")
    p.add_argument("--h-max", type=float, default=None, help="max sub-layer thickness (nm)")
    p.add_argument("--threads", type=int, default=1)
    if figure:
        p.add_argument("--no-figure", action="store_true",
                       help="skip the PNG next to the CSV")


def build_parser():
    ap = argparse.ArgumentParser(
        prog="nucavity",
        description="Resonant x-ray scattering off thin-film cavities with nuclear layers",
    )
    ap.add_argument("--version", action="version",
                    version=f"nucavity {__version__} (model={MODEL_VERSION}, oracle={ORACLE_VERSION})")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("angles", help="locate guided-mode reflectivity minima")
    p.add_argument("spec")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--phi-min", type=float, default=1.0)
    p.add_argument("--phi-max", type=float, default=8.0)
    p.add_argument("--count", type=int, default=3)
    p.set_defaults(func=_cmd_angles)

    p = sub.add_parser("scan", help="reflectivity over (detuning, angle) grids")
    _add_common(p)
    _add_grid_args(p)
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("oracle", help="independent semiclassical scan")
    _add_common(p)
    _add_grid_args(p)
    p.add_argument("--ratio", type=float, default=FROZEN_SUSCEPTIBILITY_RATIO)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("rocking", help="|R|^2 versus angle at fixed detuning")
    _add_common(p)
    p.add_argument("--phi-min", type=float, default=1.0)
    p.add_argument("--phi-max", type=float, default=5.0)
    p.add_argument("--phi-count", type=int, default=801)
    p.add_argument("--delta", type=float, default=1e6,
                   help="fixed detuning (Gamma_0); default far off resonance")
    p.set_defaults(func=_cmd_rocking)

    p = sub.add_parser("collective", help="collective shift/decay versus angle")
    _add_common(p)
    p.add_argument("--phi", type=float, default=None, help="center angle (mrad)")
    p.add_argument("--mode", type=int, default=None, help="guided-mode index (1-based)")
    p.add_argument("--window", type=float, default=0.2, help="half window (mrad)")
    p.add_argument("--points", type=int, default=121)
    p.set_defaults(func=_cmd_collective)

    p = sub.add_parser("fano", help="fit the angular asymmetry of the enhanced decay")
    _add_common(p)
    p.add_argument("--phi", type=float, default=None, help="center angle (mrad)")
    p.add_argument("--mode", type=int, default=None)
    p.add_argument("--window", type=float, default=0.2)
    p.add_argument("--points", type=int, default=121)
    p.set_defaults(func=_cmd_fano)

    p = sub.add_parser("modes", help="collective eigenmodes at one angle")
    p.add_argument("spec")
    p.add_argument("-o", "--output", default=None)
    p.add_argument("--phi", type=float, required=True, help="angle (mrad)")
    p.add_argument("--h-max", type=float, default=None)
    p.set_defaults(func=_cmd_modes)

    p = sub.add_parser("compare", help="model vs oracle on one grid, with summary")
    _add_common(p)
    _add_grid_args(p)
    p.add_argument("--ratio", type=float, default=FROZEN_SUSCEPTIBILITY_RATIO)
    p.add_argument("--calibrate-at", type=float, default=None,
                   help="recalibrate the oracle at this angle (mrad) first")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("calibrate", help="fit resonant density scales to a reference CSV")
    p.add_argument("spec")
    p.add_argument("--reference", required=True)
    p.add_argument("--layer", type=int, default=None)
    p.add_argument("-o", "--output", default=None, help="write the updated cavity spec here")
    p.set_defaults(func=_cmd_calibrate)
    return ap


def _fail(code, reason, detail):
    detail = " ".join(str(detail).split())
    sys.stderr.write(f"nucavity: error code={code} reason={reason} detail={detail}\n")
    return code


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (CavitySpecError, ConfigError, UncalibratedError, ValueError) as exc:
        return _fail(2, "config", exc)
    except (FitConvergenceError, CalibrationError, CalibrationNeedsWindowError,
            ArithmeticError, np.linalg.LinAlgError) as exc:
        return _fail(3, "numerical", exc)


if __name__ == "__main__":
    sys.exit(main())
