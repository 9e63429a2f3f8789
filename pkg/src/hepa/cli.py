"""Command-line front end: ``hepa <command> [options]``.

Exit status is 0 on success, 2 for usage or input errors (including J values
forbidden by Bose statistics) and 3 when a numerical procedure does not
converge.  Errors go to standard error as one line

    hepa: error[<kind>]: <message>

with ``kind`` one of ``usage``, ``statistics``, ``input``, ``convergence``.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import json
import sys
from dataclasses import replace

from . import lineshift, spectra
from .basis import block, ungerade_blocks
from .constants import au_to_mhz, load_constants
from .potentials import RefinementError, adiabatic_curves, curve_metadata, write_curve_csv, write_curve_json
from .radial import GridExtensionError

EXIT_OK, EXIT_USAGE, EXIT_CONVERGENCE = 0, 2, 3

FORMATS_NOTE = "File formats are described in docs/FORMATS.md."


class UsageError(Exception):
    pass


def fmt_mhz(x):
    """MHz values carry four significant digits."""
    return None if x is None else float(f"{x:.4g}")


def fmt_a0(x):
    return None if x is None else round(float(x), 1)


def _cell(column, value):
    if value is None:
        return ""
    if isinstance(value, float) and column.endswith("_MHz"):
        return f"{value:#.4g}".rstrip(".")
    if isinstance(value, float) and column.endswith("_a0"):
        return f"{value:.1f}"
    return value


def _emit(args, rows, columns=None, doc=None):
    """Write ``rows`` (list of dicts) as CSV or ``doc`` / rows as JSON."""
    with _output(args) as out:
        if args.format == "json":
            json.dump(rows if doc is None else doc, out, indent=2)
            out.write("\n")
            return
        columns = columns or (list(rows[0]) if rows else [])
        writer = csv.DictWriter(out, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _cell(k, v) for k, v in row.items()})


@contextlib.contextmanager
def _output(args):
    if args.out is None or args.out == "-":
        yield sys.stdout
    else:
        with open(args.out, "w", newline="") as fh:
            yield fh


def _grid(args):
    grid = spectra.DEFAULT_GRID
    for name in ("r_min", "r_max"):
        value = getattr(args, name, None)
        if value is not None:
            grid = replace(grid, **{name: value})
    if getattr(args, "step", None) is not None:
        if args.step <= 0:
            raise UsageError("--step must be positive")
        grid = replace(grid, step=args.step, numerov_step=args.step)
    if not 0 < grid.r_min < grid.r_switch < grid.r_max:
        raise UsageError("grid needs 0 < r-min < 3000 < r-max")
    return grid


def _parse_block(name):
    key = name.strip()
    try:
        if key[0] == "0":
            return block(key[1], 0, key[2:] or None)
        return block(key[-1] if key[-1] in "ug" else key[1], int(key[0]))
    except (ValueError, IndexError) as exc:
        raise UsageError(f"cannot parse block {name!r}: {exc}") from exc


# ----------------------------------------------------------------- commands

def cmd_blocks(args, constants):
    rows = [{"block": b.name, "dim": b.dim, "labels": " ".join(b.labels)} for b in ungerade_blocks()]
    _emit(args, rows, ["block", "dim", "labels"])


def cmd_curves(args, constants):
    blk = _parse_block(args.block)
    curves = adiabatic_curves(blk, args.J, _grid(args).grid(), retarded=not args.no_retardation,
                              rotation=not args.no_rotation and args.J is not None, constants=constants)
    if args.curve is not None:
        if not 0 <= args.curve < len(curves):
            raise UsageError(f"block {blk.name} has curves 0..{len(curves) - 1}")
        with _output(args) as out:
            writer = write_curve_json if args.format == "json" else write_curve_csv
            writer(curves[args.curve], out, stride=args.stride)
        return
    if args.format == "json":
        doc = []
        for c in curves:
            meta = curve_metadata(c)
            well = c.well()
            meta["well"] = None if well is None else {"R_a0": fmt_a0(well[0]), "depth_MHz": fmt_mhz(au_to_mhz(well[1]))}
            doc.append(meta)
        _emit(args, [], doc=doc)
        return
    rows = []
    for c in curves:
        for i in range(0, c.r.size, args.stride):
            rows.append({
                "curve": c.curve_index,
                "asymptote_J": c.asymptote_j,
                "R_a0": fmt_a0(c.r[i]),
                "V_MHz": float(f"{au_to_mhz(c.values[i]):.6g}"),
            })
    _emit(args, rows)


def _spectrum_rows(rows, with_eps=False):
    out = []
    for r in rows:
        d = {"well": r.well, "J": r.j, "v": r.v, "E_MHz": fmt_mhz(r.energy)}
        if with_eps:
            d["eps_ret_MHz"] = fmt_mhz(r.eps_ret)
            d["eps_rad_MHz"] = fmt_mhz(r.eps_rad)
        d.update({"R_min_a0": fmt_a0(r.r_min), "R_max_a0": fmt_a0(r.r_max), "mean_R_a0": fmt_a0(r.mean_r)})
        out.append(d)
    return out


def cmd_spectrum(args, constants):
    grid = _grid(args)
    if args.eps:
        rows = spectra.spectrum_table(args.well, args.J, constants=constants, grid=grid)
    else:
        rows = spectra.compute_spectrum(args.well, args.J, retarded=not args.no_retardation,
                                        radial_correction=not args.no_radial_correction,
                                        constants=constants, grid=grid)
    _emit(args, _spectrum_rows(rows, with_eps=args.eps))


def _read_experiment(path):
    if path is None:
        return dict(spectra.TABLE_I_EXPERIMENT)
    with open(path, newline="") as fh:
        reader = csv.DictReader(line for line in fh if not line.lstrip().startswith("#"))
        missing = {"v", "energy_mhz", "error_mhz"} - set(reader.fieldnames or [])
        if missing:
            raise UsageError(f"{path}: missing columns {sorted(missing)}")
        return {int(r["v"]): (float(r["energy_mhz"]), float(r["error_mhz"])) for r in reader}


def cmd_table1(args, constants):
    experiment = _read_experiment(args.experiment)
    rows = spectra.spectrum_table("0u+", args.J, constants=constants, grid=_grid(args))
    out = []
    for r in rows:
        exp = experiment.get(r.v)
        out.append({
            "v": r.v,
            "E_exp_MHz": fmt_mhz(exp[0]) if exp else None,
            "E_exp_err_MHz": fmt_mhz(exp[1]) if exp else None,
            "E_MHz": fmt_mhz(r.energy),
            "eps_ret_MHz": fmt_mhz(r.eps_ret),
            "eps_rad_MHz": fmt_mhz(r.eps_rad),
        })
    _emit(args, out)


def cmd_fit_gamma(args, constants):
    experiment = _read_experiment(args.input)
    fit = spectra.fit_c3(experiment, well="0u+", j=args.J, constants=constants, grid=_grid(args))
    doc = {
        "c3_au": float(f"{fit.c3:.6g}"),
        "c3_err_au": float(f"{fit.c3_err:.3g}"),
        "gamma_mhz": fmt_mhz(fit.gamma_mhz),
        "gamma_err_mhz": float(f"{fit.gamma_err_mhz:.2g}"),
        "residuals_mhz": {str(v): fmt_mhz(r) for v, r in fit.residuals.items()},
        "shift_per_0.1pct_c3_mhz": {str(v): fmt_mhz(s) for v, s in fit.shifts.items()},
        "sensitivity_mhz": fmt_mhz(fit.sensitivity),
        "chi2": float(f"{fit.chi2:.4g}"),
        "iterations": fit.iterations,
    }
    if args.format == "csv":
        rows = [{"v": v, "residual_MHz": fmt_mhz(r), "shift_per_0.1pct_MHz": fmt_mhz(fit.shifts[v])}
                for v, r in fit.residuals.items()]
        with _output(args) as out:
            out.write(f"# gamma_mhz={doc['gamma_mhz']} +- {doc['gamma_err_mhz']}, c3_au={doc['c3_au']}\n")
            writer = csv.DictWriter(out, fieldnames=list(rows[0]), lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        return
    _emit(args, [], doc=doc)


def _condon_radii(args, constants):
    try:
        rows = spectra.compute_spectrum("0u+", 1, constants=constants, grid=_grid(args))
    except (GridExtensionError, RefinementError):
        return {}
    return {r.v: r.r_max for r in rows}


def _reduce_row(m, args, constants, condon):
    budget = lineshift.shift_budget(m, args.scattering_length, constants)
    row = {"v": m.v_label, "delta_MHz": fmt_mhz(m.delta_v),
           "b_MHz": fmt_mhz(lineshift.binding_energy(m, constants))}
    row.update({k.replace("_mhz", "_MHz"): fmt_mhz(v) for k, v in budget.as_dict().items()})
    row.setdefault("mean_field_bound_MHz", None)
    row["condon_radius_a0"] = fmt_a0(condon.get(m.v_label)) if m.v_label is not None else None
    return row


def cmd_reduce(args, constants):
    if (args.input is None) == (args.scan is None):
        raise UsageError("give exactly one of --in (measurements) or --scan")
    if args.scan is not None:
        if args.b0 is None or args.t_uk is None:
            raise UsageError("--scan needs --b0 and --t-uk")
        fit = lineshift.lorentzian_fit(lineshift.read_scan(args.scan))
        measurements = [lineshift.Measurement(fit.center, args.b0, args.t_uk, args.n_cm3, args.v)]
        extra = fit.as_dict()
    else:
        measurements = lineshift.read_measurements(args.input)
        extra = None
    condon = {} if args.no_condon else _condon_radii(args, constants)
    rows = [_reduce_row(m, args, constants, condon) for m in measurements]
    if extra is not None:
        for k, v in extra.items():
            rows[0][f"fit_{k}"] = float(f"{v:.6g}")
    _emit(args, rows)


def cmd_budget(args, constants):
    m = lineshift.Measurement(-1.0, args.b0, args.t_uk, args.n_cm3)
    budget = lineshift.shift_budget(m, args.scattering_length, constants)
    doc = {k: fmt_mhz(v) for k, v in budget.as_dict().items()}
    if args.mc_samples:
        mc = lineshift.thermal_average_oracle(args.t_uk, args.mc_samples, seed=args.seed)
        doc.update({
            "mc_thermal_trap_mhz": fmt_mhz(mc.trap),
            "mc_thermal_trap_err_mhz": float(f"{mc.trap_err:.2g}"),
            "mc_thermal_kinetic_mhz": fmt_mhz(mc.kinetic),
            "mc_thermal_kinetic_err_mhz": float(f"{mc.kinetic_err:.2g}"),
        })
    if args.format == "json":
        _emit(args, [], doc=doc)
    else:
        _emit(args, [{"term": k, "value": v} for k, v in doc.items()], ["term", "value"])


# ------------------------------------------------------------------ parser

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--constants", metavar="PATH",
                        help="JSON overrides: c3_au | gamma_mhz, lambda_nm, delta21_ghz, delta10_ghz, mass_u")
    common.add_argument("--format", choices=("csv", "json"),
                        help="output format (default csv; json for fit-gamma)")
    common.add_argument("--out", metavar="PATH", help="output file (default standard output)")
    common.add_argument("--seed", type=int, default=0, help="seed for Monte-Carlo steps (default 0)")

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--r-min", type=float, help="inner grid edge in bohr (default 50)")
    grid.add_argument("--r-max", type=float, help="outer grid edge in bohr (default 20000)")
    grid.add_argument("--step", type=float, help="uniform grid step in bohr (default 0.5)")

    flags = argparse.ArgumentParser(add_help=False)
    flags.add_argument("--no-retardation", action="store_true", help="use the k -> 0 dipole-dipole limit")
    flags.add_argument("--no-radial-correction", action="store_true",
                       help="drop the adiabatic <phi|d2/dR2|phi> term")

    parser = argparse.ArgumentParser(
        prog="hepa",
        description="Long-range ungerade wells of the He 2S + 2P pair: curves, spectra, fits and "
                    "photoassociation line-shift reduction. " + FORMATS_NOTE,
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    fmt = argparse.RawDescriptionHelpFormatter

    p = sub.add_parser("blocks", parents=[common], help="list ungerade symmetry blocks",
                       description="Columns: block, dim (number of Hund's case (a) states), labels.")
    p.set_defaults(func=cmd_blocks)

    p = sub.add_parser(
        "curves", parents=[common, grid], formatter_class=fmt, help="adiabatic potential curves",
        description="Adiabatic curves of one block.\n\n"
                    "CSV columns: curve (index, ordered by large-R energy), asymptote_J (2P_J limit),\n"
                    "R_a0 (bohr), V_MHz (MHz relative to the curve's own asymptote).\n"
                    "With --curve N: R_a0, V_MHz, g_per_a0sq (<phi|phi''>, 1/bohr^2), w_<label>\n"
                    "(Hund's case (a) weights, dimensionless).",
    )
    p.add_argument("--block", required=True, help="0u+, 0u-, 1u, 2u, 3u (or g blocks)")
    p.add_argument("--J", type=int, help="total angular momentum; omit for non-rotating curves")
    p.add_argument("--curve", type=int, help="dump one curve with its correction and weights")
    p.add_argument("--stride", type=int, default=20, help="output every Nth grid point (default 20)")
    p.add_argument("--no-retardation", action="store_true", help="use the k -> 0 dipole-dipole limit")
    p.add_argument("--no-rotation", action="store_true", help="drop the rotational term")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser(
        "spectrum", parents=[common, grid, flags], formatter_class=fmt, help="bound levels of a well",
        description="Bound levels of a purely long-range well.\n\n"
                    "Columns: well, J, v, E_MHz (MHz below the well's asymptote), R_min_a0, R_max_a0\n"
                    "(classical turning points, bohr), mean_R_a0 (<R>, bohr).  --eps adds\n"
                    "eps_ret_MHz and eps_rad_MHz (MHz).  Levels within 0.5 MHz of threshold are omitted.",
    )
    p.add_argument("--well", required=True, choices=sorted(spectra.WELLS))
    p.add_argument("--J", type=int, help="rotational quantum number (default: lowest allowed)")
    p.add_argument("--eps", action="store_true", help="add retardation and adiabatic-correction columns")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser(
        "table1", parents=[common, grid], formatter_class=fmt, help="0u+ theory vs experiment",
        description="0u+ levels with the measured energies.\n\n"
                    "Columns: v, E_exp_MHz, E_exp_err_MHz, E_MHz (model), eps_ret_MHz, eps_rad_MHz,\n"
                    "all in MHz.  --experiment reads a CSV with v, energy_mhz, error_mhz.",
    )
    p.add_argument("--J", type=int, default=1)
    p.add_argument("--experiment", metavar="CSV", help="measured energies (default: built-in set)")
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser(
        "fit-gamma", parents=[common, grid], formatter_class=fmt, help="fit C3 and Gamma to 0u+ energies",
        description="Weighted fit of C3 to measured 0u+ energies.\n\n"
                    "Input CSV columns: v, energy_mhz, error_mhz (MHz).  JSON keys: c3_au (atomic\n"
                    "units), gamma_mhz (Gamma/2pi, MHz), residuals_mhz (experiment - model, MHz),\n"
                    "shift_per_0.1pct_c3_mhz, sensitivity_mhz (MHz), chi2.",
    )
    p.add_argument("--in", dest="input", metavar="CSV", help="measured energies (default: built-in set)")
    p.add_argument("--J", type=int, default=1)
    p.set_defaults(func=cmd_fit_gamma, format_default="json")

    p = sub.add_parser(
        "reduce", parents=[common, grid], formatter_class=fmt, help="detunings to binding energies",
        description="Binding energies from line centres, b = delta + 2 mu B0 + 3 kB T.\n\n"
                    "--in CSV columns: v, delta_mhz (MHz), b0_gauss (G), t_uk (uK)[, n_cm3 (cm^-3)].\n"
                    "--scan CSV columns: detuning_mhz (MHz), temperature_uk (uK)[, atoms, od]; the\n"
                    "centre comes from a Lorentzian fit.  Output columns (MHz unless noted): v,\n"
                    "delta_MHz, b_MHz, zeeman_MHz, thermal_trap_MHz, thermal_kinetic_MHz, recoil_MHz,\n"
                    "doppler_width_MHz, correction_MHz, mean_field_bound_MHz, condon_radius_a0 (bohr).",
    )
    p.add_argument("--in", dest="input", metavar="CSV")
    p.add_argument("--scan", metavar="CSV")
    p.add_argument("--b0", type=float, help="trap-bottom field, Gauss (with --scan)")
    p.add_argument("--t-uk", type=float, help="temperature, uK (with --scan)")
    p.add_argument("--n-cm3", type=float, help="density, atoms/cm^3 (with --scan)")
    p.add_argument("--v", type=int, help="vibrational label (with --scan)")
    p.add_argument("--scattering-length", type=float, default=20.0, help="nm, for the mean-field bound")
    p.add_argument("--no-condon", action="store_true", help="skip the Condon-radius lookup")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser(
        "budget", parents=[common], formatter_class=fmt, help="line-shift budget",
        description="Shift and broadening terms, all in MHz.\n\n"
                    "Terms: zeeman (2 mu B0), thermal_trap and thermal_kinetic (3/2 kB T each), recoil,\n"
                    "doppler_width (rms), correction (applied sum), mean_field_bound (with --n-cm3).\n"
                    "--mc-samples adds Monte-Carlo estimates of both thermal terms and their errors.",
    )
    p.add_argument("--t-uk", type=float, required=True, help="temperature, uK")
    p.add_argument("--b0", type=float, default=0.0, help="trap-bottom field, Gauss")
    p.add_argument("--n-cm3", type=float, help="density, atoms/cm^3")
    p.add_argument("--scattering-length", type=float, default=20.0, help="nm")
    p.add_argument("--mc-samples", type=int, default=0, help="Monte-Carlo samples (>= 1e4)")
    p.set_defaults(func=cmd_budget)
    return parser


def _fail(kind, message, code):
    print(f"hepa: error[{kind}]: {message}", file=sys.stderr)
    return code


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.format is None:
        args.format = getattr(args, "format_default", "csv")
    try:
        constants = load_constants(args.constants)
        args.func(args, constants)
    except spectra.StatisticsError as exc:
        return _fail("statistics", exc, EXIT_USAGE)
    except UsageError as exc:
        return _fail("usage", exc, EXIT_USAGE)
    except (GridExtensionError, RefinementError, lineshift.FitError, spectra.PairingError,
            spectra.IllConditionedFitError) as exc:
        return _fail("convergence", exc, EXIT_CONVERGENCE)
    except (ValueError, KeyError, OSError) as exc:
        return _fail("input", exc, EXIT_USAGE)
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
