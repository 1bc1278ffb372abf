"""Command-line entry point: ``dpk <subcommand> [options]``.

Exit status is 0 on success, 1 when a computation is rejected and 2 for
usage or input-format errors.  Data go to standard output (or ``--output``)
and every diagnostic to standard error.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import kinetics, levels, lineshape, photophysics, spinham
from .casestudy import FILES, packaged
from .constants import NUCLEAR_G
from .errors import DpkError, ParseError
from .ingest import read_grid, read_manifest, read_phonons, read_structure
from .report import Report, Table, emit_report


class UsageError(Exception):
    pass


def _input(args, attr: str, key: str, bundled: bool = False) -> Path:
    """Explicit path, else the file of ``key`` in ``--fixtures``, else a packaged copy."""
    value = getattr(args, attr)
    if value is not None:
        path = Path(value)
    elif args.fixtures is not None:
        path = Path(args.fixtures) / FILES[key]
    elif bundled:
        path = packaged(FILES[key])
    else:
        flag = "--" + attr.replace("_", "-")
        raise UsageError(f"{flag} is required (or pass --fixtures DIR)")
    if not path.is_file():
        raise UsageError(f"no such file: {path}")
    return path


def _read(reader, path: Path, *args):
    try:
        return reader(path, *args)
    except ParseError as exc:
        exc.source = str(path)
        raise


def _vector(text: str) -> np.ndarray:
    try:
        v = np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y,z, got {text!r}") from None
    if v.shape != (3,):
        raise argparse.ArgumentTypeError(f"expected three comma-separated numbers, got {text!r}")
    return v


def _mode(text: str) -> tuple[float, float]:
    try:
        freq, s = (float(x) for x in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected MEV:S, got {text!r}") from None
    return freq, s


def _pair(text: str) -> tuple[str, str]:
    parts = text.split("-", 1)
    if len(parts) != 2 or not all(parts):
        raise argparse.ArgumentTypeError(f"expected a pair such as T0-T+, got {text!r}")
    return parts[0], parts[1]


# ---------------------------------------------------------------------------
# subcommands


def cmd_lineshape(args) -> Report:
    if args.mode:
        freqs, s = zip(*args.mode)
        source = lineshape.HuangRhysDecomposition.from_factors(freqs, s)
    else:
        ground = _read(read_structure, _input(args, "ground", "ground"))
        excited = _read(read_structure, _input(args, "excited", "excited"))
        basis = _read(read_phonons, _input(args, "phonons", "phonons"), args.drop_zero_modes)
        disp = lineshape.mass_weighted_displacement(ground, excited)
        source = lineshape.partial_hr_factors(disp, basis)
    grid = lineshape.EnergyGrid(step=None if args.step_mev is None else args.step_mev * 1e-3)
    spectrum = lineshape.generating_function_spectrum(
        source,
        args.ezpl_ev,
        temperature=args.temperature_k,
        gamma_zpl=args.zpl_width_mev,
        grid=grid,
        broadening=args.broadening,
    )
    side = spectrum.peak_energy(hi=args.ezpl_ev - 3.0 * args.zpl_width_mev * 1e-3)
    scalars = {
        "S_total": spectrum.s_total,
        "debye_waller": spectrum.debye_waller,
        "zpl_energy_eV": spectrum.e_zpl,
        "zpl_width_meV": spectrum.gamma_zpl,
        "temperature_K": spectrum.temperature,
        "sideband_peak_eV": side,
        "spectrum_area": spectrum.integral(),
    }
    positive = spectrum.energies > 0
    rows = list(zip(spectrum.energies[positive].tolist(), spectrum.intensities[positive].tolist()))
    return Report(
        scalars,
        [Table(["energy_eV", "intensity_per_eV"], rows, "spectrum")],
        [f"zpl_broadening = {spectrum.broadening}"],
    )


def _optics_scalars(e_zpl, mu, n_d, tau_pl=None) -> dict:
    gamma, tau = photophysics.radiative_rate(e_zpl, mu, n_d)
    out = {"gamma_rad_per_s": gamma, "tau_rad_s": tau if isinstance(tau, float) else str(tau)}
    if tau_pl is not None:
        if not isinstance(tau, float):
            raise DpkError("quantum yield undefined for a vanishing dipole")
        out["quantum_yield"] = photophysics.quantum_yield(tau, tau_pl)
    return out


def cmd_lifetime(args) -> Report:
    scalars = _optics_scalars(args.ezpl_ev, args.dipole_debye, args.n, args.tau_pl_s)
    scalars.update(zpl_energy_eV=args.ezpl_ev, dipole_D=args.dipole_debye, refractive_index=args.n)
    return Report(scalars)


def cmd_dipole(args) -> Report:
    psi_i = _read(read_grid, _input(args, "initial", "orbital_initial"))
    psi_f = _read(read_grid, _input(args, "final", "orbital_final"))
    mu = photophysics.transition_dipole_grid(psi_i, psi_f)
    scalars = {
        "mu_x_D": float(mu.vector[0]),
        "mu_y_D": float(mu.vector[1]),
        "mu_z_D": float(mu.vector[2]),
        "mu_D": mu.magnitude,
    }
    if args.ezpl_ev is not None:
        scalars.update(_optics_scalars(args.ezpl_ev, mu.magnitude, args.n))
    return Report(scalars)


def cmd_selection(args) -> Report:
    if (args.initial is None) != (args.final is None):
        raise UsageError("give both --initial and --final, or neither for the full table")
    if args.initial is not None:
        pairs = [(args.initial, args.final)]
    else:
        pairs = [(a, b) for a in photophysics.Irrep for b in photophysics.Irrep]
    rows = []
    for a, b in pairs:
        try:
            verdict = photophysics.dipole_allowed(a, b)
        except ValueError:
            raise UsageError(f"unknown C2v irrep in {a!r}/{b!r}; use A1, A2, B1 or B2") from None
        rows.append([str(verdict.initial), str(verdict.final), verdict.allowed,
                     ",".join(verdict.polarizations) or "-"])
    return Report(tables=[Table(["initial_irrep", "final_irrep", "allowed", "polarization"], rows)])


def _tensor_table(t: np.ndarray, title: str) -> Table:
    return Table(["x_MHz", "y_MHz", "z_MHz"], [list(map(float, r)) for r in t], title)


def cmd_zfs(args) -> Report:
    rho = _read(read_grid, _input(args, "density", "triplet"))
    zfs = spinham.zfs_from_spin_density(rho, cutoff=args.cutoff_a, check_convergence=not args.no_check)
    w, axes = zfs.principal()
    scalars = {"D_MHz": zfs.D, "E_MHz": zfs.E}
    if not args.no_check:
        scalars["relative_error"] = spinham.zfs_error_estimate(rho, args.cutoff_a)[1]
    principal = Table(
        ["label", "value_MHz", "axis_x", "axis_y", "axis_z"],
        [[name, float(w[k]), *map(float, axes[:, k])] for k, name in enumerate(("Dxx", "Dyy", "Dzz"))],
        "principal",
    )
    notes = ["convention: Dzz largest in magnitude, D = 3/2 Dzz, x and y chosen so E = (Dxx - Dyy)/2 >= 0"]
    return Report(scalars, [_tensor_table(zfs.tensor, "tensor"), principal], notes)


def cmd_hyperfine(args) -> Report:
    rho = _read(read_grid, _input(args, "density", "doublet"))
    if args.isotope not in NUCLEAR_G:
        raise UsageError(f"unknown isotope {args.isotope!r}; known: {', '.join(NUCLEAR_G)}")
    nucleus = spinham.Nucleus.of(args.isotope, args.nucleus_a)
    hf = spinham.hyperfine_from_spin_density(rho, nucleus, exclusion_radius=args.exclusion_a)
    a = hf.principal_values()
    scalars = {"a_iso_MHz": hf.a_iso, "A_xx_MHz": a[0], "A_yy_MHz": a[1], "A_zz_MHz": a[2]}
    return Report(
        scalars,
        [_tensor_table(hf.tensor, "tensor"), _tensor_table(hf.dipolar, "dipolar")],
        [f"nucleus = {args.isotope} at {' '.join(f'{x:.6g}' for x in nucleus.position)} A"],
    )


def _levels(args):
    zfs = spinham.ZfsTensor.from_DE(args.d_mhz, args.e_mhz)
    return spinham.triplet_levels(zfs, args.field_mt)


def _line_table(lines, only_allowed: bool) -> Table:
    rows = [[ln.frequency, ln.intensity, "allowed" if ln.allowed else "forbidden"]
            for ln in lines if ln.allowed or not only_allowed]
    return Table(["freq_MHz", "intensity", "flag"], rows, "transitions")


def cmd_spin_levels(args) -> Report:
    lv = _levels(args)
    levels_table = Table(["index", "energy_MHz"], [[k, float(e)] for k, e in enumerate(lv.energies)], "levels")
    lines = spinham.odmr_frequencies(lv)
    return Report({"eigenvalue_sum_MHz": float(lv.energies.sum())}, [levels_table, _line_table(lines, True)])


def cmd_odmr(args) -> Report:
    return Report(tables=[_line_table(spinham.odmr_frequencies(_levels(args)), False)])


def cmd_isotope(args) -> Report:
    p = spinham.isotope_risk(args.sites, args.abundance)
    return Report({"probability": p, "abundance": args.abundance, "sites": sum(args.sites)})


def cmd_levels(args) -> Report:
    manifest = _read(read_manifest, _input(args, "manifest", "manifest", bundled=True))
    e_f = args.fermi_ev
    rows = [[e.label, e.charge, levels.formation_energy(manifest, e.label, e_f)] for e in manifest.entries]
    charges = sorted(manifest.charges(), reverse=True)
    trans = []
    for hi, lo in zip(charges, charges[1:]):
        tl = levels.transition_level(manifest, hi, lo)
        trans.append([tl.label, tl.position, tl.below_cbm(manifest.gap)])
    return Report(
        {"fermi_level_eV": e_f, "gap_eV": manifest.gap},
        [
            Table(["entry", "charge_e", "formation_energy_eV"], rows, "formation"),
            Table(["level", "above_Ev_eV", "below_Ec_eV"], trans, "transition_levels"),
        ],
    )


def cmd_ctl_diagram(args) -> Report:
    manifest = _read(read_manifest, _input(args, "manifest", "manifest", bundled=True))
    diagram = levels.ctl_diagram(manifest, args.gap_ev, args.resolution_ev)
    head = ", ".join(f"{lv.label} {lv.position:.6g}" for lv in diagram.levels) or "none"
    rows = [[float(x), int(q), float(e)] for x, q, e in zip(diagram.fermi, diagram.charge, diagram.energy)]
    return Report(
        tables=[Table(["E_F_eV", "charge_e", "E_f_min_eV"], rows)],
        notes=[f"levels: {head}", f"gap_eV = {diagram.gap:.6g}"],
    )


def cmd_koopmans(args) -> Report:
    if args.eps_homo_ev is not None and args.e_n_ev is not None and args.e_n_minus_1_ev is not None:
        value = levels.non_koopmans_energy(args.eps_homo_ev, args.e_n_ev, args.e_n_minus_1_ev)
    elif args.n_entry and args.n_minus_1_entry:
        manifest = _read(read_manifest, _input(args, "manifest", "manifest", bundled=True))
        value = levels.koopmans_check(manifest, args.n_entry, args.n_minus_1_entry, args.eps_homo_ev)
    else:
        raise UsageError(
            "give --eps-homo-ev with --e-n-ev and --e-n-minus-1-ev, or --n-entry and --n-minus-1-entry"
        )
    return Report({"non_koopmans_eV": value})


def _notes(net: kinetics.RateNetwork) -> list[str]:
    return [line.removeprefix("# ") for line in net.header().splitlines()]


def _network(args) -> kinetics.RateNetwork:
    return kinetics.build_network(_read(kinetics.read_rates, _input(args, "rates", "rates", bundled=True)))


def cmd_kinetics(args) -> Report:
    net = _network(args)
    drive = {args.drive: args.drive_per_s} if args.drive else None
    if args.duration_s is None:
        p = kinetics.steady_state(net, args.power, drive)
        rows = [[s, float(x)] for s, x in zip(net.states, p)]
        scalars = {"power": args.power, "pl_rate_per_s": net.gamma_rad * float(p[net.bright])}
        return Report(scalars, [Table(["state", "population"], rows, "steady_state")], _notes(net))
    initial = np.zeros(len(net.states))
    initial[0] = 1.0
    times = np.linspace(0.0, args.duration_s, args.samples)
    traj = kinetics.integrate(net, initial, args.duration_s, args.power, drive, times=times)
    rows = [[float(t), *map(float, p)] for t, p in zip(traj.times, traj.populations)]
    return Report(
        {"power": args.power},
        [Table(["time_s", *(f"p_{s}" for s in net.states)], rows, "trajectory")],
        _notes(net),
    )


def cmd_pl_curve(args) -> Report:
    net = _network(args)
    powers = np.geomspace(args.min_power, args.max_power, args.points)
    curve = kinetics.pl_curve(net, powers)
    rows = [[float(p), float(r)] for p, r in zip(curve.power, curve.pl)]
    return Report(tables=[Table(["power", "PL_rate_per_s"], rows)], notes=_notes(net))


def cmd_odmr_contrast(args) -> Report:
    net = _network(args)
    c = kinetics.odmr_contrast(net, args.pair, args.power, args.drive_per_s)
    return Report({"contrast": c, "power": args.power, "pair": "-".join(args.pair)}, notes=_notes(net))


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--fixtures", metavar="DIR", help="directory holding the case-study inputs")
    common.add_argument("--format", choices=("plain", "table"), default="plain")
    common.add_argument("--output", "-o", metavar="PATH", help="write data here instead of stdout")

    parser = argparse.ArgumentParser(prog="dpk", description="Point-defect photophysics toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")

    def add(name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        p.set_defaults(func=func)
        return p

    p = add("lineshape", cmd_lineshape, "PL lineshape from geometries and phonons")
    p.add_argument("--ground", metavar="FILE")
    p.add_argument("--excited", metavar="FILE")
    p.add_argument("--phonons", metavar="FILE")
    p.add_argument("--mode", type=_mode, action="append", metavar="MEV:S",
                   help="single mode with energy (meV) and Huang-Rhys factor; repeatable")
    p.add_argument("--ezpl-ev", type=float, required=True)
    p.add_argument("--temperature-k", type=float, default=0.0)
    p.add_argument("--zpl-width-mev", type=float, default=1.0)
    p.add_argument("--step-mev", type=float)
    p.add_argument("--broadening", choices=("gaussian", "lorentzian"), default="gaussian")
    p.add_argument("--drop-zero-modes", action="store_true")

    p = add("lifetime", cmd_lifetime, "radiative rate and lifetime")
    p.add_argument("--ezpl-ev", type=float, required=True)
    p.add_argument("--dipole-debye", type=float, required=True)
    p.add_argument("--n", type=float, required=True, help="refractive index")
    p.add_argument("--tau-pl-s", type=float, help="measured PL lifetime for the quantum yield")

    p = add("dipole", cmd_dipole, "transition dipole of two orbital grids")
    p.add_argument("--initial", metavar="FILE")
    p.add_argument("--final", metavar="FILE")
    p.add_argument("--ezpl-ev", type=float)
    p.add_argument("--n", type=float, default=1.0, help="refractive index")

    p = add("selection", cmd_selection, "C2v electric-dipole selection rules")
    p.add_argument("--initial", metavar="IRREP")
    p.add_argument("--final", metavar="IRREP")

    p = add("zfs", cmd_zfs, "zero-field splitting from a triplet spin density")
    p.add_argument("--density", metavar="FILE")
    p.add_argument("--cutoff-a", type=float, default=0.0)
    p.add_argument("--no-check", action="store_true", help="skip the resolution-halving error check")

    p = add("hyperfine", cmd_hyperfine, "hyperfine tensor of one nucleus")
    p.add_argument("--density", metavar="FILE")
    p.add_argument("--isotope", default="13C")
    p.add_argument("--nucleus-a", type=_vector, default=np.zeros(3), metavar="X,Y,Z")
    p.add_argument("--exclusion-a", type=float)

    for name, func, text in (
        ("spin-levels", cmd_spin_levels, "triplet sublevels and allowed transitions"),
        ("odmr", cmd_odmr, "all ODMR lines with selection flags"),
    ):
        p = add(name, func, text)
        p.add_argument("--d-mhz", type=float, required=True)
        p.add_argument("--e-mhz", type=float, default=0.0)
        p.add_argument("--field-mt", type=_vector, default=np.zeros(3), metavar="X,Y,Z")

    p = add("isotope", cmd_isotope, "probability of a spin-carrying isotope on listed sites")
    p.add_argument("--abundance", type=float, required=True)
    p.add_argument("--sites", type=int, nargs="+", required=True, metavar="N")

    p = add("levels", cmd_levels, "formation energies and transition levels")
    p.add_argument("--manifest", metavar="FILE")
    p.add_argument("--fermi-ev", type=float, default=0.0)

    p = add("ctl-diagram", cmd_ctl_diagram, "stable charge state versus Fermi level")
    p.add_argument("--manifest", metavar="FILE")
    p.add_argument("--gap-ev", type=float)
    p.add_argument("--resolution-ev", type=float, default=0.01)

    p = add("koopmans", cmd_koopmans, "generalized Koopmans check")
    p.add_argument("--manifest", metavar="FILE")
    p.add_argument("--n-entry")
    p.add_argument("--n-minus-1-entry")
    p.add_argument("--eps-homo-ev", type=float)
    p.add_argument("--e-n-ev", type=float)
    p.add_argument("--e-n-minus-1-ev", type=float)

    for name, func, text in (
        ("kinetics", cmd_kinetics, "steady state or time trace of the optical cycle"),
        ("pl-curve", cmd_pl_curve, "PL rate versus pump power"),
        ("odmr-contrast", cmd_odmr_contrast, "relative PL change under microwave drive"),
    ):
        p = add(name, func, text)
        p.add_argument("--rates", metavar="FILE")
        if name == "pl-curve":
            p.add_argument("--min-power", type=float, default=0.01)
            p.add_argument("--max-power", type=float, default=100.0)
            p.add_argument("--points", type=int, default=41)
        else:
            p.add_argument("--power", type=float, default=1.0)
            p.add_argument("--drive-per-s", type=float)
        if name == "kinetics":
            p.add_argument("--drive", type=_pair, metavar="T0-T+")
            p.add_argument("--duration-s", type=float)
            p.add_argument("--samples", type=int, default=101)
        if name == "odmr-contrast":
            p.add_argument("--pair", type=_pair, default=("T0", "T+"), metavar="T0-T+")
    return parser


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {category.__name__}: {message}", file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "drive", None) and args.drive_per_s is None:
        parser.error("--drive needs --drive-per-s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = _show_warning
            text = emit_report(args.func(args), args.format)
    except UsageError as exc:
        print(f"dpk {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except ParseError as exc:
        where = getattr(exc, "source", None)
        prefix = f"{where}: " if where else ""
        print(f"dpk {args.command}: {type(exc).__name__}: {prefix}{exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"dpk {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except DpkError as exc:
        print(f"dpk {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if args.output:
        Path(args.output).write_text(text)
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # reader closed early (e.g. piped into head); silence the flush at exit
            sys.stdout = open(os.devnull, "w")
    return 0


if __name__ == "__main__":
    sys.exit(main())
