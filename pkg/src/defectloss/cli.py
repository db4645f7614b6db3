"""Command-line front end.

Subcommands: compute (single material), screen (database run), chi
(mass-defect coefficient sweep), table (regenerate the reference ranked
table). Frequencies are ordinary frequencies in GHz on the command line;
defect densities require an explicit /cm3 or /m3 suffix. Exit codes:
0 success, 1 input or validation error, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .composition import FormulaError, average_atomic_mass, parse_formula
from .constants import GHZ, TWO_PI
from .materials import (DefectSpecies, HostMaterial, ValidationError,
                        as_tensor3, charge_imbalance)
from .physics import (LocalFieldModel, VelocityChoice, derive_host,
                      evaluate_loss, temperature_bound)
from .screening import (ScreenConfig, ScreeningError, emit_figure_data,
                        emit_table, format_table, host_from_record,
                        load_config, reference_database_lines, rows_as_json,
                        screen, summarize)
from .spectral import (DebyeSpectralDensity, SpectralError,
                       acoustic_limit_check, chi_sweep, load_dos_csv,
                       nu_from_dos, write_sweep_csv)

VERIFY_RTOL = 1e-10


class CliError(Exception):
    """Input or validation problem; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(message)


def _parse_defect(text: str) -> DefectSpecies:
    """`Z,N/cm3` or `Z,N/m3`; a bare density without suffix is rejected."""
    try:
        z_text, n_text = text.split(",", 1)
        z = float(z_text)
    except ValueError:
        raise CliError(f"defect must look like Z,N/cm3 - got {text!r}") from None
    n_text = n_text.strip().lower().replace("^", "")
    if n_text.endswith("/cm3"):
        scale, n_text = 1e6, n_text[:-4]
    elif n_text.endswith("/m3"):
        scale, n_text = 1.0, n_text[:-3]
    else:
        raise CliError(
            f"defect density needs an explicit /cm3 or /m3 suffix: {text!r}")
    try:
        n = float(n_text)
    except ValueError:
        raise CliError(f"cannot parse defect density in {text!r}") from None
    try:
        return DefectSpecies(z_eff=z, n_def=n * scale)
    except ValidationError as err:
        raise CliError(str(err)) from None


def _parse_eps(text: str):
    parts = [float(p) for p in text.split(",")]
    if len(parts) == 1:
        parts = parts * 3
    if len(parts) == 3:
        return as_tensor3([[parts[0], 0.0, 0.0], [0.0, parts[1], 0.0],
                           [0.0, 0.0, parts[2]]])
    if len(parts) == 9:
        return as_tensor3([parts[0:3], parts[3:6], parts[6:9]])
    raise CliError("--eps needs 1, 3 or 9 comma-separated values")


def _load_record(path: str, material_id: str | None) -> dict:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as err:
                    raise CliError(f"malformed record in {path}: {err}") from None
    if material_id is not None:
        for rec in records:
            if rec.get("material_id") == material_id:
                return rec
        raise CliError(f"no record with material_id {material_id!r} in {path}")
    if len(records) == 1:
        return records[0]
    raise CliError(f"{path} holds {len(records)} records; pick one with --id")


def _host_from_args(args) -> HostMaterial:
    if args.record:
        rec = _load_record(args.record, args.id)
        try:
            return host_from_record(rec)
        except (KeyError, TypeError, ValueError) as err:
            raise CliError(f"record is incomplete or invalid: {err}") from None

    missing = [flag for flag, value in (
        ("--formula", args.formula), ("--density-g-cm3", args.density_g_cm3),
        ("--bulk-gpa", args.bulk_gpa), ("--shear-gpa", args.shear_gpa),
        ("--eps", args.eps)) if value is None]
    if missing:
        raise CliError("missing host parameters: " + ", ".join(missing))
    if args.site_density_per_m3 is not None:
        site_density = args.site_density_per_m3
    elif args.natoms is not None and args.volume_a3 is not None:
        if args.volume_a3 <= 0:
            raise CliError("--volume-a3 must be positive")
        site_density = args.natoms / args.volume_a3 * 1e30
    else:
        raise CliError("need --site-density-per-m3 or --natoms with --volume-a3")
    return HostMaterial(
        id=args.id or args.formula,
        composition=parse_formula(args.formula),
        mass_density=args.density_g_cm3 * 1000.0,
        site_density=site_density,
        bulk_modulus=args.bulk_gpa * 1e9,
        shear_modulus=args.shear_gpa * 1e9,
        dielectric_tensor=_parse_eps(args.eps),
        band_gap_pbe=args.band_gap_pbe_ev or 0.0,
        space_group=args.space_group or "",
        centrosymmetric=bool(args.centrosymmetric),
    )


def _rel_mismatch(a: float, b: float) -> float:
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- compute

def _compute_payload(host, defects, args):
    model = LocalFieldModel.parse(args.local_field)
    velocity = VelocityChoice.parse(args.velocity)
    omega = TWO_PI * args.freq_ghz * GHZ
    derived = derive_host(host, model=model, velocity=velocity,
                          sound_velocity=args.sound_velocity)
    loss = evaluate_loss(derived, defects, omega)
    sigma_species = [d.z_eff * d.z_eff * derived.a_c * derived.a_c
                     * omega * omega for d in defects]
    return {
        "kind": "compute",
        "host": {
            "id": host.id,
            "formula": "".join(f"{el}{n if n > 1 else ''}"
                               for el, n in host.composition.items()),
            "mass_density_kg_m3": host.mass_density,
            "site_density_per_m3": host.site_density,
            "bulk_modulus_pa": host.bulk_modulus,
            "shear_modulus_pa": host.shear_modulus,
            "dielectric_tensor": [list(row) for row in host.dielectric_tensor],
            "band_gap_pbe_ev": host.band_gap_pbe,
            "space_group": host.space_group,
            "centrosymmetric": host.centrosymmetric,
        },
        "defects": [{"z_eff": d.z_eff, "n_def_per_m3": d.n_def}
                    for d in defects],
        "frequency_ghz": args.freq_ghz,
        "local_field_model": model.value,
        "velocity": velocity.value,
        "sound_velocity_m_s": args.sound_velocity,
        "derived": {
            "v_t_m_s": derived.v_t,
            "v_l_m_s": derived.v_l,
            "omega_m_rad_s": derived.omega_m,
            "omega_m_thz": derived.omega_m / TWO_PI / 1e12,
            "n_r": derived.n_r,
            "eps": derived.eps,
            "field_factor": derived.field_factor,
            "a_c_m_s": derived.a_c,
        },
        "loss": {
            "omega_rad_s": loss.omega,
            "sigma_m2": loss.sigma,
            "sigma_per_species_m2": sigma_species,
            "a_per_m": loss.a,
            "tan_delta": loss.tan_delta,
            "t_star_k": loss.t_star,
            "t_star_mk": loss.t_star * 1e3,
        },
    }


_COMPUTE_TEXT_FIELDS = (
    ("v_t_m_s", "derived"), ("v_l_m_s", "derived"),
    ("omega_m_thz", "derived"), ("n_r", "derived"),
    ("field_factor", "derived"), ("a_c_m_s", "derived"),
    ("sigma_m2", "loss"), ("a_per_m", "loss"), ("tan_delta", "loss"),
    ("t_star_mk", "loss"),
)


def _render_compute(payload: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(payload, indent=2) + "\n"
    values = {name: payload[group][name]
              for name, group in _COMPUTE_TEXT_FIELDS}
    if fmt == "csv":
        header = ",".join(values)
        row = ",".join(f"{v:.5e}" for v in values.values())
        return f"{header}\n{row}\n"
    lines = [f"{name:<14} = {value:.5e}" for name, value in values.items()]
    sigmas = payload["loss"]["sigma_per_species_m2"]
    if len(sigmas) > 1:
        for defect, sigma in zip(payload["defects"], sigmas):
            lines.append(f"{'sigma_m2':<14} = {sigma:.5e}  "
                         f"(z_eff = {defect['z_eff']:+g})")
    return "\n".join(lines) + "\n"


def _verify_compute(payload: dict) -> list[str]:
    host_d = payload["host"]
    host = HostMaterial(
        id=host_d["id"],
        composition=parse_formula(host_d["formula"]),
        mass_density=host_d["mass_density_kg_m3"],
        site_density=host_d["site_density_per_m3"],
        bulk_modulus=host_d["bulk_modulus_pa"],
        shear_modulus=host_d["shear_modulus_pa"],
        dielectric_tensor=as_tensor3(host_d["dielectric_tensor"]),
        band_gap_pbe=host_d["band_gap_pbe_ev"],
        space_group=host_d.get("space_group", ""),
        centrosymmetric=host_d.get("centrosymmetric", False),
    )
    defects = [DefectSpecies(d["z_eff"], d["n_def_per_m3"])
               for d in payload["defects"]]
    derived = derive_host(host,
                          model=LocalFieldModel.parse(payload["local_field_model"]),
                          velocity=VelocityChoice.parse(payload["velocity"]),
                          sound_velocity=payload.get("sound_velocity_m_s"))
    omega = TWO_PI * payload["frequency_ghz"] * GHZ
    loss = evaluate_loss(derived, defects, omega)
    recomputed = {
        "derived.v_t_m_s": derived.v_t,
        "derived.v_l_m_s": derived.v_l,
        "derived.omega_m_rad_s": derived.omega_m,
        "derived.n_r": derived.n_r,
        "derived.field_factor": derived.field_factor,
        "derived.a_c_m_s": derived.a_c,
        "loss.sigma_m2": loss.sigma,
        "loss.a_per_m": loss.a,
        "loss.tan_delta": loss.tan_delta,
        "loss.t_star_k": loss.t_star,
    }
    problems = []
    for dotted, fresh in recomputed.items():
        group, name = dotted.split(".")
        stored = payload[group][name]
        if _rel_mismatch(stored, fresh) > VERIFY_RTOL:
            problems.append(f"{dotted}: stored {stored!r} != recomputed {fresh!r}")
    return problems


def _cmd_compute(args) -> int:
    if args.verify:
        payload = json.loads(Path(args.verify).read_text(encoding="utf-8"))
        if payload.get("kind") != "compute":
            raise CliError(f"{args.verify} is not a compute result")
        problems = _verify_compute(payload)
        if problems:
            for p in problems:
                print(f"verify: {p}", file=sys.stderr)
            raise CliError(f"{len(problems)} field(s) failed verification")
        print(f"verified {args.verify}: all derived fields match "
              f"within {VERIFY_RTOL:g}")
        return 0

    if args.freq_ghz is None:
        raise CliError("--freq-ghz is required")
    if not (math.isfinite(args.freq_ghz) and args.freq_ghz > 0):
        raise CliError("--freq-ghz must be positive")

    host_given = args.record or args.formula
    if args.temp_check and not host_given:
        t_star = temperature_bound(TWO_PI * args.freq_ghz * GHZ)
        _emit(f"{'t_star_mk':<14} = {t_star * 1e3:.5e}\n", args.output)
        return 0

    defects = [_parse_defect(d) for d in args.defect or []]
    if not defects:
        raise CliError("at least one --defect Z,N/cm3 is required")
    host = _host_from_args(args)

    imbalance = charge_imbalance(defects)
    if imbalance != 0.0:
        print(f"warning: defect population is not charge neutral "
              f"(sum N*Z = {imbalance:.3e} /m^3)", file=sys.stderr)

    payload = _compute_payload(host, defects, args)
    _emit(_render_compute(payload, args.format), args.output)
    return 0


# ---------------------------------------------------------------- screen

def _verify_screen(payload: dict) -> list[str]:
    cfg_d = payload["config"]
    overrides = {
        key: tuple(DefectSpecies(z_eff=z, n_def=n * 1e6) for z, n in pairs)
        for key, pairs in cfg_d.get("defect_overrides", {}).items()}
    cfg = ScreenConfig(
        frequency_ghz=cfg_d["frequency_ghz"],
        n_def_per_cm3=cfg_d["n_def_per_cm3"],
        z_eff=cfg_d["z_eff"],
        local_field_model=LocalFieldModel.parse(cfg_d["local_field_model"]),
        velocity=VelocityChoice.parse(cfg_d["velocity"]),
        gap_threshold_ev=cfg_d.get("gap_threshold_ev", 0.0),
        defect_overrides=overrides,
    )
    from .physics import (absorption_coefficient, characteristic_parameter,
                          local_field_factor, loss_tangent)
    from .screening import corrected_gap

    problems = []
    for row in payload["rows"]:
        if "exclusion_reason" in row:
            continue
        omega_m = row["omega_m_thz"] * 1e12 * TWO_PI
        n_r = row["n_r"]
        mass = average_atomic_mass(parse_formula(row["formula"]))
        field = local_field_factor(n_r * n_r, cfg.local_field_model)
        a_c = characteristic_parameter(n_r, mass, omega_m, field)
        population = cfg.population_for(row["material_id"])
        a = absorption_coefficient(population, a_c, cfg.omega)
        tan_d = loss_tangent(a, n_r, cfg.omega)
        e_g = corrected_gap(row["band_gap_pbe_ev"])
        for name, stored, fresh in (("a_c_m_s", row["a_c_m_s"], a_c),
                                    ("tan_delta", row["tan_delta"], tan_d),
                                    ("e_g_corrected_ev",
                                     row["e_g_corrected_ev"], e_g)):
            if _rel_mismatch(stored, fresh) > VERIFY_RTOL:
                problems.append(
                    f"{row['material_id']}.{name}: stored {stored!r} "
                    f"!= recomputed {fresh!r}")
    return problems


def _cmd_screen(args) -> int:
    if args.verify:
        payload = json.loads(Path(args.verify).read_text(encoding="utf-8"))
        if "rows" not in payload or "config" not in payload:
            raise CliError(f"{args.verify} is not a screen result")
        problems = _verify_screen(payload)
        if problems:
            for p in problems:
                print(f"verify: {p}", file=sys.stderr)
            raise CliError(f"{len(problems)} field(s) failed verification")
        print(f"verified {args.verify}: all derived fields match "
              f"within {VERIFY_RTOL:g}")
        return 0

    if not args.database:
        raise CliError("--database is required")
    cfg = load_config(args.config) if args.config else ScreenConfig()
    try:
        with open(args.database, "r", encoding="utf-8") as fh:
            lines = [line for line in fh if line.strip()]
    except OSError as err:
        raise CliError(f"cannot read database: {err}") from None

    rows = screen(lines, cfg, workers=args.workers)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    if args.format == "json":
        table_path = out_dir / "screen_results.json"
        table_path.write_text(json.dumps(rows_as_json(rows, cfg), indent=2)
                              + "\n", encoding="utf-8")
    else:
        suffix = "csv" if args.format == "csv" else "txt"
        table_path = out_dir / f"ranked_table.{suffix}"
        emit_table(rows, table_path, fmt=args.format)
    emit_figure_data(rows, out_dir / "ac_vs_debye_frequency.csv",
                     out_dir / "ac_vs_band_gap.csv")
    written = [table_path, out_dir / "ac_vs_debye_frequency.csv",
               out_dir / "ac_vs_band_gap.csv"]
    if not args.no_figures:
        from .figures import render_scatter_figures
        written += render_scatter_figures(rows, out_dir)

    summary = summarize(rows)
    print(" ".join(f"{key}={value}" for key, value in summary.items()))
    if args.verbose:
        for path in written:
            print(f"wrote {path}", file=sys.stderr)
    return 0


# ------------------------------------------------------------------- chi

def _cmd_chi(args) -> int:
    if args.debye and args.dos:
        raise CliError("--debye and --dos are mutually exclusive")
    if args.debye:
        density = DebyeSpectralDensity(args.omega_m)
    elif args.dos:
        omega, rho = load_dos_csv(args.dos)
        density = nu_from_dos(omega, rho, interpolation=args.interpolation)
    else:
        raise CliError("need --debye or --dos PATH")
    if not args.eps_mass < 1.0:
        raise CliError("--eps-mass must be < 1")

    mu_max = density.mu_max
    if args.z is not None:
        z_values = [args.z]
    else:
        z_lo = args.z_min if args.z_min is not None else 1e-3 * mu_max
        z_hi = args.z_max if args.z_max is not None else (1 - 1e-3) * mu_max
        if not 0 < z_lo <= z_hi:
            raise CliError("need 0 < z-min <= z-max")
        z_values = np.linspace(z_lo, z_hi, args.points).tolist()

    rows = chi_sweep(density, args.eps_mass, args.n_atoms, z_values)
    try:
        limit = acoustic_limit_check(density, args.eps_mass, args.n_atoms)
    except SpectralError as err:
        limit = None
        print(f"warning: acoustic limit not extrapolated: {err}",
              file=sys.stderr)

    if args.output:
        write_sweep_csv(args.output, rows, limit)
    else:
        sys.stdout.write("z,chi2_times_Na,pv_value\n")
        for z, chi2_na, pv in rows:
            sys.stdout.write(f"{z:.10e},{chi2_na:.10e},{pv:.10e}\n")
        if limit is not None:
            sys.stdout.write(f"# acoustic_limit,{limit[0]:.10e},"
                             f"error_estimate,{limit[1]:.3e}\n")
    return 0


# ----------------------------------------------------------------- table

def _cmd_table(args) -> int:
    rows = screen(reference_database_lines(), ScreenConfig())
    _emit(format_table(rows, args.format), args.output)
    return 0


# ------------------------------------------------------------------ main

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="defectloss",
                     description="Microwave dielectric loss from charged "
                                 "defects, and materials screening")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="loss figures for one material")
    p.add_argument("--record", help="JSONL database file holding the host")
    p.add_argument("--id", help="material_id to pick from --record")
    p.add_argument("--formula")
    p.add_argument("--density-g-cm3", type=float)
    p.add_argument("--natoms", type=int)
    p.add_argument("--volume-a3", type=float)
    p.add_argument("--site-density-per-m3", type=float)
    p.add_argument("--bulk-gpa", type=float)
    p.add_argument("--shear-gpa", type=float)
    p.add_argument("--eps", help="dielectric tensor: 1, 3 or 9 values")
    p.add_argument("--band-gap-pbe-ev", type=float)
    p.add_argument("--space-group")
    p.add_argument("--centrosymmetric", action="store_true")
    p.add_argument("--defect", action="append",
                   help="Z,N with /cm3 or /m3 suffix; repeatable")
    p.add_argument("--freq-ghz", type=float)
    p.add_argument("--local-field", default="onsager")
    p.add_argument("--velocity", default="transverse")
    p.add_argument("--sound-velocity", type=float,
                   help="override the elastic-constant sound velocity (m/s)")
    p.add_argument("--temp-check", action="store_true",
                   help="print the temperature bound only")
    p.add_argument("--format", choices=("text", "csv", "json"),
                   default="text")
    p.add_argument("--output")
    p.add_argument("--verify", help="recheck a previously saved JSON result")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=_cmd_compute)

    p = sub.add_parser("screen", help="run the database screen")
    p.add_argument("--database", help="line-delimited JSON export")
    p.add_argument("--config", help="key-value screen configuration file")
    p.add_argument("--out-dir", default=".")
    p.add_argument("--format", choices=("csv", "text", "json"), default="csv")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--no-figures", action="store_true",
                   help="skip the rendered scatter plots")
    p.add_argument("--verify", help="recheck a previously saved JSON result")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=_cmd_screen)

    p = sub.add_parser("chi", help="mass-defect coefficient sweep")
    p.add_argument("--debye", action="store_true",
                   help="use the analytic Debye spectrum")
    p.add_argument("--omega-m", type=float, default=1.0,
                   help="Debye cutoff in rad/s (default 1, so z is in "
                        "units of omega_m^2)")
    p.add_argument("--dos", help="CSV of omega_rad_per_s,rho_per_rad_per_s")
    p.add_argument("--interpolation", choices=("pchip", "linear"),
                   default="pchip")
    p.add_argument("--eps-mass", type=float, required=True)
    p.add_argument("--n-atoms", type=int, default=1)
    p.add_argument("--z", type=float, help="single squared frequency")
    p.add_argument("--z-min", type=float)
    p.add_argument("--z-max", type=float)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("--output")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=_cmd_chi)

    p = sub.add_parser("table",
                       help="regenerate the reference ranked table")
    p.add_argument("--format", choices=("csv", "text"), default="csv")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_table)
    return parser


def _merge_defect_flags(argv: list[str]) -> list[str]:
    # argparse reads a negative charge ("-3,1e18/cm3") as an option string;
    # fold the value into --defect=... so the documented syntax works
    merged = []
    i = 0
    while i < len(argv):
        if argv[i] == "--defect" and i + 1 < len(argv):
            merged.append(f"--defect={argv[i + 1]}")
            i += 2
        else:
            merged.append(argv[i])
            i += 1
    return merged


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = parser.parse_args(_merge_defect_flags(list(argv)))
        return args.func(args)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except (ValidationError, FormulaError, SpectralError, ScreeningError,
            ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 2
    except Exception as err:  # pragma: no cover - defensive
        print(f"internal error: {type(err).__name__}: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
