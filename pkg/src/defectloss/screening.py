"""Materials-database screening: ingest line-delimited JSON records,
filter, compute per-host loss figures, rank by the characteristic
absement, and emit delimited tables and scatter data.

Input schema (one JSON object per line): material_id, formula,
spacegroup_symbol, is_centrosymmetric, band_gap_pbe_ev, is_magnetic,
density_g_per_cm3, natoms, volume_angstrom3; optional
total_magnetization_mu_b, bulk_modulus_vrh_gpa, shear_modulus_vrh_gpa,
dielectric_total (3x3), dielectric_electronic (3x3). Missing optional
fields map to the matching exclusion reason; anything else unreadable is
InvalidData. Exclusion never aborts a run.
"""

from __future__ import annotations

import json
import multiprocessing
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from typing import Iterable, NamedTuple, Sequence

from .composition import FormulaError, average_mass_of, composition_of
from .constants import TWO_PI
from .materials import (DefectSpecies, HostMaterial, as_tensor3, validate)
from .physics import (LocalFieldModel, VelocityChoice, _derive_unchecked,
                      evaluate_loss)

# Morales-Garcia correction: semi-local gaps land systematically low and
# nearly linearly in the true gap.
GAP_SLOPE = 1.355
GAP_INTERCEPT = 0.916


class ScreeningError(ValueError):
    """Raised for unusable databases or configs (not for bad records)."""


class ExclusionReason(str, Enum):
    NO_GAP = "NoGap"
    MAGNETIC = "Magnetic"
    MISSING_ELASTIC = "MissingElastic"
    MISSING_DIELECTRIC = "MissingDielectric"
    INVALID_DATA = "InvalidData"


def reference_database_lines() -> list[str]:
    """The bundled 18-material reference database (JSON lines)."""
    path = resources.files("defectloss").joinpath(
        "data/reference_materials.jsonl")
    return [line for line in path.read_text(encoding="utf-8").splitlines()
            if line.strip()]


def corrected_gap(e_g_pbe: float) -> float:
    """Empirically corrected band gap in eV."""
    if e_g_pbe < 0:
        raise ValueError(f"band gap must be >= 0, got {e_g_pbe!r}")
    return GAP_SLOPE * e_g_pbe + GAP_INTERCEPT


@dataclass(frozen=True)
class ScreenConfig:
    frequency_ghz: float = 4.5
    n_def_per_cm3: float = 1e18
    z_eff: float = 1.0
    local_field_model: LocalFieldModel = LocalFieldModel.ONSAGER
    velocity: VelocityChoice = VelocityChoice.TRANSVERSE
    gap_threshold_ev: float = 0.0
    magnetization_threshold_mu_b: float = 1e-3
    dielectric_source: str = "total"  # or "electronic"
    # per-material populations overriding the uniform (z_eff, n_def) one;
    # values are tuples of DefectSpecies, keyed by material_id
    defect_overrides: dict = field(default_factory=dict)

    @property
    def omega(self) -> float:
        return TWO_PI * self.frequency_ghz * 1e9

    def default_population(self) -> tuple[DefectSpecies, ...]:
        return (DefectSpecies(z_eff=self.z_eff,
                              n_def=self.n_def_per_cm3 * 1e6),)

    def population_for(self, material_id: str) -> tuple[DefectSpecies, ...]:
        return self.defect_overrides.get(material_id,
                                         self.default_population())


def _strip_comment(line: str) -> str:
    in_string = False
    for i, ch in enumerate(line):
        if ch == '"':
            in_string = not in_string
        elif ch == "#" and not in_string:
            return line[:i]
    return line


def _parse_config_value(raw: str):
    raw = raw.strip()
    if raw.startswith('"') and raw.endswith('"') and len(raw) >= 2:
        return raw[1:-1]
    if raw in ("true", "false"):
        return raw == "true"
    if raw.startswith("["):
        try:
            return json.loads(raw)
        except json.JSONDecodeError:
            raise ScreeningError(f"cannot parse config array {raw!r}") from None
    try:
        return float(raw)
    except ValueError:
        raise ScreeningError(f"cannot parse config value {raw!r}") from None


def load_config(path) -> ScreenConfig:
    """Read the key-value (TOML-style) screen configuration.

    Recognized keys: frequency_ghz, n_def_per_cm3, z_eff,
    local_field_model, velocity, gap_threshold_ev,
    magnetization_threshold_mu_b, dielectric_source, plus a
    [defect_overrides] table of `material_id = [[z_eff, n_per_cm3], ...]`
    entries.
    """
    scalars: dict = {}
    overrides: dict = {}
    section = ""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = _strip_comment(line).strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip()
                if section != "defect_overrides":
                    raise ScreeningError(
                        f"unknown config section [{section}] (line {lineno})")
                continue
            if "=" not in line:
                raise ScreeningError(f"malformed config line {lineno}: {line!r}")
            key, raw = line.split("=", 1)
            key = key.strip().strip('"')
            value = _parse_config_value(raw)
            if section == "defect_overrides":
                try:
                    overrides[key] = tuple(
                        DefectSpecies(z_eff=float(z), n_def=float(n) * 1e6)
                        for z, n in value)
                except (TypeError, ValueError):
                    raise ScreeningError(
                        f"override for {key!r} must be a list of "
                        "[z_eff, n_per_cm3] pairs") from None
            else:
                scalars[key] = value

    cfg = ScreenConfig()
    known = {}
    for key, value in scalars.items():
        if key == "local_field_model":
            known[key] = LocalFieldModel.parse(str(value))
        elif key == "velocity":
            known[key] = VelocityChoice.parse(str(value))
        elif key == "dielectric_source":
            if value not in ("total", "electronic"):
                raise ScreeningError(
                    f"dielectric_source must be total|electronic, got {value!r}")
            known[key] = value
        elif key in ("frequency_ghz", "n_def_per_cm3", "z_eff",
                     "gap_threshold_ev", "magnetization_threshold_mu_b"):
            known[key] = float(value)
        else:
            raise ScreeningError(f"unknown config key {key!r}")
    cfg = replace(cfg, defect_overrides=overrides, **known)
    if cfg.frequency_ghz <= 0:
        raise ScreeningError("frequency_ghz must be positive")
    if cfg.n_def_per_cm3 < 0:
        raise ScreeningError("n_def_per_cm3 must be >= 0")
    return cfg


class ScreeningRow(NamedTuple):
    """One output record; exactly one of the computed block and
    exclusion_reason is populated."""

    material_id: str
    formula: str
    space_group: str
    centrosymmetric: bool | None
    omega_m_thz: float | None
    n_r: float | None
    a_c: float | None
    tan_delta: float | None
    e_g_corrected: float | None
    exclusion_reason: str | None
    band_gap_pbe: float | None = None


def _excluded(rec: dict | None, reason: ExclusionReason,
              fallback_id: str) -> ScreeningRow:
    rec = rec or {}
    return ScreeningRow(
        material_id=str(rec.get("material_id", fallback_id)),
        formula=str(rec.get("formula", "")),
        space_group=str(rec.get("spacegroup_symbol", "")),
        centrosymmetric=None, omega_m_thz=None, n_r=None, a_c=None,
        tan_delta=None, e_g_corrected=None,
        exclusion_reason=reason.value)


_REQUIRED_NUMBERS = ("band_gap_pbe_ev", "density_g_per_cm3",
                     "volume_angstrom3")
_REQUIRED_STRINGS = ("material_id", "formula", "spacegroup_symbol")
_REQUIRED_BOOLS = ("is_centrosymmetric", "is_magnetic")


def host_from_record(rec: dict, dielectric_source: str = "total") -> HostMaterial:
    """Build the SI-unit host record; raises on structural problems."""
    composition = composition_of(rec["formula"])
    volume = float(rec["volume_angstrom3"])
    natoms = rec["natoms"]
    if volume <= 0 or natoms <= 0:
        raise ValueError("cell volume and atom count must be positive")
    tensor_key = ("dielectric_total" if dielectric_source == "total"
                  else "dielectric_electronic")
    return HostMaterial(
        id=str(rec["material_id"]),
        composition=composition,
        mass_density=float(rec["density_g_per_cm3"]) * 1000.0,
        site_density=float(natoms) / volume * 1e30,
        bulk_modulus=float(rec["bulk_modulus_vrh_gpa"]) * 1e9,
        shear_modulus=float(rec["shear_modulus_vrh_gpa"]) * 1e9,
        dielectric_tensor=as_tensor3(rec[tensor_key]),
        band_gap_pbe=float(rec["band_gap_pbe_ev"]),
        space_group=str(rec["spacegroup_symbol"]),
        centrosymmetric=bool(rec["is_centrosymmetric"]),
        magnetic=bool(rec["is_magnetic"]),
    )


def apply_filters(rec: dict, cfg: ScreenConfig):
    """The published selection: gapped, non-magnetic, elastic and
    dielectric data present, record internally consistent.

    Returns a validated HostMaterial or an ExclusionReason.
    """
    for key in _REQUIRED_STRINGS:
        if not isinstance(rec.get(key), str) or not rec[key]:
            return ExclusionReason.INVALID_DATA
    for key in _REQUIRED_BOOLS:
        if not isinstance(rec.get(key), bool):
            return ExclusionReason.INVALID_DATA
    for key in _REQUIRED_NUMBERS:
        if not isinstance(rec.get(key), (int, float)) or isinstance(rec[key], bool):
            return ExclusionReason.INVALID_DATA
    natoms = rec.get("natoms")
    if not isinstance(natoms, int) or isinstance(natoms, bool):
        return ExclusionReason.INVALID_DATA

    if rec["band_gap_pbe_ev"] <= cfg.gap_threshold_ev:
        return ExclusionReason.NO_GAP

    magnetization = rec.get("total_magnetization_mu_b", 0.0)
    if not isinstance(magnetization, (int, float)) or isinstance(magnetization, bool):
        return ExclusionReason.INVALID_DATA
    if rec["is_magnetic"] or abs(magnetization) > cfg.magnetization_threshold_mu_b:
        return ExclusionReason.MAGNETIC

    if not (isinstance(rec.get("bulk_modulus_vrh_gpa"), (int, float))
            and isinstance(rec.get("shear_modulus_vrh_gpa"), (int, float))):
        return ExclusionReason.MISSING_ELASTIC

    tensor_key = ("dielectric_total" if cfg.dielectric_source == "total"
                  else "dielectric_electronic")
    if rec.get(tensor_key) is None:
        return ExclusionReason.MISSING_DIELECTRIC

    try:
        host = host_from_record(rec, cfg.dielectric_source)
        mass_avg = average_mass_of(rec["formula"])
    except (FormulaError, ValueError, TypeError, KeyError):
        return ExclusionReason.INVALID_DATA
    if validate(host, mass_avg=mass_avg):
        return ExclusionReason.INVALID_DATA
    return host


def process_record(line: str, cfg: ScreenConfig, fallback_id: str) -> ScreeningRow:
    """One database line to one output row; never raises on record content."""
    try:
        rec = json.loads(line)
        if not isinstance(rec, dict):
            raise ValueError("record is not an object")
    except ValueError:
        return _excluded(None, ExclusionReason.INVALID_DATA, fallback_id)

    outcome = apply_filters(rec, cfg)
    if isinstance(outcome, ExclusionReason):
        return _excluded(rec, outcome, fallback_id)

    host = outcome
    try:
        # apply_filters already validated; skip the repeat inside derive_host
        derived = _derive_unchecked(host, cfg.local_field_model, cfg.velocity,
                                    None, average_mass_of(rec["formula"]))
        result = evaluate_loss(derived, cfg.population_for(host.id), cfg.omega)
    except ValueError:
        return _excluded(rec, ExclusionReason.INVALID_DATA, fallback_id)

    return ScreeningRow(
        material_id=host.id,
        formula=str(rec["formula"]),
        space_group=host.space_group,
        centrosymmetric=host.centrosymmetric,
        omega_m_thz=derived.omega_m / TWO_PI / 1e12,
        n_r=derived.n_r,
        a_c=derived.a_c,
        tan_delta=result.tan_delta,
        e_g_corrected=corrected_gap(host.band_gap_pbe),
        exclusion_reason=None,
        band_gap_pbe=host.band_gap_pbe,
    )


_WORKER_CFG: ScreenConfig | None = None


def _worker_init(cfg: ScreenConfig) -> None:
    global _WORKER_CFG
    _WORKER_CFG = cfg


def _worker_process(item: tuple[int, str]) -> ScreeningRow:
    index, line = item
    return process_record(line, _WORKER_CFG, f"line-{index}")


def screen(lines: Iterable[str], cfg: ScreenConfig,
           workers: int | None = None) -> list[ScreeningRow]:
    """Screen a database given as an iterable of JSON lines.

    Returns every input record exactly once: included rows first, ranked
    ascending by a_c with ties broken by material_id, then exclusions in
    input order. Output is identical for any worker count.
    """
    items = list(enumerate(lines, 1))
    if workers and workers > 1 and len(items) > 1:
        with multiprocessing.Pool(workers, initializer=_worker_init,
                                  initargs=(cfg,)) as pool:
            rows = pool.map(_worker_process, items,
                            chunksize=max(1, len(items) // (workers * 8)))
    else:
        rows = [process_record(line, cfg, f"line-{i}") for i, line in items]

    included = [r for r in rows if r.exclusion_reason is None]
    excluded = [r for r in rows if r.exclusion_reason is not None]
    included.sort(key=lambda r: (r.a_c, r.material_id))
    return included + excluded


def summarize(rows: Sequence[ScreeningRow]) -> dict[str, int]:
    """Inclusion/exclusion counts; keys are 'included' plus each reason."""
    summary = {"included": 0}
    for reason in ExclusionReason:
        summary[reason.value] = 0
    for row in rows:
        if row.exclusion_reason is None:
            summary["included"] += 1
        else:
            summary[row.exclusion_reason] += 1
    summary["total"] = len(rows)
    return summary


def _fmt(x: float) -> str:
    return f"{x:.5e}"


def _bool_str(b) -> str:
    return "true" if b else "false"


TABLE_COLUMNS = ("material", "space_group", "centrosymmetric",
                 "omega_m_thz", "n_r", "a_c_m_s", "tan_delta")


def format_table(rows: Sequence[ScreeningRow], fmt: str = "csv") -> str:
    """Ranked table of included rows as csv or aligned text."""
    included = [r for r in rows if r.exclusion_reason is None]
    cells = [TABLE_COLUMNS] + [
        (r.formula, r.space_group, _bool_str(r.centrosymmetric),
         _fmt(r.omega_m_thz), _fmt(r.n_r), _fmt(r.a_c), _fmt(r.tan_delta))
        for r in included]
    if fmt == "csv":
        return "".join(",".join(row) + "\n" for row in cells)
    if fmt == "text":
        widths = [max(len(row[i]) for row in cells)
                  for i in range(len(TABLE_COLUMNS))]
        return "".join(
            "  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() + "\n"
            for row in cells)
    raise ScreeningError(f"unknown table format {fmt!r}")


def emit_table(rows: Sequence[ScreeningRow], path, fmt: str = "csv") -> None:
    """Write the ranked table of included rows (csv or aligned text)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_table(rows, fmt))


def emit_figure_data(rows: Sequence[ScreeningRow], path_frequency,
                     path_gap) -> None:
    """Two scatter files for included rows: a_c against the Debye frequency
    and against the corrected band gap."""
    included = [r for r in rows if r.exclusion_reason is None]
    with open(path_frequency, "w", encoding="utf-8", newline="") as fh:
        fh.write("omega_m_thz,a_c_m_s\n")
        for r in included:
            fh.write(f"{_fmt(r.omega_m_thz)},{_fmt(r.a_c)}\n")
    with open(path_gap, "w", encoding="utf-8", newline="") as fh:
        fh.write("e_g_corrected_ev,a_c_m_s\n")
        for r in included:
            fh.write(f"{_fmt(r.e_g_corrected)},{_fmt(r.a_c)}\n")


def rows_as_json(rows: Sequence[ScreeningRow], cfg: ScreenConfig) -> dict:
    """Full-precision JSON payload; every derived field can be recomputed
    from the primitive fields it carries."""
    payload_rows = []
    for r in rows:
        if r.exclusion_reason is None:
            payload_rows.append({
                "material_id": r.material_id, "formula": r.formula,
                "space_group": r.space_group,
                "centrosymmetric": r.centrosymmetric,
                "band_gap_pbe_ev": r.band_gap_pbe,
                "omega_m_thz": r.omega_m_thz, "n_r": r.n_r,
                "a_c_m_s": r.a_c, "tan_delta": r.tan_delta,
                "e_g_corrected_ev": r.e_g_corrected,
            })
        else:
            payload_rows.append({
                "material_id": r.material_id, "formula": r.formula,
                "exclusion_reason": r.exclusion_reason,
            })
    return {
        "config": {
            "frequency_ghz": cfg.frequency_ghz,
            "n_def_per_cm3": cfg.n_def_per_cm3,
            "z_eff": cfg.z_eff,
            "local_field_model": cfg.local_field_model.value,
            "velocity": cfg.velocity.value,
            "gap_threshold_ev": cfg.gap_threshold_ev,
            "defect_overrides": {
                key: [[d.z_eff, d.n_def / 1e6] for d in species]
                for key, species in cfg.defect_overrides.items()},
        },
        "rows": payload_rows,
        "summary": summarize(rows),
    }
