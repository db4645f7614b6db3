"""Validated host-material and defect records (SI units internally)."""

from __future__ import annotations

from dataclasses import dataclass
from math import isfinite
from typing import Sequence

from .composition import FormulaError, average_atomic_mass

# Computed densities in database exports deviate from N_s * M_avg only
# through export rounding; 20% also admits mildly off experimental values.
DENSITY_CONSISTENCY_TOL = 0.20
SYMMETRY_TOL = 1e-6

Tensor3 = tuple[tuple[float, float, float], ...]


class ValidationError(ValueError):
    """Raised when a record with rule violations is used anyway."""


def as_tensor3(rows) -> Tensor3:
    """Coerce a 3x3 nested sequence into the immutable tensor form."""
    if len(rows) != 3 or any(len(r) != 3 for r in rows):
        raise ValidationError("dielectric tensor must be 3x3")
    return tuple(tuple(float(x) for x in r) for r in rows)


def tensor_trace(t: Tensor3) -> float:
    return t[0][0] + t[1][1] + t[2][2]


def tensor_is_symmetric(t: Tensor3, tol: float = SYMMETRY_TOL) -> bool:
    (_, a01, a02), (a10, _, a12), (a20, a21, a22) = t
    for a, b in ((a01, a10), (a02, a20), (a12, a21)):
        scale = abs(a) if abs(a) > abs(b) else abs(b)
        if abs(a - b) > tol * (scale if scale > 1.0 else 1.0):
            return False
    return True


def tensor_eigenvalues_at_least(t: Tensor3, floor: float) -> bool:
    """All eigenvalues of the symmetric tensor >= floor.

    Checked as positive semidefiniteness of (t - floor*I) through its seven
    principal minors; plain arithmetic keeps the screening hot path off
    numpy.
    """
    (t00, t01, t02), (t10, t11, t12), (t20, t21, t22) = t
    d00, d11, d22 = t00 - floor, t11 - floor, t22 - floor
    scale = max(abs(t00), abs(t01), abs(t02), abs(t11), abs(t12), abs(t22),
                1.0)
    tol = -1e-12 * scale * scale * scale
    if d00 < tol or d11 < tol or d22 < tol:
        return False
    if (d00 * d11 - t01 * t10 < tol or d00 * d22 - t02 * t20 < tol
            or d11 * d22 - t12 * t21 < tol):
        return False
    det = (d00 * (d11 * d22 - t12 * t21)
           - t01 * (t10 * d22 - t12 * t20)
           + t02 * (t10 * t21 - d11 * t20))
    return det >= tol


@dataclass(frozen=True)
class DefectSpecies:
    """One charged defect species: effective charge (in units of e) and
    volume density (1/m^3)."""

    z_eff: float
    n_def: float

    def __post_init__(self):
        if not isfinite(self.z_eff):
            raise ValidationError(f"non-finite z_eff {self.z_eff!r}")
        if not (self.n_def >= 0.0 and isfinite(self.n_def)):
            raise ValidationError(f"defect density must be >= 0, got {self.n_def!r}")


def weighted_defect_density(defects: Sequence[DefectSpecies]) -> float:
    """Sum of N_def * z_eff^2 over the population (1/m^3)."""
    return sum(d.n_def * (d.z_eff * d.z_eff) for d in defects)


def charge_imbalance(defects: Sequence[DefectSpecies]) -> float:
    """Net charge density sum(N_def * z_eff); nonzero populations are legal
    but usually indicate a missing compensating species (1/m^3)."""
    return sum(d.n_def * d.z_eff for d in defects)


@dataclass(frozen=True)
class HostMaterial:
    """One host crystal, already converted to SI at the ingestion boundary."""

    id: str
    composition: dict[str, int]
    mass_density: float          # kg/m^3
    site_density: float          # atoms/m^3
    bulk_modulus: float          # Pa
    shear_modulus: float         # Pa
    dielectric_tensor: Tensor3   # dimensionless, total (ionic + electronic)
    band_gap_pbe: float          # eV
    space_group: str = ""
    centrosymmetric: bool = False
    magnetic: bool = False


def validate(material: HostMaterial, mass_avg: float | None = None) -> list[str]:
    """All record-level rules in one place; returns human-readable
    violations (empty list means the record is safe for the physics chain).

    `mass_avg` (kg) may be supplied when the caller already derived it from
    the composition, saving the lookup on bulk runs.
    """
    v: list[str] = []
    m = material
    if not (m.mass_density > 0 and isfinite(m.mass_density)):
        v.append(f"mass_density must be > 0, got {m.mass_density!r}")
    if not (m.site_density > 0 and isfinite(m.site_density)):
        v.append(f"site_density must be > 0, got {m.site_density!r}")
    if not (m.bulk_modulus > 0 and isfinite(m.bulk_modulus)):
        v.append(f"bulk_modulus must be > 0, got {m.bulk_modulus!r}")
    if not (m.shear_modulus > 0 and isfinite(m.shear_modulus)):
        v.append(f"shear_modulus must be > 0, got {m.shear_modulus!r}")
    if not (m.band_gap_pbe >= 0 and isfinite(m.band_gap_pbe)):
        v.append(f"band_gap_pbe must be >= 0, got {m.band_gap_pbe!r}")

    if mass_avg is None:
        try:
            mass_avg = average_atomic_mass(m.composition)
        except FormulaError as err:
            v.append(f"composition: {err}")
            mass_avg = None

    t = m.dielectric_tensor
    if len(t) != 3 or any(len(r) != 3 for r in t):
        v.append("dielectric tensor must be 3x3")
    else:
        if not (isfinite(t[0][0] + t[0][1] + t[0][2] + t[1][0] + t[1][1]
                         + t[1][2] + t[2][0] + t[2][1] + t[2][2])):
            v.append("dielectric tensor has non-finite entries")
        elif not tensor_is_symmetric(t):
            v.append("dielectric tensor is not symmetric within 1e-6")
        elif not tensor_eigenvalues_at_least(t, 1.0):
            v.append("dielectric tensor has an eigenvalue below 1 (sub-vacuum)")

    if mass_avg is not None and m.site_density > 0 and m.mass_density > 0:
        implied = m.site_density * mass_avg
        if abs(implied - m.mass_density) > DENSITY_CONSISTENCY_TOL * m.mass_density:
            v.append(
                "mass density inconsistent with site density * average mass "
                f"({m.mass_density:.4g} vs {implied:.4g} kg/m^3)")
    return v


def require_valid(material: HostMaterial) -> HostMaterial:
    violations = validate(material)
    if violations:
        raise ValidationError("; ".join(violations))
    return material
