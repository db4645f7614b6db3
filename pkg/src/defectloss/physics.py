"""Closed-form loss chain: elastic constants -> Debye frequency ->
characteristic absement -> absorption coefficient and loss tangent.

Angular frequencies (rad/s) everywhere; unit conversions live at the CLI
and ingestion boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .composition import average_atomic_mass
from .constants import ALPHA_FS, C_LIGHT, E_CHARGE, EPS0, HBAR, K_BOLTZMANN
from .materials import (DefectSpecies, HostMaterial, Tensor3, require_valid,
                        tensor_trace, weighted_defect_density)

SIX_PI_SQ = 6.0 * math.pi * math.pi


class LocalFieldModel(Enum):
    """Microscopic-to-macroscopic field ratio at the defect site.

    UNITY disables the enhancement altogether, for comparison with
    treatments that neglect local-field effects.
    """

    ONSAGER = "onsager"
    LORENTZ_LORENZ = "lorentz_lorenz"
    UNITY = "unity"

    @classmethod
    def parse(cls, name: str) -> "LocalFieldModel":
        key = name.strip().lower().replace("-", "_")
        aliases = {"lorentz": cls.LORENTZ_LORENZ, "ll": cls.LORENTZ_LORENZ}
        if key in aliases:
            return aliases[key]
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(f"unknown local-field model {name!r}")


class VelocityChoice(Enum):
    TRANSVERSE = "transverse"
    LONGITUDINAL = "longitudinal"

    @classmethod
    def parse(cls, name: str) -> "VelocityChoice":
        key = name.strip().lower()
        for member in cls:
            if member.value == key:
                return member
        raise ValueError(f"unknown velocity choice {name!r}")


def sound_velocities(bulk_modulus: float, shear_modulus: float,
                     mass_density: float) -> tuple[float, float]:
    """(transverse, longitudinal) sound velocities in m/s.

    v_t = sqrt(G/rho), v_l = sqrt((K + 4G/3)/rho).
    """
    if bulk_modulus <= 0 or shear_modulus <= 0 or mass_density <= 0:
        raise ValueError("moduli and density must be positive")
    v_t = math.sqrt(shear_modulus / mass_density)
    v_l = math.sqrt((bulk_modulus + 4.0 * shear_modulus / 3.0) / mass_density)
    return v_t, v_l


def debye_frequency(site_density: float, sound_velocity: float) -> float:
    """Debye cutoff (6 pi^2 N_s)^(1/3) * v_s in rad/s."""
    if site_density <= 0 or sound_velocity <= 0:
        raise ValueError("site density and sound velocity must be positive")
    return (SIX_PI_SQ * site_density) ** (1.0 / 3.0) * sound_velocity


def refractive_index(dielectric_tensor: Tensor3) -> float:
    """sqrt(Tr[eps]/3) from the static dielectric tensor."""
    trace = tensor_trace(dielectric_tensor)
    if trace < 3.0:
        raise ValueError(
            f"dielectric trace {trace:.6g} below vacuum value 3")
    return math.sqrt(trace / 3.0)


def local_field_factor(eps: float, model: LocalFieldModel) -> float:
    """E_eff/E_0 for a scalar permittivity eps (= n_r^2)."""
    if eps < 1.0:
        raise ValueError(f"permittivity below vacuum: {eps!r}")
    if model is LocalFieldModel.ONSAGER:
        return 3.0 * eps / (2.0 * eps + 1.0)
    if model is LocalFieldModel.LORENTZ_LORENZ:
        return (eps + 2.0) / 3.0
    return 1.0


def characteristic_parameter(n_r: float, mass_avg: float, omega_m: float,
                             field_factor: float) -> float:
    """Host-only absement scale (m*s):

    A_c = (E_eff/E_0) * sqrt(6 pi^2 alpha / n_r * hbar / M / omega_m^3).

    The absorption coefficient is then N_def * Z_eff^2 * A_c^2 * omega^2.
    """
    if min(n_r, mass_avg, omega_m, field_factor) <= 0:
        raise ValueError("all characteristic-parameter inputs must be positive")
    return field_factor * math.sqrt(
        SIX_PI_SQ * ALPHA_FS / n_r * (HBAR / mass_avg) / omega_m ** 3)


def _species_sigma(z_eff: float, a_c: float, omega: float) -> float:
    # Shared by cross_section and absorption_coefficient so that
    # a == N_def * sigma holds bit-for-bit for a single species.
    return z_eff * z_eff * (a_c * a_c * (omega * omega))


def cross_section(z_eff: float, a_c: float, omega: float,
                  omega_m: float) -> float:
    """Absorption cross section per defect (m^2); zero beyond the Debye
    cutoff where the phonon density of states ends."""
    if omega < 0:
        raise ValueError("omega must be >= 0")
    if omega > omega_m:
        return 0.0
    return _species_sigma(z_eff, a_c, omega)


def absorption_coefficient(defects: Sequence[DefectSpecies], a_c: float,
                           omega: float) -> float:
    """a(omega) = sum_i N_i Z_i^2 * A_c^2 * omega^2, in 1/m."""
    if omega < 0:
        raise ValueError("omega must be >= 0")
    return sum(d.n_def * _species_sigma(d.z_eff, a_c, omega) for d in defects)


def loss_tangent(a: float, n_r: float, omega: float) -> float:
    """tan(delta) = c / (n_r * omega) * a."""
    if omega <= 0:
        raise ValueError("omega must be > 0")
    return (C_LIGHT / (n_r * omega)) * a


def loss_tangent_direct(defects: Sequence[DefectSpecies], field_factor: float,
                        n_r: float, mass_density: float, sound_velocity: float,
                        omega: float) -> float:
    """Loss tangent straight from elastic data, bypassing A_c:

    tan(delta) = (E_eff/E_0)^2 / (4 pi eps0 n_r^2)
                 * sum(N Z^2) e^2 / (rho v_s^3) * omega.

    Agrees with the A_c route to machine precision when rho equals
    N_s * M_avg.
    """
    if min(field_factor, n_r, mass_density, sound_velocity) <= 0:
        raise ValueError("host parameters must be positive")
    if omega <= 0:
        raise ValueError("omega must be > 0")
    nz2 = weighted_defect_density(defects)
    return (field_factor * field_factor
            / (4.0 * math.pi * EPS0 * n_r * n_r)
            * nz2 * E_CHARGE * E_CHARGE
            / (mass_density * sound_velocity ** 3) * omega)


def attenuate(intensity0: float, a: float, z: float) -> float:
    """Beam intensity after propagating a distance z (m)."""
    if intensity0 < 0 or z < 0:
        raise ValueError("intensity and depth must be >= 0")
    return intensity0 * math.exp(-a * z)


def temperature_bound(omega: float) -> float:
    """T* = hbar*omega/kB in K; the quadratic-loss prediction holds while
    the sample stays well below this temperature."""
    if omega < 0:
        raise ValueError("omega must be >= 0")
    return HBAR * omega / K_BOLTZMANN


@dataclass(frozen=True)
class HostDerived:
    """Host quantities computed once per material."""

    v_t: float            # m/s
    v_l: float            # m/s
    omega_m: float        # rad/s
    n_r: float
    eps: float            # scalar permittivity n_r^2
    field_factor: float   # E_eff/E_0
    a_c: float            # m*s


def _derive_unchecked(material: HostMaterial, model: LocalFieldModel,
                      velocity: VelocityChoice,
                      sound_velocity: float | None,
                      mass_avg: float | None) -> HostDerived:
    v_t, v_l = sound_velocities(material.bulk_modulus, material.shear_modulus,
                                material.mass_density)
    if sound_velocity is not None:
        v_s = float(sound_velocity)
        if v_s <= 0:
            raise ValueError("fitted sound velocity must be positive")
    else:
        v_s = v_t if velocity is VelocityChoice.TRANSVERSE else v_l
    omega_m = debye_frequency(material.site_density, v_s)
    n_r = refractive_index(material.dielectric_tensor)
    eps = n_r * n_r
    field = local_field_factor(eps, model)
    if mass_avg is None:
        mass_avg = average_atomic_mass(material.composition)
    a_c = characteristic_parameter(n_r, mass_avg, omega_m, field)
    return HostDerived(v_t=v_t, v_l=v_l, omega_m=omega_m, n_r=n_r, eps=eps,
                       field_factor=field, a_c=a_c)


def derive_host(material: HostMaterial,
                model: LocalFieldModel = LocalFieldModel.ONSAGER,
                velocity: VelocityChoice = VelocityChoice.TRANSVERSE,
                sound_velocity: float | None = None) -> HostDerived:
    """Run the host chain on a validated material.

    `sound_velocity` overrides the elastic-constant value with a fitted one
    (m/s); otherwise the transverse speed is used by default because it
    tracks the low-frequency density of states best.
    """
    require_valid(material)
    return _derive_unchecked(material, model, velocity, sound_velocity, None)


@dataclass(frozen=True)
class LossResult:
    """Loss figures for one host + defect population at one frequency.

    ``sigma`` is the population-averaged cross section a / sum(N_def), which
    reduces to the per-defect cross section for a single species.
    """

    omega: float       # rad/s
    sigma: float       # m^2
    a: float           # 1/m
    tan_delta: float
    t_star: float      # K


def evaluate_loss(derived: HostDerived, defects: Sequence[DefectSpecies],
                  omega: float) -> LossResult:
    a = absorption_coefficient(defects, derived.a_c, omega)
    n_total = sum(d.n_def for d in defects)
    sigma = a / n_total if n_total > 0 else 0.0
    tan_d = loss_tangent(a, derived.n_r, omega) if omega > 0 else 0.0
    return LossResult(omega=omega, sigma=sigma, a=a, tan_delta=tan_d,
                      t_star=temperature_bound(omega))
