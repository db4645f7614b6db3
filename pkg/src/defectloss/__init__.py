"""Microwave dielectric loss from charged defects emitting acoustic
phonons: per-material loss figures, mass-defect spectral coefficients, and
a materials-database screening pipeline."""

from .composition import (FormulaError, atomic_masses_amu, average_atomic_mass,
                          parse_formula)
from .constants import CODATA2018, PhysicalConstants
from .materials import (DefectSpecies, HostMaterial, ValidationError,
                        charge_imbalance, validate, weighted_defect_density)
from .physics import (HostDerived, LocalFieldModel, LossResult, VelocityChoice,
                      absorption_coefficient, attenuate,
                      characteristic_parameter, cross_section, debye_frequency,
                      derive_host, evaluate_loss, local_field_factor,
                      loss_tangent, loss_tangent_direct, refractive_index,
                      sound_velocities, temperature_bound)
from .screening import (ExclusionReason, ScreenConfig, ScreeningRow,
                        apply_filters, corrected_gap, emit_figure_data,
                        emit_table, format_table, host_from_record,
                        load_config, reference_database_lines, screen,
                        summarize)
from .spectral import (DebyeSpectralDensity, MassDefectParams, SpectralDensity,
                       SpectralError, TabulatedSpectralDensity,
                       acoustic_limit_check, chi_squared, chi_sweep,
                       nu_from_dos, pv_integral)

__version__ = "0.1.0"

__all__ = [
    "CODATA2018", "PhysicalConstants",
    "FormulaError", "atomic_masses_amu", "average_atomic_mass",
    "parse_formula",
    "DefectSpecies", "HostMaterial", "ValidationError", "charge_imbalance",
    "validate", "weighted_defect_density",
    "HostDerived", "LocalFieldModel", "LossResult", "VelocityChoice",
    "absorption_coefficient", "attenuate", "characteristic_parameter",
    "cross_section", "debye_frequency", "derive_host", "evaluate_loss",
    "local_field_factor", "loss_tangent", "loss_tangent_direct",
    "refractive_index", "sound_velocities", "temperature_bound",
    "ExclusionReason", "ScreenConfig", "ScreeningRow", "apply_filters",
    "corrected_gap", "emit_figure_data", "emit_table", "format_table",
    "host_from_record", "load_config", "reference_database_lines", "screen",
    "summarize",
    "DebyeSpectralDensity", "MassDefectParams", "SpectralDensity",
    "SpectralError", "TabulatedSpectralDensity", "acoustic_limit_check",
    "chi_squared", "chi_sweep", "nu_from_dos", "pv_integral",
    "__version__",
]
