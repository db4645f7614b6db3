"""Mass-defect expansion coefficients over a phonon spectrum.

The central object is the density of states per squared frequency,
nu(mu) with mu = omega^2, normalized so that its integral over the support
is 1. The squared expansion coefficient of a single mass defect
(mass change ratio eps_m = (M - M')/M) against a mode of squared frequency
z is

    |chi|^2 = (1/N_a) / { pi^2 eps_m^2 z^2 nu(z)^2
                          + [1 + eps_m z PV(z)]^2 },

where PV(z) is the Cauchy principal value of integral nu(mu)/(mu - z) dmu.

Conventions: the z -> 0 limit of N_a |chi|^2 is exactly 1 per Cartesian
component. The extra factor 1/3 from projecting the defect displacement
onto a single polarization direction is not applied here; it enters the
absorption cross section once, where the mode sum is collapsed onto the
density of states (see physics.characteristic_parameter, whose 6 pi^2
coefficient already contains the net 3 * 1/3 of that collapse).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import PchipInterpolator, interp1d

NORMALIZATION_TOL = 1e-6
# squared-frequency arguments this close to the upper support edge are
# rejected; the subtraction scheme degrades as the log term blows up
UPPER_EDGE_MARGIN = 1e-3


class SpectralError(ValueError):
    """Raised for unusable spectra or out-of-domain arguments."""


class SpectralDensity:
    """Base class: nu(mu) on [0, mu_max], integral normalized to 1."""

    mu_max: float

    def nu(self, mu):
        raise NotImplementedError

    def low_end(self) -> tuple[float, float]:
        """(coefficient, power) of the nu ~ coef * mu^power behavior at 0."""
        raise NotImplementedError


class DebyeSpectralDensity(SpectralDensity):
    """nu(mu) = 3 sqrt(mu) / (2 omega_m^3) on [0, omega_m^2]."""

    def __init__(self, omega_m: float = 1.0):
        if omega_m <= 0:
            raise SpectralError("omega_m must be positive")
        self.omega_m = float(omega_m)
        self.mu_max = self.omega_m ** 2

    def nu(self, mu):
        mu = np.asarray(mu, dtype=float)
        out = np.where((mu >= 0) & (mu <= self.mu_max),
                       1.5 * np.sqrt(np.abs(mu)) / self.omega_m ** 3, 0.0)
        return float(out) if out.ndim == 0 else out

    def rho(self, omega):
        """Density of states per unit frequency, 3 omega^2 / omega_m^3."""
        omega = np.asarray(omega, dtype=float)
        out = np.where((omega >= 0) & (omega <= self.omega_m),
                       3.0 * omega ** 2 / self.omega_m ** 3, 0.0)
        return float(out) if out.ndim == 0 else out

    def low_end(self):
        return 1.5 / self.omega_m ** 3, 0.5


class TabulatedSpectralDensity(SpectralDensity):
    """nu(mu) from a table, continued below the first grid point by the
    power law fitted to the two lowest points (this is what makes tiny-z
    evaluations possible on measured spectra)."""

    def __init__(self, mu_grid: np.ndarray, nu_values: np.ndarray,
                 interpolation: str = "pchip"):
        mu_grid = np.asarray(mu_grid, dtype=float)
        nu_values = np.asarray(nu_values, dtype=float)
        if mu_grid.ndim != 1 or mu_grid.size < 4:
            raise SpectralError("need at least 4 tabulated points")
        if np.any(np.diff(mu_grid) <= 0) or mu_grid[0] <= 0:
            raise SpectralError("mu grid must be strictly increasing and > 0")
        if np.any(nu_values < 0) or not np.all(np.isfinite(nu_values)):
            raise SpectralError("nu values must be finite and >= 0")

        if nu_values[0] > 0 and nu_values[1] > 0:
            power = (math.log(nu_values[1] / nu_values[0])
                     / math.log(mu_grid[1] / mu_grid[0]))
        else:
            power = 0.5
        if power <= -1.0:
            raise SpectralError(
                f"low-end behavior mu^{power:.3f} is not integrable; "
                "the density of states grows too fast toward zero frequency")

        self._power = power
        self.mu_max = float(mu_grid[-1])
        if interpolation == "pchip":
            interp = PchipInterpolator(mu_grid, nu_values, extrapolate=False)
            tail_integral = float(interp.antiderivative()(self.mu_max)
                                  - interp.antiderivative()(mu_grid[0]))
        elif interpolation == "linear":
            interp = interp1d(mu_grid, nu_values, kind="linear",
                              bounds_error=False, fill_value=0.0)
            tail_integral = float(np.trapezoid(nu_values, mu_grid))
        else:
            raise SpectralError(f"unknown interpolation {interpolation!r}")

        # mass of the power-law stub on [0, mu_0]
        stub_integral = nu_values[0] * mu_grid[0] / (power + 1.0)
        total = stub_integral + tail_integral
        if total <= 0:
            raise SpectralError("spectral density integrates to zero")

        self._scale = 1.0 / total
        self._interp = interp
        self._mu0 = float(mu_grid[0])
        self._nu0 = float(nu_values[0]) * self._scale
        self._grid = mu_grid
        self._values = nu_values * self._scale
        self._interpolation = interpolation

    def nu(self, mu):
        mu = np.asarray(mu, dtype=float)
        scalar = mu.ndim == 0
        mu = np.atleast_1d(mu)
        out = np.zeros_like(mu)
        low = (mu > 0) & (mu < self._mu0)
        mid = (mu >= self._mu0) & (mu <= self.mu_max)
        out[low] = self._nu0 * (mu[low] / self._mu0) ** self._power
        if np.any(mid):
            out[mid] = np.nan_to_num(self._interp(mu[mid])) * self._scale
        return float(out[0]) if scalar else out

    def low_end(self):
        return self._nu0 / self._mu0 ** self._power, self._power

    def normalization(self) -> float:
        stub = self._nu0 * self._mu0 / (self._power + 1.0)
        if self._interpolation == "pchip":
            anti = self._interp.antiderivative()
            tail = float(anti(self.mu_max) - anti(self._mu0)) * self._scale
        else:
            tail = float(np.trapezoid(self._values, self._grid))
        return stub + tail


def nu_from_dos(omega: Sequence[float], rho: Sequence[float],
                interpolation: str = "pchip") -> TabulatedSpectralDensity:
    """Transform a tabulated density of states per unit frequency into the
    per-squared-frequency form nu(omega^2) = rho(omega) / (2 omega),
    renormalized to unit integral.

    A leading grid point at omega = 0 is accepted only with rho = 0 and is
    dropped (the transform is singular there).
    """
    omega = np.asarray(omega, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if omega.shape != rho.shape or omega.ndim != 1:
        raise SpectralError("omega and rho grids must be 1-d and equal length")
    if np.any(rho < 0):
        raise SpectralError("density of states must be >= 0")
    if omega.size and omega[0] == 0.0:
        if rho[0] != 0.0:
            raise SpectralError(
                "nonzero density of states at zero frequency cannot be "
                "transformed")
        omega, rho = omega[1:], rho[1:]
    if omega.size < 4:
        raise SpectralError("need at least 4 positive-frequency points")
    if np.any(omega <= 0) or np.any(np.diff(omega) <= 0):
        raise SpectralError("frequency grid must be strictly increasing and > 0")
    mu = omega ** 2
    nu = rho / (2.0 * omega)
    return TabulatedSpectralDensity(mu, nu, interpolation=interpolation)


def load_dos_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a two-column `omega_rad_per_s,rho_per_rad_per_s` file."""
    omegas, rhos = [], []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SpectralError(f"empty density-of-states file {path}")
        for row in reader:
            if not row or row[0].lstrip().startswith("#"):
                continue
            omegas.append(float(row[0]))
            rhos.append(float(row[1]))
    return np.asarray(omegas), np.asarray(rhos)


def pv_integral(density: SpectralDensity, z: float) -> float:
    """Cauchy principal value of integral nu(mu) / (mu - z) dmu.

    Interior z: singularity subtraction,
        integral (nu(mu) - nu(z)) / (mu - z) dmu
        + nu(z) * log((mu_max - z)/z),
    with adaptive quadrature on the subtracted (bounded) remainder.
    Outside the support the integral is ordinary. z exactly on either
    support edge, or within the upper-edge margin, is rejected.
    """
    mu_max = density.mu_max
    if z == 0.0 or z == mu_max:
        raise SpectralError("z exactly on the support boundary")
    if 0.0 < z < mu_max:
        if z > (1.0 - UPPER_EDGE_MARGIN) * mu_max:
            raise SpectralError(
                f"z = {z:.6g} within {UPPER_EDGE_MARGIN:g}*mu_max of the "
                "upper support edge")
        nu_z = float(density.nu(z))

        def remainder(mu):
            if mu == z:
                return 0.0
            return (float(density.nu(mu)) - nu_z) / (mu - z)

        # full_output leaves roundoff-limit handling to the explicit check
        # below: the subtracted integrand carries cancellation noise near z
        # that blocks epsrel but not the accuracy actually needed
        out = quad(remainder, 0.0, mu_max, points=[z],
                   limit=400, epsabs=1e-300, epsrel=1e-11, full_output=1)
        smooth, abserr = out[0], out[1]
        log_term = nu_z * math.log((mu_max - z) / z)
        scale = abs(smooth) + abs(log_term) + 1.0 / mu_max
        if abserr > 1e-7 * scale:
            raise SpectralError(
                f"principal-value quadrature did not converge at z={z:.6g} "
                f"(error estimate {abserr:.3g})")
        return smooth + log_term

    def integrand(mu):
        return float(density.nu(mu)) / (mu - z)

    out = quad(integrand, 0.0, mu_max, limit=400,
               epsabs=1e-300, epsrel=1e-11, full_output=1)
    return out[0]


@dataclass(frozen=True)
class MassDefectParams:
    """eps_mass = (M - M')/M < 1; n_atoms is the (model) crystal size;
    z is the squared mode frequency probed (rad^2/s^2)."""

    eps_mass: float
    n_atoms: int
    z: float

    def __post_init__(self):
        if not self.eps_mass < 1.0:
            raise SpectralError("eps_mass must be < 1 (defect mass > 0)")
        if self.n_atoms < 1:
            raise SpectralError("n_atoms must be >= 1")
        if not (self.z >= 0 and math.isfinite(self.z)):
            raise SpectralError(f"invalid squared frequency {self.z!r}")


def chi_squared(params: MassDefectParams, density: SpectralDensity) -> float:
    """Squared expansion coefficient |chi|^2 of the defect displacement on
    the mode with squared frequency params.z."""
    z = params.z
    if not 0.0 < z < density.mu_max:
        raise SpectralError(
            f"z = {z!r} outside the open support (0, {density.mu_max!r})")
    return _chi_squared_from_pv(params, float(density.nu(z)),
                                pv_integral(density, z))


def _chi_squared_from_pv(params: MassDefectParams, nu_z: float,
                         pv: float) -> float:
    eps, z = params.eps_mass, params.z
    resonant = (math.pi * eps * z * nu_z) ** 2
    bracket = 1.0 + eps * z * pv
    return 1.0 / params.n_atoms / (resonant + bracket * bracket)


def chi_sweep(density: SpectralDensity, eps_mass: float, n_atoms: int,
              z_values: Iterable[float]) -> list[tuple[float, float, float]]:
    """(z, N_a |chi|^2, PV value) for each requested z, in input order."""
    rows = []
    for z in z_values:
        params = MassDefectParams(eps_mass=eps_mass, n_atoms=n_atoms, z=z)
        pv = pv_integral(density, z)
        chi2 = _chi_squared_from_pv(params, float(density.nu(z)), pv)
        rows.append((z, chi2 * n_atoms, pv))
    return rows


def acoustic_limit_check(density: SpectralDensity, eps_mass: float,
                         n_atoms: int = 1) -> tuple[float, float]:
    """Extrapolated z -> 0 limit of N_a |chi|^2 and its error estimate.

    Evaluates at z = mu_max * 10^-k for k = 4..8 and extrapolates the
    polynomial-in-z tail to zero (Neville). For any integrable spectrum
    the limit is 1: a single-site displacement spreads uniformly over the
    N_a-atom mode basis.
    """
    coef, power = density.low_end()
    if coef <= 0:
        raise SpectralError("spectral density vanishes at low frequency")
    # far from sqrt(mu) the tail is a fractional power of z and the
    # polynomial extrapolation would report a confidently wrong limit
    if abs(power - 0.5) > 0.2:
        raise SpectralError(
            f"spectrum behaves like mu^{power:.2f} near zero; the acoustic "
            "limit requires Debye-like sqrt(mu) behavior")
    zs = np.array([density.mu_max * 10.0 ** (-k) for k in range(4, 9)])
    vals = np.array([chi_squared(MassDefectParams(eps_mass, n_atoms, z),
                                 density) * n_atoms for z in zs])
    table = vals.copy()
    prev_last = table[-1]
    for level in range(1, len(zs)):
        table = (table[1:] * zs[:-level] - table[:-1] * zs[level:]) \
            / (zs[:-level] - zs[level:])
        err = abs(table[-1] - prev_last)
        prev_last = table[-1]
    limit = float(table[-1])
    err = float(err)
    if not math.isfinite(limit) or err > 1e-2 * max(1.0, abs(limit)):
        raise SpectralError(
            f"acoustic-limit extrapolation did not converge "
            f"(limit {limit!r}, error estimate {err!r})")
    return limit, err


def write_sweep_csv(path, rows: Sequence[tuple[float, float, float]],
                    limit: tuple[float, float] | None = None) -> None:
    """Write `z,chi2_times_Na,pv_value` rows; the extrapolated acoustic
    limit goes into a trailing comment line."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("z,chi2_times_Na,pv_value\n")
        for z, chi2_na, pv in rows:
            fh.write(f"{z:.10e},{chi2_na:.10e},{pv:.10e}\n")
        if limit is not None:
            fh.write(f"# acoustic_limit,{limit[0]:.10e},error_estimate,"
                     f"{limit[1]:.3e}\n")
