"""Optical constants and nuclear resonance data.

Conventions used throughout the package:

* complex refractive index  n = 1 - delta + i*beta  with the time
  convention e^{-i omega t}, so beta >= 0 means absorption,
* photon energies in keV, lengths in nm, grazing angles in rad,
* nuclear detunings and rates in units of the total natural linewidth
  Gamma_0 of the transition.

The shipped (delta, beta) values are derived from tabulated atomic
scattering factors f1/f2 (Henke et al., At. Data Nucl. Data Tables 54,
181 (1993); CXRO compilation) via

    delta = r_e * lambda^2 * n_a * f1 / (2 pi)
    beta  = r_e * lambda^2 * n_a * f2 / (2 pi)

with n_a the atomic number density.  ``tools/derive_optical_constants.py``
regenerates the table below and records the f1/f2 inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# fundamental constants
HBARC_KEV_NM = 0.1973269804     # hbar*c in keV*nm
R_E_NM = 2.8179403262e-6        # classical electron radius in nm
N_AVOGADRO = 6.02214076e23


def wavenumber(energy_keV: float) -> float:
    """Vacuum wavenumber k0 in 1/nm for a photon energy in keV."""
    return energy_keV / HBARC_KEV_NM


def delta_beta_from_f1f2(f1, f2, density_g_cm3, molar_mass_g, energy_keV):
    """(delta, beta) from scattering factors and mass density.

    ``f1``/``f2`` may be per atom or summed over a formula unit whose
    molar mass is ``molar_mass_g``.
    """
    k0 = wavenumber(energy_keV)
    lam = 2.0 * math.pi / k0
    n_a = density_g_cm3 * N_AVOGADRO / molar_mass_g * 1e-21  # atoms / nm^3
    pref = R_E_NM * lam * lam * n_a / (2.0 * math.pi)
    return pref * f1, pref * f2


@dataclass(frozen=True)
class Material:
    """Homogeneous medium with n = 1 - delta + i*beta at one photon energy."""

    name: str
    delta: float
    beta: float
    photon_energy_keV: float = 14.413

    def __post_init__(self):
        if self.beta < 0:
            raise ValueError(f"material {self.name!r}: beta must be >= 0 (passive medium)")
        if not 0.0 <= self.delta < 1e-3:
            raise ValueError(f"material {self.name!r}: delta outside the x-ray regime [0, 1e-3)")


def refractive_index(material: Material) -> complex:
    """Complex refractive index n = 1 - delta + i*beta."""
    return complex(1.0 - material.delta, material.beta)


VACUUM = Material("vacuum", 0.0, 0.0)


@dataclass(frozen=True)
class NuclearSpecies:
    """A recoil-free nuclear resonance, possibly split into several lines.

    ``transitions`` lists (detuning, weight) pairs; detunings are in units
    of the total linewidth Gamma_0 and the weights are normalized to sum
    to one on construction.  Each line is treated as an independent
    two-level resonance.
    """

    name: str
    transition_energy_keV: float = 14.413
    natural_linewidth_neV: float = 4.66
    internal_conversion_alpha: float = 8.56
    transitions: tuple = ((0.0, 1.0),)

    def __post_init__(self):
        if self.natural_linewidth_neV <= 0:
            raise ValueError(f"species {self.name!r}: linewidth must be positive")
        if self.internal_conversion_alpha < 0:
            raise ValueError(f"species {self.name!r}: conversion coefficient must be >= 0")
        lines = tuple((float(d), float(w)) for d, w in self.transitions)
        if not lines:
            raise ValueError(f"species {self.name!r}: needs at least one transition line")
        if any(w < 0 for _, w in lines):
            raise ValueError(f"species {self.name!r}: line weights must be >= 0")
        total = sum(w for _, w in lines)
        if total <= 0:
            raise ValueError(f"species {self.name!r}: total line weight must be positive")
        object.__setattr__(self, "transitions", tuple((d, w / total) for d, w in lines))

    @property
    def radiative_linewidth_neV(self) -> float:
        """Radiative partial width Gamma_r = Gamma_0 / (1 + alpha)."""
        return self.natural_linewidth_neV / (1.0 + self.internal_conversion_alpha)


# 14.4-keV transition of 57Fe, unsplit.
FE57 = NuclearSpecies("Fe57")

# The four Delta-m = +-1 lines of 57Fe in a 33 T internal hyperfine field
# (magnetization along the photon wavevector suppresses the Delta-m = 0
# lines).  Positions follow from the ground/excited nuclear g-factors
# (mu_g = +0.0906 mu_N, mu_e = -0.1549 mu_N), weights from the
# 1/2 -> 3/2 Clebsch-Gordan coefficients, 3:1:1:3.
FE57_HYPERFINE_33T = NuclearSpecies(
    "Fe57m",
    transitions=(
        (-54.81, 3.0),
        (-8.70, 1.0),
        (8.70, 1.0),
        (54.81, 3.0),
    ),
)


# Optical constants at 14.413 keV, generated by tools/derive_optical_constants.py.
# f1/f2 at 14.413 keV from the Henke/CXRO tabulation; densities in g/cm^3.
DEFAULT_MATERIALS = {
    "vacuum": VACUUM,
    "C": Material("C", 2.2586e-06, 1.0906e-09),       # graphitic carbon, rho=2.26
    "Si": Material("Si", 2.3246e-06, 1.6746e-08),     # rho=2.33
    "Fe": Material("Fe", 7.2845e-06, 3.0998e-07),     # alpha-iron, rho=7.874
    "SS": Material("SS", 7.3146e-06, 3.1501e-07),     # stainless steel Fe.70Cr.19Ni.11, rho=7.90
    "Pt": Material("Pt", 1.5624e-05, 2.4173e-06),     # rho=21.45
    "Pd": Material("Pd", 1.0229e-05, 5.7578e-07),     # rho=12.023
}

# Effective resonant areal density per nm of layer thickness (nm^-3) for
# the default compositions: atomic density of Fe sites, times isotopic
# enrichment (0.95), times the recoilless fraction (0.80 at room
# temperature).  These are starting values; ``calibrate_density`` refits
# them against a reference spectrum.
DEFAULT_SCALE_FE57_METAL = 64.5   # enriched alpha-57Fe
DEFAULT_SCALE_FE57_SS = 45.3      # 57Fe-enriched stainless steel (95%)


def material(name: str) -> Material:
    """Look up a material from the default table."""
    try:
        return DEFAULT_MATERIALS[name]
    except KeyError:
        raise KeyError(f"unknown material {name!r}; known: {sorted(DEFAULT_MATERIALS)}") from None
