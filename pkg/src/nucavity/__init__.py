"""Grazing-incidence x-ray cavities with resonant nuclear layers.

Forward model: classical multilayer Green function -> collective
nuclear couplings -> steady-state coherences -> reflectivity spectra,
cross-validated by an independent semiclassical recursion.
"""

from .materials import (
    Material,
    NuclearSpecies,
    VACUUM,
    FE57,
    FE57_HYPERFINE_33T,
    DEFAULT_MATERIALS,
    material,
    refractive_index,
    wavenumber,
)
from .stack import (
    CavitySpecError,
    CavityStack,
    Layer,
    ResonantLoading,
    parse_cavity_spec,
    serialize_cavity_spec,
)
from .fields import (
    AngleGrid,
    FieldProfile,
    Green1D,
    bare_reflectivity,
    field_profile,
    green_1d,
    kz_in_layer,
    resonant_angles,
)
from .ensemble import (
    CoherenceState,
    CouplingSystem,
    NuclearSite,
    UncalibratedError,
    build_sites,
    coupling_system,
    coupling_prefactor,
    evolve,
    steady_state,
)
from .observables import (
    CalibrationError,
    FanoFit,
    FitConvergenceError,
    ModeReport,
    Spectrum,
    calibrate_density,
    collective_parameters,
    fano_fit,
    jaynes_cummings_width,
    mode_analysis,
    reflectivity,
    spectrum_scan,
)
from .oracle import (
    oracle_reflectivity,
    oracle_spectrum,
    resonant_index,
    calibrate_susceptibility,
)

__version__ = "0.1.0"
