"""Collective nuclear sites, coupling matrices, and coherence dynamics.

Each thin slice of a resonant layer is replaced by a single collective
emitter ("macro-nucleus") at its center depth with weight equal to the
areal density it carries.  The cavity-mediated couplings, in units of
the natural linewidth Gamma_0, are

    G_lm = c * sqrt(w_l w_m) * G_1D(z_l, z_m),      c = 3 pi / (k0 (1 + alpha)),

where G_1D is the solver Green function (nm) and the prefactor follows
from the vacuum dipole relation Gamma_r = omega^3 d^2 / (3 pi eps0 hbar c^3)
together with Gamma_0 = (1 + alpha) Gamma_r.  The vacuum part of the
Green function is replaced by the bare decay Gamma_0 on the diagonal of
the evolution matrix; it mediates no inter-site coupling.

The drive vector per unit input amplitude is Omega_l = sqrt(w_l) p(z_l),
with p the unit-strength cavity field for incidence from above.  Low
saturation makes everything linear in the drive:

    S_dot = i (Delta + i Gamma_0/2) S + i Omega + i G S,
    steady state  S = -M^{-1} Omega,   M = (Delta + i Gamma_0/2) 1 + G.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp

from .fields import field_profile, kz_in_layer
from .materials import NuclearSpecies, refractive_index
from .stack import CavityStack

# half-wavelength fraction used by the automatic slicing policy
AUTO_SLICES_PER_HALF_WAVE = 12

# above this total decay rate (in Gamma_0) the explicit integrator is
# traded for a stiff one
STIFF_RATE_GAMMA0 = 1e3


class UncalibratedError(RuntimeError):
    """A resonant layer has no density scale; run calibrate_density first."""


@dataclass(frozen=True)
class NuclearSite:
    """One macro-nucleus: a resonant sub-layer collapsed to its center."""

    z_nm: float
    weight: float
    species: NuclearSpecies
    parent_layer: int

    def __post_init__(self):
        if self.weight < 0:
            raise ValueError("site weight must be >= 0")


def build_sites(stack: CavityStack, h_max: float | None = None, *,
                phi: float | None = None, k0: float | None = None):
    """Slice resonant layers into equal sub-layers and place one site per slice.

    ``h_max`` is the maximum slice thickness in nm.  When omitted, the
    policy is automatic: a twelfth of the standing-wave half-period in
    the layer material at the working angle ``phi`` (which is then
    required).  Slice weights are exact equal shares of the layer total,
    so they sum to scale * thickness without rounding drift.
    """
    resonant = stack.resonant_layers()
    if not resonant:
        raise ValueError("stack has no resonant layers")
    k0 = stack.k0 if k0 is None else k0

    sites = []
    for idx, lay in resonant:
        if lay.resonant.area_density_scale is None:
            raise UncalibratedError(
                f"layer {idx} ({lay.material.name}) has no density scale; "
                "set scale= in the cavity spec or run calibrate_density"
            )
        if h_max is None:
            if phi is None:
                raise ValueError("automatic slicing needs the working angle phi")
            kz = kz_in_layer(refractive_index(lay.material), phi, k0)
            half_wave = math.pi / max(kz.real, 1e-12)
            h = half_wave / AUTO_SLICES_PER_HALF_WAVE
        else:
            h = h_max
        n_sub = max(1, math.ceil(lay.thickness_nm / h - 1e-12))
        top = stack.layer_top(idx)
        sub = lay.thickness_nm / n_sub
        w = lay.resonant.area_density_scale * lay.thickness_nm / n_sub
        for i in range(n_sub):
            sites.append(NuclearSite(top + (i + 0.5) * sub, w, lay.resonant.species, idx))
    return sites


def coupling_prefactor(species: NuclearSpecies, k0: float) -> float:
    """Rate constant c converting (areal density x Green fn) to Gamma_0 units."""
    return 3.0 * math.pi / (k0 * (1.0 + species.internal_conversion_alpha))


@dataclass(frozen=True)
class CouplingSystem:
    """Linear system for the collective coherences at one angle.

    ``gmat`` is the full-strength coupling matrix (line table not yet
    applied), ``omega`` the drive per unit input, ``g_out`` the output
    couplings c sqrt(w_l) G_1D(0, z_l) used to reconstruct the reflected
    field.  ``lines`` is the (detuning, weight) table of the species.
    All rates are in Gamma_0 units (gamma0 = 1 in working units).
    """

    sites: tuple
    gmat: np.ndarray
    omega: np.ndarray
    g_out: np.ndarray
    lines: tuple
    phi: float
    k0: float
    gamma0: float = 1.0
    delta: float = 0.0

    @property
    def size(self) -> int:
        return len(self.sites)

    def m_matrix(self, delta: float | None = None) -> np.ndarray:
        """M = (Delta + i Gamma_0/2) 1 + G for the full-strength system."""
        d = self.delta if delta is None else delta
        return (d + 0.5j * self.gamma0) * np.eye(self.size) + self.gmat

    def for_line(self, detuning: float, weight: float) -> "CouplingSystem":
        """Reduced system for one hyperfine line: weights scaled by the line weight."""
        return replace(
            self,
            gmat=self.gmat * weight,
            omega=self.omega * math.sqrt(weight),
            g_out=self.g_out * math.sqrt(weight),
            lines=((0.0, 1.0),),
            delta=self.delta - detuning,
        )


def coupling_system(stack: CavityStack, sites, phi: float,
                    k0: float | None = None, delta: float = 0.0,
                    profile=None) -> CouplingSystem:
    """Assemble couplings, drive, and output vector for the given sites.

    ``profile`` may pass in a precomputed FieldProfile for this angle.
    """
    if not sites:
        raise ValueError("no sites given")
    species = {s.species.name for s in sites}
    if len(species) > 1:
        raise ValueError(
            f"sites mix species {sorted(species)}; solve each species separately"
        )
    k0 = stack.k0 if k0 is None else k0

    prof = field_profile(stack, phi, k0) if profile is None else profile
    z = np.array([s.z_nm for s in sites])
    w = np.array([s.weight for s in sites])
    c = coupling_prefactor(sites[0].species, k0)

    g_green = prof.green(np.minimum.outer(z, z), np.maximum.outer(z, z))
    gmat = c * np.sqrt(np.outer(w, w)) * g_green
    omega = np.sqrt(w) * prof.p(z)
    g_out = c * np.sqrt(w) * prof.green(np.zeros_like(z), z)
    return CouplingSystem(
        tuple(sites), gmat, omega, g_out,
        tuple(sites[0].species.transitions), phi, k0, 1.0, delta,
    )


@dataclass(frozen=True)
class CoherenceState:
    """Collective coherence amplitudes, optionally tagged with a time."""

    S: np.ndarray
    time: float | None = None


def steady_state(sys: CouplingSystem, delta: float | None = None) -> CoherenceState:
    """Solve M S = -Omega by a dense complex linear solve."""
    m = sys.m_matrix(delta)
    try:
        s = np.linalg.solve(m, -sys.omega)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError(f"singular steady-state matrix: {exc}") from None
    return CoherenceState(s)


def _drive_function(drive):
    if drive is None:
        return lambda t: 0.0
    if np.isscalar(drive):
        return lambda t: drive
    return drive


def evolve(sys: CouplingSystem, s0, drive, t_grid, rtol: float = 1e-9):
    """Integrate the linear coherence equations over ``t_grid`` (1/Gamma_0 units).

    ``drive`` is None (no drive), a constant complex factor, or a
    callable t -> factor multiplying the built-in drive vector.  Returns
    a list of CoherenceState, one per grid time.  A stiff solver takes
    over when the fastest collective decay exceeds 1e3 Gamma_0.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 1 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be strictly increasing")
    s0 = s0.S if isinstance(s0, CoherenceState) else np.asarray(s0, dtype=complex)
    amp = _drive_function(drive)

    a = 1j * sys.m_matrix()
    omega = sys.omega
    n = sys.size

    def rhs(t, y):
        s = y[:n] + 1j * y[n:]
        ds = a @ s + 1j * amp(t) * omega
        return np.concatenate([ds.real, ds.imag])

    widths = sys.gamma0 + 2.0 * np.linalg.eigvals(sys.gmat).imag
    method = "Radau" if np.max(widths) > STIFF_RATE_GAMMA0 else "DOP853"
    y0 = np.concatenate([s0.real, s0.imag])
    t0, t1 = float(t_grid[0]), float(t_grid[-1])
    if t1 == t0:
        return [CoherenceState(s0.astype(complex), t0)]
    sol = solve_ivp(rhs, (t0, t1), y0, t_eval=t_grid, method=method,
                    rtol=rtol, atol=1e-12)
    if not sol.success:
        raise ArithmeticError(f"coherence integration failed: {sol.message}")
    states = []
    for i, t in enumerate(sol.t):
        states.append(CoherenceState(sol.y[:n, i] + 1j * sol.y[n:, i], float(t)))
    return states
